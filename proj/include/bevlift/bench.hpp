#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <sys/resource.h>

#include <json.hpp>

#include "bevlift/aggregation.hpp"
#include "bevlift/errors.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/index_graph.hpp"
#include "bevlift/monolithic.hpp"
#include "bevlift/stacks.hpp"
#include "bevlift/synth.hpp"
#include "bevlift/verify.hpp"

namespace bevlift {

/// Scatter-with-synchronized-accumulation contrast baseline (timing only;
/// the real pipeline never scatters). Worker threads sweep whole cameras
/// and write winning feature rows into the shared volume under per-cell
/// exclusion, keeping the lowest camera slot per cell. The final state
/// therefore matches the first-valid-camera policy regardless of thread
/// interleaving.
inline BEVVolume atomic_scatter_baseline(const FeatureStack& stack, const MonolithicConfig& cfg,
                                         unsigned threads = 1) {
    if (cfg.depth_mode) {
        throw ArgumentError("atomic_scatter_baseline: depth mode is not part of the baseline");
    }
    if (cfg.cams.empty()) {
        throw ArgumentError("atomic_scatter_baseline: camera list is empty");
    }
    if (stack.num_cams != cfg.cams.size() || stack.height != cfg.cams.front().height ||
        stack.width != cfg.cams.front().width) {
        throw ConfigError("atomic_scatter_baseline: feature stack dims do not match the rig");
    }

    const uint64_t total = cfg.grid.num_voxels();
    const uint32_t c = stack.channels;
    const uint32_t img_w = stack.width;
    const uint32_t img_h = stack.height;

    std::vector<float> flat(total * c, 0.0f);
    std::vector<std::atomic<uint8_t>> owner(total);
    for (auto& o : owner) {
        o.store(0xFF, std::memory_order_relaxed);
    }
    constexpr size_t kStripes = 1024;
    std::vector<std::mutex> stripes(kStripes);

    const auto scatter_camera = [&](size_t cam_slot) {
        const CameraModel& cam = cfg.cams[cam_slot];
        for (uint64_t i = 0; i < total; ++i) {
            const auto [z, y, x] = cfg.grid.coords(i);
            const auto hit = project(cam, cfg.binning, cfg.grid.voxel_center(z, y, x));
            if (!hit) {
                continue;
            }
            if (owner[i].load(std::memory_order_acquire) < cam_slot) {
                continue;  // a higher-priority camera already claimed the cell
            }
            std::lock_guard<std::mutex> lock(stripes[i % kStripes]);
            if (uint8_t(cam_slot) < owner[i].load(std::memory_order_relaxed)) {
                const float* row =
                    stack.row(uint32_t((uint64_t(cam_slot) * img_h + hit->v) * img_w + hit->u));
                std::memcpy(flat.data() + i * c, row, size_t(c) * sizeof(float));
                owner[i].store(uint8_t(cam_slot), std::memory_order_release);
            }
        }
    };

    threads = detail::resolve_threads(threads);
    if (threads <= 1) {
        for (size_t k = 0; k < cfg.cams.size(); ++k) {
            scatter_camera(k);
        }
    } else {
        std::vector<std::thread> workers;
        std::atomic<size_t> next_cam{0};
        const unsigned n = std::min<unsigned>(threads, unsigned(cfg.cams.size()));
        for (unsigned t = 0; t < n; ++t) {
            workers.emplace_back([&] {
                for (size_t k = next_cam.fetch_add(1); k < cfg.cams.size();
                     k = next_cam.fetch_add(1)) {
                    scatter_camera(k);
                }
            });
        }
        for (auto& w : workers) {
            w.join();
        }
    }

    BEVVolume volume;
    volume.dim_z = cfg.grid.dim_z;
    volume.dim_h = cfg.grid.dim_h;
    volume.dim_w = cfg.grid.dim_w;
    volume.channels = c;
    volume.data = std::move(flat);
    return volume;
}

enum class Pipeline {
    kMonolithic,
    kDecomposed,
    kDecomposedDepth,
    kAtomicScatter,
};

inline const char* pipeline_name(Pipeline p) {
    switch (p) {
        case Pipeline::kMonolithic: return "monolithic";
        case Pipeline::kDecomposed: return "decomposed";
        case Pipeline::kDecomposedDepth: return "decomposed+depth";
        case Pipeline::kAtomicScatter: return "atomic-scatter-baseline";
    }
    return "?";
}

inline Pipeline pipeline_from_name(const std::string& name) {
    for (Pipeline p : {Pipeline::kMonolithic, Pipeline::kDecomposed,
                       Pipeline::kDecomposedDepth, Pipeline::kAtomicScatter}) {
        if (name == pipeline_name(p)) {
            return p;
        }
    }
    throw ArgumentError("unknown pipeline: " + name);
}

struct BenchRecord {
    std::string pipeline;
    uint32_t dim_z = 0, dim_h = 0, dim_w = 0;
    uint32_t cameras = 0;
    uint32_t channels = 0;
    uint32_t depth_bins = 0;
    uint32_t threads = 1;
    int64_t build_time_ns = 0;  // index-graph construction, amortizable
    std::vector<int64_t> samples_ns;
    int64_t median_ns = 0;
    double throughput_voxels_per_s = 0.0;
    int64_t peak_rss_delta_bytes = 0;  // best-effort
    bool verified = false;
};

struct BenchReport {
    uint32_t version = 1;
    uint32_t threads = 1;
    uint32_t runs = 0;
    uint32_t warmups = 0;
    std::vector<BenchRecord> records;

    bool all_verified() const {
        for (const auto& r : records) {
            if (!r.verified) {
                return false;
            }
        }
        return true;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["version"] = version;
        j["threads"] = threads;
        j["runs"] = runs;
        j["warmups"] = warmups;
        j["records"] = nlohmann::ordered_json::array();
        for (const auto& r : records) {
            nlohmann::ordered_json rj;
            rj["pipeline"] = r.pipeline;
            rj["grid"] = {{"z", r.dim_z}, {"h", r.dim_h}, {"w", r.dim_w}};
            rj["cameras"] = r.cameras;
            rj["channels"] = r.channels;
            rj["depth_bins"] = r.depth_bins;
            rj["threads"] = r.threads;
            rj["build_time_ns"] = r.build_time_ns;
            rj["transform_time_ns"] = {{"median_ns", r.median_ns},
                                       {"samples_ns", r.samples_ns}};
            rj["throughput_voxels_per_s"] = r.throughput_voxels_per_s;
            rj["peak_rss_delta_bytes"] = r.peak_rss_delta_bytes;
            rj["verified"] = r.verified;
            j["records"].push_back(std::move(rj));
        }
        return j;
    }

    std::string to_csv() const {
        std::ostringstream out;
        out << "pipeline,grid_z,grid_h,grid_w,cameras,channels,depth_bins,threads,"
               "build_time_ns,median_ns,throughput_voxels_per_s,peak_rss_delta_bytes,"
               "verified,samples_ns\n";
        for (const auto& r : records) {
            out << r.pipeline << ',' << r.dim_z << ',' << r.dim_h << ',' << r.dim_w << ','
                << r.cameras << ',' << r.channels << ',' << r.depth_bins << ',' << r.threads
                << ',' << r.build_time_ns << ',' << r.median_ns << ','
                << r.throughput_voxels_per_s << ',' << r.peak_rss_delta_bytes << ','
                << (r.verified ? 1 : 0) << ',';
            for (size_t i = 0; i < r.samples_ns.size(); ++i) {
                out << (i ? ";" : "") << r.samples_ns[i];
            }
            out << '\n';
        }
        return out.str();
    }
};

namespace detail {

inline int64_t median_ns(std::vector<int64_t> samples) {
    std::sort(samples.begin(), samples.end());
    const size_t n = samples.size();
    if (n == 0) {
        return 0;
    }
    if (n % 2 == 1) {
        return samples[n / 2];
    }
    return (samples[n / 2 - 1] + samples[n / 2]) / 2;
}

inline int64_t peak_rss_bytes() {
    struct rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    return int64_t(usage.ru_maxrss) * 1024;  // Linux reports KiB
}

template <typename Fn>
int64_t time_ns(Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count();
}

}  // namespace detail

struct BenchOptions {
    RigSpec rig;
    std::vector<VoxelGrid> grids;
    std::vector<uint32_t> channel_counts = {32};
    DepthBinning binning{1.0, 41.0, 8};
    std::vector<Pipeline> pipelines = {Pipeline::kMonolithic, Pipeline::kDecomposed,
                                       Pipeline::kDecomposedDepth, Pipeline::kAtomicScatter};
    uint32_t runs = 20;
    uint32_t warmups = 3;
    unsigned threads = 1;
    uint64_t stack_seed = 7;
};

/// Times each pipeline over each (grid, channel count) configuration. Every
/// pipeline's output is checked bit-exactly against the monolithic reference
/// before its timings are accepted; records of mismatching pipelines keep
/// verified=false and no samples. The decomposed timings exclude index-graph
/// construction, which is measured once and reported as build_time_ns.
inline BenchReport run_bench(const BenchOptions& opts) {
    if (opts.runs < 1) {
        throw ArgumentError("run_bench: need at least one timed run");
    }
    BenchReport report;
    report.threads = opts.threads;
    report.runs = opts.runs;
    report.warmups = opts.warmups;

    const std::vector<CameraModel> rig = make_rig(opts.rig);

    for (const VoxelGrid& grid : opts.grids) {
        for (uint32_t channels : opts.channel_counts) {
            StackSpec spec;
            spec.feature = StackSpec::Feature::kRandom;
            spec.depth = StackSpec::Depth::kSoftmaxRandom;
            spec.channels = channels;
            spec.seed = opts.stack_seed;
            const FeatureStack features =
                make_feature_stack(spec, uint32_t(rig.size()), rig.front().height,
                                   rig.front().width);
            const DepthStack depth =
                make_depth_stack(spec, uint32_t(rig.size()), opts.binning.num_bins,
                                 rig.front().height, rig.front().width);

            IndexGraph graph;
            const int64_t build_ns =
                detail::time_ns([&] { graph = build_index_graph(grid, rig, opts.binning,
                                                                opts.threads); });

            MonolithicConfig mono_cfg{grid, rig, opts.binning, false};
            MonolithicConfig mono_depth_cfg{grid, rig, opts.binning, true};
            const BEVVolume reference = transform_monolithic(mono_cfg, features);
            const BEVVolume reference_depth =
                transform_monolithic(mono_depth_cfg, features, &depth);

            for (Pipeline pipeline : opts.pipelines) {
                BenchRecord rec;
                rec.pipeline = pipeline_name(pipeline);
                rec.dim_z = grid.dim_z;
                rec.dim_h = grid.dim_h;
                rec.dim_w = grid.dim_w;
                rec.cameras = uint32_t(rig.size());
                rec.channels = channels;
                rec.depth_bins = opts.binning.num_bins;
                rec.threads = opts.threads;
                rec.build_time_ns = build_ns;

                const auto run_once = [&]() -> BEVVolume {
                    switch (pipeline) {
                        case Pipeline::kMonolithic:
                            return transform_monolithic(mono_cfg, features, nullptr,
                                                        opts.threads);
                        case Pipeline::kDecomposed:
                            return transform(features, nullptr, graph, grid, opts.threads);
                        case Pipeline::kDecomposedDepth:
                            return transform(features, &depth, graph, grid, opts.threads);
                        case Pipeline::kAtomicScatter:
                            return atomic_scatter_baseline(features, mono_cfg, opts.threads);
                    }
                    throw ArgumentError("run_bench: unreachable pipeline");
                };

                const BEVVolume& expected =
                    pipeline == Pipeline::kDecomposedDepth ? reference_depth : reference;
                const BEVVolume produced = run_once();
                rec.verified = produced.data.size() == expected.data.size() &&
                               !first_bit_difference(produced.data, expected.data).has_value();
                if (rec.verified) {
                    const int64_t rss_before = detail::peak_rss_bytes();
                    for (uint32_t i = 0; i < opts.warmups; ++i) {
                        run_once();
                    }
                    rec.samples_ns.reserve(opts.runs);
                    for (uint32_t i = 0; i < opts.runs; ++i) {
                        rec.samples_ns.push_back(detail::time_ns(run_once));
                    }
                    rec.median_ns = detail::median_ns(rec.samples_ns);
                    rec.throughput_voxels_per_s =
                        rec.median_ns > 0
                            ? double(grid.num_voxels()) * 1e9 / double(rec.median_ns)
                            : 0.0;
                    rec.peak_rss_delta_bytes =
                        std::max<int64_t>(0, detail::peak_rss_bytes() - rss_before);
                }
                report.records.push_back(std::move(rec));
            }
        }
    }
    return report;
}

}  // namespace bevlift
