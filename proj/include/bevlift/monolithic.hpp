#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

#include "bevlift/detail/parallel.hpp"
#include "bevlift/errors.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/stacks.hpp"

namespace bevlift {

struct MonolithicConfig {
    VoxelGrid grid;
    std::vector<CameraModel> cams;
    DepthBinning binning;
    bool depth_mode = false;
};

/// The single-pass reference transformation: no precomputed index graph,
/// every call re-projects every voxel center through the cameras in rig
/// order and copies the first valid hit's feature row (times its depth
/// weight when depth_mode is on). Uses the same projection function and the
/// same float arithmetic as the decomposed pipeline, so outputs match it
/// bit for bit. Single-threaded by default; the threads parameter exists
/// for benchmark parity only.
inline BEVVolume transform_monolithic(const MonolithicConfig& cfg, const FeatureStack& stack,
                                      const DepthStack* depth = nullptr, unsigned threads = 1) {
    if (cfg.cams.empty()) {
        throw ArgumentError("transform_monolithic: camera list is empty");
    }
    const uint32_t img_w = cfg.cams.front().width;
    const uint32_t img_h = cfg.cams.front().height;
    for (const CameraModel& cam : cfg.cams) {
        if (cam.width != img_w || cam.height != img_h) {
            throw ConfigError("transform_monolithic: all cameras must share one image extent");
        }
    }
    if (stack.num_cams != cfg.cams.size() || stack.height != img_h || stack.width != img_w) {
        throw ConfigError("transform_monolithic: feature stack dims do not match the rig");
    }
    if (cfg.depth_mode) {
        if (depth == nullptr) {
            throw ConfigError("transform_monolithic: depth_mode requires a depth stack");
        }
        if (depth->num_cams != cfg.cams.size() || depth->num_bins != cfg.binning.num_bins ||
            depth->height != img_h || depth->width != img_w) {
            throw ConfigError("transform_monolithic: depth stack dims do not match the rig");
        }
    }

    const uint64_t total = cfg.grid.num_voxels();
    const uint32_t c = stack.channels;
    std::vector<float> flat(total * c, 0.0f);

    detail::parallel_chunks(total, threads, [&](uint64_t begin, uint64_t end) {
        for (uint64_t i = begin; i < end; ++i) {
            const auto [z, y, x] = cfg.grid.coords(i);
            const Vec3 center = cfg.grid.voxel_center(z, y, x);
            for (size_t k = 0; k < cfg.cams.size(); ++k) {
                const auto hit = project(cfg.cams[k], cfg.binning, center);
                if (!hit) {
                    continue;
                }
                const float* row =
                    stack.row(uint32_t((uint64_t(k) * img_h + hit->v) * img_w + hit->u));
                float* dst = flat.data() + i * c;
                if (cfg.depth_mode) {
                    const float w = depth->at(uint32_t(k), hit->depth_bin, hit->v, hit->u);
                    for (uint32_t ch = 0; ch < c; ++ch) {
                        dst[ch] = row[ch] * w;
                    }
                } else {
                    std::memcpy(dst, row, size_t(c) * sizeof(float));
                }
                break;
            }
        }
    });

    BEVVolume volume;
    volume.dim_z = cfg.grid.dim_z;
    volume.dim_h = cfg.grid.dim_h;
    volume.dim_w = cfg.grid.dim_w;
    volume.channels = c;
    volume.data = std::move(flat);
    return volume;
}

}  // namespace bevlift
