// Acceptance suite: one self-contained check per release criterion, one
// PASS/FAIL line each, nonzero exit when anything fails. All comparisons on
// volume data are bit-exact (tolerance zero); the performance checks assert
// relative orderings only.

#include <chrono>
#include <cstdint>
#include <cstring>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bevlift/bevlift.hpp"
#include "brute_force_reference.hpp"
#include "fixtures.hpp"

using namespace bevlift;

namespace {

struct CheckFailure : std::runtime_error {
    explicit CheckFailure(const std::string& msg) : std::runtime_error(msg) {}
};

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw CheckFailure(what);
    }
}

template <typename T>
void require_eq(const T& got, const T& want, const std::string& what) {
    if (!(got == want)) {
        std::ostringstream msg;
        msg << what << " (got " << got << ", want " << want << ")";
        throw CheckFailure(msg.str());
    }
}

void require_bitwise(const std::vector<float>& got, const std::vector<float>& want,
                     const std::string& what) {
    require(got.size() == want.size(), what + ": size mismatch");
    if (const auto diff = first_bit_difference(got, want)) {
        throw CheckFailure(what + ": first bit difference at flat index " +
                           std::to_string(*diff));
    }
}

// --- 1. Oracle equivalence over randomized configurations -----------------

void criterion_oracle_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    EquivalenceOptions opts;
    opts.seed = 20240601;
    opts.cases = 200;
    const EquivalenceResult result = run_equivalence_suite(opts);
    require(result.passed, result.failure);
    require_eq<uint32_t>(result.cases_run, 200, "cases run");
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    require(elapsed < 300.0, "equivalence sweep exceeded the 5 minute budget");
    std::cout << "        (200 configurations, " << elapsed << " s)\n";
}

// --- 2. Independent brute-force check on the frozen ring fixture ----------

void criterion_brute_force() {
    const auto cams = fixtures::ring_rig();
    const VoxelGrid grid = fixtures::ring_grid();
    const DepthBinning binning = fixtures::ring_binning();
    const IndexGraph graph = build_index_graph(grid, cams, binning);
    const FeatureStack stack = fixtures::ring_features(8, 2024);
    const DepthStack depth = fixtures::ring_depth(StackSpec::Depth::kSoftmaxRandom, 2025);

    for (const bool with_depth : {false, true}) {
        const DepthStack* depth_ptr = with_depth ? &depth : nullptr;
        const BEVVolume volume = transform(stack, depth_ptr, graph, grid);
        const std::vector<float> expected = brute_force::expected_volume(
            grid, cams, binning, stack.data.data(), with_depth ? depth.data.data() : nullptr,
            stack.height, stack.width, stack.channels);
        require_bitwise(volume.data, expected,
                        with_depth ? "depth mode vs brute force" : "depth-free vs brute force");
    }
}

// --- 3. Build determinism ---------------------------------------------------

void criterion_determinism() {
    const auto cams = fixtures::ring_rig();
    const VoxelGrid grid = fixtures::ring_grid();
    const DepthBinning binning = fixtures::ring_binning();

    const auto reference = serialize_index_graph(build_index_graph(grid, cams, binning, 1));
    const auto repeat = serialize_index_graph(build_index_graph(grid, cams, binning, 1));
    require(reference == repeat, "two sequential builds serialized differently");
    for (unsigned threads : {2u, 4u, 8u}) {
        const auto parallel =
            serialize_index_graph(build_index_graph(grid, cams, binning, threads));
        require(parallel == reference,
                "build with " + std::to_string(threads) + " threads changed the bytes");
    }
}

// --- 4. Zero-cost reshape ----------------------------------------------------

void criterion_zero_cost_reshape() {
    struct Fixture {
        VoxelGrid grid;
        std::vector<CameraModel> cams;
        uint32_t channels;
    };
    const std::vector<Fixture> cases = {
        {fixtures::ring_grid(), fixtures::ring_rig(), 8},
        {fixtures::inside_union_grid(), fixtures::ring_rig(), 4},
        {fixtures::outside_union_grid(), fixtures::ring_rig(), 16},
    };
    for (size_t i = 0; i < cases.size(); ++i) {
        const auto& fx = cases[i];
        const DepthBinning binning = fixtures::ring_binning();
        const IndexGraph graph = build_index_graph(fx.grid, fx.cams, binning);
        StackSpec spec;
        spec.feature = StackSpec::Feature::kRandom;
        spec.channels = fx.channels;
        spec.seed = 500 + i;
        const FeatureStack stack =
            make_feature_stack(spec, graph.num_cams, graph.img_h, graph.img_w);
        const DepthStack depth =
            make_depth_stack(spec, graph.num_cams, graph.depth_bins, graph.img_h, graph.img_w);

        std::vector<float> flat = gather_features(stack, graph);
        const std::vector<float> weights = gather_depth_weights(depth, graph);
        modulate_inplace(flat, weights, fx.channels);
        const std::vector<float> snapshot = flat;
        const float* storage = flat.data();

        const BEVVolume volume = place(std::move(flat), fx.grid, fx.channels);
        require(volume.data.data() == storage,
                "reshape moved the buffer (fixture " + std::to_string(i) + ")");
        require(volume.data.size() == snapshot.size() &&
                    std::memcmp(volume.data.data(), snapshot.data(),
                                snapshot.size() * sizeof(float)) == 0,
                "volume bytes differ from the flat buffer (fixture " + std::to_string(i) + ")");
    }
}

// --- 5. Depth identity and annihilation --------------------------------------

void criterion_depth_identity_annihilation() {
    const auto cams = fixtures::ring_rig();
    const VoxelGrid grid = fixtures::ring_grid();
    const DepthBinning binning = fixtures::ring_binning();
    const IndexGraph graph = build_index_graph(grid, cams, binning);
    const FeatureStack stack = fixtures::ring_features(8, 600);

    const DepthStack ones = fixtures::ring_depth(StackSpec::Depth::kOnes);
    const BEVVolume with_ones = transform(stack, &ones, graph, grid);
    const BEVVolume depth_free = transform(stack, graph, grid);
    require_bitwise(with_ones.data, depth_free.data, "all-ones depth vs depth-free");

    // All-zero depth weights: build from a delta stack with the mass removed.
    std::vector<float> zero_values(uint64_t(graph.num_cams) * graph.depth_bins *
                                       graph.img_h * graph.img_w,
                                   0.0f);
    const DepthStack zeros(graph.num_cams, graph.depth_bins, graph.img_h, graph.img_w,
                           std::move(zero_values));
    const BEVVolume annihilated = transform(stack, &zeros, graph, grid);
    for (float v : annihilated.data) {
        require(v == 0.0f, "all-zero depth stack left a nonzero value");
    }
}

// --- 6. Operator whitelist ----------------------------------------------------

void criterion_operator_whitelist() {
    const IndexGraph graph = fixtures::ring_graph();
    const VoxelGrid grid = fixtures::ring_grid();
    for (bool with_depth : {false, true}) {
        const OpGraph lowered = lower(graph, grid, with_depth);
        require(validate(lowered).empty(), "lowered graph reported violations");
        require_eq<size_t>(lowered.nodes.size(), with_depth ? 7 : 5, "node count");
    }

    OpGraph custom = lower(graph, grid, false);
    custom.nodes[2].kind = "CUSTOM";
    auto violations = validate(custom);
    require_eq<size_t>(violations.size(), 1, "violations for a CUSTOM node");
    require_eq<std::string>(violations[0].kind, "whitelist", "violation kind");

    OpGraph oob = lower(graph, grid, true);
    oob.depth_offsets[42] = uint32_t(oob.depth_pad + 1);
    violations = validate(oob);
    require_eq<size_t>(violations.size(), 1, "violations for an out-of-bounds constant");
    require_eq<std::string>(violations[0].kind, "bounds", "violation kind");
}

// --- 7. Round-trip fidelity -----------------------------------------------------

void criterion_round_trips() {
    const auto dir = std::filesystem::temp_directory_path() / "bevlift_acceptance";
    std::filesystem::create_directories(dir);

    const auto cams = fixtures::ring_rig();
    const VoxelGrid grid = fixtures::ring_grid();
    const DepthBinning binning = fixtures::ring_binning();
    const IndexGraph graph = build_index_graph(grid, cams, binning);

    // FBLT
    save_index_graph((dir / "g.fblt").string(), graph);
    require(load_index_graph((dir / "g.fblt").string()) == graph, "FBLT round trip");

    // FBTN
    StackSpec spec;
    spec.feature = StackSpec::Feature::kRandom;
    spec.channels = 8;
    spec.seed = 700;
    const FeatureStack stack =
        make_feature_stack(spec, graph.num_cams, graph.img_h, graph.img_w);
    const Tensor tensor = to_tensor(stack);
    save_tensor((dir / "t.fbtn").string(), tensor);
    const Tensor tensor_back = load_tensor((dir / "t.fbtn").string());
    require(tensor_back.dims == tensor.dims, "FBTN dims round trip");
    require_bitwise(tensor_back.data, tensor.data, "FBTN data round trip");

    // Calibration JSON
    save_calibration((dir / "rig.json").string(), cams);
    require(load_calibration((dir / "rig.json").string()) == cams,
            "calibration JSON round trip");

    // Graph JSON (constants via the FBLT sidecar)
    const OpGraph lowered = lower(graph, grid, true, 8, "g.fblt");
    save_graph((dir / "graph.json").string(), lowered);
    require(load_graph((dir / "graph.json").string()) == lowered, "graph JSON round trip");

    // Fingerprint mismatch on a perturbed rig is detected.
    auto perturbed = cams;
    perturbed[0].extrinsic.at(1, 3) += 0.02;
    const uint64_t expected_fp = rig_fingerprint(grid, perturbed, binning);
    bool rejected = false;
    try {
        verify_fingerprint(graph, expected_fp, FingerprintPolicy::kReject);
    } catch (const FingerprintError&) {
        rejected = true;
    }
    require(rejected, "perturbed rig fingerprint was not rejected");
}

// --- 8. Performance ordering -----------------------------------------------------

void criterion_performance_ordering() {
    const auto start = std::chrono::steady_clock::now();

    RigSpec rig = fixtures::ring_rig_spec();
    rig.width = 256;
    rig.height = 144;
    rig.fx = 200.0;
    rig.fy = 200.0;

    // Grid at the thresholds named by the criterion: >= 6:128:128, C >= 32.
    const VoxelGrid grid(Vec3{-32.0, -32.0, -2.5}, Vec3{0.5, 0.5, 1.0}, 6, 128, 128);

    BenchOptions opts;
    opts.rig = rig;
    opts.grids = {grid};
    opts.channel_counts = {32};
    opts.binning = DepthBinning(1.0, 41.0, 8);
    opts.runs = 20;
    opts.warmups = 3;
    opts.threads = 1;
    opts.pipelines = {Pipeline::kMonolithic, Pipeline::kDecomposed};
    const BenchReport single = run_bench(opts);
    require(single.all_verified(), "pipeline outputs failed verification before timing");

    int64_t monolithic_ns = 0, decomposed_ns = 0;
    for (const auto& rec : single.records) {
        if (rec.pipeline == "monolithic") {
            monolithic_ns = rec.median_ns;
        } else if (rec.pipeline == "decomposed") {
            decomposed_ns = rec.median_ns;
        }
    }
    require(monolithic_ns > 0 && decomposed_ns > 0, "missing medians");
    std::cout << "        monolithic median " << monolithic_ns << " ns, decomposed median "
              << decomposed_ns << " ns (ratio "
              << double(monolithic_ns) / double(decomposed_ns) << ")\n";
    require(double(monolithic_ns) >= 1.2 * double(decomposed_ns),
            "decomposed transform is not at least 1.2x faster than monolithic");

    // Atomic-scatter contrast under >= 4 threads.
    opts.threads = 4;
    opts.pipelines = {Pipeline::kDecomposed, Pipeline::kAtomicScatter};
    const BenchReport threaded = run_bench(opts);
    require(threaded.all_verified(), "threaded pipeline outputs failed verification");
    int64_t scatter_ns = 0;
    decomposed_ns = 0;
    for (const auto& rec : threaded.records) {
        if (rec.pipeline == "atomic-scatter-baseline") {
            scatter_ns = rec.median_ns;
        } else if (rec.pipeline == "decomposed") {
            decomposed_ns = rec.median_ns;
        }
    }
    std::cout << "        4-thread decomposed median " << decomposed_ns
              << " ns, atomic-scatter median " << scatter_ns << " ns\n";
    require(scatter_ns > decomposed_ns,
            "atomic-scatter baseline was not slower than the decomposed path");

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    require(elapsed < 600.0, "bench suite exceeded the 10 minute budget");
}

// --- 9. Coverage statistics sanity --------------------------------------------------

void criterion_coverage_sanity() {
    const auto cams = fixtures::ring_rig();
    const DepthBinning binning = fixtures::ring_binning();

    const VoxelGrid inside = fixtures::inside_union_grid();
    const CoverageStats in_stats =
        coverage_stats(build_index_graph(inside, cams, binning));
    require_eq<uint64_t>(in_stats.valid_count, inside.num_voxels(),
                         "valid count on an inside-union grid");

    const VoxelGrid outside = fixtures::outside_union_grid();
    const CoverageStats out_stats =
        coverage_stats(build_index_graph(outside, cams, binning));
    require_eq<uint64_t>(out_stats.valid_count, 0, "valid count on an outside grid");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
        {"oracle equivalence (200 randomized configs, bit-exact)",
         criterion_oracle_equivalence},
        {"independent brute-force check on the ring fixture", criterion_brute_force},
        {"index graph build determinism (repeat + thread counts)", criterion_determinism},
        {"zero-cost reshape byte identity", criterion_zero_cost_reshape},
        {"depth identity and annihilation", criterion_depth_identity_annihilation},
        {"operator whitelist validation", criterion_operator_whitelist},
        {"round-trip fidelity (FBLT, FBTN, calibration, graph JSON)", criterion_round_trips},
        {"performance ordering (decomposed vs monolithic vs scatter)",
         criterion_performance_ordering},
        {"coverage statistics sanity", criterion_coverage_sanity},
    };

    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const auto& [name, fn] = criteria[i];
        try {
            fn();
            std::cout << "[PASS] " << (i + 1) << ". " << name << "\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "[FAIL] " << (i + 1) << ". " << name << "\n       " << e.what()
                      << "\n";
        }
    }
    if (failures > 0) {
        std::cout << failures << " of " << criteria.size() << " acceptance criteria failed\n";
        return 1;
    }
    std::cout << "all " << criteria.size() << " acceptance criteria passed\n";
    return 0;
}
