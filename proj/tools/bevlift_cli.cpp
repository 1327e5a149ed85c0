// Command-line surface for the BEV view-transformation library: LUT
// construction, the decomposed transform, randomized equivalence
// verification, the benchmark harness, and operator-graph export.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or format error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bevlift/bevlift.hpp"

namespace {

using namespace bevlift;

std::array<uint32_t, 3> parse_dims(const std::string& text) {
    std::array<uint32_t, 3> dims{};
    char sep1 = 0, sep2 = 0;
    std::istringstream in(text);
    if (!(in >> dims[0] >> sep1 >> dims[1] >> sep2 >> dims[2]) || sep1 != 'x' || sep2 != 'x' ||
        !in.eof()) {
        throw ArgumentError("expected ZxHxW, got '" + text + "'");
    }
    return dims;
}

std::array<double, 3> parse_triple(const std::string& text) {
    std::array<double, 3> vals{};
    char sep1 = 0, sep2 = 0;
    std::istringstream in(text);
    if (!(in >> vals[0] >> sep1 >> vals[1] >> sep2 >> vals[2]) || sep1 != ',' || sep2 != ',' ||
        !in.eof()) {
        throw ArgumentError("expected x,y,z, got '" + text + "'");
    }
    return vals;
}

DepthBinning parse_binning(const std::string& text) {
    double dmin = 0, dmax = 0;
    uint32_t bins = 0;
    char sep1 = 0, sep2 = 0;
    std::istringstream in(text);
    if (!(in >> dmin >> sep1 >> dmax >> sep2 >> bins) || sep1 != ',' || sep2 != ',' ||
        !in.eof()) {
        throw ArgumentError("expected dmin,dmax,D, got '" + text + "'");
    }
    return DepthBinning(dmin, dmax, bins);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

int run_build_lut(const std::string& calib_path, const std::string& grid_text,
                  const std::string& origin_text, const std::string& voxel_text,
                  const std::string& depth_text, const std::string& out_path) {
    const auto cams = load_calibration(calib_path);
    const auto dims = parse_dims(grid_text);
    const auto origin = parse_triple(origin_text);
    const auto voxel = parse_triple(voxel_text);
    const VoxelGrid grid(Vec3{origin[0], origin[1], origin[2]},
                         Vec3{voxel[0], voxel[1], voxel[2]}, dims[0], dims[1], dims[2]);
    const DepthBinning binning = parse_binning(depth_text);

    const IndexGraph graph = build_index_graph(grid, cams, binning);
    save_index_graph(out_path, graph);

    const CoverageStats stats = coverage_stats(graph);
    std::cout << "wrote " << out_path << ": " << graph.num_voxels() << " voxels, "
              << stats.valid_count << " valid, fingerprint 0x" << std::hex
              << graph.fingerprint << std::dec << "\n";
    return 0;
}

int run_transform(const std::string& lut_path, const std::string& features_path,
                  const std::string& depth_path, const std::string& out_path,
                  unsigned threads) {
    const IndexGraph graph = load_index_graph(lut_path);
    const FeatureStack features = feature_stack_from_tensor(load_tensor(features_path));
    const VoxelGrid grid(Vec3{0, 0, 0}, Vec3{1, 1, 1}, graph.dim_z, graph.dim_h, graph.dim_w);

    BEVVolume volume;
    if (!depth_path.empty()) {
        const DepthStack depth = depth_stack_from_tensor(load_tensor(depth_path));
        volume = transform(features, &depth, graph, grid, threads);
    } else {
        volume = transform(features, graph, grid, threads);
    }
    save_tensor(out_path, to_tensor(volume));
    std::cout << "wrote " << out_path << " [" << volume.dim_z << ", " << volume.dim_h << ", "
              << volume.dim_w << ", " << volume.channels << "]\n";
    return 0;
}

int run_verify(const std::string& calib_path, uint64_t seed, uint32_t cases) {
    EquivalenceOptions opts;
    opts.seed = seed;
    opts.cases = cases;
    if (!calib_path.empty()) {
        opts.fixed_rig = load_calibration(calib_path);
    }
    const EquivalenceResult result = run_equivalence_suite(opts);
    if (!result.passed) {
        std::cerr << "FAIL: " << result.failure << "\n";
        return 1;
    }
    std::cout << "OK: " << result.cases_run
              << " randomized configurations, decomposed == monolithic == interpreted, "
                 "bit-exact\n";
    return 0;
}

int run_bench_cmd(const std::string& preset, const std::string& grids_text,
                  const std::string& channels_text, const std::string& pipelines_text,
                  const std::string& origin_text, const std::string& voxel_text,
                  const std::string& depth_text, const std::string& image_text, double focal,
                  uint32_t runs, uint32_t warmups, unsigned threads, uint64_t seed,
                  const std::string& out_path, std::string csv_path) {
    BenchOptions opts;
    opts.rig.preset = preset;
    const auto image = parse_dims("1x" + image_text);  // WxH reuses the dims parser
    opts.rig.width = image[1];
    opts.rig.height = image[2];
    opts.rig.fx = focal;
    opts.rig.fy = focal;
    opts.binning = parse_binning(depth_text);
    opts.runs = runs;
    opts.warmups = warmups;
    opts.threads = threads;
    opts.stack_seed = seed;

    const auto voxel = parse_triple(voxel_text);
    for (const std::string& dims_text : split_list(grids_text)) {
        const auto dims = parse_dims(dims_text);
        Vec3 origin;
        if (origin_text == "auto") {
            origin = Vec3{-0.5 * dims[2] * voxel[0], -0.5 * dims[1] * voxel[1],
                          -0.5 * dims[0] * voxel[2]};
        } else {
            const auto o = parse_triple(origin_text);
            origin = Vec3{o[0], o[1], o[2]};
        }
        opts.grids.emplace_back(origin, Vec3{voxel[0], voxel[1], voxel[2]}, dims[0], dims[1],
                                dims[2]);
    }
    if (opts.grids.empty()) {
        throw ArgumentError("--grids needs at least one ZxHxW entry");
    }

    opts.channel_counts.clear();
    for (const std::string& c : split_list(channels_text)) {
        opts.channel_counts.push_back(uint32_t(std::stoul(c)));
    }
    if (opts.channel_counts.empty()) {
        throw ArgumentError("--channels needs at least one entry");
    }

    if (!pipelines_text.empty()) {
        opts.pipelines.clear();
        for (const std::string& name : split_list(pipelines_text)) {
            opts.pipelines.push_back(pipeline_from_name(name));
        }
    }

    const BenchReport report = run_bench(opts);

    std::ofstream json_out(out_path);
    if (!json_out) {
        throw FormatError("cannot open for writing: " + out_path);
    }
    json_out << report.to_json().dump(2) << "\n";

    if (csv_path.empty()) {
        csv_path = std::filesystem::path(out_path).replace_extension(".csv").string();
    }
    std::ofstream csv_out(csv_path);
    if (!csv_out) {
        throw FormatError("cannot open for writing: " + csv_path);
    }
    csv_out << report.to_csv();

    for (const auto& rec : report.records) {
        std::cout << rec.pipeline << " " << rec.dim_z << "x" << rec.dim_h << "x" << rec.dim_w
                  << " C=" << rec.channels << ": median " << rec.median_ns << " ns, "
                  << uint64_t(rec.throughput_voxels_per_s) << " voxels/s"
                  << (rec.verified ? "" : " [VERIFICATION FAILED]") << "\n";
    }
    std::cout << "wrote " << out_path << " and " << csv_path << "\n";
    if (!report.all_verified()) {
        std::cerr << "FAIL: some pipeline outputs did not match the reference; their timings "
                     "were rejected\n";
        return 1;
    }
    return 0;
}

int run_make_calib(const std::string& preset, const std::string& image_text, double focal,
                   uint64_t seed, const std::string& out_path) {
    RigSpec spec;
    spec.preset = preset;
    const auto image = parse_dims("1x" + image_text);
    spec.width = image[1];
    spec.height = image[2];
    spec.fx = focal;
    spec.fy = focal;
    spec.seed = seed;
    const auto rig = make_rig(spec);
    save_calibration(out_path, rig);
    std::cout << "wrote " << out_path << " (" << rig.size() << " cameras)\n";
    return 0;
}

int run_export_graph(const std::string& lut_path, bool with_depth, int64_t channels,
                     const std::string& out_path) {
    const IndexGraph graph = load_index_graph(lut_path);
    const VoxelGrid grid(Vec3{0, 0, 0}, Vec3{1, 1, 1}, graph.dim_z, graph.dim_h, graph.dim_w);
    const OpGraph lowered = lower(graph, grid, with_depth, channels, lut_path);
    save_graph(out_path, lowered);
    std::cout << "wrote " << out_path << " (" << lowered.nodes.size()
              << " nodes, constants in " << lut_path << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decomposed camera-to-BEV view transformation toolkit"};
    app.require_subcommand(1);

    // build-lut
    auto* build = app.add_subcommand("build-lut", "Build and serialize an index graph (LUT)");
    std::string calib, grid_text, out_path;
    std::string origin_text = "auto";
    std::string voxel_text = "0.5,0.5,1.0";
    std::string depth_text = "1.0,41.0,8";
    build->add_option("--calib", calib, "Calibration JSON")->required();
    build->add_option("--grid", grid_text, "Grid dims ZxHxW")->required();
    build->add_option("--origin", origin_text, "Grid origin x,y,z (minimum corner)")
        ->required();
    build->add_option("--voxel", voxel_text, "Voxel size sx,sy,sz in meters")->required();
    build->add_option("--depth", depth_text, "Depth binning dmin,dmax,D")->required();
    build->add_option("--out", out_path, "Output FBLT path")->required();

    // transform
    auto* trans = app.add_subcommand("transform", "Run the decomposed transform from files");
    std::string lut_path, features_path, depth_path, volume_path;
    unsigned threads = 1;
    trans->add_option("--lut", lut_path, "Index graph FBLT")->required();
    trans->add_option("--features", features_path, "Feature stack FBTN [N,H,W,C]")->required();
    trans->add_option("--depth", depth_path, "Depth stack FBTN [N,D,H,W] (optional)");
    trans->add_option("--out", volume_path, "Output BEV volume FBTN")->required();
    trans->add_option("--threads", threads, "Worker threads (0 = hardware)");

    // verify
    auto* verify = app.add_subcommand(
        "verify", "Randomized oracle equivalence: decomposed vs monolithic vs interpreter");
    std::string verify_calib;
    uint64_t seed = 1234;
    uint32_t cases = 50;
    verify->add_option("--calib", verify_calib, "Fix the rig from a calibration JSON");
    verify->add_option("--seed", seed, "PRNG seed");
    verify->add_option("--cases", cases, "Number of randomized configurations");

    // bench
    auto* bench = app.add_subcommand("bench", "Benchmark the pipelines and emit JSON + CSV");
    std::string preset = "ring6";
    std::string grids_text = "4x50x50";
    std::string channels_text = "32";
    std::string pipelines_text;
    std::string bench_origin = "auto";
    std::string bench_voxel = "0.5,0.5,1.0";
    std::string bench_depth = "1.0,41.0,8";
    std::string image_text = "256x144";
    double focal = 200.0;
    uint32_t runs = 20;
    uint32_t warmups = 3;
    unsigned bench_threads = 1;
    uint64_t bench_seed = 7;
    std::string report_path = "report.json";
    std::string csv_path;
    bench->add_option("--preset", preset, "Rig preset (ring6, single)");
    bench->add_option("--grids", grids_text, "Comma list of grid dims ZxHxW");
    bench->add_option("--channels", channels_text, "Comma list of channel counts");
    bench->add_option("--pipelines", pipelines_text,
                      "Comma list: monolithic,decomposed,decomposed+depth,"
                      "atomic-scatter-baseline");
    bench->add_option("--origin", bench_origin, "Grid origin x,y,z or 'auto' (centered)");
    bench->add_option("--voxel", bench_voxel, "Voxel size sx,sy,sz");
    bench->add_option("--depth", bench_depth, "Depth binning dmin,dmax,D");
    bench->add_option("--image", image_text, "Rig image extent WxH");
    bench->add_option("--focal", focal, "Rig focal length in pixels");
    bench->add_option("--runs", runs, "Timed runs per record (median is reported)");
    bench->add_option("--warmups", warmups, "Warmup runs before timing");
    bench->add_option("--threads", bench_threads, "Worker threads (0 = hardware)");
    bench->add_option("--seed", bench_seed, "Stack generator seed");
    bench->add_option("--out", report_path, "Output report JSON");
    bench->add_option("--csv", csv_path, "Output CSV (default: report path with .csv)");

    // make-calib
    auto* makec = app.add_subcommand("make-calib",
                                     "Write a synthetic rig as a calibration JSON");
    std::string calib_preset = "ring6";
    std::string calib_image = "256x144";
    double calib_focal = 200.0;
    uint64_t calib_seed = 0;
    std::string calib_out = "rig.json";
    makec->add_option("--preset", calib_preset, "Rig preset (ring6, single)");
    makec->add_option("--image", calib_image, "Image extent WxH");
    makec->add_option("--focal", calib_focal, "Focal length in pixels");
    makec->add_option("--seed", calib_seed, "Perturbation seed (0 = canonical)");
    makec->add_option("--out", calib_out, "Output calibration JSON")->required();

    // export-graph
    auto* exportg = app.add_subcommand("export-graph", "Export the operator graph as JSON");
    std::string export_lut, graph_path;
    bool with_depth = false;
    int64_t channels = -1;
    exportg->add_option("--lut", export_lut, "Index graph FBLT (also the sidecar reference)")
        ->required();
    exportg->add_flag("--depth", with_depth, "Include the depth gather and modulation");
    exportg->add_option("--channels", channels, "Pin the channel count (-1 = inferred)");
    exportg->add_option("--out", graph_path, "Output graph JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (build->parsed()) {
            return run_build_lut(calib, grid_text, origin_text, voxel_text, depth_text,
                                 out_path);
        }
        if (trans->parsed()) {
            return run_transform(lut_path, features_path, depth_path, volume_path, threads);
        }
        if (verify->parsed()) {
            return run_verify(verify_calib, seed, cases);
        }
        if (bench->parsed()) {
            return run_bench_cmd(preset, grids_text, channels_text, pipelines_text,
                                 bench_origin, bench_voxel, bench_depth, image_text, focal,
                                 runs, warmups, bench_threads, bench_seed, report_path,
                                 csv_path);
        }
        if (exportg->parsed()) {
            return run_export_graph(export_lut, with_depth, channels, graph_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
