#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "bevlift/index_graph.hpp"
#include "bevlift/synth.hpp"
#include "brute_force_reference.hpp"
#include "fixtures.hpp"

using namespace bevlift;

namespace {

// Grid strictly behind a forward-looking camera at the origin.
VoxelGrid behind_grid() {
    return VoxelGrid(Vec3{-20.0, -2.0, -1.0}, Vec3{0.5, 0.5, 0.5}, 2, 8, 8);
}

std::vector<CameraModel> single_forward_cam() {
    RigSpec spec;
    spec.preset = "single";
    spec.width = 160;
    spec.height = 120;
    spec.fx = 130.0;
    spec.fy = 130.0;
    return make_rig(spec);
}

}  // namespace

TEST(BuildIndexGraph, EmptyFrustumIsAllInvalid) {
    const auto cams = single_forward_cam();
    const VoxelGrid grid = behind_grid();
    const IndexGraph g = build_index_graph(grid, cams, fixtures::ring_binning());
    ASSERT_EQ(g.entries.size(), grid.num_voxels());
    for (uint64_t i = 0; i < g.num_voxels(); ++i) {
        EXPECT_EQ(g.entries[i].valid, 0);
        EXPECT_EQ(g.spatial_offsets[i], g.spatial_pad_offset());
        EXPECT_EQ(g.depth_offsets[i], g.depth_pad_offset());
    }
}

TEST(BuildIndexGraph, DuplicateCameraTieBreaksToFirst) {
    auto cams = single_forward_cam();
    CameraModel twin = cams[0];
    twin.cam_id = 1;
    cams.push_back(twin);

    const VoxelGrid grid(Vec3{2.0, -3.0, -2.0}, Vec3{0.5, 0.5, 0.5}, 4, 12, 12);
    const IndexGraph duo = build_index_graph(grid, cams, fixtures::ring_binning());
    const IndexGraph solo =
        build_index_graph(grid, single_forward_cam(), fixtures::ring_binning());

    ASSERT_EQ(duo.entries.size(), solo.entries.size());
    uint64_t valid = 0;
    for (uint64_t i = 0; i < duo.num_voxels(); ++i) {
        EXPECT_EQ(duo.entries[i], solo.entries[i]);
        if (duo.entries[i].valid) {
            // Camera slot 0 wins everywhere, so the data offsets coincide.
            ++valid;
            EXPECT_EQ(duo.entries[i].cam, 0);
            EXPECT_EQ(duo.spatial_offsets[i], solo.spatial_offsets[i]);
            EXPECT_EQ(duo.depth_offsets[i], solo.depth_offsets[i]);
        } else {
            // Invalid voxels point at each stack's own padding slot.
            EXPECT_EQ(duo.spatial_offsets[i], duo.spatial_pad_offset());
            EXPECT_EQ(solo.spatial_offsets[i], solo.spatial_pad_offset());
        }
    }
    EXPECT_GT(valid, 0u);
}

TEST(BuildIndexGraph, MatchesBruteForceOnRingFixture) {
    const auto cams = fixtures::ring_rig();
    const VoxelGrid grid = fixtures::ring_grid();
    const DepthBinning binning = fixtures::ring_binning();

    const IndexGraph g = build_index_graph(grid, cams, binning);
    const auto expected = brute_force::expected_sources(grid, cams, binning);

    ASSERT_EQ(g.entries.size(), expected.size());
    for (uint64_t i = 0; i < expected.size(); ++i) {
        const auto& want = expected[i];
        const auto& got = g.entries[i];
        ASSERT_EQ(bool(got.valid), want.valid) << "voxel " << i;
        if (!want.valid) {
            EXPECT_EQ(g.spatial_offsets[i], g.spatial_pad_offset());
            EXPECT_EQ(g.depth_offsets[i], g.depth_pad_offset());
            continue;
        }
        EXPECT_EQ(got.cam, want.cam_slot) << "voxel " << i;
        EXPECT_EQ(got.u, want.u) << "voxel " << i;
        EXPECT_EQ(got.v, want.v) << "voxel " << i;
        EXPECT_EQ(got.depth_bin, want.bin) << "voxel " << i;
        const uint32_t spatial =
            uint32_t((uint64_t(want.cam_slot) * g.img_h + want.v) * g.img_w + want.u);
        const uint32_t depth = uint32_t(
            ((uint64_t(want.cam_slot) * g.depth_bins + want.bin) * g.img_h + want.v) *
                g.img_w + want.u);
        EXPECT_EQ(g.spatial_offsets[i], spatial);
        EXPECT_EQ(g.depth_offsets[i], depth);
    }
}

TEST(BuildIndexGraph, OffsetsAlwaysInBounds) {
    Xoshiro256ss rng(2024);
    for (int trial = 0; trial < 12; ++trial) {
        const uint32_t num_cams = 1 + uint32_t(rng.next_below(6));
        const auto cams = random_rig(rng.next(), num_cams, 96, 64);
        const DepthBinning binning(1.0, 31.0, 1 + uint32_t(rng.next_below(16)));
        const VoxelGrid grid(Vec3{rng.next_in(-20, 0), rng.next_in(-20, 0), -1.5},
                             Vec3{0.5, 0.5, 0.75}, 1 + uint32_t(rng.next_below(4)),
                             8 + uint32_t(rng.next_below(40)),
                             8 + uint32_t(rng.next_below(40)));
        const IndexGraph g = build_index_graph(grid, cams, binning);
        for (uint64_t i = 0; i < g.num_voxels(); ++i) {
            EXPECT_LE(g.spatial_offsets[i], g.spatial_pad_offset());
            EXPECT_LE(g.depth_offsets[i], g.depth_pad_offset());
            if (g.entries[i].valid) {
                EXPECT_LT(g.spatial_offsets[i], g.spatial_pad_offset());
                EXPECT_LT(g.depth_offsets[i], g.depth_pad_offset());
                EXPECT_LT(g.entries[i].cam, num_cams);
                EXPECT_LT(g.entries[i].u, g.img_w);
                EXPECT_LT(g.entries[i].v, g.img_h);
                EXPECT_LT(g.entries[i].depth_bin, g.depth_bins);
            }
        }
    }
}

TEST(BuildIndexGraph, VoxelIterationOrderIsIrrelevant) {
    const auto cams = fixtures::ring_rig();
    const VoxelGrid grid = fixtures::ring_grid();
    const DepthBinning binning = fixtures::ring_binning();
    const IndexGraph g = build_index_graph(grid, cams, binning);

    // Reverse-order construction using the library projection must agree
    // entry for entry (each voxel is independent).
    for (uint64_t r = 0; r < g.num_voxels(); ++r) {
        const uint64_t i = g.num_voxels() - 1 - r;
        const auto [z, y, x] = grid.coords(i);
        VoxelSource expected;
        for (size_t k = 0; k < cams.size(); ++k) {
            const auto hit = project(cams[k], binning, grid.voxel_center(z, y, x));
            if (hit) {
                expected = VoxelSource{1, uint8_t(k), uint16_t(hit->u), uint16_t(hit->v),
                                       uint16_t(hit->depth_bin)};
                break;
            }
        }
        ASSERT_EQ(g.entries[i], expected) << "voxel " << i;
    }
}

TEST(BuildIndexGraph, CameraOrderIsSemantic) {
    // Two cameras with overlapping views: swapping the rig order must change
    // the winning assignments in the overlap.
    RigSpec spec;
    spec.preset = "ring6";
    spec.width = 160;
    spec.height = 120;
    spec.fx = 90.0;  // wide FOV so adjacent cameras overlap strongly
    spec.fy = 90.0;
    auto cams = make_rig(spec);
    std::vector<CameraModel> pair{cams[0], cams[1]};
    std::vector<CameraModel> swapped{cams[1], cams[0]};

    const VoxelGrid grid(Vec3{0.0, 0.0, -1.0}, Vec3{0.5, 0.5, 0.5}, 2, 30, 30);
    const DepthBinning binning = fixtures::ring_binning();
    const IndexGraph a = build_index_graph(grid, pair, binning);
    const IndexGraph b = build_index_graph(grid, swapped, binning);

    uint64_t differing = 0;
    for (uint64_t i = 0; i < a.num_voxels(); ++i) {
        if (a.entries[i] != b.entries[i]) {
            ++differing;
        }
    }
    EXPECT_GT(differing, 0u);
}

TEST(BuildIndexGraph, RejectsBadConfigurations) {
    EXPECT_THROW(build_index_graph(fixtures::ring_grid(), {}, fixtures::ring_binning()),
                 ArgumentError);

    auto cams = fixtures::ring_rig();
    cams[1] = CameraModel(1, 130, 130, 60, 40, cams[1].extrinsic, 120, 80);
    EXPECT_THROW(build_index_graph(fixtures::ring_grid(), cams, fixtures::ring_binning()),
                 ConfigError);
}

TEST(CoverageStats, AllInvalidGraphIsZero) {
    const IndexGraph g =
        build_index_graph(behind_grid(), single_forward_cam(), fixtures::ring_binning());
    const CoverageStats stats = coverage_stats(g);
    EXPECT_EQ(stats.valid_count, 0u);
    ASSERT_EQ(stats.per_camera.size(), 1u);
    EXPECT_EQ(stats.per_camera[0], 0u);
}

TEST(CoverageStats, FullFrustumGridIsFullyCovered) {
    const auto cams = single_forward_cam();
    // Small box straight ahead of the camera, inside depth range and image.
    const VoxelGrid grid(Vec3{8.0, -1.0, -0.5}, Vec3{0.2, 0.1, 0.25}, 4, 20, 20);
    const IndexGraph g = build_index_graph(grid, cams, fixtures::ring_binning());
    const CoverageStats stats = coverage_stats(g);
    EXPECT_EQ(stats.valid_count, grid.num_voxels());
    EXPECT_EQ(stats.per_camera[0], grid.num_voxels());
}

TEST(CoverageStats, MatchesBruteForceOnRingFixture) {
    const auto cams = fixtures::ring_rig();
    const IndexGraph g = fixtures::ring_graph();
    const auto expected =
        brute_force::expected_sources(fixtures::ring_grid(), cams, fixtures::ring_binning());

    CoverageStats want;
    want.per_camera.assign(cams.size(), 0);
    for (const auto& hit : expected) {
        if (hit.valid) {
            ++want.valid_count;
            ++want.per_camera[hit.cam_slot];
        }
    }
    EXPECT_EQ(coverage_stats(g), want);
    // The surround fixture must actually cover a healthy share of the grid.
    EXPECT_GT(want.valid_count, g.num_voxels() / 2);
    uint64_t histogram_total = 0;
    for (uint64_t n : want.per_camera) {
        histogram_total += n;
    }
    EXPECT_EQ(histogram_total, want.valid_count);
}

TEST(Serialization, RoundTripIsIdentity) {
    const IndexGraph g = fixtures::ring_graph();
    const std::vector<uint8_t> bytes = serialize_index_graph(g);
    const IndexGraph back = deserialize_index_graph(bytes);
    EXPECT_EQ(back, g);
}

TEST(Serialization, CorruptMagicIsRejected) {
    std::vector<uint8_t> bytes = serialize_index_graph(fixtures::ring_graph());
    bytes[0] = 'X';
    EXPECT_THROW(deserialize_index_graph(bytes), FormatError);
}

TEST(Serialization, TruncatedStreamIsRejected) {
    const std::vector<uint8_t> bytes = serialize_index_graph(fixtures::ring_graph());
    const std::vector<uint8_t> cut(bytes.begin(), bytes.end() - 7);
    EXPECT_THROW(deserialize_index_graph(cut), FormatError);
    const std::vector<uint8_t> header_only(bytes.begin(), bytes.begin() + 10);
    EXPECT_THROW(deserialize_index_graph(header_only), FormatError);
}

TEST(Serialization, UnsupportedVersionIsRejected) {
    std::vector<uint8_t> bytes = serialize_index_graph(fixtures::ring_graph());
    bytes[4] = 9;
    EXPECT_THROW(deserialize_index_graph(bytes), FormatError);
}

TEST(Fingerprint, PerturbedRigIsDetected) {
    const auto cams = fixtures::ring_rig();
    const VoxelGrid grid = fixtures::ring_grid();
    const DepthBinning binning = fixtures::ring_binning();
    const IndexGraph g = build_index_graph(grid, cams, binning);

    auto perturbed = cams;
    perturbed[3].extrinsic.at(0, 3) += 0.01;  // nudge one translation entry
    const uint64_t expected = rig_fingerprint(grid, perturbed, binning);
    EXPECT_NE(expected, g.fingerprint);
    EXPECT_THROW(verify_fingerprint(g, expected, FingerprintPolicy::kReject),
                 FingerprintError);
    EXPECT_FALSE(verify_fingerprint(g, expected, FingerprintPolicy::kWarn));
    EXPECT_TRUE(verify_fingerprint(g, rig_fingerprint(grid, cams, binning)));
}

TEST(Determinism, RepeatBuildsSerializeIdentically) {
    const auto cams = fixtures::ring_rig();
    const VoxelGrid grid = fixtures::ring_grid();
    const DepthBinning binning = fixtures::ring_binning();
    const auto first = serialize_index_graph(build_index_graph(grid, cams, binning));
    const auto second = serialize_index_graph(build_index_graph(grid, cams, binning));
    EXPECT_EQ(first, second);
}

TEST(Determinism, ThreadCountDoesNotChangeBytes) {
    const auto cams = fixtures::ring_rig();
    const VoxelGrid grid = fixtures::ring_grid();
    const DepthBinning binning = fixtures::ring_binning();
    const auto sequential = serialize_index_graph(build_index_graph(grid, cams, binning, 1));
    for (unsigned threads : {2u, 4u, 7u}) {
        const auto parallel =
            serialize_index_graph(build_index_graph(grid, cams, binning, threads));
        EXPECT_EQ(parallel, sequential) << threads << " threads";
    }
}
