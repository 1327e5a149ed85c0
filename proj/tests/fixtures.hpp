#pragma once

// Frozen test fixtures shared across suites. The ring fixture (six-camera
// surround rig over a 4x50x50 grid) is the workhorse for oracle-equivalence
// checks; its parameters must not drift, several tests freeze results
// derived from it.

#include <cstdint>
#include <vector>

#include "bevlift/geometry.hpp"
#include "bevlift/index_graph.hpp"
#include "bevlift/stacks.hpp"
#include "bevlift/synth.hpp"

namespace fixtures {

inline bevlift::RigSpec ring_rig_spec() {
    bevlift::RigSpec spec;
    spec.preset = "ring6";
    spec.width = 160;
    spec.height = 120;
    spec.fx = 130.0;
    spec.fy = 130.0;
    spec.seed = 0;
    return spec;
}

inline std::vector<bevlift::CameraModel> ring_rig() {
    return bevlift::make_rig(ring_rig_spec());
}

inline bevlift::VoxelGrid ring_grid() {
    return bevlift::VoxelGrid(bevlift::Vec3{-12.5, -12.5, -2.0},
                              bevlift::Vec3{0.5, 0.5, 1.0}, 4, 50, 50);
}

inline bevlift::DepthBinning ring_binning() {
    return bevlift::DepthBinning(1.0, 41.0, 8);
}

inline bevlift::IndexGraph ring_graph() {
    return bevlift::build_index_graph(ring_grid(), ring_rig(), ring_binning());
}

inline bevlift::FeatureStack ring_features(uint32_t channels = 8, uint64_t seed = 42,
                                           bevlift::StackSpec::Feature kind =
                                               bevlift::StackSpec::Feature::kRandom) {
    bevlift::StackSpec spec;
    spec.feature = kind;
    spec.channels = channels;
    spec.seed = seed;
    const auto rig = ring_rig();
    return bevlift::make_feature_stack(spec, uint32_t(rig.size()), rig.front().height,
                                       rig.front().width);
}

inline bevlift::DepthStack ring_depth(bevlift::StackSpec::Depth kind =
                                          bevlift::StackSpec::Depth::kSoftmaxRandom,
                                      uint64_t seed = 42) {
    bevlift::StackSpec spec;
    spec.depth = kind;
    spec.seed = seed;
    const auto rig = ring_rig();
    return bevlift::make_depth_stack(spec, uint32_t(rig.size()), ring_binning().num_bins,
                                     rig.front().height, rig.front().width);
}

/// A camera with identity extrinsic: ego frame == camera frame, looking
/// along ego +z. Matches the worked projection examples.
inline bevlift::CameraModel identity_camera(uint32_t cam_id = 0) {
    return bevlift::CameraModel(cam_id, 500.0, 500.0, 320.0, 240.0,
                                bevlift::Mat4::identity(), 640, 480);
}

/// Grid fully inside camera 0's frustum of the ring rig (and therefore
/// inside the union): a box ahead of the +x camera, well within the depth
/// range and image bounds.
inline bevlift::VoxelGrid inside_union_grid() {
    return bevlift::VoxelGrid(bevlift::Vec3{8.0, -1.0, -0.5},
                              bevlift::Vec3{0.2, 0.1, 0.25}, 4, 20, 20);
}

/// Grid invisible to every ring camera: each camera sees it either behind
/// the image plane or beyond the depth range.
inline bevlift::VoxelGrid outside_union_grid() {
    return bevlift::VoxelGrid(bevlift::Vec3{400.0, 400.0, 0.0},
                              bevlift::Vec3{5.0, 5.0, 0.5}, 2, 10, 10);
}

}  // namespace fixtures
