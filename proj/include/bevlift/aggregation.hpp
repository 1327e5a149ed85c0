#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "bevlift/detail/parallel.hpp"
#include "bevlift/errors.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/index_graph.hpp"
#include "bevlift/stacks.hpp"

namespace bevlift {

inline void check_feature_dims(const FeatureStack& stack, const IndexGraph& g) {
    if (stack.num_cams != g.num_cams || stack.height != g.img_h || stack.width != g.img_w) {
        throw ConfigError("feature stack dims do not match the index graph rig");
    }
}

inline void check_depth_dims(const DepthStack& depth, const IndexGraph& g) {
    if (depth.num_cams != g.num_cams || depth.num_bins != g.depth_bins ||
        depth.height != g.img_h || depth.width != g.img_w) {
        throw ConfigError("depth stack dims do not match the index graph rig");
    }
}

/// Row gather: out[i, :] = stack[spatial_offsets[i], :]. Invalid voxels read
/// the zero pad row. The stack is only ever read.
inline std::vector<float> gather_features(const FeatureStack& stack, const IndexGraph& g,
                                          unsigned threads = 1) {
    check_feature_dims(stack, g);
    const uint64_t total = g.num_voxels();
    const uint32_t c = stack.channels;
    std::vector<float> out(total * c);
    const float* src = stack.data.data();
    float* dst = out.data();
    detail::parallel_chunks(total, threads, [&](uint64_t begin, uint64_t end) {
        for (uint64_t i = begin; i < end; ++i) {
            std::memcpy(dst + i * c, src + uint64_t(g.spatial_offsets[i]) * c,
                        size_t(c) * sizeof(float));
        }
    });
    return out;
}

/// Element gather: out[i] = depth[depth_offsets[i]]; invalid voxels read 0.
inline std::vector<float> gather_depth_weights(const DepthStack& depth, const IndexGraph& g,
                                               unsigned threads = 1) {
    check_depth_dims(depth, g);
    const uint64_t total = g.num_voxels();
    std::vector<float> out(total);
    const float* src = depth.data.data();
    detail::parallel_chunks(total, threads, [&](uint64_t begin, uint64_t end) {
        for (uint64_t i = begin; i < end; ++i) {
            out[i] = src[g.depth_offsets[i]];
        }
    });
    return out;
}

inline void modulate_inplace(std::vector<float>& features, const std::vector<float>& weights,
                             uint32_t channels, unsigned threads = 1) {
    if (channels == 0 || features.size() % channels != 0) {
        throw ArgumentError("modulate: feature size is not a multiple of the channel count");
    }
    const uint64_t rows = features.size() / channels;
    if (weights.size() != rows) {
        throw ArgumentError("modulate: one weight per feature row required");
    }
    float* f = features.data();
    detail::parallel_chunks(rows, threads, [&](uint64_t begin, uint64_t end) {
        for (uint64_t i = begin; i < end; ++i) {
            const float w = weights[i];
            float* row = f + i * channels;
            for (uint32_t c = 0; c < channels; ++c) {
                row[c] *= w;
            }
        }
    });
}

/// out[i, c] = features[i, c] * weights[i]; the per-voxel scalar weight is
/// broadcast over channels.
inline std::vector<float> modulate(const std::vector<float>& features,
                                   const std::vector<float>& weights, uint32_t channels) {
    std::vector<float> out = features;
    modulate_inplace(out, weights, channels);
    return out;
}

/// Reinterprets the flat [num_voxels, C] buffer as the dense [Z, H, W, C]
/// volume. The buffer is moved, not copied; voxel-order storage makes this a
/// pure metadata change.
inline BEVVolume place(std::vector<float> flat, const VoxelGrid& grid, uint32_t channels) {
    if (channels == 0 || flat.size() != grid.num_voxels() * channels) {
        throw ArgumentError("place: flat buffer size must equal num_voxels * channels");
    }
    BEVVolume volume;
    volume.dim_z = grid.dim_z;
    volume.dim_h = grid.dim_h;
    volume.dim_w = grid.dim_w;
    volume.channels = channels;
    volume.data = std::move(flat);
    return volume;
}

inline void check_grid_dims(const IndexGraph& g, const VoxelGrid& grid) {
    if (grid.dim_z != g.dim_z || grid.dim_h != g.dim_h || grid.dim_w != g.dim_w) {
        throw ConfigError("voxel grid dims do not match the index graph");
    }
}

/// The decomposed view transformation: gather features, gather depth weights,
/// modulate, reshape. Passing no depth stack skips the modulation.
inline BEVVolume transform(const FeatureStack& stack, const DepthStack* depth,
                           const IndexGraph& g, const VoxelGrid& grid, unsigned threads = 1) {
    check_grid_dims(g, grid);
    std::vector<float> flat = gather_features(stack, g, threads);
    if (depth != nullptr) {
        const std::vector<float> weights = gather_depth_weights(*depth, g, threads);
        modulate_inplace(flat, weights, stack.channels, threads);
    }
    return place(std::move(flat), grid, stack.channels);
}

inline BEVVolume transform(const FeatureStack& stack, const IndexGraph& g,
                           const VoxelGrid& grid, unsigned threads = 1) {
    return transform(stack, nullptr, g, grid, threads);
}

}  // namespace bevlift
