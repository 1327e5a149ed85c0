#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "bevlift/detail/binary.hpp"
#include "bevlift/detail/parallel.hpp"
#include "bevlift/errors.hpp"
#include "bevlift/geometry.hpp"

namespace bevlift {

/// Source assignment for one voxel: the camera slot (position in the rig
/// order), pixel, and depth bin that feed it, or invalid when no camera sees
/// the voxel center.
struct VoxelSource {
    uint8_t valid = 0;
    uint8_t cam = 0;  // rig slot of the winning camera, not CameraModel::cam_id
    uint16_t u = 0;
    uint16_t v = 0;
    uint16_t depth_bin = 0;

    bool operator==(const VoxelSource&) const = default;
};

/// Dense voxel-order mapping from BEV cells to image samples.
///
/// Entry i describes the voxel with linear index i, so the gather output is
/// already in the reshape order of the final volume. spatial_offsets[i] is a
/// row offset into a feature stack laid out [N_cam, H_img, W_img, C]
/// (cam*H*W + v*W + u); depth_offsets[i] is an element offset into a depth
/// stack laid out [N_cam, D, H_img, W_img] ((cam*D + d)*H*W + v*W + u).
/// Invalid voxels point at the zero padding slot one past the real data.
struct IndexGraph {
    uint32_t dim_z = 0;
    uint32_t dim_h = 0;
    uint32_t dim_w = 0;
    uint32_t num_cams = 0;
    uint32_t img_h = 0;
    uint32_t img_w = 0;
    uint32_t depth_bins = 0;
    uint64_t fingerprint = 0;

    std::vector<VoxelSource> entries;
    std::vector<uint32_t> spatial_offsets;
    std::vector<uint32_t> depth_offsets;

    uint64_t num_voxels() const { return uint64_t(dim_z) * dim_h * dim_w; }

    uint32_t spatial_pad_offset() const { return num_cams * img_h * img_w; }

    uint32_t depth_pad_offset() const { return num_cams * depth_bins * img_h * img_w; }

    bool operator==(const IndexGraph&) const = default;
};

/// 64-bit fingerprint of the projection setup, hashed over a canonical
/// little-endian encoding of grid, binning, and cameras in rig order.
/// Persisted graphs carry it so a stale LUT is detectable.
inline uint64_t rig_fingerprint(const VoxelGrid& grid, const std::vector<CameraModel>& cams,
                                const DepthBinning& binning) {
    std::vector<uint8_t> buf;
    buf.reserve(64 + cams.size() * 224);
    detail::put_f64(buf, grid.origin.x);
    detail::put_f64(buf, grid.origin.y);
    detail::put_f64(buf, grid.origin.z);
    detail::put_f64(buf, grid.voxel_size.x);
    detail::put_f64(buf, grid.voxel_size.y);
    detail::put_f64(buf, grid.voxel_size.z);
    detail::put_u32(buf, grid.dim_z);
    detail::put_u32(buf, grid.dim_h);
    detail::put_u32(buf, grid.dim_w);
    detail::put_f64(buf, binning.d_min);
    detail::put_f64(buf, binning.d_max);
    detail::put_u32(buf, binning.num_bins);
    for (const CameraModel& cam : cams) {
        detail::put_u32(buf, cam.cam_id);
        detail::put_f64(buf, cam.fx);
        detail::put_f64(buf, cam.fy);
        detail::put_f64(buf, cam.cx);
        detail::put_f64(buf, cam.cy);
        for (double v : cam.extrinsic.m) {
            detail::put_f64(buf, v);
        }
        detail::put_u32(buf, cam.width);
        detail::put_u32(buf, cam.height);
    }
    detail::Fnv1a64 hash;
    hash.absorb(buf);
    return hash.digest();
}

/// Builds the voxel->image index graph: every voxel center is projected
/// through the cameras in rig order and the first valid hit wins, so each
/// voxel has exactly one source. Construction parallelizes over voxels;
/// the result does not depend on the thread count.
inline IndexGraph build_index_graph(const VoxelGrid& grid, const std::vector<CameraModel>& cams,
                                    const DepthBinning& binning, unsigned threads = 0) {
    if (cams.empty()) {
        throw ArgumentError("build_index_graph: camera list is empty");
    }
    if (cams.size() > 255) {
        throw ConfigError("build_index_graph: at most 255 cameras supported");
    }
    const uint32_t img_w = cams.front().width;
    const uint32_t img_h = cams.front().height;
    for (const CameraModel& cam : cams) {
        cam.validate();
        if (cam.width != img_w || cam.height != img_h) {
            throw ConfigError("build_index_graph: all cameras must share one image extent");
        }
    }

    IndexGraph g;
    g.dim_z = grid.dim_z;
    g.dim_h = grid.dim_h;
    g.dim_w = grid.dim_w;
    g.num_cams = uint32_t(cams.size());
    g.img_h = img_h;
    g.img_w = img_w;
    g.depth_bins = binning.num_bins;
    g.fingerprint = rig_fingerprint(grid, cams, binning);

    const uint64_t depth_padded = (uint64_t(g.num_cams) * g.depth_bins * img_h * img_w) + 1;
    if (depth_padded > std::numeric_limits<uint32_t>::max()) {
        throw ConfigError("build_index_graph: stack too large for 32-bit offsets");
    }

    const uint64_t total = grid.num_voxels();
    g.entries.resize(total);
    g.spatial_offsets.resize(total);
    g.depth_offsets.resize(total);

    const uint32_t spatial_pad = g.spatial_pad_offset();
    const uint32_t depth_pad = g.depth_pad_offset();

    detail::parallel_chunks(total, threads, [&](uint64_t begin, uint64_t end) {
        for (uint64_t i = begin; i < end; ++i) {
            const auto [z, y, x] = grid.coords(i);
            const Vec3 center = grid.voxel_center(z, y, x);
            VoxelSource src;
            uint32_t spatial = spatial_pad;
            uint32_t depth = depth_pad;
            for (size_t k = 0; k < cams.size(); ++k) {
                const auto hit = project(cams[k], binning, center);
                if (!hit) {
                    continue;
                }
                src.valid = 1;
                src.cam = uint8_t(k);
                src.u = uint16_t(hit->u);
                src.v = uint16_t(hit->v);
                src.depth_bin = uint16_t(hit->depth_bin);
                spatial = uint32_t((uint64_t(k) * img_h + hit->v) * img_w + hit->u);
                depth = uint32_t(((uint64_t(k) * binning.num_bins + hit->depth_bin) * img_h +
                                  hit->v) * img_w + hit->u);
                break;
            }
            g.entries[i] = src;
            g.spatial_offsets[i] = spatial;
            g.depth_offsets[i] = depth;
        }
    });
    return g;
}

struct CoverageStats {
    uint64_t valid_count = 0;
    std::vector<uint64_t> per_camera;  // indexed by rig slot

    bool operator==(const CoverageStats&) const = default;
};

inline CoverageStats coverage_stats(const IndexGraph& g) {
    CoverageStats stats;
    stats.per_camera.assign(g.num_cams, 0);
    for (const VoxelSource& e : g.entries) {
        if (e.valid) {
            ++stats.valid_count;
            ++stats.per_camera[e.cam];
        }
    }
    return stats;
}

// FBLT file layout, all integers little-endian:
//   magic "FBLT", u16 version = 1,
//   u32 Z, H, W, N_cam, H_img, W_img, D, u64 fingerprint,
//   num_voxels x { u8 validity, u32 spatial_offset, u32 depth_offset,
//                  u8 cam, u16 u, u16 v, u16 depth_bin }.
inline constexpr uint16_t kIndexGraphVersion = 1;

inline std::vector<uint8_t> serialize_index_graph(const IndexGraph& g) {
    std::vector<uint8_t> out;
    out.reserve(38 + g.entries.size() * 16);
    for (char c : {'F', 'B', 'L', 'T'}) {
        out.push_back(uint8_t(c));
    }
    detail::put_u16(out, kIndexGraphVersion);
    detail::put_u32(out, g.dim_z);
    detail::put_u32(out, g.dim_h);
    detail::put_u32(out, g.dim_w);
    detail::put_u32(out, g.num_cams);
    detail::put_u32(out, g.img_h);
    detail::put_u32(out, g.img_w);
    detail::put_u32(out, g.depth_bins);
    detail::put_u64(out, g.fingerprint);
    for (size_t i = 0; i < g.entries.size(); ++i) {
        const VoxelSource& e = g.entries[i];
        detail::put_u8(out, e.valid);
        detail::put_u32(out, g.spatial_offsets[i]);
        detail::put_u32(out, g.depth_offsets[i]);
        detail::put_u8(out, e.cam);
        detail::put_u16(out, e.u);
        detail::put_u16(out, e.v);
        detail::put_u16(out, e.depth_bin);
    }
    return out;
}

inline IndexGraph deserialize_index_graph(const uint8_t* data, size_t size) {
    detail::ByteReader in(data, size);
    uint8_t magic[4];
    in.bytes(magic, 4);
    if (magic[0] != 'F' || magic[1] != 'B' || magic[2] != 'L' || magic[3] != 'T') {
        throw FormatError("index graph: bad magic");
    }
    const uint16_t version = in.u16();
    if (version != kIndexGraphVersion) {
        throw FormatError("index graph: unsupported version " + std::to_string(version));
    }
    IndexGraph g;
    g.dim_z = in.u32();
    g.dim_h = in.u32();
    g.dim_w = in.u32();
    g.num_cams = in.u32();
    g.img_h = in.u32();
    g.img_w = in.u32();
    g.depth_bins = in.u32();
    g.fingerprint = in.u64();
    if (g.dim_z == 0 || g.dim_h == 0 || g.dim_w == 0 || g.num_cams == 0 ||
        g.num_cams > 255 || g.img_h == 0 || g.img_w == 0 || g.depth_bins == 0) {
        throw FormatError("index graph: invalid header dimensions");
    }
    const uint64_t total = g.num_voxels();
    if (in.remaining() != total * 16) {
        throw FormatError("index graph: entry payload has wrong size");
    }
    g.entries.resize(total);
    g.spatial_offsets.resize(total);
    g.depth_offsets.resize(total);
    const uint32_t spatial_pad = g.spatial_pad_offset();
    const uint32_t depth_pad = g.depth_pad_offset();
    for (uint64_t i = 0; i < total; ++i) {
        VoxelSource& e = g.entries[i];
        e.valid = in.u8();
        g.spatial_offsets[i] = in.u32();
        g.depth_offsets[i] = in.u32();
        e.cam = in.u8();
        e.u = in.u16();
        e.v = in.u16();
        e.depth_bin = in.u16();
        if (e.valid > 1) {
            throw FormatError("index graph: validity byte out of range");
        }
        if (g.spatial_offsets[i] > spatial_pad || g.depth_offsets[i] > depth_pad) {
            throw FormatError("index graph: offset out of bounds");
        }
        if (!e.valid &&
            (g.spatial_offsets[i] != spatial_pad || g.depth_offsets[i] != depth_pad)) {
            throw FormatError("index graph: invalid entry must use padding offsets");
        }
    }
    return g;
}

inline IndexGraph deserialize_index_graph(const std::vector<uint8_t>& bytes) {
    return deserialize_index_graph(bytes.data(), bytes.size());
}

enum class FingerprintPolicy {
    kWarn,    // mismatch prints a warning, load proceeds
    kReject,  // mismatch throws FingerprintError
};

/// Checks a loaded graph against the rig it is about to be used with.
/// Returns true when the fingerprints match.
inline bool verify_fingerprint(const IndexGraph& g, uint64_t expected,
                               FingerprintPolicy policy = FingerprintPolicy::kReject) {
    if (g.fingerprint == expected) {
        return true;
    }
    const std::string msg = "index graph fingerprint mismatch: graph was built for a "
                            "different rig/grid/binning";
    if (policy == FingerprintPolicy::kReject) {
        throw FingerprintError(msg);
    }
    std::cerr << "warning: " << msg << "\n";
    return false;
}

inline void save_index_graph(const std::string& path, const IndexGraph& g) {
    const std::vector<uint8_t> bytes = serialize_index_graph(g);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open for writing: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) {
        throw FormatError("short write: " + path);
    }
}

inline IndexGraph load_index_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open: " + path);
    }
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return deserialize_index_graph(bytes);
}

}  // namespace bevlift
