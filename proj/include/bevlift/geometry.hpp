#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "bevlift/errors.hpp"

namespace bevlift {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Vec3&) const = default;
};

inline bool is_finite(const Vec3& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

/// Row-major 4x4 homogeneous transform. Only rigid transforms are used.
struct Mat4 {
    std::array<double, 16> m{};

    static Mat4 identity() {
        Mat4 out;
        out.m = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
        return out;
    }

    double at(int row, int col) const { return m[row * 4 + col]; }
    double& at(int row, int col) { return m[row * 4 + col]; }

    Vec3 apply_point(const Vec3& p) const {
        return Vec3{
            m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
            m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
            m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11],
        };
    }

    /// Inverse of a rigid transform [R t; 0 1]: [R' -R't; 0 1].
    Mat4 rigid_inverse() const {
        Mat4 out = identity();
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                out.at(r, c) = at(c, r);
            }
        }
        for (int r = 0; r < 3; ++r) {
            out.at(r, 3) = -(out.at(r, 0) * at(0, 3) + out.at(r, 1) * at(1, 3) +
                             out.at(r, 2) * at(2, 3));
        }
        return out;
    }

    bool operator==(const Mat4&) const = default;
};

/// Max |(R'R - I)| over the 3x3 rotation block.
inline double rotation_orthonormality_error(const Mat4& t) {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) {
                dot += t.at(k, i) * t.at(k, j);
            }
            const double expected = (i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(dot - expected));
        }
    }
    return worst;
}

inline double rotation_determinant(const Mat4& t) {
    return t.at(0, 0) * (t.at(1, 1) * t.at(2, 2) - t.at(1, 2) * t.at(2, 1)) -
           t.at(0, 1) * (t.at(1, 0) * t.at(2, 2) - t.at(1, 2) * t.at(2, 0)) +
           t.at(0, 2) * (t.at(1, 0) * t.at(2, 1) - t.at(1, 1) * t.at(2, 0));
}

/// Zero-skew pinhole camera plus the rigid ego->camera transform.
///
/// Camera frame convention: x right, y down, z forward (optical axis).
/// A point lands at u = fx*X/Z + cx, v = fy*Y/Z + cy.
struct CameraModel {
    uint32_t cam_id = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    Mat4 extrinsic = Mat4::identity();  // ego -> camera
    uint32_t width = 0;
    uint32_t height = 0;

    CameraModel() = default;

    CameraModel(uint32_t id, double fx_, double fy_, double cx_, double cy_,
                const Mat4& ego_to_cam, uint32_t w, uint32_t h)
        : cam_id(id), fx(fx_), fy(fy_), cx(cx_), cy(cy_), extrinsic(ego_to_cam),
          width(w), height(h) {
        validate();
    }

    void validate(double rotation_tol = 1e-6) const {
        if (!(fx > 0.0) || !(fy > 0.0)) {
            throw ArgumentError("camera " + std::to_string(cam_id) +
                                ": focal lengths must be positive");
        }
        if (width < 1 || height < 1) {
            throw ArgumentError("camera " + std::to_string(cam_id) +
                                ": image extent must be at least 1x1");
        }
        if (extrinsic.at(3, 0) != 0.0 || extrinsic.at(3, 1) != 0.0 ||
            extrinsic.at(3, 2) != 0.0 || extrinsic.at(3, 3) != 1.0) {
            throw ArgumentError("camera " + std::to_string(cam_id) +
                                ": extrinsic last row must be [0,0,0,1]");
        }
        if (rotation_orthonormality_error(extrinsic) >= rotation_tol) {
            throw ArgumentError("camera " + std::to_string(cam_id) +
                                ": extrinsic rotation is not orthonormal");
        }
        if (std::abs(rotation_determinant(extrinsic) - 1.0) > rotation_tol) {
            throw ArgumentError("camera " + std::to_string(cam_id) +
                                ": extrinsic rotation must have determinant +1");
        }
    }

    bool operator==(const CameraModel&) const = default;
};

/// Dense BEV volume extents. dims are (Z, H, W) cell counts along z, y, x;
/// voxel (z, y, x) has linear index z*H*W + y*W + x.
struct VoxelGrid {
    Vec3 origin;               // minimum corner, ego-frame meters
    Vec3 voxel_size;           // meters per cell (sx, sy, sz)
    uint32_t dim_z = 0;
    uint32_t dim_h = 0;        // cells along y
    uint32_t dim_w = 0;        // cells along x

    VoxelGrid() = default;

    VoxelGrid(const Vec3& origin_, const Vec3& size, uint32_t z, uint32_t h, uint32_t w)
        : origin(origin_), voxel_size(size), dim_z(z), dim_h(h), dim_w(w) {
        if (dim_z < 1 || dim_h < 1 || dim_w < 1) {
            throw ArgumentError("voxel grid dims must be at least 1");
        }
        if (!(voxel_size.x > 0.0) || !(voxel_size.y > 0.0) || !(voxel_size.z > 0.0)) {
            throw ArgumentError("voxel size components must be positive");
        }
        if (!is_finite(origin) || !is_finite(voxel_size)) {
            throw ArgumentError("voxel grid parameters must be finite");
        }
    }

    uint64_t num_voxels() const {
        return uint64_t(dim_z) * dim_h * dim_w;
    }

    uint64_t linear_index(uint32_t z, uint32_t y, uint32_t x) const {
        return (uint64_t(z) * dim_h + y) * dim_w + x;
    }

    /// (z, y, x) of a linear index.
    std::array<uint32_t, 3> coords(uint64_t linear) const {
        const uint32_t x = uint32_t(linear % dim_w);
        const uint32_t y = uint32_t((linear / dim_w) % dim_h);
        const uint32_t z = uint32_t(linear / (uint64_t(dim_w) * dim_h));
        return {z, y, x};
    }

    /// Center of cell (z, y, x) in ego-frame meters.
    Vec3 voxel_center(uint32_t z, uint32_t y, uint32_t x) const {
        if (z >= dim_z || y >= dim_h || x >= dim_w) {
            throw ArgumentError("voxel index out of range");
        }
        return Vec3{
            origin.x + (x + 0.5) * voxel_size.x,
            origin.y + (y + 0.5) * voxel_size.y,
            origin.z + (z + 0.5) * voxel_size.z,
        };
    }

    bool operator==(const VoxelGrid&) const = default;
};

/// Uniform depth discretization over [d_min, d_max); bin k covers
/// [d_min + k*w, d_min + (k+1)*w) with w = (d_max - d_min) / num_bins.
struct DepthBinning {
    double d_min = 0.0;
    double d_max = 0.0;
    uint32_t num_bins = 0;

    DepthBinning() = default;

    DepthBinning(double dmin, double dmax, uint32_t bins)
        : d_min(dmin), d_max(dmax), num_bins(bins) {
        if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_min) ||
            !std::isfinite(d_max)) {
            throw ArgumentError("depth binning requires 0 < d_min < d_max");
        }
        if (num_bins < 1) {
            throw ArgumentError("depth binning requires at least one bin");
        }
    }

    double bin_width() const { return (d_max - d_min) / num_bins; }

    bool operator==(const DepthBinning&) const = default;
};

/// A valid projection of one 3D point into one camera.
struct PixelHit {
    uint32_t cam_id = 0;     // CameraModel::cam_id of the camera that was hit
    uint32_t u = 0;          // pixel column
    uint32_t v = 0;          // pixel row
    uint32_t depth_bin = 0;
    double cam_depth = 0.0;  // camera-frame z used for binning (diagnostics)

    bool operator==(const PixelHit&) const = default;
};

inline constexpr double kEpsilonZ = 1e-6;  // behind-camera cutoff, meters

/// Projects an ego-frame point through one camera.
///
/// Returns nothing when the point is behind the camera plane, lands outside
/// the image, or has camera depth outside [d_min, d_max). Pixel indices use
/// the floor of the continuous image coordinates (nearest sample by floor),
/// so a returned hit always carries a valid in-range depth bin.
inline std::optional<PixelHit> project(const CameraModel& cam, const DepthBinning& binning,
                                       const Vec3& p_ego) {
    if (!is_finite(p_ego)) {
        throw ArgumentError("project: point must be finite");
    }
    const Vec3 pc = cam.extrinsic.apply_point(p_ego);
    if (!(pc.z > kEpsilonZ)) {
        return std::nullopt;
    }
    const double u_f = cam.fx * pc.x / pc.z + cam.cx;
    const double v_f = cam.fy * pc.y / pc.z + cam.cy;
    const double u_floor = std::floor(u_f);
    const double v_floor = std::floor(v_f);
    if (u_floor < 0.0 || u_floor >= double(cam.width) || v_floor < 0.0 ||
        v_floor >= double(cam.height)) {
        return std::nullopt;
    }
    if (pc.z < binning.d_min || pc.z >= binning.d_max) {
        return std::nullopt;
    }
    uint32_t bin = uint32_t(std::floor((pc.z - binning.d_min) / binning.bin_width()));
    if (bin >= binning.num_bins) {
        bin = binning.num_bins - 1;  // float rounding at the far edge
    }
    return PixelHit{cam.cam_id, uint32_t(u_floor), uint32_t(v_floor), bin, pc.z};
}

}  // namespace bevlift
