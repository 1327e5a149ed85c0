#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevlift/detail/binary.hpp"
#include "bevlift/errors.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/stacks.hpp"

namespace bevlift {

// ---------------------------------------------------------------------------
// Calibration files: human-editable JSON, one object per camera with the
// 3x3 intrinsics and 4x4 extrinsic as row-major number arrays. Files may
// store the extrinsic in either direction; cam_to_ego is inverted on load so
// the in-memory convention is always ego->camera.
// ---------------------------------------------------------------------------

inline constexpr double kCalibrationRotationTol = 1e-5;

inline nlohmann::ordered_json camera_to_json(const CameraModel& cam) {
    nlohmann::ordered_json j;
    j["cam_id"] = cam.cam_id;
    j["intrinsics"] = {cam.fx, 0.0, cam.cx, 0.0, cam.fy, cam.cy, 0.0, 0.0, 1.0};
    j["extrinsic"] = cam.extrinsic.m;
    j["direction"] = "ego_to_cam";
    j["width"] = cam.width;
    j["height"] = cam.height;
    return j;
}

inline void save_calibration(const std::string& path, const std::vector<CameraModel>& cams) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["cameras"] = nlohmann::ordered_json::array();
    for (const CameraModel& cam : cams) {
        j["cameras"].push_back(camera_to_json(cam));
    }
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot open for writing: " + path);
    }
    out << j.dump(2) << "\n";
}

inline std::vector<CameraModel> load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("calibration " + path + ": " + e.what());
    }
    if (!j.contains("cameras") || !j["cameras"].is_array() || j["cameras"].empty()) {
        throw FormatError("calibration " + path + ": missing cameras array");
    }
    std::vector<CameraModel> cams;
    cams.reserve(j["cameras"].size());
    for (const auto& cj : j["cameras"]) {
        try {
            const auto k = cj.at("intrinsics").get<std::array<double, 9>>();
            if (k[1] != 0.0 || k[3] != 0.0 || k[6] != 0.0 || k[7] != 0.0 || k[8] != 1.0) {
                throw FormatError("calibration: intrinsics must be zero-skew pinhole");
            }
            Mat4 extrinsic;
            extrinsic.m = cj.at("extrinsic").get<std::array<double, 16>>();
            const std::string direction = cj.at("direction").get<std::string>();
            if (direction != "ego_to_cam" && direction != "cam_to_ego") {
                throw FormatError("calibration: direction must be ego_to_cam or cam_to_ego");
            }
            if (rotation_orthonormality_error(extrinsic) >= kCalibrationRotationTol) {
                throw FormatError("calibration: extrinsic rotation is not orthonormal");
            }
            if (std::abs(rotation_determinant(extrinsic) - 1.0) > kCalibrationRotationTol) {
                throw FormatError("calibration: extrinsic rotation must be a proper rotation "
                                  "(determinant +1)");
            }
            if (direction == "cam_to_ego") {
                extrinsic = extrinsic.rigid_inverse();
            }
            cams.emplace_back(cj.at("cam_id").get<uint32_t>(), k[0], k[4], k[2], k[5],
                              extrinsic, cj.at("width").get<uint32_t>(),
                              cj.at("height").get<uint32_t>());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("calibration " + path + ": " + e.what());
        }
    }
    return cams;
}

// ---------------------------------------------------------------------------
// FBTN tensor files: magic "FBTN", u16 version = 1, u8 rank, u32 dims
// little-endian, then row-major 32-bit little-endian floats.
// ---------------------------------------------------------------------------

inline constexpr uint16_t kTensorVersion = 1;

struct Tensor {
    std::vector<uint32_t> dims;
    std::vector<float> data;

    uint64_t element_count() const {
        uint64_t n = 1;
        for (uint32_t d : dims) {
            n *= d;
        }
        return n;
    }

    bool operator==(const Tensor&) const = default;
};

inline std::vector<uint8_t> serialize_tensor(const Tensor& t) {
    if (t.dims.empty() || t.dims.size() > 255) {
        throw ArgumentError("tensor rank must be in [1, 255]");
    }
    if (t.data.size() != t.element_count()) {
        throw ArgumentError("tensor data size does not match dims");
    }
    std::vector<uint8_t> out;
    out.reserve(7 + 4 * t.dims.size() + 4 * t.data.size());
    for (char c : {'F', 'B', 'T', 'N'}) {
        out.push_back(uint8_t(c));
    }
    detail::put_u16(out, kTensorVersion);
    detail::put_u8(out, uint8_t(t.dims.size()));
    for (uint32_t d : t.dims) {
        detail::put_u32(out, d);
    }
    for (float v : t.data) {
        detail::put_f32(out, v);
    }
    return out;
}

inline Tensor deserialize_tensor(const uint8_t* data, size_t size) {
    detail::ByteReader in(data, size);
    uint8_t magic[4];
    in.bytes(magic, 4);
    if (magic[0] != 'F' || magic[1] != 'B' || magic[2] != 'T' || magic[3] != 'N') {
        throw FormatError("tensor: bad magic");
    }
    const uint16_t version = in.u16();
    if (version != kTensorVersion) {
        throw FormatError("tensor: unsupported version " + std::to_string(version));
    }
    const uint8_t rank = in.u8();
    if (rank == 0) {
        throw FormatError("tensor: rank must be nonzero");
    }
    Tensor t;
    t.dims.resize(rank);
    for (auto& d : t.dims) {
        d = in.u32();
        if (d == 0) {
            throw FormatError("tensor: zero dimension");
        }
    }
    const uint64_t count = t.element_count();
    if (in.remaining() != count * 4) {
        throw FormatError("tensor: payload size does not match dims");
    }
    t.data.resize(count);
    for (auto& v : t.data) {
        v = in.f32();
    }
    return t;
}

inline void save_tensor(const std::string& path, const Tensor& t) {
    const std::vector<uint8_t> bytes = serialize_tensor(t);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open for writing: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) {
        throw FormatError("short write: " + path);
    }
}

inline Tensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open: " + path);
    }
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return deserialize_tensor(bytes.data(), bytes.size());
}

// Tensor <-> stack converters. Files store the logical dims only; the zero
// padding slots are reattached on load.

inline Tensor to_tensor(const FeatureStack& s) {
    Tensor t;
    t.dims = {s.num_cams, s.height, s.width, s.channels};
    t.data.assign(s.data.begin(), s.data.end() - s.channels);
    return t;
}

inline FeatureStack feature_stack_from_tensor(const Tensor& t) {
    if (t.dims.size() != 4) {
        throw FormatError("feature stack tensor must have rank 4 [N, H, W, C]");
    }
    return FeatureStack(t.dims[0], t.dims[1], t.dims[2], t.dims[3], t.data);
}

inline Tensor to_tensor(const DepthStack& s) {
    Tensor t;
    t.dims = {s.num_cams, s.num_bins, s.height, s.width};
    t.data.assign(s.data.begin(), s.data.end() - 1);
    return t;
}

inline DepthStack depth_stack_from_tensor(const Tensor& t) {
    if (t.dims.size() != 4) {
        throw FormatError("depth stack tensor must have rank 4 [N, D, H, W]");
    }
    return DepthStack(t.dims[0], t.dims[1], t.dims[2], t.dims[3], t.data);
}

inline Tensor to_tensor(const BEVVolume& v) {
    Tensor t;
    t.dims = {v.dim_z, v.dim_h, v.dim_w, v.channels};
    t.data = v.data;
    return t;
}

}  // namespace bevlift
