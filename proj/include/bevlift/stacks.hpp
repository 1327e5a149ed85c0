#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bevlift/errors.hpp"

namespace bevlift {

/// Multi-camera semantic feature maps, row-major [N_cam, H_img, W_img, C]
/// 32-bit floats, physically followed by one zero row of C elements (the
/// padding slot that invalid voxels gather from).
struct FeatureStack {
    uint32_t num_cams = 0;
    uint32_t height = 0;
    uint32_t width = 0;
    uint32_t channels = 0;
    std::vector<float> data;  // (num_cams*height*width + 1) * channels

    FeatureStack() = default;

    /// Takes the logical [N, H, W, C] values and appends the zero pad row.
    FeatureStack(uint32_t cams, uint32_t h, uint32_t w, uint32_t c,
                 std::vector<float> values)
        : num_cams(cams), height(h), width(w), channels(c), data(std::move(values)) {
        const uint64_t logical = uint64_t(cams) * h * w * c;
        if (data.size() != logical) {
            throw ArgumentError("feature stack: value count does not match dims");
        }
        data.resize(logical + channels, 0.0f);
        validate();
    }

    uint32_t pad_row() const { return num_cams * height * width; }

    uint64_t num_rows() const { return uint64_t(num_cams) * height * width + 1; }

    const float* row(uint32_t row_offset) const {
        return data.data() + uint64_t(row_offset) * channels;
    }

    float at(uint32_t cam, uint32_t v, uint32_t u, uint32_t c) const {
        return data[(uint64_t(cam) * height * width + uint64_t(v) * width + u) * channels + c];
    }

    void validate() const {
        if (num_cams == 0 || height == 0 || width == 0 || channels == 0) {
            throw ArgumentError("feature stack: dims must be nonzero");
        }
        if (data.size() != num_rows() * channels) {
            throw ArgumentError("feature stack: storage size mismatch");
        }
        for (float v : data) {
            if (!std::isfinite(v)) {
                throw ArgumentError("feature stack: values must be finite");
            }
        }
        for (uint32_t c = 0; c < channels; ++c) {
            if (data[uint64_t(pad_row()) * channels + c] != 0.0f) {
                throw ArgumentError("feature stack: padding slot must read zero");
            }
        }
    }

    bool operator==(const FeatureStack&) const = default;
};

/// Per-pixel depth-bin probabilities, row-major [N_cam, D, H_img, W_img]
/// 32-bit floats in [0, 1], physically followed by one zero pad element.
struct DepthStack {
    uint32_t num_cams = 0;
    uint32_t num_bins = 0;
    uint32_t height = 0;
    uint32_t width = 0;
    std::vector<float> data;  // num_cams*num_bins*height*width + 1

    DepthStack() = default;

    DepthStack(uint32_t cams, uint32_t bins, uint32_t h, uint32_t w,
               std::vector<float> values)
        : num_cams(cams), num_bins(bins), height(h), width(w), data(std::move(values)) {
        const uint64_t logical = uint64_t(cams) * bins * h * w;
        if (data.size() != logical) {
            throw ArgumentError("depth stack: value count does not match dims");
        }
        data.push_back(0.0f);
        validate();
    }

    uint32_t pad_offset() const { return num_cams * num_bins * height * width; }

    float at(uint32_t cam, uint32_t bin, uint32_t v, uint32_t u) const {
        return data[((uint64_t(cam) * num_bins + bin) * height + v) * width + u];
    }

    void validate() const {
        if (num_cams == 0 || num_bins == 0 || height == 0 || width == 0) {
            throw ArgumentError("depth stack: dims must be nonzero");
        }
        if (data.size() != uint64_t(pad_offset()) + 1) {
            throw ArgumentError("depth stack: storage size mismatch");
        }
        for (float v : data) {
            if (!(v >= 0.0f && v <= 1.0f)) {
                throw ArgumentError("depth stack: values must lie in [0, 1]");
            }
        }
        if (data[pad_offset()] != 0.0f) {
            throw ArgumentError("depth stack: padding slot must read zero");
        }
    }

    bool operator==(const DepthStack&) const = default;
};

/// Dense BEV output, row-major [Z, H, W, C] 32-bit floats. Constructed by
/// reinterpreting the flat gather buffer; the bytes are never rearranged.
struct BEVVolume {
    uint32_t dim_z = 0;
    uint32_t dim_h = 0;
    uint32_t dim_w = 0;
    uint32_t channels = 0;
    std::vector<float> data;

    const float* at(uint32_t z, uint32_t y, uint32_t x) const {
        return data.data() +
               ((uint64_t(z) * dim_h + y) * dim_w + x) * channels;
    }

    bool operator==(const BEVVolume&) const = default;
};

}  // namespace bevlift
