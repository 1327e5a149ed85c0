#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bevlift/errors.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/stacks.hpp"

namespace bevlift {

// Pinned PRNG: splitmix64 expands the user seed into the xoshiro256** state.
// Floats come from fixed bit shifts of the raw output, so every generated
// value is reproducible across platforms.

struct SplitMix64 {
    uint64_t state = 0;

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
};

class Xoshiro256ss {
  public:
    explicit Xoshiro256ss(uint64_t seed) {
        SplitMix64 sm{seed};
        for (auto& word : s_) {
            word = sm.next();
        }
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 random bits.
    double next_double() { return double(next() >> 11) * 0x1.0p-53; }

    /// Uniform float in [0, 1), 24 random bits.
    float next_float() { return float(next() >> 40) * 0x1.0p-24f; }

    /// Uniform integer in [0, n). Plain modulo; the tiny bias is irrelevant
    /// here and keeps the stream trivially reproducible.
    uint64_t next_below(uint64_t n) { return next() % n; }

    double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> s_;
};

/// Synthetic rig description. Presets:
///   "ring6"  — six cameras at the ego origin, yaw steps of 60 degrees
///   "single" — one forward-looking camera at the ego origin
/// seed == 0 gives the canonical rig; a nonzero seed applies a small random
/// pose perturbation per camera.
struct RigSpec {
    std::string preset = "ring6";
    uint32_t width = 640;
    uint32_t height = 480;
    double fx = 500.0;
    double fy = 500.0;
    uint64_t seed = 0;
    std::vector<CameraModel> explicit_cams;  // overrides the preset when set
};

namespace detail {

/// Ego->camera transform for a camera at `center` looking along `forward`
/// (camera x right, y down, z = forward), with `roll` about the view axis.
/// Ego z is up.
inline Mat4 look_extrinsic(const Vec3& center, const Vec3& forward, double roll) {
    const double norm = std::sqrt(forward.x * forward.x + forward.y * forward.y +
                                  forward.z * forward.z);
    const Vec3 f{forward.x / norm, forward.y / norm, forward.z / norm};
    // right = forward x up, for up = (0, 0, 1)
    Vec3 r{f.y, -f.x, 0.0};
    const double rn = std::sqrt(r.x * r.x + r.y * r.y);
    if (rn < 1e-9) {
        throw ArgumentError("look_extrinsic: view direction too close to vertical");
    }
    r = Vec3{r.x / rn, r.y / rn, 0.0};
    // down = forward x right
    const Vec3 d{f.y * r.z - f.z * r.y, f.z * r.x - f.x * r.z, f.x * r.y - f.y * r.x};

    const double cr = std::cos(roll);
    const double sr = std::sin(roll);
    const Vec3 x_axis{cr * r.x + sr * d.x, cr * r.y + sr * d.y, cr * r.z + sr * d.z};
    const Vec3 y_axis{cr * d.x - sr * r.x, cr * d.y - sr * r.y, cr * d.z - sr * r.z};

    Mat4 t = Mat4::identity();
    const Vec3 rows[3] = {x_axis, y_axis, f};
    for (int i = 0; i < 3; ++i) {
        t.at(i, 0) = rows[i].x;
        t.at(i, 1) = rows[i].y;
        t.at(i, 2) = rows[i].z;
        t.at(i, 3) = -(rows[i].x * center.x + rows[i].y * center.y + rows[i].z * center.z);
    }
    return t;
}

}  // namespace detail

/// Builds a rig from a spec. Deterministic per (preset, extent, seed): the
/// ring preset's 60-degree trig values come from an exact table, and
/// perturbations use the pinned PRNG.
inline std::vector<CameraModel> make_rig(const RigSpec& spec) {
    if (!spec.explicit_cams.empty()) {
        for (const CameraModel& cam : spec.explicit_cams) {
            cam.validate();
        }
        return spec.explicit_cams;
    }

    uint32_t count = 0;
    if (spec.preset == "ring6") {
        count = 6;
    } else if (spec.preset == "single") {
        count = 1;
    } else {
        throw ArgumentError("unknown rig preset: " + spec.preset);
    }

    // cos/sin of k*60 degrees; sqrt is IEEE-exact, so this table is
    // platform-independent.
    const double h = std::sqrt(3.0) / 2.0;
    const double ring_cos[6] = {1.0, 0.5, -0.5, -1.0, -0.5, 0.5};
    const double ring_sin[6] = {0.0, h, h, 0.0, -h, -h};

    Xoshiro256ss rng(spec.seed);
    std::vector<CameraModel> cams;
    cams.reserve(count);
    for (uint32_t k = 0; k < count; ++k) {
        Vec3 center{0.0, 0.0, 0.0};
        Vec3 forward{ring_cos[k % 6], ring_sin[k % 6], 0.0};
        double roll = 0.0;
        if (spec.seed != 0) {
            const double yaw_jitter = rng.next_in(-0.02, 0.02);
            const double pitch_jitter = rng.next_in(-0.02, 0.02);
            roll = rng.next_in(-0.02, 0.02);
            const double base_yaw = std::atan2(forward.y, forward.x) + yaw_jitter;
            forward = Vec3{std::cos(base_yaw) * std::cos(pitch_jitter),
                           std::sin(base_yaw) * std::cos(pitch_jitter),
                           std::sin(pitch_jitter)};
            center = Vec3{rng.next_in(-0.05, 0.05), rng.next_in(-0.05, 0.05),
                          rng.next_in(-0.05, 0.05)};
        }
        cams.emplace_back(k, spec.fx, spec.fy, spec.width / 2.0, spec.height / 2.0,
                          detail::look_extrinsic(center, forward, roll), spec.width,
                          spec.height);
    }
    return cams;
}

/// Random rig for randomized equivalence suites: cameras scattered near the
/// ego origin with arbitrary yaw, mild pitch/roll, and varying focals.
inline std::vector<CameraModel> random_rig(uint64_t seed, uint32_t num_cams, uint32_t width,
                                           uint32_t height) {
    if (num_cams == 0) {
        throw ArgumentError("random_rig: need at least one camera");
    }
    Xoshiro256ss rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<CameraModel> cams;
    cams.reserve(num_cams);
    for (uint32_t k = 0; k < num_cams; ++k) {
        const double yaw = rng.next_in(0.0, 2.0 * 3.14159265358979323846);
        const double pitch = rng.next_in(-0.25, 0.25);
        const double roll = rng.next_in(-0.15, 0.15);
        const Vec3 forward{std::cos(yaw) * std::cos(pitch), std::sin(yaw) * std::cos(pitch),
                           std::sin(pitch)};
        const Vec3 center{rng.next_in(-1.5, 1.5), rng.next_in(-1.5, 1.5),
                          rng.next_in(-0.5, 0.5)};
        const double fx = rng.next_in(0.45, 0.95) * width;
        const double fy = rng.next_in(0.45, 0.95) * height;
        cams.emplace_back(k, fx, fy, width / 2.0, height / 2.0,
                          detail::look_extrinsic(center, forward, roll), width, height);
    }
    return cams;
}

/// Stack generator selection.
struct StackSpec {
    enum class Feature { kConstant, kCoordinate, kRandom };
    enum class Depth { kOnes, kSoftmaxRandom, kDeltaBin };

    Feature feature = Feature::kCoordinate;
    float constant_value = 1.0f;
    Depth depth = Depth::kOnes;
    uint32_t delta_bin = 0;
    uint32_t channels = 8;
    uint64_t seed = 0;
};

/// The coordinate-encoded feature value: a documented closed form over
/// (cam slot, u, v, channel), masked to 24 bits so the integer is exactly
/// representable as a float. Tests recompute it to check gathers against an
/// arithmetic-free oracle.
inline float coordinate_feature_value(uint32_t cam, uint32_t u, uint32_t v, uint32_t c) {
    const uint32_t code = ((cam * 131u + c) * 131071u + v) * 8191u + u;
    return float(code & 0xFFFFFFu);
}

inline FeatureStack make_feature_stack(const StackSpec& spec, uint32_t num_cams,
                                       uint32_t height, uint32_t width) {
    const uint32_t c = spec.channels;
    std::vector<float> values(uint64_t(num_cams) * height * width * c);
    Xoshiro256ss rng(spec.seed);
    uint64_t i = 0;
    for (uint32_t cam = 0; cam < num_cams; ++cam) {
        for (uint32_t v = 0; v < height; ++v) {
            for (uint32_t u = 0; u < width; ++u) {
                for (uint32_t ch = 0; ch < c; ++ch, ++i) {
                    switch (spec.feature) {
                        case StackSpec::Feature::kConstant:
                            values[i] = spec.constant_value;
                            break;
                        case StackSpec::Feature::kCoordinate:
                            values[i] = coordinate_feature_value(cam, u, v, ch);
                            break;
                        case StackSpec::Feature::kRandom:
                            values[i] = rng.next_float() * 2.0f - 1.0f;
                            break;
                    }
                }
            }
        }
    }
    return FeatureStack(num_cams, height, width, c, std::move(values));
}

inline DepthStack make_depth_stack(const StackSpec& spec, uint32_t num_cams, uint32_t num_bins,
                                   uint32_t height, uint32_t width) {
    std::vector<float> values(uint64_t(num_cams) * num_bins * height * width, 0.0f);
    Xoshiro256ss rng(spec.seed ^ 0xd1b54a32d192ed03ull);
    const auto offset = [&](uint32_t cam, uint32_t k, uint32_t v, uint32_t u) {
        return ((uint64_t(cam) * num_bins + k) * height + v) * width + u;
    };
    switch (spec.depth) {
        case StackSpec::Depth::kOnes:
            for (float& v : values) {
                v = 1.0f;
            }
            break;
        case StackSpec::Depth::kDeltaBin: {
            if (spec.delta_bin >= num_bins) {
                throw ArgumentError("make_depth_stack: delta bin out of range");
            }
            for (uint32_t cam = 0; cam < num_cams; ++cam) {
                for (uint32_t v = 0; v < height; ++v) {
                    for (uint32_t u = 0; u < width; ++u) {
                        values[offset(cam, spec.delta_bin, v, u)] = 1.0f;
                    }
                }
            }
            break;
        }
        case StackSpec::Depth::kSoftmaxRandom: {
            // Per-pixel softmax over D uniform logits; sums to 1 within
            // float rounding.
            std::vector<double> logits(num_bins);
            for (uint32_t cam = 0; cam < num_cams; ++cam) {
                for (uint32_t v = 0; v < height; ++v) {
                    for (uint32_t u = 0; u < width; ++u) {
                        double sum = 0.0;
                        for (uint32_t k = 0; k < num_bins; ++k) {
                            logits[k] = std::exp(rng.next_in(0.0, 4.0));
                            sum += logits[k];
                        }
                        for (uint32_t k = 0; k < num_bins; ++k) {
                            values[offset(cam, k, v, u)] = float(logits[k] / sum);
                        }
                    }
                }
            }
            break;
        }
    }
    return DepthStack(num_cams, num_bins, height, width, std::move(values));
}

/// Convenience pair generator matching a rig's image extent.
inline std::pair<FeatureStack, DepthStack> make_stacks(const StackSpec& spec,
                                                       const std::vector<CameraModel>& rig,
                                                       const DepthBinning& binning) {
    if (rig.empty()) {
        throw ArgumentError("make_stacks: rig is empty");
    }
    const uint32_t n = uint32_t(rig.size());
    const uint32_t w = rig.front().width;
    const uint32_t h = rig.front().height;
    return {make_feature_stack(spec, n, h, w),
            make_depth_stack(spec, n, binning.num_bins, h, w)};
}

}  // namespace bevlift
