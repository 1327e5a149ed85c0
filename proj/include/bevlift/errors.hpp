#pragma once

#include <stdexcept>
#include <string>

namespace bevlift {

/// Bad call-site input (out-of-range index, non-finite point, empty rig, ...).
struct ArgumentError : std::invalid_argument {
    explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Structurally valid inputs that do not fit together (dimension mismatch,
/// mixed image extents, offsets that would overflow the index width).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or truncated file content (bad magic, version, sizes).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A persisted index graph does not match the rig it is being used with.
struct FingerprintError : std::runtime_error {
    explicit FingerprintError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Refusal to execute an operator graph that failed validation.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bevlift
