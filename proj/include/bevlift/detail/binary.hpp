#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "bevlift/errors.hpp"

namespace bevlift::detail {

// Little-endian byte stream helpers. Encoding is explicit byte-by-byte so
// the on-disk formats do not depend on host endianness.

inline void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }

inline void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(uint8_t(v & 0xFF));
    out.push_back(uint8_t((v >> 8) & 0xFF));
}

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(uint8_t((v >> (8 * i)) & 0xFF));
    }
}

inline void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(uint8_t((v >> (8 * i)) & 0xFF));
    }
}

inline void put_f32(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32(out, bits);
}

inline void put_f64(std::vector<uint8_t>& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

/// Bounds-checked little-endian reader over a byte buffer.
class ByteReader {
  public:
    ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

    size_t remaining() const { return size_ - pos_; }

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    uint16_t u16() {
        need(2);
        uint16_t v = uint16_t(data_[pos_]) | uint16_t(data_[pos_ + 1]) << 8;
        pos_ += 2;
        return v;
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= uint32_t(data_[pos_ + i]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= uint64_t(data_[pos_ + i]) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    float f32() {
        const uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    void bytes(uint8_t* out, size_t n) {
        need(n);
        std::memcpy(out, data_ + pos_, n);
        pos_ += n;
    }

  private:
    void need(size_t n) const {
        if (pos_ + n > size_) {
            throw FormatError("truncated stream");
        }
    }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

/// FNV-1a over a canonical byte encoding; used for rig fingerprints.
struct Fnv1a64 {
    uint64_t state = 0xcbf29ce484222325ull;

    void absorb(const std::vector<uint8_t>& bytes) {
        for (uint8_t b : bytes) {
            state ^= b;
            state *= 0x100000001b3ull;
        }
    }

    uint64_t digest() const { return state; }
};

}  // namespace bevlift::detail
