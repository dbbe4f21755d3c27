#ifndef SYSMEL_PRIMITIVE_ENCODING_HPP
#define SYSMEL_PRIMITIVE_ENCODING_HPP

#include "sysmel/object.hpp"

#include <cstring>

namespace sysmel {

/// Reduces value into the two's-complement range of a width-bits
/// integer (signed or unsigned).
inline BigInt wrapToWidth(const BigInt& value, int bits, bool isSigned) {
    BigInt modulus = BigInt(1) << bits;
    BigInt wrapped = value % modulus;
    if (wrapped < 0)
        wrapped += modulus;
    if (isSigned && wrapped >= (modulus >> 1))
        wrapped -= modulus;
    return wrapped;
}

/// Little-endian two's-complement encoding, bits/8 bytes.
inline std::vector<uint8_t> encodeIntegerLE(const BigInt& value, int bits) {
    BigInt v = wrapToWidth(value, bits, false);
    std::vector<uint8_t> bytes(size_t(bits / 8), 0);
    for (auto& b : bytes) {
        b = uint8_t(v & 0xff);
        v >>= 8;
    }
    return bytes;
}

inline BigInt decodeIntegerLE(const std::vector<uint8_t>& bytes, bool isSigned) {
    BigInt v = 0;
    for (size_t i = bytes.size(); i > 0; --i)
        v = (v << 8) | bytes[i - 1];
    if (isSigned && !bytes.empty() && (bytes.back() & 0x80))
        v -= BigInt(1) << (8 * bytes.size());
    return v;
}

inline std::vector<uint8_t> encodeFloatLE(double value, int bits) {
    std::vector<uint8_t> bytes;
    if (bits == 32) {
        float f = float(value);
        bytes.resize(4);
        std::memcpy(bytes.data(), &f, 4);
    } else {
        bytes.resize(8);
        std::memcpy(bytes.data(), &value, 8);
    }
    return bytes;
}

inline double decodeFloatLE(const std::vector<uint8_t>& bytes) {
    if (bytes.size() == 4) {
        float f;
        std::memcpy(&f, bytes.data(), 4);
        return double(f);
    }
    double d = 0;
    if (bytes.size() == 8)
        std::memcpy(&d, bytes.data(), 8);
    return d;
}

} // namespace sysmel

#endif
