#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gtl {

// A bit string with explicit indices; bit 0 is the first bit produced or
// transmitted. Stored one bit per byte for clarity, packed only at the I/O
// boundaries.
using BitVec = std::vector<uint8_t>;

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr uint64_t width_mask(unsigned bits) {
    return bits >= 64 ? ~0ull : ((1ull << bits) - 1);
}

inline uint32_t parity32(uint32_t x) {
    return static_cast<uint32_t>(__builtin_parity(x));
}

// splitmix64 finalizer; the standard avalanche mix.
inline uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

// Packs bits[first..first+n) MSB-first into hex characters (n need not be a
// multiple of 4; trailing bits of the last nibble are zero).
std::string bits_to_hex(const BitVec& bits, size_t first, size_t n);

// Inverse of bits_to_hex; returns false on a non-hex character or when the
// spare bits of the final nibble are nonzero.
bool hex_to_bits(const std::string& hex, size_t n, BitVec& out);

// Reads bits[first..first+width) as an integer, bit (first+i) -> bit i.
uint64_t bits_to_u64(const BitVec& bits, size_t first, unsigned width);

// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF), used by the coded-frame
// model and nowhere else.
uint16_t crc16_ccitt(const uint8_t* data, size_t len);

// CRC-32 (reflected, poly 0xEDB88320), used for file-header integrity.
uint32_t crc32(const uint8_t* data, size_t len);

}  // namespace gtl
