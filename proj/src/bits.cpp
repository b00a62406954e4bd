#include "gtl/bits.hpp"

#include <stdexcept>

namespace gtl {

std::string bits_to_hex(const BitVec& bits, size_t first, size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve((n + 3) / 4);
    for (size_t i = 0; i < n; i += 4) {
        unsigned nib = 0;
        for (unsigned j = 0; j < 4; ++j) {
            unsigned b = (i + j < n) ? (bits[first + i + j] & 1u) : 0u;
            nib = (nib << 1) | b;
        }
        out.push_back(digits[nib]);
    }
    return out;
}

bool hex_to_bits(const std::string& hex, size_t n, BitVec& out) {
    if (hex.size() != (n + 3) / 4) return false;
    out.assign(n, 0);
    for (size_t i = 0; i < hex.size(); ++i) {
        char c = hex[i];
        unsigned nib;
        if (c >= '0' && c <= '9') nib = static_cast<unsigned>(c - '0');
        else if (c >= 'a' && c <= 'f') nib = static_cast<unsigned>(c - 'a') + 10;
        else if (c >= 'A' && c <= 'F') nib = static_cast<unsigned>(c - 'A') + 10;
        else return false;
        for (unsigned j = 0; j < 4; ++j) {
            size_t bit = i * 4 + j;
            unsigned v = (nib >> (3 - j)) & 1u;
            if (bit < n) {
                out[bit] = static_cast<uint8_t>(v);
            } else if (v) {
                return false;  // spare bits must be zero
            }
        }
    }
    return true;
}

uint64_t bits_to_u64(const BitVec& bits, size_t first, unsigned width) {
    if (width > 64 || first + width > bits.size())
        throw std::out_of_range("bits_to_u64: window out of range");
    uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i)
        v |= static_cast<uint64_t>(bits[first + i] & 1u) << i;
    return v;
}

uint16_t crc16_ccitt(const uint8_t* data, size_t len) {
    uint16_t crc = 0xFFFF;
    for (size_t i = 0; i < len; ++i) {
        crc ^= static_cast<uint16_t>(data[i]) << 8;
        for (int b = 0; b < 8; ++b)
            crc = (crc & 0x8000) ? static_cast<uint16_t>((crc << 1) ^ 0x1021)
                                 : static_cast<uint16_t>(crc << 1);
    }
    return crc;
}

uint32_t crc32(const uint8_t* data, size_t len) {
    uint32_t crc = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i) {
        crc ^= data[i];
        for (int b = 0; b < 8; ++b)
            crc = (crc >> 1) ^ (0xEDB88320u & (~(crc & 1u) + 1u));
    }
    return ~crc;
}

}  // namespace gtl
