#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gtl/bits.hpp"

namespace gtl {

enum class Preset : uint32_t { full = 0, toy = 1 };

/// Geometry of a three-register majority-clocked stream cipher.
///
/// Bit order is LSB = bit 0 everywhere. A register steps by shifting left
/// one position and inserting the parity of its tapped bits at bit 0; the
/// output bit of the cipher is the XOR of the three output-tap bits taken
/// after clocking.
struct CipherParams {
    std::array<uint8_t, 3> reg_len{};     // bits per register, sum <= 64
    std::array<uint32_t, 3> taps{};       // feedback tap masks
    std::array<uint8_t, 3> clock_bit{};   // majority-clock control bit index
    std::array<uint8_t, 3> output_bit{};  // output tap index
    uint32_t mix_clocks = 0;              // irregular clocks after load
    uint32_t key_bits = 0;
    uint32_t frame_bits = 0;
    Preset preset = Preset::full;

    static constexpr uint32_t tap_mask(std::initializer_list<unsigned> idx) {
        uint32_t m = 0;
        for (unsigned i : idx) m |= 1u << i;
        return m;
    }

    // R1 19 bits, taps 13/16/17/18, clock 8, out 18; R2 22 bits, taps 20/21,
    // clock 10, out 21; R3 23 bits, taps 7/20/21/22, clock 10, out 22.
    // 64-bit key, 22-bit frame, 100 mix clocks. This is the reverse-engineered
    // GSM cipher; 228 keystream bits per frame (114 downlink, 114 uplink).
    static CipherParams full();

    // Shrunk geometry with a 24-bit state (7/8/9 registers), 24-bit key,
    // 8-bit frame, 24 mix clocks. Small enough that exhaustive enumeration
    // and full-coverage tables are desk-scale experiments.
    static CipherParams toy();

    static CipherParams from_preset(Preset p);

    uint32_t reg_mask(unsigned i) const { return static_cast<uint32_t>(width_mask(reg_len[i])); }
    unsigned state_width() const { return reg_len[0] + reg_len[1] + reg_len[2]; }
    uint64_t key_mask() const { return width_mask(key_bits); }
    uint64_t frame_mask() const { return width_mask(frame_bits); }

    // Throws std::invalid_argument when a tap, clock or output index falls
    // outside its register, or the state is wider than 64 bits.
    void validate() const;

    bool operator==(const CipherParams&) const = default;
};

/// A point in the cipher's state space.
struct CipherState {
    uint32_t r1 = 0, r2 = 0, r3 = 0;

    bool operator==(const CipherState&) const = default;
    bool operator<(const CipherState& o) const {
        if (r1 != o.r1) return r1 < o.r1;
        if (r2 != o.r2) return r2 < o.r2;
        return r3 < o.r3;
    }
};

/// Session key; `weak` marks the provider policy of zeroing the ten
/// low-order key bits.
struct SessionKey {
    uint64_t kc = 0;
    bool weak = false;

    bool operator==(const SessionKey&) const = default;
    bool operator<(const SessionKey& o) const { return kc < o.kc; }
};

constexpr unsigned kWeakZeroBits = 10;

inline SessionKey weaken(uint64_t kc) {
    return SessionKey{kc & ~width_mask(kWeakZeroBits), true};
}

// Packing of a state into an integer: r1 in the high bits, r3 in the low
// bits. This is the value the trade-off tables index by.
uint64_t pack_state(const CipherParams& p, const CipherState& s);
CipherState unpack_state(const CipherParams& p, uint64_t v);

bool state_valid(const CipherParams& p, const CipherState& s);

/// Load key and frame bits LSB-first with regular clocking, then run
/// `mix_clocks` majority-clocked steps. Throws std::out_of_range when
/// `frame` (or `kc`) exceeds its configured width.
CipherState key_setup(const CipherParams& p, const SessionKey& kc, uint32_t frame);

struct StepResult {
    CipherState state;
    uint8_t output;  // XOR of output taps after clocking
};

/// One majority-clocked step. Registers whose clock bit agrees with the
/// majority of the three clock bits are stepped.
StepResult clock_forward(const CipherParams& p, const CipherState& s);

/// n forward outputs; the caller's state is not mutated.
BitVec keystream(const CipherParams& p, CipherState s, size_t n);

/// First `width` keystream bits packed LSB-first; the hot path for table
/// generation and lookup.
uint64_t keystream_window(const CipherParams& p, const CipherState& s, unsigned width);

/// Exactly the set { s : clock_forward(p, s).state == t }. Empty for states
/// with no predecessor; at most four entries for the preset geometries.
std::vector<CipherState> clock_backward(const CipherParams& p, const CipherState& t);

constexpr uint64_t kDefaultNodeBudget = 1ull << 22;

/// Thrown when the backward search would visit more states than allowed;
/// recovery never fails silently.
struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(uint64_t budget)
        : std::runtime_error("recover_key: node budget exceeded"), budget(budget) {}
    uint64_t budget;
};

/// Rolls `state` back `offset` output steps plus the mix clocks, inverts the
/// linear load phase for the given frame, and returns every key whose
/// forward recomputation reproduces `state`. `offset` counts keystream bits
/// produced after setup before `state` was reached.
std::vector<SessionKey> recover_key(const CipherParams& p, const CipherState& state,
                                    uint32_t frame, uint32_t offset,
                                    uint64_t node_budget = kDefaultNodeBudget);

}  // namespace gtl
