#include "gtl/a51.hpp"

#include <algorithm>
#include <stdexcept>

namespace gtl {

CipherParams CipherParams::full() {
    CipherParams p;
    p.reg_len = {19, 22, 23};
    p.taps = {tap_mask({13, 16, 17, 18}), tap_mask({20, 21}), tap_mask({7, 20, 21, 22})};
    p.clock_bit = {8, 10, 10};
    p.output_bit = {18, 21, 22};
    p.mix_clocks = 100;
    p.key_bits = 64;
    p.frame_bits = 22;
    p.preset = Preset::full;
    return p;
}

CipherParams CipherParams::toy() {
    CipherParams p;
    p.reg_len = {7, 8, 9};
    p.taps = {tap_mask({5, 6}), tap_mask({6, 7}), tap_mask({4, 8})};
    p.clock_bit = {3, 4, 4};
    p.output_bit = {6, 7, 8};
    p.mix_clocks = 24;
    p.key_bits = 24;
    p.frame_bits = 8;
    p.preset = Preset::toy;
    return p;
}

CipherParams CipherParams::from_preset(Preset pr) {
    return pr == Preset::full ? full() : toy();
}

void CipherParams::validate() const {
    unsigned total = 0;
    for (unsigned i = 0; i < 3; ++i) {
        if (reg_len[i] == 0 || reg_len[i] > 32)
            throw std::invalid_argument("CipherParams: register length out of range");
        total += reg_len[i];
        if (clock_bit[i] >= reg_len[i] || output_bit[i] >= reg_len[i])
            throw std::invalid_argument("CipherParams: clock/output bit outside register");
        if (taps[i] == 0 || (taps[i] & ~reg_mask(i)) != 0)
            throw std::invalid_argument("CipherParams: tap outside register");
    }
    if (total > 64) throw std::invalid_argument("CipherParams: state wider than 64 bits");
    if (key_bits == 0 || key_bits > 64 || frame_bits == 0 || frame_bits > 32)
        throw std::invalid_argument("CipherParams: key/frame width out of range");
}

uint64_t pack_state(const CipherParams& p, const CipherState& s) {
    return (static_cast<uint64_t>(s.r1) << (p.reg_len[1] + p.reg_len[2])) |
           (static_cast<uint64_t>(s.r2) << p.reg_len[2]) | s.r3;
}

CipherState unpack_state(const CipherParams& p, uint64_t v) {
    CipherState s;
    s.r3 = static_cast<uint32_t>(v & p.reg_mask(2));
    s.r2 = static_cast<uint32_t>((v >> p.reg_len[2]) & p.reg_mask(1));
    s.r1 = static_cast<uint32_t>((v >> (p.reg_len[1] + p.reg_len[2])) & p.reg_mask(0));
    return s;
}

bool state_valid(const CipherParams& p, const CipherState& s) {
    return (s.r1 & ~p.reg_mask(0)) == 0 && (s.r2 & ~p.reg_mask(1)) == 0 &&
           (s.r3 & ~p.reg_mask(2)) == 0;
}

namespace {

inline uint32_t step_reg(uint32_t r, uint32_t taps, uint32_t mask) {
    uint32_t fb = parity32(r & taps);
    return ((r << 1) & mask) | fb;
}

inline void step_all(const CipherParams& p, CipherState& s) {
    s.r1 = step_reg(s.r1, p.taps[0], p.reg_mask(0));
    s.r2 = step_reg(s.r2, p.taps[1], p.reg_mask(1));
    s.r3 = step_reg(s.r3, p.taps[2], p.reg_mask(2));
}

inline unsigned majority_of(const CipherParams& p, const CipherState& s) {
    unsigned sum = ((s.r1 >> p.clock_bit[0]) & 1u) + ((s.r2 >> p.clock_bit[1]) & 1u) +
                   ((s.r3 >> p.clock_bit[2]) & 1u);
    return sum >= 2 ? 1u : 0u;
}

inline void majority_step(const CipherParams& p, CipherState& s) {
    unsigned maj = majority_of(p, s);
    if (((s.r1 >> p.clock_bit[0]) & 1u) == maj) s.r1 = step_reg(s.r1, p.taps[0], p.reg_mask(0));
    if (((s.r2 >> p.clock_bit[1]) & 1u) == maj) s.r2 = step_reg(s.r2, p.taps[1], p.reg_mask(1));
    if (((s.r3 >> p.clock_bit[2]) & 1u) == maj) s.r3 = step_reg(s.r3, p.taps[2], p.reg_mask(2));
}

inline uint8_t output_of(const CipherParams& p, const CipherState& s) {
    return static_cast<uint8_t>(((s.r1 >> p.output_bit[0]) ^ (s.r2 >> p.output_bit[1]) ^
                                 (s.r3 >> p.output_bit[2])) &
                                1u);
}

// State after loading (kc, frame) with regular clocking, before any mix
// clock. Linear in (kc, frame).
CipherState load_phase(const CipherParams& p, uint64_t kc, uint32_t frame) {
    CipherState s{};
    for (unsigned i = 0; i < p.key_bits; ++i) {
        step_all(p, s);
        uint32_t bit = static_cast<uint32_t>((kc >> i) & 1u);
        s.r1 ^= bit;
        s.r2 ^= bit;
        s.r3 ^= bit;
    }
    for (unsigned i = 0; i < p.frame_bits; ++i) {
        step_all(p, s);
        uint32_t bit = (frame >> i) & 1u;
        s.r1 ^= bit;
        s.r2 ^= bit;
        s.r3 ^= bit;
    }
    return s;
}

}  // namespace

CipherState key_setup(const CipherParams& p, const SessionKey& key, uint32_t frame) {
    if ((key.kc & ~p.key_mask()) != 0) throw std::out_of_range("key_setup: key out of range");
    if ((static_cast<uint64_t>(frame) & ~p.frame_mask()) != 0)
        throw std::out_of_range("key_setup: frame out of range");
    CipherState s = load_phase(p, key.kc, frame);
    for (unsigned i = 0; i < p.mix_clocks; ++i) majority_step(p, s);
    return s;
}

StepResult clock_forward(const CipherParams& p, const CipherState& s) {
    CipherState n = s;
    majority_step(p, n);
    return {n, output_of(p, n)};
}

BitVec keystream(const CipherParams& p, CipherState s, size_t n) {
    BitVec out(n);
    for (size_t i = 0; i < n; ++i) {
        majority_step(p, s);
        out[i] = output_of(p, s);
    }
    return out;
}

uint64_t keystream_window(const CipherParams& p, const CipherState& s0, unsigned width) {
    CipherState s = s0;
    uint64_t w = 0;
    for (unsigned i = 0; i < width; ++i) {
        majority_step(p, s);
        w |= static_cast<uint64_t>(output_of(p, s)) << i;
    }
    return w;
}

namespace {

// Inverts one register step: candidates r with step_reg(r) == next.
// The preset tap sets include the top bit, which makes the pre-image unique,
// but the generic case can yield zero or two.
inline unsigned unstep_reg(uint32_t next, uint32_t taps, unsigned len, uint32_t out[2]) {
    unsigned n = 0;
    uint32_t base = next >> 1;
    for (uint32_t top = 0; top <= 1; ++top) {
        uint32_t prev = base | (top << (len - 1));
        if (parity32(prev & taps) == (next & 1u)) out[n++] = prev;
    }
    return n;
}

}  // namespace

std::vector<CipherState> clock_backward(const CipherParams& p, const CipherState& t) {
    std::vector<CipherState> preds;
    uint32_t cand[3][2];
    unsigned ncand[3];
    for (unsigned i = 0; i < 3; ++i) {
        uint32_t regs[3] = {t.r1, t.r2, t.r3};
        ncand[i] = unstep_reg(regs[i], p.taps[i], p.reg_len[i], cand[i]);
    }
    // held = 3 means all registers stepped; otherwise exactly one was held.
    for (int held = 3; held >= 0; --held) {
        unsigned counts[3];
        for (unsigned i = 0; i < 3; ++i) counts[i] = (static_cast<int>(i) == held) ? 1 : ncand[i];
        if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0) continue;
        for (unsigned a = 0; a < counts[0]; ++a)
            for (unsigned b = 0; b < counts[1]; ++b)
                for (unsigned c = 0; c < counts[2]; ++c) {
                    CipherState s;
                    s.r1 = (held == 0) ? t.r1 : cand[0][a];
                    s.r2 = (held == 1) ? t.r2 : cand[1][b];
                    s.r3 = (held == 2) ? t.r3 : cand[2][c];
                    unsigned maj = majority_of(p, s);
                    uint32_t regs[3] = {s.r1, s.r2, s.r3};
                    bool ok = true;
                    for (unsigned i = 0; i < 3; ++i) {
                        bool stepped = (static_cast<int>(i) != held);
                        bool would_step = (((regs[i] >> p.clock_bit[i]) & 1u) == maj);
                        if (stepped != would_step) {
                            ok = false;
                            break;
                        }
                    }
                    if (ok && clock_forward(p, s).state == t) preds.push_back(s);
                }
    }
    std::sort(preds.begin(), preds.end());
    preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
    return preds;
}

namespace {

// GF(2) solver for the load phase: pack(load_phase(kc, frame)) =
// A*kc ^ B*frame with A given by its key-bit columns. Solves A*x = v and
// enumerates the kernel so every consistent key is reported.
struct LoadSolver {
    unsigned width;     // state width
    unsigned key_bits;
    std::vector<uint64_t> cols;        // A columns, cols[j] = A*e_j
    std::vector<uint64_t> pivot_row;   // reduced rows
    std::vector<uint64_t> pivot_comb;  // key combination producing each row
    std::vector<int> pivot_bit;
    std::vector<uint64_t> kernel;

    LoadSolver(const CipherParams& p) : width(p.state_width()), key_bits(p.key_bits) {
        cols.resize(key_bits);
        for (unsigned j = 0; j < key_bits; ++j)
            cols[j] = pack_state(p, load_phase(p, 1ull << j, 0));
        // Column-space elimination: each processed column is either absorbed
        // into the pivot set or contributes a kernel vector.
        for (unsigned j = 0; j < key_bits; ++j) {
            uint64_t row = cols[j];
            uint64_t comb = 1ull << j;
            for (size_t k = 0; k < pivot_row.size(); ++k) {
                if ((row >> pivot_bit[k]) & 1u) {
                    row ^= pivot_row[k];
                    comb ^= pivot_comb[k];
                }
            }
            if (row == 0) {
                kernel.push_back(comb);
            } else {
                int bit = 63 - __builtin_clzll(row);
                pivot_row.push_back(row);
                pivot_comb.push_back(comb);
                pivot_bit.push_back(bit);
            }
        }
    }

    // All x with A*x == v, up to a cap on kernel enumeration.
    std::vector<uint64_t> solve(uint64_t v) const {
        uint64_t r = v, x = 0;
        for (size_t k = 0; k < pivot_row.size(); ++k) {
            if ((r >> pivot_bit[k]) & 1u) {
                r ^= pivot_row[k];
                x ^= pivot_comb[k];
            }
        }
        if (r != 0) return {};
        std::vector<uint64_t> out;
        if (kernel.size() > 20)
            throw std::runtime_error("recover_key: load map kernel too large to enumerate");
        size_t n = 1ull << kernel.size();
        out.reserve(n);
        for (size_t m = 0; m < n; ++m) {
            uint64_t xi = x;
            for (size_t b = 0; b < kernel.size(); ++b)
                if ((m >> b) & 1u) xi ^= kernel[b];
            out.push_back(xi);
        }
        return out;
    }
};

}  // namespace

std::vector<SessionKey> recover_key(const CipherParams& p, const CipherState& state,
                                    uint32_t frame, uint32_t offset, uint64_t node_budget) {
    if ((static_cast<uint64_t>(frame) & ~p.frame_mask()) != 0)
        throw std::out_of_range("recover_key: frame out of range");

    const unsigned depth_goal = offset + p.mix_clocks;
    LoadSolver solver(p);
    const uint64_t frame_term = pack_state(p, load_phase(p, 0, frame));

    std::vector<SessionKey> found;
    uint64_t visited = 0;
    // Depth-first rollback over the majority-clock pre-image tree.
    std::vector<std::pair<CipherState, unsigned>> stack;
    stack.emplace_back(state, 0u);
    while (!stack.empty()) {
        auto [s, depth] = stack.back();
        stack.pop_back();
        if (++visited > node_budget) throw BudgetExceeded(node_budget);
        if (depth == depth_goal) {
            for (uint64_t kc : solver.solve(pack_state(p, s) ^ frame_term)) {
                SessionKey key{kc & p.key_mask(), false};
                CipherState check = key_setup(p, key, frame);
                for (uint32_t i = 0; i < offset; ++i) check = clock_forward(p, check).state;
                if (check == state) found.push_back(key);
            }
            continue;
        }
        for (const CipherState& prev : clock_backward(p, s)) stack.emplace_back(prev, depth + 1);
    }
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    return found;
}

}  // namespace gtl
