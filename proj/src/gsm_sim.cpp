#include "gtl/gsm_sim.hpp"

#include <algorithm>

namespace gtl {

const std::array<uint8_t, kInfoMax> kSysInfoPayload = {
    0x59, 0x06, 0x1e, 0x8f, 0x10, 0x3c, 0x41, 0x32, 0x25, 0x5a, 0x77,
    0x08, 0x93, 0x64, 0xd1, 0x0b, 0xc6, 0x2e, 0x70, 0x4d, 0x1f};

void CellConfig::validate() const {
    if (arfcn_allocation.empty()) throw GsmError("cell: arfcn allocation must not be empty");
    if (arfcn_allocation.size() > 64) throw GsmError("cell: at most 64 carriers");
    auto sorted = arfcn_allocation;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw GsmError("cell: allocation values must be distinct");
    if (hsn > 63) throw GsmError("cell: hsn must be 0..63");
    if (maio >= arfcn_allocation.size()) throw GsmError("cell: maio must index the allocation");
}

void SessionConfig::validate() const {
    cell.validate();
    if (si_period == 0) throw GsmError("session: si_period must be >= 1");
    // the assignment message carries the allocation as explicit carrier
    // numbers, which caps it at (kInfoMax - 3) / 2 entries
    if (cell.arfcn_allocation.size() > (kInfoMax - 3) / 2)
        throw GsmError("session: allocation too large for the assignment message");
    CipherParams p = CipherParams::from_preset(preset);
    // 6 control-phase messages plus traffic, 4 frames each, must fit the
    // frame counter (TOY uses an 8-bit frame number)
    uint64_t frames_needed = 64 + (uint64_t(traffic_frames) + 7) * 4;
    if (frames_needed > p.frame_mask())
        throw GsmError("session: traffic_frames does not fit the frame counter");
}

uint16_t hop_arfcn(const std::vector<uint16_t>& allocation, uint8_t hsn, uint8_t maio,
                   uint32_t frame) {
    size_t n = allocation.size();
    if (n == 0) throw GsmError("hop_arfcn: empty allocation");
    size_t idx;
    if (hsn == 0) {
        idx = (frame + maio) % n;
    } else {
        // the GSM frame-counter split (T1, T2, T3) feeds an avalanche mix;
        // the standard's table permutation is replaced by mix64
        uint64_t t1 = frame / (26 * 51);
        uint64_t t2 = frame % 26;
        uint64_t t3 = frame % 51;
        uint64_t x = uint64_t(hsn) * kGolden ^ (t1 * 0xD1342543DE82EF95ull) ^ (t2 << 32) ^ t3;
        idx = (mix64(x) + maio) % n;
    }
    return allocation[idx];
}

uint16_t hop_arfcn(const CellConfig& cfg, uint32_t frame) {
    if (!cfg.hopping_enabled) throw GsmError("hop_arfcn: hopping disabled");
    return hop_arfcn(cfg.arfcn_allocation, cfg.hsn, cfg.maio, frame);
}

std::array<uint8_t, kL2Bytes> pad_l2(const L2Frame& l2, bool random_padding,
                                     std::mt19937_64& rng) {
    if (l2.info.size() > kInfoMax) throw GsmError("encode_frame: info exceeds 21 bytes");
    std::array<uint8_t, kL2Bytes> bytes{};
    bytes[0] = static_cast<uint8_t>(l2.kind);
    bytes[1] = static_cast<uint8_t>(l2.info.size());
    std::copy(l2.info.begin(), l2.info.end(), bytes.begin() + kL2HeaderBytes);
    for (size_t i = kL2HeaderBytes + l2.info.size(); i < kL2Bytes; ++i)
        bytes[i] = random_padding ? static_cast<uint8_t>(rng() & 0xff) : kPadByte;
    return bytes;
}

BitVec encode_frame(const L2Frame& l2, bool random_padding, std::mt19937_64& rng) {
    auto bytes = pad_l2(l2, random_padding, rng);
    BitVec coded(kCodedBits, 0);
    auto set_byte = [&coded](unsigned bit0, uint8_t v) {
        for (unsigned b = 0; b < 8; ++b) coded[bit0 + b] = (v >> (7 - b)) & 1u;
    };
    for (unsigned i = 0; i < kL2Bytes; ++i) set_byte(8 * i, bytes[i]);
    uint16_t crc = crc16_ccitt(bytes.data(), kL2Bytes);
    set_byte(184, static_cast<uint8_t>(crc >> 8));
    set_byte(192, static_cast<uint8_t>(crc & 0xff));
    // 28 fill bits: the 0x2b pattern truncated, or random bits when the
    // padding countermeasure is on
    if (random_padding) {
        uint64_t r = rng();
        for (unsigned b = 0; b < 28; ++b) coded[200 + b] = (r >> b) & 1u;
    } else {
        for (unsigned b = 0; b < 28; ++b) coded[200 + b] = (kPadByte >> (7 - (b & 7))) & 1u;
    }
    std::copy(coded.begin(), coded.begin() + kHalfBits, coded.begin() + kHalfBits);
    return coded;
}

std::optional<L2Frame> decode_frame(const BitVec& coded) {
    if (coded.size() != kCodedBits) return std::nullopt;
    for (unsigned b = 0; b < kHalfBits; ++b)
        if (coded[b] != coded[kHalfBits + b]) return std::nullopt;
    uint8_t bytes[kL2Bytes + 2];
    for (unsigned i = 0; i < kL2Bytes + 2; ++i) {
        uint8_t v = 0;
        for (unsigned b = 0; b < 8; ++b) v = static_cast<uint8_t>((v << 1) | (coded[8 * i + b] & 1u));
        bytes[i] = v;
    }
    uint16_t crc = crc16_ccitt(bytes, kL2Bytes);
    if (bytes[kL2Bytes] != static_cast<uint8_t>(crc >> 8) ||
        bytes[kL2Bytes + 1] != static_cast<uint8_t>(crc & 0xff))
        return std::nullopt;
    if (bytes[0] < 1 || bytes[0] > 6 || bytes[1] > kInfoMax) return std::nullopt;
    L2Frame l2;
    l2.kind = static_cast<L2Kind>(bytes[0]);
    l2.info.assign(bytes + kL2HeaderBytes, bytes + kL2HeaderBytes + bytes[1]);
    return l2;
}

BitVec cipher_stream(CipherAlgo algo, const CipherParams& params, const SessionKey& kc,
                     uint32_t frame, bool uplink) {
    BitVec ks(kPayloadBits, 0);
    switch (algo) {
        case CipherAlgo::none:
            break;
        case CipherAlgo::a51: {
            CipherState s = key_setup(params, kc, frame);
            BitVec full = keystream(params, s, 2 * kPayloadBits);
            unsigned base = uplink ? kPayloadBits : 0;
            std::copy(full.begin() + base, full.begin() + base + kPayloadBits, ks.begin());
            break;
        }
        case CipherAlgo::strong_opaque: {
            // keyed PRF stream standing in for A5/3; knowing kc is the only
            // way to reproduce it
            uint64_t x = mix64(kc.kc ^ kGolden * (uint64_t(frame) * 2 + (uplink ? 1 : 0) + 1));
            for (unsigned i = 0; i < kPayloadBits; ++i) {
                if (i % 64 == 0) x = mix64(x + kGolden);
                ks[i] = (x >> (i % 64)) & 1u;
            }
            break;
        }
    }
    return ks;
}

std::vector<BitVec> encipher(const BitVec& coded, CipherAlgo algo, const CipherParams& params,
                             const SessionKey& kc, uint32_t frame_base, bool uplink) {
    if (coded.size() != kCodedBits) throw GsmError("encipher: coded frame must be 456 bits");
    std::vector<BitVec> bursts(4);
    for (unsigned i = 0; i < 4; ++i) {
        BitVec ks = cipher_stream(algo, params, kc, frame_base + i, uplink);
        bursts[i].resize(kPayloadBits);
        for (unsigned b = 0; b < kPayloadBits; ++b)
            bursts[i][b] = (coded[kPayloadBits * i + b] ^ ks[b]) & 1u;
    }
    return bursts;
}

SessionKey derive_kc(uint64_t secret, uint64_t rand_challenge, bool weak, const CipherParams& p) {
    uint64_t kc = mix64(secret ^ mix64(rand_challenge + kGolden)) & p.key_mask();
    if (weak) kc &= ~width_mask(kWeakZeroBits);
    return SessionKey{kc, weak};
}

namespace {

struct SessionBuilder {
    const SessionConfig& cfg;
    CipherParams params;
    std::mt19937_64 rng;
    CaptureLog log;
    GroundTruth truth;
    uint32_t frame = 0;

    SessionBuilder(const SessionConfig& c, uint64_t seed)
        : cfg(c), params(CipherParams::from_preset(c.preset)), rng(seed) {
        log.preset = c.preset;
        log.cell_id = mix64(seed ^ kGolden);
        truth.cell = c.cell;
        truth.secret = rng();
        truth.slot = static_cast<uint8_t>(rng() % kSlotsPerFrame);
        truth.control_arfcn = c.cell.arfcn_allocation[0];
        truth.si_phase = static_cast<uint32_t>(rng() % c.si_period);
        frame = static_cast<uint32_t>(rng() % 32);
    }

    void emit(const L2Frame& l2, bool uplink, bool enciphered, bool traffic_phase) {
        BitVec coded = encode_frame(l2, cfg.cell.random_padding, rng);
        CipherAlgo algo = enciphered ? cfg.cell.cipher : CipherAlgo::none;
        std::vector<BitVec> payloads = encipher(coded, algo, params, truth.kc, frame, uplink);
        for (unsigned i = 0; i < 4; ++i) {
            Burst b;
            b.frame = frame + i;
            b.slot = truth.slot;
            b.uplink = uplink;
            b.arfcn = (traffic_phase && cfg.cell.hopping_enabled) ? hop_arfcn(cfg.cell, b.frame)
                                                                  : truth.control_arfcn;
            b.payload = std::move(payloads[i]);
            b.time_ns = Burst::start_time_ns(b.frame, b.slot);
            log.bursts.push_back(std::move(b));
        }
        truth.messages.push_back(TruthMessage{frame, uplink, l2, enciphered});
        frame += 4;
    }

    CaptureLog build() {
        // broadcast phase, cleartext on the control carrier
        L2Frame si{L2Kind::system_info,
                   std::vector<uint8_t>(kSysInfoPayload.begin(), kSysInfoPayload.end())};
        emit(si, false, false, false);
        emit(si, false, false, false);

        truth.rand_challenge = rng();
        truth.kc = derive_kc(truth.secret, truth.rand_challenge, cfg.cell.weak_keys, params);
        L2Frame auth{L2Kind::auth_request, {}};
        for (int i = 7; i >= 0; --i)
            auth.info.push_back(static_cast<uint8_t>(truth.rand_challenge >> (8 * i)));
        emit(auth, false, false, false);

        L2Frame assign{L2Kind::assignment, {}};
        assign.info.push_back(cfg.cell.hsn);
        assign.info.push_back(cfg.cell.maio);
        assign.info.push_back(cfg.cell.hopping_enabled ? 1 : 0);
        assign.info.push_back(static_cast<uint8_t>(cfg.cell.arfcn_allocation.size()));
        for (uint16_t a : cfg.cell.arfcn_allocation) {
            assign.info.push_back(static_cast<uint8_t>(a >> 8));
            assign.info.push_back(static_cast<uint8_t>(a & 0xff));
        }

        if (cfg.cell.assignment_mode == AssignMode::immediate)
            emit(assign, false, false, false);

        emit(L2Frame{L2Kind::cipher_mode_command, {static_cast<uint8_t>(cfg.cell.cipher)}},
             false, false, false);

        truth.cipher_start_frame = frame;
        emit(L2Frame{L2Kind::cipher_mode_complete, {}}, true, true, false);

        if (cfg.cell.assignment_mode == AssignMode::early) emit(assign, false, true, false);

        truth.traffic_start_frame = frame;
        for (uint32_t t = 0; t < cfg.traffic_frames; ++t) {
            if (t % cfg.si_period == truth.si_phase) {
                emit(si, false, true, true);
            } else {
                size_t len = 10 + rng() % (kInfoMax - 10 + 1);
                L2Frame tr{L2Kind::traffic, {}};
                tr.info.reserve(len);
                for (size_t i = 0; i < len; ++i) tr.info.push_back(static_cast<uint8_t>(rng()));
                emit(tr, t % 2 == 1, true, true);
            }
        }
        log.truth = std::move(truth);
        return std::move(log);
    }
};

}  // namespace

CaptureLog run_session(const SessionConfig& cfg, uint64_t seed) {
    cfg.validate();
    SessionBuilder b(cfg, seed);
    return b.build();
}

CaptureLog corrupt(const CaptureLog& log, double bit_error_rate, uint64_t seed) {
    if (bit_error_rate < 0.0 || bit_error_rate > 1.0)
        throw GsmError("corrupt: bit error rate must be in [0, 1]");
    CaptureLog out = log;
    std::mt19937_64 rng(seed);
    for (Burst& b : out.bursts)
        for (auto& bit : b.payload) {
            double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            if (u < bit_error_rate) bit ^= 1u;
        }
    return out;
}

SessionKey SimCard::respond(uint64_t rand_challenge, const CipherParams& p) const {
    // fresh_rand models a derivation salted with a value the attacker cannot
    // replay; deterministic here so experiments reproduce
    uint64_t effective = fresh_rand ? mix64(rand_challenge ^ 0xF5E5D5C5B5A59585ull)
                                    : rand_challenge;
    return derive_kc(secret, effective, weak, p);
}

ReplayWitness replay_challenge(const CaptureLog& capture, const SimCard& sim) {
    CipherParams params = CipherParams::from_preset(capture.preset);
    // reassemble cleartext messages and find the auth request
    std::vector<const Burst*> by_frame;
    for (const Burst& b : capture.bursts) by_frame.push_back(&b);
    std::optional<uint64_t> rand_challenge;
    for (size_t i = 0; i + 3 < by_frame.size() && !rand_challenge; ++i) {
        const Burst* b0 = by_frame[i];
        if (b0->uplink) continue;
        BitVec coded;
        coded.reserve(kCodedBits);
        bool ok = true;
        for (unsigned j = 0; j < 4; ++j) {
            const Burst* bj = i + j < by_frame.size() ? by_frame[i + j] : nullptr;
            if (!bj || bj->frame != b0->frame + j || bj->uplink != b0->uplink) {
                ok = false;
                break;
            }
            coded.insert(coded.end(), bj->payload.begin(), bj->payload.end());
        }
        if (!ok) continue;
        auto l2 = decode_frame(coded);
        if (l2 && l2->kind == L2Kind::auth_request && l2->info.size() >= 8) {
            uint64_t r = 0;
            for (int k = 0; k < 8; ++k) r = (r << 8) | l2->info[static_cast<size_t>(k)];
            rand_challenge = r;
        }
    }
    if (!rand_challenge) throw GsmError("replay_challenge: no auth request in capture");
    return ReplayWitness{sim.respond(*rand_challenge, params), *rand_challenge};
}

}  // namespace gtl
