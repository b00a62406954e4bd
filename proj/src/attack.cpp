#include "gtl/attack.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace gtl {

namespace {

// Reassembles the four bursts of a message into coded bits; nullopt when a
// burst is missing.
std::optional<BitVec> reassemble(const AttackerView& view, uint32_t frame_base, bool uplink) {
    BitVec coded;
    coded.reserve(kCodedBits);
    for (unsigned i = 0; i < 4; ++i) {
        const Burst* b = view.find_burst(frame_base + i, uplink);
        if (!b) return std::nullopt;
        coded.insert(coded.end(), b->payload.begin(), b->payload.end());
    }
    return coded;
}

BitVec decrypt_coded(const BitVec& coded, CipherAlgo algo, const CipherParams& params,
                     const SessionKey& kc, uint32_t frame_base, bool uplink) {
    BitVec plain(kCodedBits);
    for (unsigned i = 0; i < 4; ++i) {
        BitVec ks = cipher_stream(algo, params, kc, frame_base + i, uplink);
        for (unsigned b = 0; b < kPayloadBits; ++b)
            plain[kPayloadBits * i + b] = (coded[kPayloadBits * i + b] ^ ks[b]) & 1u;
    }
    return plain;
}

// Encode of a fully scripted message with standard padding; the prediction
// baseline for guesses.
BitVec scripted_encode(const L2Frame& l2) {
    std::mt19937_64 rng(0);  // unused with standard padding
    return encode_frame(l2, false, rng);
}

}  // namespace

const Burst* AttackerView::find_burst(uint32_t frame, bool uplink) const {
    for (const Burst& b : bursts)
        if (b.frame == frame && b.uplink == uplink && b.slot == slot) return &b;
    return nullptr;
}

std::vector<std::pair<uint32_t, bool>> AttackerView::enciphered_positions() const {
    std::vector<std::pair<uint32_t, bool>> out;
    for (const Burst& b : bursts) {
        if (b.frame < cipher_start_frame) continue;
        uint32_t base = cipher_start_frame + (b.frame - cipher_start_frame) / 4 * 4;
        if (out.empty() || out.back().first != base) out.emplace_back(base, b.uplink);
    }
    return out;
}

AttackerView AttackerView::analyze(const CaptureLog& capture) {
    AttackerView v;
    v.cell_id = capture.cell_id;
    v.preset = capture.preset;
    v.bursts = capture.bursts;
    if (capture.bursts.empty()) throw GsmError("analyze: empty capture");
    v.slot = capture.bursts.front().slot;
    v.control_arfcn = capture.bursts.front().arfcn;

    // walk the cleartext phase; everything decodes until ciphering starts
    bool saw_cmd = false;
    size_t i = 0;
    std::vector<const Burst*> seq;
    for (const Burst& b : capture.bursts) seq.push_back(&b);
    while (i + 3 < seq.size() && !saw_cmd) {
        const Burst* b0 = seq[i];
        BitVec coded;
        bool contiguous = true;
        for (unsigned j = 0; j < 4; ++j) {
            if (seq[i + j]->frame != b0->frame + j || seq[i + j]->uplink != b0->uplink) {
                contiguous = false;
                break;
            }
            coded.insert(coded.end(), seq[i + j]->payload.begin(), seq[i + j]->payload.end());
        }
        if (!contiguous) {
            ++i;
            continue;
        }
        auto l2 = decode_frame(coded);
        if (!l2) {
            ++i;
            continue;
        }
        // padding policy is visible in any cleartext frame that carries
        // padding bytes
        for (unsigned byte = kL2HeaderBytes + static_cast<unsigned>(l2->info.size());
             byte < kL2Bytes; ++byte) {
            uint8_t pad = 0;
            for (unsigned b = 0; b < 8; ++b)
                pad = static_cast<uint8_t>((pad << 1) | coded[8 * byte + b]);
            if (pad != kPadByte) v.random_padding = true;
        }
        switch (l2->kind) {
            case L2Kind::auth_request:
                if (l2->info.size() >= 8) {
                    uint64_t r = 0;
                    for (int k = 0; k < 8; ++k) r = (r << 8) | l2->info[static_cast<size_t>(k)];
                    v.rand_challenge = r;
                    v.has_auth = true;
                }
                break;
            case L2Kind::assignment:
                v.clear_assignment = *l2;
                break;
            case L2Kind::cipher_mode_command:
                if (!l2->info.empty()) v.cipher = static_cast<CipherAlgo>(l2->info[0]);
                saw_cmd = true;
                v.cipher_start_frame = b0->frame + 4;
                break;
            default:
                break;
        }
        i += 4;
    }
    if (!saw_cmd) throw GsmError("analyze: no cipher mode command in capture");
    // cipher mode complete, then the enciphered assignment unless it came in
    // the clear
    v.traffic_start_frame = v.cipher_start_frame + (v.clear_assignment ? 4 : 8);
    return v;
}

std::vector<PlaintextGuess> extract_known_plaintext(const AttackerView& view) {
    std::vector<PlaintextGuess> guesses;

    // cipher mode complete at its fixed script position
    {
        L2Frame cmc{L2Kind::cipher_mode_complete, {}};
        BitVec coded = scripted_encode(cmc);
        PlaintextGuess script;
        script.frame_base = view.cipher_start_frame;
        script.uplink = true;
        script.source = PlaintextSource::protocol_script;
        script.value = coded;
        script.known.assign(kCodedBits, 0);
        for (unsigned half = 0; half < 2; ++half)
            for (unsigned b = 0; b < 8 * kL2HeaderBytes; ++b)
                script.known[half * kHalfBits + b] = 1;
        guesses.push_back(std::move(script));

        if (!view.random_padding) {
            PlaintextGuess pad;
            pad.frame_base = view.cipher_start_frame;
            pad.uplink = true;
            pad.source = PlaintextSource::padding;
            pad.value = coded;
            pad.known.assign(kCodedBits, 1);
            for (unsigned half = 0; half < 2; ++half)
                for (unsigned b = 0; b < 8 * kL2HeaderBytes; ++b)
                    pad.known[half * kHalfBits + b] = 0;
            guesses.push_back(std::move(pad));
        }
    }

    // periodic system information inside the enciphered phase: the schedule
    // phase is not observable, so every downlink position is a candidate;
    // wrong positions can only produce samples that fail verification
    L2Frame si{L2Kind::system_info,
               std::vector<uint8_t>(kSysInfoPayload.begin(), kSysInfoPayload.end())};
    BitVec si_coded = scripted_encode(si);
    for (auto [frame_base, uplink] : view.enciphered_positions()) {
        if (uplink || frame_base < view.traffic_start_frame) continue;
        PlaintextGuess g;
        g.frame_base = frame_base;
        g.uplink = false;
        g.source = PlaintextSource::system_info;
        g.value = si_coded;
        g.known.assign(kCodedBits, 0);
        // header, full info and CRC are fixed content; the fill bits are
        // padding-derived and survive only under standard padding
        for (unsigned half = 0; half < 2; ++half)
            for (unsigned b = 0; b < 200; ++b) g.known[half * kHalfBits + b] = 1;
        if (!view.random_padding)
            for (unsigned half = 0; half < 2; ++half)
                for (unsigned b = 200; b < kHalfBits; ++b) g.known[half * kHalfBits + b] = 1;
        guesses.push_back(std::move(g));
    }
    std::sort(guesses.begin(), guesses.end(),
              [](const PlaintextGuess& a, const PlaintextGuess& b) {
                  if (a.frame_base != b.frame_base) return a.frame_base < b.frame_base;
                  return static_cast<uint32_t>(a.source) < static_cast<uint32_t>(b.source);
              });
    return guesses;
}

std::vector<KeystreamSample> derive_samples(const AttackerView& view,
                                            const std::vector<PlaintextGuess>& guesses,
                                            unsigned sample_width) {
    std::vector<KeystreamSample> samples;
    for (const PlaintextGuess& g : guesses) {
        for (unsigned i = 0; i < 4; ++i) {
            const Burst* b = view.find_burst(g.frame_base + i, g.uplink);
            if (!b) continue;
            unsigned base = kPayloadBits * i;
            unsigned off = 0;
            while (off < kPayloadBits) {
                if (!g.known[base + off]) {
                    ++off;
                    continue;
                }
                unsigned run_end = off;
                while (run_end < kPayloadBits && g.known[base + run_end]) ++run_end;
                for (unsigned a = off; a + sample_width <= run_end; ++a) {
                    KeystreamSample s;
                    uint64_t bits = 0;
                    for (unsigned k = 0; k < sample_width; ++k) {
                        unsigned v = (b->payload[a + k] ^ g.value[base + a + k]) & 1u;
                        bits |= static_cast<uint64_t>(v) << k;
                    }
                    s.bits = bits;
                    s.frame = g.frame_base + i;
                    s.offset = a;
                    s.uplink = g.uplink;
                    s.source = static_cast<uint32_t>(g.source);
                    samples.push_back(s);
                }
                off = run_end;
            }
        }
    }
    return samples;
}

namespace {

// A candidate key is accepted only when it decodes an enciphered frame that
// did not produce the sample; self-confirmation is impossible.
bool verify_key(const AttackerView& view, const CipherParams& params, const SessionKey& kc,
                uint32_t sample_frame) {
    for (auto [frame_base, uplink] : view.enciphered_positions()) {
        if (sample_frame >= frame_base && sample_frame < frame_base + 4) continue;
        auto coded = reassemble(view, frame_base, uplink);
        if (!coded) continue;
        BitVec plain = decrypt_coded(*coded, view.cipher, params, kc, frame_base, uplink);
        return decode_frame(plain).has_value();
    }
    return false;
}

}  // namespace

AttackReport crack_session(const AttackerView& view, const std::vector<KeystreamSample>& samples,
                           const std::vector<TmtoTable>& tables, const CrackOptions& opts) {
    AttackReport report;
    for (const KeystreamSample& s : samples) {
        if (s.source == static_cast<uint32_t>(PlaintextSource::padding)) ++report.padding_samples;
        else ++report.script_samples;
    }
    if (samples.empty()) {
        report.outcome = CrackOutcome::no_samples;
        return report;
    }
    if (!tables.empty()) {
        if (tables.front().params.cipher.preset != view.preset)
            throw std::invalid_argument("crack_session: table preset does not match capture");
        if (tables.front().params.space != SpaceMode::state_space)
            throw std::invalid_argument("crack_session: state-space tables required");
    }
    const CipherParams params = CipherParams::from_preset(view.preset);
    uint64_t limit = opts.sample_budget ? std::min<uint64_t>(opts.sample_budget, samples.size())
                                        : samples.size();

    double total_s = 0;
    std::optional<SessionKey> key;
    int64_t winner = -1;

    auto try_sample = [&](const KeystreamSample& s) -> std::optional<SessionKey> {
        for (const CipherState& st : lookup(tables, s)) {
            uint32_t full_offset = (s.uplink ? kPayloadBits : 0) + s.offset;
            std::vector<SessionKey> keys;
            try {
                keys = recover_key(params, st, s.frame, full_offset, opts.node_budget);
            } catch (const BudgetExceeded&) {
                continue;  // counted as a miss, never a silent wrong answer
            }
            for (const SessionKey& k : keys)
                if (verify_key(view, params, k, s.frame)) return k;
        }
        return std::nullopt;
    };

    unsigned nthreads = opts.threads ? opts.threads : 1;
    uint64_t idx = 0;
    while (idx < limit && !key) {
        uint64_t block = std::min<uint64_t>(nthreads, limit - idx);
        std::vector<std::optional<SessionKey>> results(block);
        std::vector<double> secs(block, 0);
        auto run_one = [&](uint64_t j) {
            auto t0 = std::chrono::steady_clock::now();
            results[j] = try_sample(samples[idx + j]);
            secs[j] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        };
        if (block == 1) {
            run_one(0);
        } else {
            std::vector<std::thread> pool;
            for (uint64_t j = 0; j < block; ++j) pool.emplace_back(run_one, j);
            for (auto& t : pool) t.join();
        }
        // accept in sample order so the result matches a serial run
        for (uint64_t j = 0; j < block; ++j) {
            ++report.samples_tried;
            total_s += secs[j];
            report.lookup_seconds_max = std::max(report.lookup_seconds_max, secs[j]);
            if (results[j]) {
                key = results[j];
                winner = static_cast<int64_t>(idx + j);
                break;
            }
        }
        idx += block;
    }

    report.lookup_seconds_mean = report.samples_tried ? total_s / double(report.samples_tried) : 0;
    if (key) {
        report.outcome = CrackOutcome::key_found;
        report.key_found = key;
        report.winning_sample = winner;
        report.transcript = dehop_decrypt(view, *key);
        report.decrypted_frames = static_cast<uint32_t>(report.transcript.entries.size());
    } else if (opts.sample_budget && samples.size() > opts.sample_budget) {
        report.outcome = CrackOutcome::budget_exhausted;
    } else {
        report.outcome = CrackOutcome::not_covered;
    }
    return report;
}

Transcript dehop_decrypt(const AttackerView& view, const SessionKey& kc) {
    Transcript out;
    const CipherParams params = CipherParams::from_preset(view.preset);

    // hopping parameters: cleartext under immediate assignment, otherwise
    // decrypted from the assignment message that follows cipher mode complete
    std::optional<L2Frame> assignment = view.clear_assignment;
    if (!assignment) {
        uint32_t fb = view.cipher_start_frame + 4;
        auto coded = reassemble(view, fb, false);
        if (coded) {
            BitVec plain = decrypt_coded(*coded, view.cipher, params, kc, fb, false);
            if (auto l2 = decode_frame(plain); l2 && l2->kind == L2Kind::assignment)
                assignment = *l2;
            else
                ++out.crc_failures;
        } else {
            ++out.missing_bursts;
        }
    }
    CellConfig hop;
    bool have_hop = false;
    if (assignment && assignment->info.size() >= 4) {
        const auto& info = assignment->info;
        hop.hsn = info[0];
        hop.maio = info[1];
        hop.hopping_enabled = info[2] != 0;
        size_t n = info[3];
        if (info.size() >= 4 + 2 * n) {
            for (size_t k = 0; k < n; ++k)
                hop.arfcn_allocation.push_back(
                    static_cast<uint16_t>((info[4 + 2 * k] << 8) | info[5 + 2 * k]));
            have_hop = true;
            out.hop = hop;
        }
    }

    for (auto [frame_base, uplink] : view.enciphered_positions()) {
        bool traffic = frame_base >= view.traffic_start_frame;
        if (traffic && !have_hop) break;
        BitVec coded;
        coded.reserve(kCodedBits);
        bool complete = true;
        for (unsigned i = 0; i < 4; ++i) {
            uint32_t frame = frame_base + i;
            uint16_t arfcn = (traffic && hop.hopping_enabled)
                                 ? hop_arfcn(hop.arfcn_allocation, hop.hsn, hop.maio, frame)
                                 : view.control_arfcn;
            const Burst* b = view.find_burst(frame, uplink);
            if (!b || b->arfcn != arfcn) {
                ++out.missing_bursts;
                complete = false;
                break;
            }
            coded.insert(coded.end(), b->payload.begin(), b->payload.end());
        }
        if (!complete) continue;
        BitVec plain = decrypt_coded(coded, view.cipher, params, kc, frame_base, uplink);
        if (auto l2 = decode_frame(plain)) {
            out.entries.push_back(TranscriptEntry{frame_base, uplink, l2->kind, l2->info});
        } else {
            ++out.crc_failures;
        }
    }
    return out;
}

ReplayReport downgrade_replay_demo(const AttackerView& view, const SimCard& sim) {
    if (!view.has_auth) throw GsmError("replay demo: no auth request in capture");
    ReplayReport rep{ReplayWitness{sim.respond(view.rand_challenge,
                                               CipherParams::from_preset(view.preset)),
                                   view.rand_challenge},
                     {},
                     0};
    rep.enciphered_positions = static_cast<uint32_t>(view.enciphered_positions().size());
    rep.transcript = dehop_decrypt(view, rep.witness.derived);
    return rep;
}

}  // namespace gtl
