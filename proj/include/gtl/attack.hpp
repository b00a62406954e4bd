#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gtl/gsm_sim.hpp"
#include "gtl/tmto.hpp"

namespace gtl {

enum class PlaintextSource : uint32_t { padding = 0, system_info = 1, protocol_script = 2 };

/// Guessed coded bits for one enciphered frame. `known[i]` marks positions
/// the eavesdropper can predict from protocol structure alone; `value`
/// holds the predicted bits there.
struct PlaintextGuess {
    uint32_t frame_base = 0;
    bool uplink = false;
    PlaintextSource source = PlaintextSource::protocol_script;
    BitVec value;  // kCodedBits entries
    BitVec known;  // kCodedBits entries, 1 = position predicted
};

/// The attacker's parse of a capture: bursts plus script landmarks, built
/// strictly from over-the-air content. It deliberately cannot hold ground
/// truth, which keeps every attack path oracle-free by construction.
struct AttackerView {
    uint64_t cell_id = 0;
    Preset preset = Preset::toy;
    std::vector<Burst> bursts;

    // landmarks recovered from the cleartext phase
    CipherAlgo cipher = CipherAlgo::none;
    bool random_padding = false;  // inferred from cleartext padding bytes
    uint8_t slot = 0;
    uint16_t control_arfcn = 0;
    uint32_t cipher_start_frame = 0;   // frame base of cipher_mode_complete
    uint32_t traffic_start_frame = 0;
    std::optional<L2Frame> clear_assignment;  // present under immediate assignment
    uint64_t rand_challenge = 0;
    bool has_auth = false;

    static AttackerView analyze(const CaptureLog& capture);

    const Burst* find_burst(uint32_t frame, bool uplink) const;
    /// Frame bases of the enciphered phase that have captured bursts,
    /// ascending, with the observed direction.
    std::vector<std::pair<uint32_t, bool>> enciphered_positions() const;
};

std::vector<PlaintextGuess> extract_known_plaintext(const AttackerView& view);

/// One sample per alignment of every run of >= sample_width consecutive
/// known bits inside a burst's keystream half; capture order.
std::vector<KeystreamSample> derive_samples(const AttackerView& view,
                                            const std::vector<PlaintextGuess>& guesses,
                                            unsigned sample_width);

struct TranscriptEntry {
    uint32_t frame_base = 0;
    bool uplink = false;
    L2Kind kind = L2Kind::traffic;
    std::vector<uint8_t> info;

    bool operator==(const TranscriptEntry&) const = default;
};

struct Transcript {
    std::vector<TranscriptEntry> entries;
    uint32_t crc_failures = 0;
    uint32_t missing_bursts = 0;
    std::optional<CellConfig> hop;  // hopping parameters recovered on the way
};

enum class CrackOutcome : uint8_t {
    key_found = 0,
    not_covered = 1,      // samples exhausted without a verified key
    budget_exhausted = 2,
    no_samples = 3,
};

struct CrackOptions {
    uint64_t sample_budget = 0;  // 0 = unlimited
    unsigned threads = 1;
    uint64_t node_budget = kDefaultNodeBudget;
};

struct AttackReport {
    CrackOutcome outcome = CrackOutcome::no_samples;
    uint64_t samples_tried = 0;
    std::optional<SessionKey> key_found;
    int64_t winning_sample = -1;     // index into the sample list
    double lookup_seconds_mean = 0;  // per sample
    double lookup_seconds_max = 0;
    uint64_t padding_samples = 0;    // census by source tag
    uint64_t script_samples = 0;
    uint32_t decrypted_frames = 0;
    Transcript transcript;
};

/// Stage two and three of the eavesdrop: looks every sample up in the
/// tables, rolls candidate states back to session keys and accepts the
/// first key that decrypts an independent frame (duplicate halves equal and
/// CRC valid). Wrong or corrupted samples can only fail, never mislead.
AttackReport crack_session(const AttackerView& view, const std::vector<KeystreamSample>& samples,
                           const std::vector<TmtoTable>& tables, const CrackOptions& opts = {});

/// Full decode with a verified key: recovers hop parameters (decrypting the
/// assignment under early assignment), follows the sequence across the
/// all-channel log, reassembles and decodes every enciphered frame.
Transcript dehop_decrypt(const AttackerView& view, const SessionKey& kc);

struct ReplayReport {
    ReplayWitness witness;
    Transcript transcript;
    uint32_t enciphered_positions = 0;  // frames the capture offered
};

/// Downgrade demonstration: obtains the session key by replaying the
/// recorded challenge against the victim SIM model, then decrypts the
/// strong-cipher session with it. Key reuse across ciphers is the whole
/// story; the strong cipher never gets attacked.
ReplayReport downgrade_replay_demo(const AttackerView& view, const SimCard& sim);

}  // namespace gtl
