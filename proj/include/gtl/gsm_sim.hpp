#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtl/a51.hpp"

namespace gtl {

struct GsmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class AssignMode : uint8_t { early = 0, immediate = 1 };
enum class CipherAlgo : uint8_t { none = 0, a51 = 1, strong_opaque = 2 };

constexpr unsigned kPayloadBits = 114;
constexpr unsigned kSlotsPerFrame = 8;
constexpr uint64_t kSlotNanos = 576900;  // 576.9 us per time slot
constexpr unsigned kL2Bytes = 23;
constexpr unsigned kL2HeaderBytes = 2;
constexpr unsigned kInfoMax = kL2Bytes - kL2HeaderBytes;
constexpr unsigned kCodedBits = 456;  // 184 info + 16 crc + 28 fill, sent twice
constexpr unsigned kHalfBits = 228;
constexpr uint8_t kPadByte = 0x2b;

struct CellConfig {
    std::vector<uint16_t> arfcn_allocation;  // distinct, at most 64
    uint8_t hsn = 0;                         // 0..63
    uint8_t maio = 0;                        // < allocation size
    bool hopping_enabled = true;
    AssignMode assignment_mode = AssignMode::early;
    CipherAlgo cipher = CipherAlgo::a51;
    bool random_padding = false;
    bool weak_keys = false;

    void validate() const;
};

struct SessionConfig {
    CellConfig cell;
    Preset preset = Preset::toy;
    uint32_t traffic_frames = 8;  // L2 messages in the traffic phase
    uint32_t si_period = 16;      // every si_period-th traffic message is system_info

    void validate() const;
};

enum class L2Kind : uint8_t {
    system_info = 1,
    auth_request = 2,
    cipher_mode_command = 3,
    cipher_mode_complete = 4,
    assignment = 5,
    traffic = 6,
};

// info payload of the periodic system information message; fills the frame
// completely, so it stays predictable even under random padding.
extern const std::array<uint8_t, kInfoMax> kSysInfoPayload;

struct L2Frame {
    L2Kind kind = L2Kind::traffic;
    std::vector<uint8_t> info;  // at most kInfoMax bytes
};

struct Burst {
    uint32_t frame = 0;
    uint16_t arfcn = 0;
    uint8_t slot = 0;
    bool uplink = false;
    BitVec payload;       // exactly kPayloadBits bits
    uint64_t time_ns = 0; // frame * 8 * 576.9us + slot * 576.9us

    static uint64_t start_time_ns(uint32_t frame, uint8_t slot) {
        return (uint64_t(frame) * kSlotsPerFrame + slot) * kSlotNanos;
    }

    bool operator==(const Burst&) const = default;
};

struct TruthMessage {
    uint32_t frame_base = 0;
    bool uplink = false;
    L2Frame l2;
    bool enciphered = false;
};

struct GroundTruth {
    CellConfig cell;
    uint64_t secret = 0;
    uint64_t rand_challenge = 0;
    SessionKey kc;
    uint8_t slot = 0;
    uint16_t control_arfcn = 0;
    uint32_t si_phase = 0;
    uint32_t cipher_start_frame = 0;  // frame base of the first enciphered message
    uint32_t traffic_start_frame = 0;
    std::vector<TruthMessage> messages;
};

struct CaptureLog {
    uint64_t cell_id = 0;
    Preset preset = Preset::toy;
    std::vector<Burst> bursts;  // ordered by start time
    std::optional<GroundTruth> truth;
};

/// Hopping sequence: index into the allocation as a deterministic function
/// of (hsn, maio, frame, N). hsn = 0 is the cyclic sequence
/// (frame + maio) mod N; other HSNs mix the GSM frame-counter split
/// (T1, T2, T3) through an avalanche permutation.
uint16_t hop_arfcn(const CellConfig& cfg, uint32_t frame);
uint16_t hop_arfcn(const std::vector<uint16_t>& allocation, uint8_t hsn, uint8_t maio,
                   uint32_t frame);

/// Serializes an L2 frame to 23 bytes: kind, info length, info, padding.
/// Padding is repeated 0x2b, or uniform random bytes when random_padding.
std::array<uint8_t, kL2Bytes> pad_l2(const L2Frame& l2, bool random_padding,
                                     std::mt19937_64& rng);

/// Coded-frame model: 184 message bits, CRC-16, 28 fill bits (0x2b pattern,
/// random under random_padding), then the whole 228-bit half duplicated.
/// Bits are MSB-first within bytes. Throws GsmError for oversize info.
BitVec encode_frame(const L2Frame& l2, bool random_padding, std::mt19937_64& rng);

/// CRC and duplicate-half check plus header consistency; nullopt when the
/// frame does not decode.
std::optional<L2Frame> decode_frame(const BitVec& coded);

/// Keystream for one burst payload: the A5/1 half selected by direction,
/// an opaque keyed PRF stream for strong_opaque, or zeros for none.
BitVec cipher_stream(CipherAlgo algo, const CipherParams& params, const SessionKey& kc,
                     uint32_t frame, bool uplink);

/// Splits a coded frame into four 114-bit bursts on frames
/// frame_base .. frame_base+3 and applies the cipher stream per burst.
std::vector<BitVec> encipher(const BitVec& coded, CipherAlgo algo, const CipherParams& params,
                             const SessionKey& kc, uint32_t frame_base, bool uplink);

/// COMP128 stand-in: truncated keyed hash of the challenge; weak mode zeroes
/// the ten low key bits.
SessionKey derive_kc(uint64_t secret, uint64_t rand_challenge, bool weak, const CipherParams& p);

/// Scripted dialogue observed by a passive all-channel receiver:
/// system information, authentication, cipher mode transition, assignment
/// (enciphered under early assignment) and a hopping traffic phase. Fully
/// deterministic in (config, seed).
CaptureLog run_session(const SessionConfig& cfg, uint64_t seed);

/// Flips every payload bit independently with probability ber. Ground truth
/// is untouched; the CRC sits under the cipher, so corruption is undetectable
/// before decryption.
CaptureLog corrupt(const CaptureLog& log, double bit_error_rate, uint64_t seed);

/// The victim device model used by the challenge-replay demonstration. A
/// fresh_rand card models the hypothetical hardening where every derivation
/// run sees a new challenge.
struct SimCard {
    uint64_t secret = 0;
    bool weak = false;
    bool fresh_rand = false;

    SessionKey respond(uint64_t rand_challenge, const CipherParams& p) const;
};

struct ReplayWitness {
    SessionKey derived;
    uint64_t rand_challenge = 0;  // the replayed value from the capture
};

/// Re-runs key derivation against the recorded challenge. Throws GsmError
/// when the capture carries no readable auth request.
ReplayWitness replay_challenge(const CaptureLog& capture, const SimCard& sim);

}  // namespace gtl
