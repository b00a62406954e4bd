#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtl/a51.hpp"

namespace gtl {

/// Value domain a table's chains walk over.
///  - state_space: values are packed cipher states; the link image is the
///    keystream window of the value loaded as a state.
///  - weak_key: values are session keys with the ten low bits zero; the link
///    image is the keystream window after key setup with frame 0. Tables in
///    this mode answer offset-zero windows only and exist to measure how much
///    the weakened key policy shrinks the search space.
enum class SpaceMode : uint32_t { state_space = 0, weak_key = 1 };

struct TmtoParams {
    CipherParams cipher;
    uint32_t sample_width = 0;   // equals cipher state width
    uint32_t colors = 1;         // R
    uint32_t dp_mask_bits = 0;   // k low-order zero bits end a segment
    uint64_t max_steps_per_color = 1;
    std::vector<uint64_t> round_constants;  // R values, pairwise distinct
    uint64_t table_id = 0;
    SpaceMode space = SpaceMode::state_space;

    uint64_t value_mask() const { return width_mask(sample_width); }
    // In weak-key space the low bits are pinned to zero, so the DP criterion
    // and the chain image are taken above them.
    unsigned dp_shift() const { return space == SpaceMode::weak_key ? kWeakZeroBits : 0; }
    uint64_t space_mask() const {
        return space == SpaceMode::weak_key ? (value_mask() & ~width_mask(kWeakZeroBits))
                                            : value_mask();
    }
    bool is_dp(uint64_t v) const {
        return ((v >> dp_shift()) & width_mask(dp_mask_bits)) == 0;
    }

    void validate() const;

    /// rc[c] = (c+1) * golden-ratio constant, truncated to the sample width.
    /// Nonzero table ids fold a per-table mix into the family; without it,
    /// same-function tables merge with each other and the set's coverage
    /// collapses toward a single table's.
    static std::vector<uint64_t> default_round_constants(unsigned colors, unsigned width,
                                                         uint64_t table_id = 0);

    /// Desk-scale defaults: R=4, k=4, t_max=2^10 for the given cipher. At
    /// 2^16 chains over the toy space this keeps a 4-table set inside a
    /// measurable 10-60% coverage band.
    static TmtoParams defaults(const CipherParams& cipher, uint64_t table_id = 0,
                               SpaceMode space = SpaceMode::state_space);

    bool compatible_with(const TmtoParams& o) const;
};

struct ChainRecord {
    uint64_t start = 0;
    uint64_t end = 0;
};

struct GenStats {
    uint64_t requested = 0;
    uint64_t kept = 0;
    uint64_t merged = 0;      // dropped for a duplicate end point
    uint64_t overflowed = 0;  // a color segment hit max_steps_per_color
    double seconds = 0.0;
};

struct TmtoTable {
    TmtoParams params;
    std::vector<ChainRecord> records;  // ascending by end, ends unique
};

/// Keystream image of a chain value under the table's space mode (no round
/// constant applied).
uint64_t chain_image(const TmtoParams& p, uint64_t x);

/// One chain link: image of x XORed with the round constant of `color`.
uint64_t f_color(const TmtoParams& p, uint64_t x, uint32_t color);

/// Walks all color segments from `start`. Within a segment f_color is
/// applied at least once and the DP test runs after each application; a
/// segment that reaches max_steps_per_color without a DP overflows and the
/// chain is discarded.
std::optional<ChainRecord> generate_chain(const TmtoParams& p, uint64_t start);

/// Deterministic start point for chain `index`; counter-mode mix of
/// (seed, table_id, index) so no start list needs to be stored.
uint64_t start_point(const TmtoParams& p, uint64_t seed, uint64_t index);

/// Builds chain_count chains from the counter generator, drops overflows,
/// sorts by end and keeps the lexicographically smallest start per end.
/// Output is bit-identical for any thread count.
TmtoTable build_table(const TmtoParams& p, uint64_t chain_count, uint64_t seed,
                      unsigned threads = 0, GenStats* stats = nullptr);

/// Regenerates `count` sampled records (all of them when count == 0) and
/// checks each end point; returns false on the first mismatch.
bool verify_table(const TmtoTable& t, uint64_t count = 0, uint64_t seed = 1);

/// All verified pre-image values for a keystream window: every returned v
/// satisfies chain_image(v) == window. Walks each color assumption from
/// R-1 down to 0, regenerates matching chains and forward-checks candidates,
/// so false alarms and corrupted windows can never surface.
std::vector<uint64_t> lookup_window(const std::vector<TmtoTable>& tables, uint64_t window);

struct KeystreamSample {
    uint64_t bits = 0;     // sample_width keystream bits, LSB-first
    uint32_t frame = 0;
    uint32_t offset = 0;   // window start inside the burst's keystream half
    bool uplink = false;
    // attacker bookkeeping, carried through reports
    uint32_t source = 0;   // PlaintextSource tag
};

/// State-space lookup of a recovered keystream sample.
std::vector<CipherState> lookup(const std::vector<TmtoTable>& tables,
                                const KeystreamSample& sample);

struct CoverageResult {
    uint64_t trials = 0;
    uint64_t recovered = 0;  // drawn value itself returned
    uint64_t found = 0;      // lookup returned anything
    double fraction() const { return trials ? double(recovered) / double(trials) : 0.0; }
    double found_fraction() const { return trials ? double(found) / double(trials) : 0.0; }
    double wilson_lo = 0.0, wilson_hi = 0.0;  // 95% interval on `fraction`
};

/// Monte-Carlo coverage: draws random values, asks lookup_window for the
/// value's own window and counts how often the drawn value is recovered.
CoverageResult coverage_measure(const std::vector<TmtoTable>& tables, uint64_t trials,
                                uint64_t seed);

struct ExactCoverage {
    uint64_t space_size = 0;
    uint64_t covered_values = 0;    // distinct non-terminal chain values
    uint64_t recoverable_values = 0;  // values whose window maps back to a covered value
    double covered_fraction() const {
        return space_size ? double(covered_values) / double(space_size) : 0.0;
    }
    double recoverable_fraction() const {
        return space_size ? double(recoverable_values) / double(space_size) : 0.0;
    }
};

/// Exhaustive census by walking every stored chain; feasible for sample
/// widths up to ~26 bits. `with_window_census` additionally enumerates the
/// whole space to count values whose window collides into the covered set.
ExactCoverage coverage_exact(const std::vector<TmtoTable>& tables,
                             bool with_window_census = false, unsigned threads = 0);

/// Wilson 95% score interval for k successes in n trials.
std::pair<double, double> wilson_interval(uint64_t k, uint64_t n);

// ---- table files -------------------------------------------------------
//
// Little-endian, 64-byte header:
//   0  magic "GTMT"        4  version u32 = 1
//   8  table_id u64       16  preset u32 (0 full, 1 toy)
//  20  sample_width u32   24  colors u32
//  28  dp_mask_bits u32   32  t_max u64
//  40  chain_count u64    48  seed u64
//  56  space_mode u32     60  header crc32 of bytes 0..59
// followed by chain_count records of (end u64, start u64), ascending end.

enum class TableError {
    io,
    bad_magic,
    bad_version,
    bad_header,   // field out of range or checksum mismatch
    truncated,
    unsorted,
    bad_record,   // an end point violating the DP criterion
};

struct TableFormatError : std::runtime_error {
    TableFormatError(TableError kind, const std::string& what)
        : std::runtime_error(what), kind(kind) {}
    TableError kind;
};

void write_table(const TmtoTable& t, const std::filesystem::path& path, uint64_t seed = 0);
TmtoTable read_table(const std::filesystem::path& path);

/// Loads every *.gtmt file in a directory, sorted by file name.
std::vector<TmtoTable> load_table_dir(const std::filesystem::path& dir);

}  // namespace gtl
