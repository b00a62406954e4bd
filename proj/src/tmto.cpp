#include "gtl/tmto.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

namespace gtl {

void TmtoParams::validate() const {
    cipher.validate();
    if (sample_width != cipher.state_width())
        throw std::invalid_argument("TmtoParams: sample_width must equal the state width");
    if (colors == 0) throw std::invalid_argument("TmtoParams: colors must be >= 1");
    if (dp_mask_bits >= sample_width)
        throw std::invalid_argument("TmtoParams: dp_mask_bits must be below sample_width");
    if (max_steps_per_color == 0)
        throw std::invalid_argument("TmtoParams: max_steps_per_color must be >= 1");
    if (round_constants.size() != colors)
        throw std::invalid_argument("TmtoParams: need one round constant per color");
    for (size_t i = 0; i < round_constants.size(); ++i)
        for (size_t j = i + 1; j < round_constants.size(); ++j)
            if ((round_constants[i] & value_mask()) == (round_constants[j] & value_mask()))
                throw std::invalid_argument("TmtoParams: round constants collide");
    if (space == SpaceMode::weak_key && cipher.key_bits != sample_width)
        throw std::invalid_argument("TmtoParams: weak-key tables need key width == sample width");
}

std::vector<uint64_t> TmtoParams::default_round_constants(unsigned colors, unsigned width,
                                                          uint64_t table_id) {
    uint64_t family = table_id ? mix64(table_id * kGolden) : 0;
    std::vector<uint64_t> rc(colors);
    for (unsigned c = 0; c < colors; ++c)
        rc[c] = ((uint64_t(c) + 1) * kGolden ^ family) & width_mask(width);
    return rc;
}

TmtoParams TmtoParams::defaults(const CipherParams& cipher, uint64_t table_id, SpaceMode space) {
    TmtoParams p;
    p.cipher = cipher;
    p.sample_width = cipher.state_width();
    p.colors = 4;
    p.dp_mask_bits = 4;
    p.max_steps_per_color = 1ull << 10;
    p.round_constants = default_round_constants(p.colors, p.sample_width, table_id);
    p.table_id = table_id;
    p.space = space;
    return p;
}

bool TmtoParams::compatible_with(const TmtoParams& o) const {
    // round constants intentionally differ per table id within one set
    return cipher == o.cipher && sample_width == o.sample_width && colors == o.colors &&
           dp_mask_bits == o.dp_mask_bits && max_steps_per_color == o.max_steps_per_color &&
           space == o.space;
}

uint64_t chain_image(const TmtoParams& p, uint64_t x) {
    if (p.space == SpaceMode::weak_key) {
        CipherState s = key_setup(p.cipher, SessionKey{x & p.space_mask(), true}, 0);
        return keystream_window(p.cipher, s, p.sample_width);
    }
    return keystream_window(p.cipher, unpack_state(p.cipher, x), p.sample_width);
}

uint64_t f_color(const TmtoParams& p, uint64_t x, uint32_t color) {
    return (chain_image(p, x) ^ p.round_constants[color]) & p.space_mask();
}

std::optional<ChainRecord> generate_chain(const TmtoParams& p, uint64_t start) {
    uint64_t v = start;
    for (uint32_t c = 0; c < p.colors; ++c) {
        uint64_t steps = 0;
        for (;;) {
            v = f_color(p, v, c);
            ++steps;
            if (p.is_dp(v)) break;
            if (steps >= p.max_steps_per_color) return std::nullopt;
        }
    }
    return ChainRecord{start, v};
}

uint64_t start_point(const TmtoParams& p, uint64_t seed, uint64_t index) {
    uint64_t x = seed ^ ((p.table_id + 1) * kGolden);
    x = mix64(x + (index + 1) * kGolden);
    return x & p.space_mask();
}

namespace {

void sort_and_dedupe(std::vector<ChainRecord>& recs, uint64_t* merged) {
    std::sort(recs.begin(), recs.end(), [](const ChainRecord& a, const ChainRecord& b) {
        return a.end != b.end ? a.end < b.end : a.start < b.start;
    });
    // keep the smallest start per end point
    std::vector<ChainRecord> out;
    out.reserve(recs.size());
    for (const ChainRecord& r : recs) {
        if (!out.empty() && out.back().end == r.end) {
            if (merged) ++*merged;
            continue;
        }
        out.push_back(r);
    }
    recs.swap(out);
}

unsigned effective_threads(unsigned threads) {
    if (threads != 0) return threads;
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

}  // namespace

TmtoTable build_table(const TmtoParams& p, uint64_t chain_count, uint64_t seed, unsigned threads,
                      GenStats* stats) {
    p.validate();
    if (chain_count == 0) throw std::invalid_argument("build_table: chain_count must be >= 1");
    auto t0 = std::chrono::steady_clock::now();

    unsigned nthreads = effective_threads(threads);
    // one slot per chain index keeps the result independent of scheduling
    std::vector<ChainRecord> slots(chain_count);
    std::vector<uint8_t> ok(chain_count, 0);

    auto worker = [&](uint64_t lo, uint64_t hi) {
        for (uint64_t i = lo; i < hi; ++i) {
            if (auto rec = generate_chain(p, start_point(p, seed, i))) {
                slots[i] = *rec;
                ok[i] = 1;
            }
        }
    };
    if (nthreads <= 1 || chain_count < 2 * nthreads) {
        worker(0, chain_count);
    } else {
        std::vector<std::thread> pool;
        uint64_t stripe = (chain_count + nthreads - 1) / nthreads;
        for (unsigned t = 0; t < nthreads; ++t) {
            uint64_t lo = t * stripe, hi = std::min(chain_count, lo + stripe);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    TmtoTable table;
    table.params = p;
    uint64_t overflowed = 0;
    table.records.reserve(chain_count);
    for (uint64_t i = 0; i < chain_count; ++i) {
        if (ok[i]) table.records.push_back(slots[i]);
        else ++overflowed;
    }
    uint64_t merged = 0;
    sort_and_dedupe(table.records, &merged);

    if (stats) {
        stats->requested = chain_count;
        stats->kept = table.records.size();
        stats->merged = merged;
        stats->overflowed = overflowed;
        stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    // 1% regeneration spot check on every build
    uint64_t sample = std::max<uint64_t>(1, table.records.size() / 100);
    if (!verify_table(table, sample, seed ^ kGolden))
        throw std::runtime_error("build_table: regeneration spot check failed");
    return table;
}

bool verify_table(const TmtoTable& t, uint64_t count, uint64_t seed) {
    if (t.records.empty()) return true;
    uint64_t n = t.records.size();
    if (count == 0 || count >= n) {
        for (const ChainRecord& r : t.records) {
            auto rec = generate_chain(t.params, r.start);
            if (!rec || rec->end != r.end) return false;
        }
        return true;
    }
    uint64_t x = seed;
    for (uint64_t i = 0; i < count; ++i) {
        x = mix64(x + kGolden);
        const ChainRecord& r = t.records[x % n];
        auto rec = generate_chain(t.params, r.start);
        if (!rec || rec->end != r.end) return false;
    }
    return true;
}

namespace {

// Walks from a value that is already the output of f_color at `color`
// through the remaining segments; returns the would-be end point, or
// nothing when a segment overflows (stored chains never overflow).
std::optional<uint64_t> walk_to_end(const TmtoParams& p, uint64_t v, uint32_t color) {
    for (uint32_t c = color; c < p.colors; ++c) {
        uint64_t steps = (c == color) ? 1 : 0;
        if (c != color || !p.is_dp(v)) {
            for (;;) {
                if (steps >= p.max_steps_per_color) return std::nullopt;
                v = f_color(p, v, c);
                ++steps;
                if (p.is_dp(v)) break;
            }
        }
    }
    return v;
}

// Scans a stored chain for non-terminal values whose image equals `window`.
void collect_preimages(const TmtoParams& p, uint64_t start, uint64_t window,
                       std::vector<uint64_t>& out) {
    uint64_t v = start;
    for (uint32_t c = 0; c < p.colors; ++c) {
        uint64_t steps = 0;
        for (;;) {
            if (chain_image(p, v) == window) out.push_back(v);
            uint64_t next = f_color(p, v, c);
            ++steps;
            v = next;
            if (p.is_dp(v)) break;
            if (steps >= p.max_steps_per_color) return;  // defensive; not a stored chain
        }
    }
}

}  // namespace

std::vector<uint64_t> lookup_window(const std::vector<TmtoTable>& tables, uint64_t window) {
    std::vector<uint64_t> hits;
    for (const TmtoTable& t : tables) {
        const TmtoParams& p = t.params;
        uint64_t w = window & p.value_mask();
        for (int32_t c = static_cast<int32_t>(p.colors) - 1; c >= 0; --c) {
            // assume the sample's pre-image sits in segment c
            uint64_t v = (w ^ p.round_constants[c]) & p.space_mask();
            auto end = walk_to_end(p, v, static_cast<uint32_t>(c));
            if (!end) continue;
            auto lo = std::lower_bound(
                t.records.begin(), t.records.end(), *end,
                [](const ChainRecord& r, uint64_t e) { return r.end < e; });
            if (lo != t.records.end() && lo->end == *end)
                collect_preimages(p, lo->start, w, hits);
        }
    }
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    return hits;
}

std::vector<CipherState> lookup(const std::vector<TmtoTable>& tables,
                                const KeystreamSample& sample) {
    std::vector<CipherState> states;
    if (tables.empty()) return states;
    if (tables.front().params.space != SpaceMode::state_space)
        throw std::invalid_argument("lookup: state-space tables required");
    for (uint64_t v : lookup_window(tables, sample.bits))
        states.push_back(unpack_state(tables.front().params.cipher, v));
    return states;
}

std::pair<double, double> wilson_interval(uint64_t k, uint64_t n) {
    if (n == 0) return {0.0, 1.0};
    const double z = 1.959963984540054;  // 95%
    double phat = double(k) / double(n);
    double z2 = z * z;
    double denom = 1.0 + z2 / double(n);
    double center = phat + z2 / (2.0 * double(n));
    double margin = z * std::sqrt(phat * (1.0 - phat) / double(n) + z2 / (4.0 * double(n) * double(n)));
    return {(center - margin) / denom, (center + margin) / denom};
}

CoverageResult coverage_measure(const std::vector<TmtoTable>& tables, uint64_t trials,
                                uint64_t seed) {
    if (trials == 0) throw std::invalid_argument("coverage_measure: trials must be >= 1");
    CoverageResult res;
    res.trials = trials;
    if (tables.empty()) {
        auto [lo, hi] = wilson_interval(0, trials);
        res.wilson_lo = lo;
        res.wilson_hi = hi;
        return res;
    }
    const TmtoParams& p = tables.front().params;
    uint64_t x = seed;
    for (uint64_t i = 0; i < trials; ++i) {
        x = mix64(x + kGolden);
        uint64_t value = x & p.space_mask();
        uint64_t window = chain_image(p, value);
        auto hits = lookup_window(tables, window);
        if (!hits.empty()) ++res.found;
        if (std::binary_search(hits.begin(), hits.end(), value)) ++res.recovered;
    }
    auto [lo, hi] = wilson_interval(res.recovered, res.trials);
    res.wilson_lo = lo;
    res.wilson_hi = hi;
    return res;
}

ExactCoverage coverage_exact(const std::vector<TmtoTable>& tables, bool with_window_census,
                             unsigned threads) {
    ExactCoverage res;
    if (tables.empty()) return res;
    const TmtoParams& p = tables.front().params;
    if (p.sample_width > 26)
        throw std::invalid_argument("coverage_exact: space too large to enumerate");
    unsigned space_bits = p.sample_width - p.dp_shift();
    res.space_size = 1ull << space_bits;

    auto idx_of = [&](uint64_t v) { return v >> p.dp_shift(); };
    std::vector<uint8_t> covered(res.space_size, 0);
    for (const TmtoTable& t : tables) {
        for (const ChainRecord& r : t.records) {
            uint64_t v = r.start;
            for (uint32_t c = 0; c < t.params.colors; ++c) {
                uint64_t steps = 0;
                for (;;) {
                    covered[idx_of(v)] = 1;  // non-terminal position
                    v = f_color(t.params, v, c);
                    ++steps;
                    if (t.params.is_dp(v)) break;
                    if (steps >= t.params.max_steps_per_color) break;
                }
            }
        }
    }
    uint64_t n = 0;
    for (uint8_t b : covered) n += b;
    res.covered_values = n;
    res.recoverable_values = n;

    if (with_window_census) {
        // mark the windows of covered values, then count every value whose
        // own window lands in that set
        std::vector<uint8_t> win(1ull << p.sample_width, 0);
        unsigned nthreads = effective_threads(threads);
        auto mark = [&](uint64_t lo, uint64_t hi) {
            for (uint64_t i = lo; i < hi; ++i)
                if (covered[i]) win[chain_image(p, i << p.dp_shift())] = 1;
        };
        std::vector<uint64_t> counts(nthreads, 0);
        auto census = [&](unsigned t, uint64_t lo, uint64_t hi) {
            uint64_t c = 0;
            for (uint64_t i = lo; i < hi; ++i)
                if (win[chain_image(p, i << p.dp_shift())]) ++c;
            counts[t] = c;
        };
        uint64_t stripe = (res.space_size + nthreads - 1) / nthreads;
        {
            std::vector<std::thread> pool;
            for (unsigned t = 0; t < nthreads; ++t) {
                uint64_t lo = t * stripe, hi = std::min<uint64_t>(res.space_size, lo + stripe);
                if (lo < hi) pool.emplace_back(mark, lo, hi);
            }
            for (auto& th : pool) th.join();
        }
        {
            std::vector<std::thread> pool;
            for (unsigned t = 0; t < nthreads; ++t) {
                uint64_t lo = t * stripe, hi = std::min<uint64_t>(res.space_size, lo + stripe);
                if (lo < hi) pool.emplace_back(census, t, lo, hi);
            }
            for (auto& th : pool) th.join();
        }
        uint64_t total = 0;
        for (uint64_t c : counts) total += c;
        res.recoverable_values = total;
    }
    return res;
}

// ---- file format --------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'G', 'T', 'M', 'T'};
constexpr uint32_t kVersion = 1;
constexpr size_t kHeaderSize = 64;

void put_u32(uint8_t* p, uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
void put_u64(uint8_t* p, uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
uint32_t get_u32(const uint8_t* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    return v;
}
uint64_t get_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace

void write_table(const TmtoTable& t, const std::filesystem::path& path, uint64_t seed) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw TableFormatError(TableError::io, "cannot open " + path.string());

    uint8_t h[kHeaderSize] = {0};
    std::memcpy(h, kMagic, 4);
    put_u32(h + 4, kVersion);
    put_u64(h + 8, t.params.table_id);
    put_u32(h + 16, static_cast<uint32_t>(t.params.cipher.preset));
    put_u32(h + 20, t.params.sample_width);
    put_u32(h + 24, t.params.colors);
    put_u32(h + 28, t.params.dp_mask_bits);
    put_u64(h + 32, t.params.max_steps_per_color);
    put_u64(h + 40, t.records.size());
    put_u64(h + 48, seed);
    put_u32(h + 56, static_cast<uint32_t>(t.params.space));
    put_u32(h + 60, crc32(h, 60));
    f.write(reinterpret_cast<const char*>(h), kHeaderSize);

    std::vector<uint8_t> buf(t.records.size() * 16);
    for (size_t i = 0; i < t.records.size(); ++i) {
        put_u64(buf.data() + 16 * i, t.records[i].end);
        put_u64(buf.data() + 16 * i + 8, t.records[i].start);
    }
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw TableFormatError(TableError::io, "short write to " + path.string());
}

TmtoTable read_table(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw TableFormatError(TableError::io, "cannot open " + path.string());
    f.seekg(0, std::ios::end);
    uint64_t size = static_cast<uint64_t>(f.tellg());
    f.seekg(0);
    if (size < kHeaderSize)
        throw TableFormatError(TableError::truncated, "file shorter than header");

    uint8_t h[kHeaderSize];
    f.read(reinterpret_cast<char*>(h), kHeaderSize);
    if (std::memcmp(h, kMagic, 4) != 0)
        throw TableFormatError(TableError::bad_magic, "bad magic");
    if (get_u32(h + 4) != kVersion)
        throw TableFormatError(TableError::bad_version, "unsupported version");
    if (get_u32(h + 60) != crc32(h, 60))
        throw TableFormatError(TableError::bad_header, "header checksum mismatch");

    uint32_t preset = get_u32(h + 16);
    uint32_t space = get_u32(h + 56);
    if (preset > 1) throw TableFormatError(TableError::bad_header, "unknown cipher preset");
    if (space > 1) throw TableFormatError(TableError::bad_header, "unknown space mode");

    TmtoTable t;
    t.params.cipher = CipherParams::from_preset(static_cast<Preset>(preset));
    t.params.table_id = get_u64(h + 8);
    t.params.sample_width = get_u32(h + 20);
    t.params.colors = get_u32(h + 24);
    t.params.dp_mask_bits = get_u32(h + 28);
    t.params.max_steps_per_color = get_u64(h + 32);
    t.params.space = static_cast<SpaceMode>(space);
    uint64_t chain_count = get_u64(h + 40);
    try {
        t.params.round_constants = TmtoParams::default_round_constants(
            t.params.colors, t.params.sample_width, t.params.table_id);
        t.params.validate();
    } catch (const std::invalid_argument& e) {
        throw TableFormatError(TableError::bad_header, e.what());
    }

    if (size != kHeaderSize + chain_count * 16)
        throw TableFormatError(TableError::truncated, "record area size mismatch");

    std::vector<uint8_t> buf(chain_count * 16);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw TableFormatError(TableError::truncated, "short read");
    t.records.resize(chain_count);
    for (uint64_t i = 0; i < chain_count; ++i) {
        t.records[i].end = get_u64(buf.data() + 16 * i);
        t.records[i].start = get_u64(buf.data() + 16 * i + 8);
        if (i > 0 && t.records[i].end <= t.records[i - 1].end)
            throw TableFormatError(TableError::unsorted, "record ends not strictly ascending");
        if (!t.params.is_dp(t.records[i].end) ||
            (t.records[i].end | t.records[i].start) & ~t.params.value_mask())
            throw TableFormatError(TableError::bad_record,
                                   "record violates the distinguished-point criterion");
    }
    return t;
}

std::vector<TmtoTable> load_table_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".gtmt") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<TmtoTable> tables;
    tables.reserve(files.size());
    for (const auto& f : files) tables.push_back(read_table(f));
    for (size_t i = 1; i < tables.size(); ++i)
        if (!tables[i].params.compatible_with(tables[0].params))
            throw TableFormatError(TableError::bad_header,
                                   "tables in " + dir.string() + " have mixed parameters");
    return tables;
}

}  // namespace gtl
