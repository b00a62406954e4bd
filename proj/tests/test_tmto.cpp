#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "gtl/tmto.hpp"

using namespace gtl;
namespace fs = std::filesystem;

namespace {

TmtoParams toy_params(uint64_t table_id = 0) {
    return TmtoParams::defaults(CipherParams::toy(), table_id);
}

// Straight-line reference walker, independent of generate_chain and of the
// production cipher kernel: the toy registers are spelled out inline.
std::optional<uint64_t> reference_chain_end(const TmtoParams& p, uint64_t start) {
    uint64_t v = start;
    for (uint32_t c = 0; c < p.colors; ++c) {
        uint64_t steps = 0;
        for (;;) {
            // image: 24 keystream bits of the toy cipher from raw state v
            uint32_t r1 = static_cast<uint32_t>(v >> 17) & 0x7f;
            uint32_t r2 = static_cast<uint32_t>(v >> 9) & 0xff;
            uint32_t r3 = static_cast<uint32_t>(v) & 0x1ff;
            uint64_t w = 0;
            for (int b = 0; b < 24; ++b) {
                int sum = ((r1 >> 3) & 1) + ((r2 >> 4) & 1) + ((r3 >> 4) & 1);
                int maj = sum >= 2;
                if (((r1 >> 3) & 1) == static_cast<uint32_t>(maj))
                    r1 = ((r1 << 1) & 0x7f) | (((r1 >> 5) ^ (r1 >> 6)) & 1);
                if (((r2 >> 4) & 1) == static_cast<uint32_t>(maj))
                    r2 = ((r2 << 1) & 0xff) | (((r2 >> 6) ^ (r2 >> 7)) & 1);
                if (((r3 >> 4) & 1) == static_cast<uint32_t>(maj))
                    r3 = ((r3 << 1) & 0x1ff) | (((r3 >> 4) ^ (r3 >> 8)) & 1);
                uint64_t bit = ((r1 >> 6) ^ (r2 >> 7) ^ (r3 >> 8)) & 1;
                w |= bit << b;
            }
            v = (w ^ p.round_constants[c]) & p.value_mask();
            ++steps;
            if ((v & width_mask(p.dp_mask_bits)) == 0) break;
            if (steps >= p.max_steps_per_color) return std::nullopt;
        }
    }
    return v;
}

}  // namespace

TEST_CASE("round constants are pairwise distinct and parameters validate") {
    TmtoParams p = toy_params();
    p.validate();
    CHECK(p.round_constants.size() == 4);
    TmtoParams bad = p;
    bad.round_constants[1] = bad.round_constants[0];
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.dp_mask_bits = 24;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("f_color: determinism, constant structure, oracle value") {
    TmtoParams p = toy_params();
    CHECK(f_color(p, 0x000001, 0) == f_color(p, 0x000001, 0));
    std::mt19937_64 rng(31);
    for (int i = 0; i < 50; ++i) {
        uint64_t x = rng() & p.value_mask();
        CHECK((f_color(p, x, 1) ^ f_color(p, x, 3)) ==
              ((p.round_constants[1] ^ p.round_constants[3]) & p.value_mask()));
    }
    // keystream image against the independent oracle path: state loaded
    // from the packed value, image = first 24 keystream bits
    CipherParams toy = CipherParams::toy();
    uint64_t x = 0x000001;
    uint64_t w = keystream_window(toy, unpack_state(toy, x), 24);
    CHECK(f_color(p, x, 0) == ((w ^ p.round_constants[0]) & p.value_mask()));
}

TEST_CASE("generate_chain: degenerate dp mask applies each color exactly once") {
    TmtoParams p = toy_params();
    p.dp_mask_bits = 0;  // every value is distinguished
    std::mt19937_64 rng(37);
    for (int i = 0; i < 20; ++i) {
        uint64_t start = rng() & p.value_mask();
        auto rec = generate_chain(p, start);
        REQUIRE(rec.has_value());
        uint64_t v = start;
        for (uint32_t c = 0; c < p.colors; ++c) v = f_color(p, v, c);
        CHECK(rec->end == v);
        CHECK(rec->start == start);
    }
}

TEST_CASE("generate_chain: a DP start still takes one step per color") {
    TmtoParams p = toy_params();
    uint64_t start = 0;  // low dp_mask_bits bits are zero: already distinguished
    REQUIRE(p.is_dp(start));
    auto rec = generate_chain(p, start);
    if (rec) CHECK(rec->end != start);
}

TEST_CASE("generate_chain: end matches the straight-line reference walker") {
    TmtoParams p = toy_params();
    auto got = generate_chain(p, 0x123456);
    auto want = reference_chain_end(p, 0x123456);
    REQUIRE(got.has_value() == want.has_value());
    if (got) CHECK(got->end == *want);

    std::mt19937_64 rng(41);
    for (int i = 0; i < 200; ++i) {
        uint64_t start = rng() & p.value_mask();
        auto a = generate_chain(p, start);
        auto b = reference_chain_end(p, start);
        REQUIRE(a.has_value() == b.has_value());
        if (a) CHECK(a->end == *b);
    }
}

TEST_CASE("build_table: single chain, determinism, thread independence") {
    TmtoParams p = toy_params();
    GenStats st;
    TmtoTable one = build_table(p, 1, 5, 1, &st);
    CHECK(one.records.size() <= 1);
    CHECK(st.requested == 1);

    TmtoTable a = build_table(p, 1u << 12, 99, 1);
    TmtoTable b = build_table(p, 1u << 12, 99, 7);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].start == b.records[i].start);
        CHECK(a.records[i].end == b.records[i].end);
    }
    // sorted with unique ends
    for (size_t i = 1; i < a.records.size(); ++i)
        CHECK(a.records[i].end > a.records[i - 1].end);
}

TEST_CASE("build_table: merge fraction tracks the reference walker") {
    TmtoParams p = toy_params();
    GenStats st;
    build_table(p, 1u << 12, 4242, 0, &st);

    // recompute the same table with the reference walker
    uint64_t kept = 0, merged = 0, overflowed = 0;
    std::vector<uint64_t> ends;
    for (uint64_t i = 0; i < (1u << 12); ++i) {
        auto end = reference_chain_end(p, start_point(p, 4242, i));
        if (!end) {
            ++overflowed;
            continue;
        }
        ends.push_back(*end);
    }
    std::sort(ends.begin(), ends.end());
    for (size_t i = 0; i < ends.size(); ++i) {
        if (i && ends[i] == ends[i - 1]) ++merged;
        else ++kept;
    }
    CHECK(st.overflowed == overflowed);
    CHECK(st.kept == kept);
    CHECK(st.merged == merged);
    double ours = double(st.merged) / double(st.requested);
    double ref = double(merged) / double(1u << 12);
    CHECK(ours == doctest::Approx(ref).epsilon(0.2));
}

TEST_CASE("every stored record regenerates") {
    TmtoTable t = build_table(toy_params(), 1u << 10, 1234);
    CHECK(verify_table(t));  // 100% in tests
}

TEST_CASE("lookup: planted mid-chain value is always recovered") {
    TmtoParams p = toy_params();
    std::vector<TmtoTable> tables{build_table(p, 1u << 12, 77)};
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const auto& recs = tables[0].records;
        const ChainRecord& rec = recs[rng() % recs.size()];
        // walk to a random non-terminal position
        std::vector<uint64_t> values;
        uint64_t v = rec.start;
        for (uint32_t c = 0; c < p.colors; ++c) {
            uint64_t steps = 0;
            for (;;) {
                values.push_back(v);
                v = f_color(p, v, c);
                ++steps;
                if (p.is_dp(v)) break;
                REQUIRE(steps < p.max_steps_per_color);
            }
        }
        uint64_t planted = values[rng() % values.size()];
        uint64_t window = chain_image(p, planted);
        auto hits = lookup_window(tables, window);
        CHECK(std::binary_search(hits.begin(), hits.end(), planted));
        // soundness: every hit reproduces the window
        for (uint64_t h : hits) CHECK(chain_image(p, h) == window);
    }
}

TEST_CASE("lookup: a flipped bit can never return the planted state") {
    TmtoParams p = toy_params();
    std::vector<TmtoTable> tables{build_table(p, 1u << 12, 78)};
    std::mt19937_64 rng(47);
    const auto& recs = tables[0].records;
    for (int trial = 0; trial < 50; ++trial) {
        const ChainRecord& rec = recs[rng() % recs.size()];
        uint64_t planted = rec.start;
        uint64_t window = chain_image(p, planted);
        uint64_t corrupted = window ^ (1ull << (rng() % p.sample_width));
        auto hits = lookup_window(tables, corrupted);
        CHECK(!std::binary_search(hits.begin(), hits.end(), planted));
        for (uint64_t h : hits) CHECK(chain_image(p, h) == corrupted);
    }
}

TEST_CASE("lookup: degenerate exhaustive table finds every sample") {
    // all 2^24 states as one-step chains; duplicate ends collapse but every
    // window keeps at least one pre-image
    TmtoParams p = toy_params();
    p.colors = 1;
    p.dp_mask_bits = 0;
    p.max_steps_per_color = 1;
    p.round_constants = TmtoParams::default_round_constants(1, p.sample_width);

    TmtoTable t;
    t.params = p;
    const uint32_t space = 1u << 24;
    std::vector<ChainRecord> recs(space);
    for (uint32_t s = 0; s < space; ++s) recs[s] = ChainRecord{s, f_color(p, s, 0)};
    std::sort(recs.begin(), recs.end(), [](const ChainRecord& a, const ChainRecord& b) {
        return a.end != b.end ? a.end < b.end : a.start < b.start;
    });
    for (const ChainRecord& r : recs)
        if (t.records.empty() || t.records.back().end != r.end) t.records.push_back(r);
    std::vector<TmtoTable> tables{std::move(t)};

    std::mt19937_64 rng(53);
    for (int i = 0; i < 2000; ++i) {
        uint64_t state = rng() & p.value_mask();
        auto hits = lookup_window(tables, chain_image(p, state));
        CHECK(!hits.empty());
    }
    CoverageResult cov = coverage_measure(tables, 2000, 99);
    CHECK(cov.found_fraction() == 1.0);
}

TEST_CASE("coverage: empty table set is zero") {
    CoverageResult cov = coverage_measure({}, 100, 1);
    CHECK(cov.fraction() == 0.0);
    CHECK(cov.found_fraction() == 0.0);
}

TEST_CASE("coverage: Monte-Carlo sits inside the exact census interval") {
    TmtoParams p = toy_params();
    p.max_steps_per_color = 1u << 8;  // shorter chains keep this test quick
    std::vector<TmtoTable> tables;
    for (uint64_t id = 0; id < 2; ++id) {
        TmtoParams pi = p;
        pi.table_id = id;
        tables.push_back(build_table(pi, 1u << 12, 7));
    }
    ExactCoverage exact = coverage_exact(tables);
    CoverageResult mc = coverage_measure(tables, 4000, 123);
    CHECK(exact.covered_fraction() > 0.01);
    CHECK(mc.wilson_lo <= exact.covered_fraction());
    CHECK(mc.wilson_hi >= exact.covered_fraction());
    // exhaustive window census agrees with the nonempty-lookup rate
    ExactCoverage win = coverage_exact(tables, true);
    auto [flo, fhi] = wilson_interval(mc.found, mc.trials);
    CHECK(flo <= win.recoverable_fraction());
    CHECK(fhi >= win.recoverable_fraction());
}

TEST_CASE("table files: byte-exact round trip") {
    fs::path dir = fs::temp_directory_path() / "gtl_tmto_test";
    fs::create_directories(dir);
    TmtoTable t = build_table(toy_params(3), 1u << 10, 2024);
    fs::path file = dir / "t003_toy.gtmt";
    write_table(t, file, 2024);

    TmtoTable r = read_table(file);
    CHECK(r.params.compatible_with(t.params));
    CHECK(r.params.table_id == 3);
    REQUIRE(r.records.size() == t.records.size());
    for (size_t i = 0; i < t.records.size(); ++i) {
        CHECK(r.records[i].start == t.records[i].start);
        CHECK(r.records[i].end == t.records[i].end);
    }

    // writing the read table back reproduces the bytes
    fs::path file2 = dir / "roundtrip.gtmt";
    write_table(r, file2, 2024);
    std::ifstream f1(file, std::ios::binary), f2(file2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    // one-record file size: 64-byte header + one 16-byte record
    TmtoTable one;
    one.params = toy_params(0);
    one.records = {ChainRecord{1, 0x40}};
    fs::path small = dir / "one.gtmt";
    write_table(one, small, 0);
    CHECK(fs::file_size(small) == 64 + 16);
    fs::remove_all(dir);
}

TEST_CASE("table files: distinct errors for distinct corruptions") {
    fs::path dir = fs::temp_directory_path() / "gtl_tmto_err";
    fs::create_directories(dir);
    TmtoTable t = build_table(toy_params(), 64, 9);
    fs::path file = dir / "err.gtmt";
    write_table(t, file, 9);

    auto clobber = [&](size_t offset, uint8_t byte) {
        std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(static_cast<std::streamoff>(offset));
        f.write(reinterpret_cast<const char*>(&byte), 1);
    };
    auto kind_at = [&](size_t offset, uint8_t byte) {
        std::ifstream in(file, std::ios::binary);
        std::string orig((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        clobber(offset, byte);
        TableError kind{};
        try {
            read_table(file);
            FAIL("corruption not detected at offset ", offset);
        } catch (const TableFormatError& e) {
            kind = e.kind;
        }
        std::ofstream out(file, std::ios::binary | std::ios::trunc);
        out << orig;
        return kind;
    };

    CHECK(kind_at(0, 'X') == TableError::bad_magic);
    CHECK(kind_at(4, 9) == TableError::bad_version);
    CHECK(kind_at(20, 99) == TableError::bad_header);  // width field, crc catches it
    CHECK(kind_at(48, 0xAB) == TableError::bad_header);  // seed is covered by the crc too

    // truncation
    {
        std::ifstream in(file, std::ios::binary);
        std::string orig((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::ofstream out(file, std::ios::binary | std::ios::trunc);
        out << orig.substr(0, orig.size() - 7);
    }
    CHECK_THROWS_AS(read_table(file), TableFormatError);
    try {
        read_table(file);
    } catch (const TableFormatError& e) {
        CHECK(e.kind == TableError::truncated);
    }

    // unsorted records: swap two record blocks of a fresh file
    write_table(t, file, 9);
    {
        std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
        char a[16], b[16];
        f.seekg(64);
        f.read(a, 16);
        f.read(b, 16);
        f.seekp(64);
        f.write(b, 16);
        f.write(a, 16);
    }
    try {
        read_table(file);
        FAIL("unsorted records not detected");
    } catch (const TableFormatError& e) {
        CHECK(e.kind == TableError::unsorted);
    }

    // an end point that is no distinguished point cannot come from a chain
    TmtoTable bogus;
    bogus.params = toy_params();
    bogus.records = {ChainRecord{0, 1}};
    write_table(bogus, file, 0);
    try {
        read_table(file);
        FAIL("non-DP end not detected");
    } catch (const TableFormatError& e) {
        CHECK(e.kind == TableError::bad_record);
    }
    fs::remove_all(dir);
}

TEST_CASE("weak-key tables cover the reduced space faster than state tables") {
    // same chain budget, both spaces; the reduced space saturates
    TmtoParams state_p = toy_params();
    TmtoParams weak_p = TmtoParams::defaults(CipherParams::toy(), 0, SpaceMode::weak_key);
    std::vector<TmtoTable> state_t{build_table(state_p, 1u << 12, 55)};
    std::vector<TmtoTable> weak_t{build_table(weak_p, 1u << 12, 55)};
    CoverageResult cs = coverage_measure(state_t, 1500, 5);
    CoverageResult cw = coverage_measure(weak_t, 1500, 5);
    CHECK(cw.fraction() >= 2.0 * cs.fraction());
}
