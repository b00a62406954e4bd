#include "gtl/capture_io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gtl {

namespace {

std::string header_line(const CaptureLog& log) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "gsmcap 1 cell=%016" PRIx64 " preset=%s", log.cell_id,
                  log.preset == Preset::full ? "full" : "toy");
    std::string head(buf);
    uint32_t crc = crc32(reinterpret_cast<const uint8_t*>(head.data()), head.size());
    std::snprintf(buf, sizeof buf, " crc=%08x", crc);
    return head + buf;
}

bool parse_u64(std::string_view s, uint64_t& out, int base = 10) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
    return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

std::string capture_to_string(const CaptureLog& log) {
    std::string out = header_line(log);
    out.push_back('\n');
    char buf[128];
    for (const Burst& b : log.bursts) {
        std::string hex = bits_to_hex(b.payload, 0, kPayloadBits);
        std::snprintf(buf, sizeof buf, "%u %u %c %u %s %" PRIu64 ".%u\n", b.frame, b.slot,
                      b.uplink ? 'U' : 'D', b.arfcn, hex.c_str(), b.time_ns / 1000,
                      static_cast<unsigned>(b.time_ns % 1000 / 100));
        out += buf;
    }
    return out;
}

CaptureLog capture_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw CaptureFormatError(CaptureError::bad_header, "empty capture");

    // header: fixed layout, integrity-checked
    size_t crc_pos = line.rfind(" crc=");
    if (crc_pos == std::string::npos)
        throw CaptureFormatError(CaptureError::bad_header, "missing header checksum");
    std::string head = line.substr(0, crc_pos);
    uint64_t stored_crc = 0;
    if (!parse_u64(std::string_view(line).substr(crc_pos + 5), stored_crc, 16))
        throw CaptureFormatError(CaptureError::bad_header, "malformed header checksum");
    if (crc32(reinterpret_cast<const uint8_t*>(head.data()), head.size()) != stored_crc)
        throw CaptureFormatError(CaptureError::bad_header, "header checksum mismatch");

    CaptureLog log;
    uint64_t cell = 0;
    char preset[8] = {0};
    if (std::sscanf(head.c_str(), "gsmcap 1 cell=%16" SCNx64 " preset=%7s", &cell, preset) != 2 ||
        head.rfind("gsmcap 1 cell=", 0) != 0)
        throw CaptureFormatError(CaptureError::bad_header, "malformed capture header");
    log.cell_id = cell;
    std::string p(preset);
    if (p == "full") log.preset = Preset::full;
    else if (p == "toy") log.preset = Preset::toy;
    else throw CaptureFormatError(CaptureError::bad_header, "unknown preset in header");

    uint64_t prev_time = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        Burst b;
        unsigned slot;
        char dir;
        std::string hex, stamp;
        uint64_t frame, arfcn;
        if (!(ls >> frame >> slot >> dir >> arfcn >> hex >> stamp) || !(ls >> std::ws).eof())
            throw CaptureFormatError(CaptureError::bad_record, "malformed burst record");
        if ((dir != 'U' && dir != 'D') || slot >= kSlotsPerFrame || arfcn > 0xffff)
            throw CaptureFormatError(CaptureError::bad_record, "burst field out of range");
        b.frame = static_cast<uint32_t>(frame);
        b.slot = static_cast<uint8_t>(slot);
        b.uplink = dir == 'U';
        b.arfcn = static_cast<uint16_t>(arfcn);
        if (!hex_to_bits(hex, kPayloadBits, b.payload))
            throw CaptureFormatError(CaptureError::bad_record, "malformed payload hex");
        size_t dot = stamp.find('.');
        uint64_t us = 0, tenth = 0;
        if (dot == std::string::npos || dot + 2 != stamp.size() ||
            !parse_u64(std::string_view(stamp).substr(0, dot), us) ||
            !parse_u64(std::string_view(stamp).substr(dot + 1), tenth) || tenth > 9)
            throw CaptureFormatError(CaptureError::bad_record, "malformed timestamp");
        b.time_ns = us * 1000 + tenth * 100;
        if (b.time_ns != Burst::start_time_ns(b.frame, b.slot))
            throw CaptureFormatError(CaptureError::bad_record,
                                     "timestamp inconsistent with frame and slot");
        if (b.time_ns < prev_time)
            throw CaptureFormatError(CaptureError::bad_record, "bursts not time-ordered");
        // duplicates share a timestamp, so only the equal-time tail needs a scan
        for (auto it = log.bursts.rbegin(); it != log.bursts.rend() && it->time_ns == b.time_ns;
             ++it)
            if (it->frame == b.frame && it->slot == b.slot && it->uplink == b.uplink &&
                it->arfcn == b.arfcn)
                throw CaptureFormatError(CaptureError::bad_record,
                                         "duplicate burst for (frame, slot, direction, arfcn)");
        prev_time = b.time_ns;
        log.bursts.push_back(std::move(b));
    }
    return log;
}

void write_capture(const CaptureLog& log, const std::filesystem::path& path, bool with_truth) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CaptureFormatError(CaptureError::io, "cannot open " + path.string());
    f << capture_to_string(log);
    if (!f) throw CaptureFormatError(CaptureError::io, "short write to " + path.string());
    if (with_truth && log.truth) write_truth(log, truth_path(path));
}

CaptureLog read_capture(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CaptureFormatError(CaptureError::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return capture_from_string(ss.str());
}

std::filesystem::path truth_path(const std::filesystem::path& capture_path) {
    auto p = capture_path;
    p.replace_extension(".truth");
    return p;
}

std::filesystem::path sim_path(const std::filesystem::path& capture_path) {
    auto p = capture_path;
    p.replace_extension(".sim");
    return p;
}

void write_truth(const CaptureLog& log, const std::filesystem::path& path) {
    if (!log.truth) throw CaptureFormatError(CaptureError::io, "capture has no ground truth");
    const GroundTruth& t = *log.truth;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CaptureFormatError(CaptureError::io, "cannot open " + path.string());
    char buf[160];
    f << "gsmtruth 1\n";
    std::snprintf(buf, sizeof buf, "secret=%016" PRIx64 "\n", t.secret);
    f << buf;
    std::snprintf(buf, sizeof buf, "rand=%016" PRIx64 "\n", t.rand_challenge);
    f << buf;
    std::snprintf(buf, sizeof buf, "kc=%016" PRIx64 "\n", t.kc.kc);
    f << buf;
    f << "weak=" << (t.kc.weak ? 1 : 0) << "\n";
    f << "hsn=" << unsigned(t.cell.hsn) << "\n";
    f << "maio=" << unsigned(t.cell.maio) << "\n";
    f << "hopping=" << (t.cell.hopping_enabled ? 1 : 0) << "\n";
    f << "assignment=" << (t.cell.assignment_mode == AssignMode::early ? "early" : "immediate")
      << "\n";
    f << "cipher=" << unsigned(static_cast<uint8_t>(t.cell.cipher)) << "\n";
    f << "random_padding=" << (t.cell.random_padding ? 1 : 0) << "\n";
    f << "weak_keys=" << (t.cell.weak_keys ? 1 : 0) << "\n";
    f << "allocation=";
    for (size_t i = 0; i < t.cell.arfcn_allocation.size(); ++i)
        f << (i ? "," : "") << t.cell.arfcn_allocation[i];
    f << "\n";
    f << "slot=" << unsigned(t.slot) << "\n";
    f << "control_arfcn=" << t.control_arfcn << "\n";
    f << "si_phase=" << t.si_phase << "\n";
    f << "cipher_start_frame=" << t.cipher_start_frame << "\n";
    f << "traffic_start_frame=" << t.traffic_start_frame << "\n";
    for (const TruthMessage& m : t.messages) {
        f << "msg " << m.frame_base << ' ' << (m.uplink ? 'U' : 'D') << ' '
          << unsigned(static_cast<uint8_t>(m.l2.kind)) << ' ' << (m.enciphered ? 1 : 0) << ' ';
        static const char* digits = "0123456789abcdef";
        for (uint8_t v : m.l2.info) {
            f << digits[v >> 4] << digits[v & 0xf];
        }
        f << "\n";
    }
    if (!f) throw CaptureFormatError(CaptureError::io, "short write to " + path.string());
}

namespace {

uint64_t want_u64(const std::string& line, const char* key, int base) {
    std::string prefix = std::string(key) + "=";
    if (line.rfind(prefix, 0) != 0)
        throw CaptureFormatError(CaptureError::bad_record,
                                 "truth file: expected " + prefix + " line");
    uint64_t v = 0;
    if (!parse_u64(std::string_view(line).substr(prefix.size()), v, base))
        throw CaptureFormatError(CaptureError::bad_record, "truth file: bad " + prefix + " value");
    return v;
}

}  // namespace

GroundTruth read_truth(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CaptureFormatError(CaptureError::io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line) || line != "gsmtruth 1")
        throw CaptureFormatError(CaptureError::bad_header, "bad truth header");
    GroundTruth t;
    auto next = [&]() -> std::string {
        if (!std::getline(f, line))
            throw CaptureFormatError(CaptureError::bad_record, "truncated truth file");
        return line;
    };
    t.secret = want_u64(next(), "secret", 16);
    t.rand_challenge = want_u64(next(), "rand", 16);
    t.kc.kc = want_u64(next(), "kc", 16);
    t.kc.weak = want_u64(next(), "weak", 10) != 0;
    t.cell.hsn = static_cast<uint8_t>(want_u64(next(), "hsn", 10));
    t.cell.maio = static_cast<uint8_t>(want_u64(next(), "maio", 10));
    t.cell.hopping_enabled = want_u64(next(), "hopping", 10) != 0;
    {
        std::string l = next();
        if (l == "assignment=early") t.cell.assignment_mode = AssignMode::early;
        else if (l == "assignment=immediate") t.cell.assignment_mode = AssignMode::immediate;
        else throw CaptureFormatError(CaptureError::bad_record, "truth file: bad assignment");
    }
    t.cell.cipher = static_cast<CipherAlgo>(want_u64(next(), "cipher", 10));
    t.cell.random_padding = want_u64(next(), "random_padding", 10) != 0;
    t.cell.weak_keys = want_u64(next(), "weak_keys", 10) != 0;
    {
        std::string l = next();
        if (l.rfind("allocation=", 0) != 0)
            throw CaptureFormatError(CaptureError::bad_record, "truth file: expected allocation");
        std::istringstream ss(l.substr(11));
        std::string field;
        while (std::getline(ss, field, ',')) {
            uint64_t a = 0;
            if (!parse_u64(field, a) || a > 0xffff)
                throw CaptureFormatError(CaptureError::bad_record, "truth file: bad allocation");
            t.cell.arfcn_allocation.push_back(static_cast<uint16_t>(a));
        }
    }
    t.slot = static_cast<uint8_t>(want_u64(next(), "slot", 10));
    t.control_arfcn = static_cast<uint16_t>(want_u64(next(), "control_arfcn", 10));
    t.si_phase = static_cast<uint32_t>(want_u64(next(), "si_phase", 10));
    t.cipher_start_frame = static_cast<uint32_t>(want_u64(next(), "cipher_start_frame", 10));
    t.traffic_start_frame = static_cast<uint32_t>(want_u64(next(), "traffic_start_frame", 10));
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        uint32_t frame;
        char dir;
        unsigned kind, enc;
        std::string hex;
        if (!(ls >> tag >> frame >> dir >> kind >> enc) || tag != "msg")
            throw CaptureFormatError(CaptureError::bad_record, "truth file: bad msg line");
        ls >> hex;  // may be empty for zero-length info
        TruthMessage m;
        m.frame_base = frame;
        m.uplink = dir == 'U';
        m.l2.kind = static_cast<L2Kind>(kind);
        m.enciphered = enc != 0;
        if (hex.size() % 2)
            throw CaptureFormatError(CaptureError::bad_record, "truth file: odd info hex");
        for (size_t i = 0; i < hex.size(); i += 2) {
            auto nib = [&](char c) -> int {
                if (c >= '0' && c <= '9') return c - '0';
                if (c >= 'a' && c <= 'f') return c - 'a' + 10;
                return -1;
            };
            int hi = nib(hex[i]), lo = nib(hex[i + 1]);
            if (hi < 0 || lo < 0)
                throw CaptureFormatError(CaptureError::bad_record, "truth file: bad info hex");
            m.l2.info.push_back(static_cast<uint8_t>(hi * 16 + lo));
        }
        t.messages.push_back(std::move(m));
    }
    return t;
}

void write_sim(const SimCard& sim, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CaptureFormatError(CaptureError::io, "cannot open " + path.string());
    char buf[64];
    f << "gsmsim 1\n";
    std::snprintf(buf, sizeof buf, "secret=%016" PRIx64 "\n", sim.secret);
    f << buf;
    f << "weak=" << (sim.weak ? 1 : 0) << "\n";
    f << "fresh_rand=" << (sim.fresh_rand ? 1 : 0) << "\n";
}

SimCard read_sim(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CaptureFormatError(CaptureError::io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line) || line != "gsmsim 1")
        throw CaptureFormatError(CaptureError::bad_header, "bad sim header");
    SimCard sim;
    auto next = [&]() -> std::string {
        if (!std::getline(f, line))
            throw CaptureFormatError(CaptureError::bad_record, "truncated sim file");
        return line;
    };
    sim.secret = want_u64(next(), "secret", 16);
    sim.weak = want_u64(next(), "weak", 10) != 0;
    sim.fresh_rand = want_u64(next(), "fresh_rand", 10) != 0;
    return sim;
}

}  // namespace gtl
