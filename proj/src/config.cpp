#include "gtl/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gtl {

TmtoParams ScenarioConfig::tmto_params(uint64_t table_id) const {
    TmtoParams p;
    p.cipher = CipherParams::from_preset(session.preset);
    p.sample_width = p.cipher.state_width();
    p.colors = colors;
    p.dp_mask_bits = dp_mask_bits;
    p.max_steps_per_color = t_max;
    p.round_constants = TmtoParams::default_round_constants(colors, p.sample_width, table_id);
    p.table_id = table_id;
    p.space = space;
    p.validate();
    return p;
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

uint64_t to_u64(const std::string& key, const std::string& v, uint64_t max) {
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || out > max)
        throw ConfigError("config: bad value for " + key + ": " + v);
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw ConfigError("config: bad boolean for " + key + ": " + v);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": " + v);
    }
}

}  // namespace

ScenarioConfig parse_config(std::istream& in) {
    ScenarioConfig cfg;
    cfg.session.cell.arfcn_allocation = {10, 14, 35, 61};
    std::string line;
    while (std::getline(in, line)) {
        if (size_t h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config: expected key=value: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key == "preset") {
            if (val == "full") cfg.session.preset = Preset::full;
            else if (val == "toy") cfg.session.preset = Preset::toy;
            else throw ConfigError("config: preset must be full or toy");
        } else if (key == "arfcn_allocation") {
            cfg.session.cell.arfcn_allocation.clear();
            std::istringstream ss(val);
            std::string field;
            while (std::getline(ss, field, ','))
                cfg.session.cell.arfcn_allocation.push_back(
                    static_cast<uint16_t>(to_u64(key, trim(field), 0xffff)));
        } else if (key == "hsn") {
            cfg.session.cell.hsn = static_cast<uint8_t>(to_u64(key, val, 63));
        } else if (key == "maio") {
            cfg.session.cell.maio = static_cast<uint8_t>(to_u64(key, val, 63));
        } else if (key == "hopping_enabled") {
            cfg.session.cell.hopping_enabled = to_bool(key, val);
        } else if (key == "assignment_mode") {
            if (val == "early") cfg.session.cell.assignment_mode = AssignMode::early;
            else if (val == "immediate") cfg.session.cell.assignment_mode = AssignMode::immediate;
            else throw ConfigError("config: assignment_mode must be early or immediate");
        } else if (key == "cipher") {
            if (val == "none") cfg.session.cell.cipher = CipherAlgo::none;
            else if (val == "a51") cfg.session.cell.cipher = CipherAlgo::a51;
            else if (val == "strong") cfg.session.cell.cipher = CipherAlgo::strong_opaque;
            else throw ConfigError("config: cipher must be none, a51 or strong");
        } else if (key == "random_padding") {
            cfg.session.cell.random_padding = to_bool(key, val);
        } else if (key == "weak_keys") {
            cfg.session.cell.weak_keys = to_bool(key, val);
        } else if (key == "traffic_frames") {
            cfg.session.traffic_frames = static_cast<uint32_t>(to_u64(key, val, 1u << 20));
        } else if (key == "si_period") {
            cfg.session.si_period = static_cast<uint32_t>(to_u64(key, val, 1u << 20));
        } else if (key == "ber") {
            cfg.ber = to_double(key, val);
            if (cfg.ber < 0.0 || cfg.ber > 1.0) throw ConfigError("config: ber must be in [0,1]");
        } else if (key == "seed") {
            cfg.seed = to_u64(key, val, ~0ull);
        } else if (key == "colors") {
            cfg.colors = static_cast<uint32_t>(to_u64(key, val, 64));
        } else if (key == "dp_mask_bits") {
            cfg.dp_mask_bits = static_cast<uint32_t>(to_u64(key, val, 63));
        } else if (key == "t_max") {
            cfg.t_max = to_u64(key, val, 1ull << 32);
        } else if (key == "chain_count") {
            cfg.chain_count = to_u64(key, val, 1ull << 40);
        } else if (key == "tables") {
            cfg.table_count = static_cast<uint32_t>(to_u64(key, val, 1024));
        } else if (key == "space") {
            if (val == "state") cfg.space = SpaceMode::state_space;
            else if (val == "weak_key") cfg.space = SpaceMode::weak_key;
            else throw ConfigError("config: space must be state or weak_key");
        } else if (key == "budget") {
            cfg.sample_budget = to_u64(key, val, ~0ull);
        } else if (key == "threads") {
            cfg.threads = static_cast<unsigned>(to_u64(key, val, 4096));
        } else {
            throw ConfigError("config: unknown key: " + key);
        }
    }
    try {
        cfg.session.validate();
    } catch (const GsmError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path.string());
    return parse_config(f);
}

}  // namespace gtl
