#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>

#include "gtl/gsm_sim.hpp"
#include "gtl/tmto.hpp"

namespace gtl {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything a scenario run needs, parsed from flat key=value text with
/// '#' comments. Keys are lowercase snake case; unknown keys are errors.
struct ScenarioConfig {
    SessionConfig session;
    double ber = 0.0;
    uint64_t seed = 1;

    // trade-off table parameters
    uint32_t colors = 4;
    uint32_t dp_mask_bits = 4;
    uint64_t t_max = 1ull << 10;
    uint64_t chain_count = 1ull << 16;
    uint32_t table_count = 4;
    SpaceMode space = SpaceMode::state_space;

    // attack knobs
    uint64_t sample_budget = 0;  // 0 = unlimited
    unsigned threads = 0;        // 0 = hardware default

    TmtoParams tmto_params(uint64_t table_id) const;
};

ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace gtl
