// gtl: desk-scale A5/1 time-memory trade-off laboratory.
//
// Exit codes: 0 success, 2 key not covered by the tables, 3 corrupt input
// file, 4 configuration error.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gtl/attack.hpp"
#include "gtl/bench.hpp"
#include "gtl/capture_io.hpp"
#include "gtl/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gtl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotCovered = 2;
constexpr int kExitCorrupt = 3;
constexpr int kExitConfig = 4;

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

ScenarioConfig config_or_default(const std::string& path) {
    if (path.empty()) {
        std::istringstream empty("");
        return parse_config(empty);
    }
    return load_config(path);
}

std::string default_table_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    const char* env = std::getenv("GTL_TABLE_DIR");
    if (env && *env) return env;
    throw ConfigError("no table directory: pass --tables or set GTL_TABLE_DIR");
}

json stats_json(const GenStats& st, uint64_t table_id, const std::string& file, Preset preset) {
    json j{{"schema", "gtl.genstats.v1"},
           {"table_id", table_id},
           {"file", file},
           {"requested", st.requested},
           {"kept", st.kept},
           {"merged", st.merged},
           {"overflowed", st.overflowed},
           {"seconds", st.seconds},
           {"chains_per_s", st.seconds > 0 ? double(st.requested) / st.seconds : 0.0}};
    if (preset == Preset::full)
        j["note"] = "full-size table generation is supported but not desk scale; a useful "
                    "64-bit set needs terabytes of chains";
    return j;
}

json transcript_json(const Transcript& t) {
    json msgs = json::array();
    for (const TranscriptEntry& e : t.entries) {
        std::string info;
        static const char* digits = "0123456789abcdef";
        for (uint8_t b : e.info) {
            info.push_back(digits[b >> 4]);
            info.push_back(digits[b & 0xf]);
        }
        msgs.push_back(json{{"frame", e.frame_base},
                            {"dir", e.uplink ? "U" : "D"},
                            {"kind", static_cast<unsigned>(e.kind)},
                            {"info", info}});
    }
    return json{{"messages", msgs},
                {"crc_failures", t.crc_failures},
                {"missing_bursts", t.missing_bursts}};
}

json report_json(const AttackReport& r) {
    static const char* outcomes[] = {"key_found", "not_covered", "budget_exhausted",
                                     "no_samples"};
    json j{{"schema", "gtl.report.v1"},
           {"outcome", outcomes[static_cast<unsigned>(r.outcome)]},
           {"samples_tried", r.samples_tried},
           {"padding_samples", r.padding_samples},
           {"script_samples", r.script_samples},
           {"lookup_seconds_mean", r.lookup_seconds_mean},
           {"lookup_seconds_max", r.lookup_seconds_max},
           {"decrypted_frames", r.decrypted_frames}};
    if (r.key_found) {
        j["kc"] = hex64(r.key_found->kc);
        j["winning_sample"] = r.winning_sample;
        j["transcript"] = transcript_json(r.transcript);
    }
    return j;
}

int cmd_gen_tables(const std::string& config_path, const std::string& out_dir,
                   std::optional<uint64_t> seed, std::optional<unsigned> threads) {
    ScenarioConfig cfg = config_or_default(config_path);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (cfg.chain_count == 0) throw ConfigError("gen-tables: chain_count must be >= 1");
    fs::create_directories(out_dir);
    for (uint32_t id = 0; id < cfg.table_count; ++id) {
        TmtoParams params = cfg.tmto_params(id);
        GenStats st;
        TmtoTable t = build_table(params, cfg.chain_count, cfg.seed, cfg.threads, &st);
        char name[64];
        std::snprintf(name, sizeof name, "t%03u_%s%s.gtmt", id,
                      cfg.session.preset == Preset::full ? "full" : "toy",
                      cfg.space == SpaceMode::weak_key ? "_weak" : "");
        fs::path file = fs::path(out_dir) / name;
        write_table(t, file, cfg.seed);
        std::cout << stats_json(st, id, file.string(), cfg.session.preset).dump() << "\n";
    }
    return kExitOk;
}

int cmd_table_stats(const std::vector<std::string>& files, uint64_t spot_checks) {
    for (const std::string& f : files) {
        TmtoTable t = read_table(f);
        bool ok = verify_table(t, spot_checks, 1);
        json j{{"schema", "gtl.tablestats.v1"},
               {"file", f},
               {"table_id", t.params.table_id},
               {"preset", t.params.cipher.preset == Preset::full ? "full" : "toy"},
               {"space", t.params.space == SpaceMode::weak_key ? "weak_key" : "state"},
               {"colors", t.params.colors},
               {"dp_mask_bits", t.params.dp_mask_bits},
               {"t_max", t.params.max_steps_per_color},
               {"records", t.records.size()},
               {"spot_check", ok ? "pass" : "fail"}};
        std::cout << j.dump() << "\n";
        if (!ok) return kExitCorrupt;
    }
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out, bool no_truth,
                 std::optional<uint64_t> seed) {
    ScenarioConfig cfg = config_or_default(config_path);
    if (seed) cfg.seed = *seed;
    CaptureLog log = run_session(cfg.session, cfg.seed);
    uint64_t flipped = 0;
    if (cfg.ber > 0) {
        CaptureLog dirty = corrupt(log, cfg.ber, cfg.seed ^ kGolden);
        for (size_t i = 0; i < log.bursts.size(); ++i)
            for (size_t b = 0; b < kPayloadBits; ++b)
                flipped += log.bursts[i].payload[b] != dirty.bursts[i].payload[b];
        dirty.truth = log.truth;
        log = std::move(dirty);
    }
    write_capture(log, out, !no_truth);
    if (!no_truth && log.truth)
        write_sim(SimCard{log.truth->secret, log.truth->cell.weak_keys, false}, sim_path(out));
    json j{{"schema", "gtl.simulate.v1"},
           {"capture", out},
           {"cell", hex64(log.cell_id)},
           {"bursts", log.bursts.size()},
           {"ber", cfg.ber},
           {"flipped_bits", flipped},
           {"truth", !no_truth}};
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int cmd_extract(const std::string& capture_path) {
    CaptureLog log = read_capture(capture_path);
    AttackerView view = AttackerView::analyze(log);
    auto guesses = extract_known_plaintext(view);
    unsigned width = CipherParams::from_preset(view.preset).state_width();
    auto samples = derive_samples(view, guesses, width);
    uint64_t padding = 0, script = 0, known_bits_cmc = 0;
    for (const auto& g : guesses) {
        uint64_t known = 0;
        for (uint8_t k : g.known) known += k;
        if (g.frame_base == view.cipher_start_frame) known_bits_cmc += known;
    }
    for (const auto& s : samples) {
        if (s.source == static_cast<uint32_t>(PlaintextSource::padding)) ++padding;
        else ++script;
    }
    json j{{"schema", "gtl.extract.v1"},
           {"guesses", guesses.size()},
           {"samples", samples.size()},
           {"padding_samples", padding},
           {"script_samples", script},
           {"cmc_known_bits", known_bits_cmc},
           {"random_padding_detected", view.random_padding}};
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int cmd_crack(const std::string& capture_path, const std::string& tables_flag, uint64_t budget,
              unsigned threads, bool replay, const std::string& sim_file) {
    CaptureLog log = read_capture(capture_path);
    AttackerView view = AttackerView::analyze(log);

    if (view.cipher == CipherAlgo::strong_opaque && !replay) {
        json j{{"schema", "gtl.report.v1"},
               {"outcome", "not_cracked"},
               {"note", "session uses the strong cipher; table lookup does not apply. "
                        "Re-run with --replay and a --sim card to demonstrate the downgrade."}};
        std::cout << j.dump() << "\n";
        return kExitNotCovered;
    }
    if (replay) {
        std::string simf = sim_file.empty() ? sim_path(capture_path).string() : sim_file;
        SimCard sim = read_sim(simf);
        ReplayReport rep = downgrade_replay_demo(view, sim);
        json j{{"schema", "gtl.replay.v1"},
               {"kc", hex64(rep.witness.derived.kc)},
               {"rand", hex64(rep.witness.rand_challenge)},
               {"enciphered_positions", rep.enciphered_positions},
               {"transcript", transcript_json(rep.transcript)}};
        std::cout << j.dump() << "\n";
        return rep.transcript.entries.empty() ? kExitNotCovered : kExitOk;
    }

    auto tables = load_table_dir(default_table_dir(tables_flag));
    if (!tables.empty() && tables.front().params.cipher.preset != view.preset)
        throw ConfigError("crack: table preset does not match the capture preset");
    auto guesses = extract_known_plaintext(view);
    unsigned width = CipherParams::from_preset(view.preset).state_width();
    auto samples = derive_samples(view, guesses, width);
    CrackOptions opts;
    opts.sample_budget = budget;
    opts.threads = threads ? threads : 1;
    AttackReport rep = crack_session(view, samples, tables, opts);
    std::cout << report_json(rep).dump() << "\n";
    return rep.outcome == CrackOutcome::key_found ? kExitOk : kExitNotCovered;
}

int cmd_decrypt(const std::string& capture_path, const std::string& kc_hex) {
    CaptureLog log = read_capture(capture_path);
    AttackerView view = AttackerView::analyze(log);
    SessionKey kc{std::stoull(kc_hex, nullptr, 16), false};
    Transcript t = dehop_decrypt(view, kc);
    json j{{"schema", "gtl.decrypt.v1"}, {"kc", hex64(kc.kc)}, {"transcript", transcript_json(t)}};
    std::cout << j.dump() << "\n";
    return t.entries.empty() ? kExitNotCovered : kExitOk;
}

int cmd_replay_demo(const std::string& capture_path, const std::string& sim_file) {
    return cmd_crack(capture_path, "", 0, 1, true, sim_file);
}

int cmd_bench(double seconds) {
    BenchResult r = run_bench(seconds);
    std::cout << bench_report_json(r) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale GSM A5/1 capture, trade-off and eavesdropping laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_path, capture_path, tables_dir, kc_hex, sim_file;
    std::vector<std::string> table_files;
    uint64_t budget = 0, spot_checks = 100;
    unsigned threads = 0;
    bool no_truth = false, replay = false;
    double bench_seconds = 1.0;
    std::optional<uint64_t> seed_flag;
    std::optional<unsigned> threads_flag;

    auto* gen = app.add_subcommand("gen-tables", "build trade-off tables");
    gen->add_option("--config", config_path, "scenario config file");
    gen->add_option("--out", out_path, "output directory")->required();
    gen->add_option("--seed", seed_flag, "override the config seed");
    gen->add_option("--threads", threads_flag, "override the config thread count");

    auto* tstats = app.add_subcommand("table-stats", "inspect table files");
    tstats->add_option("--table", table_files, "table file(s)")->required();
    tstats->add_option("--spot-checks", spot_checks, "records to regenerate");

    auto* sim = app.add_subcommand("simulate", "run a scripted session and export the capture");
    sim->add_option("--config", config_path, "scenario config file");
    sim->add_option("--out", out_path, "capture file to write")->required();
    sim->add_flag("--no-truth", no_truth, "suppress the ground-truth sidecar");
    sim->add_option("--seed", seed_flag, "override the config seed");

    auto* ext = app.add_subcommand("extract", "known-plaintext and sample census for a capture");
    ext->add_option("--capture", capture_path, "capture file")->required();

    auto* crack = app.add_subcommand("crack", "recover the session key from a capture");
    crack->add_option("--capture", capture_path, "capture file")->required();
    crack->add_option("--tables", tables_dir, "table directory (default $GTL_TABLE_DIR)");
    crack->add_option("--budget", budget, "max samples to try (0 = all)");
    crack->add_option("--threads", threads, "parallel sample lookups");
    crack->add_flag("--replay", replay, "use the challenge-replay downgrade instead of tables");
    crack->add_option("--sim", sim_file, "victim SIM model file (with --replay)");

    auto* dec = app.add_subcommand("decrypt", "decrypt a capture with a known key");
    dec->add_option("--capture", capture_path, "capture file")->required();
    dec->add_option("--kc", kc_hex, "session key, hex")->required();

    auto* rep = app.add_subcommand("replay-demo", "challenge-replay downgrade demonstration");
    rep->add_option("--capture", capture_path, "capture file")->required();
    rep->add_option("--sim", sim_file, "victim SIM model file");

    auto* bench = app.add_subcommand("bench", "kernel throughput report");
    bench->add_option("--seconds", bench_seconds, "seconds per kernel");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_tables(config_path, out_path, seed_flag, threads_flag);
        if (tstats->parsed()) return cmd_table_stats(table_files, spot_checks);
        if (sim->parsed()) return cmd_simulate(config_path, out_path, no_truth, seed_flag);
        if (ext->parsed()) return cmd_extract(capture_path);
        if (crack->parsed())
            return cmd_crack(capture_path, tables_dir, budget, threads, replay, sim_file);
        if (dec->parsed()) return cmd_decrypt(capture_path, kc_hex);
        if (rep->parsed()) return cmd_replay_demo(capture_path, sim_file);
        if (bench->parsed()) return cmd_bench(bench_seconds);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TableFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorrupt;
    } catch (const CaptureFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorrupt;
    } catch (const GsmError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorrupt;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorrupt;
    }
    return kExitOk;
}
