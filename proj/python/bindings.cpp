#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gtl/attack.hpp"
#include "gtl/bench.hpp"
#include "gtl/capture_io.hpp"
#include "gtl/config.hpp"

namespace py = pybind11;
using namespace gtl;

PYBIND11_MODULE(_gtl, m) {
    m.doc() = "desk-scale GSM A5/1 trade-off laboratory";

    py::enum_<Preset>(m, "Preset").value("FULL", Preset::full).value("TOY", Preset::toy);
    py::enum_<SpaceMode>(m, "SpaceMode")
        .value("STATE", SpaceMode::state_space)
        .value("WEAK_KEY", SpaceMode::weak_key);
    py::enum_<AssignMode>(m, "AssignMode")
        .value("EARLY", AssignMode::early)
        .value("IMMEDIATE", AssignMode::immediate);
    py::enum_<CipherAlgo>(m, "CipherAlgo")
        .value("NONE", CipherAlgo::none)
        .value("A51", CipherAlgo::a51)
        .value("STRONG_OPAQUE", CipherAlgo::strong_opaque);
    py::enum_<CrackOutcome>(m, "CrackOutcome")
        .value("KEY_FOUND", CrackOutcome::key_found)
        .value("NOT_COVERED", CrackOutcome::not_covered)
        .value("BUDGET_EXHAUSTED", CrackOutcome::budget_exhausted)
        .value("NO_SAMPLES", CrackOutcome::no_samples);

    py::register_exception<BudgetExceeded>(m, "BudgetExceededError");
    py::register_exception<TableFormatError>(m, "TableFormatError");
    py::register_exception<CaptureFormatError>(m, "CaptureFormatError");
    py::register_exception<GsmError>(m, "GsmError");
    py::register_exception<ConfigError>(m, "ConfigError");

    py::class_<CipherParams>(m, "CipherParams")
        .def_static("full", &CipherParams::full)
        .def_static("toy", &CipherParams::toy)
        .def_static("from_preset", &CipherParams::from_preset)
        .def_readonly("key_bits", &CipherParams::key_bits)
        .def_readonly("frame_bits", &CipherParams::frame_bits)
        .def_readonly("mix_clocks", &CipherParams::mix_clocks)
        .def_property_readonly("state_width", &CipherParams::state_width)
        .def("validate", &CipherParams::validate);

    py::class_<CipherState>(m, "CipherState")
        .def(py::init<>())
        .def_readwrite("r1", &CipherState::r1)
        .def_readwrite("r2", &CipherState::r2)
        .def_readwrite("r3", &CipherState::r3)
        .def("__eq__", [](const CipherState& a, const CipherState& b) { return a == b; });

    py::class_<SessionKey>(m, "SessionKey")
        .def(py::init([](uint64_t kc, bool weak) {
                 return SessionKey{kc, weak};
             }),
             py::arg("kc"), py::arg("weak") = false)
        .def_readwrite("kc", &SessionKey::kc)
        .def_readwrite("weak", &SessionKey::weak);

    m.def("weaken", &weaken);
    m.def("pack_state", &pack_state);
    m.def("unpack_state", &unpack_state);
    m.def("key_setup", &key_setup, py::arg("params"), py::arg("key"), py::arg("frame"));
    m.def("clock_forward", [](const CipherParams& p, const CipherState& s) {
        auto r = clock_forward(p, s);
        return py::make_tuple(r.state, r.output);
    });
    m.def("clock_backward", &clock_backward);
    m.def("keystream",
          [](const CipherParams& p, const CipherState& s, size_t n) {
              BitVec ks = keystream(p, s, n);
              return std::vector<int>(ks.begin(), ks.end());
          });
    m.def("keystream_window", &keystream_window);
    m.def("recover_key", &recover_key, py::arg("params"), py::arg("state"), py::arg("frame"),
          py::arg("offset"), py::arg("node_budget") = kDefaultNodeBudget);

    py::class_<TmtoParams>(m, "TmtoParams")
        .def_static("defaults", &TmtoParams::defaults, py::arg("cipher"),
                    py::arg("table_id") = 0, py::arg("space") = SpaceMode::state_space)
        .def_readwrite("colors", &TmtoParams::colors)
        .def_readwrite("dp_mask_bits", &TmtoParams::dp_mask_bits)
        .def_readwrite("max_steps_per_color", &TmtoParams::max_steps_per_color)
        .def_readwrite("table_id", &TmtoParams::table_id)
        .def_readonly("sample_width", &TmtoParams::sample_width)
        .def("validate", &TmtoParams::validate);

    py::class_<ChainRecord>(m, "ChainRecord")
        .def_readonly("start", &ChainRecord::start)
        .def_readonly("end", &ChainRecord::end);

    py::class_<GenStats>(m, "GenStats")
        .def_readonly("requested", &GenStats::requested)
        .def_readonly("kept", &GenStats::kept)
        .def_readonly("merged", &GenStats::merged)
        .def_readonly("overflowed", &GenStats::overflowed)
        .def_readonly("seconds", &GenStats::seconds);

    py::class_<TmtoTable>(m, "TmtoTable")
        .def_readonly("params", &TmtoTable::params)
        .def_readonly("records", &TmtoTable::records);

    m.def("f_color", &f_color);
    m.def("generate_chain", &generate_chain);
    m.def("start_point", &start_point);
    m.def(
        "build_table",
        [](const TmtoParams& p, uint64_t chains, uint64_t seed, unsigned threads) {
            GenStats st;
            TmtoTable t;
            {
                py::gil_scoped_release release;
                t = build_table(p, chains, seed, threads, &st);
            }
            return py::make_tuple(std::move(t), st);
        },
        py::arg("params"), py::arg("chain_count"), py::arg("seed"), py::arg("threads") = 0);
    m.def("verify_table", &verify_table, py::arg("table"), py::arg("count") = 0,
          py::arg("seed") = 1);
    m.def("lookup_window", &lookup_window);
    m.def("write_table", &write_table, py::arg("table"), py::arg("path"), py::arg("seed") = 0);
    m.def("read_table", &read_table);
    m.def("load_table_dir", &load_table_dir);

    py::class_<CoverageResult>(m, "CoverageResult")
        .def_readonly("trials", &CoverageResult::trials)
        .def_readonly("recovered", &CoverageResult::recovered)
        .def_readonly("found", &CoverageResult::found)
        .def_readonly("wilson_lo", &CoverageResult::wilson_lo)
        .def_readonly("wilson_hi", &CoverageResult::wilson_hi)
        .def_property_readonly("fraction", &CoverageResult::fraction)
        .def_property_readonly("found_fraction", &CoverageResult::found_fraction);
    m.def("coverage_measure", &coverage_measure, py::arg("tables"), py::arg("trials"),
          py::arg("seed"), py::call_guard<py::gil_scoped_release>());

    py::class_<ExactCoverage>(m, "ExactCoverage")
        .def_readonly("space_size", &ExactCoverage::space_size)
        .def_readonly("covered_values", &ExactCoverage::covered_values)
        .def_readonly("recoverable_values", &ExactCoverage::recoverable_values)
        .def_property_readonly("covered_fraction", &ExactCoverage::covered_fraction)
        .def_property_readonly("recoverable_fraction", &ExactCoverage::recoverable_fraction);
    m.def("coverage_exact", &coverage_exact, py::arg("tables"),
          py::arg("with_window_census") = false, py::arg("threads") = 0,
          py::call_guard<py::gil_scoped_release>());

    py::class_<CellConfig>(m, "CellConfig")
        .def(py::init<>())
        .def_readwrite("arfcn_allocation", &CellConfig::arfcn_allocation)
        .def_readwrite("hsn", &CellConfig::hsn)
        .def_readwrite("maio", &CellConfig::maio)
        .def_readwrite("hopping_enabled", &CellConfig::hopping_enabled)
        .def_readwrite("assignment_mode", &CellConfig::assignment_mode)
        .def_readwrite("cipher", &CellConfig::cipher)
        .def_readwrite("random_padding", &CellConfig::random_padding)
        .def_readwrite("weak_keys", &CellConfig::weak_keys)
        .def("validate", &CellConfig::validate);

    py::class_<SessionConfig>(m, "SessionConfig")
        .def(py::init<>())
        .def_readwrite("cell", &SessionConfig::cell)
        .def_readwrite("preset", &SessionConfig::preset)
        .def_readwrite("traffic_frames", &SessionConfig::traffic_frames)
        .def_readwrite("si_period", &SessionConfig::si_period);

    py::class_<Burst>(m, "Burst")
        .def_readonly("frame", &Burst::frame)
        .def_readonly("arfcn", &Burst::arfcn)
        .def_readonly("slot", &Burst::slot)
        .def_readonly("uplink", &Burst::uplink)
        .def_readonly("time_ns", &Burst::time_ns)
        .def_property_readonly("payload", [](const Burst& b) {
            return std::vector<int>(b.payload.begin(), b.payload.end());
        });

    py::class_<GroundTruth>(m, "GroundTruth")
        .def_readonly("secret", &GroundTruth::secret)
        .def_readonly("rand_challenge", &GroundTruth::rand_challenge)
        .def_readonly("kc", &GroundTruth::kc)
        .def_readonly("slot", &GroundTruth::slot)
        .def_readonly("si_phase", &GroundTruth::si_phase)
        .def_readonly("cipher_start_frame", &GroundTruth::cipher_start_frame);

    py::class_<CaptureLog>(m, "CaptureLog")
        .def_readonly("cell_id", &CaptureLog::cell_id)
        .def_readonly("preset", &CaptureLog::preset)
        .def_readonly("bursts", &CaptureLog::bursts)
        .def_readonly("truth", &CaptureLog::truth);

    m.def("hop_arfcn",
          py::overload_cast<const std::vector<uint16_t>&, uint8_t, uint8_t, uint32_t>(&hop_arfcn),
          py::arg("allocation"), py::arg("hsn"), py::arg("maio"), py::arg("frame"));
    m.def("run_session", &run_session, py::arg("config"), py::arg("seed"));
    m.def("corrupt", &corrupt, py::arg("log"), py::arg("bit_error_rate"), py::arg("seed"));
    m.def("derive_kc", &derive_kc, py::arg("secret"), py::arg("rand_challenge"), py::arg("weak"),
          py::arg("params"));

    py::class_<SimCard>(m, "SimCard")
        .def(py::init([](uint64_t secret, bool weak, bool fresh_rand) {
                 return SimCard{secret, weak, fresh_rand};
             }),
             py::arg("secret"), py::arg("weak") = false, py::arg("fresh_rand") = false)
        .def_readwrite("secret", &SimCard::secret)
        .def_readwrite("fresh_rand", &SimCard::fresh_rand)
        .def("respond", &SimCard::respond);

    py::class_<ReplayWitness>(m, "ReplayWitness")
        .def_readonly("derived", &ReplayWitness::derived)
        .def_readonly("rand_challenge", &ReplayWitness::rand_challenge);
    m.def("replay_challenge", &replay_challenge);

    m.def("write_capture", &write_capture, py::arg("log"), py::arg("path"),
          py::arg("with_truth") = true);
    m.def("read_capture", &read_capture);
    m.def("capture_to_string", &capture_to_string);
    m.def("capture_from_string", &capture_from_string);
    m.def("write_sim", &write_sim);
    m.def("read_sim", &read_sim);
    m.def("truth_path", &truth_path);
    m.def("sim_path", &sim_path);

    py::class_<AttackerView>(m, "AttackerView")
        .def_static("analyze", &AttackerView::analyze)
        .def_readonly("preset", &AttackerView::preset)
        .def_readonly("cipher", &AttackerView::cipher)
        .def_readonly("random_padding", &AttackerView::random_padding)
        .def_readonly("cipher_start_frame", &AttackerView::cipher_start_frame)
        .def_readonly("traffic_start_frame", &AttackerView::traffic_start_frame)
        .def_readonly("rand_challenge", &AttackerView::rand_challenge);

    py::class_<PlaintextGuess>(m, "PlaintextGuess")
        .def_readonly("frame_base", &PlaintextGuess::frame_base)
        .def_readonly("uplink", &PlaintextGuess::uplink)
        .def_readonly("source", &PlaintextGuess::source);

    py::class_<KeystreamSample>(m, "KeystreamSample")
        .def_readonly("bits", &KeystreamSample::bits)
        .def_readonly("frame", &KeystreamSample::frame)
        .def_readonly("offset", &KeystreamSample::offset)
        .def_readonly("uplink", &KeystreamSample::uplink)
        .def_readonly("source", &KeystreamSample::source);

    py::class_<TranscriptEntry>(m, "TranscriptEntry")
        .def_readonly("frame_base", &TranscriptEntry::frame_base)
        .def_readonly("uplink", &TranscriptEntry::uplink)
        .def_property_readonly("kind",
                               [](const TranscriptEntry& e) { return static_cast<int>(e.kind); })
        .def_property_readonly("info", [](const TranscriptEntry& e) {
            return py::bytes(reinterpret_cast<const char*>(e.info.data()), e.info.size());
        });

    py::class_<Transcript>(m, "Transcript")
        .def_readonly("entries", &Transcript::entries)
        .def_readonly("crc_failures", &Transcript::crc_failures)
        .def_readonly("missing_bursts", &Transcript::missing_bursts);

    py::class_<CrackOptions>(m, "CrackOptions")
        .def(py::init<>())
        .def_readwrite("sample_budget", &CrackOptions::sample_budget)
        .def_readwrite("threads", &CrackOptions::threads)
        .def_readwrite("node_budget", &CrackOptions::node_budget);

    py::class_<AttackReport>(m, "AttackReport")
        .def_readonly("outcome", &AttackReport::outcome)
        .def_readonly("samples_tried", &AttackReport::samples_tried)
        .def_readonly("key_found", &AttackReport::key_found)
        .def_readonly("winning_sample", &AttackReport::winning_sample)
        .def_readonly("padding_samples", &AttackReport::padding_samples)
        .def_readonly("script_samples", &AttackReport::script_samples)
        .def_readonly("decrypted_frames", &AttackReport::decrypted_frames)
        .def_readonly("transcript", &AttackReport::transcript);

    py::class_<ReplayReport>(m, "ReplayReport")
        .def_readonly("witness", &ReplayReport::witness)
        .def_readonly("transcript", &ReplayReport::transcript);

    m.def("extract_known_plaintext", &extract_known_plaintext);
    m.def("derive_samples", &derive_samples);
    m.def("crack_session", &crack_session, py::arg("view"), py::arg("samples"),
          py::arg("tables"), py::arg("opts") = CrackOptions{},
          py::call_guard<py::gil_scoped_release>());
    m.def("dehop_decrypt", &dehop_decrypt);
    m.def("downgrade_replay_demo", &downgrade_replay_demo);

    m.def("run_bench", &run_bench, py::arg("seconds") = 1.0);
    m.def("bench_report_json", &bench_report_json);
}
