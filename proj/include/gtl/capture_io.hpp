#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gtl/gsm_sim.hpp"

namespace gtl {

enum class CaptureError { io, bad_header, bad_record };

struct CaptureFormatError : std::runtime_error {
    CaptureFormatError(CaptureError kind, const std::string& what)
        : std::runtime_error(what), kind(kind) {}
    CaptureError kind;
};

// Capture log, one line per burst:
//   gsmcap 1 cell=<16 hex> preset=<full|toy> crc=<8 hex>
//   <frame> <slot> <U|D> <arfcn> <29 hex payload> <microseconds>.<tenth>
// The header CRC-32 covers the header text before " crc="; payload hex is
// MSB-first per nibble with the two spare bits of the final nibble zero.
// The ground-truth sidecar shares the base name with a .truth extension and
// is omitted for attacker-mode exports; the victim SIM model lives next to
// it with a .sim extension.

void write_capture(const CaptureLog& log, const std::filesystem::path& path,
                   bool with_truth = true);
CaptureLog read_capture(const std::filesystem::path& path);

std::filesystem::path truth_path(const std::filesystem::path& capture_path);
std::filesystem::path sim_path(const std::filesystem::path& capture_path);

void write_truth(const CaptureLog& log, const std::filesystem::path& path);
GroundTruth read_truth(const std::filesystem::path& path);

void write_sim(const SimCard& sim, const std::filesystem::path& path);
SimCard read_sim(const std::filesystem::path& path);

// In-memory round trips used by tests and the python module.
std::string capture_to_string(const CaptureLog& log);
CaptureLog capture_from_string(const std::string& text);

}  // namespace gtl
