#pragma once

#include <string>

namespace gtl {

struct BenchResult {
    double keystream_mbits_per_s = 0;  // full-size kernel
    double chains_per_s = 0;           // toy defaults
    double lookups_per_s = 0;          // toy defaults
    double median_lookup_s = 0;
    unsigned hardware_threads = 0;
};

/// Measures the three kernels for roughly `seconds` each.
BenchResult run_bench(double seconds = 1.0);

/// JSON-lines report with a stable schema. Includes the published full-scale
/// table-set figures as reference context; they are informational and no
/// desk-scale run is expected to reproduce them.
std::string bench_report_json(const BenchResult& r);

}  // namespace gtl
