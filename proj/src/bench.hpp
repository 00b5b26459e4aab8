#pragma once

// Micro-benchmark of the four apply paths for one adapted layer:
//
//   base                y = W0^T x + b, the unadapted layer
//   structured-delta    delta-W^T x through the factored kernels
//   materialized-delta  delta-W^T x against the dense materialized update
//   merged              y = W^T x + b with everything folded in
//
// Samples are interleaved (every repetition times each path once, in
// rotating order) so clock drift hits all paths alike, and the reported
// figure is the per-apply median. Multiply counts per apply accompany the
// timings; the structured count comes from the same formula the tests pin
// down against a counting implementation.

#include <cstdint>
#include <string>
#include <vector>

#include "numerics.hpp"

namespace karst {

struct BenchOptions {
    index_t d_in = 768;
    index_t d_out = 768;
    index_t m = 8;
    index_t r = 8;
    index_t n_kernels = 2;
    int repetitions = 41;
    int inner_iters = 8;  // applies per timing sample
    std::uint64_t seed = 1;
};

struct BenchRow {
    std::string path;
    double median_us;         // one apply, microseconds
    std::int64_t multiplies;  // one apply
};

struct BenchReport {
    BenchOptions opts;
    std::vector<BenchRow> rows;
    double merged_over_base = 0.0;  // ratio of the two medians

    std::string csv() const;    // path,median_us,multiplies
    std::string table() const;  // human-readable summary
};

BenchReport run_bench(const BenchOptions& opts);

}  // namespace karst
