#pragma once

#include <cstdint>

#include "hetjb/ar.hpp"
#include "hetjb/jb_test.hpp"
#include "hetjb/series.hpp"

namespace hetjb {

struct BootstrapConfig {
    int replicates = 499; // B
    BandwidthRule rule = CvRule{};
    std::uint64_t master_seed = 0;
    bool parallel = true;
    // Replicates re-select the bandwidth by the same rule (full
    // re-estimation). false reuses the observed-data bandwidth: cheaper,
    // slightly less faithful to the estimation effect being corrected.
    bool reselect_bandwidth = true;
};

// One parametric replicate: draws eps ~ N(0,1) from the seeded stream,
// scales by the observed variance path, rebuilds a series through the
// fitted AR, refits, re-estimates the variance path under the rule, and
// returns the corrected JB statistic. Degenerate re-estimation throws
// ReplicateFailure carrying the seed.
double bootstrap_replicate(const ArFit& fit, const VariancePath& path,
                           const BootstrapConfig& config, std::uint64_t seed);

// The bootstrap test: observed statistic from test_corrected, B replicate
// statistics with seeds derive_seed(master_seed, b), p-value
// (1 + #{Q_b >= Q_obs}) / (B_used + 1). Method is T_boot under a CV rule,
// T_f,boot under a fixed rule. More than 1% replicate failures throws
// BootstrapFailure (with the failing seeds); fewer are excluded and counted
// in the result.
JbResult test_bootstrap(const Series& series, int p, const BootstrapConfig& config);

} // namespace hetjb
