#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hetjb/bootstrap.hpp"
#include "hetjb/jb_test.hpp"
#include "hetjb/rng.hpp"
#include "hetjb/series.hpp"

namespace hetjb {

// Unconditional innovation-variance profile r -> var(u_t) at rescaled time
// r = t/n: 1 + 2 exp(r) + 0.3 (1 + r) sin(5 pi r + pi/6). Requires
// r in (0, 1].
double variance_profile_eq8(double r);

enum class VarianceKind { homoscedastic, eq8, custom };
enum class InnovationKind { gaussian, mixture };

// A simulation scenario: AR(1) with coefficient a0, innovations scaled so
// their variance at rescaled time r follows the chosen profile. The mixture
// innovation is cos(delta) v + sin(delta) w with v standard normal and
// w a centered, unit-variance chi-square(1): increasingly skewed and
// heavy-tailed as delta grows toward pi/2, standard normal as delta -> 0.
struct DgpConfig {
    double a0 = 0.4;
    std::size_t n = 100;
    VarianceKind variance = VarianceKind::homoscedastic;
    std::function<double(double)> custom_variance; // used iff variance == custom
    InnovationKind innovation = InnovationKind::gaussian;
    double delta = 0.0; // mixture angle in (0, pi/2]
    std::uint64_t seed = 0;
};

// One draw from the innovation law (unit variance for every delta). Mixture
// draws consume two normals from the stream, v first.
double draw_innovation(InnovationKind kind, double delta, rng::Stream& stream);

// Simulates y_t = a0 y_{t-1} + h(t/n) eps_t for t = 1..n, after a 100-step
// burn-in with the scale frozen at its r -> 0+ value (removes the zero
// initial condition without distorting the rescaled-time design).
Series simulate_dgp(const DgpConfig& config);

// One test column of an experiment. gamma only matters for the fixed-
// bandwidth flavors.
struct TestSpec {
    Method method = Method::t_st;
    double gamma = 1.0;
};

// "T_st", "T_cv", "T_boot", "T_f(0.8)", "T_f,boot(1.5)" <-> TestSpec.
std::string test_label(const TestSpec& spec);
TestSpec parse_test_spec(const std::string& label);

// Knobs shared by both experiments; defaults reproduce the reference
// protocol (B = 499, 25-point CV grid, normal kernel, 5% level).
struct McOptions {
    int bootstrap_replicates = 499;
    BandwidthGrid grid;
    Kernel kernel = Kernel::normal;
    double level = 0.05;
    bool parallel = true;
    bool reselect_bandwidth = true;
};

// One (test, n) or (test, delta) rejection-frequency cell.
struct McCell {
    std::string test;
    std::size_t n = 0;
    std::optional<double> delta; // set for power cells
    double rejection_pct = 0.0;  // 100 * rejections / used
    std::size_t rejections = 0;
    std::size_t used = 0; // replications that produced a decision
    std::size_t failures = 0;
};

// A full experiment: pure function of its inputs (master seed included),
// identical cells no matter how many threads ran it.
struct McReport {
    std::string scenario;
    std::size_t replications = 0; // N requested per cell
    double level = 0.05;
    double band_low_pct = 0.0; // Monte Carlo band around the level
    double band_high_pct = 0.0;
    std::uint64_t master_seed = 0;
    std::vector<McCell> cells; // n-major (or delta-major), test-minor
};

// 100 * (level -/+ 1.96 sqrt(level (1 - level) / N)): the band a size cell
// should fall in when the test is exact at that level.
std::pair<double, double> confidence_band(std::size_t N, double level);

// Size study: for each n and each of N replications, simulate the scenario
// (its n and seed fields are overridden), fit mean + AR(1), run every test
// on the residuals at the 5% level, and tabulate rejection frequencies.
// Replication failures are excluded and counted; a cell with more than 1%
// failures throws ExperimentFailure.
McReport size_experiment(const std::vector<TestSpec>& tests,
                         const std::vector<std::size_t>& n_values, std::size_t N,
                         const DgpConfig& scenario, std::uint64_t master_seed,
                         const McOptions& options = {});

// Power study against the mixture alternative at fixed n: homoscedastic
// variance, one cell per (test, delta).
McReport power_experiment(const std::vector<TestSpec>& tests, std::size_t n,
                          const std::vector<double>& delta_grid, std::size_t N,
                          std::uint64_t master_seed, const McOptions& options = {});

} // namespace hetjb
