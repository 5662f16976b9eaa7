#include "hetjb/montecarlo.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hetjb/ar.hpp"
#include "hetjb/errors.hpp"

namespace hetjb {

namespace {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void validate_config(const DgpConfig& c) {
    if (!(std::fabs(c.a0) < 1.0))
        throw InvalidInput("simulate_dgp: |a0| must be below 1");
    if (c.n < 20) throw InvalidInput("simulate_dgp: n must be at least 20");
    if (c.innovation == InnovationKind::mixture &&
        !(c.delta > 0.0 && c.delta <= std::numbers::pi / 2))
        throw InvalidInput("simulate_dgp: mixture delta must lie in (0, pi/2]");
    if (c.variance == VarianceKind::custom && !c.custom_variance)
        throw InvalidInput("simulate_dgp: custom variance needs a profile function");
}

// Innovation scale at rescaled time r: the square root of the variance
// profile.
double scale_at(const DgpConfig& c, double r) {
    switch (c.variance) {
    case VarianceKind::homoscedastic:
        return 1.0;
    case VarianceKind::eq8:
        return std::sqrt(variance_profile_eq8(r));
    case VarianceKind::custom: {
        const double v = c.custom_variance(r);
        if (!std::isfinite(v) || !(v > 0.0))
            throw InvalidInput("custom variance profile must be positive and finite");
        return std::sqrt(v);
    }
    }
    return 1.0;
}

std::string scenario_name(const DgpConfig& c) {
    std::string variance;
    switch (c.variance) {
    case VarianceKind::homoscedastic: variance = "homoscedastic"; break;
    case VarianceKind::eq8: variance = "eq8"; break;
    case VarianceKind::custom: variance = "custom"; break;
    }
    const char* innovation =
        c.innovation == InnovationKind::gaussian ? "gaussian" : "mixture";
    return variance + " variance, " + innovation + " innovations, a0=" +
           format_number(c.a0);
}

// Per-replication outcomes, flattened rep-major: 0 accept, 1 reject, 2 failed.
enum : std::uint8_t { kAccept = 0, kReject = 1, kFailed = 2 };

bool eval_reject(const TestSpec& ts, const Series& y, const ArFit& fit,
                 const std::vector<double>& z, double ubar,
                 const LooSmoother* cv_sm, LooSmoother::Workspace* ws,
                 std::vector<double>& h2, std::vector<double>& eps,
                 std::uint64_t boot_seed, const McOptions& opts) {
    const auto& u = fit.residuals;
    switch (ts.method) {
    case Method::t_st:
        return test_standard(u).p_value < opts.level;
    case Method::t_cv: {
        // same math as test_corrected under a CV rule, on the prebuilt
        // smoother so the kernel tables are not rebuilt every replication
        const std::size_t m = u.size();
        cv_sm->select(z, *ws, h2);
        for (std::size_t i = 0; i < m; ++i)
            eps[i] = (u[i] - ubar) / std::sqrt(h2[i]);
        const double q = jb_statistic(sample_moments(eps, false), m).statistic;
        return chi2_2_pvalue(q) < opts.level;
    }
    case Method::t_f:
        return test_corrected(u, FixedRule{ts.gamma}).p_value < opts.level;
    case Method::t_boot:
    case Method::t_f_boot: {
        BootstrapConfig bc;
        bc.replicates = opts.bootstrap_replicates;
        if (ts.method == Method::t_boot)
            bc.rule = CvRule{opts.grid, opts.kernel};
        else
            bc.rule = FixedRule{ts.gamma};
        bc.master_seed = boot_seed;
        bc.parallel = false; // the experiment loop owns the threads
        bc.reselect_bandwidth = opts.reselect_bandwidth;
        return test_bootstrap(y, 1, bc).p_value < opts.level;
    }
    }
    throw InvalidInput("unknown test method");
}

void run_block(const std::vector<TestSpec>& tests, const DgpConfig& block_cfg,
               std::size_t N, std::uint64_t block_seed, const McOptions& opts,
               const LooSmoother* cv_sm, std::vector<std::uint8_t>& out) {
    const std::size_t T = tests.size();
    const std::size_t m = block_cfg.n - 1; // AR(1) residual count
    out.assign(T * N, kFailed);

#pragma omp parallel if (opts.parallel)
    {
        std::optional<LooSmoother::Workspace> ws;
        if (cv_sm) ws = cv_sm->make_workspace();
        std::vector<double> z(m), h2(m), eps(m);

#pragma omp for schedule(dynamic)
        for (std::int64_t rep = 0; rep < static_cast<std::int64_t>(N); ++rep) {
            const std::uint64_t rep_seed =
                rng::derive_seed(block_seed, static_cast<std::uint64_t>(rep));
            DgpConfig cfg = block_cfg;
            cfg.seed = rep_seed;

            Series y;
            std::optional<ArFit> fit;
            double ubar = 0.0;
            try {
                y = simulate_dgp(cfg);
                fit = fit_ar(y, 1);
                if (cv_sm) {
                    for (double v : fit->residuals) ubar += v;
                    ubar /= static_cast<double>(m);
                    for (std::size_t i = 0; i < m; ++i) {
                        const double d = fit->residuals[i] - ubar;
                        z[i] = d * d;
                    }
                }
            } catch (const Error&) {
                continue; // every test in this replication stays failed
            }

            for (std::size_t ti = 0; ti < T; ++ti) {
                const std::uint64_t boot_seed =
                    rng::derive_seed(rep_seed, static_cast<std::uint64_t>(ti) + 1);
                std::uint8_t& slot = out[static_cast<std::size_t>(rep) * T + ti];
                try {
                    slot = eval_reject(tests[ti], y, *fit, z, ubar, cv_sm,
                                       ws ? &*ws : nullptr, h2, eps, boot_seed, opts)
                               ? kReject
                               : kAccept;
                } catch (const Error&) {
                    slot = kFailed;
                }
            }
        }
    }
}

void append_cells(McReport& report, const std::vector<TestSpec>& tests,
                  std::size_t n, std::optional<double> delta, std::size_t N,
                  const std::vector<std::uint8_t>& out) {
    const std::size_t T = tests.size();
    for (std::size_t ti = 0; ti < T; ++ti) {
        McCell cell;
        cell.test = test_label(tests[ti]);
        cell.n = n;
        cell.delta = delta;
        for (std::size_t rep = 0; rep < N; ++rep) {
            switch (out[rep * T + ti]) {
            case kReject: ++cell.rejections; break;
            case kFailed: ++cell.failures; break;
            default: break;
            }
        }
        cell.used = N - cell.failures;
        if (cell.failures * 100 > N)
            throw ExperimentFailure("over 1% of replications failed for " +
                                    cell.test + " at n=" + std::to_string(n) + " (" +
                                    std::to_string(cell.failures) + " of " +
                                    std::to_string(N) + ")");
        cell.rejection_pct =
            100.0 * static_cast<double>(cell.rejections) / static_cast<double>(cell.used);
        report.cells.push_back(std::move(cell));
    }
}

void validate_experiment_args(const std::vector<TestSpec>& tests, std::size_t N,
                              const McOptions& opts) {
    if (tests.empty()) throw InvalidInput("experiment: no tests given");
    if (N < 1) throw InvalidInput("experiment: N must be at least 1");
    if (!(opts.level > 0.0 && opts.level < 1.0))
        throw InvalidInput("experiment: level must lie in (0,1)");
    if (opts.bootstrap_replicates < 1)
        throw InvalidInput("experiment: bootstrap replicate count must be positive");
}

bool wants_cv(const std::vector<TestSpec>& tests) {
    for (const auto& t : tests)
        if (t.method == Method::t_cv) return true;
    return false;
}

} // namespace

double variance_profile_eq8(double r) {
    if (!(r > 0.0 && r <= 1.0))
        throw InvalidInput("variance_profile_eq8: r must lie in (0,1]");
    return 1.0 + 2.0 * std::exp(r) +
           0.3 * (1.0 + r) * std::sin(5.0 * std::numbers::pi * r + std::numbers::pi / 6.0);
}

double draw_innovation(InnovationKind kind, double delta, rng::Stream& stream) {
    if (kind == InnovationKind::gaussian) return stream.next_normal();
    // v first, then the chi-square part: the order is part of the
    // reproducibility contract
    const double v = stream.next_normal();
    const double g = stream.next_normal();
    const double w = (g * g - 1.0) / std::sqrt(2.0);
    return std::cos(delta) * v + std::sin(delta) * w;
}

Series simulate_dgp(const DgpConfig& config) {
    validate_config(config);
    rng::Stream stream(config.seed);

    // burn-in at the leftmost scale value; r = 0 itself is outside the
    // profile domain, so take the limit from the right
    const double scale0 = scale_at(config, std::numeric_limits<double>::min());
    double x = 0.0;
    for (int i = 0; i < 100; ++i)
        x = config.a0 * x + scale0 * draw_innovation(config.innovation, config.delta, stream);

    const double dn = static_cast<double>(config.n);
    std::vector<double> y(config.n);
    for (std::size_t t = 1; t <= config.n; ++t) {
        const double h = scale_at(config, static_cast<double>(t) / dn);
        x = config.a0 * x + h * draw_innovation(config.innovation, config.delta, stream);
        y[t - 1] = x;
    }
    return make_series(std::move(y), "simulated");
}

std::string test_label(const TestSpec& spec) {
    switch (spec.method) {
    case Method::t_st: return "T_st";
    case Method::t_cv: return "T_cv";
    case Method::t_boot: return "T_boot";
    case Method::t_f: return "T_f(" + format_number(spec.gamma) + ")";
    case Method::t_f_boot: return "T_f,boot(" + format_number(spec.gamma) + ")";
    }
    return "?";
}

TestSpec parse_test_spec(const std::string& label) {
    if (label == "T_st") return {Method::t_st, 1.0};
    if (label == "T_cv") return {Method::t_cv, 1.0};
    if (label == "T_boot") return {Method::t_boot, 1.0};

    const auto parse_gamma = [&](std::size_t prefix_len) {
        if (label.size() == prefix_len) return 1.0; // bare name: default gamma
        if (label[prefix_len] != '(' || label.back() != ')')
            throw InvalidInput("unrecognized test label: " + label);
        const std::string inner =
            label.substr(prefix_len + 1, label.size() - prefix_len - 2);
        std::size_t pos = 0;
        double g = 0.0;
        try {
            g = std::stod(inner, &pos);
        } catch (const std::exception&) {
            throw InvalidInput("bad gamma in test label: " + label);
        }
        if (pos != inner.size() || !(g > 0.0))
            throw InvalidInput("bad gamma in test label: " + label);
        return g;
    };

    if (label.rfind("T_f,boot", 0) == 0)
        return {Method::t_f_boot, parse_gamma(8)};
    if (label.rfind("T_f", 0) == 0) return {Method::t_f, parse_gamma(3)};
    throw InvalidInput("unrecognized test label: " + label);
}

std::pair<double, double> confidence_band(std::size_t N, double level) {
    if (N < 1) throw InvalidInput("confidence_band: N must be at least 1");
    if (!(level > 0.0 && level < 1.0))
        throw InvalidInput("confidence_band: level must lie in (0,1)");
    const double se = std::sqrt(level * (1.0 - level) / static_cast<double>(N));
    return {100.0 * (level - 1.96 * se), 100.0 * (level + 1.96 * se)};
}

McReport size_experiment(const std::vector<TestSpec>& tests,
                         const std::vector<std::size_t>& n_values, std::size_t N,
                         const DgpConfig& scenario, std::uint64_t master_seed,
                         const McOptions& options) {
    validate_experiment_args(tests, N, options);
    if (n_values.empty()) throw InvalidInput("size_experiment: no sample sizes given");
    for (std::size_t n : n_values) {
        DgpConfig probe = scenario;
        probe.n = n;
        validate_config(probe); // fail fast, not inside the parallel loop
    }

    McReport report;
    report.replications = N;
    report.level = options.level;
    report.master_seed = master_seed;
    {
        DgpConfig named = scenario;
        named.n = n_values.front();
        report.scenario = scenario_name(named);
    }
    const auto band = confidence_band(N, options.level);
    report.band_low_pct = band.first;
    report.band_high_pct = band.second;

    const bool cv = wants_cv(tests);
    std::vector<std::uint8_t> out;
    for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
        const std::size_t n = n_values[ni];
        DgpConfig block_cfg = scenario;
        block_cfg.n = n;

        std::unique_ptr<LooSmoother> cv_sm;
        if (cv)
            cv_sm = std::make_unique<LooSmoother>(n - 1, options.grid.values(n - 1),
                                                  options.kernel);

        const std::uint64_t block_seed =
            rng::derive_seed(master_seed, static_cast<std::uint64_t>(ni));
        run_block(tests, block_cfg, N, block_seed, options, cv_sm.get(), out);
        append_cells(report, tests, n, std::nullopt, N, out);
    }
    return report;
}

McReport power_experiment(const std::vector<TestSpec>& tests, std::size_t n,
                          const std::vector<double>& delta_grid, std::size_t N,
                          std::uint64_t master_seed, const McOptions& options) {
    validate_experiment_args(tests, N, options);
    if (delta_grid.empty()) throw InvalidInput("power_experiment: no deltas given");

    DgpConfig base;
    base.n = n;
    base.variance = VarianceKind::homoscedastic;
    base.innovation = InnovationKind::mixture;
    for (double d : delta_grid) {
        DgpConfig probe = base;
        probe.delta = d;
        validate_config(probe);
    }

    McReport report;
    report.scenario = scenario_name(base);
    report.replications = N;
    report.level = options.level;
    report.master_seed = master_seed;
    const auto band = confidence_band(N, options.level);
    report.band_low_pct = band.first;
    report.band_high_pct = band.second;

    const bool cv = wants_cv(tests);
    std::unique_ptr<LooSmoother> cv_sm;
    if (cv)
        cv_sm = std::make_unique<LooSmoother>(n - 1, options.grid.values(n - 1),
                                              options.kernel);

    std::vector<std::uint8_t> out;
    for (std::size_t di = 0; di < delta_grid.size(); ++di) {
        DgpConfig block_cfg = base;
        block_cfg.delta = delta_grid[di];
        const std::uint64_t block_seed =
            rng::derive_seed(master_seed, static_cast<std::uint64_t>(di));
        run_block(tests, block_cfg, N, block_seed, options, cv_sm.get(), out);
        append_cells(report, tests, n, delta_grid[di], N, out);
    }
    return report;
}

} // namespace hetjb
