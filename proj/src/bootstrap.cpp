#include "hetjb/bootstrap.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hetjb/errors.hpp"
#include "hetjb/rng.hpp"

namespace hetjb {

namespace {

// Everything a replicate needs that can be prepared once per test run:
// the fitted model, the observed variance path (which scales the draws),
// and the smoothing machinery for the replicate refit length m - p.
struct ReplicateEngine {
    const ArFit* fit = nullptr;
    const std::vector<double>* h_obs = nullptr; // observed path, length m
    // CV re-selection, or single-bandwidth reuse (prepared smoother)...
    std::unique_ptr<LooSmoother> smoother;
    bool reselect_cv = false;
    // ...or per-replicate fixed-rule re-selection (no precompute possible).
    std::optional<double> fixed_gamma;
    Kernel kernel = Kernel::normal;
};

ReplicateEngine make_engine(const ArFit& fit, const VariancePath& path,
                            const BootstrapConfig& config, double observed_b) {
    ReplicateEngine eng;
    eng.fit = &fit;
    eng.h_obs = &path.h;

    const std::size_t mrep = fit.residuals.size() - static_cast<std::size_t>(fit.order);
    if (const auto* cv = std::get_if<CvRule>(&config.rule)) {
        eng.kernel = cv->kernel;
        if (config.reselect_bandwidth) {
            eng.smoother = std::make_unique<LooSmoother>(
                mrep, cv->grid.values(mrep), eng.kernel);
            eng.reselect_cv = true;
        } else {
            eng.smoother = std::make_unique<LooSmoother>(
                mrep, std::vector<double>{observed_b}, eng.kernel);
        }
    } else {
        const auto& fr = std::get<FixedRule>(config.rule);
        if (config.reselect_bandwidth) {
            eng.fixed_gamma = fr.gamma; // bandwidth depends on the draw
        } else {
            eng.smoother = std::make_unique<LooSmoother>(
                mrep, std::vector<double>{observed_b}, Kernel::normal);
        }
    }
    return eng;
}

struct ReplicateScratch {
    std::optional<LooSmoother::Workspace> ws;
    std::vector<double> errors, z, h2, eps;
};

ReplicateScratch make_scratch(const ReplicateEngine& eng) {
    ReplicateScratch s;
    if (eng.smoother) s.ws = eng.smoother->make_workspace();
    const std::size_t m = eng.h_obs->size();
    s.errors.resize(m);
    const std::size_t mrep = m - static_cast<std::size_t>(eng.fit->order);
    s.z.resize(mrep);
    s.h2.resize(mrep);
    s.eps.resize(mrep);
    return s;
}

// Draw, rebuild, refit, re-smooth, return the replicate statistic.
double run_replicate(const ReplicateEngine& eng, std::uint64_t seed,
                     ReplicateScratch& s) {
    const ArFit& fit = *eng.fit;
    const std::size_t m = eng.h_obs->size();

    rng::Stream stream(seed);
    for (std::size_t t = 0; t < m; ++t)
        s.errors[t] = stream.next_normal() * (*eng.h_obs)[t];

    const Series y = simulate_ar(fit.omega_hat, fit.theta_hat, s.errors);
    const ArFit refit = fit_ar(y, fit.order);
    const auto& r = refit.residuals;
    const std::size_t mrep = r.size();

    double rbar = 0.0;
    for (double v : r) rbar += v;
    rbar /= static_cast<double>(mrep);
    for (std::size_t t = 0; t < mrep; ++t) s.z[t] = (r[t] - rbar) * (r[t] - rbar);

    if (eng.smoother) {
        if (eng.reselect_cv)
            eng.smoother->select(s.z, *s.ws, s.h2);
        else
            eng.smoother->smooth(s.z, 0, s.h2, *s.ws);
    } else {
        // fixed rule, re-selected from this draw's residuals
        const double b = fixed_bandwidth(r, *eng.fixed_gamma);
        s.h2 = loo_smooth_once(s.z, b, Kernel::normal);
        for (std::size_t t = 0; t < mrep; ++t)
            if (s.h2[t] <= 0.0)
                throw DegenerateVariance("replicate variance fit vanished");
    }

    for (std::size_t t = 0; t < mrep; ++t)
        s.eps[t] = (r[t] - rbar) / std::sqrt(s.h2[t]);

    return jb_statistic(sample_moments(s.eps, false), mrep).statistic;
}

} // namespace

double bootstrap_replicate(const ArFit& fit, const VariancePath& path,
                           const BootstrapConfig& config, std::uint64_t seed) {
    if (path.h.size() != fit.residuals.size())
        throw InvalidInput("bootstrap_replicate: path length does not match fit");
    try {
        auto eng = make_engine(fit, path, config, path.bandwidth);
        auto scratch = make_scratch(eng);
        return run_replicate(eng, seed, scratch);
    } catch (const InvalidInput&) {
        throw;
    } catch (const Error& e) {
        throw ReplicateFailure(std::string("replicate failed: ") + e.what(), seed);
    }
}

JbResult test_bootstrap(const Series& series, int p, const BootstrapConfig& config) {
    if (config.replicates < 1)
        throw InvalidInput("test_bootstrap: need at least one replicate");

    const ArFit fit = fit_ar(series, p);

    // Observed statistic, bandwidth, and variance path under the same rule.
    JbResult observed = test_corrected(fit.residuals, config.rule);
    const double b_obs = *observed.bandwidth;
    const Kernel kernel = std::holds_alternative<CvRule>(config.rule)
                              ? std::get<CvRule>(config.rule).kernel
                              : Kernel::normal;
    const VariancePath path = smooth_variance(fit.residuals, b_obs, kernel);

    const auto eng = make_engine(fit, path, config, b_obs);
    const int B = config.replicates;
    std::vector<double> stats(static_cast<std::size_t>(B));
    std::vector<unsigned char> failed(static_cast<std::size_t>(B), 0);

#pragma omp parallel if (config.parallel)
    {
        auto scratch = make_scratch(eng);
#pragma omp for schedule(dynamic)
        for (int i = 0; i < B; ++i) {
            const std::uint64_t seed =
                rng::derive_seed(config.master_seed, static_cast<std::uint64_t>(i));
            try {
                stats[static_cast<std::size_t>(i)] = run_replicate(eng, seed, scratch);
            } catch (const Error&) {
                failed[static_cast<std::size_t>(i)] = 1;
            }
        }
    }

    std::size_t n_failed = 0;
    std::size_t n_ge = 0;
    for (int i = 0; i < B; ++i) {
        if (failed[static_cast<std::size_t>(i)]) {
            ++n_failed;
        } else if (stats[static_cast<std::size_t>(i)] >= observed.statistic) {
            ++n_ge;
        }
    }
    if (n_failed * 100 > static_cast<std::size_t>(B)) {
        std::vector<std::uint64_t> seeds;
        for (int i = 0; i < B; ++i)
            if (failed[static_cast<std::size_t>(i)])
                seeds.push_back(
                    rng::derive_seed(config.master_seed, static_cast<std::uint64_t>(i)));
        throw BootstrapFailure("more than 1% of bootstrap replicates failed (" +
                                   std::to_string(n_failed) + " of " +
                                   std::to_string(B) + ")",
                               std::move(seeds));
    }

    const std::size_t used = static_cast<std::size_t>(B) - n_failed;
    JbResult result = observed;
    result.method = std::holds_alternative<CvRule>(config.rule) ? Method::t_boot
                                                                : Method::t_f_boot;
    result.p_value = static_cast<double>(1 + n_ge) / static_cast<double>(used + 1);
    result.replicates_used = used;
    result.failed_replicates = n_failed;
    return result;
}

} // namespace hetjb
