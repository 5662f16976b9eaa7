#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hetjb/series.hpp"

namespace hetjb {

// Result of a conditional-least-squares AR(p) fit with the mean treated as
// unknown: omega_hat is the sample mean, theta_hat solves the normal
// equations on centered values over t = p+1..n, residuals has length n - p.
struct ArFit {
    int order = 0;
    double omega_hat = 0.0;
    std::vector<double> theta_hat;
    std::vector<double> residuals;
    int effective_start = 1; // first fitted index, 1-based: p + 1
    std::size_t n = 0;
};

// Fits mean + AR(p) by conditional least squares. Requires n > 5*p so the
// normal equations have a sane sample behind them. p = 0 returns centered
// values as residuals. Throws SingularSystem when the lagged moment matrix
// is numerically singular (reciprocal condition estimate below 1e-12).
ArFit fit_ar(const Series& series, int p);

// y_t = omega + x_t, x_t = sum_i theta_i x_{t-i} + u_t, with pre-sample x
// fixed to zero. Output length equals errors length.
Series simulate_ar(double omega, std::span<const double> theta,
                   std::span<const double> errors);

} // namespace hetjb
