#include "hetjb/ar.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

#include "hetjb/errors.hpp"

namespace hetjb {

namespace {

// Dense p x p solver, partial pivoting; p stays tiny (<= ~12) so a direct
// factorization is the right tool. Returns x with A x = b. The caller gets
// a SingularSystem if the reciprocal condition estimate drops below rcond_min.
std::vector<double> solve_pivoted(std::vector<double> a, std::vector<double> b,
                                  std::size_t p, double rcond_min) {
    // 1-norm of A before factoring, for the condition estimate.
    double anorm = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i < p; ++i) c += std::fabs(a[i * p + j]);
        anorm = std::max(anorm, c);
    }

    std::vector<std::size_t> piv(p);
    for (std::size_t k = 0; k < p; ++k) {
        std::size_t imax = k;
        for (std::size_t i = k + 1; i < p; ++i)
            if (std::fabs(a[i * p + k]) > std::fabs(a[imax * p + k])) imax = i;
        piv[k] = imax;
        if (imax != k)
            for (std::size_t j = 0; j < p; ++j)
                std::swap(a[k * p + j], a[imax * p + j]);
        if (a[k * p + k] == 0.0)
            throw SingularSystem("AR normal equations are singular");
        for (std::size_t i = k + 1; i < p; ++i) {
            a[i * p + k] /= a[k * p + k];
            for (std::size_t j = k + 1; j < p; ++j)
                a[i * p + j] -= a[i * p + k] * a[k * p + j];
        }
    }

    auto lu_solve = [&](std::vector<double> rhs) {
        for (std::size_t k = 0; k < p; ++k)
            if (piv[k] != k) std::swap(rhs[k], rhs[piv[k]]);
        for (std::size_t i = 1; i < p; ++i)
            for (std::size_t j = 0; j < i; ++j) rhs[i] -= a[i * p + j] * rhs[j];
        for (std::size_t i = p; i-- > 0;) {
            for (std::size_t j = i + 1; j < p; ++j) rhs[i] -= a[i * p + j] * rhs[j];
            rhs[i] /= a[i * p + i];
        }
        return rhs;
    };

    // ||A^{-1}||_1 exactly, one solve per unit vector; p is small enough
    // that the textbook estimate is cheaper to justify than to avoid.
    double ainvnorm = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> e(p, 0.0);
        e[j] = 1.0;
        auto col = lu_solve(std::move(e));
        double c = 0.0;
        for (double v : col) c += std::fabs(v);
        ainvnorm = std::max(ainvnorm, c);
    }
    double rcond = (anorm > 0.0 && ainvnorm > 0.0) ? 1.0 / (anorm * ainvnorm) : 0.0;
    if (rcond < rcond_min)
        throw SingularSystem("AR normal equations are numerically singular "
                             "(rcond ~ " + std::to_string(rcond) + ")");

    return lu_solve(std::move(b));
}

} // namespace

ArFit fit_ar(const Series& series, int p) {
    if (p < 0) throw InvalidInput("fit_ar: negative order");
    const std::size_t n = series.size();
    if (n <= 5 * static_cast<std::size_t>(p))
        throw InvalidInput("fit_ar: sample too short for order " +
                           std::to_string(p) + " (need n > 5p)");

    ArFit fit;
    fit.order = p;
    fit.n = n;
    fit.effective_start = p + 1;
    fit.omega_hat = sample_mean(series);

    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = series.values[t] - fit.omega_hat;

    const std::size_t up = static_cast<std::size_t>(p);
    if (p == 0) {
        fit.residuals = std::move(x);
        return fit;
    }

    // Normal equations sum_t x_{t-i} x_{t-j} and sum_t x_t x_{t-i} over
    // t = p+1..n (0-based: t = p..n-1).
    std::vector<double> a(up * up, 0.0), b(up, 0.0);
    for (std::size_t i = 1; i <= up; ++i) {
        for (std::size_t j = i; j <= up; ++j) {
            double s = 0.0;
            for (std::size_t t = up; t < n; ++t) s += x[t - i] * x[t - j];
            a[(i - 1) * up + (j - 1)] = s;
            a[(j - 1) * up + (i - 1)] = s;
        }
        double s = 0.0;
        for (std::size_t t = up; t < n; ++t) s += x[t] * x[t - i];
        b[i - 1] = s;
    }

    fit.theta_hat = solve_pivoted(std::move(a), std::move(b), up, 1e-12);

    fit.residuals.resize(n - up);
    for (std::size_t t = up; t < n; ++t) {
        double pred = 0.0;
        for (std::size_t i = 1; i <= up; ++i) pred += fit.theta_hat[i - 1] * x[t - i];
        fit.residuals[t - up] = x[t] - pred;
    }
    return fit;
}

Series simulate_ar(double omega, std::span<const double> theta,
                   std::span<const double> errors) {
    const std::size_t n = errors.size();
    const std::size_t p = theta.size();
    std::vector<double> y(n);
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        double v = errors[t];
        for (std::size_t i = 1; i <= p && i <= t; ++i) v += theta[i - 1] * x[t - i];
        x[t] = v;
        y[t] = omega + v;
    }
    return make_series(std::move(y));
}

} // namespace hetjb
