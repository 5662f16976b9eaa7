#include "hetjb/kernel_variance.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include "hetjb/errors.hpp"

namespace hetjb {

namespace {

double kernel_value(Kernel k, double x) {
    switch (k) {
    case Kernel::normal:
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    case Kernel::uniform:
        return std::fabs(x) <= 1.0 ? 0.5 : 0.0;
    }
    return 0.0;
}

std::vector<double> squared_centered(std::span<const double> u) {
    const std::size_t m = u.size();
    double ubar = 0.0;
    for (double v : u) ubar += v;
    ubar /= static_cast<double>(m);
    std::vector<double> z(m);
    for (std::size_t i = 0; i < m; ++i) z[i] = (u[i] - ubar) * (u[i] - ubar);
    return z;
}

// FFTW's planner mutates global state; plan creation and destruction must
// be serialized even though execution on separate buffers is concurrent.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

std::vector<double> BandwidthGrid::values(std::size_t m) const {
    if (points < 2) throw InvalidInput("bandwidth grid needs at least 2 points");
    if (!(c_min > 0.0) || !(c_min < c_max))
        throw InvalidInput("bandwidth grid requires 0 < c_min < c_max");
    double ref = b_ref;
    if (ref == 0.0) ref = std::pow(static_cast<double>(m), -1.0 / 3.0);
    if (!(ref > 0.0)) throw InvalidInput("bandwidth grid reference must be positive");

    std::vector<double> out(points);
    const double lo = std::log(c_min * ref), hi = std::log(c_max * ref);
    for (int i = 0; i < points; ++i)
        out[i] = std::exp(lo + (hi - lo) * i / static_cast<double>(points - 1));
    return out;
}

LooSmoother::LooSmoother(std::size_t m, std::vector<double> bandwidths, Kernel kernel)
    : m_(m), bandwidths_(std::move(bandwidths)), kernel_(kernel) {
    if (m_ < 3) throw InvalidInput("smoothing needs at least 3 residuals");
    if (bandwidths_.empty()) throw InvalidInput("no bandwidths given");
    for (double b : bandwidths_)
        if (!(b > 0.0)) throw InvalidInput("bandwidth must be positive");

    const std::size_t nb = bandwidths_.size();
    kd_.resize(nb);
    den_.resize(nb);
    degenerate_.assign(nb, false);

    for (std::size_t bi = 0; bi < nb; ++bi) {
        auto& kd = kd_[bi];
        kd.assign(m_, 0.0);
        const double scale = 1.0 / (static_cast<double>(m_) * bandwidths_[bi]);
        for (std::size_t d = 1; d < m_; ++d)
            kd[d] = kernel_value(kernel_, static_cast<double>(d) * scale);

        // Off-diagonal mass per t from prefix sums: distances 1..t to the
        // left and 1..m-1-t to the right.
        std::vector<double> prefix(m_, 0.0);
        for (std::size_t d = 1; d < m_; ++d) prefix[d] = prefix[d - 1] + kd[d];
        auto& den = den_[bi];
        den.resize(m_);
        for (std::size_t t = 0; t < m_; ++t) {
            den[t] = prefix[t] + prefix[m_ - 1 - t];
            if (den[t] == 0.0) degenerate_[bi] = true;
        }
    }

    use_fft_ = m_ >= kFftMinM;
    if (use_fft_) {
        fft_len_ = std::bit_ceil(2 * m_);
        const std::size_t nc = fft_len_ / 2 + 1;

        // Plan once with representative buffers; execution later uses the
        // new-array interface on per-thread workspaces with identical
        // (fftw_malloc) alignment.
        double* r = fftw_alloc_real(fft_len_);
        fftw_complex* c = fftw_alloc_complex(nc);
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            plan_fwd =
                fftw_plan_dft_r2c_1d(static_cast<int>(fft_len_), r, c, FFTW_ESTIMATE);
            plan_inv =
                fftw_plan_dft_c2r_1d(static_cast<int>(fft_len_), c, r, FFTW_ESTIMATE);
        }

        // Circular kernel: offset d at index d, offset -d at fft_len-d. Its
        // DFT is real (even sequence); keep the real part only.
        spectrum_.resize(nb);
        for (std::size_t bi = 0; bi < nb; ++bi) {
            std::fill(r, r + fft_len_, 0.0);
            for (std::size_t d = 1; d < m_; ++d) {
                r[d] = kd_[bi][d];
                r[fft_len_ - d] = kd_[bi][d];
            }
            fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd), r, c);
            auto& spec = spectrum_[bi];
            spec.resize(nc);
            for (std::size_t k = 0; k < nc; ++k) spec[k] = c[k][0];
        }

        fftw_free(r);
        fftw_free(c);
    }
}

LooSmoother::~LooSmoother() {
    if (plan_fwd || plan_inv) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (plan_fwd) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd));
        if (plan_inv) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv));
    }
}

LooSmoother::Workspace::~Workspace() {
    if (real) fftw_free(real);
    if (spec) fftw_free(spec);
    if (prod) fftw_free(prod);
}

LooSmoother::Workspace::Workspace(Workspace&& o) noexcept
    : real(o.real), spec(o.spec), prod(o.prod), spec_valid(o.spec_valid) {
    o.real = nullptr;
    o.spec = nullptr;
    o.prod = nullptr;
}

LooSmoother::Workspace& LooSmoother::Workspace::operator=(Workspace&& o) noexcept {
    std::swap(real, o.real);
    std::swap(spec, o.spec);
    std::swap(prod, o.prod);
    std::swap(spec_valid, o.spec_valid);
    return *this;
}

LooSmoother::Workspace LooSmoother::make_workspace() const {
    Workspace ws;
    if (use_fft_) {
        ws.real = fftw_alloc_real(fft_len_);
        ws.spec = fftw_alloc_complex(fft_len_ / 2 + 1);
        ws.prod = fftw_alloc_complex(fft_len_ / 2 + 1);
    }
    return ws;
}

// num[t] = sum_{i != t} K_ti z[i], by circular convolution (large m) or the
// direct fixed-order summation that doubles as the reference path.
void LooSmoother::convolve(std::span<const double> z, std::size_t bi,
                           Workspace& ws, std::span<double> num) const {
    if (use_fft_) {
        const std::size_t nc = fft_len_ / 2 + 1;
        auto* spec = static_cast<fftw_complex*>(ws.spec);
        auto* prod = static_cast<fftw_complex*>(ws.prod);
        if (!ws.spec_valid) {
            std::copy(z.begin(), z.end(), ws.real);
            std::fill(ws.real + m_, ws.real + fft_len_, 0.0);
            fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd), ws.real, spec);
            ws.spec_valid = true;
        }
        const auto& ks = spectrum_[bi];
        for (std::size_t k = 0; k < nc; ++k) {
            prod[k][0] = spec[k][0] * ks[k];
            prod[k][1] = spec[k][1] * ks[k];
        }
        fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inv), prod, ws.real);
        const double inv_len = 1.0 / static_cast<double>(fft_len_);
        for (std::size_t t = 0; t < m_; ++t) num[t] = ws.real[t] * inv_len;
    } else {
        const auto& kd = kd_[bi];
        for (std::size_t t = 0; t < m_; ++t) {
            double s = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == t) continue;
                const std::size_t d = i > t ? i - t : t - i;
                s += kd[d] * z[i];
            }
            num[t] = s;
        }
    }
}

bool LooSmoother::smooth_nothrow(std::span<const double> z, std::size_t bi,
                                 std::span<double> h2, Workspace& ws) const {
    if (degenerate_[bi]) return false;
    convolve(z, bi, ws, h2);
    const auto& den = den_[bi];
    for (std::size_t t = 0; t < m_; ++t) h2[t] /= den[t];
    return true;
}

void LooSmoother::smooth(std::span<const double> z, std::size_t bi,
                         std::span<double> h2, Workspace& ws) const {
    if (z.size() != m_ || h2.size() != m_)
        throw InvalidInput("smooth: vector length does not match smoother");
    ws.spec_valid = false; // cannot assume z matches the cached transform
    if (!smooth_nothrow(z, bi, h2, ws))
        throw DegenerateBandwidth(
            "kernel weights underflowed at bandwidth " +
            std::to_string(bandwidths_[bi]) + " for sample length " +
            std::to_string(m_));
    for (std::size_t t = 0; t < m_; ++t)
        if (h2[t] <= 0.0)
            throw DegenerateVariance("smoothed variance vanished at index " +
                                     std::to_string(t));
}

LooSmoother::Selection LooSmoother::select(std::span<const double> z, Workspace& ws,
                                           std::span<double> h2_best,
                                           std::vector<double>* scores) const {
    if (z.size() != m_ || h2_best.size() != m_)
        throw InvalidInput("select: vector length mismatch");
    ws.spec_valid = false; // new z

    constexpr double inf = std::numeric_limits<double>::infinity();
    if (scores) scores->assign(bandwidths_.size(), inf);

    std::vector<double> h2(m_);
    std::size_t best = bandwidths_.size();
    double best_score = inf;
    for (std::size_t bi = 0; bi < bandwidths_.size(); ++bi) {
        if (!smooth_nothrow(z, bi, h2, ws)) continue;
        double s = 0.0;
        for (std::size_t t = 0; t < m_; ++t) {
            const double d = z[t] - h2[t];
            s += d * d;
        }
        s /= static_cast<double>(m_);
        if (scores) (*scores)[bi] = s;
        // strict <: with the ascending grid, ties keep the smaller bandwidth
        if (s < best_score) {
            best_score = s;
            best = bi;
            std::copy(h2.begin(), h2.end(), h2_best.begin());
        }
    }
    if (best == bandwidths_.size())
        throw DegenerateBandwidth("every candidate bandwidth is degenerate");
    for (std::size_t t = 0; t < m_; ++t)
        if (h2_best[t] <= 0.0)
            throw DegenerateVariance(
                "selected variance fit vanished at index " + std::to_string(t));
    return {best, best_score};
}

std::vector<double> loo_smooth_once(std::span<const double> z, double b,
                                    Kernel kernel) {
    const std::size_t m = z.size();
    if (m < 3) throw InvalidInput("loo_smooth_once: need at least 3 values");
    if (!(b > 0.0)) throw InvalidInput("loo_smooth_once: bandwidth must be positive");

    std::vector<double> kd(m, 0.0);
    const double scale = 1.0 / (static_cast<double>(m) * b);
    for (std::size_t d = 1; d < m; ++d)
        kd[d] = kernel_value(kernel, static_cast<double>(d) * scale);
    std::vector<double> prefix(m, 0.0);
    for (std::size_t d = 1; d < m; ++d) prefix[d] = prefix[d - 1] + kd[d];

    std::vector<double> h2(m);
    for (std::size_t t = 0; t < m; ++t) {
        const double den = prefix[t] + prefix[m - 1 - t];
        if (den == 0.0)
            throw DegenerateBandwidth("loo_smooth_once: weights underflowed at index " +
                                      std::to_string(t));
        double num = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == t) continue;
            num += kd[t > i ? t - i : i - t] * z[i];
        }
        h2[t] = num / den;
    }
    return h2;
}

VariancePath smooth_variance(std::span<const double> residuals, double b,
                             Kernel kernel) {
    if (residuals.size() < 3)
        throw InvalidInput("smooth_variance: need at least 3 residuals");
    if (!(b > 0.0)) throw InvalidInput("smooth_variance: bandwidth must be positive");

    const std::size_t m = residuals.size();
    VariancePath path;
    path.bandwidth = b;
    path.kernel = kernel;
    path.h_squared = loo_smooth_once(squared_centered(residuals), b, kernel);
    path.h.resize(m);
    for (std::size_t t = 0; t < m; ++t) {
        if (path.h_squared[t] <= 0.0)
            throw DegenerateVariance(
                "smooth_variance: variance fit vanished at index " + std::to_string(t));
        path.h[t] = std::sqrt(path.h_squared[t]);
    }
    return path;
}

double cv_score(std::span<const double> residuals, double b, Kernel kernel) {
    const auto path = smooth_variance(residuals, b, kernel);
    const auto z = squared_centered(residuals);
    double s = 0.0;
    for (std::size_t t = 0; t < z.size(); ++t) {
        const double d = z[t] - path.h_squared[t];
        s += d * d;
    }
    return s / static_cast<double>(z.size());
}

double select_bandwidth_cv(std::span<const double> residuals,
                           const BandwidthGrid& grid, Kernel kernel) {
    if (residuals.size() < 3)
        throw InvalidInput("select_bandwidth_cv: need at least 3 residuals");
    const auto bs = grid.values(residuals.size());
    LooSmoother sm(residuals.size(), bs, kernel);
    auto ws = sm.make_workspace();
    const auto z = squared_centered(residuals);
    std::vector<double> h2(residuals.size());
    return bs[sm.select(z, ws, h2).index];
}

double fixed_bandwidth(std::span<const double> residuals, double gamma) {
    if (residuals.empty()) throw InvalidInput("fixed_bandwidth: empty residuals");
    if (!(gamma > 0.0)) throw InvalidInput("fixed_bandwidth: gamma must be positive");
    const auto z = squared_centered(residuals);
    double s2 = 0.0;
    for (double v : z) s2 += v;
    s2 /= static_cast<double>(z.size());
    if (s2 == 0.0)
        throw DegenerateVariance("fixed_bandwidth: zero sample variance");
    return gamma * std::pow(s2 / static_cast<double>(residuals.size()), 0.2);
}

std::vector<double> standardize(std::span<const double> residuals,
                                const VariancePath& path) {
    if (residuals.size() != path.h.size())
        throw InvalidInput("standardize: path length does not match residuals");
    double ubar = 0.0;
    for (double v : residuals) ubar += v;
    ubar /= static_cast<double>(residuals.size());
    std::vector<double> eps(residuals.size());
    for (std::size_t t = 0; t < eps.size(); ++t)
        eps[t] = (residuals[t] - ubar) / path.h[t];
    return eps;
}

namespace reference {

std::vector<double> loo_smooth(std::span<const double> z, double b, Kernel kernel) {
    const std::size_t m = z.size();
    if (m < 3) throw InvalidInput("loo_smooth: need at least 3 values");
    std::vector<double> h2(m);
    const double scale = 1.0 / (static_cast<double>(m) * b);
    for (std::size_t t = 0; t < m; ++t) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == t) continue;
            const double diff = static_cast<double>(t) - static_cast<double>(i);
            const double k = kernel_value(kernel, diff * scale);
            num += k * z[i];
            den += k;
        }
        if (den == 0.0)
            throw DegenerateBandwidth("loo_smooth: weights underflowed");
        h2[t] = num / den;
    }
    return h2;
}

} // namespace reference

} // namespace hetjb
