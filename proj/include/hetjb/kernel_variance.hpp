#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace hetjb {

enum class Kernel { normal, uniform };

// Per-observation variance estimates and the bandwidth that produced them.
struct VariancePath {
    std::vector<double> h;         // sqrt(h_squared), all > 0
    std::vector<double> h_squared; // leave-one-out kernel fit, same length as residuals
    double bandwidth = 0.0;
    Kernel kernel = Kernel::normal;
};

// Log-spaced candidate bandwidths c * b_ref for c in [c_min, c_max].
// b_ref = 0 means "use m^{-1/3}", which satisfies the admissible-rate window
// for the smoother on both sides.
struct BandwidthGrid {
    double b_ref = 0.0;
    double c_min = 0.2;
    double c_max = 3.0;
    int points = 25;

    // Ascending grid for a residual sample of length m. Validates fields.
    std::vector<double> values(std::size_t m) const;
};

// Batch leave-one-out smoother for a fixed sample length and bandwidth set.
// Kernel tables, normalizers, and (for large m) FFT plans are precomputed
// once; per-call work is O(m log m) via circular convolution, or the direct
// O(m^2) per-t summation below kFftMinM. Construction serializes on a
// global planner lock (FFT planning is not thread-safe), so hot loops
// should build the smoother once up front; smoothing itself may run
// concurrently, one Workspace per thread.
class LooSmoother {
public:
    static constexpr std::size_t kFftMinM = 128;

    LooSmoother(std::size_t m, std::vector<double> bandwidths, Kernel kernel);
    ~LooSmoother();
    LooSmoother(const LooSmoother&) = delete;
    LooSmoother& operator=(const LooSmoother&) = delete;

    std::size_t m() const { return m_; }
    const std::vector<double>& bandwidths() const { return bandwidths_; }

    class Workspace {
    public:
        ~Workspace();
        Workspace(Workspace&&) noexcept;
        Workspace& operator=(Workspace&&) noexcept;

    private:
        friend class LooSmoother;
        Workspace() = default;
        double* real = nullptr;   // length fft_len
        void* spec = nullptr;     // fftw_complex[fft_len/2+1], FFT of padded z
        void* prod = nullptr;     // fftw_complex[fft_len/2+1], scratch
        bool spec_valid = false;
    };
    Workspace make_workspace() const;

    // h2[t] = sum_{i != t} w_{ti} z[i] for the bi-th bandwidth. z is the
    // squared-centered-residual vector. Throws DegenerateBandwidth if the
    // off-diagonal weight mass underflowed for some t at this bandwidth,
    // DegenerateVariance if some fitted value is exactly zero.
    void smooth(std::span<const double> z, std::size_t bi, std::span<double> h2,
                Workspace& ws) const;

    // CV(b) = mean_t (z[t] - h2_b[t])^2 for every bandwidth; returns the
    // argmin index with ties resolved to the smaller bandwidth and leaves the
    // winning fit in h2_best (so callers need not re-smooth). Bandwidths that
    // are degenerate for this z get +inf scores; if all are, throws
    // DegenerateBandwidth; a nonpositive value in the winning fit throws
    // DegenerateVariance. `scores`, when given, receives the full curve.
    struct Selection {
        std::size_t index;
        double score;
    };
    Selection select(std::span<const double> z, Workspace& ws,
                     std::span<double> h2_best,
                     std::vector<double>* scores = nullptr) const;

private:
    void convolve(std::span<const double> z, std::size_t bi, Workspace& ws,
                  std::span<double> num) const;
    bool smooth_nothrow(std::span<const double> z, std::size_t bi,
                        std::span<double> h2, Workspace& ws) const;

    std::size_t m_;
    std::vector<double> bandwidths_;
    Kernel kernel_;
    bool use_fft_ = false;
    std::size_t fft_len_ = 0;
    std::vector<std::vector<double>> kd_;       // kernel table per bandwidth, kd[0] = 0
    std::vector<std::vector<double>> den_;      // per-t weight mass per bandwidth
    std::vector<bool> degenerate_;              // den underflowed somewhere
    std::vector<std::vector<double>> spectrum_; // real FFT of the circular kernel
    void* plan_fwd = nullptr;                   // fftw_plan
    void* plan_inv = nullptr;
};

// Single-bandwidth leave-one-out fit via the tabled direct summation:
// O(m) kernel evaluations, O(m^2) accumulation, no FFT planning, safe in
// any thread. The workhorse behind the one-shot helpers and the
// fixed-bandwidth bootstrap replicates, where the bandwidth changes with
// every draw. Throws DegenerateBandwidth if the off-diagonal weight mass
// underflowed for some t.
std::vector<double> loo_smooth_once(std::span<const double> z, double b,
                                    Kernel kernel);

// One-shot conveniences over the smoothing core (these rebuild tables per
// call; hot loops should hold a LooSmoother instead).

// Leave-one-out normal-kernel fit of the squared centered residuals:
// z_i = (u_i - ubar)^2, K_ti = K((t-i)/(m b)), K_tt = 0, weights normalized
// per t. Requires m >= 3 and b > 0.
VariancePath smooth_variance(std::span<const double> residuals, double b,
                             Kernel kernel = Kernel::normal);

// CV(b) = m^{-1} sum_t (z_t - h2_t(b))^2; the K_tt = 0 convention makes the
// fit already leave-one-out.
double cv_score(std::span<const double> residuals, double b,
                Kernel kernel = Kernel::normal);

// Grid value minimizing cv_score; ties broken toward the smaller bandwidth.
double select_bandwidth_cv(std::span<const double> residuals,
                           const BandwidthGrid& grid,
                           Kernel kernel = Kernel::normal);

// gamma * (sigma2_hat / m)^{0.2} with sigma2_hat the (divisor-m) sample
// variance of the residuals.
double fixed_bandwidth(std::span<const double> residuals, double gamma);

// Elementwise (u_t - ubar) / h_t against a path computed from the same
// residual vector.
std::vector<double> standardize(std::span<const double> residuals,
                                const VariancePath& path);

namespace reference {
// Direct per-t double-loop smoother (i ascending, self term skipped): the
// serial implementation the fast path is validated against in tests and
// benchmarks. Operates on the squared-centered values z directly.
std::vector<double> loo_smooth(std::span<const double> z, double b, Kernel kernel);
} // namespace reference

} // namespace hetjb
