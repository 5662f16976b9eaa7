// Timing harness for the two smoothing implementations and the OpenMP
// experiment loop. Not a correctness test (those live in tests/), but the
// agreement columns keep the numbers honest while comparing speed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "hetjb/kernel_variance.hpp"
#include "hetjb/montecarlo.hpp"
#include "hetjb/rng.hpp"

using namespace hetjb;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    const auto dt = std::chrono::steady_clock::now() - t0;
    return std::chrono::duration<double, std::milli>(dt).count();
}

std::vector<double> synth_residuals(std::size_t m, std::uint64_t seed) {
    rng::Stream stream(seed);
    std::vector<double> u(m);
    for (std::size_t t = 0; t < m; ++t) {
        const double r = static_cast<double>(t + 1) / static_cast<double>(m);
        u[t] = std::sqrt(variance_profile_eq8(r)) * stream.next_normal();
    }
    return u;
}

std::vector<double> squared_centered(const std::vector<double>& u) {
    double ubar = 0.0;
    for (double v : u) ubar += v;
    ubar /= static_cast<double>(u.size());
    std::vector<double> z(u.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (u[i] - ubar) * (u[i] - ubar);
    return z;
}

void bench_smoother() {
    std::printf("-- CV bandwidth selection: direct reference vs batched smoother --\n");
    std::printf("%8s  %12s  %12s  %8s  %10s\n", "m", "reference ms", "batched ms",
                "speedup", "max |diff|");
    const BandwidthGrid grid;
    for (std::size_t m : {100u, 200u, 400u, 800u, 1600u}) {
        const auto u = synth_residuals(m, 42);
        const auto z = squared_centered(u);
        const auto bs = grid.values(m);

        auto t0 = std::chrono::steady_clock::now();
        std::size_t ref_best = 0;
        double ref_score = 0.0;
        std::vector<double> ref_h2;
        for (std::size_t bi = 0; bi < bs.size(); ++bi) {
            const auto h2 = reference::loo_smooth(z, bs[bi], Kernel::normal);
            double s = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                const double d = z[t] - h2[t];
                s += d * d;
            }
            s /= static_cast<double>(m);
            if (bi == 0 || s < ref_score) {
                ref_score = s;
                ref_best = bi;
                ref_h2 = h2;
            }
        }
        const double t_ref = ms_since(t0);

        LooSmoother sm(m, bs, Kernel::normal);
        auto ws = sm.make_workspace();
        std::vector<double> h2(m);
        t0 = std::chrono::steady_clock::now();
        const auto sel = sm.select(z, ws, h2);
        const double t_fast = ms_since(t0);

        double diff = std::fabs(static_cast<double>(sel.index) -
                                static_cast<double>(ref_best)); // 0 when they agree
        for (std::size_t t = 0; t < m; ++t)
            diff = std::max(diff, std::fabs(h2[t] - ref_h2[t]));
        std::printf("%8zu  %12.2f  %12.2f  %7.1fx  %10.2e\n", m, t_ref, t_fast,
                    t_ref / t_fast, diff);
    }
}

void bench_experiment() {
    std::printf("\n-- size_experiment cell (T_cv, n = 400, N = 200) thread scaling --\n");
    const std::vector<TestSpec> tests{{Method::t_cv, 1.0}};
    const DgpConfig scenario; // homoscedastic gaussian
    McOptions opts;

    const int max_threads = omp_get_max_threads();
    double pct1 = 0.0;
    for (int threads : {1, max_threads}) {
        omp_set_num_threads(threads);
        const auto t0 = std::chrono::steady_clock::now();
        const McReport rep = size_experiment(tests, {400}, 200, scenario, 7, opts);
        const double t = ms_since(t0);
        if (threads == 1) pct1 = rep.cells[0].rejection_pct;
        const bool same = rep.cells[0].rejection_pct == pct1;
        std::printf("threads=%2d: %8.1f ms   cell=%.2f%%   identical to serial: %s\n",
                    threads, t, rep.cells[0].rejection_pct, same ? "yes" : "NO");
        if (threads == max_threads && !same) std::printf("DETERMINISM VIOLATION\n");
    }
    omp_set_num_threads(max_threads);
}

} // namespace

int main() {
    std::printf("hetjb kernel benchmarks (%d threads available)\n\n",
                omp_get_max_threads());
    bench_smoother();
    bench_experiment();
    return 0;
}
