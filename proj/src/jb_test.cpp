#include "hetjb/jb_test.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "hetjb/errors.hpp"

namespace hetjb {

std::string_view method_name(Method m) {
    switch (m) {
    case Method::t_st: return "T_st";
    case Method::t_cv: return "T_cv";
    case Method::t_f: return "T_f";
    case Method::t_boot: return "T_boot";
    case Method::t_f_boot: return "T_f,boot";
    }
    return "?";
}

MomentSet sample_moments(std::span<const double> values, bool centered) {
    if (values.size() < 4)
        throw InvalidInput("sample_moments: need at least 4 values");
    const double inv_m = 1.0 / static_cast<double>(values.size());

    double shift = 0.0;
    if (centered) {
        for (double v : values) shift += v;
        shift *= inv_m;
    }
    double s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (double v : values) {
        const double d = v - shift;
        const double d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    MomentSet ms{s2 * inv_m, s3 * inv_m, s4 * inv_m, centered};
    if (ms.order_2 <= 0.0)
        throw DegenerateVariance("sample_moments: second moment vanished");
    return ms;
}

JbResult jb_statistic(const MomentSet& moments, std::size_t m) {
    if (m < 4) throw InvalidInput("jb_statistic: m must be at least 4");
    if (moments.order_2 <= 0.0)
        throw DegenerateVariance("jb_statistic: degenerate second moment");

    const double m2 = moments.order_2;
    const double skew_dev = moments.order_3; // appears squared below
    const double kurt_dev = moments.order_4 / (m2 * m2) - 3.0;
    const double dm = static_cast<double>(m);

    JbResult r;
    r.sample_size = m;
    r.skew_component = dm * skew_dev * skew_dev / (6.0 * m2 * m2 * m2);
    r.kurt_component = dm * kurt_dev * kurt_dev / 24.0;
    r.statistic = r.skew_component + r.kurt_component;
    return r;
}

double chi2_2_pvalue(double q) {
    if (q < 0.0) throw InvalidInput("chi2_2_pvalue: negative statistic");
    return std::exp(-0.5 * q);
}

JbResult test_standard(std::span<const double> residuals) {
    auto r = jb_statistic(sample_moments(residuals, true), residuals.size());
    r.p_value = chi2_2_pvalue(r.statistic);
    r.method = Method::t_st;
    return r;
}

JbResult test_corrected(std::span<const double> residuals,
                        const BandwidthRule& rule) {
    if (residuals.size() < 10)
        throw InvalidInput("test_corrected: need at least 10 residuals");

    double b;
    Kernel kernel = Kernel::normal;
    Method method;
    if (const auto* cv = std::get_if<CvRule>(&rule)) {
        kernel = cv->kernel;
        b = select_bandwidth_cv(residuals, cv->grid, kernel);
        method = Method::t_cv;
    } else {
        b = fixed_bandwidth(residuals, std::get<FixedRule>(rule).gamma);
        method = Method::t_f;
    }

    const auto path = smooth_variance(residuals, b, kernel);
    const auto eps = standardize(residuals, path);

    // standardized residuals are centered by construction: raw moments
    auto r = jb_statistic(sample_moments(eps, false), eps.size());
    r.p_value = chi2_2_pvalue(r.statistic);
    r.method = method;
    r.bandwidth = b;
    return r;
}

double kappa2(const std::function<double(double)>& g, int quad_points) {
    if (quad_points < 64) throw InvalidInput("kappa2: need at least 64 points");
    const double n = static_cast<double>(quad_points);
    double i2 = 0.0, i4 = 0.0;
    for (int k = 0; k < quad_points; ++k) {
        const double r = (static_cast<double>(k) + 0.5) / n;
        const double v = g(r);
        const double v2 = v * v;
        i2 += v2;
        i4 += v2 * v2;
    }
    i2 /= n;
    i4 /= n;
    if (!(i2 > 0.0)) throw InvalidInput("kappa2: profile square-integral vanished");
    return i4 / (i2 * i2);
}

double kurtosis_limit(double kappa2, double fourth_moment) {
    if (kappa2 < 1.0)
        throw InvalidInput("kurtosis_limit: kappa2 below 1 is impossible");
    if (fourth_moment < 1.0)
        throw InvalidInput("kurtosis_limit: fourth moment below 1 is impossible");
    const double dev = kappa2 * (fourth_moment - 3.0) + 3.0 * (kappa2 - 1.0);
    return dev * dev / 24.0;
}

} // namespace hetjb
