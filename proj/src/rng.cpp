#include "hetjb/rng.hpp"

#include <gsl/gsl_cdf.h>

#include "hetjb/errors.hpp"

namespace hetjb::rng {

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw InvalidInput("inverse_normal_cdf: p must lie in (0,1)");
    return gsl_cdf_ugaussian_Pinv(p);
}

} // namespace hetjb::rng
