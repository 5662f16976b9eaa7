#include "hetjb/series.hpp"

#include <cmath>
#include <cstdio>

#include "hetjb/errors.hpp"

namespace hetjb {

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

Series make_series(std::vector<double> values, std::string label,
                   std::optional<std::vector<Date>> timestamps) {
    if (values.empty())
        throw InvalidInput("series must contain at least one value");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw InvalidInput("series value at index " + std::to_string(i) +
                               " is not finite");
    if (timestamps) {
        if (timestamps->size() != values.size())
            throw InvalidInput("timestamps length does not match values");
        for (std::size_t i = 1; i < timestamps->size(); ++i)
            if (!((*timestamps)[i - 1] < (*timestamps)[i]))
                throw InvalidInput(
                    "timestamps must be strictly increasing (violated at index " +
                    std::to_string(i) + ")");
    }
    return Series{std::move(values), std::move(label), std::move(timestamps)};
}

double sample_mean(const Series& series) {
    if (series.values.empty())
        throw InvalidInput("sample_mean: empty series");
    double s = 0.0;
    for (double v : series.values) s += v;
    return s / static_cast<double>(series.values.size());
}

} // namespace hetjb
