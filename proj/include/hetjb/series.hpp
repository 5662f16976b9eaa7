#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace hetjb {

// Calendar date, kept deliberately minimal: the CLI only needs to order
// observations and echo labels back out.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;
    std::string iso() const; // "YYYY-MM-DD"
};

// An ordered real-valued sample, optionally dated. Construction validates
// the invariants (finite values; strictly increasing timestamps) once, so
// downstream code can assume them.
struct Series {
    std::vector<double> values;
    std::string label;
    std::optional<std::vector<Date>> timestamps;

    std::size_t size() const { return values.size(); }
};

// Validates and assembles a Series. Throws InvalidInput on NaN/inf values,
// length mismatch, or non-increasing timestamps.
Series make_series(std::vector<double> values, std::string label = {},
                   std::optional<std::vector<Date>> timestamps = std::nullopt);

// Arithmetic mean; the location estimate the AR fit uses.
double sample_mean(const Series& series);

} // namespace hetjb
