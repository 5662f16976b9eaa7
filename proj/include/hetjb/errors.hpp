#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetjb {

// Base class for everything thrown by this library. The CLI maps subclasses
// to distinct exit codes, so keep the hierarchy flat and specific.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad arguments: empty series, out-of-range parameters, length mismatches.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// The AR normal-equation matrix is (numerically) singular.
class SingularSystem : public Error {
public:
    using Error::Error;
};

// All off-diagonal kernel weights underflowed for some observation; the
// bandwidth is too small for the sample spacing.
class DegenerateBandwidth : public Error {
public:
    using Error::Error;
};

// A variance estimate collapsed to zero (constant data, zero residuals, ...).
class DegenerateVariance : public Error {
public:
    using Error::Error;
};

// CSV / date / number parsing problems. Messages name the offending row.
class ParseError : public Error {
public:
    using Error::Error;
};

// Filesystem-level trouble, distinct from parse errors for exit-code mapping.
class IoError : public Error {
public:
    using Error::Error;
};

// A single bootstrap replicate failed; carries the seed so the draw can be
// replayed in isolation.
class ReplicateFailure : public Error {
public:
    ReplicateFailure(const std::string& what, std::uint64_t seed)
        : Error(what), seed_(seed) {}
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

// Too many replicates failed for the bootstrap p-value to be trustworthy.
class BootstrapFailure : public Error {
public:
    BootstrapFailure(const std::string& what, std::vector<std::uint64_t> seeds)
        : Error(what), seeds_(std::move(seeds)) {}
    const std::vector<std::uint64_t>& failing_seeds() const { return seeds_; }

private:
    std::vector<std::uint64_t> seeds_;
};

// Too many Monte Carlo replications failed (over 1%) for a frequency cell
// to be reported honestly.
class ExperimentFailure : public Error {
public:
    using Error::Error;
};

} // namespace hetjb
