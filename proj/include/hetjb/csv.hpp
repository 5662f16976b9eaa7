#pragma once

#include <optional>
#include <string>

#include "hetjb/series.hpp"

namespace hetjb {

// Reads a CSV with a header row. Values come from value_column; when
// date_column is given the dates attach to the Series and the rows are
// sorted by date. Dates must be ISO 8601 (YYYY-MM-DD) or US MM/DD/YYYY --
// anything else is an error, not a guess. Unreadable files raise IoError;
// structural problems (missing column, non-numeric cell, duplicate date)
// raise ParseError naming the offending line.
Series ingest_csv(const std::string& path, const std::string& value_column,
                  const std::optional<std::string>& date_column = std::nullopt);

// y_t = 100 log(v_t / v_{t-1}): length n-1, dates shifted to the later
// period. Values must be strictly positive.
Series transform_logdiff(const Series& series);

} // namespace hetjb
