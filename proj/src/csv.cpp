#include "hetjb/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "hetjb/errors.hpp"

namespace hetjb {

namespace {

// Minimal CSV row model: comma-separated, optional double quotes around a
// field, surrounding whitespace ignored. Embedded commas/escapes are out of
// scope for the exports this tool reads.
std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string f = line.substr(start, comma == std::string::npos
                                               ? std::string::npos
                                               : comma - start);
        const auto notspace = [](unsigned char c) { return !std::isspace(c); };
        f.erase(f.begin(), std::find_if(f.begin(), f.end(), notspace));
        f.erase(std::find_if(f.rbegin(), f.rend(), notspace).base(), f.end());
        if (f.size() >= 2 && f.front() == '"' && f.back() == '"')
            f = f.substr(1, f.size() - 2);
        fields.push_back(std::move(f));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

int to_int(std::string_view s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return -1;
    return v;
}

int days_in_month(int year, int month) {
    static const int days[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2) {
        const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        return leap ? 29 : 28;
    }
    return days[month - 1];
}

Date parse_date(const std::string& s, std::size_t line_no) {
    Date d;
    if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
        d.year = to_int(std::string_view(s).substr(0, 4));
        d.month = to_int(std::string_view(s).substr(5, 2));
        d.day = to_int(std::string_view(s).substr(8, 2));
    } else if (s.size() == 10 && s[2] == '/' && s[5] == '/') {
        d.month = to_int(std::string_view(s).substr(0, 2));
        d.day = to_int(std::string_view(s).substr(3, 2));
        d.year = to_int(std::string_view(s).substr(6, 4));
    } else {
        throw ParseError("line " + std::to_string(line_no) + ": unrecognized date '" +
                         s + "' (expected YYYY-MM-DD or MM/DD/YYYY)");
    }
    if (d.year < 0 || d.month < 1 || d.month > 12 || d.day < 1 ||
        d.day > days_in_month(d.year, d.month))
        throw ParseError("line " + std::to_string(line_no) + ": impossible date '" +
                         s + "'");
    return d;
}

double parse_value(const std::string& s, std::size_t line_no) {
    if (s.empty())
        throw ParseError("line " + std::to_string(line_no) + ": empty value cell");
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("line " + std::to_string(line_no) + ": non-numeric value '" +
                         s + "'");
    return v;
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    std::string have;
    for (const auto& h : header) {
        if (!have.empty()) have += ", ";
        have += h;
    }
    throw ParseError("missing column '" + name + "' (header has: " + have + ")");
}

} // namespace

Series ingest_csv(const std::string& path, const std::string& value_column,
                  const std::optional<std::string>& date_column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
        line.erase(0, 3); // UTF-8 BOM from spreadsheet exports
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_fields(line);
    const std::size_t vcol = column_index(header, value_column);
    std::size_t dcol = 0;
    if (date_column) dcol = column_index(header, *date_column);

    std::vector<double> values;
    std::vector<Date> dates;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        const std::size_t need = std::max(vcol, date_column ? dcol : vcol);
        if (fields.size() <= need)
            throw ParseError("line " + std::to_string(line_no) + ": only " +
                             std::to_string(fields.size()) + " fields");
        values.push_back(parse_value(fields[vcol], line_no));
        if (date_column) dates.push_back(parse_date(fields[dcol], line_no));
    }
    if (values.empty()) throw ParseError(path + ": no data rows");

    if (!date_column) return make_series(std::move(values), value_column);

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dates[a] < dates[b]; });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (dates[order[i - 1]] == dates[order[i]])
            throw ParseError("duplicate date " + dates[order[i]].iso());

    std::vector<double> sorted_values(values.size());
    std::vector<Date> sorted_dates(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        sorted_values[i] = values[order[i]];
        sorted_dates[i] = dates[order[i]];
    }
    return make_series(std::move(sorted_values), value_column,
                       std::move(sorted_dates));
}

Series transform_logdiff(const Series& series) {
    const std::size_t n = series.size();
    if (n < 2) throw InvalidInput("logdiff needs at least 2 observations");
    for (std::size_t i = 0; i < n; ++i)
        if (!(series.values[i] > 0.0))
            throw InvalidInput("logdiff: nonpositive value at row " +
                               std::to_string(i + 1));

    std::vector<double> out(n - 1);
    for (std::size_t i = 1; i < n; ++i)
        out[i - 1] = 100.0 * std::log(series.values[i] / series.values[i - 1]);

    std::optional<std::vector<Date>> dates;
    if (series.timestamps)
        dates.emplace(series.timestamps->begin() + 1, series.timestamps->end());
    return make_series(std::move(out), series.label, std::move(dates));
}

} // namespace hetjb
