#include "hetjb/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetjb/ar.hpp"
#include "hetjb/errors.hpp"
#include "hetjb/rng.hpp"

namespace hetjb {

namespace {

using nlohmann::json;

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string kernel_name(Kernel k) {
    return k == Kernel::normal ? "normal" : "uniform";
}

json tests_to_json(const AnalysisReport& report) {
    json arr = json::array();
    for (std::size_t i = 0; i < report.tests.size(); ++i) {
        const JbResult& r = report.tests[i];
        json t;
        t["test"] = report.test_labels[i];
        t["statistic"] = r.statistic;
        t["skew_component"] = r.skew_component;
        t["kurt_component"] = r.kurt_component;
        t["p_value"] = r.p_value;
        t["bandwidth"] = r.bandwidth ? json(*r.bandwidth) : json(nullptr);
        t["sample_size"] = r.sample_size;
        t["replicates_used"] = r.replicates_used;
        t["failed_replicates"] = r.failed_replicates;
        arr.push_back(std::move(t));
    }
    return arr;
}

void emit_analysis_text(const AnalysisReport& report, std::ostream& out) {
    out << "input:        " << report.input << "\n";
    out << "transform:    " << report.transform << "\n";
    out << "observations: " << report.n << "\n";
    out << "ar order:     " << report.order
        << (report.order_auto ? " (auto)" : "") << "\n";
    out << "omega_hat:    " << fmt("%.6g", report.omega_hat) << "\n";
    std::string thetas;
    for (double t : report.theta_hat) {
        if (!thetas.empty()) thetas += ", ";
        thetas += fmt("%.6g", t);
    }
    out << "theta_hat:    " << (thetas.empty() ? "-" : thetas) << "\n";
    out << "cv bandwidth: " << fmt("%.6g", report.path.bandwidth) << " ("
        << kernel_name(report.path.kernel) << " kernel)\n";
    out << "seed:         " << report.master_seed << "\n\n";

    std::size_t name_w = 4;
    for (const auto& l : report.test_labels) name_w = std::max(name_w, l.size());
    char line[160];
    std::snprintf(line, sizeof line, "%-*s  %11s  %11s  %10s  %6s  %6s",
                  static_cast<int>(name_w), "test", "statistic", "p-value %",
                  "bandwidth", "B", "failed");
    out << line << "\n";
    for (std::size_t i = 0; i < report.tests.size(); ++i) {
        const JbResult& r = report.tests[i];
        const std::string bw = r.bandwidth ? fmt("%.4f", *r.bandwidth) : "-";
        const std::string reps =
            r.replicates_used ? std::to_string(r.replicates_used) : "-";
        const std::string failed =
            r.replicates_used ? std::to_string(r.failed_replicates) : "-";
        std::snprintf(line, sizeof line, "%-*s  %11.4f  %11.4f  %10s  %6s  %6s",
                      static_cast<int>(name_w), report.test_labels[i].c_str(),
                      r.statistic, 100.0 * r.p_value, bw.c_str(), reps.c_str(),
                      failed.c_str());
        out << line << "\n";
    }
}

void emit_analysis_json(const AnalysisReport& report, std::ostream& out) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "analysis";
    j["version"] = report.version;
    j["input"] = report.input;
    j["transform"] = report.transform;
    j["n"] = report.n;
    j["seed"] = report.master_seed;
    j["ar"] = {{"order", report.order},
               {"auto", report.order_auto},
               {"omega_hat", report.omega_hat},
               {"theta_hat", report.theta_hat}};
    j["tests"] = tests_to_json(report);
    j["variance_path"] = {{"bandwidth", report.path.bandwidth},
                          {"kernel", kernel_name(report.path.kernel)},
                          {"h_hat", report.path.h},
                          {"h_squared", report.path.h_squared}};
    json obs;
    obs["index"] = report.index;
    obs["value"] = report.values;
    if (report.dates) {
        json d = json::array();
        for (const auto& date : *report.dates) d.push_back(date.iso());
        obs["date"] = std::move(d);
    } else {
        obs["date"] = nullptr;
    }
    j["observations"] = std::move(obs);
    out << j.dump(2) << "\n";
}

void emit_analysis_plotdata(const AnalysisReport& report, std::ostream& out) {
    out << "index,date,value,h_hat\n";
    for (std::size_t i = 0; i < report.index.size(); ++i) {
        out << report.index[i] << ',';
        if (report.dates) out << (*report.dates)[i].iso();
        out << ',' << fmt("%.10g", report.values[i]) << ','
            << fmt("%.10g", report.path.h[i]) << "\n";
    }
}

// distinct values in first-appearance order
template <typename T, typename F>
std::vector<T> collect(const std::vector<McCell>& cells, F pick) {
    std::vector<T> out;
    for (const auto& c : cells) {
        const T v = pick(c);
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
    return out;
}

bool is_power(const McReport& report) {
    return !report.cells.empty() && report.cells.front().delta.has_value();
}

void emit_mc_text(const McReport& report, std::ostream& out) {
    out << "scenario:     " << report.scenario << "\n";
    out << "replications: " << report.replications << "\n";
    out << "level:        " << fmt("%g", 100.0 * report.level) << "% (band "
        << fmt("%.2f", report.band_low_pct) << "% - "
        << fmt("%.2f", report.band_high_pct) << "%)\n";
    out << "seed:         " << report.master_seed << "\n\n";

    // pivot: one row per test, one column per n (or per delta)
    const bool power = is_power(report);
    const auto keys = power
                          ? collect<double>(report.cells,
                                            [](const McCell& c) { return *c.delta; })
                          : std::vector<double>{};
    const auto ns = power ? std::vector<std::size_t>{}
                          : collect<std::size_t>(
                                report.cells, [](const McCell& c) { return c.n; });
    std::vector<std::string> columns;
    for (double d : keys) columns.push_back("d=" + fmt("%.4g", d));
    for (std::size_t n : ns) columns.push_back("n=" + std::to_string(n));

    const auto tests = collect<std::string>(
        report.cells, [](const McCell& c) { return c.test; });
    const auto cell_at = [&](const std::string& test, std::size_t ci) -> const McCell* {
        for (const auto& c : report.cells) {
            if (c.test != test) continue;
            if (power ? (*c.delta == keys[ci]) : (c.n == ns[ci])) return &c;
        }
        return nullptr;
    };

    std::size_t name_w = 4;
    for (const auto& t : tests) name_w = std::max(name_w, t.size());

    std::string header = "test" + std::string(name_w - 4, ' ');
    for (const auto& c : columns) {
        const std::size_t w = std::max<std::size_t>(c.size(), 6);
        header += "  " + std::string(w - c.size(), ' ') + c;
    }
    out << header << "\n";

    std::string footnotes;
    for (const auto& t : tests) {
        std::string row = t + std::string(name_w - t.size(), ' ');
        for (std::size_t ci = 0; ci < columns.size(); ++ci) {
            const McCell* cell = cell_at(t, ci);
            const std::size_t w = std::max<std::size_t>(columns[ci].size(), 6);
            const std::string v = cell ? fmt("%.2f", cell->rejection_pct) : "-";
            row += "  " + std::string(w > v.size() ? w - v.size() : 0, ' ') + v;
            if (cell && cell->failures)
                footnotes += "failures: " + t + " at " + columns[ci] + ": " +
                             std::to_string(cell->failures) + "\n";
        }
        out << row << "\n";
    }
    if (!footnotes.empty()) out << "\n" << footnotes;
}

void emit_mc_json(const McReport& report, std::ostream& out) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = is_power(report) ? "power" : "size";
    j["version"] = std::string(kVersion);
    j["scenario"] = report.scenario;
    j["replications"] = report.replications;
    j["level"] = report.level;
    j["band_pct"] = {report.band_low_pct, report.band_high_pct};
    j["seed"] = report.master_seed;
    json cells = json::array();
    for (const auto& c : report.cells) {
        json e;
        e["test"] = c.test;
        e["n"] = c.n;
        e["delta"] = c.delta ? json(*c.delta) : json(nullptr);
        e["rejection_pct"] = c.rejection_pct;
        e["rejections"] = c.rejections;
        e["used"] = c.used;
        e["failures"] = c.failures;
        cells.push_back(std::move(e));
    }
    j["cells"] = std::move(cells);
    out << j.dump(2) << "\n";
}

void emit_mc_csv(const McReport& report, std::ostream& out) {
    out << "test,n,delta,rejection_pct,rejections,used,failures\n";
    for (const auto& c : report.cells) {
        out << c.test << ',' << c.n << ',';
        if (c.delta) out << fmt("%.10g", *c.delta);
        out << ',' << fmt("%.10g", c.rejection_pct) << ',' << c.rejections << ','
            << c.used << ',' << c.failures << "\n";
    }
}

template <typename Report, typename Emit>
void emit_to_path(const Report& report, ReportFormat format,
                  const std::string& path, Emit emit) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    emit(report, format, out);
    out.flush();
    if (!out) throw IoError("write failed for " + path);
}

} // namespace

int select_order_aic(const Series& series, int max_order) {
    // fit_ar needs n > 5p; shorter series simply skip the large candidates
    const std::size_t n = series.size();
    double best_aic = std::numeric_limits<double>::infinity();
    int best = -1;
    for (int p = 0; p <= max_order; ++p) {
        if (n <= 5 * static_cast<std::size_t>(p)) break;
        const ArFit fit = fit_ar(series, p);
        const double m = static_cast<double>(fit.residuals.size());
        double rss = 0.0;
        for (double u : fit.residuals) rss += u * u;
        const double aic = m * std::log(rss / m) + 2.0 * (p + 1);
        if (aic < best_aic) {
            best_aic = aic;
            best = p;
        }
    }
    if (best < 0) throw InvalidInput("series too short for any candidate order");
    return best;
}

AnalysisReport run_analysis(const Series& series, int order,
                            const std::vector<TestSpec>& tests,
                            const AnalysisOptions& options) {
    if (tests.empty()) throw InvalidInput("run_analysis: no tests requested");

    AnalysisReport report;
    report.input = series.label;
    report.n = series.size();
    report.master_seed = options.master_seed;

    const ArFit fit =
        fit_ar(series, order < 0 ? select_order_aic(series, options.max_auto_order)
                                 : order);
    report.order = fit.order;
    report.order_auto = order < 0;
    report.omega_hat = fit.omega_hat;
    report.theta_hat = fit.theta_hat;

    for (std::size_t ti = 0; ti < tests.size(); ++ti) {
        const TestSpec& ts = tests[ti];
        report.test_labels.push_back(test_label(ts));
        switch (ts.method) {
        case Method::t_st:
            report.tests.push_back(test_standard(fit.residuals));
            break;
        case Method::t_cv:
            report.tests.push_back(
                test_corrected(fit.residuals, CvRule{options.grid, options.kernel}));
            break;
        case Method::t_f:
            report.tests.push_back(
                test_corrected(fit.residuals, FixedRule{ts.gamma}));
            break;
        case Method::t_boot:
        case Method::t_f_boot: {
            BootstrapConfig bc;
            bc.replicates = options.bootstrap_replicates;
            if (ts.method == Method::t_boot)
                bc.rule = CvRule{options.grid, options.kernel};
            else
                bc.rule = FixedRule{ts.gamma};
            bc.master_seed = rng::derive_seed(options.master_seed, ti + 1);
            bc.parallel = options.parallel;
            bc.reselect_bandwidth = options.reselect_bandwidth;
            report.tests.push_back(test_bootstrap(series, fit.order, bc));
            break;
        }
        }
    }

    const double b_cv =
        select_bandwidth_cv(fit.residuals, options.grid, options.kernel);
    report.path = smooth_variance(fit.residuals, b_cv, options.kernel);

    const std::size_t p = static_cast<std::size_t>(fit.order);
    for (std::size_t t = p; t < series.size(); ++t) {
        report.index.push_back(t + 1);
        report.values.push_back(series.values[t]);
    }
    if (series.timestamps)
        report.dates.emplace(series.timestamps->begin() + static_cast<long>(p),
                             series.timestamps->end());
    return report;
}

void emit_report(const AnalysisReport& report, ReportFormat format,
                 std::ostream& out) {
    switch (format) {
    case ReportFormat::text: emit_analysis_text(report, out); break;
    case ReportFormat::json: emit_analysis_json(report, out); break;
    case ReportFormat::csv_plotdata: emit_analysis_plotdata(report, out); break;
    }
}

void emit_report(const AnalysisReport& report, ReportFormat format,
                 const std::string& path) {
    emit_to_path(report, format, path,
                 [](const AnalysisReport& r, ReportFormat f, std::ostream& o) {
                     emit_report(r, f, o);
                 });
}

void emit_mc_report(const McReport& report, ReportFormat format,
                    std::ostream& out) {
    switch (format) {
    case ReportFormat::text: emit_mc_text(report, out); break;
    case ReportFormat::json: emit_mc_json(report, out); break;
    case ReportFormat::csv_plotdata: emit_mc_csv(report, out); break;
    }
}

void emit_mc_report(const McReport& report, ReportFormat format,
                    const std::string& path) {
    emit_to_path(report, format, path,
                 [](const McReport& r, ReportFormat f, std::ostream& o) {
                     emit_mc_report(r, f, o);
                 });
}

} // namespace hetjb
