#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "hetjb/ar.hpp"
#include "hetjb/csv.hpp"
#include "hetjb/errors.hpp"
#include "hetjb/jb_test.hpp"
#include "hetjb/kernel_variance.hpp"
#include "hetjb/montecarlo.hpp"
#include "hetjb/report.hpp"
#include "hetjb/series.hpp"

namespace {

// --tests is comma-separated, but "T_f,boot" legitimately contains a comma:
// re-attach a "boot..." token to a preceding bare "T_f". "T_f_boot" is
// accepted as an unambiguous alias.
std::vector<std::string> split_test_labels(const std::string& list) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start <= list.size()) {
        std::size_t comma = list.find(',', start);
        if (comma == std::string::npos) comma = list.size();
        std::string tok = list.substr(start, comma - start);
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        if (!tok.empty()) tokens.push_back(std::move(tok));
        start = comma + 1;
    }
    std::vector<std::string> labels;
    for (auto& tok : tokens) {
        if (tok.rfind("T_f_boot", 0) == 0) tok = "T_f,boot" + tok.substr(8);
        if (!labels.empty() && labels.back() == "T_f" &&
            (tok == "boot" || tok.rfind("boot(", 0) == 0)) {
            labels.back() += "," + tok;
        } else {
            labels.push_back(std::move(tok));
        }
    }
    return labels;
}

std::vector<hetjb::TestSpec> parse_test_list(const std::string& list,
                                             double gamma, bool gamma_set) {
    std::vector<hetjb::TestSpec> specs;
    for (auto& label : split_test_labels(list)) {
        hetjb::TestSpec spec = hetjb::parse_test_spec(label);
        // --gamma supplies the bandwidth factor for bare fixed-rule names
        const bool bare = label == "T_f" || label == "T_f,boot";
        if (gamma_set && bare) spec.gamma = gamma;
        specs.push_back(spec);
    }
    return specs;
}

std::uint64_t seed_from_env() {
    const char* env = std::getenv("HETJB_SEED");
    if (!env) return 0;
    std::uint64_t v = 0;
    const std::string s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw CLI::ValidationError("HETJB_SEED",
                                   "must be an unsigned integer, got '" + s + "'");
    return v;
}

struct CommonFlags {
    double grid_cmin = 0.2;
    double grid_cmax = 3.0;
    int grid_points = 25;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    int jobs = 0;
    std::string output;
    hetjb::ReportFormat format = hetjb::ReportFormat::text;

    void attach(CLI::App* cmd, bool with_format = true) {
        cmd->add_option("--grid-cmin", grid_cmin,
                        "Smallest grid factor relative to the reference bandwidth")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--grid-cmax", grid_cmax, "Largest grid factor")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--grid-points", grid_points, "Bandwidth grid size")
            ->check(CLI::Range(2, 1000))
            ->capture_default_str();
        seed_opt = cmd->add_option("--seed", seed,
                                   "Master seed (HETJB_SEED when absent)");
        cmd->add_option("--jobs", jobs, "Worker thread budget (default: all cores)")
            ->check(CLI::Range(1, 4096));
        cmd->add_option("-o,--output", output, "Write here instead of stdout");
        if (with_format) {
            const std::map<std::string, hetjb::ReportFormat> names{
                {"text", hetjb::ReportFormat::text},
                {"json", hetjb::ReportFormat::json},
                {"csv-plotdata", hetjb::ReportFormat::csv_plotdata}};
            cmd->add_option("--format", format, "text, json, or csv-plotdata")
                ->transform(CLI::CheckedTransformer(names))
                ->default_str("text");
        }
    }

    void finalize() {
        if (!seed_opt->count()) seed = seed_from_env();
        if (jobs > 0) omp_set_num_threads(jobs);
    }

    hetjb::BandwidthGrid grid() const {
        return {0.0, grid_cmin, grid_cmax, grid_points};
    }
};

template <typename Report>
void emit_any(const Report& report, hetjb::ReportFormat format,
              const std::string& output) {
    if (output.empty()) {
        if constexpr (std::is_same_v<Report, hetjb::AnalysisReport>)
            hetjb::emit_report(report, format, std::cout);
        else
            hetjb::emit_mc_report(report, format, std::cout);
    } else {
        if constexpr (std::is_same_v<Report, hetjb::AnalysisReport>)
            hetjb::emit_report(report, format, output);
        else
            hetjb::emit_mc_report(report, format, output);
    }
}

hetjb::Series load_input(const std::string& path, const std::string& value_column,
                         const std::string& date_column, bool logdiff) {
    std::optional<std::string> dates;
    if (!date_column.empty()) dates = date_column;
    hetjb::Series s = hetjb::ingest_csv(path, value_column, dates);
    if (logdiff) s = hetjb::transform_logdiff(s);
    return s;
}

int exit_code_for(const hetjb::Error& e) {
    if (dynamic_cast<const hetjb::IoError*>(&e)) return 5;
    if (dynamic_cast<const hetjb::ParseError*>(&e) ||
        dynamic_cast<const hetjb::InvalidInput*>(&e))
        return 3;
    return 4; // singular fit, degenerate variance/bandwidth, failed experiments
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jarque-Bera normality tests for AR residuals with "
                 "time-varying unconditional variance"};
    app.set_version_flag("--version", std::string(hetjb::kVersion));
    app.require_subcommand(1);

    // --- test: the real-data pipeline -----------------------------------
    auto* c_test = app.add_subcommand(
        "test", "Ingest a CSV, fit mean + AR(p), run the requested tests");
    std::string in_path, value_column = "VALUE", date_column;
    bool logdiff = false, no_reselect = false;
    int order = -1;
    std::string tests_arg = "T_st,T_cv,T_boot";
    double gamma = 1.0;
    int replicates = 499;
    CommonFlags tf;
    c_test->add_option("-i,--input", in_path, "CSV file to analyze")->required();
    c_test->add_option("--value-column", value_column, "Column holding the values")
        ->capture_default_str();
    c_test->add_option("--date-column", date_column,
                       "Date column (ISO 8601 or MM/DD/YYYY); omit for undated data");
    c_test->add_flag("--logdiff", logdiff, "Analyze 100*log(v_t/v_{t-1})");
    c_test->add_option("-p,--order", order, "AR order; -1 selects by AIC over 0..8")
        ->check(CLI::Range(-1, 50))
        ->capture_default_str();
    c_test->add_option("--tests", tests_arg,
                       "Comma list among T_st, T_cv, T_f(g), T_boot, T_f,boot(g)")
        ->capture_default_str();
    auto* gamma_opt_test =
        c_test->add_option("--gamma", gamma, "Factor for bare T_f / T_f,boot names")
            ->check(CLI::PositiveNumber);
    c_test->add_option("-B,--replicates", replicates, "Bootstrap replicates")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    c_test->add_flag("--no-reselect-bandwidth", no_reselect,
                     "Bootstrap replicates reuse the observed bandwidth");
    tf.attach(c_test);

    // --- simulate: emit one DGP draw -------------------------------------
    auto* c_sim = app.add_subcommand("simulate", "Emit one simulated series as CSV");
    std::size_t sim_n = 100;
    double a0 = 0.4, delta = 0.0;
    std::string variance = "homoscedastic", innovation = "gaussian";
    CommonFlags sf;
    c_sim->add_option("-n,--length", sim_n, "Series length")
        ->check(CLI::Range(std::size_t{20}, std::size_t{100000000}))
        ->capture_default_str();
    c_sim->add_option("--a0", a0, "AR(1) coefficient")
        ->check(CLI::Range(-0.9999, 0.9999))
        ->capture_default_str();
    c_sim->add_option("--variance", variance, "homoscedastic or eq8")
        ->check(CLI::IsMember({"homoscedastic", "eq8"}))
        ->capture_default_str();
    c_sim->add_option("--innovation", innovation, "gaussian or mixture")
        ->check(CLI::IsMember({"gaussian", "mixture"}))
        ->capture_default_str();
    auto* delta_opt = c_sim->add_option("--delta", delta, "Mixture angle in (0, pi/2]")
                          ->check(CLI::Range(1e-12, std::numbers::pi / 2));
    sf.attach(c_sim, /*with_format=*/false);

    // --- size: rejection-frequency table under a null scenario -----------
    auto* c_size = app.add_subcommand("size", "Monte Carlo size table");
    std::string size_tests = "T_st,T_cv,T_boot";
    std::vector<std::size_t> n_values{100, 200, 400, 800};
    std::size_t mc_reps = 1000;
    int size_B = 499;
    double size_a0 = 0.4, size_delta = 0.0, size_gamma = 1.0;
    std::string size_variance = "homoscedastic", size_innovation = "gaussian";
    bool size_no_reselect = false;
    CommonFlags zf;
    c_size->add_option("--tests", size_tests, "Test columns")->capture_default_str();
    c_size->add_option("--n-values", n_values, "Sample sizes")
        ->delimiter(',')
        ->capture_default_str();
    c_size->add_option("-N,--mc-reps", mc_reps, "Replications per cell")
        ->check(CLI::Range(std::size_t{1}, std::size_t{100000000}))
        ->capture_default_str();
    c_size->add_option("-B,--replicates", size_B, "Bootstrap replicates")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    c_size->add_option("--variance", size_variance, "homoscedastic or eq8")
        ->check(CLI::IsMember({"homoscedastic", "eq8"}))
        ->capture_default_str();
    c_size->add_option("--innovation", size_innovation, "gaussian or mixture")
        ->check(CLI::IsMember({"gaussian", "mixture"}))
        ->capture_default_str();
    auto* size_delta_opt =
        c_size->add_option("--delta", size_delta, "Mixture angle in (0, pi/2]")
            ->check(CLI::Range(1e-12, std::numbers::pi / 2));
    c_size->add_option("--a0", size_a0, "AR(1) coefficient")
        ->check(CLI::Range(-0.9999, 0.9999))
        ->capture_default_str();
    auto* gamma_opt_size =
        c_size->add_option("--gamma", size_gamma, "Factor for bare T_f / T_f,boot")
            ->check(CLI::PositiveNumber);
    c_size->add_flag("--no-reselect-bandwidth", size_no_reselect,
                     "Bootstrap replicates reuse the observed bandwidth");
    zf.attach(c_size);

    // --- power: rejection frequencies across the mixture alternative -----
    auto* c_power = app.add_subcommand("power", "Monte Carlo power curve");
    std::string power_tests = "T_st,T_boot";
    std::size_t power_n = 100, delta_points = 8;
    std::vector<double> deltas;
    std::size_t power_reps = 1000;
    int power_B = 499;
    double power_gamma = 1.0;
    bool power_no_reselect = false;
    CommonFlags pf;
    c_power->add_option("--tests", power_tests, "Test columns")->capture_default_str();
    c_power->add_option("-n,--length", power_n, "Sample size")
        ->check(CLI::Range(std::size_t{20}, std::size_t{100000000}))
        ->capture_default_str();
    c_power->add_option("--deltas", deltas, "Explicit mixture angles")
        ->delimiter(',');
    c_power->add_option("--delta-points", delta_points,
                        "Equally spaced angles in (0, pi/2] when --deltas absent")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1000}))
        ->capture_default_str();
    c_power->add_option("-N,--mc-reps", power_reps, "Replications per cell")
        ->check(CLI::Range(std::size_t{1}, std::size_t{100000000}))
        ->capture_default_str();
    c_power->add_option("-B,--replicates", power_B, "Bootstrap replicates")
        ->check(CLI::Range(1, 1000000))
        ->capture_default_str();
    auto* gamma_opt_power =
        c_power->add_option("--gamma", power_gamma, "Factor for bare T_f / T_f,boot")
            ->check(CLI::PositiveNumber);
    c_power->add_flag("--no-reselect-bandwidth", power_no_reselect,
                      "Bootstrap replicates reuse the observed bandwidth");
    pf.attach(c_power);

    // --- bandwidth: the CV criterion across the grid ---------------------
    auto* c_bw = app.add_subcommand("bandwidth", "CV bandwidth diagnostics");
    std::string bw_path, bw_value_column = "VALUE", bw_date_column;
    bool bw_logdiff = false;
    int bw_order = -1;
    CommonFlags bf;
    c_bw->add_option("-i,--input", bw_path, "CSV file to analyze")->required();
    c_bw->add_option("--value-column", bw_value_column, "Column holding the values")
        ->capture_default_str();
    c_bw->add_option("--date-column", bw_date_column, "Date column");
    c_bw->add_flag("--logdiff", bw_logdiff, "Analyze 100*log(v_t/v_{t-1})");
    c_bw->add_option("-p,--order", bw_order, "AR order; -1 selects by AIC")
        ->check(CLI::Range(-1, 50))
        ->capture_default_str();
    bf.attach(c_bw);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // 2 is the usage-error contract
    }

    try {
        if (*c_test) {
            tf.finalize();
            const auto tests =
                parse_test_list(tests_arg, gamma, gamma_opt_test->count() > 0);
            if (tests.empty()) {
                std::cerr << "hetjb: error: --tests must name at least one test\n";
                return 2;
            }
            const hetjb::Series series =
                load_input(in_path, value_column, date_column, logdiff);
            hetjb::AnalysisOptions opts;
            opts.bootstrap_replicates = replicates;
            opts.grid = tf.grid();
            opts.master_seed = tf.seed;
            opts.reselect_bandwidth = !no_reselect;
            hetjb::AnalysisReport report = hetjb::run_analysis(series, order, tests, opts);
            if (logdiff) report.transform = "logdiff";
            report.input = in_path + ":" + series.label;
            emit_any(report, tf.format, tf.output);
        } else if (*c_sim) {
            sf.finalize();
            hetjb::DgpConfig cfg;
            cfg.a0 = a0;
            cfg.n = sim_n;
            cfg.variance = variance == "eq8" ? hetjb::VarianceKind::eq8
                                             : hetjb::VarianceKind::homoscedastic;
            if (innovation == "mixture") {
                if (!delta_opt->count()) {
                    std::cerr << "hetjb: error: --innovation mixture needs --delta\n";
                    return 2;
                }
                cfg.innovation = hetjb::InnovationKind::mixture;
                cfg.delta = delta;
            }
            cfg.seed = sf.seed;
            const hetjb::Series s = hetjb::simulate_dgp(cfg);
            std::ostringstream body;
            body << "index,value\n";
            for (std::size_t t = 0; t < s.size(); ++t) {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", s.values[t]);
                body << (t + 1) << ',' << buf << "\n";
            }
            if (sf.output.empty()) {
                std::cout << body.str();
            } else {
                std::ofstream out(sf.output);
                if (!out) throw hetjb::IoError("cannot write " + sf.output);
                out << body.str();
            }
        } else if (*c_size) {
            zf.finalize();
            const auto tests = parse_test_list(size_tests, size_gamma,
                                               gamma_opt_size->count() > 0);
            if (tests.empty()) {
                std::cerr << "hetjb: error: --tests must name at least one test\n";
                return 2;
            }
            hetjb::DgpConfig scenario;
            scenario.a0 = size_a0;
            scenario.variance = size_variance == "eq8"
                                    ? hetjb::VarianceKind::eq8
                                    : hetjb::VarianceKind::homoscedastic;
            if (size_innovation == "mixture") {
                if (!size_delta_opt->count()) {
                    std::cerr << "hetjb: error: --innovation mixture needs --delta\n";
                    return 2;
                }
                scenario.innovation = hetjb::InnovationKind::mixture;
                scenario.delta = size_delta;
            }
            hetjb::McOptions opts;
            opts.bootstrap_replicates = size_B;
            opts.grid = zf.grid();
            opts.reselect_bandwidth = !size_no_reselect;
            const hetjb::McReport report =
                hetjb::size_experiment(tests, n_values, mc_reps, scenario, zf.seed, opts);
            emit_any(report, zf.format, zf.output);
        } else if (*c_power) {
            pf.finalize();
            const auto tests = parse_test_list(power_tests, power_gamma,
                                               gamma_opt_power->count() > 0);
            if (tests.empty()) {
                std::cerr << "hetjb: error: --tests must name at least one test\n";
                return 2;
            }
            if (deltas.empty()) {
                for (std::size_t j = 1; j <= delta_points; ++j)
                    deltas.push_back(static_cast<double>(j) / static_cast<double>(delta_points) *
                                     std::numbers::pi / 2.0);
            }
            hetjb::McOptions opts;
            opts.bootstrap_replicates = power_B;
            opts.grid = pf.grid();
            opts.reselect_bandwidth = !power_no_reselect;
            const hetjb::McReport report = hetjb::power_experiment(
                tests, power_n, deltas, power_reps, pf.seed, opts);
            emit_any(report, pf.format, pf.output);
        } else if (*c_bw) {
            bf.finalize();
            const hetjb::Series series =
                load_input(bw_path, bw_value_column, bw_date_column, bw_logdiff);
            const int p =
                bw_order < 0 ? hetjb::select_order_aic(series, 8) : bw_order;
            const hetjb::ArFit fit = hetjb::fit_ar(series, p);
            const auto bs = bf.grid().values(fit.residuals.size());
            std::ostringstream body;
            body << "bandwidth,cv,selected\n";
            const double chosen =
                hetjb::select_bandwidth_cv(fit.residuals, bf.grid());
            for (double b : bs) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "%.10g,%.10g,%d\n", b,
                              hetjb::cv_score(fit.residuals, b), b == chosen ? 1 : 0);
                body << buf;
            }
            if (bf.output.empty()) {
                std::cout << body.str();
            } else {
                std::ofstream out(bf.output);
                if (!out) throw hetjb::IoError("cannot write " + bf.output);
                out << body.str();
            }
        }
    } catch (const hetjb::Error& e) {
        std::cerr << "hetjb: error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const CLI::Error& e) {
        std::cerr << "hetjb: error: " << e.what() << "\n";
        return 2; // bad HETJB_SEED and friends are usage problems
    } catch (const std::exception& e) {
        std::cerr << "hetjb: unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
