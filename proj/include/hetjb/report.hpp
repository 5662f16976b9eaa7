#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hetjb/jb_test.hpp"
#include "hetjb/montecarlo.hpp"
#include "hetjb/series.hpp"

namespace hetjb {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

struct AnalysisOptions {
    int bootstrap_replicates = 499;
    BandwidthGrid grid;
    Kernel kernel = Kernel::normal;
    std::uint64_t master_seed = 0;
    bool parallel = true;
    bool reselect_bandwidth = true;
    int max_auto_order = 8; // AIC scan range for automatic order
};

// Everything one real-data run produces: the fit, every requested test,
// and the plot-ready variance path aligned to the fitted span.
struct AnalysisReport {
    std::string input;              // label of the analyzed series
    std::string transform = "none"; // "none" | "logdiff"
    std::size_t n = 0;              // analyzed series length
    int order = 0;
    bool order_auto = false;
    double omega_hat = 0.0;
    std::vector<double> theta_hat;
    std::vector<std::string> test_labels; // parallel to tests
    std::vector<JbResult> tests;
    VariancePath path;              // CV-bandwidth estimate on the residuals
    std::vector<std::size_t> index; // 1-based time index, p+1..n
    std::vector<double> values;     // series values over the fitted span
    std::optional<std::vector<Date>> dates;
    std::uint64_t master_seed = 0;
    std::string version{kVersion};
};

// AIC-minimizing AR order over 0..max_order: (n-p) log(RSS/(n-p)) + 2(p+1).
// Candidates needing more data than the series has are skipped; ties go to
// the smaller order.
int select_order_aic(const Series& series, int max_order);

// Fits mean + AR(order) -- order < 0 selects the order by select_order_aic
// over 0..max_auto_order -- runs every requested test on the residuals, and
// attaches the CV-bandwidth variance path.
AnalysisReport run_analysis(const Series& series, int order,
                            const std::vector<TestSpec>& tests,
                            const AnalysisOptions& options = {});

enum class ReportFormat { text, json, csv_plotdata };

// text: aligned human-readable table. json: full report under a versioned
// schema (see README), numerics round-trip bit-exactly. csv_plotdata:
// header index,date,value,h_hat, one row per residual.
void emit_report(const AnalysisReport& report, ReportFormat format,
                 std::ostream& out);
void emit_report(const AnalysisReport& report, ReportFormat format,
                 const std::string& path); // IoError if not writable

// Same three formats for experiment tables; csv_plotdata emits the flat
// cell list (test,n,delta,rejection_pct,rejections,used,failures).
void emit_mc_report(const McReport& report, ReportFormat format,
                    std::ostream& out);
void emit_mc_report(const McReport& report, ReportFormat format,
                    const std::string& path);

} // namespace hetjb
