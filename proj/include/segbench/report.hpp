#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "segbench/metrics.hpp"
#include "segbench/stats.hpp"

namespace segbench {

/// Per-case records across methods, classes and tasks. Enforces uniqueness
/// of (case, method, class, task).
class MetricTable {
public:
    void add(MetricRecord rec);
    const std::vector<MetricRecord>& records() const { return records_; }
    bool empty() const { return records_.empty(); }

    /// Methods and cases in first-appearance order.
    std::vector<std::string> methods() const;
    std::vector<std::string> case_ids() const;
    std::vector<Task> tasks() const;

private:
    std::vector<MetricRecord> records_;
    std::map<std::string, bool> seen_;
};

struct BoxplotSeries {
    std::string eval_class;
    std::vector<double> volumes_ml; // ascending, zero-volume cases excluded
    int n_present = 0;
    int n_total = 0;
    double mean = 0.0;
    double q1 = 0.0, median = 0.0, q3 = 0.0;
    double whisker_lo = 0.0, whisker_hi = 0.0; // Tukey, 1.5 * IQR
};

/// Builds one series from per-case volumes (zeros mean "lesion absent" and
/// are discarded; n_total counts all cases).
BoxplotSeries make_boxplot_series(const std::string& eval_class,
                                  const std::vector<double>& case_volumes_ml);

struct ReportConfig {
    BootstrapConfig bootstrap;
    std::uint64_t vote_seed = 0; // echoed in report headers for provenance
    bool markdown = false;
};

/// Serializes records with columns case_id, method, task, class, dsc,
/// hd95_mm, asd_mm, avd_ml, sen; NOT_APPLICABLE cells as "NA".
void write_per_case_csv(const MetricTable& table, const std::string& path,
                        const ReportConfig& cfg);

/// Per task: a mean table with the paper's per-class row blocks, lo/hi CI
/// companions, and per-class significance files (method, metric, mean, CI,
/// superior_to_all, pairwise p-values). Returns the written paths.
std::vector<std::string> emit_summary_tables(const MetricTable& table, const std::string& out_dir,
                                             const ReportConfig& cfg = {});

/// JSON boxplot data: per class quartiles, Tukey whiskers, mean and
/// n_present/n_total.
void emit_volume_boxplots(const std::map<std::string, std::vector<double>>& volumes_by_class,
                          const std::string& out_path, const ReportConfig& cfg = {});

struct RunOptions {
    std::string out_dir;
    std::optional<std::uint64_t> vote_seed; // CLI overrides of manifest values
    std::optional<int> boot_n;
    std::optional<std::uint64_t> boot_seed;
    bool markdown = false;
};

/// Loads a manifest, evaluates every (case, method, task), optionally adds
/// the majority-vote method, runs the statistics and writes all reports.
/// Per-case failures are logged to errors.log and skipped; returns 0 when
/// every case evaluated, 1 otherwise.
int run_manifest(const std::string& manifest_path, const RunOptions& options);

/// Shortest round-trip decimal rendering used in all CSV/JSON output.
std::string fmt_double(double v);

} // namespace segbench
