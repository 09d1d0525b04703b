#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segbench/metrics.hpp"

namespace segbench {

/// Per-case scores of two methods after pairwise NOT_APPLICABLE exclusion.
struct PairedScores {
    std::vector<std::string> case_ids;
    std::vector<double> a;
    std::vector<double> b;
};

/// Drops every case that is NOT_APPLICABLE in either method.
PairedScores make_paired(const std::vector<std::string>& case_ids,
                         const std::vector<MetricValue>& a, const std::vector<MetricValue>& b);

enum class Direction { HIGHER_BETTER, LOWER_BETTER };

enum class Metric { DSC, HD95, ASD, AVD, SEN };

const char* to_string(Metric metric);
Direction metric_direction(Metric metric);
MetricValue metric_of(const MetricRecord& rec, Metric metric);

struct TestResult {
    double observed_mean_diff = 0.0;
    double p_value = 1.0;
    int n_resamples = 0;
    std::uint64_t seed = 0;
    bool significant = false; // p < 0.05
};

/// One-sided non-parametric bootstrap test for "A superior to B": per-case
/// differences are oriented so positive means A better, resampled at case
/// level with replacement, and p = (1 + #{resample means <= 0}) / (n + 1).
/// Resample r draws from substream (seed, r), so the result is independent
/// of how resamples are partitioned across workers.
TestResult bootstrap_superiority(const PairedScores& ps, int n_resamples, std::uint64_t seed,
                                 Direction direction);

/// Percentile bootstrap confidence interval of the mean.
std::pair<double, double> bootstrap_ci(std::span<const double> scores, int n_resamples,
                                       std::uint64_t seed, double level);

struct BootstrapConfig {
    int n_resamples = 10000;
    std::uint64_t seed = 0;
    double ci_level = 0.95;
};

struct MethodSummary {
    std::string method;
    MetricValue mean;  // over applicable cases; NA when no case applies
    MetricValue ci_lo;
    MetricValue ci_hi;
    bool superior_to_all = false; // pairwise-significant against every other method
    std::map<std::string, double> p_values; // other method -> p(this superior to other)
};

/// Per-method means, CIs and pairwise superiority for one (metric, class,
/// task) slice of a record table. Methods keep first-appearance order.
std::vector<MethodSummary> summarize(std::span<const MetricRecord> records, Metric metric,
                                     const std::string& eval_class, Task task,
                                     const BootstrapConfig& cfg);

} // namespace segbench
