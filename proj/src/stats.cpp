#include "segbench/stats.hpp"

#include <algorithm>
#include <stdexcept>

#include "segbench/numeric.hpp"

namespace segbench {

const char* to_string(Metric metric) {
    switch (metric) {
    case Metric::DSC: return "DSC";
    case Metric::HD95: return "HD95";
    case Metric::ASD: return "ASD";
    case Metric::AVD: return "AVD";
    case Metric::SEN: return "SEN";
    }
    return "?";
}

Direction metric_direction(Metric metric) {
    switch (metric) {
    case Metric::DSC:
    case Metric::SEN: return Direction::HIGHER_BETTER;
    default: return Direction::LOWER_BETTER;
    }
}

MetricValue metric_of(const MetricRecord& rec, Metric metric) {
    switch (metric) {
    case Metric::DSC: return rec.dsc;
    case Metric::HD95: return rec.hd95;
    case Metric::ASD: return rec.asd;
    case Metric::AVD: return rec.avd;
    case Metric::SEN: return rec.sen;
    }
    return MetricValue::na();
}

PairedScores make_paired(const std::vector<std::string>& case_ids,
                         const std::vector<MetricValue>& a, const std::vector<MetricValue>& b) {
    if (case_ids.size() != a.size() || a.size() != b.size())
        throw std::invalid_argument("make_paired: length mismatch");
    PairedScores ps;
    for (std::size_t i = 0; i < case_ids.size(); ++i) {
        if (a[i].is_na() || b[i].is_na()) continue;
        ps.case_ids.push_back(case_ids[i]);
        ps.a.push_back(a[i].value());
        ps.b.push_back(b[i].value());
    }
    return ps;
}

TestResult bootstrap_superiority(const PairedScores& ps, int n_resamples, std::uint64_t seed,
                                 Direction direction) {
    if (ps.a.empty())
        throw std::invalid_argument("bootstrap_superiority: no cases after NA exclusion");
    if (n_resamples < 1000)
        throw std::invalid_argument("bootstrap_superiority: need at least 1000 resamples");

    // orient differences so positive means A better
    const std::size_t n_cases = ps.a.size();
    std::vector<double> d(n_cases);
    for (std::size_t i = 0; i < n_cases; ++i)
        d[i] = (direction == Direction::HIGHER_BETTER) ? ps.a[i] - ps.b[i] : ps.b[i] - ps.a[i];

    TestResult result;
    result.observed_mean_diff = mean_of(d);
    result.n_resamples = n_resamples;
    result.seed = seed;

    std::size_t not_above_zero = 0;
    for (int r = 0; r < n_resamples; ++r) {
        CounterRng rng(seed, static_cast<std::uint64_t>(r));
        double acc = 0.0;
        for (std::size_t j = 0; j < n_cases; ++j) acc += d[rng.next_below(n_cases)];
        if (acc / static_cast<double>(n_cases) <= 0.0) ++not_above_zero;
    }
    result.p_value = static_cast<double>(1 + not_above_zero) / static_cast<double>(n_resamples + 1);
    result.significant = result.p_value < 0.05;
    return result;
}

std::pair<double, double> bootstrap_ci(std::span<const double> scores, int n_resamples,
                                       std::uint64_t seed, double level) {
    if (scores.empty()) throw std::invalid_argument("bootstrap_ci: empty input");
    if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("bootstrap_ci: level outside (0,1)");
    if (n_resamples < 1) throw std::invalid_argument("bootstrap_ci: n_resamples < 1");

    const std::size_t n_cases = scores.size();
    std::vector<double> means(static_cast<std::size_t>(n_resamples));
    for (int r = 0; r < n_resamples; ++r) {
        CounterRng rng(seed, static_cast<std::uint64_t>(r));
        double acc = 0.0;
        for (std::size_t j = 0; j < n_cases; ++j) acc += scores[rng.next_below(n_cases)];
        means[static_cast<std::size_t>(r)] = acc / static_cast<double>(n_cases);
    }
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - level) / 2.0;
    return {percentile_sorted(means, tail), percentile_sorted(means, 1.0 - tail)};
}

std::vector<MethodSummary> summarize(std::span<const MetricRecord> records, Metric metric,
                                     const std::string& eval_class, Task task,
                                     const BootstrapConfig& cfg) {
    // gather per-method values in first-appearance order, aligned on case ids
    std::vector<std::string> methods;
    std::vector<std::string> case_ids;
    std::map<std::string, std::map<std::string, MetricValue>> by_method_case;
    for (const MetricRecord& rec : records) {
        if (rec.task != task || rec.eval_class != eval_class) continue;
        if (std::find(methods.begin(), methods.end(), rec.method_id) == methods.end())
            methods.push_back(rec.method_id);
        if (std::find(case_ids.begin(), case_ids.end(), rec.case_id) == case_ids.end())
            case_ids.push_back(rec.case_id);
        by_method_case[rec.method_id][rec.case_id] = metric_of(rec, metric);
    }

    auto values_of = [&](const std::string& method) {
        std::vector<MetricValue> vals;
        vals.reserve(case_ids.size());
        for (const std::string& id : case_ids) {
            const auto& cases = by_method_case[method];
            auto it = cases.find(id);
            vals.push_back(it == cases.end() ? MetricValue::na() : it->second);
        }
        return vals;
    };

    const Direction direction = metric_direction(metric);
    std::vector<MethodSummary> out;
    for (const std::string& method : methods) {
        MethodSummary s;
        s.method = method;
        const std::vector<MetricValue> mine = values_of(method);

        std::vector<double> present;
        for (const MetricValue& v : mine)
            if (!v.is_na()) present.push_back(v.value());
        if (!present.empty()) {
            s.mean = MetricValue(mean_of(present));
            const auto [lo, hi] = bootstrap_ci(present, cfg.n_resamples, cfg.seed, cfg.ci_level);
            s.ci_lo = MetricValue(lo);
            s.ci_hi = MetricValue(hi);
        }

        bool superior_to_every_other = methods.size() > 1;
        for (const std::string& other : methods) {
            if (other == method) continue;
            const PairedScores ps = make_paired(case_ids, mine, values_of(other));
            if (ps.a.empty()) {
                // nothing comparable: no superiority claim possible
                s.p_values[other] = 1.0;
                superior_to_every_other = false;
                continue;
            }
            const TestResult t = bootstrap_superiority(ps, cfg.n_resamples, cfg.seed, direction);
            s.p_values[other] = t.p_value;
            superior_to_every_other = superior_to_every_other && t.significant;
        }
        s.superior_to_all = superior_to_every_other;
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace segbench
