#include "segbench/report.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "segbench/ensemble.hpp"
#include "segbench/nifti.hpp"
#include "segbench/numeric.hpp"

namespace segbench {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string fmt_metric(const MetricValue& v) { return v.is_na() ? "NA" : fmt_double(v.value()); }

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string provenance_line(const ReportConfig& cfg) {
    return "# segbench vote_seed=" + std::to_string(cfg.vote_seed) +
           " boot_n=" + std::to_string(cfg.bootstrap.n_resamples) +
           " boot_seed=" + std::to_string(cfg.bootstrap.seed) + "\n";
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary); // binary: byte-identical across reruns
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

// (class, metric) row blocks mirroring the published tables.
std::vector<std::pair<std::string, Metric>> rows_for_task(Task task) {
    std::vector<std::pair<std::string, Metric>> rows;
    const std::array<Metric, 4> four = {Metric::DSC, Metric::HD95, Metric::ASD, Metric::AVD};
    switch (task) {
    case Task::LUNG:
        for (Metric m : four) rows.emplace_back("LUNG", m);
        for (const char* cls : {"CON", "CPP", "GGO"}) rows.emplace_back(cls, Metric::SEN);
        break;
    case Task::BIN:
        for (Metric m : four) rows.emplace_back("BIN", m);
        break;
    case Task::MULTICLASS:
        for (const char* cls : {"CON", "CPP", "GGO", "MEAN", "GGO+CPP"})
            for (Metric m : four) rows.emplace_back(cls, m);
        break;
    }
    return rows;
}

std::vector<std::string> classes_for_task(Task task) {
    switch (task) {
    case Task::LUNG: return {"LUNG", "CON", "CPP", "GGO"};
    case Task::BIN: return {"BIN"};
    case Task::MULTICLASS: return {"CON", "CPP", "GGO", "MEAN", "GGO+CPP"};
    }
    return {};
}

std::string file_safe(const std::string& cls) {
    return cls == "GGO+CPP" ? std::string("GGO_PLUS_CPP") : cls;
}

} // namespace

void MetricTable::add(MetricRecord rec) {
    const std::string key =
        rec.case_id + "\x1f" + rec.method_id + "\x1f" + rec.eval_class + "\x1f" + to_string(rec.task);
    if (seen_.count(key))
        throw std::invalid_argument("MetricTable: duplicate (case, method, class, task): " + key);
    seen_[key] = true;
    records_.push_back(std::move(rec));
}

std::vector<std::string> MetricTable::methods() const {
    std::vector<std::string> out;
    for (const MetricRecord& r : records_)
        if (std::find(out.begin(), out.end(), r.method_id) == out.end())
            out.push_back(r.method_id);
    return out;
}

std::vector<std::string> MetricTable::case_ids() const {
    std::vector<std::string> out;
    for (const MetricRecord& r : records_)
        if (std::find(out.begin(), out.end(), r.case_id) == out.end()) out.push_back(r.case_id);
    return out;
}

std::vector<Task> MetricTable::tasks() const {
    std::vector<Task> out;
    for (const MetricRecord& r : records_)
        if (std::find(out.begin(), out.end(), r.task) == out.end()) out.push_back(r.task);
    return out;
}

BoxplotSeries make_boxplot_series(const std::string& eval_class,
                                  const std::vector<double>& case_volumes_ml) {
    BoxplotSeries s;
    s.eval_class = eval_class;
    s.n_total = static_cast<int>(case_volumes_ml.size());
    for (double v : case_volumes_ml)
        if (v > 0.0) s.volumes_ml.push_back(v);
    std::sort(s.volumes_ml.begin(), s.volumes_ml.end());
    s.n_present = static_cast<int>(s.volumes_ml.size());
    if (s.n_present == 0) return s;

    s.mean = mean_of(s.volumes_ml);
    s.q1 = percentile_sorted(s.volumes_ml, 0.25);
    s.median = percentile_sorted(s.volumes_ml, 0.50);
    s.q3 = percentile_sorted(s.volumes_ml, 0.75);
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.whisker_lo = s.volumes_ml.back();
    s.whisker_hi = s.volumes_ml.front();
    for (double v : s.volumes_ml) {
        if (v >= lo_fence && v < s.whisker_lo) s.whisker_lo = v;
        if (v <= hi_fence && v > s.whisker_hi) s.whisker_hi = v;
    }
    return s;
}

void write_per_case_csv(const MetricTable& table, const std::string& path,
                        const ReportConfig& cfg) {
    std::ofstream f = open_out(path);
    f << provenance_line(cfg);
    f << "case_id,method,task,class,dsc,hd95_mm,asd_mm,avd_ml,sen\n";
    for (const MetricRecord& r : table.records()) {
        f << r.case_id << ',' << r.method_id << ',' << to_string(r.task) << ',' << r.eval_class
          << ',' << fmt_metric(r.dsc) << ',' << fmt_metric(r.hd95) << ',' << fmt_metric(r.asd)
          << ',' << fmt_metric(r.avd) << ',' << fmt_metric(r.sen) << '\n';
    }
}

namespace {

struct SummaryGrid {
    // summaries[row] aligns with rows_for_task(task); each entry holds the
    // per-method stats for that (class, metric) in method order.
    std::vector<std::vector<MethodSummary>> by_row;
};

SummaryGrid summarize_task(const MetricTable& table, Task task, const ReportConfig& cfg) {
    SummaryGrid grid;
    for (const auto& [cls, metric] : rows_for_task(task))
        grid.by_row.push_back(summarize(table.records(), metric, cls, task, cfg.bootstrap));
    return grid;
}

const MethodSummary* find_method(const std::vector<MethodSummary>& row,
                                 const std::string& method) {
    for (const MethodSummary& s : row)
        if (s.method == method) return &s;
    return nullptr;
}

void write_grid_csv(const std::string& path, Task task, const SummaryGrid& grid,
                    const std::vector<std::string>& methods, const ReportConfig& cfg,
                    MetricValue MethodSummary::*field) {
    std::ofstream f = open_out(path);
    f << provenance_line(cfg);
    f << "class,metric";
    for (const std::string& m : methods) f << ',' << m;
    f << '\n';
    const auto rows = rows_for_task(task);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        f << rows[i].first << ',' << to_string(rows[i].second);
        for (const std::string& m : methods) {
            const MethodSummary* s = find_method(grid.by_row[i], m);
            f << ',' << (s ? fmt_metric(s->*field) : "NA");
        }
        f << '\n';
    }
}

void write_significance_csv(const std::string& path, Task task, const std::string& cls,
                            const SummaryGrid& grid, const ReportConfig& cfg) {
    std::ofstream f = open_out(path);
    f << provenance_line(cfg);
    f << "method,metric,mean,ci_lo,ci_hi,superior_to_all,p_values\n";
    const auto rows = rows_for_task(task);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].first != cls) continue;
        for (const MethodSummary& s : grid.by_row[i]) {
            ordered_json pj = ordered_json::object();
            for (const auto& [other, p] : s.p_values) pj[other] = p;
            f << s.method << ',' << to_string(rows[i].second) << ',' << fmt_metric(s.mean) << ','
              << fmt_metric(s.ci_lo) << ',' << fmt_metric(s.ci_hi) << ','
              << (s.superior_to_all ? "true" : "false") << ',' << csv_quote(pj.dump()) << '\n';
        }
    }
}

std::string fmt_markdown(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

void write_markdown(const std::string& path, Task task, const SummaryGrid& grid,
                    const std::vector<std::string>& methods, const ReportConfig& cfg) {
    std::ofstream f = open_out(path);
    f << "<!-- segbench vote_seed=" << cfg.vote_seed << " boot_n=" << cfg.bootstrap.n_resamples
      << " boot_seed=" << cfg.bootstrap.seed << " -->\n\n";
    f << "| class | metric |";
    for (const std::string& m : methods) f << ' ' << m << " |";
    f << "\n|---|---|";
    for (std::size_t i = 0; i < methods.size(); ++i) f << "---|";
    f << '\n';

    const auto rows = rows_for_task(task);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = grid.by_row[i];
        // best = extreme mean in the metric's better direction
        const bool higher = metric_direction(rows[i].second) == Direction::HIGHER_BETTER;
        const MethodSummary* best = nullptr;
        for (const MethodSummary& s : row) {
            if (s.mean.is_na()) continue;
            if (!best || (higher ? s.mean.value() > best->mean.value()
                                 : s.mean.value() < best->mean.value()))
                best = &s;
        }
        f << "| " << rows[i].first << " | " << to_string(rows[i].second) << " |";
        for (const std::string& m : methods) {
            const MethodSummary* s = find_method(row, m);
            if (!s || s->mean.is_na()) {
                f << " - |";
                continue;
            }
            std::string cell = fmt_markdown(s->mean.value());
            if (s == best) cell = "**" + cell + "**";
            if (s->superior_to_all) cell += "\\*";
            f << ' ' << cell << " |";
        }
        f << '\n';
    }
}

} // namespace

std::vector<std::string> emit_summary_tables(const MetricTable& table, const std::string& out_dir,
                                             const ReportConfig& cfg) {
    if (table.empty()) throw std::invalid_argument("emit_summary_tables: empty table");
    fs::create_directories(out_dir);
    const std::vector<std::string> methods = table.methods();
    std::vector<std::string> written;

    for (Task task : table.tasks()) {
        const SummaryGrid grid = summarize_task(table, task, cfg);
        const std::string base = out_dir + "/summary_" + to_string(task);

        write_grid_csv(base + ".csv", task, grid, methods, cfg, &MethodSummary::mean);
        written.push_back(base + ".csv");
        write_grid_csv(base + "_ci_lo.csv", task, grid, methods, cfg, &MethodSummary::ci_lo);
        written.push_back(base + "_ci_lo.csv");
        write_grid_csv(base + "_ci_hi.csv", task, grid, methods, cfg, &MethodSummary::ci_hi);
        written.push_back(base + "_ci_hi.csv");

        for (const std::string& cls : classes_for_task(task)) {
            const std::string path = out_dir + "/significance_" + to_string(task) + "_" +
                                     file_safe(cls) + ".csv";
            write_significance_csv(path, task, cls, grid, cfg);
            written.push_back(path);
        }
        if (cfg.markdown) {
            write_markdown(base + ".md", task, grid, methods, cfg);
            written.push_back(base + ".md");
        }
    }
    return written;
}

void emit_volume_boxplots(const std::map<std::string, std::vector<double>>& volumes_by_class,
                          const std::string& out_path, const ReportConfig& cfg) {
    ordered_json doc;
    doc["vote_seed"] = cfg.vote_seed;
    doc["series"] = ordered_json::array();
    // fixed class order, then anything else alphabetically
    std::vector<std::string> order = {"CON", "CPP", "GGO", "COM", "OAT", "BIN"};
    for (const auto& [cls, _] : volumes_by_class)
        if (std::find(order.begin(), order.end(), cls) == order.end()) order.push_back(cls);
    for (const std::string& cls : order) {
        auto it = volumes_by_class.find(cls);
        if (it == volumes_by_class.end()) continue;
        const BoxplotSeries s = make_boxplot_series(cls, it->second);
        ordered_json sj;
        sj["class"] = s.eval_class;
        sj["n_present"] = s.n_present;
        sj["n_total"] = s.n_total;
        sj["volumes_ml"] = s.volumes_ml;
        if (s.n_present > 0) {
            sj["mean"] = s.mean;
            sj["q1"] = s.q1;
            sj["median"] = s.median;
            sj["q3"] = s.q3;
            sj["whisker_lo"] = s.whisker_lo;
            sj["whisker_hi"] = s.whisker_hi;
        }
        doc["series"].push_back(sj);
    }
    std::ofstream f = open_out(out_path);
    f << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Manifest-driven batch evaluation
// ---------------------------------------------------------------------------

namespace {

struct ManifestCase {
    std::string id;
    std::string gt_path;
    std::vector<std::pair<std::string, ordered_json>> preds; // method -> spec
};

struct Manifest {
    Taxonomy taxonomy = Taxonomy::defaults();
    std::uint64_t vote_seed = 0;
    BootstrapConfig bootstrap;
    std::vector<Task> tasks;
    std::vector<std::string> methods; // manifest order
    bool run_majority_vote = false;
    std::string maj_name = "MAJ";
    std::vector<std::string> maj_over; // empty = all methods
    std::vector<ManifestCase> cases;
};

std::string resolve(const fs::path& base_dir, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path.string() : (base_dir / path).string();
}

Manifest parse_manifest(const std::string& manifest_path, const RunOptions& options) {
    std::ifstream f(manifest_path);
    if (!f) throw std::runtime_error("cannot open manifest " + manifest_path);
    ordered_json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed manifest JSON: " + std::string(e.what()));
    }
    if (!j.contains("schema") || j["schema"].get<int>() != 1)
        throw std::runtime_error("manifest schema must be 1");

    const fs::path base_dir = fs::path(manifest_path).parent_path();
    Manifest m;
    if (j.contains("taxonomy"))
        m.taxonomy = Taxonomy::from_json_file(resolve(base_dir, j["taxonomy"].get<std::string>()));
    if (j.contains("vote_seed")) m.vote_seed = j["vote_seed"].get<std::uint64_t>();
    if (j.contains("bootstrap")) {
        const auto& b = j["bootstrap"];
        if (b.contains("n_resamples")) m.bootstrap.n_resamples = b["n_resamples"].get<int>();
        if (b.contains("seed")) m.bootstrap.seed = b["seed"].get<std::uint64_t>();
        if (b.contains("ci_level")) m.bootstrap.ci_level = b["ci_level"].get<double>();
    }
    if (options.vote_seed) m.vote_seed = *options.vote_seed;
    if (options.boot_n) m.bootstrap.n_resamples = *options.boot_n;
    if (options.boot_seed) m.bootstrap.seed = *options.boot_seed;
    if (m.bootstrap.n_resamples < 1000)
        throw std::runtime_error("bootstrap n_resamples must be at least 1000");
    if (m.bootstrap.ci_level <= 0.0 || m.bootstrap.ci_level >= 1.0)
        throw std::runtime_error("bootstrap ci_level must lie in (0,1)");

    for (const auto& t : j.at("tasks")) m.tasks.push_back(task_from_string(t.get<std::string>()));
    if (m.tasks.empty()) throw std::runtime_error("manifest lists no tasks");

    if (j.contains("majority_vote")) {
        m.run_majority_vote = true;
        const auto& mv = j["majority_vote"];
        if (mv.contains("name")) m.maj_name = mv["name"].get<std::string>();
        if (mv.contains("over"))
            for (const auto& s : mv["over"]) m.maj_over.push_back(s.get<std::string>());
    }

    for (const auto& cj : j.at("cases")) {
        ManifestCase c;
        c.id = cj.at("id").get<std::string>();
        c.gt_path = resolve(base_dir, cj.at("gt").get<std::string>());
        for (const auto& [method, spec] : cj.at("preds").items()) {
            c.preds.emplace_back(method, spec);
            if (std::find(m.methods.begin(), m.methods.end(), method) == m.methods.end())
                m.methods.push_back(method);
        }
        m.cases.push_back(std::move(c));
    }
    if (m.cases.empty()) throw std::runtime_error("manifest lists no cases");

    // resolve prediction paths relative to the manifest
    for (ManifestCase& c : m.cases)
        for (auto& [method, spec] : c.preds) {
            if (spec.is_string()) {
                spec = resolve(base_dir, spec.get<std::string>());
            } else if (spec.is_object()) {
                if (spec.contains("labels"))
                    spec["labels"] = resolve(base_dir, spec["labels"].get<std::string>());
                if (spec.contains("probs"))
                    for (auto& fold : spec["probs"])
                        for (auto& [cls, path] : fold.items())
                            fold[cls] = resolve(base_dir, path.get<std::string>());
            } else {
                throw std::runtime_error("prediction spec for method " + method +
                                         " must be a path or an object");
            }
        }
    return m;
}

// Builds a label volume from a prediction spec: either a label file or
// per-class probability files (one set per fold, folds averaged, argmax).
LabelVolume load_prediction(const ordered_json& spec, const Taxonomy& taxonomy) {
    if (spec.is_string()) return read_label_volume(spec.get<std::string>());
    if (spec.contains("labels")) return read_label_volume(spec["labels"].get<std::string>());
    if (!spec.contains("probs"))
        throw std::runtime_error("prediction spec needs \"labels\" or \"probs\"");

    const auto& folds = spec["probs"];
    if (!folds.is_array() || folds.empty())
        throw std::runtime_error("\"probs\" must be a non-empty array of fold maps");

    // class ids from the first fold; all folds must agree
    std::vector<int> class_ids;
    for (const auto& [cls, _] : folds.front().items()) class_ids.push_back(std::stoi(cls));
    std::sort(class_ids.begin(), class_ids.end());
    const bool implicit_background =
        std::find(class_ids.begin(), class_ids.end(), 0) == class_ids.end();

    std::vector<ProbVolume> fold_probs;
    for (const auto& fold : folds) {
        if (fold.size() != class_ids.size())
            throw std::runtime_error("probability folds disagree on their class sets");
        std::vector<ScalarVolume> channels;
        for (int cls : class_ids) {
            const std::string key = std::to_string(cls);
            if (!fold.contains(key))
                throw std::runtime_error("fold missing probability map for class " + key);
            channels.push_back(read_scalar_volume(fold[key].get<std::string>()));
        }
        const GridDims dims = channels.front().dims;
        const Spacing spacing = channels.front().spacing;
        for (const ScalarVolume& ch : channels)
            if (!(ch.dims == dims) || !(ch.spacing == spacing))
                throw std::runtime_error("probability channels disagree on grid");

        const int n_channels = static_cast<int>(channels.size()) + (implicit_background ? 1 : 0);
        ProbVolume pv(dims, spacing, n_channels);
        const std::size_t n = dims.count();
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t c = 0; c < channels.size(); ++c) {
                const double p = channels[c].data[i];
                pv.at(i, static_cast<int>(c) + (implicit_background ? 1 : 0)) = p;
                sum += p;
            }
            if (implicit_background) pv.at(i, 0) = std::max(0.0, 1.0 - sum);
        }
        pv.normalized = pv.rows_sum_to_one();
        fold_probs.push_back(std::move(pv));
    }

    std::vector<std::uint8_t> labels;
    if (implicit_background) labels.push_back(0);
    for (int cls : class_ids) {
        if (cls < 0 || cls > 255) throw std::runtime_error("class id outside [0,255]");
        if (!taxonomy.knows(static_cast<std::uint8_t>(cls)))
            throw std::runtime_error("probability map class id " + std::to_string(cls) +
                                     " unknown to the taxonomy");
        labels.push_back(static_cast<std::uint8_t>(cls));
    }
    return argmax_labels(average_probs(fold_probs), labels);
}

// Task-specific vote alphabet: lung and binary lesions vote on their binary
// projections, multiclass votes on the raw labels.
LabelVolume to_task_alphabet(const LabelVolume& pred, Task task, const Taxonomy& taxonomy) {
    switch (task) {
    case Task::LUNG: {
        LabelVolume out(pred.dims, pred.spacing);
        const BinaryMask lung = taxonomy.lung_mask(pred);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = lung.data[i] ? taxonomy.id_of("HEALTHY_LUNG") : 0;
        return out;
    }
    case Task::BIN: {
        LabelVolume out(pred.dims, pred.spacing);
        const BinaryMask lesion = taxonomy.project(pred, EvalClass::BIN);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = lesion.data[i] ? taxonomy.id_of("COMBINED") : 0;
        return out;
    }
    case Task::MULTICLASS: return pred;
    }
    throw std::logic_error("unreachable");
}

struct CaseResult {
    std::vector<MetricRecord> records;
    std::map<std::string, double> gt_volumes_ml; // per eval class
    GridDims dims;
    Spacing spacing;
    std::string error; // nonempty => case failed
};

CaseResult evaluate_manifest_case(const ManifestCase& mc, const Manifest& manifest) {
    CaseResult result;
    try {
        const LabelVolume gt = read_label_volume(mc.gt_path);
        result.dims = gt.dims;
        result.spacing = gt.spacing;

        std::vector<std::pair<std::string, LabelVolume>> preds;
        for (const auto& [method, spec] : mc.preds)
            preds.emplace_back(method, load_prediction(spec, manifest.taxonomy));

        for (const auto& [method, pred] : preds)
            for (Task task : manifest.tasks)
                for (MetricRecord rec : evaluate_case(gt, pred, manifest.taxonomy, task)) {
                    rec.case_id = mc.id;
                    rec.method_id = method;
                    result.records.push_back(std::move(rec));
                }

        if (manifest.run_majority_vote) {
            for (Task task : manifest.tasks) {
                std::vector<LabelVolume> votes;
                for (const auto& [method, pred] : preds) {
                    const bool included =
                        manifest.maj_over.empty() ||
                        std::find(manifest.maj_over.begin(), manifest.maj_over.end(), method) !=
                            manifest.maj_over.end();
                    if (included) votes.push_back(to_task_alphabet(pred, task, manifest.taxonomy));
                }
                if (votes.empty())
                    throw std::runtime_error("majority_vote.over matches no methods");
                const LabelVolume voted = majority_vote(votes, VoteConfig{manifest.vote_seed});
                for (MetricRecord rec : evaluate_case(gt, voted, manifest.taxonomy, task)) {
                    rec.case_id = mc.id;
                    rec.method_id = manifest.maj_name;
                    result.records.push_back(std::move(rec));
                }
            }
        }

        const double voxel_ml = gt.spacing.voxel_ml();
        for (EvalClass cls : {EvalClass::CON, EvalClass::CPP, EvalClass::GGO, EvalClass::COM,
                              EvalClass::OAT, EvalClass::BIN})
            result.gt_volumes_ml[to_string(cls)] =
                static_cast<double>(manifest.taxonomy.project(gt, cls).count_set()) * voxel_ml;
    } catch (const std::exception& e) {
        result.error = e.what();
        result.records.clear();
        result.gt_volumes_ml.clear();
    }
    return result;
}

} // namespace

int run_manifest(const std::string& manifest_path, const RunOptions& options) {
    const Manifest manifest = parse_manifest(manifest_path, options);
    fs::create_directories(options.out_dir);

    // cases evaluate concurrently; results merge in manifest order
    std::vector<CaseResult> results(manifest.cases.size());
    {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= manifest.cases.size()) break;
                results[i] = evaluate_manifest_case(manifest.cases[i], manifest);
            }
        };
        const unsigned n_threads = std::max(1u, std::min<unsigned>(
            std::thread::hardware_concurrency(), static_cast<unsigned>(manifest.cases.size())));
        std::vector<std::thread> pool;
        for (unsigned t = 0; t + 1 < n_threads; ++t) pool.emplace_back(worker);
        worker();
        for (std::thread& t : pool) t.join();
    }

    ReportConfig cfg;
    cfg.bootstrap = manifest.bootstrap;
    cfg.vote_seed = manifest.vote_seed;
    cfg.markdown = options.markdown;

    MetricTable table;
    std::map<std::string, std::vector<double>> volumes_by_class;
    std::vector<std::pair<std::string, std::string>> failures;
    std::vector<std::size_t> ok_indices;
    for (std::size_t i = 0; i < results.size(); ++i) {
        CaseResult& r = results[i];
        if (!r.error.empty()) {
            failures.emplace_back(manifest.cases[i].id, r.error);
            continue;
        }
        ok_indices.push_back(i);
        for (MetricRecord& rec : r.records) table.add(std::move(rec));
        for (const auto& [cls, ml] : r.gt_volumes_ml) volumes_by_class[cls].push_back(ml);
    }

    if (!failures.empty()) {
        std::ofstream log = open_out(options.out_dir + "/errors.log");
        for (const auto& [id, err] : failures) log << id << ": " << err << '\n';
    }

    if (!table.empty()) {
        write_per_case_csv(table, options.out_dir + "/per_case.csv", cfg);
        emit_summary_tables(table, options.out_dir, cfg);
        emit_volume_boxplots(volumes_by_class, options.out_dir + "/boxplots.json", cfg);

        std::ofstream grids = open_out(options.out_dir + "/case_grids.csv");
        grids << provenance_line(cfg);
        grids << "case_id,nx,ny,nz,sx_mm,sy_mm,sz_mm\n";
        for (std::size_t i : ok_indices) {
            const CaseResult& r = results[i];
            grids << manifest.cases[i].id << ',' << r.dims.nx << ',' << r.dims.ny << ','
                  << r.dims.nz << ',' << fmt_double(r.spacing.sx) << ','
                  << fmt_double(r.spacing.sy) << ',' << fmt_double(r.spacing.sz) << '\n';
        }
    }

    ordered_json info;
    info["schema"] = 1;
    info["vote_seed"] = manifest.vote_seed;
    info["bootstrap"] = {{"n_resamples", manifest.bootstrap.n_resamples},
                         {"seed", manifest.bootstrap.seed},
                         {"ci_level", manifest.bootstrap.ci_level}};
    ordered_json ignored = ordered_json::array();
    for (EvalClass cls : manifest.taxonomy.ignore_set()) ignored.push_back(to_string(cls));
    info["ignored_eval_classes"] = ignored; // OAT is evaluated unless listed here
    info["n_cases"] = manifest.cases.size();
    info["n_failed"] = failures.size();
    {
        std::ofstream f = open_out(options.out_dir + "/run_info.json");
        f << info.dump(2) << '\n';
    }

    return failures.empty() ? 0 : 1;
}

} // namespace segbench
