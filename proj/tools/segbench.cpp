#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "segbench/gwdl.hpp"
#include "segbench/nifti.hpp"
#include "segbench/report.hpp"

using namespace segbench;

namespace {

int cmd_run(const std::string& manifest, const RunOptions& options) {
    return run_manifest(manifest, options);
}

int cmd_metrics(const std::string& gt_path, const std::string& pred_path,
                const std::string& task_name, const std::string& taxonomy_path) {
    const Taxonomy taxonomy =
        taxonomy_path.empty() ? Taxonomy::defaults() : Taxonomy::from_json_file(taxonomy_path);
    const LabelVolume gt = read_label_volume(gt_path);
    const LabelVolume pred = read_label_volume(pred_path);
    const Task task = task_from_string(task_name);

    auto cell = [](const MetricValue& v) { return v.is_na() ? std::string("NA") : fmt_double(v.value()); };
    std::cout << "case_id,method,task,class,dsc,hd95_mm,asd_mm,avd_ml,sen\n";
    for (const MetricRecord& r : evaluate_case(gt, pred, taxonomy, task))
        std::cout << "-,-," << to_string(r.task) << ',' << r.eval_class << ',' << cell(r.dsc)
                  << ',' << cell(r.hd95) << ',' << cell(r.asd) << ',' << cell(r.avd) << ','
                  << cell(r.sen) << '\n';
    return 0;
}

int cmd_gwdl(const std::vector<std::string>& paths, const std::string& matrix_path) {
    if (paths.size() < 2)
        throw CLI::ValidationError("gwdl needs per-class probability files followed by the gt");
    const DistanceMatrix M =
        matrix_path.empty() ? DistanceMatrix::defaults() : DistanceMatrix::from_json_file(matrix_path);
    const std::size_t n_channels = paths.size() - 1;
    if (static_cast<int>(n_channels) != M.num_classes)
        throw CLI::ValidationError("expected " + std::to_string(M.num_classes) +
                                   " probability files (one per matrix class), got " +
                                   std::to_string(n_channels));

    std::vector<ScalarVolume> channels;
    for (std::size_t c = 0; c < n_channels; ++c)
        channels.push_back(read_scalar_volume(paths[c]));
    const LabelVolume gt_labels = read_label_volume(paths.back());
    for (const ScalarVolume& ch : channels)
        if (!(ch.dims == gt_labels.dims))
            throw std::runtime_error("probability channel grid differs from the ground truth");

    ProbVolume pred(gt_labels.dims, gt_labels.spacing, static_cast<int>(n_channels));
    const std::size_t n = gt_labels.dims.count();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < n_channels; ++c)
            pred.at(i, static_cast<int>(c)) = channels[c].data[i];

    OneHotGT gt;
    if (matrix_path.empty()) {
        // ground truth carries raw taxonomy labels; map them onto the
        // built-in matrix classes
        gt = one_hot_from_labels(gt_labels, Taxonomy::defaults());
    } else {
        gt.num_classes = M.num_classes;
        for (std::uint8_t v : gt_labels.data) {
            if (v >= M.num_classes)
                throw std::runtime_error("gt label " + std::to_string(v) +
                                         " out of range for the custom matrix (labels must be "
                                         "matrix class indices)");
            gt.classes.push_back(v);
        }
    }

    const double score = gwdl_score(pred, gt, M);
    const GwdlResult r = gwdl_loss_and_grad(pred, gt, M);
    double sq = 0.0;
    for (double g : r.grad) sq += g * g;
    std::cout << "score " << fmt_double(score) << "\n"
              << "loss " << fmt_double(r.loss) << "\n"
              << "grad_norm " << fmt_double(std::sqrt(sq)) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Volumetric segmentation benchmarking toolkit"};
    app.require_subcommand(1);

    // run
    std::string manifest_path;
    RunOptions options;
    std::uint64_t vote_seed = 0;
    int boot_n = 0;
    std::uint64_t boot_seed = 0;
    auto* run = app.add_subcommand("run", "Evaluate every case of a manifest and write reports");
    run->add_option("manifest", manifest_path, "Manifest JSON (schema 1)")->required();
    run->add_option("--out", options.out_dir, "Output directory")->required();
    auto* vote_opt = run->add_option("--vote-seed", vote_seed, "Majority-vote tie-break seed");
    auto* bootn_opt = run->add_option("--boot-n", boot_n, "Bootstrap resample count");
    auto* boots_opt = run->add_option("--boot-seed", boot_seed, "Bootstrap seed");
    run->add_flag("--markdown", options.markdown, "Also render decorated markdown tables");

    // metrics
    std::string gt_path, pred_path, task_name = "mc", taxonomy_path;
    auto* metrics = app.add_subcommand("metrics", "Evaluate a single gt/pred pair");
    metrics->add_option("gt", gt_path, "Ground-truth label volume")->required();
    metrics->add_option("pred", pred_path, "Predicted label volume")->required();
    metrics->add_option("--task", task_name, "lung|bin|mc")->required();
    metrics->add_option("--taxonomy", taxonomy_path, "Taxonomy JSON (default built-in)");

    // gwdl
    std::vector<std::string> gwdl_paths;
    std::string matrix_path;
    auto* gwdl = app.add_subcommand(
        "gwdl", "Generalized Wasserstein Dice score/loss/gradient for probability maps");
    gwdl->add_option("volumes", gwdl_paths,
                     "Per-class probability volumes in matrix class order, then the gt labels")
        ->required()
        ->expected(-2);
    gwdl->add_option("--matrix", matrix_path, "Distance matrix JSON (default built-in 7x7)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (*vote_opt) options.vote_seed = vote_seed;
            if (*bootn_opt) options.boot_n = boot_n;
            if (*boots_opt) options.boot_seed = boot_seed;
            return cmd_run(manifest_path, options);
        }
        if (metrics->parsed()) return cmd_metrics(gt_path, pred_path, task_name, taxonomy_path);
        if (gwdl->parsed()) return cmd_gwdl(gwdl_paths, matrix_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
