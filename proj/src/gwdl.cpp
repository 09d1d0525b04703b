#include "segbench/gwdl.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "segbench/numeric.hpp"

namespace segbench {

namespace {

// Normalization tolerance for predicted distributions; the small fp slack
// keeps finite-difference probes at exactly the tolerance boundary legal.
constexpr double kNormTol = 1e-5;
constexpr double kNormSlack = 1e-12;

void check_distribution(std::span<const double> p, int num_classes) {
    if (static_cast<int>(p.size()) != num_classes)
        throw std::invalid_argument("distribution length != class count");
    double sum = 0.0;
    for (double v : p) {
        if (v < -(kNormTol + kNormSlack) || v > 1.0 + kNormTol + kNormSlack)
            throw std::invalid_argument("probability component outside [0,1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kNormTol + kNormSlack)
        throw std::invalid_argument("probabilities not normalized within 1e-5");
}

} // namespace

void DistanceMatrix::validate() const {
    if (num_classes < 1) throw std::invalid_argument("DistanceMatrix: no classes");
    if (m.size() != static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes))
        throw std::invalid_argument("DistanceMatrix: m is not LxL");
    if (!class_names.empty() && static_cast<int>(class_names.size()) != num_classes)
        throw std::invalid_argument("DistanceMatrix: class_names length mismatch");
    for (int l = 0; l < num_classes; ++l) {
        if (at(l, l) != 0.0) throw std::invalid_argument("DistanceMatrix: nonzero diagonal");
        for (int lp = 0; lp < num_classes; ++lp) {
            if (at(l, lp) < 0.0 || at(l, lp) > 1.0)
                throw std::invalid_argument("DistanceMatrix: entry outside [0,1]");
            if (at(l, lp) != at(lp, l))
                throw std::invalid_argument("DistanceMatrix: not symmetric");
        }
    }
}

DistanceMatrix DistanceMatrix::defaults() {
    DistanceMatrix M;
    M.num_classes = 7;
    M.class_names = {"background", "GGO", "CON", "CPP", "COM", "OAT", "healthy_lung"};
    M.m = {
        0,   1,   1,   1,   1, 0, 1, //
        1,   0,   0.8, 0.8, 0, 0, 1, //
        1,   0.8, 0,   0.8, 0, 0, 1, //
        1,   0.8, 0.8, 0,   0, 0, 1, //
        1,   0,   0,   0,   0, 0, 1, //
        0,   0,   0,   0,   0, 0, 1, //
        1,   1,   1,   1,   1, 1, 0, //
    };
    M.validate();
    return M;
}

DistanceMatrix DistanceMatrix::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    DistanceMatrix M;
    for (const auto& name : j.at("classes")) M.class_names.push_back(name.get<std::string>());
    M.num_classes = static_cast<int>(M.class_names.size());
    const auto& rows = j.at("m");
    if (static_cast<int>(rows.size()) != M.num_classes)
        throw std::invalid_argument("DistanceMatrix: wrong row count");
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != M.num_classes)
            throw std::invalid_argument("DistanceMatrix: wrong column count");
        for (const auto& v : row) M.m.push_back(v.get<double>());
    }
    M.validate();
    return M;
}

DistanceMatrix DistanceMatrix::from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open distance matrix file " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

int default_matrix_class(std::uint8_t raw_label, const Taxonomy& taxonomy) {
    if (!taxonomy.knows(raw_label))
        throw std::invalid_argument("unknown raw label " + std::to_string(raw_label));
    if (raw_label == 0) return 0;                                     // background
    if (taxonomy.in_class(raw_label, EvalClass::GGO)) return 1;
    if (taxonomy.in_class(raw_label, EvalClass::CON)) return 2;
    if (taxonomy.in_class(raw_label, EvalClass::CPP)) return 3;
    if (taxonomy.in_class(raw_label, EvalClass::COM)) return 4;
    if (taxonomy.in_class(raw_label, EvalClass::OAT)) return 5;
    return 6; // healthy lung
}

OneHotGT one_hot_from_labels(const LabelVolume& gt, const Taxonomy& taxonomy) {
    OneHotGT out;
    out.num_classes = 7;
    out.classes.reserve(gt.data.size());
    for (std::uint8_t label : gt.data)
        out.classes.push_back(static_cast<std::uint8_t>(default_matrix_class(label, taxonomy)));
    return out;
}

double wasserstein_pointwise(std::span<const double> p, int gt_class, const DistanceMatrix& M) {
    if (gt_class < 0 || gt_class >= M.num_classes)
        throw std::invalid_argument("gt class index out of range");
    check_distribution(p, M.num_classes);
    double w = 0.0;
    for (int lp = 0; lp < M.num_classes; ++lp) w += M.at(gt_class, lp) * p[static_cast<std::size_t>(lp)];
    return w;
}

ClassWeights alpha_weights(const OneHotGT& gt, int num_classes) {
    std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
    for (std::uint8_t c : gt.classes) {
        if (c >= num_classes) throw std::invalid_argument("gt class index out of range");
        counts[c] += 1.0;
    }
    ClassWeights w;
    w.alpha.reserve(counts.size());
    for (double c : counts) w.alpha.push_back(1.0 / (1.0 + c));
    return w;
}

namespace {

struct GwdlSums {
    double numerator_half; // sum_l alpha_l sum_i y_il (1 - W_i)
    double denominator;    // sum_l alpha_l sum_i y_il (2 - W_i)
};

// Shared evaluation of the two class-weighted voxel sums. Per-class
// contributions are collected and pairwise-reduced in voxel order, so the
// result is deterministic however the caller schedules voxels.
GwdlSums gwdl_sums(const ProbVolume& pred, const OneHotGT& gt, const DistanceMatrix& M,
                   const ClassWeights& w, std::vector<double>* w_per_voxel) {
    const int L = M.num_classes;
    if (pred.channels != L)
        throw std::invalid_argument("gwdl: prediction channels != matrix classes");
    const std::size_t n = pred.dims.count();
    if (gt.classes.size() != n) throw std::invalid_argument("gwdl: grid mismatch");
    if (n == 0) throw std::invalid_argument("gwdl: empty ground truth");

    std::vector<std::vector<double>> one_minus_w(static_cast<std::size_t>(L));
    if (w_per_voxel) w_per_voxel->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = gt.classes[i];
        const double wi = wasserstein_pointwise(
            std::span<const double>(pred.data.data() + i * static_cast<std::size_t>(L),
                                    static_cast<std::size_t>(L)),
            cls, M);
        one_minus_w[static_cast<std::size_t>(cls)].push_back(1.0 - wi);
        if (w_per_voxel) (*w_per_voxel)[i] = wi;
    }

    GwdlSums sums{0.0, 0.0};
    for (int l = 0; l < L; ++l) {
        const auto& contrib = one_minus_w[static_cast<std::size_t>(l)];
        const double s1 = pairwise_sum(contrib);
        const double count = static_cast<double>(contrib.size());
        sums.numerator_half += w.alpha[static_cast<std::size_t>(l)] * s1;
        sums.denominator += w.alpha[static_cast<std::size_t>(l)] * (count + s1);
    }
    return sums;
}

} // namespace

double gwdl_score(const ProbVolume& pred, const OneHotGT& gt, const DistanceMatrix& M) {
    const ClassWeights w = alpha_weights(gt, M.num_classes);
    const GwdlSums sums = gwdl_sums(pred, gt, M, w, nullptr);
    return 2.0 * sums.numerator_half / sums.denominator;
}

GwdlResult gwdl_loss_and_grad(const ProbVolume& pred, const OneHotGT& gt,
                              const DistanceMatrix& M) {
    const int L = M.num_classes;
    const ClassWeights w = alpha_weights(gt, L);
    const GwdlSums sums = gwdl_sums(pred, gt, M, w, nullptr);
    const double a = sums.numerator_half;
    const double b = sums.denominator;

    GwdlResult result;
    result.loss = 1.0 - 2.0 * a / b;

    // score = 2A/B with dA/dp_{i,l'} = dB/dp_{i,l'} = -alpha_{gt_i} m[gt_i][l'],
    // so d loss / dp_{i,l'} = 2 alpha_{gt_i} m[gt_i][l'] (B - A) / B^2.
    const std::size_t n = pred.dims.count();
    result.grad.resize(n * static_cast<std::size_t>(L));
    const double factor = 2.0 * (b - a) / (b * b);
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = gt.classes[i];
        const double alpha = w.alpha[static_cast<std::size_t>(cls)];
        for (int lp = 0; lp < L; ++lp)
            result.grad[i * static_cast<std::size_t>(L) + static_cast<std::size_t>(lp)] =
                factor * alpha * M.at(cls, lp);
    }
    return result;
}

} // namespace segbench
