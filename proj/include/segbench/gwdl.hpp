#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segbench/taxonomy.hpp"
#include "segbench/volume.hpp"

namespace segbench {

/// Inter-class ground-distance matrix for the Wasserstein Dice objective.
/// Symmetric, zero diagonal, entries in [0,1]. It need not satisfy the
/// triangle inequality: superclass rows carry off-diagonal zeros so that
/// predicting any of their member classes costs nothing.
struct DistanceMatrix {
    int num_classes = 0;
    std::vector<double> m; // row-major num_classes x num_classes
    std::vector<std::string> class_names;

    double at(int l, int lp) const {
        return m[static_cast<std::size_t>(l) * static_cast<std::size_t>(num_classes) +
                 static_cast<std::size_t>(lp)];
    }

    /// Throws std::invalid_argument on asymmetry, nonzero diagonal, or
    /// entries outside [0,1].
    void validate() const;

    /// The built-in 7x7 matrix over {background, GGO, CON, CPP, COM, OAT,
    /// healthy_lung}. Lesion-to-lesion distance 0.8, superclass rows (COM,
    /// OAT) zero against the classes they may stand for, maximum distance
    /// normalized to 1.
    static DistanceMatrix defaults();

    /// JSON: {"classes": [...], "m": [[...], ...]}; validated on load.
    static DistanceMatrix from_json_file(const std::string& path);
    static DistanceMatrix from_json_text(const std::string& text);
};

/// Ground truth as one class index per voxel (the one-hot map y_{i,l} in
/// index form), over the distance matrix's class set.
struct OneHotGT {
    int num_classes = 0;
    std::vector<std::uint8_t> classes;
};

struct ClassWeights {
    std::vector<double> alpha; // one per class, > 0
};

/// Index into DistanceMatrix::defaults() for a raw taxonomy label.
int default_matrix_class(std::uint8_t raw_label, const Taxonomy& taxonomy);

/// Converts a raw label volume to matrix-class indices for defaults().
OneHotGT one_hot_from_labels(const LabelVolume& gt, const Taxonomy& taxonomy);

/// Wasserstein distance between a predicted distribution and a one-hot
/// ground truth: W = sum_l' m[gt][l'] * p[l']. p must sum to 1 within 1e-5
/// and have components in [0,1] (same tolerance).
double wasserstein_pointwise(std::span<const double> p, int gt_class, const DistanceMatrix& M);

/// alpha_l = 1 / (1 + #gt voxels of class l); absent classes get 1.
ClassWeights alpha_weights(const OneHotGT& gt, int num_classes);

/// The generalized Wasserstein Dice agreement score:
///   [2 sum_l alpha_l sum_i y_il (1 - W_i)] / [sum_l alpha_l sum_i y_il (2 - W_i)]
/// 1 for a perfect prediction, 0 when W == 1 everywhere. As printed this
/// expression is a score; the trainable loss below is its complement.
double gwdl_score(const ProbVolume& pred, const OneHotGT& gt, const DistanceMatrix& M);

struct GwdlResult {
    double loss = 0.0;              // 1 - score
    std::vector<double> grad;       // d loss / d p_{i,l'}, voxel-major
};

/// Loss = 1 - score, with the analytic gradient from the quotient rule
/// (dW_i/dp_{i,l'} = m[gt_i][l']).
GwdlResult gwdl_loss_and_grad(const ProbVolume& pred, const OneHotGT& gt,
                              const DistanceMatrix& M);

} // namespace segbench
