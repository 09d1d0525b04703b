#include "segbench/ensemble.hpp"

#include <algorithm>
#include <stdexcept>

#include "segbench/numeric.hpp"

namespace segbench {

LabelVolume majority_vote(const std::vector<LabelVolume>& preds, VoteConfig cfg) {
    if (preds.empty()) throw std::invalid_argument("majority_vote: empty prediction list");
    const GridDims dims = preds.front().dims;
    const Spacing spacing = preds.front().spacing;
    for (const LabelVolume& p : preds)
        if (!(p.dims == dims) || !(p.spacing == spacing))
            throw std::invalid_argument("majority_vote: mismatched grids");

    const std::size_t n_models = preds.size();
    LabelVolume out(dims, spacing);
    std::vector<std::uint8_t> votes(n_models);
    std::vector<std::uint8_t> tied;

    const std::size_t n = dims.count();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < n_models; ++m) votes[m] = preds[m].data[i];
        std::sort(votes.begin(), votes.end());

        // runs of the sorted vote list give counts; tied winners come out
        // in ascending label order, which keeps the draw order-independent
        tied.clear();
        std::size_t best = 0;
        for (std::size_t j = 0; j < n_models;) {
            std::size_t k = j + 1;
            while (k < n_models && votes[k] == votes[j]) ++k;
            const std::size_t count = k - j;
            if (count > best) {
                best = count;
                tied.clear();
                tied.push_back(votes[j]);
            } else if (count == best) {
                tied.push_back(votes[j]);
            }
            j = k;
        }

        if (tied.size() == 1) {
            out.data[i] = tied[0];
        } else {
            const std::uint64_t draw = counter_draw(cfg.seed, static_cast<std::uint64_t>(i));
            const std::size_t pick = static_cast<std::size_t>(
                (static_cast<unsigned __int128>(draw) * tied.size()) >> 64);
            out.data[i] = tied[pick];
        }
    }
    return out;
}

ProbVolume average_probs(const std::vector<ProbVolume>& preds) {
    if (preds.empty()) throw std::invalid_argument("average_probs: empty prediction list");
    const ProbVolume& first = preds.front();
    bool all_normalized = true;
    for (const ProbVolume& p : preds) {
        if (!(p.dims == first.dims) || !(p.spacing == first.spacing) ||
            p.channels != first.channels)
            throw std::invalid_argument("average_probs: mismatched grids/channels");
        all_normalized = all_normalized && p.normalized;
    }

    ProbVolume out(first.dims, first.spacing, first.channels, all_normalized);
    const double inv = 1.0 / static_cast<double>(preds.size());
    for (std::size_t j = 0; j < out.data.size(); ++j) {
        double acc = 0.0;
        for (const ProbVolume& p : preds) acc += p.data[j];
        out.data[j] = acc * inv;
    }
    return out;
}

LabelVolume argmax_labels(const ProbVolume& prob, const std::vector<std::uint8_t>& class_ids) {
    if (static_cast<int>(class_ids.size()) != prob.channels)
        throw std::invalid_argument("argmax_labels: channels != |class_ids|");
    LabelVolume out(prob.dims, prob.spacing);
    const std::size_t n = prob.dims.count();
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double best_p = prob.at(i, 0);
        for (int c = 1; c < prob.channels; ++c) {
            const double v = prob.at(i, c);
            if (v > best_p) { // strict: ties keep the lowest channel index
                best_p = v;
                best = c;
            }
        }
        out.data[i] = class_ids[static_cast<std::size_t>(best)];
    }
    return out;
}

} // namespace segbench
