#pragma once

#include <cstdint>
#include <vector>

#include "segbench/volume.hpp"

namespace segbench {

struct VoteConfig {
    std::uint64_t seed = 0; // fixed seed => bit-identical output
};

/// Per-voxel majority vote over hard labels. A strict majority wins; ties are
/// broken by a uniform draw among the tied labels from a counter-based
/// generator keyed by (seed, linear voxel index), so the result is
/// independent of input order and of any parallel schedule.
LabelVolume majority_vote(const std::vector<LabelVolume>& preds, VoteConfig cfg);

/// Per-voxel, per-channel arithmetic mean. The output carries the
/// `normalized` flag iff every input does.
ProbVolume average_probs(const std::vector<ProbVolume>& preds);

/// Per-voxel argmax over channels, mapped through class_ids. Ties go to the
/// lowest channel index.
LabelVolume argmax_labels(const ProbVolume& prob, const std::vector<std::uint8_t>& class_ids);

} // namespace segbench
