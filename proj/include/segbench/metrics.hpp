#pragma once

#include <string>
#include <utility>
#include <vector>

#include "segbench/taxonomy.hpp"
#include "segbench/volume.hpp"

namespace segbench {

/// A metric value or the explicit NOT_APPLICABLE state. The absence rules
/// (empty ground truth, class missing from a case) produce NOT_APPLICABLE,
/// which aggregation skips and CSV output renders as "NA".
class MetricValue {
public:
    MetricValue() = default; // NOT_APPLICABLE
    MetricValue(double v) : na_(false), value_(v) {}

    static MetricValue na() { return MetricValue(); }

    bool is_na() const { return na_; }
    double value() const {
        if (na_) throw std::logic_error("MetricValue: value() on NOT_APPLICABLE");
        return value_;
    }

private:
    bool na_ = true;
    double value_ = 0.0;
};

enum class Task { LUNG, BIN, MULTICLASS };

const char* to_string(Task task);
Task task_from_string(const std::string& s);

struct MetricRecord {
    std::string case_id;
    std::string method_id;
    Task task = Task::MULTICLASS;
    std::string eval_class; // "LUNG", "BIN", "CON", ..., "MEAN", "GGO+CPP"
    MetricValue dsc, hd95, asd, avd, sen;
};

/// Directed surface-to-surface distance multisets in mm. HD95 and ASD are
/// computed from the pooled (symmetric) multiset d_ab ++ d_ba.
struct SurfaceDistanceSet {
    std::vector<double> d_ab;
    std::vector<double> d_ba;

    std::vector<double> pooled() const {
        std::vector<double> all(d_ab);
        all.insert(all.end(), d_ba.begin(), d_ba.end());
        return all;
    }
};

/// 2|pred ∩ gt| / (|pred| + |gt|); NOT_APPLICABLE when gt is empty.
MetricValue dice(const BinaryMask& pred, const BinaryMask& gt);

/// Exact anisotropic Euclidean distance (mm) from every voxel center to the
/// nearest foreground voxel center, via a separable squared-distance
/// transform. Throws on an empty mask.
std::vector<double> edt(const BinaryMask& mask);

/// Foreground voxels with at least one 6-neighbour that is background or
/// outside the grid.
BinaryMask surface(const BinaryMask& mask);

/// Distances between surface voxel centers of a and b, both directions.
SurfaceDistanceSet surface_distances(const BinaryMask& a, const BinaryMask& b);

/// ASD estimator: mean of the pooled multiset (default, matches the
/// symmetric-percentile convention of HD95) or the average of the two
/// directed means.
enum class AsdMode { POOLED, DIRECTED_MEAN };

/// HD95 (95th percentile, linear interpolation between order statistics) and
/// ASD of the pooled symmetric surface distance multiset. An empty mask on
/// either side is replaced by the all-foreground volume first.
std::pair<MetricValue, MetricValue> hd95_asd(const BinaryMask& pred, const BinaryMask& gt,
                                             AsdMode asd_mode = AsdMode::POOLED);

/// | |pred| - |gt| | * voxel volume, in ml.
MetricValue avd(const BinaryMask& pred, const BinaryMask& gt);

/// |lesion_gt ∩ lung_pred| / |lesion_gt|; NOT_APPLICABLE when lesion_gt empty.
MetricValue sensitivity(const BinaryMask& lung_pred, const BinaryMask& lesion_gt);

/// Runs the per-task evaluation protocol on one (gt, pred) pair:
///   LUNG       - DSC/HD95/ASD/AVD on the non-background masks, plus
///                SEN rows for CON, CPP, GGO against the predicted lung;
///   BIN        - the four metrics on the all-lesions projection;
///   MULTICLASS - ignore-set voxels (COM by default) removed from both
///                volumes, then the four metrics for CON, CPP, GGO and
///                GGO+CPP plus the NA-skipping MEAN over {CON, CPP, GGO}.
/// case_id/method_id of the returned records are left for the caller.
std::vector<MetricRecord> evaluate_case(const LabelVolume& gt, const LabelVolume& pred,
                                        const Taxonomy& taxonomy, Task task);

} // namespace segbench
