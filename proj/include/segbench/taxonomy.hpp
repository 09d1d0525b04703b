#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "segbench/volume.hpp"

namespace segbench {

struct RawClass {
    std::uint8_t id;
    std::string name;
};

/// Evaluation classes. CON groups consolidation with linear opacity, COM
/// groups the combined pattern with reversed halo sign, BIN is the union of
/// all lesion types. MEAN is an aggregation marker with no members.
enum class EvalClass { CON, CPP, GGO, COM, OAT, BIN, GGO_PLUS_CPP, MEAN };

const char* to_string(EvalClass cls);

/// Raw-label -> evaluation-class mapping. Immutable once constructed.
class Taxonomy {
public:
    /// Built-in encoding: BACKGROUND=0, HEALTHY_LUNG=1, GGO=2, CONSOLIDATION=3,
    /// CPP=4, LINEAR_OPACITY=5, RHS=6, COMBINED=7, OAT=8; ignore set {COM}.
    static Taxonomy defaults();

    /// JSON: {"raw": {"GGO": 2, ...}, "ignore": ["COM"]}. Raw names must cover
    /// the nine built-in classes; ids may be remapped. Missing "ignore" keeps
    /// the default {COM}.
    static Taxonomy from_json_file(const std::string& path);
    static Taxonomy from_json_text(const std::string& text);

    const std::vector<RawClass>& raw_classes() const { return raw_classes_; }
    const std::set<EvalClass>& ignore_set() const { return ignore_; }

    bool knows(std::uint8_t label) const { return known_[label]; }
    std::uint8_t id_of(const std::string& raw_name) const;
    bool in_class(std::uint8_t label, EvalClass cls) const { return members_of(cls)[label]; }
    const std::array<bool, 256>& members_of(EvalClass cls) const;

    /// Voxel true iff its raw class belongs to cls. Throws on labels the
    /// taxonomy does not know.
    BinaryMask project(const LabelVolume& vol, EvalClass cls) const;

    /// Lung = every non-background voxel (healthy lung plus all lesions).
    BinaryMask lung_mask(const LabelVolume& vol) const;

    /// Voxels whose ground-truth eval class is in the ignore set (default
    /// {COM}); multiclass metrics exclude them from both volumes.
    BinaryMask ignore_mask(const LabelVolume& gt) const;

private:
    Taxonomy() = default;
    void build_tables();

    std::vector<RawClass> raw_classes_;
    std::map<std::string, std::uint8_t> by_name_;
    std::set<EvalClass> ignore_;
    std::array<bool, 256> known_{};
    std::array<bool, 256> ignored_label_{};
    std::array<std::array<bool, 256>, 8> members_{}; // indexed by EvalClass
};

} // namespace segbench
