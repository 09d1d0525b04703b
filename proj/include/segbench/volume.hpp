#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace segbench {

/// Voxel edge lengths in mm. All components strictly positive.
struct Spacing {
    double sx = 1.0;
    double sy = 1.0;
    double sz = 1.0;

    bool valid() const { return sx > 0.0 && sy > 0.0 && sz > 0.0; }
    double voxel_ml() const { return sx * sy * sz / 1000.0; }

    bool operator==(const Spacing&) const = default;
};

struct GridDims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    bool valid() const { return nx > 0 && ny > 0 && nz > 0; }
    std::size_t count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    // x-fastest linear order
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(nx) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
    }

    bool operator==(const GridDims&) const = default;
};

enum class Axis { X = 0, Y = 1, Z = 2 };

namespace detail {
inline void check_grid(const GridDims& dims, const Spacing& spacing, std::size_t data_len,
                       const char* what) {
    if (!dims.valid()) throw std::invalid_argument(std::string(what) + ": non-positive dims");
    if (!spacing.valid()) throw std::invalid_argument(std::string(what) + ": non-positive spacing");
    if (data_len != dims.count())
        throw std::invalid_argument(std::string(what) + ": data length != nx*ny*nz");
}
} // namespace detail

/// 3D integer label grid, labels in [0,255], x-fastest linear order.
struct LabelVolume {
    GridDims dims;
    Spacing spacing;
    std::vector<std::uint8_t> data;

    LabelVolume() = default;
    LabelVolume(GridDims d, Spacing s) : dims(d), spacing(s), data(d.count(), 0) {
        detail::check_grid(dims, spacing, data.size(), "LabelVolume");
    }
    LabelVolume(GridDims d, Spacing s, std::vector<std::uint8_t> v)
        : dims(d), spacing(s), data(std::move(v)) {
        detail::check_grid(dims, spacing, data.size(), "LabelVolume");
    }

    std::uint8_t at(int x, int y, int z) const { return data[dims.index(x, y, z)]; }
    std::uint8_t& at(int x, int y, int z) { return data[dims.index(x, y, z)]; }
};

/// 3D scalar grid (HU intensities, probabilities, distance fields).
struct ScalarVolume {
    GridDims dims;
    Spacing spacing;
    std::vector<float> data;

    ScalarVolume() = default;
    ScalarVolume(GridDims d, Spacing s) : dims(d), spacing(s), data(d.count(), 0.0f) {
        detail::check_grid(dims, spacing, data.size(), "ScalarVolume");
    }
    ScalarVolume(GridDims d, Spacing s, std::vector<float> v)
        : dims(d), spacing(s), data(std::move(v)) {
        detail::check_grid(dims, spacing, data.size(), "ScalarVolume");
    }

    float at(int x, int y, int z) const { return data[dims.index(x, y, z)]; }
    float& at(int x, int y, int z) { return data[dims.index(x, y, z)]; }
};

/// Per-voxel distribution over C classes, channel-interleaved
/// (value of channel c at voxel i lives at data[i*channels + c]).
struct ProbVolume {
    GridDims dims;
    Spacing spacing;
    int channels = 0;
    bool normalized = false;
    std::vector<double> data;

    ProbVolume() = default;
    ProbVolume(GridDims d, Spacing s, int c, bool norm = false)
        : dims(d), spacing(s), channels(c), normalized(norm),
          data(d.count() * static_cast<std::size_t>(c), 0.0) {
        validate_shape();
    }
    ProbVolume(GridDims d, Spacing s, int c, std::vector<double> v, bool norm = false)
        : dims(d), spacing(s), channels(c), normalized(norm), data(std::move(v)) {
        validate_shape();
    }

    double at(std::size_t voxel, int channel) const {
        return data[voxel * static_cast<std::size_t>(channels) + static_cast<std::size_t>(channel)];
    }
    double& at(std::size_t voxel, int channel) {
        return data[voxel * static_cast<std::size_t>(channels) + static_cast<std::size_t>(channel)];
    }

    // True when every voxel's components sum to 1 within tol.
    bool rows_sum_to_one(double tol = 1e-5) const;

private:
    void validate_shape() const {
        if (channels < 1) throw std::invalid_argument("ProbVolume: channels < 1");
        detail::check_grid(dims, spacing, data.size() / static_cast<std::size_t>(channels),
                           "ProbVolume");
        if (data.size() % static_cast<std::size_t>(channels) != 0)
            throw std::invalid_argument("ProbVolume: data length not divisible by channels");
    }
};

/// Per-voxel booleans (stored as bytes to keep addressing simple).
struct BinaryMask {
    GridDims dims;
    Spacing spacing;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(GridDims d, Spacing s) : dims(d), spacing(s), data(d.count(), 0) {
        detail::check_grid(dims, spacing, data.size(), "BinaryMask");
    }
    BinaryMask(GridDims d, Spacing s, std::vector<std::uint8_t> v)
        : dims(d), spacing(s), data(std::move(v)) {
        detail::check_grid(dims, spacing, data.size(), "BinaryMask");
    }

    bool at(int x, int y, int z) const { return data[dims.index(x, y, z)] != 0; }
    void set(int x, int y, int z, bool v) { data[dims.index(x, y, z)] = v ? 1 : 0; }

    std::size_t count_set() const {
        std::size_t n = 0;
        for (std::uint8_t v : data) n += (v != 0);
        return n;
    }
    bool empty_mask() const { return count_set() == 0; }
};

/// v -> out_lo + (clamp(v, lo, hi) - lo) * (out_hi - out_lo) / (hi - lo)
ScalarVolume clip_rescale(const ScalarVolume& vol, double lo, double hi, double out_lo,
                          double out_hi);

/// Block-average along one axis. Output length = floor(n/factor), trailing
/// remainder voxels dropped; spacing along the axis multiplied by factor.
ScalarVolume avg_pool_axis(const ScalarVolume& vol, Axis axis, int factor);

/// Inverse of avg_pool_axis with nearest-neighbour repetition: each voxel is
/// repeated `factor` times along the axis, then zero-padded up to target_len.
/// Spacing along the axis is divided by factor.
ScalarVolume nn_upsample_axis(const ScalarVolume& vol, Axis axis, int factor, int target_len);
LabelVolume nn_upsample_axis(const LabelVolume& vol, Axis axis, int factor, int target_len);

/// Voxel true iff p >= t (inclusive threshold).
BinaryMask threshold(const ScalarVolume& prob, double t);

/// Keep the k largest connected components (6- or 26-connectivity).
/// Equal-sized components are ranked by their smallest linear voxel index.
BinaryMask keep_k_largest_components(const BinaryMask& mask, int k, int connectivity);

} // namespace segbench
