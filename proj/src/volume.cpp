#include "segbench/volume.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace segbench {

bool ProbVolume::rows_sum_to_one(double tol) const {
    const std::size_t n = dims.count();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int c = 0; c < channels; ++c) s += at(i, c);
        if (std::abs(s - 1.0) > tol) return false;
    }
    return true;
}

ScalarVolume clip_rescale(const ScalarVolume& vol, double lo, double hi, double out_lo,
                          double out_hi) {
    if (lo >= hi) throw std::invalid_argument("clip_rescale: lo >= hi");
    if (out_lo >= out_hi) throw std::invalid_argument("clip_rescale: out_lo >= out_hi");
    ScalarVolume out(vol.dims, vol.spacing);
    const double scale = (out_hi - out_lo) / (hi - lo);
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        const double v = std::clamp(static_cast<double>(vol.data[i]), lo, hi);
        out.data[i] = static_cast<float>(out_lo + (v - lo) * scale);
    }
    return out;
}

namespace {

struct AxisView {
    int len;            // voxels along the axis
    std::size_t stride; // linear stride along the axis
    int n_other0, n_other1;
    std::size_t stride_other0, stride_other1;
};

AxisView make_axis_view(const GridDims& d, Axis axis) {
    const std::array<int, 3> n = {d.nx, d.ny, d.nz};
    const std::array<std::size_t, 3> s = {
        1, static_cast<std::size_t>(d.nx),
        static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny)};
    const int a = static_cast<int>(axis);
    int o0 = (a + 1) % 3, o1 = (a + 2) % 3;
    if (s[o0] > s[o1]) std::swap(o0, o1); // inner loop walks the smaller stride
    return AxisView{n[a], s[a], n[o0], n[o1], s[o0], s[o1]};
}

GridDims with_axis_len(GridDims d, Axis axis, int len) {
    switch (axis) {
    case Axis::X: d.nx = len; break;
    case Axis::Y: d.ny = len; break;
    case Axis::Z: d.nz = len; break;
    }
    return d;
}

Spacing with_axis_scale(Spacing s, Axis axis, double factor) {
    switch (axis) {
    case Axis::X: s.sx *= factor; break;
    case Axis::Y: s.sy *= factor; break;
    case Axis::Z: s.sz *= factor; break;
    }
    return s;
}

// Applies fn(in_line_base, out_line_base) for every 1D line along `axis`,
// where bases are linear offsets into the respective volumes.
template <class F>
void for_each_line(const GridDims& in_dims, const GridDims& out_dims, Axis axis, F&& fn) {
    const AxisView vi = make_axis_view(in_dims, axis);
    const AxisView vo = make_axis_view(out_dims, axis);
    for (int j1 = 0; j1 < vi.n_other1; ++j1) {
        for (int j0 = 0; j0 < vi.n_other0; ++j0) {
            const std::size_t in_base = static_cast<std::size_t>(j0) * vi.stride_other0 +
                                        static_cast<std::size_t>(j1) * vi.stride_other1;
            const std::size_t out_base = static_cast<std::size_t>(j0) * vo.stride_other0 +
                                         static_cast<std::size_t>(j1) * vo.stride_other1;
            fn(in_base, out_base);
        }
    }
}

int axis_len(const GridDims& d, Axis axis) {
    switch (axis) {
    case Axis::X: return d.nx;
    case Axis::Y: return d.ny;
    default: return d.nz;
    }
}

} // namespace

ScalarVolume avg_pool_axis(const ScalarVolume& vol, Axis axis, int factor) {
    if (factor < 1) throw std::invalid_argument("avg_pool_axis: factor < 1");
    const int n = axis_len(vol.dims, axis);
    if (factor > n) throw std::invalid_argument("avg_pool_axis: factor exceeds axis length");
    const int out_n = n / factor;
    ScalarVolume out(with_axis_len(vol.dims, axis, out_n),
                     with_axis_scale(vol.spacing, axis, static_cast<double>(factor)));
    const std::size_t stride = make_axis_view(vol.dims, axis).stride;
    const std::size_t out_stride = make_axis_view(out.dims, axis).stride;
    for_each_line(vol.dims, out.dims, axis, [&](std::size_t ib, std::size_t ob) {
        for (int j = 0; j < out_n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < factor; ++k)
                acc += vol.data[ib + static_cast<std::size_t>(j * factor + k) * stride];
            out.data[ob + static_cast<std::size_t>(j) * out_stride] =
                static_cast<float>(acc / factor);
        }
    });
    return out;
}

namespace {

template <class Vol>
Vol nn_upsample_impl(const Vol& vol, Axis axis, int factor, int target_len) {
    if (factor < 1) throw std::invalid_argument("nn_upsample_axis: factor < 1");
    const int n = axis_len(vol.dims, axis);
    if (target_len < n * factor)
        throw std::invalid_argument("nn_upsample_axis: target_len < n*factor");
    Vol out(with_axis_len(vol.dims, axis, target_len),
            with_axis_scale(vol.spacing, axis, 1.0 / static_cast<double>(factor)));
    const std::size_t stride = make_axis_view(vol.dims, axis).stride;
    const std::size_t out_stride = make_axis_view(out.dims, axis).stride;
    for_each_line(vol.dims, out.dims, axis, [&](std::size_t ib, std::size_t ob) {
        for (int j = 0; j < n * factor; ++j)
            out.data[ob + static_cast<std::size_t>(j) * out_stride] =
                vol.data[ib + static_cast<std::size_t>(j / factor) * stride];
        // trailing slices stay zero-filled
    });
    return out;
}

} // namespace

ScalarVolume nn_upsample_axis(const ScalarVolume& vol, Axis axis, int factor, int target_len) {
    return nn_upsample_impl(vol, axis, factor, target_len);
}

LabelVolume nn_upsample_axis(const LabelVolume& vol, Axis axis, int factor, int target_len) {
    return nn_upsample_impl(vol, axis, factor, target_len);
}

BinaryMask threshold(const ScalarVolume& prob, double t) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("threshold: t outside [0,1]");
    BinaryMask out(prob.dims, prob.spacing);
    for (std::size_t i = 0; i < prob.data.size(); ++i)
        out.data[i] = (static_cast<double>(prob.data[i]) >= t) ? 1 : 0;
    return out;
}

BinaryMask keep_k_largest_components(const BinaryMask& mask, int k, int connectivity) {
    if (k < 1) throw std::invalid_argument("keep_k_largest_components: k < 1");
    if (connectivity != 6 && connectivity != 26)
        throw std::invalid_argument("keep_k_largest_components: connectivity must be 6 or 26");

    std::vector<std::array<int, 3>> offsets;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                if (connectivity == 6 && std::abs(dx) + std::abs(dy) + std::abs(dz) != 1) continue;
                offsets.push_back({dx, dy, dz});
            }

    const GridDims& d = mask.dims;
    constexpr std::int32_t kUnlabeled = -1;
    std::vector<std::int32_t> comp(mask.data.size(), kUnlabeled);

    struct Component {
        std::size_t size;
        std::size_t seed; // smallest linear index, since the scan is in linear order
        std::int32_t id;
    };
    std::vector<Component> components;
    std::vector<std::size_t> queue;

    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const std::size_t start = d.index(x, y, z);
                if (!mask.data[start] || comp[start] != kUnlabeled) continue;
                const std::int32_t id = static_cast<std::int32_t>(components.size());
                comp[start] = id;
                queue.clear();
                queue.push_back(start);
                std::size_t size = 0;
                while (!queue.empty()) {
                    const std::size_t cur = queue.back();
                    queue.pop_back();
                    ++size;
                    const int cx = static_cast<int>(cur % static_cast<std::size_t>(d.nx));
                    const int cy = static_cast<int>((cur / static_cast<std::size_t>(d.nx)) %
                                                    static_cast<std::size_t>(d.ny));
                    const int cz = static_cast<int>(cur / (static_cast<std::size_t>(d.nx) *
                                                           static_cast<std::size_t>(d.ny)));
                    for (const auto& off : offsets) {
                        const int nx = cx + off[0], ny = cy + off[1], nz = cz + off[2];
                        if (nx < 0 || nx >= d.nx || ny < 0 || ny >= d.ny || nz < 0 || nz >= d.nz)
                            continue;
                        const std::size_t ni = d.index(nx, ny, nz);
                        if (mask.data[ni] && comp[ni] == kUnlabeled) {
                            comp[ni] = id;
                            queue.push_back(ni);
                        }
                    }
                }
                components.push_back({size, start, id});
            }

    if (components.size() <= static_cast<std::size_t>(k)) return mask;

    std::sort(components.begin(), components.end(), [](const Component& a, const Component& b) {
        if (a.size != b.size) return a.size > b.size;
        return a.seed < b.seed;
    });

    std::vector<std::uint8_t> keep(components.size(), 0);
    for (int i = 0; i < k; ++i) keep[static_cast<std::size_t>(components[i].id)] = 1;

    BinaryMask out(mask.dims, mask.spacing);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        out.data[i] = (comp[i] != kUnlabeled && keep[static_cast<std::size_t>(comp[i])]) ? 1 : 0;
    return out;
}

} // namespace segbench
