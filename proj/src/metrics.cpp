#include "segbench/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "segbench/numeric.hpp"

namespace segbench {

const char* to_string(Task task) {
    switch (task) {
    case Task::LUNG: return "lung";
    case Task::BIN: return "bin";
    case Task::MULTICLASS: return "mc";
    }
    return "?";
}

Task task_from_string(const std::string& s) {
    if (s == "lung") return Task::LUNG;
    if (s == "bin") return Task::BIN;
    if (s == "mc" || s == "multiclass") return Task::MULTICLASS;
    throw std::invalid_argument("unknown task \"" + s + "\" (expected lung|bin|mc)");
}

namespace {

void check_same_grid(const BinaryMask& a, const BinaryMask& b, const char* what) {
    if (!(a.dims == b.dims))
        throw std::invalid_argument(std::string(what) + ": dims mismatch");
    if (!(a.spacing == b.spacing))
        throw std::invalid_argument(std::string(what) + ": spacing mismatch");
}

} // namespace

MetricValue dice(const BinaryMask& pred, const BinaryMask& gt) {
    check_same_grid(pred, gt, "dice");
    std::size_t np = 0, ng = 0, ni = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] != 0, g = gt.data[i] != 0;
        np += p;
        ng += g;
        ni += (p && g);
    }
    if (ng == 0) return MetricValue::na();
    return MetricValue(2.0 * static_cast<double>(ni) / static_cast<double>(np + ng));
}

namespace {

// 1D lower envelope of parabolas (Felzenszwalb & Huttenlocher), with samples
// at physical positions i*step. f holds squared distances on input; d gets
// the transformed squared distances.
void squared_dt_1d(const double* f, double* d, int n, double step, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::max();
    z[1] = std::numeric_limits<double>::max();
    for (int q = 1; q < n; ++q) {
        const double xq = q * step;
        double s;
        for (;;) {
            const double xv = v[k] * step;
            s = (f[q] + xq * xq - (f[v[k]] + xv * xv)) / (2.0 * xq - 2.0 * xv);
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::max();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        const double xq = q * step;
        while (z[k + 1] < xq) ++k;
        const double dx = xq - v[k] * step;
        d[q] = dx * dx + f[v[k]];
    }
}

// Large finite sentinel: keeps the parabola intersections finite. Any real
// squared distance on a supported grid is far below this.
constexpr double kFarAway = 1e30;

} // namespace

std::vector<double> edt(const BinaryMask& mask) {
    const GridDims& d = mask.dims;
    std::vector<double> dist(d.count());
    bool any = false;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const bool fg = mask.data[i] != 0;
        any |= fg;
        dist[i] = fg ? 0.0 : kFarAway;
    }
    if (!any) throw std::invalid_argument("edt: empty mask");

    const int n_max = std::max({d.nx, d.ny, d.nz});
    std::vector<double> f(n_max), out(n_max), z(n_max + 1);
    std::vector<int> v(n_max);

    const std::size_t sx = 1;
    const std::size_t sy = static_cast<std::size_t>(d.nx);
    const std::size_t sz = static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);

    auto pass = [&](int n, std::size_t stride, double step, int n0, std::size_t stride0, int n1,
                    std::size_t stride1) {
        if (n == 1) return; // a single sample along this axis adds no offset
        for (int j1 = 0; j1 < n1; ++j1)
            for (int j0 = 0; j0 < n0; ++j0) {
                const std::size_t base = static_cast<std::size_t>(j0) * stride0 +
                                         static_cast<std::size_t>(j1) * stride1;
                for (int q = 0; q < n; ++q) f[q] = dist[base + static_cast<std::size_t>(q) * stride];
                squared_dt_1d(f.data(), out.data(), n, step, v.data(), z.data());
                for (int q = 0; q < n; ++q) dist[base + static_cast<std::size_t>(q) * stride] = out[q];
            }
    };

    pass(d.nx, sx, mask.spacing.sx, d.ny, sy, d.nz, sz);
    pass(d.ny, sy, mask.spacing.sy, d.nx, sx, d.nz, sz);
    pass(d.nz, sz, mask.spacing.sz, d.nx, sx, d.ny, sy);

    for (double& q : dist) q = std::sqrt(q);
    return dist;
}

BinaryMask surface(const BinaryMask& mask) {
    const GridDims& d = mask.dims;
    BinaryMask out(mask.dims, mask.spacing);
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                if (!mask.at(x, y, z)) continue;
                const bool exposed =
                    x == 0 || !mask.at(x - 1, y, z) || x == d.nx - 1 || !mask.at(x + 1, y, z) ||
                    y == 0 || !mask.at(x, y - 1, z) || y == d.ny - 1 || !mask.at(x, y + 1, z) ||
                    z == 0 || !mask.at(x, y, z - 1) || z == d.nz - 1 || !mask.at(x, y, z + 1);
                if (exposed) out.set(x, y, z, true);
            }
    return out;
}

SurfaceDistanceSet surface_distances(const BinaryMask& a, const BinaryMask& b) {
    check_same_grid(a, b, "surface_distances");
    const BinaryMask sa = surface(a);
    const BinaryMask sb = surface(b);
    if (sa.empty_mask() || sb.empty_mask())
        throw std::invalid_argument("surface_distances: empty mask");

    SurfaceDistanceSet set;
    {
        const std::vector<double> dist_to_b = edt(sb);
        for (std::size_t i = 0; i < sa.data.size(); ++i)
            if (sa.data[i]) set.d_ab.push_back(dist_to_b[i]);
    }
    {
        const std::vector<double> dist_to_a = edt(sa);
        for (std::size_t i = 0; i < sb.data.size(); ++i)
            if (sb.data[i]) set.d_ba.push_back(dist_to_a[i]);
    }
    return set;
}

std::pair<MetricValue, MetricValue> hd95_asd(const BinaryMask& pred, const BinaryMask& gt,
                                             AsdMode asd_mode) {
    check_same_grid(pred, gt, "hd95_asd");
    // A missing delineation on either side fills that side's entire volume.
    auto filled = [](const BinaryMask& m) {
        BinaryMask full(m.dims, m.spacing);
        std::fill(full.data.begin(), full.data.end(), std::uint8_t{1});
        return full;
    };
    BinaryMask pred_fill, gt_fill;
    const BinaryMask* p = &pred;
    const BinaryMask* g = &gt;
    if (pred.empty_mask()) {
        pred_fill = filled(pred);
        p = &pred_fill;
    }
    if (gt.empty_mask()) {
        gt_fill = filled(gt);
        g = &gt_fill;
    }

    const SurfaceDistanceSet set = surface_distances(*p, *g);
    std::vector<double> pooled = set.pooled();
    std::sort(pooled.begin(), pooled.end());
    const double hd95 = percentile_sorted(pooled, 0.95);
    const double asd = asd_mode == AsdMode::POOLED
                           ? mean_of(pooled)
                           : 0.5 * (mean_of(set.d_ab) + mean_of(set.d_ba));
    return {MetricValue(hd95), MetricValue(asd)};
}

MetricValue avd(const BinaryMask& pred, const BinaryMask& gt) {
    check_same_grid(pred, gt, "avd");
    const double np = static_cast<double>(pred.count_set());
    const double ng = static_cast<double>(gt.count_set());
    return MetricValue(std::abs(np - ng) * pred.spacing.voxel_ml());
}

MetricValue sensitivity(const BinaryMask& lung_pred, const BinaryMask& lesion_gt) {
    check_same_grid(lung_pred, lesion_gt, "sensitivity");
    std::size_t n_lesion = 0, n_covered = 0;
    for (std::size_t i = 0; i < lesion_gt.data.size(); ++i) {
        if (!lesion_gt.data[i]) continue;
        ++n_lesion;
        n_covered += (lung_pred.data[i] != 0);
    }
    if (n_lesion == 0) return MetricValue::na();
    return MetricValue(static_cast<double>(n_covered) / static_cast<double>(n_lesion));
}

namespace {

BinaryMask masked_out(const BinaryMask& m, const BinaryMask& ignore) {
    BinaryMask out(m.dims, m.spacing, m.data);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        if (ignore.data[i]) out.data[i] = 0;
    return out;
}

MetricRecord four_metrics(const BinaryMask& pred, const BinaryMask& gt, Task task,
                          const std::string& cls) {
    MetricRecord rec;
    rec.task = task;
    rec.eval_class = cls;
    rec.dsc = dice(pred, gt);
    std::tie(rec.hd95, rec.asd) = hd95_asd(pred, gt);
    rec.avd = avd(pred, gt);
    return rec;
}

MetricValue mean_skipping_na(std::initializer_list<MetricValue> values) {
    std::vector<double> present;
    for (const MetricValue& v : values)
        if (!v.is_na()) present.push_back(v.value());
    if (present.empty()) return MetricValue::na();
    return MetricValue(mean_of(present));
}

} // namespace

std::vector<MetricRecord> evaluate_case(const LabelVolume& gt, const LabelVolume& pred,
                                        const Taxonomy& taxonomy, Task task) {
    if (!(gt.dims == pred.dims) || !(gt.spacing == pred.spacing))
        throw std::invalid_argument("evaluate_case: grid mismatch");

    std::vector<MetricRecord> records;
    switch (task) {
    case Task::LUNG: {
        const BinaryMask lung_gt = taxonomy.lung_mask(gt);
        const BinaryMask lung_pred = taxonomy.lung_mask(pred);
        records.push_back(four_metrics(lung_pred, lung_gt, task, "LUNG"));
        for (EvalClass cls : {EvalClass::CON, EvalClass::CPP, EvalClass::GGO}) {
            MetricRecord rec;
            rec.task = task;
            rec.eval_class = to_string(cls);
            rec.sen = sensitivity(lung_pred, taxonomy.project(gt, cls));
            records.push_back(rec);
        }
        break;
    }
    case Task::BIN: {
        records.push_back(four_metrics(taxonomy.project(pred, EvalClass::BIN),
                                       taxonomy.project(gt, EvalClass::BIN), task, "BIN"));
        break;
    }
    case Task::MULTICLASS: {
        const BinaryMask ignore = taxonomy.ignore_mask(gt);
        auto project_kept = [&](const LabelVolume& vol, EvalClass cls) {
            return masked_out(taxonomy.project(vol, cls), ignore);
        };
        std::vector<MetricRecord> per_class;
        for (EvalClass cls :
             {EvalClass::CON, EvalClass::CPP, EvalClass::GGO, EvalClass::GGO_PLUS_CPP})
            per_class.push_back(four_metrics(project_kept(pred, cls), project_kept(gt, cls), task,
                                             to_string(cls)));

        MetricRecord mean_rec;
        mean_rec.task = task;
        mean_rec.eval_class = to_string(EvalClass::MEAN);
        // unweighted mean over CON, CPP, GGO; NOT_APPLICABLE entries skipped
        mean_rec.dsc = mean_skipping_na({per_class[0].dsc, per_class[1].dsc, per_class[2].dsc});
        mean_rec.hd95 = mean_skipping_na({per_class[0].hd95, per_class[1].hd95, per_class[2].hd95});
        mean_rec.asd = mean_skipping_na({per_class[0].asd, per_class[1].asd, per_class[2].asd});
        mean_rec.avd = mean_skipping_na({per_class[0].avd, per_class[1].avd, per_class[2].avd});

        records.push_back(per_class[0]);
        records.push_back(per_class[1]);
        records.push_back(per_class[2]);
        records.push_back(mean_rec);
        records.push_back(per_class[3]); // GGO+CPP block follows MEAN, as in the tables
        break;
    }
    }
    return records;
}

} // namespace segbench
