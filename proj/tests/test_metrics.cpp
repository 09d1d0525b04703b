#include "doctest.h"

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "segbench/metrics.hpp"
#include "segbench/numeric.hpp"

using namespace segbench;

namespace {

BinaryMask mask_of(GridDims dims, Spacing spacing, std::vector<std::size_t> set_indices) {
    BinaryMask m(dims, spacing);
    for (std::size_t i : set_indices) m.data[i] = 1;
    return m;
}

} // namespace

TEST_CASE("dice identity, disjoint, partial, empty gt") {
    const GridDims d{4, 4, 4};
    const Spacing sp{1, 1, 1};
    const BinaryMask a = mask_of(d, sp, {0, 1, 2});

    CHECK(dice(a, a).value() == doctest::Approx(1.0));
    CHECK(dice(mask_of(d, sp, {10, 11}), a).value() == doctest::Approx(0.0));

    // pred {(0,0,0)}, gt {(0,0,0),(1,0,0)} -> 2/3
    const BinaryMask pred = mask_of(d, sp, {0});
    const BinaryMask gt = mask_of(d, sp, {0, 1});
    CHECK(dice(pred, gt).value() == doctest::Approx(2.0 / 3.0));

    CHECK(dice(a, mask_of(d, sp, {})).is_na());
    CHECK_THROWS_AS(dice(a, mask_of({3, 3, 3}, sp, {})), std::invalid_argument);
}

TEST_CASE("dice is symmetric on nonempty pairs") {
    std::mt19937_64 rng(5);
    for (int iter = 0; iter < 20; ++iter) {
        const GridDims d = oracle::random_dims(rng, 2, 8);
        BinaryMask a = oracle::random_mask(rng, d, {1, 1, 1}, 0.4);
        BinaryMask b = oracle::random_mask(rng, d, {1, 1, 1}, 0.4);
        a.data[0] = b.data[0] = 1; // keep both nonempty
        CHECK(dice(a, b).value() == doctest::Approx(dice(b, a).value()));
    }
}

TEST_CASE("edt basics") {
    const GridDims d{3, 3, 3};
    const Spacing sp{1, 1, 3};

    BinaryMask full(d, sp);
    std::fill(full.data.begin(), full.data.end(), std::uint8_t{1});
    for (double v : edt(full)) CHECK(v == 0.0);

    BinaryMask single(d, sp);
    single.set(1, 1, 1, true);
    const std::vector<double> dist = edt(single);
    CHECK(dist[d.index(1, 1, 1)] == 0.0);
    CHECK(dist[d.index(1, 1, 2)] == doctest::Approx(3.0)); // one step along z
    CHECK(dist[d.index(2, 1, 1)] == doctest::Approx(1.0));
    CHECK(dist[d.index(2, 2, 2)] == doctest::Approx(std::sqrt(1 + 1 + 9)));

    CHECK_THROWS_AS(edt(BinaryMask(d, sp)), std::invalid_argument);
}

TEST_CASE("edt matches the brute-force oracle on random anisotropic masks") {
    std::mt19937_64 rng(17);
    for (int iter = 0; iter < 40; ++iter) {
        const GridDims d = oracle::random_dims(rng, 1, 16);
        const Spacing sp = oracle::random_spacing(rng);
        BinaryMask m = oracle::random_mask(rng, d, sp, 0.2);
        if (m.empty_mask()) m.data[rng() % m.data.size()] = 1;
        const std::vector<double> fast = edt(m);
        const std::vector<double> slow = oracle::brute_force_edt(m);
        for (std::size_t i = 0; i < fast.size(); ++i)
            CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
    }
}

TEST_CASE("surface of a solid cube is its shell") {
    BinaryMask cube({5, 5, 5}, {1, 1, 1});
    for (int z = 1; z <= 3; ++z)
        for (int y = 1; y <= 3; ++y)
            for (int x = 1; x <= 3; ++x) cube.set(x, y, z, true);
    const BinaryMask shell = surface(cube);
    CHECK(shell.count_set() == 26); // all but the center voxel
    CHECK_FALSE(shell.at(2, 2, 2));

    BinaryMask single({3, 3, 3}, {1, 1, 1});
    single.set(1, 1, 1, true);
    CHECK(surface(single).count_set() == 1);

    CHECK(surface(BinaryMask({3, 3, 3}, {1, 1, 1})).empty_mask());
}

TEST_CASE("grid boundary counts as background for surfaces") {
    BinaryMask full({3, 3, 3}, {1, 1, 1});
    std::fill(full.data.begin(), full.data.end(), std::uint8_t{1});
    CHECK(surface(full).count_set() == 26); // everything except the center
}

TEST_CASE("hd95_asd basics") {
    const GridDims d{4, 4, 4};
    const Spacing sp{1, 1, 3};
    BinaryMask a(d, sp);
    a.set(1, 1, 1, true);

    const auto [hd_same, asd_same] = hd95_asd(a, a);
    CHECK(hd_same.value() == doctest::Approx(0.0));
    CHECK(asd_same.value() == doctest::Approx(0.0));

    BinaryMask b(d, sp);
    b.set(1, 1, 2, true); // 3 mm away along z
    const auto [hd, asd] = hd95_asd(a, b);
    CHECK(hd.value() == doctest::Approx(3.0));
    CHECK(asd.value() == doctest::Approx(3.0));
}

TEST_CASE("hd95_asd matches brute force on random pairs and is symmetric") {
    std::mt19937_64 rng(29);
    for (int iter = 0; iter < 25; ++iter) {
        const GridDims d{8, 8, 8};
        const Spacing sp = oracle::random_spacing(rng);
        BinaryMask a = oracle::random_mask(rng, d, sp, 0.15);
        BinaryMask b = oracle::random_mask(rng, d, sp, 0.15);
        a.data[0] = 1;
        b.data[7] = 1;

        std::vector<double> pooled = oracle::brute_force_surface_distances(a, b);
        std::sort(pooled.begin(), pooled.end());
        const double expect_hd = percentile_sorted(pooled, 0.95);
        const double expect_asd = mean_of(pooled);

        const auto [hd, asd] = hd95_asd(a, b);
        CHECK(hd.value() == doctest::Approx(expect_hd).epsilon(1e-12));
        CHECK(asd.value() == doctest::Approx(expect_asd).epsilon(1e-12));

        const auto [hd_rev, asd_rev] = hd95_asd(b, a);
        CHECK(hd.value() == doctest::Approx(hd_rev.value()).epsilon(1e-12));
        CHECK(asd.value() == doctest::Approx(asd_rev.value()).epsilon(1e-12));

        // HD95 <= max(D) and ASD <= HD100
        CHECK(hd.value() <= pooled.back() + 1e-12);
        CHECK(asd.value() <= pooled.back() + 1e-12);
    }
}

TEST_CASE("directed asd mode averages the two directed means") {
    std::mt19937_64 rng(53);
    const GridDims d{7, 6, 5};
    const Spacing sp{1, 1.5, 2};
    BinaryMask a = oracle::random_mask(rng, d, sp, 0.2);
    BinaryMask b = oracle::random_mask(rng, d, sp, 0.2);
    a.data[0] = 1;
    b.data[5] = 1;

    const SurfaceDistanceSet set = surface_distances(a, b);
    const double expect = 0.5 * (mean_of(set.d_ab) + mean_of(set.d_ba));
    const auto [hd_dir, asd_dir] = hd95_asd(a, b, AsdMode::DIRECTED_MEAN);
    CHECK(asd_dir.value() == doctest::Approx(expect).epsilon(1e-12));

    // HD95 is unaffected by the ASD estimator choice
    const auto [hd_pool, asd_pool] = hd95_asd(a, b);
    CHECK(hd_dir.value() == doctest::Approx(hd_pool.value()));
    // the two estimators agree only when both directed sets have equal size
    // and mean; in general they differ
    if (set.d_ab.size() != set.d_ba.size())
        CHECK(asd_dir.value() != asd_pool.value());
}

TEST_CASE("empty side triggers the fill-the-volume rule") {
    const GridDims d{5, 4, 3};
    const Spacing sp{1.5, 1, 2};
    BinaryMask pred(d, sp);
    pred.set(2, 2, 1, true);
    const BinaryMask empty(d, sp);

    // oracle: gt replaced by the all-foreground volume
    BinaryMask full(d, sp);
    std::fill(full.data.begin(), full.data.end(), std::uint8_t{1});
    std::vector<double> pooled = oracle::brute_force_surface_distances(pred, full);
    std::sort(pooled.begin(), pooled.end());

    const auto [hd, asd] = hd95_asd(pred, empty);
    CHECK(hd.value() == doctest::Approx(percentile_sorted(pooled, 0.95)));
    CHECK(asd.value() == doctest::Approx(mean_of(pooled)));

    // empty pred fills the predicted volume instead; both empty fill both
    const auto [hd2, asd2] = hd95_asd(empty, pred);
    CHECK(hd2.value() == doctest::Approx(hd.value()));
    CHECK(asd2.value() == doctest::Approx(asd.value()));
    const auto [hd3, asd3] = hd95_asd(empty, empty);
    CHECK(hd3.value() == doctest::Approx(0.0));
    CHECK(asd3.value() == doctest::Approx(0.0));
}

TEST_CASE("avd arithmetic") {
    const GridDims d{4, 4, 4};
    const Spacing sp{1, 1, 3};
    BinaryMask pred(d, sp);
    for (int i = 0; i < 10; ++i) pred.data[static_cast<std::size_t>(i)] = 1;
    BinaryMask gt(d, sp);
    for (int i = 0; i < 4; ++i) gt.data[static_cast<std::size_t>(i)] = 1;

    CHECK(avd(pred, pred).value() == doctest::Approx(0.0));
    CHECK(avd(pred, gt).value() == doctest::Approx(0.018));
    CHECK(avd(BinaryMask(d, sp), BinaryMask(d, sp)).value() == doctest::Approx(0.0));
}

TEST_CASE("sensitivity coverage") {
    const GridDims d{4, 4, 1};
    const Spacing sp{1, 1, 1};
    const BinaryMask lesion = mask_of(d, sp, {0, 1, 2, 3});

    BinaryMask lung_all(d, sp);
    std::fill(lung_all.data.begin(), lung_all.data.end(), std::uint8_t{1});
    CHECK(sensitivity(lung_all, lesion).value() == doctest::Approx(1.0));

    const BinaryMask lung_half = mask_of(d, sp, {0, 1});
    CHECK(sensitivity(lung_half, lesion).value() == doctest::Approx(0.5));

    CHECK(sensitivity(lung_all, BinaryMask(d, sp)).is_na());
}

namespace {

LabelVolume labels_of(GridDims dims, Spacing spacing) { return LabelVolume(dims, spacing); }

} // namespace

TEST_CASE("evaluate_case perfect prediction") {
    const Taxonomy tax = Taxonomy::defaults();
    LabelVolume gt = labels_of({6, 6, 6}, {1, 1, 3});
    // a little of everything
    for (int i = 0; i < 40; ++i) gt.data[static_cast<std::size_t>(i)] = 1;    // healthy lung
    for (int i = 40; i < 60; ++i) gt.data[static_cast<std::size_t>(i)] = 2;   // GGO
    for (int i = 60; i < 75; ++i) gt.data[static_cast<std::size_t>(i)] = 3;   // consolidation
    for (int i = 75; i < 85; ++i) gt.data[static_cast<std::size_t>(i)] = 4;   // CPP

    for (Task task : {Task::LUNG, Task::BIN, Task::MULTICLASS}) {
        for (const MetricRecord& rec : evaluate_case(gt, gt, tax, task)) {
            if (!rec.dsc.is_na()) CHECK(rec.dsc.value() == doctest::Approx(1.0));
            if (!rec.hd95.is_na()) CHECK(rec.hd95.value() == doctest::Approx(0.0));
            if (!rec.asd.is_na()) CHECK(rec.asd.value() == doctest::Approx(0.0));
            if (!rec.avd.is_na()) CHECK(rec.avd.value() == doctest::Approx(0.0));
            if (!rec.sen.is_na()) CHECK(rec.sen.value() == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("evaluate_case lung task rows") {
    const Taxonomy tax = Taxonomy::defaults();
    LabelVolume gt = labels_of({4, 4, 4}, {1, 1, 1});
    for (int i = 0; i < 30; ++i) gt.data[static_cast<std::size_t>(i)] = 1;
    for (int i = 30; i < 40; ++i) gt.data[static_cast<std::size_t>(i)] = 2; // GGO lesions
    LabelVolume pred = labels_of({4, 4, 4}, {1, 1, 1});
    for (int i = 0; i < 35; ++i) pred.data[static_cast<std::size_t>(i)] = 1;

    const std::vector<MetricRecord> recs = evaluate_case(gt, pred, tax, Task::LUNG);
    REQUIRE(recs.size() == 4);
    CHECK(recs[0].eval_class == "LUNG");
    CHECK_FALSE(recs[0].dsc.is_na());
    CHECK(recs[0].sen.is_na());
    CHECK(recs[1].eval_class == "CON");
    CHECK(recs[1].sen.is_na()); // no CON in gt
    CHECK(recs[2].eval_class == "CPP");
    CHECK(recs[3].eval_class == "GGO");
    // GGO voxels 30..39, predicted lung covers 30..34 -> sensitivity 0.5
    CHECK(recs[3].sen.value() == doctest::Approx(0.5));
}

TEST_CASE("evaluate_case multiclass ignores COM voxels") {
    const Taxonomy tax = Taxonomy::defaults();
    // gt: k voxels GGO + 2k voxels COMBINED; pred: GGO over all 3k voxels.
    // With the ignore rule GGO DSC is 1.0; without it would be 0.5.
    const int k = 8;
    LabelVolume gt = labels_of({6, 4, 2}, {1, 1, 1});
    LabelVolume pred = labels_of({6, 4, 2}, {1, 1, 1});
    for (int i = 0; i < k; ++i) gt.data[static_cast<std::size_t>(i)] = 2;
    for (int i = k; i < 3 * k; ++i) gt.data[static_cast<std::size_t>(i)] = 7;
    for (int i = 0; i < 3 * k; ++i) pred.data[static_cast<std::size_t>(i)] = 2;

    const std::vector<MetricRecord> recs = evaluate_case(gt, pred, tax, Task::MULTICLASS);
    const auto& ggo = recs[2];
    REQUIRE(ggo.eval_class == "GGO");
    CHECK(ggo.dsc.value() == doctest::Approx(1.0));

    // without the ignore step the same masks give 2k/(k+3k) = 0.5
    const BinaryMask ggo_pred = tax.project(pred, EvalClass::GGO);
    const BinaryMask ggo_gt = tax.project(gt, EvalClass::GGO);
    CHECK(dice(ggo_pred, ggo_gt).value() == doctest::Approx(0.5));
}

TEST_CASE("evaluate_case with all-COM ground truth") {
    const Taxonomy tax = Taxonomy::defaults();
    LabelVolume gt = labels_of({4, 4, 4}, {1, 1, 1});
    std::fill(gt.data.begin(), gt.data.end(), std::uint8_t{7});
    LabelVolume pred = labels_of({4, 4, 4}, {1, 1, 1});
    for (int i = 0; i < 10; ++i) pred.data[static_cast<std::size_t>(i)] = 2;

    const std::vector<MetricRecord> recs = evaluate_case(gt, pred, tax, Task::MULTICLASS);
    for (const MetricRecord& rec : recs) {
        // every class domain empties out: DSC not applicable everywhere,
        // HD95/ASD finite through the fill rule
        CHECK(rec.dsc.is_na());
        if (rec.eval_class != "MEAN") {
            CHECK_FALSE(rec.hd95.is_na());
            CHECK(rec.hd95.value() >= 0.0);
        }
    }
}

TEST_CASE("evaluate_case equals per-class composition on a synthetic case") {
    const Taxonomy tax = Taxonomy::defaults();
    std::mt19937_64 rng(41);
    LabelVolume gt = labels_of({12, 12, 12}, {1, 1, 2});
    LabelVolume pred = labels_of({12, 12, 12}, {1, 1, 2});
    const std::uint8_t palette[] = {0, 1, 2, 3, 4, 5, 7};
    for (auto& v : gt.data) v = palette[rng() % std::size(palette)];
    for (auto& v : pred.data) v = palette[rng() % std::size(palette)];

    const std::vector<MetricRecord> recs = evaluate_case(gt, pred, tax, Task::MULTICLASS);
    const BinaryMask ignore = tax.ignore_mask(gt);
    auto kept = [&](const LabelVolume& vol, EvalClass cls) {
        BinaryMask m = tax.project(vol, cls);
        for (std::size_t i = 0; i < m.data.size(); ++i)
            if (ignore.data[i]) m.data[i] = 0;
        return m;
    };

    const EvalClass classes[] = {EvalClass::CON, EvalClass::CPP, EvalClass::GGO};
    for (std::size_t c = 0; c < 3; ++c) {
        const BinaryMask pm = kept(pred, classes[c]);
        const BinaryMask gm = kept(gt, classes[c]);
        const MetricValue d = dice(pm, gm);
        const auto [h, a] = hd95_asd(pm, gm);
        CHECK(recs[c].dsc.value() == doctest::Approx(d.value()));
        CHECK(recs[c].hd95.value() == doctest::Approx(h.value()));
        CHECK(recs[c].asd.value() == doctest::Approx(a.value()));
        CHECK(recs[c].avd.value() == doctest::Approx(avd(pm, gm).value()));
    }
    // MEAN row averages the three applicable classes
    const MetricRecord& mean_rec = recs[3];
    REQUIRE(mean_rec.eval_class == "MEAN");
    CHECK(mean_rec.dsc.value() ==
          doctest::Approx((recs[0].dsc.value() + recs[1].dsc.value() + recs[2].dsc.value()) / 3));
}

TEST_CASE("restriction to the kept domain never grows the intersection") {
    const Taxonomy tax = Taxonomy::defaults();
    std::mt19937_64 rng(47);
    LabelVolume gt = labels_of({8, 8, 8}, {1, 1, 1});
    LabelVolume pred = labels_of({8, 8, 8}, {1, 1, 1});
    const std::uint8_t palette[] = {0, 1, 2, 3, 4, 6, 7};
    for (auto& v : gt.data) v = palette[rng() % std::size(palette)];
    for (auto& v : pred.data) v = palette[rng() % std::size(palette)];

    const BinaryMask ignore = tax.ignore_mask(gt);
    for (EvalClass cls : {EvalClass::CON, EvalClass::CPP, EvalClass::GGO}) {
        const BinaryMask pm = tax.project(pred, cls);
        const BinaryMask gm = tax.project(gt, cls);
        std::size_t inter = 0, inter_kept = 0;
        for (std::size_t i = 0; i < pm.data.size(); ++i) {
            const bool both = pm.data[i] && gm.data[i];
            inter += both;
            inter_kept += (both && !ignore.data[i]);
        }
        CHECK(inter_kept <= inter);
    }
}

TEST_CASE("evaluate_case without COM voxels is unaffected by the ignore step") {
    const Taxonomy tax = Taxonomy::defaults();
    std::mt19937_64 rng(43);
    LabelVolume gt = labels_of({8, 8, 8}, {1, 1, 1});
    LabelVolume pred = labels_of({8, 8, 8}, {1, 1, 1});
    const std::uint8_t palette[] = {0, 1, 2, 3, 4}; // no COM members
    for (auto& v : gt.data) v = palette[rng() % std::size(palette)];
    for (auto& v : pred.data) v = palette[rng() % std::size(palette)];

    CHECK(tax.ignore_mask(gt).empty_mask());
    const auto recs = evaluate_case(gt, pred, tax, Task::MULTICLASS);
    // recompute with projections only (no masking): identical values
    for (std::size_t c = 0; c < 3; ++c) {
        const EvalClass cls = (c == 0) ? EvalClass::CON : (c == 1) ? EvalClass::CPP : EvalClass::GGO;
        const MetricValue d = dice(tax.project(pred, cls), tax.project(gt, cls));
        CHECK(recs[c].dsc.value() == doctest::Approx(d.value()));
    }
}
