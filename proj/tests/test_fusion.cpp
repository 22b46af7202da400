#include "chainfuse/chains.hpp"
#include "chainfuse/correlation.hpp"
#include "chainfuse/fusion.hpp"
#include "chainfuse/rng.hpp"
#include "synthetic.hpp"
#include "worked_examples.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace chainfuse;
using namespace chainfuse::testing;

namespace {

DecisionProfile random_profile(std::size_t c, std::size_t m, Rng& rng) {
    std::vector<double> s(c * m);
    for (auto& v : s) v = rng.uniform();
    return DecisionProfile(c, m, std::move(s));
}

std::vector<DecisionProfile> random_profiles(std::size_t n, std::size_t c, std::size_t m, Rng& rng) {
    std::vector<DecisionProfile> out;
    for (std::size_t r = 0; r < n; ++r) out.push_back(random_profile(c, m, rng));
    return out;
}

DecisionProfile permute_members(const DecisionProfile& dp, const std::vector<std::size_t>& perm) {
    DecisionProfile out(dp.members(), dp.labels());
    for (std::size_t i = 0; i < dp.members(); ++i)
        for (std::size_t j = 0; j < dp.labels(); ++j) out.set_support(i, j, dp.support(perm[i], j));
    return out;
}

}  // namespace

TEST_CASE("majority voting worked example") {
    const auto dp = image_votes_profile();
    CHECK(fuse_mv(dp, 0.5) == kImageVotesFused);
    CHECK(make_mv(0.5).fuse(dp) == kImageVotesFused);
}

TEST_CASE("mean ensemble worked example") {
    const auto dp = image_supports_profile();
    CHECK(fuse_me(dp, 0.5) == kImageSupportsFused);
    CHECK(make_me(0.5).fuse(dp) == kImageSupportsFused);
}

TEST_CASE("decision template similarity worked example") {
    const auto dp = mountain_profile();
    const auto pair = mountain_templates();
    const auto slice = profile_slice(dp, pair.selected);
    const double mu_pos = similarity(slice, pair.dt_pos);
    const double mu_neg = similarity(slice, pair.dt_neg);
    CHECK(std::abs(mu_pos - kMountainMuPos) <= 1e-12);
    CHECK(std::abs(mu_neg - kMountainMuNeg) <= 1e-12);
    CHECK(fuse_dt_label(dp, pair) == 1);
}

TEST_CASE("fusion threshold is validated") {
    const auto dp = image_supports_profile();
    CHECK_THROWS_AS(fuse_mv(dp, 0.0), Error);
    CHECK_THROWS_AS(fuse_me(dp, 1.5), Error);
    CHECK_NOTHROW(fuse_mv(dp, 1.0));
}

TEST_CASE("fit_dt examples") {
    // Two rows, one member, two labels.
    std::vector<DecisionProfile> profiles{DecisionProfile(1, 2, {0.9, 0.2}), DecisionProfile(1, 2, {0.3, 0.6})};
    LabelMatrix y(2, 2, {1, 0, 0, 1});
    const auto t = fit_dt(profiles, y);
    REQUIRE(t.size() == 2);
    CHECK(t[0].selected == std::vector<std::size_t>{0});
    CHECK(t[0].dt_pos == std::vector<double>{0.9});
    CHECK(t[0].dt_neg == std::vector<double>{0.3});
    CHECK(t[1].dt_pos == std::vector<double>{0.6});
    CHECK(t[1].dt_neg == std::vector<double>{0.2});
    CHECK(fuse_dt(DecisionProfile(1, 2, {0.8, 0.5}), t) == LabelVector{1, 1});
    CHECK(fuse_dt(DecisionProfile(1, 2, {0.4, 0.3}), t) == LabelVector{0, 0});
}

TEST_CASE("equidistant profile rejects the label") {
    DecisionTemplatePair pair;
    pair.label = 0;
    pair.selected = {0};
    pair.members = 1;
    pair.dt_pos = {0.8};
    pair.dt_neg = {0.2};
    pair.pos_count = pair.neg_count = 3;
    CHECK(fuse_dt_label(DecisionProfile(1, 1, {0.5}), pair) == 0);
    CHECK(fuse_dt_label(DecisionProfile(1, 1, {0.51}), pair) == 1);
}

TEST_CASE("degenerate class falls back to mean support") {
    std::vector<DecisionProfile> profiles{DecisionProfile(2, 1, {0.9, 0.7}), DecisionProfile(2, 1, {0.1, 0.2})};
    LabelMatrix all_pos(2, 1, {1, 1});
    const auto t = fit_dt(profiles, all_pos);
    CHECK(t[0].degenerate());
    CHECK(t[0].dt_neg == std::vector<double>{0.5, 0.5});
    CHECK(fuse_dt(DecisionProfile(2, 1, {0.6, 0.4}), t) == LabelVector{1});
    CHECK(fuse_dt(DecisionProfile(2, 1, {0.6, 0.3}), t) == LabelVector{0});
}

TEST_CASE("template fitting errors") {
    std::vector<DecisionProfile> profiles{DecisionProfile(1, 2, {0.9, 0.2})};
    LabelMatrix y(1, 2, {1, 0});
    CHECK_THROWS_AS(fit_templates(profiles, y, {{1}, {1}}), Error);
    CHECK_THROWS_AS(fit_templates(profiles, y, {{0, 5}, {1}}), Error);
    CHECK_THROWS_AS(fit_dt(std::span<const DecisionProfile>{}, LabelMatrix(0, 2)), Error);
    CHECK_THROWS_AS(similarity(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("oracle: masked-mean templates on 200 random instances") {
    Rng rng(300);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 20, c = 5, m = 8;
        const auto profiles = random_profiles(n, c, m, rng);
        const auto y = random_labels(n, m, 0.4, rng);
        const auto pm = phi_matrix(y);
        const double phi_t = rng.uniform();
        const auto templates = fit_uddt(profiles, y, pm, phi_t);
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<std::size_t> sel;
            for (std::size_t k = 0; k < m; ++k)
                if (k == j || std::abs(pm(j, k)) >= phi_t) sel.push_back(k);
            CHECK(templates[j].selected == sel);
            for (int cls = 0; cls < 2; ++cls) {
                const auto& got = cls == 1 ? templates[j].dt_pos : templates[j].dt_neg;
                for (std::size_t i = 0; i < c; ++i) {
                    for (std::size_t k = 0; k < sel.size(); ++k) {
                        double sum = 0.0, count = 0.0;
                        for (std::size_t r = 0; r < n; ++r) {
                            if (y(r, j) != cls) continue;
                            sum += profiles[r].support(i, sel[k]);
                            count += 1.0;
                        }
                        const double expect = count == 0.0 ? 0.5 : sum / count;
                        CHECK(std::abs(got[i * sel.size() + k] - expect) <= 1e-12);
                    }
                }
            }
        }
    }
}

TEST_CASE("property: similarity is at most one and equals one only for identical inputs") {
    Rng rng(301);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t len = 1 + rng.uniform_index(30);
        std::vector<double> a(len), b(len);
        for (auto& v : a) v = rng.uniform();
        for (auto& v : b) v = rng.uniform();
        CHECK(similarity(a, b) <= 1.0);
        CHECK(similarity(a, a) == 1.0);
        if (a != b) CHECK(similarity(a, b) < 1.0);
        CHECK(similarity(a, b) == similarity(b, a));
    }
}

TEST_CASE("property: UDDT above the largest correlation equals DT") {
    Rng rng(302);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 30, c = 4, m = 6;
        const auto profiles = random_profiles(n, c, m, rng);
        const auto y = random_labels(n, m, 0.4, rng);
        const auto pm = phi_matrix(y);
        const double top = pm.max_off_diagonal();
        if (top >= 1.0) continue;
        const double phi_t = std::min(1.0, top + 1e-6 + (1.0 - top) * rng.uniform());
        const auto dt = fit_dt(profiles, y);
        CHECK(fit_uddt(profiles, y, pm, phi_t) == dt);
        const auto probe = random_profile(c, m, rng);
        CHECK(fuse_dt(probe, fit_uddt(profiles, y, pm, phi_t)) == fuse_dt(probe, dt));
    }
}

TEST_CASE("property: dependent-label sets shrink as phi_t grows") {
    Rng rng(303);
    for (int trial = 0; trial < 100; ++trial) {
        const auto profiles = random_profiles(25, 3, 6, rng);
        const auto y = random_labels(25, 6, 0.4, rng);
        const auto pm = phi_matrix(y);
        std::vector<std::size_t> previous(6, 7);
        for (double phi_t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const auto t = fit_uddt(profiles, y, pm, phi_t);
            for (std::size_t j = 0; j < 6; ++j) {
                CHECK(t[j].selected.size() <= previous[j]);
                CHECK(t[j].dt_pos.size() == 3 * t[j].selected.size());
                previous[j] = t[j].selected.size();
            }
        }
    }
}

TEST_CASE("property: voting and averaging ignore member order") {
    Rng rng(304);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t c = 1 + rng.uniform_index(12), m = 1 + rng.uniform_index(8);
        const auto dp = random_profile(c, m, rng);
        const auto perm = random_permutation(c, rng);
        const auto pdp = permute_members(dp, perm);
        const double t = 0.05 + 0.95 * rng.uniform();
        CHECK(fuse_mv(dp, t) == fuse_mv(pdp, t));
        // Averages of permuted sums may differ in the last bit; compare away from the boundary.
        bool near = false;
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < c; ++i) s += dp.support(i, j);
            near = near || std::abs(s / static_cast<double>(c) - t) < 1e-9;
        }
        if (!near) CHECK(fuse_me(dp, t) == fuse_me(pdp, t));
    }
}

TEST_CASE("property: profile flattening round trips") {
    Rng rng(305);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t c = 1 + rng.uniform_index(10), m = 1 + rng.uniform_index(10);
        const auto dp = random_profile(c, m, rng);
        const auto& flat = dp.flatten();
        CHECK(flat.size() == c * m);
        CHECK(DecisionProfile::unflatten(c, m, flat) == dp);
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < m; ++j) CHECK(flat[i * m + j] == dp.support(i, j));
    }
}

TEST_CASE("stacking meta dataset has c*m features") {
    Rng rng(306);
    const auto profiles = random_profiles(10, 50, 6, rng);
    const auto y = random_labels(10, 6, 0.5, rng);
    const auto meta = stack_meta_dataset(profiles, y);
    CHECK(meta.num_features() == 300);
    CHECK(meta.num_labels() == 6);
    CHECK(meta.features()[7].name == "member1_label1");
    for (std::size_t r = 0; r < 10; ++r)
        for (std::size_t k = 0; k < 300; ++k) CHECK(meta.row(r)[k] == profiles[r].flatten()[k]);
}

TEST_CASE("stacking on a single perfect member recovers the labels") {
    SyntheticShape s;
    s.n = 200;
    const auto ds = make_synthetic(s, 12);
    std::vector<DecisionProfile> profiles;
    Rng rng(13);
    for (std::size_t r = 0; r < ds.size(); ++r) {
        DecisionProfile dp(1, ds.num_labels());
        for (std::size_t j = 0; j < ds.num_labels(); ++j)
            dp.set_support(0, j, ds.label(r, j) ? 0.7 + 0.3 * rng.uniform() : 0.3 * rng.uniform());
        profiles.push_back(dp);
    }
    const auto model = fit_stack(profiles, ds.labels(), 5);
    std::size_t exact = 0;
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const auto out = fuse_stack(model, profiles[r]);
        bool ok = true;
        for (std::size_t j = 0; j < ds.num_labels(); ++j) ok = ok && out[j] == ds.label(r, j);
        exact += ok;
    }
    CHECK(static_cast<double>(exact) / static_cast<double>(ds.size()) > 0.9);
    CHECK(fit_stack(profiles, ds.labels(), 5) == model);
    CHECK_THROWS_AS(fuse_stack(model, DecisionProfile(2, ds.num_labels())), Error);
}

TEST_CASE("fusion models over a trained ensemble") {
    const auto ds = make_synthetic(SyntheticShape{}, 14);
    const auto ens = train_ecc(ds, 5, 15);
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto profiles = decision_profiles(ens, ds, rows);
    const auto dt = fit_dt(profiles, ds.labels());
    FusionModel model;
    model.scheme = FusionScheme::dt;
    model.templates = dt;
    for (std::size_t r = 0; r < ds.size(); r += 11) {
        const auto out = model.fuse(profiles[r]);
        CHECK(out == fuse_dt(profiles[r], dt));
        CHECK(out.size() == ds.num_labels());
    }
    FusionModel broken;
    broken.scheme = FusionScheme::stack;
    CHECK_THROWS_AS(broken.fuse(profiles[0]), Error);
    CHECK(std::string(to_string(FusionScheme::uddt)) == "uddt");
}
