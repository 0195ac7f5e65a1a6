#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <set>

#include "urnlab/estimators.hpp"
#include "urnlab/models.hpp"
#include "urnlab/moments.hpp"
#include "urnlab/rng.hpp"
#include "urnlab/sampler.hpp"

using namespace urnlab;

namespace {

OccupancyProfile binom_profile(std::vector<std::pair<uint64_t, uint64_t>> counts) {
    OccupancyProfile p;
    p.setting = Setting::binomial;
    p.counts = std::move(counts);
    for (const auto& [sym, c] : p.counts) p.n += c;
    return p;
}

OccupancyProfile poisson_profile(std::vector<std::pair<uint64_t, uint64_t>> counts,
                                 double t) {
    OccupancyProfile p = binom_profile(std::move(counts));
    p.setting = Setting::poisson;
    p.t = t;
    return p;
}

} // namespace

TEST_CASE("good-Turing masses from hand-built profiles") {
    // 3 singletons among 10 draws
    auto p = binom_profile({{1, 1}, {2, 1}, {3, 1}, {4, 7}});
    CHECK(good_turing(p, 0) == doctest::Approx(0.3).epsilon(1e-15));

    // 2 doubletons among 10 draws
    auto q = binom_profile({{1, 2}, {2, 2}, {3, 6}});
    CHECK(good_turing(q, 1) == doctest::Approx(0.4).epsilon(1e-15));

    auto mixed = binom_profile({{3, 1}, {7, 1}, {9, 2}, {12, 5}});
    CHECK(mixed.n == 9);
    CHECK(good_turing(mixed, 0) == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
    CHECK(good_turing(mixed, 1) == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
    CHECK(good_turing(mixed, 2) == 0.0);
    CHECK(good_turing(mixed, 4) == doctest::Approx(5.0 / 9.0).epsilon(1e-15));

    // the masses over all occupancy levels tile the sample exactly
    double total = 0.0;
    for (uint64_t r = 0; r < mixed.n; ++r) total += good_turing(mixed, r);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));

    // poisson setting divides by the intensity, not the realized draw count
    auto pois = poisson_profile({{3, 1}, {7, 1}, {9, 2}, {12, 5}}, 12.5);
    CHECK(good_turing(pois, 0) == doctest::Approx(2.0 / 12.5).epsilon(1e-15));

    OccupancyProfile empty;
    CHECK_THROWS_AS(good_turing(empty, 0), std::invalid_argument);
}

TEST_CASE("good-Turing masses stay in [0,1] on sampled profiles") {
    auto model = parse_model("zipf:s=1.5");
    SamplerTable table(model);
    SampleWorkspace ws(table);
    xoshiro256pp rng(derive_seed(2024, 7));
    for (int rep = 0; rep < 50; ++rep) {
        ws.reset();
        ws.run_draws(table, 500, rng);
        auto prof = ws.to_profile(Setting::binomial, 0.0);
        for (uint64_t r = 0; r <= 5; ++r) {
            double g = good_turing(prof, r);
            CHECK(g >= 0.0);
            CHECK(g <= 1.0);
        }
    }
}

TEST_CASE("poisson confidence interval endpoints and clipping") {
    // K = 50, K1 = 30, K2 = 10 at t = 100
    auto prof = [] {
        std::vector<std::pair<uint64_t, uint64_t>> counts;
        uint64_t sym = 1;
        for (int i = 0; i < 30; ++i) counts.push_back({sym++, 1});
        for (int i = 0; i < 10; ++i) counts.push_back({sym++, 2});
        for (int i = 0; i < 10; ++i) counts.push_back({sym++, 3});
        return poisson_profile(std::move(counts), 100.0);
    }();
    CHECK(prof.distinct() == 50);
    CHECK(prof.count_r(1) == 30);
    CHECK(prof.count_r(2) == 10);

    auto est = gt_ci_poisson(prof, 0.05);
    CHECK(est.point == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(est.delta == 0.05);
    CHECK(est.coverage_target == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(est.upper - est.point == doctest::Approx(0.44957315141183419).epsilon(1e-13));
    CHECK(est.upper == doctest::Approx(0.74957315141183419).epsilon(1e-13));
    CHECK(est.lower == doctest::Approx(0.0070888707976118264).epsilon(1e-10));
    CHECK_FALSE(est.clipped);

    // radii grow monotonically as delta shrinks
    double prev_width = 0.0;
    for (double d : {0.2, 0.1, 0.05, 0.01, 0.001}) {
        auto e = gt_ci_poisson(prof, d);
        double width = e.upper - e.lower;
        CHECK(width > prev_width * 0.999);
        prev_width = width;
    }

    // a lone singleton at modest intensity pushes both walls
    auto lone = poisson_profile({{1, 1}}, 20.0);
    auto clipped = gt_ci_poisson(lone, 0.05);
    CHECK(clipped.upper == 1.0);
    CHECK(clipped.lower == 0.0);
    CHECK(clipped.clipped);

    CHECK_THROWS_AS(gt_ci_poisson(prof, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(gt_ci_poisson(prof, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(gt_ci_poisson(prof, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gt_ci_poisson(prof, -0.1), std::invalid_argument);
    auto binom = binom_profile({{1, 1}, {2, 2}});
    CHECK_THROWS_AS(gt_ci_poisson(binom, 0.05), std::invalid_argument);
}

TEST_CASE("alpha-hat occupancy ratios") {
    // 5 singletons out of 10 distinct
    auto p = [] {
        std::vector<std::pair<uint64_t, uint64_t>> counts;
        uint64_t sym = 1;
        for (int i = 0; i < 5; ++i) counts.push_back({sym++, 1});
        for (int i = 0; i < 5; ++i) counts.push_back({sym++, 2});
        return binom_profile(std::move(counts));
    }();
    auto a1 = alpha_hat(p, 1);
    REQUIRE(a1.has_value());
    CHECK(*a1 == doctest::Approx(0.5).epsilon(1e-15));

    // K2 = 3 among K_{2bar} = 6
    auto q = [] {
        std::vector<std::pair<uint64_t, uint64_t>> counts;
        uint64_t sym = 1;
        for (int i = 0; i < 2; ++i) counts.push_back({sym++, 1});
        for (int i = 0; i < 3; ++i) counts.push_back({sym++, 2});
        for (int i = 0; i < 3; ++i) counts.push_back({sym++, 3});
        return binom_profile(std::move(counts));
    }();
    auto a2 = alpha_hat(q, 2);
    REQUIRE(a2.has_value());
    CHECK(*a2 == doctest::Approx(1.0).epsilon(1e-15));

    // r K_r <= r K_{rbar} pins the ratio into [0, r]
    for (uint64_t r = 1; r <= 4; ++r) {
        auto a = alpha_hat(q, r);
        if (!a) continue;
        CHECK(*a >= 0.0);
        CHECK(*a <= double(r));
    }

    CHECK_FALSE(alpha_hat(q, 4).has_value());
    CHECK_THROWS_AS(alpha_hat(q, 0), std::invalid_argument);
}

TEST_CASE("species growth forecasts") {
    auto p = [] {
        std::vector<std::pair<uint64_t, uint64_t>> counts;
        uint64_t sym = 1;
        for (int i = 0; i < 100; ++i) counts.push_back({sym++, 1});
        for (int i = 0; i < 10; ++i) counts.push_back({sym++, 2});
        for (int i = 0; i < 5; ++i) counts.push_back({sym++, 4});
        return binom_profile(std::move(counts));
    }();
    CHECK(p.distinct() == 115);

    // doubling with alpha = 1/2: (sqrt(2)-1)/0.5 * K_1
    CHECK(species_estimate(p, 2.0, 0.5, 1, GrowthRegime::power) ==
          doctest::Approx(82.84271247461901).epsilon(1e-14));
    // distinct-count form
    CHECK(species_estimate(p, 2.0, 0.5, 0, GrowthRegime::power) ==
          doctest::Approx((std::sqrt(2.0) - 1.0) * 115).epsilon(1e-14));
    // r = 2 brings in the product factor 2/(1 - alpha) = 4
    CHECK(species_estimate(p, 2.0, 0.5, 2, GrowthRegime::power) ==
          doctest::Approx(33.137084989847604).epsilon(1e-14));

    // alpha = 1 keeps the K_n and K_1 forms but the product form is singular
    CHECK(species_estimate(p, 2.0, 1.0, 0, GrowthRegime::power) ==
          doctest::Approx(115.0).epsilon(1e-15));
    CHECK(species_estimate(p, 2.0, 1.0, 1, GrowthRegime::power) ==
          doctest::Approx(100.0).epsilon(1e-15));
    CHECK_THROWS_AS(species_estimate(p, 2.0, 1.0, 2, GrowthRegime::power),
                    std::domain_error);

    // slow-variation forecast: log(tau) r K_r
    CHECK(species_estimate(p, 2.0, 0.0, 2, GrowthRegime::slow) ==
          doctest::Approx(13.862943611198906).epsilon(1e-14));
    CHECK_THROWS_AS(species_estimate(p, 2.0, 0.0, 0, GrowthRegime::slow),
                    std::invalid_argument);

    CHECK(species_estimate(p, 1.0, 0.5, 1, GrowthRegime::power) == 0.0);
    CHECK_THROWS_AS(species_estimate(p, 0.5, 0.5, 1, GrowthRegime::power),
                    std::invalid_argument);
    CHECK_THROWS_AS(species_estimate(p, 2.0, 0.0, 1, GrowthRegime::power),
                    std::domain_error);
    CHECK_THROWS_AS(species_estimate(p, 2.0, 1.5, 1, GrowthRegime::power),
                    std::domain_error);
    CHECK_THROWS_AS(species_estimate(p, 2.0, -0.5, 1, GrowthRegime::power),
                    std::domain_error);
}

TEST_CASE("gt/mm covariance entries against closed forms") {
    // uniform(2) at t = 2: E K1(2) = 2/e, E K2(2) = 1/e, E K2(4) = 4/e^2
    auto rep = build_moment_report(*make_uniform(2), Setting::poisson, 2.0, 3, 1e-9);
    auto c = gt_mm_covariance_poisson(rep);
    CHECK(c.var_gt == doctest::Approx(0.11627207896741481).epsilon(1e-12));
    CHECK(c.var_mm == doctest::Approx(0.11627207896741481).epsilon(1e-12));
    CHECK(c.cov == doctest::Approx(-0.067667641618306346).epsilon(1e-12));
    CHECK(c.var_gap == doctest::Approx(0.36787944117144232).epsilon(1e-12));

    // assembling the quadratic form reproduces var(G0 - M0) identically
    CHECK(c.var_gap == doctest::Approx(c.var_gt + c.var_mm - 2.0 * c.cov).epsilon(1e-15));
    // a genuine covariance matrix is positive semidefinite
    CHECK(c.var_gt * c.var_mm - c.cov * c.cov >= 0.0);

    // var_mm must agree with the direct missing-mass variance
    auto direct = variance_missing_mass_poisson(*make_uniform(2), 2.0, 1e-11);
    CHECK(c.var_mm == doctest::Approx(direct.value).epsilon(1e-11));

    auto zrep = build_moment_report(*parse_model("zipf:s=2"), Setting::poisson, 100.0, 3, 1e-9);
    auto zc = gt_mm_covariance_poisson(zrep);
    auto zdirect = variance_missing_mass_poisson(*parse_model("zipf:s=2"), 100.0, 1e-11);
    CHECK(zc.var_mm == doctest::Approx(zdirect.value).epsilon(1e-10));
    CHECK(zc.var_gt > 0.0);
    CHECK(zc.cov < 0.0);
    CHECK(zc.var_gt * zc.var_mm - zc.cov * zc.cov >= 0.0);

    // entries wash out as the intensity grows
    auto big = build_moment_report(*parse_model("zipf:s=2"), Setting::poisson, 1e6, 3, 1e-9);
    auto bc = gt_mm_covariance_poisson(big);
    CHECK(std::fabs(bc.var_gt) < 1e-8);
    CHECK(std::fabs(bc.var_mm) < 1e-8);
    CHECK(std::fabs(bc.cov) < 1e-8);
    CHECK(std::fabs(bc.var_gap) < 1e-8);

    auto brep = build_moment_report(*make_uniform(2), Setting::binomial, 8, 3, 1e-9);
    CHECK_THROWS_AS(gt_mm_covariance_poisson(brep), std::invalid_argument);
}

TEST_CASE("clt normalizer") {
    auto rep = build_moment_report(*make_uniform(2), Setting::poisson, 2.0, 2, 1e-9);
    // 2/e over sqrt(4/e) = e^{-1/2}
    CHECK(clt_normalizer(rep) == doctest::Approx(0.60653065971263342).epsilon(1e-12));

    auto big = build_moment_report(*parse_model("zipf:s=2"), Setting::poisson, 1e6, 2, 1e-9);
    CHECK(clt_normalizer(big) == doctest::Approx(21.4629649853365).epsilon(1e-9));

    // doubleton term absent: reduces to sqrt(E K1)
    MomentReport synth;
    synth.setting = Setting::poisson;
    synth.nt = 1.0;
    synth.rmax = 2;
    synth.count_r = {{0.0, 0.0}, {4.0, 0.0}, {0.0, 0.0}};
    CHECK(clt_normalizer(synth) == doctest::Approx(2.0).epsilon(1e-15));

    synth.count_r = {{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(clt_normalizer(synth), std::domain_error);
}

TEST_CASE("inputs digest is stable and input-sensitive") {
    auto p = poisson_profile({{1, 1}, {5, 2}, {9, 3}}, 25.0);
    auto d1 = inputs_digest(p, "delta=0.05");
    CHECK(d1.size() == 16);
    CHECK(d1.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(inputs_digest(p, "delta=0.05") == d1);

    std::set<std::string> seen{d1};
    CHECK(seen.insert(inputs_digest(p, "delta=0.1")).second);

    auto q = p;
    q.counts[1].second = 4;
    CHECK(seen.insert(inputs_digest(q, "delta=0.05")).second);

    auto b = p;
    b.setting = Setting::binomial;
    b.t = 0.0;
    CHECK(seen.insert(inputs_digest(b, "delta=0.05")).second);

    auto s = p;
    s.t = 26.0;
    CHECK(seen.insert(inputs_digest(s, "delta=0.05")).second);
}
