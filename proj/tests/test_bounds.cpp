#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "urnlab/bounds.hpp"
#include "urnlab/models.hpp"
#include "urnlab/moments.hpp"
#include "urnlab/numerics.hpp"

using namespace urnlab;

namespace {

constexpr double kEps = 1e-9;

// every outcome of n draws with its probability and the statistics the bounds
// certify
struct Outcome {
    double w;
    double m0;
    double kbar1;
    double kbar2;
};

void outcomes_rec(const std::vector<double>& p, int left, std::vector<int>& cnt,
                  double w, std::vector<Outcome>& out) {
    if (left == 0) {
        Outcome o{w, 0.0, 0.0, 0.0};
        for (size_t j = 0; j < p.size(); ++j) {
            if (cnt[j] == 0) o.m0 += p[j];
            if (cnt[j] >= 1) o.kbar1 += 1.0;
            if (cnt[j] >= 2) o.kbar2 += 1.0;
        }
        out.push_back(o);
        return;
    }
    for (size_t j = 0; j < p.size(); ++j) {
        ++cnt[j];
        outcomes_rec(p, left - 1, cnt, w * p[j], out);
        --cnt[j];
    }
}

std::vector<Outcome> all_outcomes(const std::vector<double>& p, int n) {
    std::vector<Outcome> out;
    std::vector<int> cnt(p.size(), 0);
    outcomes_rec(p, n, cnt, 1.0, out);
    return out;
}

double exact_centered_log_mgf(const std::vector<Outcome>& outs, double lambda,
                              double Outcome::*field) {
    double mean = 0.0;
    for (const auto& o : outs) mean += o.w * o.*field;
    double acc = 0.0;
    for (const auto& o : outs) acc += o.w * std::exp(lambda * (o.*field - mean));
    return std::log(acc);
}

// Poisson-setting log E exp(lambda (G0 - M0)); the summands are independent,
// so the transform is an explicit product
double gt_gap_log_mgf(const std::vector<double>& p, double t, double lambda) {
    double acc = 0.0;
    for (double pj : p) {
        double p0 = std::exp(-t * pj);
        double p1 = t * pj * p0;
        acc += std::log(p0 * std::exp(-lambda * pj) + p1 * std::exp(lambda / t) +
                        (1.0 - p0 - p1));
    }
    return acc;
}

} // namespace

TEST_CASE("tail radius formulas") {
    BoundSpec g;
    g.kind = BoundKind::sub_gamma;
    g.v = 0.01;
    g.c = 0.1;
    CHECK(g.radius(2.0) == doctest::Approx(0.4).epsilon(1e-13));
    CHECK(g.radius(0.0) == 0.0);

    BoundSpec sg;
    sg.kind = BoundKind::sub_gaussian;
    sg.v = 1.0;
    CHECK(sg.radius(2.0) == doctest::Approx(2.0).epsilon(1e-13));

    BoundSpec sp;
    sp.kind = BoundKind::sub_poisson;
    sp.v = 1.0;
    CHECK(sp.radius(1.0) == doctest::Approx(std::sqrt(2.0) + 1.0 / 3.0).epsilon(1e-13));

    BoundSpec ph;
    ph.kind = BoundKind::scaled_phi;
    ph.v_phi = 4.0;
    ph.c = 0.25;
    CHECK(ph.radius(1.0) ==
          doctest::Approx(0.25 * (std::sqrt(8.0) + 1.0 / 3.0)).epsilon(1e-13));

    BoundSpec ct;
    ct.kind = BoundKind::count_two_sided;
    ct.v = 2.0;
    CHECK(ct.radius(3.0) == doctest::Approx(std::sqrt(24.0) + 2.0).epsilon(1e-13));

    // increasing in s
    for (double s = 0.0; s < 5.0; s += 0.25) {
        CHECK(g.radius(s + 0.25) > g.radius(s));
        CHECK(ct.radius(s + 0.25) > ct.radius(s));
    }
    CHECK_THROWS_AS((void)g.radius(-1.0), std::domain_error);
}

TEST_CASE("log-MGF curves are zero at zero, convex, and fenced") {
    std::vector<BoundSpec> specs(5);
    specs[0].kind = BoundKind::sub_gaussian;
    specs[0].v = 0.7;
    specs[1].kind = BoundKind::sub_poisson;
    specs[1].v = 1.3;
    specs[2].kind = BoundKind::sub_gamma;
    specs[2].v = 0.5;
    specs[2].c = 0.2;
    specs[3].kind = BoundKind::scaled_phi;
    specs[3].v_phi = 2.0;
    specs[3].c = 0.5;
    specs[4].kind = BoundKind::count_two_sided;
    specs[4].v = 0.9;
    for (const auto& b : specs) {
        CHECK(b.log_mgf_bound(0.0) == 0.0);
        double prev2 = 0.0, prev1 = 0.0;
        bool seeded = false;
        for (double l = 0.0; l <= 1.2; l += 0.05) {
            if (!b.valid_lambda(l)) break;
            double cur = b.log_mgf_bound(l);
            CHECK(cur >= 0.0);
            if (seeded) CHECK(cur - 2.0 * prev1 + prev2 >= -1e-12);
            prev2 = prev1;
            prev1 = cur;
            seeded = true;
        }
    }
    CHECK_THROWS_AS((void)specs[2].log_mgf_bound(5.1), std::domain_error);
    CHECK_THROWS_AS((void)specs[4].log_mgf_bound(1.5), std::domain_error);
    CHECK(specs[1].valid_lambda(-3.0));
    CHECK(!specs[0].valid_lambda(-0.1));
}

TEST_CASE("count bound on the two-symbol urn") {
    auto m = make_uniform(2);
    auto rep = build_moment_report(*m, Setting::binomial, 2.0, 4, kEps);
    auto b = knr_bound(rep, 1);
    CHECK(b.v == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(b.multiplier == 4.0);
    CHECK(b.kind == BoundKind::count_two_sided);
    CHECK(b.quantity == "count-r1");
    CHECK(b.radius(1.0) == doctest::Approx(std::sqrt(8.0) + 2.0 / 3.0).epsilon(1e-8));
    CHECK_THROWS_AS((void)knr_bound(rep, 4), std::invalid_argument);
    CHECK_THROWS_AS((void)knr_bound(rep, 0), std::invalid_argument);

    auto bb = knrbar_bound(rep, 1);
    CHECK(bb.v == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(bb.log_mgf_bound(1.0) == doctest::Approx(0.71828182845904524).epsilon(1e-9));
    CHECK(bb.log_mgf_bound(-1.0) == doctest::Approx(0.36787944117144232).epsilon(1e-9));
    CHECK(bb.log_mgf_bound(0.0) == 0.0);
}

TEST_CASE("cumulated-count Bennett dominates the exhaustive transform") {
    std::vector<double> p(3, 1.0 / 3.0);
    auto m = make_uniform(3);
    auto rep = build_moment_report(*m, Setting::binomial, 3.0, 4, kEps);
    auto outs = all_outcomes(p, 3);
    for (uint64_t r : {1ull, 2ull}) {
        auto b = knrbar_bound(rep, r);
        double Outcome::*field = r == 1 ? &Outcome::kbar1 : &Outcome::kbar2;
        for (double l : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0}) {
            double exact = exact_centered_log_mgf(outs, l, field);
            CHECK(exact <= b.log_mgf_bound(l) + 1e-12);
        }
    }
}

TEST_CASE("missing-mass certificates dominate exhaustive transforms") {
    struct Grid {
        std::vector<double> p;
        ModelPtr m;
        int n;
    };
    std::vector<Grid> grid;
    grid.push_back({{0.5, 0.5}, make_uniform(2), 2});
    grid.push_back({{0.25, 0.25, 0.25, 0.25}, make_uniform(4), 4});
    grid.push_back({{0.55, 0.25, 0.15, 0.05}, make_explicit({0.55, 0.25, 0.15, 0.05}), 2});
    grid.push_back({{0.55, 0.25, 0.15, 0.05}, make_explicit({0.55, 0.25, 0.15, 0.05}), 4});
    for (const auto& g : grid) {
        CAPTURE(g.n);
        auto vr = build_variance_report(*g.m, g.n, kEps);
        auto specs = missing_mass_bounds(vr);
        REQUIRE(specs.size() == 2);
        auto outs = all_outcomes(g.p, g.n);
        for (double l : {0.5, 1.0, 2.0}) {
            // left: transform of the downward deviation
            double exact_left = exact_centered_log_mgf(outs, -l, &Outcome::m0);
            CHECK(exact_left <= specs[0].log_mgf_bound(l) + 1e-12);
            // right: sub-gamma with scale 1/n
            if (specs[1].valid_lambda(l)) {
                double exact_right = exact_centered_log_mgf(outs, l, &Outcome::m0);
                CHECK(exact_right <= specs[1].log_mgf_bound(l) + 1e-12);
            }
        }
    }
}

TEST_CASE("missing-mass bound structure tracks the variance report") {
    auto z = parse_model("zipf:s=2");
    auto vr = build_variance_report(*z, 100.0, kEps);
    auto specs = missing_mass_bounds(vr);
    REQUIRE(specs.size() == 2);
    CHECK(specs[0].side == BoundSide::left);
    CHECK(specs[0].kind == BoundKind::sub_gaussian);
    CHECK(specs[0].v == doctest::Approx(3.4547314501386756e-4).epsilon(1e-8));
    CHECK(specs[1].side == BoundSide::right);
    CHECK(specs[1].kind == BoundKind::sub_gamma);
    CHECK(specs[1].v == doctest::Approx(1.2819874526161449e-3).epsilon(1e-7));
    CHECK(specs[1].c == doctest::Approx(0.01).epsilon(1e-13));

    auto s = parse_model("sqrtgeom:q=0.5");
    auto vrs = build_variance_report(*s, 100.0, kEps);
    auto sp = missing_mass_bounds(vrs);
    REQUIRE(sp.size() == 3);
    CHECK(sp[2].ref == "missing-mass-right-dehaan");
    const RvMeta* meta = s->rv_meta();
    REQUIRE(meta != nullptr);
    CHECK(sp[2].v == doctest::Approx(12.0 * meta->aux_a(100.0) / 1e4).epsilon(1e-9));

    // single-symbol urn: v_minus dies exponentially, v_plus like 2/n^2, so
    // both radii shrink toward zero as n grows
    auto u1 = make_uniform(1);
    auto vr1 = build_variance_report(*u1, 50.0, kEps);
    auto sp1 = missing_mass_bounds(vr1);
    CHECK(sp1[0].radius(1.0) < 1e-6);
    CHECK(sp1[1].radius(1.0) == doctest::Approx(3.0 / 50.0).epsilon(1e-3));
    auto vr1b = build_variance_report(*u1, 5000.0, kEps);
    auto sp1b = missing_mass_bounds(vr1b);
    CHECK(sp1b[1].radius(1.0) < sp1[1].radius(1.0));
    CHECK(sp1b[1].radius(1.0) == doctest::Approx(3.0 / 5000.0).epsilon(1e-3));
}

TEST_CASE("log-Laplace series for the missing mass") {
    auto m = make_uniform(3);
    CHECK(missing_mass_log_laplace_series(*m, 3.0, 0.0, kEps).value == 0.0);
    CHECK_THROWS_AS(
        (void)missing_mass_log_laplace_series(*m, 3.0, 3.0, kEps), std::domain_error);
    CHECK_THROWS_AS(
        (void)missing_mass_log_laplace_series(*m, 3.0, -1.0, kEps), std::domain_error);

    // dominates the exhaustive transform on 27 outcomes
    std::vector<double> p(3, 1.0 / 3.0);
    auto outs = all_outcomes(p, 3);
    auto series = missing_mass_log_laplace_series(*m, 3.0, 1.0, kEps);
    double exact = exact_centered_log_mgf(outs, 1.0, &Outcome::m0);
    CHECK(exact <= series.value + series.error + 1e-12);

    // per-symbol closed form on a pure-tail split
    auto big = make_uniform(2000);
    auto got = missing_mass_log_laplace_series(*big, 30.0, 20.0, kEps);
    double direct = 2000.0 * std::exp(-30.0 * 5e-4) * phi(20.0 * 5e-4);
    CHECK(std::fabs(got.value - direct) <= got.error + 1e-12);

    // matches the occupancy-count series representation
    auto z = parse_model("zipf:s=2");
    auto lhs = missing_mass_log_laplace_series(*z, 50.0, 25.0, kEps);
    double rhs = 0.0, rhs_err = 0.0;
    for (uint64_t r = 2; r <= 45; ++r) {
        auto kr = expected_count(*z, Setting::poisson, 50.0, r, 1e-12);
        rhs += std::pow(0.5, static_cast<double>(r)) * kr.value;
        rhs_err += std::pow(0.5, static_cast<double>(r)) * kr.error;
    }
    CHECK(std::fabs(lhs.value - rhs) <= lhs.error + rhs_err + 1e-10);

    // sits below the sub-gamma envelope it refines
    auto vr = build_variance_report(*z, 100.0, kEps);
    double vplus = vr.v_plus.value + vr.v_plus.error;
    for (double l : {1.0, 10.0, 50.0, 99.0}) {
        auto s = missing_mass_log_laplace_series(*z, 100.0, l, kEps);
        CHECK(s.value <= vplus * l * l / (2.0 * (1.0 - l / 100.0)) + 1e-12);
    }
}

TEST_CASE("Good-Turing gap certificates") {
    auto m = make_uniform(2);
    auto rep = build_moment_report(*m, Setting::poisson, 2.0, 4, kEps);
    auto specs = gt_gap_bounds(rep);
    REQUIRE(specs.size() == 2);
    CHECK(specs[0].side == BoundSide::right);
    CHECK(specs[0].kind == BoundKind::scaled_phi);
    CHECK(specs[0].v == doctest::Approx(0.36787944117144233).epsilon(1e-9));
    CHECK(specs[0].v_phi == doctest::Approx(4.0 * std::exp(-1.0)).epsilon(1e-9));
    CHECK(specs[0].c == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(specs[1].side == BoundSide::left);
    CHECK(specs[1].kind == BoundKind::sub_gamma);
    CHECK(specs[1].v ==
          doctest::Approx(3.0 * 2.0 * -std::expm1(-1.0) / 4.0).epsilon(1e-9));

    // variance factors decay with t
    auto rep2 = build_moment_report(*m, Setting::poisson, 200.0, 4, kEps);
    auto specs2 = gt_gap_bounds(rep2);
    CHECK(specs2[0].v < 1e-3);
    CHECK(specs2[1].v < 1e-3);

    // dominance against the product transform
    struct Grid {
        std::vector<double> p;
        ModelPtr m;
        double t;
    };
    std::vector<Grid> grid;
    grid.push_back({{0.5, 0.5}, make_uniform(2), 2.0});
    grid.push_back({{0.25, 0.25, 0.25, 0.25}, make_uniform(4), 4.0});
    grid.push_back({{0.55, 0.25, 0.15, 0.05}, make_explicit({0.55, 0.25, 0.15, 0.05}), 2.0});
    for (const auto& g : grid) {
        auto r = build_moment_report(*g.m, Setting::poisson, g.t, 4, kEps);
        auto sp = gt_gap_bounds(r);
        for (double l : {0.5, 1.0, 2.0}) {
            double exact_right = gt_gap_log_mgf(g.p, g.t, l);
            CHECK(exact_right <= sp[0].log_mgf_bound(l) + 1e-12);
            if (sp[1].valid_lambda(l)) {
                double exact_left = gt_gap_log_mgf(g.p, g.t, -l);
                CHECK(exact_left <= sp[1].log_mgf_bound(l) + 1e-12);
            }
        }
    }
}

TEST_CASE("poisson count certificate") {
    auto m = parse_model("zipf:s=2");
    auto rep = build_moment_report(*m, Setting::poisson, 100.0, 4, kEps);
    auto b = kr_poisson_bound(rep, 2);
    CHECK(b.v == doctest::Approx(1.7273657250693379).epsilon(1e-9));
    CHECK(b.kind == BoundKind::sub_poisson);
    CHECK(b.multiplier == 2.0);

    // product-form transform of K_r(t) for a finite model
    auto u = make_uniform(4);
    auto urep = build_moment_report(*u, Setting::poisson, 4.0, 4, kEps);
    auto ub = kr_poisson_bound(urep, 1);
    double tp = 1.0;
    double pi = std::exp(-tp) * tp;
    for (double l : {-2.0, -0.5, 0.5, 2.0}) {
        double exact =
            4.0 * (std::log(1.0 - pi + pi * std::exp(l)) - l * pi);
        CHECK(exact <= ub.log_mgf_bound(l) + 1e-12);
    }
}
