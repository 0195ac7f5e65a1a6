#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "urnlab/models.hpp"
#include "urnlab/numerics.hpp"

using namespace urnlab;

namespace {

// telescoping cross-check of the certified machinery: the tail at J must equal
// the directly summed strip plus the tail at J2, within the stated error bars
void check_tail_consistency(const FrequencyModel& m, uint64_t J, uint64_t J2) {
    certified a = m.tail_mass(J);
    certified b = m.tail_mass(J2);
    long double strip = 0.0L;
    for (uint64_t j = J2; j > J; --j) strip += m.prob(j);
    double lhs = a.value;
    double rhs = static_cast<double>(strip) + b.value;
    CHECK(std::fabs(lhs - rhs) <= a.error + b.error + 1e-14 * (1.0 + rhs));
}

void check_power_consistency(const FrequencyModel& m, int mm, uint64_t J, uint64_t J2) {
    certified a = m.power_sum(mm, J);
    certified b = m.power_sum(mm, J2);
    long double strip = 0.0L;
    for (uint64_t j = J2; j > J; --j) {
        strip += std::pow(static_cast<long double>(m.prob(j)), mm);
    }
    double rhs = static_cast<double>(strip) + b.value;
    CHECK(std::fabs(a.value - rhs) <= a.error + b.error + 1e-14 * (1.0 + rhs));
}

void check_counting_inverse(const FrequencyModel& m, double x) {
    uint64_t n = m.counting_function(x);
    if (n >= 1) CHECK(m.prob(n) >= x);
    CHECK(m.prob(n + 1) < x);
}

} // namespace

TEST_CASE("uniform model is exact") {
    auto m = make_uniform(100);
    CHECK(m->prob(1) == doctest::Approx(0.01));
    CHECK(m->prob(100) == doctest::Approx(0.01));
    CHECK(m->prob(101) == 0.0);
    CHECK(m->tail_mass(100).value == 0.0);
    CHECK(m->tail_mass(40).value == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(m->power_sum(2, 0).value == doctest::Approx(100 * 1e-4).epsilon(1e-14));
    CHECK(m->counting_function(0.01) == 100);
    CHECK(m->counting_function(0.010000001) == 0);
    CHECK(m->support_size().value() == 100);
    CHECK(m->truncation_index(1e-9) == 100);
    // at an exact boundary the certified bar may push one index further
    CHECK(m->truncation_index(0.501) == 50);
    uint64_t at_half = m->truncation_index(0.5);
    CHECK(at_half >= 50);
    CHECK(at_half <= 51);
    CHECK(m->spec_string() == "uniform:k=100");
    CHECK(m->rv_meta() == nullptr);
}

TEST_CASE("zipf tails reproduce hurwitz references") {
    auto m = make_zipf(2.0);
    double z2 = 1.6449340668482264;
    CHECK(m->prob(1) == doctest::Approx(1.0 / z2).epsilon(1e-14));
    CHECK(m->prob(3) == doctest::Approx(1.0 / (9.0 * z2)).epsilon(1e-14));

    certified t = m->tail_mass(608);
    CHECK(t.value == doctest::Approx(1.643385004010828e-3 / z2).epsilon(1e-12));
    CHECK(m->truncation_index(1e-3) == 608);

    certified s2 = m->power_sum(2, 608);
    CHECK(s2.value == doctest::Approx(1.479436779034212e-9 / (z2 * z2)).epsilon(1e-12));

    auto m15 = make_zipf(1.5);
    double z15 = 2.6123753486854883;
    certified s = m15->power_sum(2, 10);
    CHECK(s.value == doctest::Approx(4.5249174854010337e-3 / (z15 * z15)).epsilon(1e-12));

    const RvMeta* meta = m->rv_meta();
    REQUIRE(meta != nullptr);
    CHECK(meta->alpha == doctest::Approx(0.5));
    CHECK(meta->ell(123.0) == doctest::Approx(std::pow(z2, -0.5)).epsilon(1e-14));
    CHECK_FALSE(meta->de_haan);
    CHECK(!m->support_size().has_value());
}

TEST_CASE("geometric model closed forms") {
    auto m = make_geometric(0.5);
    CHECK(m->prob(1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m->prob(4) == doctest::Approx(0.0625).epsilon(1e-14));
    CHECK(m->tail_mass(3).value == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(m->power_sum(2, 0).value == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(m->power_sum(1, 10).value == doctest::Approx(std::pow(2.0, -10.0)).epsilon(1e-14));
    CHECK(m->counting_function(0.01) == 6);
    CHECK(m->truncation_index(0.124) == 4);

    const RvMeta* meta = m->rv_meta();
    REQUIRE(meta != nullptr);
    CHECK(meta->alpha == 0.0);
    CHECK(meta->ell(100.0) == doctest::Approx(std::log2(100.0)).epsilon(1e-12));
    CHECK(meta->aux_a(12345.0) == doctest::Approx(1.4426950408889634).epsilon(1e-14));
    CHECK_FALSE(meta->de_haan);
}

TEST_CASE("sqrtgeom normalization and certified tails") {
    auto m = make_sqrtgeom(0.5);
    // frozen normalizer for q = 1/2
    double c = 0.26397627463312244;
    CHECK(m->prob(1) == doctest::Approx(c * 0.5).epsilon(1e-11));
    CHECK(m->tail_mass(0).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m->tail_mass(10).value == doctest::Approx(0.37731829587905502).epsilon(1e-11));
    CHECK(m->counting_function(0.01) == 22);

    const RvMeta* meta = m->rv_meta();
    REQUIRE(meta != nullptr);
    CHECK(meta->alpha == 0.0);
    CHECK(meta->de_haan);
    CHECK(meta->aux_a(1e4) == doctest::Approx(32.7959).epsilon(1e-4));
    CHECK(meta->aux_a(1e6) == doctest::Approx(51.9660).epsilon(1e-4));
    double l = std::log(c * 1e4) / std::log(2.0);
    CHECK(meta->ell(1e4) == doctest::Approx(l * l).epsilon(1e-12));
}

TEST_CASE("fastvar normalization, tails, and counting function") {
    auto m = make_fastvar();
    double C = 0.29518242807572503;
    double l2 = std::log(2.0);
    CHECK(m->prob(1) == doctest::Approx(C / (l2 * l2)).epsilon(1e-11));
    CHECK(m->tail_mass(0).value == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(m->tail_mass(100).value == doctest::Approx(0.06399079125317476).epsilon(1e-10));
    CHECK(m->counting_function(1e-6) == 4232);

    const RvMeta* meta = m->rv_meta();
    REQUIRE(meta != nullptr);
    CHECK(meta->alpha == 1.0);
    CHECK(meta->ell(1e6) == doctest::Approx(4.232e-3).epsilon(1e-12));
    CHECK(1e6 * meta->ell1(1e6) == doctest::Approx(39580.688664964055).epsilon(1e-8));
}

TEST_CASE("certified sums telescope against direct summation") {
    auto zipf = make_zipf(2.0);
    auto zipf15 = make_zipf(1.5);
    auto geom = make_geometric(0.3);
    auto sg = make_sqrtgeom(0.5);
    auto fv = make_fastvar();
    for (const auto& m : {zipf, zipf15, geom, sg, fv}) {
        check_tail_consistency(*m, 5, 2000);
        check_power_consistency(*m, 2, 3, 1500);
        check_power_consistency(*m, 3, 0, 800);
        check_power_consistency(*m, 7, 0, 400);
    }
}

TEST_CASE("counting functions invert the probability sequence") {
    auto models = {make_zipf(2.0), make_zipf(1.5), make_geometric(0.5),
                   make_sqrtgeom(0.5), make_fastvar()};
    for (const auto& m : models) {
        for (double x : {0.2, 0.05, 1e-3, 1e-5, 1e-8}) {
            check_counting_inverse(*m, x);
        }
        CHECK(m->counting_function(1.0) == 0);
    }
}

TEST_CASE("truncation index is the smallest certified index") {
    auto models = {make_zipf(2.0), make_geometric(0.5), make_sqrtgeom(0.5)};
    for (const auto& m : models) {
        for (double eps : {1e-2, 1e-4, 1e-6}) {
            uint64_t J = m->truncation_index(eps);
            certified at = m->tail_mass(J);
            CHECK(at.value + at.error <= eps);
            if (J > 0) {
                certified before = m->tail_mass(J - 1);
                CHECK(before.value + before.error > eps);
            }
        }
    }
    CHECK_THROWS_AS(make_zipf(2.0)->truncation_index(0.0), std::domain_error);
}

TEST_CASE("explicit model keeps exact inputs and normalizes sloppy ones") {
    auto m = make_explicit({0.4, 0.3, 0.2, 0.1});
    CHECK(m->prob(1) == 0.4);
    CHECK(m->prob(4) == 0.1);
    CHECK(m->prob(5) == 0.0);
    CHECK(m->support_size().value() == 4);
    CHECK(m->tail_mass(2).value == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(m->power_sum(2, 0).value == doctest::Approx(0.16 + 0.09 + 0.04 + 0.01).epsilon(1e-14));
    CHECK(m->counting_function(0.25) == 2);

    auto n = make_explicit({0.5, 0.3, 0.1});
    CHECK(n->prob(1) == doctest::Approx(0.5 / 0.9).epsilon(1e-14));
    CHECK(n->tail_mass(0).value == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(make_explicit({}), model_parse_error);
    CHECK_THROWS_AS(make_explicit({0.3, 0.4, 0.3}), model_parse_error);
    CHECK_THROWS_AS(make_explicit({0.5, -0.1, 0.6}), model_parse_error);
}

TEST_CASE("factorial-decay model") {
    auto m = make_factorial_decay();
    CHECK(m->support_size().value() == 26);
    CHECK(m->prob(1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(m->prob(2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(m->prob(3) == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-14));
    // the two heaviest symbols carry 2/e of the mass
    CHECK(m->prob(1) + m->prob(2) == doctest::Approx(0.7357588823428847).epsilon(1e-14));
    CHECK(m->tail_mass(0).value == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m->counting_function(0.3) == 2);
}

TEST_CASE("model spec strings round-trip through the parser") {
    for (const char* spec : {"uniform:k=100", "zipf:s=2", "geom:q=0.5",
                             "sqrtgeom:q=0.5", "fastvar"}) {
        auto m = parse_model(spec);
        CHECK(m->spec_string() == spec);
        auto again = parse_model(m->spec_string());
        CHECK(again->spec_string() == spec);
        CHECK(again->prob(3) == doctest::Approx(m->prob(3)).epsilon(1e-15));
    }
    // bare positional parameters are accepted and canonicalized
    CHECK(parse_model("uniform:100")->spec_string() == "uniform:k=100");
    CHECK(parse_model("zipf:2.0")->spec_string() == "zipf:s=2");
}

TEST_CASE("explicit file specs round-trip") {
    const char* path = "explicit_probs_test.csv";
    {
        std::ofstream out(path);
        out << "# heavy head\n0.4\n0.3\n0.2,0.1\n";
    }
    auto m = parse_model(std::string("explicit:@") + path);
    CHECK(m->support_size().value() == 4);
    CHECK(m->prob(1) == 0.4);
    CHECK(m->prob(4) == 0.1);
    CHECK(m->spec_string() == std::string("explicit:@") + path);
    auto again = parse_model(m->spec_string());
    CHECK(again->prob(2) == 0.3);
    std::remove(path);
}

TEST_CASE("parser rejects malformed specs") {
    CHECK_THROWS_AS(parse_model("zapf:s=2"), model_parse_error);
    CHECK_THROWS_AS(parse_model(""), model_parse_error);
    CHECK_THROWS_AS(parse_model("zipf"), model_parse_error);
    CHECK_THROWS_AS(parse_model("zipf:s=abc"), model_parse_error);
    CHECK_THROWS_AS(parse_model("zipf:q=2"), model_parse_error);
    CHECK_THROWS_AS(parse_model("zipf:s=1"), model_parse_error);
    CHECK_THROWS_AS(parse_model("uniform:k=0"), model_parse_error);
    CHECK_THROWS_AS(parse_model("uniform:k=2.5"), model_parse_error);
    CHECK_THROWS_AS(parse_model("geom:q=1"), model_parse_error);
    CHECK_THROWS_AS(parse_model("geom:q=0"), model_parse_error);
    CHECK_THROWS_AS(parse_model("sqrtgeom:q=-0.5"), model_parse_error);
    CHECK_THROWS_AS(parse_model("fastvar:x=1"), model_parse_error);
    CHECK_THROWS_AS(parse_model("explicit:file.csv"), model_parse_error);
    CHECK_THROWS_AS(parse_model("explicit:@/nonexistent/path.csv"), model_parse_error);
}

TEST_CASE("probabilities are non-increasing across every family") {
    auto models = {make_zipf(1.7), make_geometric(0.25), make_sqrtgeom(0.6),
                   make_fastvar(), make_factorial_decay(), make_uniform(7)};
    for (const auto& m : models) {
        double prev = m->prob(1);
        CHECK(prev > 0.0);
        for (uint64_t j = 2; j <= 300; ++j) {
            double p = m->prob(j);
            CHECK(p <= prev * (1.0 + 1e-12));
            prev = p;
        }
    }
}
