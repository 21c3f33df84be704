#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "votewave/models.hpp"

#include "support/generators.hpp"

using namespace votewave;

namespace {

VotingModel<double> single_threshold(int d, std::vector<double> zeta) {
    VotingModel<double> m;
    m.offspring.probs[d] = 1.0;
    ThresholdRule<double> r;
    r.zeta[d] = std::move(zeta);
    m.rule = r;
    return m;
}

VotingModel<double> single_outcome(int d, std::vector<double> alpha) {
    VotingModel<double> m;
    m.offspring.probs[d] = 1.0;
    OutcomeRule<double> r;
    r.alpha[d] = std::move(alpha);
    m.rule = r;
    return m;
}

}  // namespace

TEST_CASE("threshold recursion polynomials") {
    const auto median3 = build_threshold_g(single_threshold(3, {0, 1, 0}));
    REQUIRE(median3.degree() == 3);
    CHECK(median3.coeffs[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(median3.coeffs[1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(median3.coeffs[2] == Catch::Approx(1.0).margin(1e-15));
    CHECK(median3.coeffs[3] == Catch::Approx(1.0).margin(1e-15));

    const auto max2 = build_threshold_g(single_threshold(2, {0, 1}));
    CHECK(eval(max2, 0.3) == Catch::Approx(0.09).margin(1e-15));

    // the tight archetype mixes B_{2,4} and B_{3,4} into the ternary median
    const auto mixed = build_threshold_g(archetype_tight<double>());
    REQUIRE(mixed.degree() == 4);
    CHECK(mixed.coeffs[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(mixed.coeffs[1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(mixed.coeffs[2] == Catch::Approx(0.5).margin(1e-15));
    CHECK(mixed.coeffs[3] == Catch::Approx(1.0).margin(1e-15));
    CHECK(mixed.coeffs[4] == Catch::Approx(1.0).margin(1e-15));
    for (double x : {0.1, 0.35, 0.62, 0.9})
        CHECK(eval(mixed, x) == Catch::Approx(3 * x * x - 2 * x * x * x).margin(1e-14));

    CHECK_THROWS_WITH(build_threshold_g(single_threshold(3, {0.4, 0.4, 0.4})),
                      Catch::Matchers::ContainsSubstring("zeta rows must sum to 1"));
}

TEST_CASE("exact threshold polynomial in the rational backend") {
    const auto g = build_threshold_g(archetype_tight<Rational>());
    REQUIRE(g.degree() == 4);
    CHECK(g.coeffs[0] == 0);
    CHECK(g.coeffs[1] == 0);
    CHECK(g.coeffs[2] == Rational(1, 2));
    CHECK(g.coeffs[3] == 1);
    CHECK(g.coeffs[4] == 1);
}

TEST_CASE("outcome recursion polynomials") {
    const auto median3 = build_outcome_g(single_outcome(3, {0, 0, 1, 1}));
    for (double x : {0.2, 0.5, 0.8})
        CHECK(eval(median3, x) == Catch::Approx(3 * x * x - 2 * x * x * x).margin(1e-15));

    const auto square = build_outcome_g(single_outcome(2, {0, 0, 1}));
    CHECK(eval(square, 0.7) == Catch::Approx(0.49).margin(1e-15));

    const auto sur = build_outcome_g(single_outcome(2, {0, 1, 1}));
    for (double x : {0.25, 0.6}) CHECK(eval(sur, x) == Catch::Approx(2 * x - x * x).margin(1e-15));

    CHECK_THROWS_WITH(build_outcome_g(single_outcome(2, {0, 0.5, 0.9})),
                      Catch::Matchers::ContainsSubstring("alpha_{d,d}"));
    CHECK_THROWS_WITH(build_outcome_g(single_outcome(2, {0.1, 0.5, 1.0})),
                      Catch::Matchers::ContainsSubstring("alpha_{0,d}"));
}

TEST_CASE("zero analysis") {
    const auto nl = analyze(build_threshold_g(single_threshold(3, {0, 1, 0})));
    REQUIRE(nl.interior_zeros() == 1);
    CHECK(nl.zeros[0] == 0.0);
    CHECK(nl.zeros[1] == Catch::Approx(0.5).margin(1e-11));
    CHECK(nl.zeros[2] == 1.0);
    CHECK(nl.bistable);
    CHECK(nl.monotone_g);
    CHECK(nl.theta() == Catch::Approx(0.5).margin(1e-11));
    CHECK(nl.fp0 == Catch::Approx(-1.0).margin(1e-12));
    CHECK(nl.fp1 == Catch::Approx(-1.0).margin(1e-12));

    // p_2 = 1/4: interior zero at 1/(2(1-p)) = 2/3
    const auto bt = analyze(build_threshold_g(binary_ternary_model<double>(0.25)));
    REQUIRE(bt.interior_zeros() == 1);
    CHECK(bt.theta() == Catch::Approx(2.0 / 3.0).margin(1e-11));
    CHECK(bt.bistable);

    // f identically zero has no isolated zeros
    const BernsteinPoly<double> identity{{0.0, 1.0}};
    CHECK_THROWS_AS(analyze(identity), std::invalid_argument);

    // an exact touch point on the scan grid counts as a zero but is not a
    // bistable configuration: f = x(1-x)(x-1/2)^2
    const MonomialPoly<double> fm{{0.0, 0.25, -1.25, 2.0, -1.0}};
    auto g = from_monomial(fm, 4);
    for (int k = 0; k <= 4; ++k) g.coeffs[k] += k / 4.0;
    const auto touch = analyze(g);
    REQUIRE(touch.interior_zeros() == 1);
    CHECK(touch.zeros[1] == Catch::Approx(0.5).margin(1e-4));
    CHECK_FALSE(touch.bistable);

    // the half-drift archetype carries such a double zero at 1/2
    const auto half = analyze(build_threshold_g(archetype_half_drift<double>()));
    REQUIRE(half.interior_zeros() == 1);
    CHECK(half.zeros[1] == Catch::Approx(0.5).margin(1e-4));
    CHECK(half.fp0 > 0.0);
    CHECK_FALSE(half.bistable);

    // a sign-changing zero with vanishing derivative cannot be localized:
    // f = 4 x(1-x)(x-1/2)^3
    const MonomialPoly<double> triple{{0.0, -0.5, 3.5, -9.0, 10.0, -4.0}};
    auto gt = from_monomial(triple, 5);
    for (int k = 0; k <= 5; ++k) gt.coeffs[k] += k / 5.0;
    CHECK_THROWS_WITH(analyze(gt), Catch::Matchers::ContainsSubstring("degenerate zero"));

    // KPP-like: no interior zeros, monotone
    const MonomialPoly<double> kpp{{0.0, 1.05, -0.05}};
    const auto knl = analyze(from_monomial(kpp, 2));
    CHECK(knl.interior_zeros() == 0);
    CHECK(knl.monotone_g);
    CHECK_FALSE(knl.bistable);
}

TEST_CASE("binary-ternary interior zero matches the closed form", "[property]") {
    // p_2 = p < 1/2: f has the single interior zero 1/(2(1-p)) and is bistable
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> up(0.02, 0.48);
    for (int trial = 0; trial < 50; ++trial) {
        const double p = up(rng);
        const auto nl = analyze(build_threshold_g(binary_ternary_model<double>(p)));
        REQUIRE(nl.interior_zeros() == 1);
        CHECK(nl.theta() == Catch::Approx(1.0 / (2.0 * (1.0 - p))).margin(1e-10));
        CHECK(nl.bistable);
        CHECK(nl.fp0 < 0.0);
        CHECK(nl.fp1 < 0.0);
        // threshold models keep both end slopes within [-1, 0)
        CHECK(nl.fp0 >= -1.0 - 1e-12);
        CHECK(nl.fp1 >= -1.0 - 1e-12);
    }
}

TEST_CASE("linear extension outside the unit interval") {
    const auto nl = analyze(build_threshold_g(single_threshold(3, {0, 1, 0})));
    CHECK(extend_g(nl, -0.1) == Catch::Approx(0.0).margin(1e-12));
    CHECK(extend_g(nl, 0.5) == Catch::Approx(0.5).margin(1e-12));
    CHECK(extend_g(nl, 1.2) == Catch::Approx(1.0).margin(1e-12));
    // nondecreasing across the matching points
    double prev = extend_g(nl, -0.5);
    for (double x = -0.5; x <= 1.5; x += 0.01) {
        const double v = extend_g(nl, x);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("outcome representation") {
    const auto med = outcome_representation(from_monomial(MonomialPoly<double>{{0, 0, 3, -2}}, 3));
    REQUIRE(med.ok());
    CHECK(med.degree == 3);
    CHECK(med.alpha[1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(med.alpha[2] == Catch::Approx(1.0).margin(1e-12));

    const auto sur = outcome_representation(from_monomial(MonomialPoly<double>{{0, 2, -1}}, 2));
    REQUIRE(sur.ok());
    CHECK(sur.degree == 2);
    CHECK(sur.alpha[1] == Catch::Approx(1.0).margin(1e-12));

    // leaves (0,1): -2x + 9x^2 - 6x^3 dips negative near 0.1
    const auto bad = outcome_representation(from_monomial(MonomialPoly<double>{{0, -2, 9, -6}}, 3));
    CHECK_FALSE(bad.ok());
    CHECK(bad.status == ReprStatus::range_violation);
    CHECK(std::string(to_string(bad.status)) == "violates 0<g<1");

    const auto off = outcome_representation(from_monomial(MonomialPoly<double>{{0.2, 0.8}}, 1));
    CHECK(off.status == ReprStatus::endpoint_violation);
}

TEST_CASE("threshold representation") {
    const auto med = threshold_representation(from_monomial(MonomialPoly<double>{{0, 0, 3, -2}}, 3));
    REQUIRE(med.ok());
    CHECK(med.degree == 3);
    const auto rule = med.threshold_rule();
    CHECK(rule.zeta.at(3)[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(rule.zeta.at(3)[1] == Catch::Approx(1.0).margin(1e-12));
    CHECK(rule.zeta.at(3)[2] == Catch::Approx(0.0).margin(1e-12));
    double total = 0.0;
    for (double z : rule.zeta.at(3)) total += z;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));

    // pure maximum: x^d
    const auto maxd = threshold_representation(from_monomial(MonomialPoly<double>{{0, 0, 0, 1}}, 3));
    REQUIRE(maxd.ok());
    CHECK(maxd.threshold_rule().zeta.at(3)[2] == Catch::Approx(1.0).margin(1e-12));

    // outcome-representable but not monotone: g'(1/2) < 0
    const auto wavy = build_outcome_g(single_outcome(4, {0, 0.9, 0.55, 0.2, 1}));
    CHECK(eval(derivative(wavy), 0.5) < 0.0);
    const auto repr = threshold_representation(wavy);
    CHECK_FALSE(repr.ok());
    CHECK(repr.status == ReprStatus::not_monotone);
    CHECK(outcome_representation(wavy, 512).ok());
}

TEST_CASE("representation requiring genuine elevation") {
    // g = x - 0.45 b_{2,6}: strictly increasing with 0 < g < 1 on (0,1),
    // yet the interior coefficient beta_2 = 1/3 - 0.45 is negative, so both
    // representations exist only after elevating. (A monotone g can only
    // leave [0,1] at interior coefficients: g'(0) = d beta_1 and
    // g'(1) = d (1 - beta_{d-1}) pin the outer ones.)
    BernsteinPoly<double> g{{0.0, 1.0 / 6, 1.0 / 3 - 0.45, 0.5, 2.0 / 3, 5.0 / 6, 1.0}};
    CHECK(g.coeffs[2] < 0.0);
    const auto gp = derivative(g);
    for (int i = 0; i <= 400; ++i) CHECK(eval(gp, i / 400.0) > 0.0);

    const auto out = outcome_representation(g);
    REQUIRE(out.ok());
    CHECK(out.degree > 6);
    const auto thr = threshold_representation(g);
    REQUIRE(thr.ok());
    const auto g2 = build_threshold_g(thr.threshold_model());
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        CHECK(eval(g2, x) == Catch::Approx(eval(g, x)).margin(1e-10));
    }

    // the exact backend agrees on the required degree
    BernsteinPoly<Rational> gr{{Rational(0), Rational(1, 6), Rational(1, 3) - Rational(9, 20),
                                Rational(1, 2), Rational(2, 3), Rational(5, 6), Rational(1)}};
    const auto outr = outcome_representation(gr);
    REQUIRE(outr.ok());
    CHECK(outr.degree == out.degree);
}

TEST_CASE("representation round trips", "[property]") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 120; ++trial) {
        const auto model = test::random_threshold_model(rng);
        const auto g = build_threshold_g(model);
        const auto repr = threshold_representation(g);
        REQUIRE(repr.ok());
        const auto g2 = build_threshold_g(repr.threshold_model());
        for (int i = 0; i <= 100; ++i) {
            const double x = i / 100.0;
            CHECK(eval(g2, x) == Catch::Approx(eval(g, x)).margin(1e-10));
        }
    }
    for (int trial = 0; trial < 120; ++trial) {
        const auto model = test::random_outcome_model(rng);
        const auto g = build_outcome_g(model);
        const auto repr = outcome_representation(g);
        REQUIRE(repr.ok());
        const auto g2 = build_outcome_g(repr.model());
        for (int i = 0; i <= 100; ++i) {
            const double x = i / 100.0;
            CHECK(eval(g2, x) == Catch::Approx(eval(g, x)).margin(1e-10));
        }
    }
}

TEST_CASE("monotone outcome models are threshold models", "[property]") {
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 120; ++trial) {
        const auto model = test::random_outcome_model(rng, 4, /*monotone=*/true);
        const auto g = build_outcome_g(model);
        const auto repr = threshold_representation(g, 64);
        CHECK(repr.ok());
    }
}

TEST_CASE("threshold polynomials are strictly increasing", "[property]") {
    std::mt19937_64 rng(888);
    for (int trial = 0; trial < 100; ++trial) {
        const auto model = test::random_threshold_model(rng);
        const auto g = build_threshold_g(model);
        CHECK(std::abs(eval(g, 0.0)) < 1e-12);
        CHECK(std::abs(eval(g, 1.0) - 1.0) < 1e-12);
        const auto gp = derivative(g);
        for (int i = 1; i <= 201; ++i) CHECK(eval(gp, i / 202.0) > 0.0);
    }
}

TEST_CASE("exact representation decisions") {
    BernsteinPoly<Rational> g{{Rational(0), Rational(0), Rational(1), Rational(1)}};
    const auto repr = threshold_representation(g, 64);
    REQUIRE(repr.ok());
    CHECK(repr.degree == 3);
    CHECK(repr.alpha[2] == 1);

    // g' has an exact interior zero at 1/2: 3x - 6x^2 + 4x^3
    const auto flat = from_monomial(MonomialPoly<Rational>{{Rational(0), Rational(3), Rational(-6), Rational(4)}}, 3);
    const auto fr = threshold_representation(flat, 64);
    CHECK_FALSE(fr.ok());
    CHECK(fr.status == ReprStatus::not_monotone);
}
