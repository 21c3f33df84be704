#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "votewave/grid.hpp"
#include "votewave/io.hpp"

#include "support/enumeration.hpp"
#include "support/generators.hpp"

using namespace votewave;

namespace {

VotingModel<double> ternary_median() {
    VotingModel<double> m;
    m.offspring.probs[3] = 1.0;
    ThresholdRule<double> r;
    r.zeta[3] = {0, 1, 0};
    m.rule = r;
    return m;
}

double at_x(const GridCDF& F, double x) { return F.at(F.index_of(x)); }

}  // namespace

TEST_CASE("atomic convolution") {
    const auto F = step_indicator<double>(1.0, /*half_jump=*/false);
    const auto q = test::fig1_increments();
    const auto conv = convolve(F, q);
    CHECK(at_x(conv, 0.0) == Catch::Approx(0.75).margin(1e-15));
    CHECK(at_x(conv, -1.0) == Catch::Approx(0.25).margin(1e-15));
    CHECK(at_x(conv, 1.0) == Catch::Approx(1.0).margin(1e-15));

    const auto point = IncrementLaw::from_atoms({{0.0, 1.0}});
    const auto same = convolve(F, point);
    for (long i = 0; i < F.size(); ++i) CHECK(same.at(same.index_of(F.x(i))) == F.v[i]);

    GridCDF constant;
    constant.x0 = 0.0;
    constant.h = 1.0;
    constant.v = {0.37, 0.37, 0.37};
    constant.tail_lo = constant.tail_hi = 0.37;
    const auto cc = convolve(constant, q);
    for (double v : cc.v) CHECK(v == Catch::Approx(0.37).margin(1e-15));

    const auto off_grid = IncrementLaw::from_atoms({{-0.5, 0.5}, {0.5, 0.5}});
    CHECK_THROWS_WITH(convolve(F, off_grid),
                      Catch::Matchers::ContainsSubstring("integer multiples"));
}

TEST_CASE("exact one-step value in the rational backend") {
    const auto F = step_indicator<Rational>(1.0, false);
    const std::vector<std::pair<long, Rational>> atoms = {
        {-1, Rational(1, 4)}, {0, Rational(1, 2)}, {1, Rational(1, 4)}};
    const auto conv = convolve_atoms(F, atoms);
    const auto g = build_threshold_g(archetype_tight<Rational>());
    const auto F1 = apply_poly(conv, g);
    CHECK(F1.at(F1.index_of(0.0)) == Rational(27, 32));
}

TEST_CASE("one recursion step") {
    const auto q = test::fig1_increments();
    const auto nl = analyze(build_threshold_g(archetype_tight<double>()));
    const auto F1 = step(step_indicator<double>(1.0, false), nl, q);
    CHECK(at_x(F1, 0.0) == Catch::Approx(27.0 / 32.0).margin(1e-14));

    GridCDF zeros;
    zeros.x0 = 0;
    zeros.h = 1;
    zeros.v = {0, 0, 0};
    zeros.tail_hi = 0.0;
    const auto z1 = step(zeros, nl, q);
    for (double v : z1.v) CHECK(v == Catch::Approx(0.0).margin(1e-15));

    GridCDF ones;
    ones.x0 = 0;
    ones.h = 1;
    ones.v = {1, 1, 1};
    ones.tail_lo = 1.0;
    const auto o1 = step(ones, nl, q);
    for (double v : o1.v) CHECK(v == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("symmetry is preserved by the symmetric model") {
    const auto q = IncrementLaw::raised_cosine(1.0, 201);
    const auto nl = analyze(build_threshold_g(ternary_median()));
    GridCDF F = step_indicator<double>(q.h, /*half_jump=*/true, 300);
    for (int n = 0; n < 5; ++n) F = step(F, nl, q);
    // F(-x) = 1 - F(x) on the grid
    const long zero_idx = F.index_of(0.0);
    for (long off = 0; zero_idx - off >= 0 && zero_idx + off < F.size(); ++off) {
        CHECK(F.at(zero_idx - off) == Catch::Approx(1.0 - F.at(zero_idx + off)).margin(1e-12));
    }
}

TEST_CASE("iteration") {
    const auto q = test::fig1_increments();
    const auto nl = analyze(build_threshold_g(archetype_tight<double>()));
    const auto F0 = step_indicator<double>(1.0, false);

    const auto none = iterate(F0, 0, nl, q);
    REQUIRE(none.size() == 1);
    CHECK(none.back().first == 0);

    // the tight archetype keeps mass near the median quantile
    const auto records = iterate(F0, 200, nl, q, {});
    const auto& F200 = records.back().second;
    CHECK(records.back().first == 200);
    validate_cdf(F200);
    CHECK(quantile(F200, 0.5) < 50.0);
    CHECK(quantile(F200, 0.5) > -50.0);

    // symmetric density case: F_n(0) stays exactly centered
    const auto qc = IncrementLaw::raised_cosine(1.0, 201);
    const auto nls = analyze(build_threshold_g(ternary_median()));
    auto sym = iterate(step_indicator<double>(qc.h, true, 200), 100, nls, qc);
    const auto& Fs = sym.back().second;
    CHECK(value_at(Fs, 0.0) == Catch::Approx(0.5).margin(1e-10));
}

TEST_CASE("quantiles") {
    const auto F = step_indicator<double>(1.0, false);
    CHECK(quantile(F, 0.5) == 0.0);
    CHECK_THROWS_AS(quantile(F, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(quantile(F, 1.0), std::invalid_argument);

    GridCDF ramp;
    ramp.x0 = 0.0;
    ramp.h = 0.25;
    ramp.v = {0.0, 0.25, 0.5, 0.75, 1.0};
    CHECK(quantile(ramp, 0.25) == Catch::Approx(0.25).margin(1e-14));
    CHECK(quantile(ramp, 0.1) == Catch::Approx(0.1).margin(1e-14));

    const auto q = test::fig1_increments();
    const auto nl = analyze(build_threshold_g(archetype_tight<double>()));
    const auto F1 = step(step_indicator<double>(1.0, false), nl, q);
    CHECK(quantile(F1, 27.0 / 32.0) == 0.0);
    CHECK(quantile(F1, 0.9) == 1.0);
}

TEST_CASE("conditional laws") {
    const auto q = test::fig1_increments();
    const auto nl = analyze(build_threshold_g(archetype_tight<double>()));
    auto records = iterate(step_indicator<double>(1.0, false), 30, nl, q);
    const auto& F = records.back().second;

    const double lo = support_left_edge(F), hi = support_right_edge(F);
    const auto whole = conditional_cdf(F, lo, hi);
    for (long i = 0; i < whole.size(); ++i)
        CHECK(whole.v[static_cast<std::size_t>(i)] ==
              Catch::Approx(value_at(F, whole.x(i))).margin(1e-12));

    CHECK_THROWS_WITH(conditional_cdf(F, hi + 5.0, hi + 8.0),
                      Catch::Matchers::ContainsSubstring("null set"));

    // symmetric continuous law: conditioning on [0, inf) halves the upper tail
    const auto qc = IncrementLaw::raised_cosine(1.0, 201);
    const auto nls = analyze(build_threshold_g(ternary_median()));
    auto sym = iterate(step_indicator<double>(qc.h, true, 200), 40, nls, qc);
    const auto& Fs = sym.back().second;
    const auto upper = conditional_cdf(Fs, 0.0, support_right_edge(Fs));
    CHECK(quantile(upper, 0.5) == Catch::Approx(quantile(Fs, 0.75)).margin(1e-9));
}

TEST_CASE("comparison principle and translation sandwich", "[property]") {
    std::mt19937_64 rng(314);
    const auto q = test::fig1_increments();
    const auto nl = analyze(build_threshold_g(archetype_tight<double>()));
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (int trial = 0; trial < 40; ++trial) {
        // two comparable monotone CDFs on the same grid
        const int n = 9;
        GridCDF F, G;
        F.x0 = G.x0 = -4.0;
        F.h = G.h = 1.0;
        F.v.resize(n);
        G.v.resize(n);
        double a = 0, b = 0;
        for (int i = 0; i < n; ++i) {
            a = std::min(1.0, a + u(rng) * 0.3);
            b = std::min(1.0, b + u(rng) * 0.3);
            if (b < a) b = a;  // G dominates F
            F.v[i] = a;
            G.v[i] = b;
        }
        F.v[n - 1] = G.v[n - 1] = 1.0;
        const auto Fs = step(F, nl, q);
        const auto Gs = step(G, nl, q);
        for (long i = 0; i < Fs.size(); ++i) CHECK(Fs.v[i] <= Gs.v[i] + 1e-12);

        // monotonicity and range preservation
        for (long i = 1; i < Fs.size(); ++i) CHECK(Fs.v[i] >= Fs.v[i - 1] - 1e-12);
        for (long i = 0; i < Fs.size(); ++i) {
            CHECK(Fs.v[i] >= -1e-15);
            CHECK(Fs.v[i] <= 1.0 + 1e-15);
        }

    }
}

TEST_CASE("translation sandwich along the recursion", "[property]") {
    // the coupled construction keeps |M_{n+1} - M_n| <= C_q along the
    // trajectory, so F_{n+1}(x) sits between F_n(x -+ C_q)
    std::mt19937_64 rng(424242);
    for (int trial = 0; trial < 8; ++trial) {
        const auto model = test::random_threshold_model(rng, 4);
        const auto law = test::random_atomic_law(rng, 3);
        const auto nl = analyze(build_threshold_g(model));
        const long shift = static_cast<long>(std::llround(law.support_radius()));
        GridCDF F = step_indicator<double>(1.0, false);
        for (int n = 0; n < 12; ++n) {
            const GridCDF next = step(F, nl, law);
            for (long i = 0; i < next.size(); ++i) {
                const double x = next.x(i);
                const long j = static_cast<long>(std::llround((x - F.x0) / F.h));
                CHECK(next.v[static_cast<std::size_t>(i)] >= F.at(j - shift) - 1e-12);
                CHECK(next.v[static_cast<std::size_t>(i)] <= F.at(j + shift) + 1e-12);
            }
            F = next;
            clamp_and_trim(F, law.support_radius());
        }
    }
}

TEST_CASE("grid recursion matches exact enumeration", "[oracle]") {
    std::mt19937_64 rng(2718);
    for (int trial = 0; trial < 8; ++trial) {
        const auto model = test::random_threshold_model(rng, 4);
        const auto law = test::random_atomic_law(rng, 3);
        const int depth = 1 + static_cast<int>(rng() % 3);

        test::AtomicLaw atoms;
        for (const auto& [x, w] : law.atoms) atoms[Rational(x)] = Rational(w);
        const auto exact = test::exact_outcome_law(test::to_exact(model), atoms, depth);

        const auto nl = analyze(build_threshold_g(model));
        auto records = iterate(step_indicator<double>(1.0, false), depth, nl, law);
        const auto& F = records.back().second;
        for (const auto& [pos, p] : exact) {
            const double expect = to_double(test::cdf_at(exact, pos));
            INFO("trial " << trial << " depth " << depth << " x=" << to_double(pos));
            CHECK(value_at(F, to_double(pos)) == Catch::Approx(expect).margin(1e-12));
        }
    }
}

TEST_CASE("kolmogorov distance") {
    const auto F = step_indicator<double>(1.0, false);
    EmpiricalCDF exact_step;
    exact_step.samples = {0.0, 0.0, 0.0, 0.0};
    CHECK(kolmogorov_distance(F, exact_step) == 0.0);

    // samples drawn from the grid law itself stay within the DKW band
    const auto q = test::fig1_increments();
    const auto nl = analyze(build_threshold_g(archetype_tight<double>()));
    auto records = iterate(step_indicator<double>(1.0, false), 10, nl, q);
    const auto& F10 = records.back().second;

    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 100000;
    std::vector<double> draws(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = u(rng);
        long j = 0;
        while (j < F10.size() && F10.v[static_cast<std::size_t>(j)] < t) ++j;
        draws[i] = F10.x(j);
    }
    const auto E = EmpiricalCDF::from_samples(std::move(draws));
    const double dkw = std::sqrt(std::log(2.0 / 0.01) / (2.0 * static_cast<double>(n)));
    CHECK(kolmogorov_distance(F10, E) < dkw);

    // and the Monte Carlo engine agrees with the grid recursion
    SimConfig cfg{archetype_tight<double>(), q, 10, 100000, 808};
    CHECK(kolmogorov_distance(F10, simulate_threshold_population(cfg)) < 0.01);
}

TEST_CASE("cluster report flags the tight archetype") {
    const auto q = test::fig1_increments();
    const auto nl = analyze(build_threshold_g(archetype_tight<double>()));
    auto records = iterate(step_indicator<double>(1.0, false), 400, nl, q, {50, {}});
    records.erase(records.begin());  // drop n=0
    const auto report = cluster_report(records, nl);
    REQUIRE(report.clusters.size() == 2);
    CHECK(report.clusters[0].tight);
    CHECK(report.clusters[1].tight);
    // intervals tile the quantile range in order
    for (std::size_t i = 0; i < report.clusters[0].snapshots.size(); ++i) {
        CHECK(report.clusters[0].snapshots[i].hi == report.clusters[1].snapshots[i].lo);
        CHECK(report.clusters[0].snapshots[i].lo <= report.clusters[0].snapshots[i].hi);
    }
    CHECK(std::abs(report.clusters[0].drift_slope) < 0.01);
    CHECK(std::abs(report.clusters[1].drift_slope) < 0.01);

    const auto nlc = analyze(build_threshold_g(archetype_both_drift<double>()));
    auto recs_c = iterate(step_indicator<double>(1.0, false), 400, nlc, q, {50, {}});
    recs_c.erase(recs_c.begin());
    const auto report_c = cluster_report(recs_c, nlc);
    CHECK(std::abs(report_c.clusters[0].drift_slope) > 0.01);
    CHECK(std::abs(report_c.clusters[1].drift_slope) > 0.01);
}
