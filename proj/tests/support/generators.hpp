#pragma once
#include <random>
#include <vector>

#include "votewave/increments.hpp"
#include "votewave/models.hpp"

// Seeded random generators for property-style tests.

namespace votewave::test {

inline std::vector<double> random_simplex(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::vector<double> w(n);
    double total = 0.0;
    for (double& x : w) {
        x = u(rng);
        total += x;
    }
    for (double& x : w) x /= total;
    // renormalize the residue onto the last entry so the sum is exact
    double acc = 0.0;
    for (int i = 0; i + 1 < n; ++i) acc += w[i];
    w[n - 1] = 1.0 - acc;
    return w;
}

// d0 >= 2: the only d0 = 1 threshold model is the identity recursion g = x,
// whose nonlinearity vanishes identically.
inline VotingModel<double> random_threshold_model(std::mt19937_64& rng, int d_max = 4) {
    std::uniform_int_distribution<int> dd(2, d_max);
    const int d0 = dd(rng);
    VotingModel<double> m;
    // up to two offspring counts with positive probability
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (d0 > 1 && u(rng) < 0.5) {
        std::uniform_int_distribution<int> d2(1, d0 - 1);
        const int other = d2(rng);
        const double p = 0.1 + 0.8 * u(rng);
        m.offspring.probs[d0] = p;
        m.offspring.probs[other] = 1.0 - p;
    } else {
        m.offspring.probs[d0] = 1.0;
    }
    ThresholdRule<double> rule;
    for (const auto& [d, p] : m.offspring.probs) rule.zeta[d] = random_simplex(rng, d);
    m.rule = rule;
    return m;
}

inline VotingModel<double> random_outcome_model(std::mt19937_64& rng, int d_max = 4,
                                                bool monotone = false) {
    std::uniform_int_distribution<int> dd(1, d_max);
    const int d0 = dd(rng);
    VotingModel<double> m;
    m.offspring.probs[d0] = 1.0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> alpha(d0 + 1);
    alpha[0] = 0.0;
    alpha[d0] = 1.0;
    for (int k = 1; k < d0; ++k) alpha[k] = u(rng);
    if (monotone) std::sort(alpha.begin(), alpha.end());
    OutcomeRule<double> rule;
    rule.alpha[d0] = std::move(alpha);
    m.rule = rule;
    return m;
}

inline BernsteinPoly<double> random_bernstein(std::mt19937_64& rng, int max_degree = 10,
                                              double lo = -2.0, double hi = 2.0) {
    std::uniform_int_distribution<int> dd(0, max_degree);
    std::uniform_real_distribution<double> u(lo, hi);
    const int d = dd(rng);
    std::vector<double> c(d + 1);
    for (double& x : c) x = u(rng);
    return BernsteinPoly<double>{std::move(c)};
}

inline IncrementLaw random_atomic_law(std::mt19937_64& rng, int max_atoms = 3) {
    std::uniform_int_distribution<int> na(1, max_atoms);
    const int n = na(rng);
    std::vector<int> pos;
    std::uniform_int_distribution<int> px(-2, 2);
    while (static_cast<int>(pos.size()) < n) {
        const int x = px(rng);
        if (std::find(pos.begin(), pos.end(), x) == pos.end()) pos.push_back(x);
    }
    const auto w = random_simplex(rng, n);
    std::vector<std::pair<double, double>> atoms;
    for (int i = 0; i < n; ++i) atoms.emplace_back(static_cast<double>(pos[i]), w[i]);
    return IncrementLaw::from_atoms(std::move(atoms));
}

inline IncrementLaw fig1_increments() {
    return IncrementLaw::from_atoms({{-1.0, 0.25}, {0.0, 0.5}, {1.0, 0.25}});
}

}  // namespace votewave::test
