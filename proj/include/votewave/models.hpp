#pragma once
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "votewave/bernstein.hpp"

// Voting-model configurations and their recursion polynomials.
//
// A threshold model (offspring law p_d, thresholds zeta_{k,d}) propagates the
// L_v-th smallest child value up the tree and has recursion polynomial
//   g(x) = sum_d sum_k p_d zeta_{k,d} B_{k,d}(x).
// An outcome model (probabilities alpha_{k,d}) votes 1 with probability
// alpha_{k,d} when k of d children voted 1 and has
//   g(x) = sum_d sum_k p_d alpha_{k,d} b_{k,d}(x).
// The nonlinearity is f = g - x; its zeros in [0,1] organize the cluster and
// wave structure of the associated recursion F_{n+1} = g(q * F_n).

namespace votewave {

template <class S = double>
struct OffspringLaw {
    std::map<int, S> probs;  // d -> p_d, d >= 1

    int max_degree() const {
        int d0 = 0;
        for (const auto& [d, p] : probs)
            if (!(p == S(0))) d0 = std::max(d0, d);
        return d0;
    }

    void validate() const {
        if (probs.empty()) throw std::invalid_argument("offspring law is empty");
        S total(0);
        for (const auto& [d, p] : probs) {
            if (d < 1) throw std::invalid_argument("offspring counts must be >= 1");
            if (p < S(0)) throw std::invalid_argument("offspring probabilities must be >= 0");
            total += p;
        }
        if (to_double(total - S(1)) > 1e-12 || to_double(S(1) - total) > 1e-12)
            throw std::invalid_argument("offspring probabilities must sum to 1");
    }
};

template <class S = double>
struct ThresholdRule {
    // d -> (zeta_{1,d}, ..., zeta_{d,d})
    std::map<int, std::vector<S>> zeta;

    void validate(const OffspringLaw<S>& offspring) const {
        for (const auto& [d, p] : offspring.probs) {
            if (p == S(0)) continue;
            auto it = zeta.find(d);
            if (it == zeta.end() || static_cast<int>(it->second.size()) != d)
                throw std::invalid_argument("missing zeta row for offspring count " + std::to_string(d));
            S total(0);
            for (const S& z : it->second) {
                if (z < S(0) || z > S(1)) throw std::invalid_argument("zeta entries must lie in [0,1]");
                total += z;
            }
            if (std::abs(to_double(total - S(1))) > 1e-12)
                throw std::invalid_argument("zeta rows must sum to 1");
        }
    }
};

template <class S = double>
struct OutcomeRule {
    // d -> (alpha_{0,d}, ..., alpha_{d,d})
    std::map<int, std::vector<S>> alpha;

    void validate(const OffspringLaw<S>& offspring) const {
        for (const auto& [d, p] : offspring.probs) {
            if (p == S(0)) continue;
            auto it = alpha.find(d);
            if (it == alpha.end() || static_cast<int>(it->second.size()) != d + 1)
                throw std::invalid_argument("missing alpha row for offspring count " + std::to_string(d));
            const auto& row = it->second;
            if (std::abs(to_double(row.front())) > 1e-12)
                throw std::invalid_argument("alpha_{0,d} must be 0");
            if (std::abs(to_double(row.back() - S(1))) > 1e-12)
                throw std::invalid_argument("alpha_{d,d} must be 1");
            for (const S& a : row)
                if (a < S(0) || a > S(1)) throw std::invalid_argument("alpha entries must lie in [0,1]");
        }
    }
};

template <class S = double>
struct VotingModel {
    OffspringLaw<S> offspring;
    std::variant<ThresholdRule<S>, OutcomeRule<S>> rule;

    bool is_threshold() const { return std::holds_alternative<ThresholdRule<S>>(rule); }
    const ThresholdRule<S>& threshold() const { return std::get<ThresholdRule<S>>(rule); }
    const OutcomeRule<S>& outcome() const { return std::get<OutcomeRule<S>>(rule); }

    void validate() const {
        offspring.validate();
        if (is_threshold())
            threshold().validate(offspring);
        else
            outcome().validate(offspring);
    }
};

// g = sum_d sum_k p_d zeta_{k,d} B_{k,d}, every summand elevated to degree d0
// before accumulation so the result is a single uniform coefficient vector.
template <class S>
BernsteinPoly<S> build_threshold_g(const VotingModel<S>& model) {
    if (!model.is_threshold()) throw std::invalid_argument("model is not a threshold model");
    model.validate();
    const int d0 = model.offspring.max_degree();
    std::vector<S> acc(static_cast<std::size_t>(d0) + 1, S(0));
    for (const auto& [d, p] : model.offspring.probs) {
        if (p == S(0)) continue;
        const auto& row = model.threshold().zeta.at(d);
        for (int k = 1; k <= d; ++k) {
            if (row[k - 1] == S(0)) continue;
            BernsteinPoly<S> b = elevate_to(cumulative_basis<S>(k, d), d0);
            const S w = p * row[k - 1];
            for (int j = 0; j <= d0; ++j) acc[j] += w * b.coeffs[j];
        }
    }
    return BernsteinPoly<S>{std::move(acc)};
}

template <class S>
BernsteinPoly<S> build_outcome_g(const VotingModel<S>& model) {
    if (model.is_threshold()) throw std::invalid_argument("model is not an outcome model");
    model.validate();
    const int d0 = model.offspring.max_degree();
    std::vector<S> acc(static_cast<std::size_t>(d0) + 1, S(0));
    for (const auto& [d, p] : model.offspring.probs) {
        if (p == S(0)) continue;
        BernsteinPoly<S> row{model.outcome().alpha.at(d)};
        BernsteinPoly<S> b = elevate_to(row, d0);
        for (int j = 0; j <= d0; ++j) acc[j] += p * b.coeffs[j];
    }
    return BernsteinPoly<S>{std::move(acc)};
}

template <class S>
BernsteinPoly<S> build_g(const VotingModel<S>& model) {
    return model.is_threshold() ? build_threshold_g(model) : build_outcome_g(model);
}

// f = g - x in the Bernstein basis of g (the identity has coefficients k/d).
template <class S>
BernsteinPoly<S> nonlinearity_from_g(const BernsteinPoly<S>& g) {
    const int d = g.degree();
    std::vector<S> c(g.coeffs);
    for (int k = 0; k <= d; ++k) c[k] -= S(k) / S(d);
    return BernsteinPoly<S>{std::move(c)};
}

// Zero structure of f = g - x. zeros always includes the endpoints:
// 0 = zeros.front() < ... < zeros.back() = 1.
struct Nonlinearity {
    BernsteinPoly<double> g;
    BernsteinPoly<double> f;
    std::vector<double> zeros;
    double fp0 = 0.0;  // f'(0)
    double fp1 = 0.0;  // f'(1)
    bool monotone_g = false;
    bool bistable = false;

    int interior_zeros() const { return static_cast<int>(zeros.size()) - 2; }
    double theta() const {
        if (!bistable) throw std::logic_error("theta is defined for the bistable case only");
        return zeros[1];
    }
};

inline Nonlinearity analyze(const BernsteinPoly<double>& g) {
    if (g.degree() < 1) throw std::invalid_argument("recursion polynomial must have degree >= 1");
    if (std::abs(g.coeffs.front()) > 1e-9 || std::abs(g.coeffs.back() - 1.0) > 1e-9)
        throw std::invalid_argument("recursion polynomial must satisfy g(0)=0, g(1)=1");

    Nonlinearity nl;
    nl.g = g;
    nl.f = nonlinearity_from_g(g);

    bool f_zero = true;
    for (double c : nl.f.coeffs)
        if (std::abs(c) > 1e-12) f_zero = false;
    if (f_zero) throw std::invalid_argument("degenerate zero: f vanishes identically");

    const BernsteinPoly<double> fp = derivative(nl.f);
    nl.fp0 = fp.coeffs.front();
    nl.fp1 = fp.coeffs.back();

    // Scan a 1e-4 grid. Sign changes are bisected to 1e-12 and must be
    // simple (|f'| >= 1e-8), otherwise the crossing cannot be localized
    // reliably and we refuse to guess. A grid value that vanishes outright
    // with equal signs on both sides is an exact touch point and counts as
    // a zero (the half-drift archetype has one at 1/2); a tangency that
    // never reaches the grid stays invisible, as a sign scan must.
    std::vector<double> roots;
    const int n_scan = 10000;
    auto bisect = [&](double lo, double hi, bool rising) {
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            const double fm = eval(nl.f, mid);
            if (fm == 0.0) return mid;
            if ((fm < 0.0) == rising)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    int prev_sign = 0;
    double prev_x = 0.0;
    double touch_lo = 0.0, touch_hi = 0.0;
    bool touching = false;
    for (int i = 1; i < n_scan; ++i) {
        const double x = static_cast<double>(i) / n_scan;
        const double fx = eval(nl.f, x);
        const int sign = std::abs(fx) < 1e-13 ? 0 : (fx > 0.0 ? 1 : -1);
        if (sign == 0) {
            if (!touching) touch_lo = x;
            touch_hi = x;
            touching = true;
            continue;
        }
        if (prev_sign != 0 && sign != prev_sign) {
            const double r = bisect(prev_x, x, /*rising=*/sign > 0);
            if (std::abs(eval(fp, r)) < 1e-8) throw std::invalid_argument("degenerate zero");
            roots.push_back(r);
        } else if (prev_sign != 0 && touching && sign == prev_sign) {
            roots.push_back(0.5 * (touch_lo + touch_hi));
        }
        touching = false;
        prev_sign = sign;
        prev_x = x;
    }

    nl.zeros.push_back(0.0);
    nl.zeros.insert(nl.zeros.end(), roots.begin(), roots.end());
    nl.zeros.push_back(1.0);

    const BernsteinPoly<double> gp = derivative(g);
    nl.monotone_g = true;
    for (int i = 1; i <= 201; ++i)
        if (eval(gp, i / 202.0) <= 0.0) nl.monotone_g = false;
    nl.bistable = (nl.interior_zeros() == 1 && nl.fp0 < 0.0 && nl.fp1 < 0.0);
    return nl;
}

// Linear continuation of a bistable g outside [0,1]:
//   g(x) = x + f'(0) x        for x < 0,
//   g(x) = x + f'(1) (x - 1)  for x > 1.
// Threshold models have -1 <= f'(0), f'(1) < 0, so the extension is
// nondecreasing on all of R.
inline double extend_g(const Nonlinearity& nl, double x) {
    if (x < 0.0) return x + nl.fp0 * x;
    if (x > 1.0) return x + nl.fp1 * (x - 1.0);
    return eval(nl.g, x);
}

// ---------------------------------------------------------------------------
// Representability
// ---------------------------------------------------------------------------

enum class ReprStatus {
    representable,
    cap_reached,          // no violation found, elevation cap hit
    endpoint_violation,   // g(0) != 0 or g(1) != 1
    range_violation,      // sampled g value outside (0,1)
    not_monotone,         // sampled g' <= 0 inside (0,1) (threshold only)
};

inline const char* to_string(ReprStatus s) {
    switch (s) {
        case ReprStatus::representable: return "representable";
        case ReprStatus::cap_reached: return "cap reached";
        case ReprStatus::endpoint_violation: return "violates g(0)=0, g(1)=1";
        case ReprStatus::range_violation: return "violates 0<g<1";
        case ReprStatus::not_monotone: return "not monotone";
    }
    return "?";
}

template <class S>
struct Representation {
    ReprStatus status = ReprStatus::cap_reached;
    int degree = -1;
    std::vector<S> alpha;  // alpha_{0..d} when representable

    bool ok() const { return status == ReprStatus::representable; }

    OutcomeRule<S> outcome_rule() const {
        OutcomeRule<S> r;
        r.alpha[degree] = alpha;
        return r;
    }
    // zeta_{k,d} = alpha_{k,d} - alpha_{k-1,d}
    ThresholdRule<S> threshold_rule() const {
        std::vector<S> z(alpha.size() - 1);
        for (std::size_t k = 1; k < alpha.size(); ++k) z[k - 1] = alpha[k] - alpha[k - 1];
        ThresholdRule<S> r;
        r.zeta[degree] = std::move(z);
        return r;
    }
    VotingModel<S> model() const {
        VotingModel<S> m;
        m.offspring.probs[degree] = S(1);
        m.rule = outcome_rule();
        return m;
    }
    VotingModel<S> threshold_model() const {
        VotingModel<S> m;
        m.offspring.probs[degree] = S(1);
        m.rule = threshold_rule();
        return m;
    }
};

namespace detail {

template <class S>
bool repr_endpoints_ok(const BernsteinPoly<S>& g) {
    const double tol = is_exact_scalar<S> ? 0.0 : 1e-9;
    return std::abs(to_double(g.coeffs.front())) <= tol &&
           std::abs(to_double(g.coeffs.back() - S(1))) <= tol;
}

// A sampled point with g <= 0 or g >= 1 strictly inside (0,1) certifies that
// condition 0 < g < 1 fails.
template <class S>
bool repr_range_violated(const BernsteinPoly<S>& g) {
    const int n = 2000;
    for (int i = 1; i < n; ++i) {
        const S x = S(i) / S(n);
        const S v = eval(g, x);
        if constexpr (is_exact_scalar<S>) {
            if (v <= S(0) || v >= S(1)) return true;
        } else {
            if (v <= -1e-12 || v >= 1.0 + 1e-12) return true;
        }
    }
    return false;
}

template <class S>
bool repr_monotonicity_violated(const BernsteinPoly<S>& g) {
    const BernsteinPoly<S> gp = derivative(g);
    const int n = 2000;
    for (int i = 1; i < n; ++i) {
        const S x = S(i) / S(n);
        const S v = eval(gp, x);
        if constexpr (is_exact_scalar<S>) {
            if (v <= S(0)) return true;
        } else {
            if (v < -1e-12) return true;
        }
    }
    return false;
}

template <class S>
bool coeffs_in_unit_interval(const std::vector<S>& c) {
    const double tol = coeff_tol<S>();
    for (const S& b : c) {
        if (to_double(b) < -tol || to_double(b) > 1.0 + tol) return false;
    }
    return true;
}

template <class S>
bool coeffs_nondecreasing(const std::vector<S>& c) {
    const double tol = coeff_tol<S>();
    for (std::size_t k = 1; k < c.size(); ++k)
        if (to_double(c[k] - c[k - 1]) < -tol) return false;
    return true;
}

template <class S>
Representation<S> make_representation(BernsteinPoly<S> g) {
    Representation<S> r;
    r.status = ReprStatus::representable;
    r.degree = g.degree();
    r.alpha = std::move(g.coeffs);
    // Clamp rounding residue; the endpoint coefficients are pinned exactly.
    if constexpr (!is_exact_scalar<S>) {
        for (S& a : r.alpha) a = std::min(1.0, std::max(0.0, a));
    }
    r.alpha.front() = S(0);
    r.alpha.back() = S(1);
    return r;
}

}  // namespace detail

// Elevates until all coefficients lie in [0,1] (a random outcome model reads
// off alpha_{k,d} = beta_{k,d}(g)), or reports why that will never happen.
template <class S>
Representation<S> outcome_representation(const BernsteinPoly<S>& g, int d_cap = 256) {
    Representation<S> r;
    if (!detail::repr_endpoints_ok(g)) {
        r.status = ReprStatus::endpoint_violation;
        return r;
    }
    if (detail::repr_range_violated(g)) {
        r.status = ReprStatus::range_violation;
        return r;
    }
    BernsteinPoly<S> p = g;
    while (p.degree() <= d_cap) {
        if (detail::coeffs_in_unit_interval(p.coeffs)) return detail::make_representation(std::move(p));
        p = elevate(p);
    }
    r.status = ReprStatus::cap_reached;
    return r;
}

// As above but additionally requires nondecreasing coefficients; the single-d
// threshold model then uses zeta_{k,d} = alpha_{k,d} - alpha_{k-1,d}.
template <class S>
Representation<S> threshold_representation(const BernsteinPoly<S>& g, int d_cap = 256) {
    Representation<S> r;
    if (!detail::repr_endpoints_ok(g)) {
        r.status = ReprStatus::endpoint_violation;
        return r;
    }
    if (detail::repr_range_violated(g)) {
        r.status = ReprStatus::range_violation;
        return r;
    }
    if (detail::repr_monotonicity_violated(g)) {
        r.status = ReprStatus::not_monotone;
        return r;
    }
    BernsteinPoly<S> p = g;
    while (p.degree() <= d_cap) {
        if (detail::coeffs_in_unit_interval(p.coeffs) && detail::coeffs_nondecreasing(p.coeffs))
            return detail::make_representation(std::move(p));
        p = elevate(p);
    }
    r.status = ReprStatus::cap_reached;
    return r;
}

// ---------------------------------------------------------------------------
// Rescaling identity
// ---------------------------------------------------------------------------

namespace detail {

inline double multinomial3(int d, int l, int m) {
    // d! / (l! m! (d-m-l)!)
    return to_double(binomial<double>(d, l) * binomial<double>(d - l, m));
}

}  // namespace detail

// Cross-check of the stretched-nonlinearity expansion: evaluates
//   f((a2-a1)x + a1)
// directly against
//   sum_{d,k,l,m} p_d zeta_{k,d} multinom(d;l,m,d-m-l)
//       a1^l (a2-a1)^m (1-a2)^{d-m-l} B_{k-l,m}(x)  - (a2-a1)x + f(a1)
// and returns the maximum absolute difference over xs.
inline double verify_rescale_identity(const VotingModel<double>& model, double a1, double a2,
                                      const std::vector<double>& xs) {
    if (!model.is_threshold()) throw std::invalid_argument("rescale identity needs a threshold model");
    if (!(a1 < a2) || a1 < 0.0 || a2 > 1.0)
        throw std::invalid_argument("rescale identity needs 0 <= a1 < a2 <= 1");
    const BernsteinPoly<double> g = build_threshold_g(model);
    const BernsteinPoly<double> f = nonlinearity_from_g(g);
    const double fa1 = eval(f, a1);

    double worst = 0.0;
    for (double x : xs) {
        const double lhs = eval(f, (a2 - a1) * x + a1);
        double rhs = -(a2 - a1) * x + fa1;
        for (const auto& [d, p] : model.offspring.probs) {
            if (p == 0.0) continue;
            const auto& row = model.threshold().zeta.at(d);
            for (int k = 1; k <= d; ++k) {
                if (row[k - 1] == 0.0) continue;
                const double w = p * row[k - 1];
                for (int l = 0; l <= k - 1; ++l) {
                    for (int m = k - l; m <= d - l; ++m) {
                        const double coef = detail::multinomial3(d, l, m) * std::pow(a1, l) *
                                            std::pow(a2 - a1, m) * std::pow(1.0 - a2, d - m - l);
                        if (coef == 0.0) continue;
                        rhs += w * coef * eval(cumulative_basis<double>(k - l, m), x);
                    }
                }
            }
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Stock models
// ---------------------------------------------------------------------------

// p_2 = p, p_3 = 1-p, always adopt the second-smallest child value. For
// p < 1/2 the nonlinearity is bistable with interior zero 1/(2(1-p)).
template <class S = double>
VotingModel<S> binary_ternary_model(const S& p) {
    VotingModel<S> m;
    if (!(p == S(0))) m.offspring.probs[2] = p;
    if (!(p == S(1))) m.offspring.probs[3] = S(1) - p;
    ThresholdRule<S> rule;
    rule.zeta[2] = {S(0), S(1)};
    rule.zeta[3] = {S(0), S(1), S(0)};
    m.rule = rule;
    return m;
}

// Quaternary threshold presets with q = (1/4, 1/2, 1/4) increments: the three
// cluster archetypes (both tight near the interior quantile, one drifting,
// both drifting).
template <class S = double>
VotingModel<S> quaternary_model(const std::vector<S>& zeta_row) {
    if (zeta_row.size() != 4) throw std::invalid_argument("quaternary model needs 4 zeta entries");
    VotingModel<S> m;
    m.offspring.probs[4] = S(1);
    ThresholdRule<S> rule;
    rule.zeta[4] = zeta_row;
    m.rule = rule;
    return m;
}

template <class S = double>
VotingModel<S> archetype_tight() {
    return quaternary_model<S>({S(0), scalar_from_ratio<S>(1, 2), scalar_from_ratio<S>(1, 2), S(0)});
}

template <class S = double>
VotingModel<S> archetype_half_drift() {
    return quaternary_model<S>({scalar_from_ratio<S>(5, 16), scalar_from_ratio<S>(5, 48),
                                scalar_from_ratio<S>(19, 48), scalar_from_ratio<S>(3, 16)});
}

template <class S = double>
VotingModel<S> archetype_both_drift() {
    return quaternary_model<S>({scalar_from_ratio<S>(5, 16), scalar_from_ratio<S>(3, 16),
                                scalar_from_ratio<S>(3, 16), scalar_from_ratio<S>(5, 16)});
}

}  // namespace votewave
