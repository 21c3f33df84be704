#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "votewave/increments.hpp"
#include "votewave/models.hpp"
#include "votewave/rng.hpp"

// Monte Carlo simulation of voting models on branching random walks. Trees
// are traversed depth-first without being materialized; all randomness comes
// from the path-keyed counter RNG, so a replica's outcome depends only on
// (seed, replica index).

namespace votewave {

constexpr int kMaxOffspring = 32;

struct SimConfig {
    VotingModel<double> model;
    IncrementLaw increments;
    int depth = 0;
    std::int64_t replicas = 1;
    std::uint64_t seed = 0;

    void validate() const {
        model.validate();
        if (depth < 0) throw std::invalid_argument("depth must be >= 0");
        if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
        if (model.offspring.max_degree() > kMaxOffspring)
            throw std::invalid_argument("offspring counts beyond " + std::to_string(kMaxOffspring) +
                                        " are not supported by the simulator");
    }
};

struct EmpiricalCDF {
    std::vector<double> samples;  // sorted

    static EmpiricalCDF from_samples(std::vector<double> s) {
        std::sort(s.begin(), s.end());
        return EmpiricalCDF{std::move(s)};
    }

    std::size_t count() const { return samples.size(); }

    // fraction of samples <= x
    double value(double x) const {
        const auto it = std::upper_bound(samples.begin(), samples.end(), x);
        return static_cast<double>(it - samples.begin()) / static_cast<double>(samples.size());
    }

    double quantile(double a) const {
        if (samples.empty()) throw std::invalid_argument("empty sample set");
        if (a <= 0.0) return samples.front();
        if (a >= 1.0) return samples.back();
        const auto n = static_cast<double>(samples.size());
        auto k = static_cast<std::size_t>(std::ceil(a * n));
        k = std::min(std::max<std::size_t>(k, 1), samples.size());
        return samples[k - 1];
    }

    double median() const { return quantile(0.5); }
};

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

namespace detail {
inline int& worker_override() {
    static int v = 0;
    return v;
}
}  // namespace detail

inline void set_worker_count(int n) { detail::worker_override() = n; }

inline int worker_count() {
    if (detail::worker_override() > 0) return detail::worker_override();
    if (const char* env = std::getenv("VOTEWAVE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

// Evaluates fn(replica) for replica = 0..n-1. Results land in replica order
// regardless of the worker count or schedule.
template <class T, class F>
std::vector<T> map_replicas(std::int64_t n, F&& fn) {
    std::vector<T> out(static_cast<std::size_t>(n));
    const int workers = std::min<std::int64_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::int64_t r = 0; r < n; ++r) out[r] = fn(r);
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = n * w / workers;
        const std::int64_t hi = n * (w + 1) / workers;
        pool.emplace_back([&out, &fn, lo, hi] {
            for (std::int64_t r = lo; r < hi; ++r) out[r] = fn(r);
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

// ---------------------------------------------------------------------------
// Model samplers
// ---------------------------------------------------------------------------

namespace detail {

struct ThresholdSampler {
    std::vector<std::pair<double, int>> offspring_cdf;
    std::array<std::vector<double>, kMaxOffspring + 1> zeta_cdf;

    explicit ThresholdSampler(const VotingModel<double>& model) {
        double run = 0.0;
        for (const auto& [d, p] : model.offspring.probs) {
            if (p == 0.0) continue;
            run += p;
            offspring_cdf.emplace_back(run, d);
            const auto& row = model.threshold().zeta.at(d);
            auto& z = zeta_cdf[d];
            z.resize(d);
            double zr = 0.0;
            for (int k = 0; k < d; ++k) {
                zr += row[k];
                z[k] = zr;
            }
            z.back() = 1.0;
        }
        offspring_cdf.back().first = 1.0;
    }

    int sample_d(double u) const {
        for (const auto& [c, d] : offspring_cdf)
            if (u < c) return d;
        return offspring_cdf.back().second;
    }
    // 1-based order-statistic index
    int sample_level(int d, double u) const {
        const auto& z = zeta_cdf[d];
        for (int k = 0; k < d; ++k)
            if (u < z[k]) return k + 1;
        return d;
    }
};

struct OutcomeSampler {
    std::vector<std::pair<double, int>> offspring_cdf;
    std::array<std::vector<double>, kMaxOffspring + 1> alpha;

    explicit OutcomeSampler(const VotingModel<double>& model) {
        double run = 0.0;
        for (const auto& [d, p] : model.offspring.probs) {
            if (p == 0.0) continue;
            run += p;
            offspring_cdf.emplace_back(run, d);
            alpha[d] = model.outcome().alpha.at(d);
        }
        offspring_cdf.back().first = 1.0;
    }

    int sample_d(double u) const {
        for (const auto& [c, d] : offspring_cdf)
            if (u < c) return d;
        return offspring_cdf.back().second;
    }
};

// k-th smallest (1-based) of v[0..d-1]; ties broken by child index, which the
// insertion sort preserves. Ties carry probability zero under a density but
// do occur for atomic increments.
inline double kth_smallest(double* v, int d, int k) {
    for (int i = 1; i < d; ++i) {
        const double x = v[i];
        int j = i - 1;
        while (j >= 0 && v[j] > x) {
            v[j + 1] = v[j];
            --j;
        }
        v[j + 1] = x;
    }
    return v[k - 1];
}

// Value of node v relative to its own position, i.e. phi(v) - S_v.
inline double threshold_value_rel(const ThresholdSampler& ms, const IncrementLaw& law,
                                  const NodeRng& rng, int depth_left) {
    if (depth_left == 0) return 0.0;
    const int d = ms.sample_d(rng.unit(kDrawOffspring));
    double vals[kMaxOffspring];
    for (int i = 0; i < d; ++i) {
        const NodeRng c = rng.child(i);
        vals[i] = law.sample(c.unit(kDrawIncrement)) + threshold_value_rel(ms, law, c, depth_left - 1);
    }
    const int level = ms.sample_level(d, rng.unit(kDrawThreshold));
    return kth_smallest(vals, d, level);
}

}  // namespace detail

inline std::vector<double> sample_threshold_values(const SimConfig& cfg) {
    cfg.validate();
    if (!cfg.model.is_threshold()) throw std::invalid_argument("threshold simulation needs a threshold model");
    const detail::ThresholdSampler ms(cfg.model);
    return map_replicas<double>(cfg.replicas, [&](std::int64_t r) {
        return detail::threshold_value_rel(ms, cfg.increments, NodeRng::root(cfg.seed, r), cfg.depth);
    });
}

// Law of M_n under the threshold model, one sample per replica.
inline EmpiricalCDF simulate_threshold(const SimConfig& cfg) {
    return EmpiricalCDF::from_samples(sample_threshold_values(cfg));
}

// ---------------------------------------------------------------------------
// Outcome voting
// ---------------------------------------------------------------------------

namespace detail {

inline int outcome_vote(const OutcomeSampler& ms, const IncrementLaw& law, const NodeRng& rng,
                        int depth_left, double pos) {
    if (depth_left == 0) return pos >= 0.0 ? 1 : 0;
    const int d = ms.sample_d(rng.unit(kDrawOffspring));
    int ones = 0;
    for (int i = 0; i < d; ++i) {
        const NodeRng c = rng.child(i);
        ones += outcome_vote(ms, law, c, depth_left - 1, pos + law.sample(c.unit(kDrawIncrement)));
    }
    const double a = ms.alpha[d][ones];
    if (a >= 1.0) return 1;
    if (a <= 0.0) return 0;
    return rng.unit(kDrawVote) < a ? 1 : 0;
}

}  // namespace detail

// Fraction of replicas whose root votes 1 when the walk starts at x; this
// estimates u_n(x) of the outcome recursion.
inline double simulate_outcome_vote(const SimConfig& cfg, double x) {
    cfg.validate();
    if (cfg.model.is_threshold()) throw std::invalid_argument("outcome simulation needs an outcome model");
    const detail::OutcomeSampler ms(cfg.model);
    const auto votes = map_replicas<int>(cfg.replicas, [&](std::int64_t r) {
        return detail::outcome_vote(ms, cfg.increments, NodeRng::root(cfg.seed, r), cfg.depth, x);
    });
    std::int64_t ones = 0;
    for (int v : votes) ones += v;
    return static_cast<double>(ones) / static_cast<double>(cfg.replicas);
}

// ---------------------------------------------------------------------------
// Min-max / max-min over binary subtrees
// ---------------------------------------------------------------------------

struct MinMaxSample {
    double minmax = 0.0;  // smallest maximum over rooted full binary subtrees
    double maxmin = 0.0;  // largest minimum over rooted full binary subtrees
};

namespace detail {

inline MinMaxSample minmax_value_rel(const ThresholdSampler& ms, const IncrementLaw& law,
                                     const NodeRng& rng, int depth_left) {
    if (depth_left == 0) return {};
    const int d = ms.sample_d(rng.unit(kDrawOffspring));
    if (d != 2 && d != 3)
        throw std::invalid_argument("binary subtree statistics need offspring counts in {2,3}");
    MinMaxSample child[3];
    double lo[3], hi[3];
    for (int i = 0; i < d; ++i) {
        const NodeRng c = rng.child(i);
        const double inc = law.sample(c.unit(kDrawIncrement));
        child[i] = minmax_value_rel(ms, law, c, depth_left - 1);
        lo[i] = inc + child[i].minmax;
        hi[i] = inc + child[i].maxmin;
    }
    MinMaxSample out;
    // A binary subtree picks two children; optimize over the pairs.
    double best_minmax = std::numeric_limits<double>::infinity();
    double best_maxmin = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            best_minmax = std::min(best_minmax, std::max(lo[i], lo[j]));
            best_maxmin = std::max(best_maxmin, std::min(hi[i], hi[j]));
        }
    out.minmax = best_minmax;
    out.maxmin = best_maxmin;
    return out;
}

}  // namespace detail

// Per-replica (min-max, max-min) values on the same realized trees the
// threshold run sees for the same config.
inline std::vector<MinMaxSample> sample_minmax_values(const SimConfig& cfg) {
    cfg.validate();
    if (!cfg.model.is_threshold()) throw std::invalid_argument("binary subtree statistics need a threshold model");
    for (const auto& [d, p] : cfg.model.offspring.probs)
        if (p > 0.0 && d != 2 && d != 3)
            throw std::invalid_argument("binary subtree statistics need offspring counts in {2,3}");
    const detail::ThresholdSampler ms(cfg.model);
    return map_replicas<MinMaxSample>(cfg.replicas, [&](std::int64_t r) {
        return detail::minmax_value_rel(ms, cfg.increments, NodeRng::root(cfg.seed, r), cfg.depth);
    });
}

inline EmpiricalCDF minmax_binary(const SimConfig& cfg) {
    auto vals = sample_minmax_values(cfg);
    std::vector<double> v(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) v[i] = vals[i].minmax;
    return EmpiricalCDF::from_samples(std::move(v));
}

inline EmpiricalCDF maxmin_binary(const SimConfig& cfg) {
    auto vals = sample_minmax_values(cfg);
    std::vector<double> v(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) v[i] = vals[i].maxmin;
    return EmpiricalCDF::from_samples(std::move(v));
}

// ---------------------------------------------------------------------------
// Coupled one-step comparison
// ---------------------------------------------------------------------------

struct CoupledPair {
    double m_n = 0.0;
    double m_n1 = 0.0;
};

namespace detail {

// Runs depth n and depth n+1 on the identical tree, reusing every offspring
// count, increment and threshold choice of the shared part.
inline CoupledPair coupled_value_rel(const ThresholdSampler& ms, const IncrementLaw& law,
                                     const NodeRng& rng, int depth_left) {
    const int d = ms.sample_d(rng.unit(kDrawOffspring));
    const int level = ms.sample_level(d, rng.unit(kDrawThreshold));
    double lower[kMaxOffspring], upper[kMaxOffspring];
    if (depth_left == 0) {
        // Depth-n leaf: the shallow run stops here, the deep run does one
        // more generation whose leaf values are the child increments.
        for (int i = 0; i < d; ++i) {
            const NodeRng c = rng.child(i);
            upper[i] = law.sample(c.unit(kDrawIncrement));
        }
        return {0.0, kth_smallest(upper, d, level)};
    }
    for (int i = 0; i < d; ++i) {
        const NodeRng c = rng.child(i);
        const double inc = law.sample(c.unit(kDrawIncrement));
        const CoupledPair p = coupled_value_rel(ms, law, c, depth_left - 1);
        lower[i] = inc + p.m_n;
        upper[i] = inc + p.m_n1;
    }
    return {kth_smallest(lower, d, level), kth_smallest(upper, d, level)};
}

}  // namespace detail

inline std::vector<CoupledPair> sample_coupled_pairs(const SimConfig& cfg) {
    cfg.validate();
    if (!cfg.model.is_threshold()) throw std::invalid_argument("coupled run needs a threshold model");
    const detail::ThresholdSampler ms(cfg.model);
    return map_replicas<CoupledPair>(cfg.replicas, [&](std::int64_t r) {
        return detail::coupled_value_rel(ms, cfg.increments, NodeRng::root(cfg.seed, r), cfg.depth);
    });
}

// max over replicas of |M_{n+1} - M_n| on coupled trees; the almost sure
// bound is the support radius C_q.
inline double coupled_step_bound(const SimConfig& cfg) {
    double worst = 0.0;
    for (const CoupledPair& p : sample_coupled_pairs(cfg)) worst = std::max(worst, std::abs(p.m_n1 - p.m_n));
    return worst;
}

// ---------------------------------------------------------------------------
// Order-statistic recursion check
// ---------------------------------------------------------------------------

struct OrderStatCheck {
    double lhs = 0.0;  // E[X_(k) of d]
    double rhs = 0.0;  // (k/(d+1)) E[X_(k+1) of d+1] + ((d+1-k)/(d+1)) E[X_(k) of d+1]
    double lhs_se = 0.0;
    double rhs_se = 0.0;

    bool agrees(double n_sigma = 4.0) const {
        return std::abs(lhs - rhs) <= n_sigma * std::sqrt(lhs_se * lhs_se + rhs_se * rhs_se);
    }
};

inline OrderStatCheck order_stat_identity_check(int d, int k, const IncrementLaw& law,
                                                std::int64_t replicas, std::uint64_t seed = 0x05d5) {
    if (k < 1 || k > d) throw std::invalid_argument("order statistic index out of range");
    if (d + 1 > kMaxOffspring) throw std::invalid_argument("d too large");
    const auto tuples = map_replicas<std::array<double, 2>>(replicas, [&](std::int64_t r) {
        const NodeRng rng = NodeRng::root(seed, r);
        double v[kMaxOffspring];
        for (int i = 0; i <= d; ++i) v[i] = law.sample(rng.child(i).unit(kDrawIncrement));
        // One (d+1)-tuple serves both sides: its first d entries form the
        // d-tuple, re-sorted independently.
        double w[kMaxOffspring];
        std::copy(v, v + d, w);
        const double lhs = detail::kth_smallest(w, d, k);
        detail::kth_smallest(v, d + 1, 1);  // sorts v
        const double rhs = (static_cast<double>(k) * v[k] + static_cast<double>(d + 1 - k) * v[k - 1]) /
                           static_cast<double>(d + 1);
        return std::array<double, 2>{lhs, rhs};
    });
    OrderStatCheck out;
    long double s1 = 0, s2 = 0, q1 = 0, q2 = 0;
    for (const auto& t : tuples) {
        s1 += t[0];
        s2 += t[1];
        q1 += t[0] * t[0];
        q2 += t[1] * t[1];
    }
    const auto n = static_cast<long double>(tuples.size());
    out.lhs = static_cast<double>(s1 / n);
    out.rhs = static_cast<double>(s2 / n);
    out.lhs_se = std::sqrt(std::max(0.0, static_cast<double>(q1 / n - (s1 / n) * (s1 / n))) / tuples.size());
    out.rhs_se = std::sqrt(std::max(0.0, static_cast<double>(q2 / n - (s2 / n) * (s2 / n))) / tuples.size());
    return out;
}

// ---------------------------------------------------------------------------
// Cluster-increment estimator
// ---------------------------------------------------------------------------

// Monte Carlo version of the two sides of the cluster bound: the expected
// change of the hinge functional psi_{s,n} between generations n and n+1,
// and the weighted sum of conditional order-statistic gaps
//   sum_{k=1}^{D-1} beta_{k,D}(ft_s) E[M_(k+1) - M_(k) | both in I_{s,n}].
// Their difference is bounded by C_q.
struct ClusteringEstimate {
    double sigma_hat = 0.0;
    double sigma_se = 0.0;
    double psi_diff = 0.0;
    double psi_se = 0.0;
    double c_q = 0.0;

    bool within_bound(double n_sigma = 4.0) const {
        const double se = std::sqrt(sigma_se * sigma_se + psi_se * psi_se);
        return std::abs(psi_diff - sigma_hat) <= c_q + n_sigma * se;
    }
};

namespace detail {

inline double psi_hinge(double x, double lo, double hi) {
    if (x <= lo) return hi - lo;
    if (x <= hi) return hi - x;
    return 0.0;
}

inline std::size_t bounded_index(std::uint64_t bits, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(bits) * n) >> 64);
}

}  // namespace detail

// Coupled population dynamics for the distributional recursion
//   M_{k+1} =d (M_{k,1} + X_1, ..., M_{k,d} + X_d)_(L):
// a pool of (M_k, M_{k+1}) pairs advances one generation at a time by
// resampling d parents, sharing the offspring count, increments and
// threshold choice between the two coordinates. Direct tree simulation is
// exponential in the depth; the pool reaches large n at O(n * pool * d)
// cost (at the price of O(1/pool) resampling correlation).
inline std::vector<CoupledPair> sample_coupled_population(const SimConfig& cfg) {
    cfg.validate();
    if (!cfg.model.is_threshold()) throw std::invalid_argument("coupled run needs a threshold model");
    const detail::ThresholdSampler ms(cfg.model);
    const auto pool_size = static_cast<std::size_t>(cfg.replicas);

    std::vector<CoupledPair> pool(pool_size);
    for (int gen = 0; gen <= cfg.depth; ++gen) {
        const NodeRng gen_rng = NodeRng::root(cfg.seed ^ 0xc0bbed5eedULL, static_cast<std::uint64_t>(gen));
        std::vector<CoupledPair> next(pool_size);
        const bool first = (gen == 0);
        for (std::size_t slot = 0; slot < pool_size; ++slot) {
            const NodeRng rng = gen_rng.child(static_cast<std::uint32_t>(slot));
            const int d = ms.sample_d(rng.unit(kDrawOffspring));
            const int level = ms.sample_level(d, rng.unit(kDrawThreshold));
            double lower[kMaxOffspring], upper[kMaxOffspring];
            for (int i = 0; i < d; ++i) {
                const double inc = cfg.increments.sample(rng.unit(8 + 2 * i));
                if (first) {
                    // pairs start as (M_0, M_1) = (0, order statistic of increments)
                    lower[i] = 0.0;
                    upper[i] = inc;
                } else {
                    const std::size_t j = detail::bounded_index(rng.bits(9 + 2 * i), pool_size);
                    lower[i] = inc + pool[j].m_n;
                    upper[i] = inc + pool[j].m_n1;
                }
            }
            next[slot] = first ? CoupledPair{0.0, detail::kth_smallest(upper, d, level)}
                               : CoupledPair{detail::kth_smallest(lower, d, level),
                                             detail::kth_smallest(upper, d, level)};
        }
        pool = std::move(next);
    }
    return pool;
}

// Marginal M_n samples from the coupled pool; the route to deep laws that
// the exponentially sized tree cannot reach.
inline EmpiricalCDF simulate_threshold_population(const SimConfig& cfg) {
    const auto pairs = sample_coupled_population(cfg);
    std::vector<double> v(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) v[i] = pairs[i].m_n;
    return EmpiricalCDF::from_samples(std::move(v));
}

inline ClusteringEstimate clustering_bound_estimate(const SimConfig& cfg, int s, int D) {
    cfg.validate();
    if (!cfg.model.is_threshold()) throw std::invalid_argument("cluster estimate needs a threshold model");
    const Nonlinearity nl = analyze(build_threshold_g(cfg.model));
    if (s < 1 || s > nl.interior_zeros() + 1) throw std::invalid_argument("cluster index out of range");
    if (D < cfg.model.offspring.max_degree()) throw std::invalid_argument("D must be >= the maximal offspring count");

    const auto pairs = sample_coupled_population(cfg);
    std::vector<double> mn(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) mn[i] = pairs[i].m_n;
    EmpiricalCDF ecdf = EmpiricalCDF::from_samples(mn);

    const double lo = ecdf.quantile(nl.zeros[s - 1]);
    const double hi = ecdf.quantile(nl.zeros[s]);

    ClusteringEstimate out;
    out.c_q = cfg.increments.support_radius();

    {
        long double acc = 0, acc2 = 0;
        for (const auto& p : pairs) {
            const double dpsi = detail::psi_hinge(p.m_n1, lo, hi) - detail::psi_hinge(p.m_n, lo, hi);
            acc += dpsi;
            acc2 += dpsi * dpsi;
        }
        const auto n = static_cast<long double>(pairs.size());
        out.psi_diff = static_cast<double>(acc / n);
        out.psi_se =
            std::sqrt(std::max(0.0, static_cast<double>(acc2 / n - (acc / n) * (acc / n))) / pairs.size());
    }

    std::vector<double> pool;
    for (const auto& p : pairs)
        if (p.m_n >= lo && p.m_n <= hi) pool.push_back(p.m_n);
    if (static_cast<std::int64_t>(pool.size()) < 100LL * D)
        throw std::runtime_error("insufficient conditioning mass");

    BernsteinPoly<double> ft =
        rescale_nonlinearity(nl.f, nl.zeros[s - 1], nl.zeros[s]);
    ft = elevate_to(ft, D);

    std::mt19937_64 shuffler(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(pool.begin(), pool.end(), shuffler);
    const std::size_t groups = pool.size() / D;
    long double acc = 0, acc2 = 0;
    std::vector<double> tuple(D);
    for (std::size_t gidx = 0; gidx < groups; ++gidx) {
        std::copy(pool.begin() + gidx * D, pool.begin() + (gidx + 1) * D, tuple.begin());
        std::sort(tuple.begin(), tuple.end());
        double w = 0.0;
        for (int k = 1; k <= D - 1; ++k) w += ft.coeffs[k] * (tuple[k] - tuple[k - 1]);
        acc += w;
        acc2 += w * w;
    }
    const auto g = static_cast<long double>(groups);
    out.sigma_hat = static_cast<double>(acc / g);
    out.sigma_se = std::sqrt(std::max(0.0, static_cast<double>(acc2 / g - (acc / g) * (acc / g))) / groups);
    return out;
}

}  // namespace votewave
