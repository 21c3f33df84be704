#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "votewave/brw_mc.hpp"
#include "votewave/increments.hpp"
#include "votewave/models.hpp"

// Deterministic iteration of F_{n+1} = g(q * F_n) on a growing grid.
//
// Grid functions are right-continuous with F(x) = P[M <= x]; values are
// stored at x0 + i*h with implicit tails tail_lo left of the domain and
// tail_hi right of it. For a CDF the tails are 0 and 1; super/sub-solution
// machinery reuses the same representation with offset tails.

namespace votewave {

constexpr double kTailEps = 1e-14;
constexpr double kMassEps = 1e-9;

template <class S = double>
struct GridFn {
    double x0 = 0.0;
    double h = 1.0;
    std::vector<S> v;
    S tail_lo = S(0);
    S tail_hi = S(1);
    // lattice: the represented law puts mass on grid points (atomic q);
    // otherwise values sample a continuous function and cells interpolate.
    bool lattice = false;

    long size() const { return static_cast<long>(v.size()); }
    double x(long i) const { return x0 + static_cast<double>(i) * h; }

    const S& at(long i) const {
        if (i < 0) return tail_lo;
        if (i >= size()) return tail_hi;
        return v[static_cast<std::size_t>(i)];
    }

    long index_of(double xq, double tol = 1e-9) const {
        const double t = (xq - x0) / h;
        const long i = static_cast<long>(std::llround(t));
        if (std::abs(t - static_cast<double>(i)) > tol)
            throw std::invalid_argument("point is not on the grid");
        return i;
    }
};

using GridCDF = GridFn<double>;

// Linear interpolation with clamped tails.
inline double value_at(const GridCDF& F, double xq) {
    const double t = (xq - F.x0) / F.h;
    const double fl = std::floor(t);
    const long i = static_cast<long>(fl);
    const double frac = t - fl;
    const double a = F.at(i);
    if (frac == 0.0) return a;
    return a + frac * (F.at(i + 1) - a);
}

inline void validate_cdf(const GridCDF& F, double tol = 1e-12) {
    for (std::size_t i = 0; i < F.v.size(); ++i) {
        if (F.v[i] < -tol || F.v[i] > 1.0 + tol) throw std::invalid_argument("CDF values must lie in [0,1]");
        if (i > 0 && F.v[i] < F.v[i - 1] - tol) throw std::invalid_argument("CDF values must be nondecreasing");
    }
}

// On-grid representation of the step 1(x >= 0). Atomic increment laws put
// mass on grid points, so the jump value at 0 is 1; for densities the
// half-value convention makes the trapezoid quadrature of the jump agree
// with the principal-value integral (and keeps symmetric problems exactly
// symmetric on the grid).
template <class S = double>
GridFn<S> step_indicator(double h, bool half_jump, long margin = 1) {
    GridFn<S> F;
    F.h = h;
    F.x0 = -static_cast<double>(margin) * h;
    F.lattice = !half_jump;
    F.v.assign(static_cast<std::size_t>(2 * margin + 1), S(0));
    for (long i = margin; i <= 2 * margin; ++i) F.v[static_cast<std::size_t>(i)] = S(1);
    if (half_jump) F.v[static_cast<std::size_t>(margin)] = scalar_from_ratio<S>(1, 2);
    return F;
}

template <class S = double>
GridFn<S> step_initial(const IncrementLaw& q, double h) {
    return step_indicator<S>(h, q.kind == IncrementLaw::Kind::density);
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

// (q * F)(x) = sum_i w_i F(x - m_i h) for exact grid-aligned atoms, passed
// as (grid offset m_i, weight w_i). Works for any scalar backend.
template <class S>
GridFn<S> convolve_atoms(const GridFn<S>& F, const std::vector<std::pair<long, S>>& atoms) {
    if (atoms.empty()) throw std::invalid_argument("empty atom list");
    long lo_off = atoms.front().first, hi_off = atoms.front().first;
    for (const auto& [m, w] : atoms) {
        lo_off = std::min(lo_off, m);
        hi_off = std::max(hi_off, m);
    }
    GridFn<S> out;
    out.h = F.h;
    out.tail_lo = F.tail_lo;
    out.tail_hi = F.tail_hi;
    out.lattice = F.lattice;
    // output informative on [x0 + lo_off*h, xend + hi_off*h]
    const long n_out = F.size() + (hi_off - lo_off);
    out.x0 = F.x0 + static_cast<double>(lo_off) * F.h;
    out.v.assign(static_cast<std::size_t>(n_out), S(0));
    for (long i = 0; i < n_out; ++i) {
        S acc(0);
        for (const auto& [m, w] : atoms) acc += w * F.at(i + lo_off - m);
        out.v[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

namespace detail {

struct DiscreteKernel {
    long lo_off = 0;            // (K*u)(x_i) = sum_j w[j] u(x_{i - (lo_off + j)})
    std::vector<double> w;
};

inline std::vector<std::pair<long, double>> atom_offsets(const IncrementLaw& q, double h) {
    std::vector<std::pair<long, double>> atoms;
    for (const auto& [x, wt] : q.atoms) {
        const double t = x / h;
        const long m = static_cast<long>(std::llround(t));
        if (std::abs(t - static_cast<double>(m)) > 1e-9)
            throw std::invalid_argument("atom positions must be integer multiples of the grid step");
        atoms.emplace_back(m, wt);
    }
    return atoms;
}

// Trapezoid weights of the density on the shared grid.
inline DiscreteKernel density_kernel(const IncrementLaw& q, double h) {
    if (std::abs(q.h - h) > 1e-12 * std::max(1.0, h))
        throw std::invalid_argument("density grid spacing must equal the CDF grid spacing");
    const double t = q.x0 / h;
    const long m0 = static_cast<long>(std::llround(t));
    if (std::abs(t - static_cast<double>(m0)) > 1e-9)
        throw std::invalid_argument("density grid must align with the CDF grid");
    DiscreteKernel k;
    k.lo_off = m0;
    k.w.resize(q.pdf.size());
    for (std::size_t j = 0; j < q.pdf.size(); ++j) {
        const double wt = (j == 0 || j + 1 == q.pdf.size()) ? 0.5 : 1.0;
        k.w[j] = wt * h * q.pdf[j];
    }
    return k;
}

inline GridFn<double> convolve_kernel(const GridFn<double>& F, const DiscreteKernel& k) {
    GridFn<double> out;
    out.h = F.h;
    out.tail_lo = F.tail_lo;
    out.tail_hi = F.tail_hi;
    out.lattice = F.lattice;
    const long m = static_cast<long>(k.w.size());
    const long lo_off = k.lo_off, hi_off = k.lo_off + m - 1;
    const long n_out = F.size() + (hi_off - lo_off);
    out.x0 = F.x0 + static_cast<double>(lo_off) * F.h;
    out.v.assign(static_cast<std::size_t>(n_out), 0.0);
    const long n_in = F.size();
    for (long i = 0; i < n_out; ++i) {
        // F argument index: i + lo_off - (lo_off + j) = i - j
        long double acc = 0.0L;
        const long j_lo = std::max<long>(0, i - n_in + 1);
        const long j_hi = std::min<long>(m - 1, i);
        for (long j = 0; j < j_lo; ++j) acc += k.w[static_cast<std::size_t>(j)] * F.tail_hi;
        for (long j = j_lo; j <= j_hi; ++j)
            acc += k.w[static_cast<std::size_t>(j)] * F.v[static_cast<std::size_t>(i - j)];
        for (long j = j_hi + 1; j < m; ++j) acc += k.w[static_cast<std::size_t>(j)] * F.tail_lo;
        out.v[static_cast<std::size_t>(i)] = static_cast<double>(acc);
    }
    return out;
}

}  // namespace detail

// The inner step of the recursion: exact shifted sums for atomic laws,
// trapezoid quadrature for densities. The output domain widens by the
// support of q on each side. Atom positions that do not sit on the grid are
// an error; atoms are never silently interpolated.
inline GridCDF convolve(const GridCDF& F, const IncrementLaw& q) {
    if (q.kind == IncrementLaw::Kind::atomic) return convolve_atoms(F, detail::atom_offsets(q, F.h));
    return detail::convolve_kernel(F, detail::density_kernel(q, F.h));
}

template <class S>
GridFn<S> apply_poly(const GridFn<S>& F, const BernsteinPoly<S>& g) {
    GridFn<S> out = F;
    for (S& val : out.v) val = eval(g, val);
    out.tail_lo = eval(g, F.tail_lo);
    out.tail_hi = eval(g, F.tail_hi);
    return out;
}

// One full update F -> g(q * F). Values outside [0,1] (super/sub-solution
// offsets) go through the linear extension of g.
inline GridCDF step(const GridCDF& F, const Nonlinearity& nl, const IncrementLaw& q) {
    GridCDF out = convolve(F, q);
    for (double& val : out.v) val = extend_g(nl, val);
    out.tail_lo = extend_g(nl, out.tail_lo);
    out.tail_hi = extend_g(nl, out.tail_hi);
    return out;
}

// Clamp values within kTailEps of the tails and trim the stored domain to
// the transition zone plus a 2 C_q margin; memory stays proportional to the
// front width.
inline void clamp_and_trim(GridCDF& F, double support_radius) {
    for (double& val : F.v) {
        if (val < kTailEps) val = 0.0;
        if (val > 1.0 - kTailEps) val = 1.0;
    }
    const long n = F.size();
    long first = 0;
    while (first < n && F.v[static_cast<std::size_t>(first)] == 0.0) ++first;
    long last = n - 1;
    while (last >= 0 && F.v[static_cast<std::size_t>(last)] == 1.0) --last;
    const long margin = static_cast<long>(std::ceil(2.0 * support_radius / F.h)) + 1;
    long lo = std::max<long>(0, first - margin);
    long hi = std::min<long>(n - 1, last + margin);
    if (lo > hi) {  // degenerate: everything clamped; keep one point
        lo = std::min(n - 1, std::max<long>(0, first - 1));
        hi = lo;
    }
    if (lo == 0 && hi == n - 1) return;
    std::vector<double> keep(F.v.begin() + lo, F.v.begin() + hi + 1);
    F.x0 += static_cast<double>(lo) * F.h;
    F.v = std::move(keep);
}

struct IterateOptions {
    long record_every = 0;  // 0: record only the final state
    std::function<void(long, const GridCDF&)> on_step;  // called every step when set
};

// n applications of step with tail clamping; returns the recorded states
// (pairs of generation index and CDF).
inline std::vector<std::pair<long, GridCDF>> iterate(const GridCDF& F0, long n, const Nonlinearity& nl,
                                                     const IncrementLaw& q,
                                                     const IterateOptions& opts = {}) {
    std::vector<std::pair<long, GridCDF>> records;
    GridCDF F = F0;
    const double cq = q.support_radius();
    if (opts.record_every > 0 || n == 0) records.emplace_back(0, F);
    for (long m = 1; m <= n; ++m) {
        F = step(F, nl, q);
        clamp_and_trim(F, cq);
        if (opts.on_step) opts.on_step(m, F);
        if ((opts.record_every > 0 && m % opts.record_every == 0) || m == n) {
            if (records.empty() || records.back().first != m) records.emplace_back(m, F);
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Quantiles and conditioning
// ---------------------------------------------------------------------------

// Smallest x with F(x) >= a: the first grid node for lattice laws (mass
// sits on nodes), linear interpolation between the bracketing nodes
// otherwise.
inline double quantile(const GridCDF& F, double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("quantile level must lie in (0,1)");
    const long n = F.size();
    for (long i = 0; i < n; ++i) {
        const double vi = F.v[static_cast<std::size_t>(i)];
        if (vi >= a) {
            if (F.lattice) return F.x(i);
            const double prev = F.at(i - 1);  // prev < a at the first crossing
            const double frac = (a - prev) / (vi - prev);
            return F.x(i - 1) + frac * F.h;
        }
    }
    return F.x(n - 1) + F.h;  // right tail
}

// Edges of the region carrying mass (used for the 0- and 1-quantiles).
inline double support_left_edge(const GridCDF& F) {
    for (long i = 0; i < F.size(); ++i)
        if (F.v[static_cast<std::size_t>(i)] > 0.0) return F.x(i) - F.h;
    return F.x0;
}
inline double support_right_edge(const GridCDF& F) {
    for (long i = F.size() - 1; i >= 0; --i)
        if (F.v[static_cast<std::size_t>(i)] < 1.0) return F.x(i) + F.h;
    return F.x(F.size() - 1);
}

inline double quantile_or_edge(const GridCDF& F, double a) {
    if (a <= 0.0) return support_left_edge(F);
    if (a >= 1.0) return support_right_edge(F);
    return quantile(F, a);
}

// Law of M conditioned on M in [lo, hi], renormalized and represented on the
// grid nodes inside the interval. Lattice laws keep the mass of atoms
// sitting exactly on lo; continuous laws condition on the interpolated
// values at the endpoints.
inline GridCDF conditional_cdf(const GridCDF& F, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("conditioning interval is empty");
    const long i_lo = static_cast<long>(std::ceil((lo - F.x0) / F.h - 1e-9));
    const long i_hi = static_cast<long>(std::floor((hi - F.x0) / F.h + 1e-9));
    if (i_hi < i_lo) throw std::invalid_argument("conditioning interval contains no grid point");
    const double base = F.lattice ? F.at(i_lo - 1) : value_at(F, lo);
    const double top = F.lattice ? F.at(i_hi) : value_at(F, hi);
    const double mass = top - base;
    if (mass < kMassEps) throw std::invalid_argument("conditioning on null set");
    GridCDF out;
    out.h = F.h;
    out.x0 = F.x(i_lo);
    out.lattice = F.lattice;
    out.v.resize(static_cast<std::size_t>(i_hi - i_lo + 1));
    for (long i = i_lo; i <= i_hi; ++i)
        out.v[static_cast<std::size_t>(i - i_lo)] = std::clamp((F.at(i) - base) / mass, 0.0, 1.0);
    if (F.lattice) out.v.back() = 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Cluster diagnostics
// ---------------------------------------------------------------------------

struct ClusterSnapshot {
    long n = 0;
    double lo = 0.0, hi = 0.0;  // I_{s,n}
    double median = 0.0;
    double gap = 0.0;  // (eps, 1-eps) conditional quantile gap
};

struct ClusterSeries {
    int s = 0;
    std::vector<ClusterSnapshot> snapshots;
    double drift_slope = 0.0;  // median drift relative to the reference quantile
    bool tight = false;
};

struct ClusterReport {
    double eps = 0.0;
    std::vector<double> zeros;
    std::vector<std::pair<long, double>> reference_quantile;  // per n
    std::vector<ClusterSeries> clusters;
};

namespace detail {

inline double ls_slope(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 2) return 0.0;
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const auto n = static_cast<long double>(pts.size());
    const long double den = n * sxx - sx * sx;
    if (den == 0.0L) return 0.0;
    return static_cast<double>((n * sxy - sx * sy) / den);
}

}  // namespace detail

// Conditional medians and quantile gaps per cluster across a series of
// generations, with a least-squares drift slope (fitted over the last half
// of the records, relative to the reference quantile at the first interior
// zero; the median when there is none). A cluster is flagged tight when its
// gap never exceeded its final value by more than 10%. These flags are
// diagnostics of the terrace structure, not formal guarantees: clusters that
// coincide cannot be told apart.
inline ClusterReport cluster_report(const std::vector<std::pair<long, GridCDF>>& series,
                                    const Nonlinearity& nl, double eps = 0.05) {
    if (series.empty()) throw std::invalid_argument("empty series");
    ClusterReport report;
    report.eps = eps;
    report.zeros = nl.zeros;
    const double ref_level = nl.interior_zeros() >= 1 ? nl.zeros[1] : 0.5;

    const int n_clusters = nl.interior_zeros() + 1;
    report.clusters.resize(n_clusters);
    for (int s = 1; s <= n_clusters; ++s) report.clusters[s - 1].s = s;

    for (const auto& [n, F] : series) {
        report.reference_quantile.emplace_back(n, quantile(F, ref_level));
        for (int s = 1; s <= n_clusters; ++s) {
            ClusterSnapshot snap;
            snap.n = n;
            snap.lo = quantile_or_edge(F, nl.zeros[s - 1]);
            snap.hi = quantile_or_edge(F, nl.zeros[s]);
            const GridCDF cond = conditional_cdf(F, snap.lo, snap.hi);
            snap.median = quantile(cond, 0.5);
            snap.gap = quantile(cond, 1.0 - eps) - quantile(cond, eps);
            report.clusters[s - 1].snapshots.push_back(snap);
        }
    }

    for (auto& cluster : report.clusters) {
        std::vector<std::pair<double, double>> pts;
        const std::size_t count = cluster.snapshots.size();
        for (std::size_t i = count / 2; i < count; ++i) {
            const auto& snap = cluster.snapshots[i];
            pts.emplace_back(static_cast<double>(snap.n),
                             snap.median - report.reference_quantile[i].second);
        }
        cluster.drift_slope = detail::ls_slope(pts);
        double worst_gap = 0.0;
        for (const auto& snap : cluster.snapshots) worst_gap = std::max(worst_gap, snap.gap);
        const double last_gap = cluster.snapshots.back().gap;
        cluster.tight = worst_gap <= 1.1 * last_gap + 1e-12;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Grid / Monte Carlo cross-validation
// ---------------------------------------------------------------------------

// CDF value honoring the representation: step function for lattice laws,
// linear interpolation otherwise.
inline double cdf_value(const GridCDF& F, double x) {
    if (!F.lattice) return value_at(F, x);
    return F.at(static_cast<long>(std::floor((x - F.x0) / F.h + 1e-9)));
}

// left limit F(x-)
inline double cdf_left(const GridCDF& F, double x) {
    if (!F.lattice) return value_at(F, x);
    return F.at(static_cast<long>(std::ceil((x - F.x0) / F.h - 1e-9)) - 1);
}

// sup_x |F(x) - E(x)|; both functions are right-continuous steps (or a
// continuous interpolant), so the supremum sits at the jump points of either
// and is checked there together with the left limits.
inline double kolmogorov_distance(const GridCDF& F, const EmpiricalCDF& E) {
    double worst = 0.0;
    const auto n = static_cast<double>(E.count());
    auto e_left = [&](double x) {
        const auto it = std::lower_bound(E.samples.begin(), E.samples.end(), x);
        return static_cast<double>(it - E.samples.begin()) / n;
    };
    auto visit = [&](double y) {
        worst = std::max(worst, std::abs(cdf_value(F, y) - E.value(y)));
        worst = std::max(worst, std::abs(cdf_left(F, y) - e_left(y)));
    };
    for (std::size_t i = 0; i < E.count(); ++i) {
        if (i > 0 && E.samples[i] == E.samples[i - 1]) continue;
        visit(E.samples[i]);
    }
    for (long i = 0; i < F.size(); ++i) visit(F.x(i));
    return worst;
}

}  // namespace votewave
