#pragma once
#include <algorithm>
#include <stdexcept>
#include <vector>

#include "votewave/scalar.hpp"

// Bernstein-basis polynomial algebra.
//
// A degree-d polynomial is stored by its coefficients beta_0..beta_d with
// respect to the basis b_{k,d}(x) = C(d,k) x^k (1-x)^{d-k}. The basis
// satisfies
//   sum_k b_{k,d}(x) = 1                                   (partition of unity)
//   b'_{k,d} = d (b_{k-1,d-1} - b_{k,d-1})
//   b_{k,d-1} = ((d-k)/d) b_{k,d} + ((k+1)/d) b_{k+1,d}
// and the cumulative sums B_{k,d} = sum_{l>=k} b_{l,d} obey
//   B_{k,d} = ((d+1-k)/(d+1)) B_{k,d+1} + (k/(d+1)) B_{k+1,d+1}.
//
// Everything here is a pure function of immutable values.

namespace votewave {

template <class S = double>
struct MonomialPoly {
    std::vector<S> coeffs;  // ascending powers; empty vector is the zero polynomial

    int degree() const {
        for (int i = static_cast<int>(coeffs.size()) - 1; i >= 0; --i)
            if (!(coeffs[i] == S(0))) return i;
        return -1;
    }

    S eval(const S& x) const {
        S r(0);
        for (std::size_t i = coeffs.size(); i-- > 0;) r = r * x + coeffs[i];
        return r;
    }
};

template <class S = double>
struct BernsteinPoly {
    std::vector<S> coeffs;  // beta_0..beta_d, exactly degree+1 entries

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }

    static BernsteinPoly constant(const S& c, int d = 0) {
        return BernsteinPoly{std::vector<S>(static_cast<std::size_t>(d) + 1, c)};
    }
};

template <class S>
S binomial(int n, int k) {
    if (k < 0 || k > n) return S(0);
    k = std::min(k, n - k);
    S c(1);
    for (int i = 1; i <= k; ++i) c = c * S(n - k + i) / S(i);
    return c;
}

// One basis function b_{k,d}(x); zero outside 0 <= k <= d.
template <class S>
S bernstein_basis(int k, int d, const S& x) {
    if (k < 0 || k > d) return S(0);
    S r = binomial<S>(d, k);
    for (int i = 0; i < k; ++i) r = r * x;
    for (int i = 0; i < d - k; ++i) r = r * (S(1) - x);
    return r;
}

template <class S>
MonomialPoly<S> to_monomial(const BernsteinPoly<S>& p) {
    const int d = p.degree();
    std::vector<S> a(static_cast<std::size_t>(d) + 1, S(0));
    for (int k = 0; k <= d; ++k) {
        if (p.coeffs[k] == S(0)) continue;
        // b_{k,d} = C(d,k) sum_i C(d-k,i) (-1)^i x^{k+i}
        const S cdk = binomial<S>(d, k) * p.coeffs[k];
        S sign(1);
        for (int i = 0; i <= d - k; ++i) {
            a[k + i] += cdk * binomial<S>(d - k, i) * sign;
            sign = -sign;
        }
    }
    return MonomialPoly<S>{std::move(a)};
}

template <class S>
BernsteinPoly<S> from_monomial(const MonomialPoly<S>& m, int d) {
    const int dm = m.degree();
    if (d < dm) throw std::invalid_argument("target degree below polynomial degree");
    if (d < 0) throw std::invalid_argument("negative degree");
    // x^j = sum_k [C(k,j)/C(d,j)] b_{k,d}
    std::vector<S> beta(static_cast<std::size_t>(d) + 1, S(0));
    for (int k = 0; k <= d; ++k) {
        S acc(0);
        for (int j = 0; j <= std::min(k, dm); ++j)
            acc += m.coeffs[j] * binomial<S>(k, j) / binomial<S>(d, j);
        beta[k] = acc;
    }
    return BernsteinPoly<S>{std::move(beta)};
}

// de Casteljau on [0,1]; monomial Horner outside, where the recursive scheme
// has no stability advantage.
template <class S>
S eval(const BernsteinPoly<S>& p, const S& x) {
    if (x >= S(0) && x <= S(1)) {
        std::vector<S> c = p.coeffs;
        const S omx = S(1) - x;
        for (std::size_t len = c.size(); len > 1; --len)
            for (std::size_t i = 0; i + 1 < len; ++i) c[i] = omx * c[i] + x * c[i + 1];
        return c[0];
    }
    return to_monomial(p).eval(x);
}

template <class S>
BernsteinPoly<S> elevate(const BernsteinPoly<S>& p) {
    const int d = p.degree();
    std::vector<S> out(static_cast<std::size_t>(d) + 2);
    out[0] = p.coeffs[0];
    for (int k = 1; k <= d; ++k)
        out[k] = (S(k) * p.coeffs[k - 1] + S(d + 1 - k) * p.coeffs[k]) / S(d + 1);
    out[d + 1] = p.coeffs[d];
    return BernsteinPoly<S>{std::move(out)};
}

template <class S>
BernsteinPoly<S> elevate_to(const BernsteinPoly<S>& p, int d) {
    if (d < p.degree()) throw std::invalid_argument("cannot lower degree by elevation");
    BernsteinPoly<S> q = p;
    while (q.degree() < d) q = elevate(q);
    return q;
}

// Coefficients of p' in degree d-1: d (beta_{k+1} - beta_k). A degree-0
// input has no degree -1 representation; we return the zero polynomial of
// degree 0 instead.
template <class S>
BernsteinPoly<S> derivative(const BernsteinPoly<S>& p) {
    const int d = p.degree();
    if (d == 0) return BernsteinPoly<S>::constant(S(0));
    std::vector<S> out(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) out[k] = S(d) * (p.coeffs[k + 1] - p.coeffs[k]);
    return BernsteinPoly<S>{std::move(out)};
}

// Upper-tail cumulative basis B_{k,d} = sum_{l=k}^d b_{l,d}: coefficients are
// 0 below index k and 1 from k on.
template <class S = double>
BernsteinPoly<S> cumulative_basis(int k, int d) {
    if (k < 0 || k > d) throw std::invalid_argument("cumulative basis needs 0 <= k <= d");
    std::vector<S> c(static_cast<std::size_t>(d) + 1, S(0));
    for (int l = k; l <= d; ++l) c[l] = S(1);
    return BernsteinPoly<S>{std::move(c)};
}

namespace detail {

// de Casteljau subdivision at t: returns coefficients of p restricted to
// [0,t] (left) or [t,1] (right), reparametrized to [0,1].
template <class S>
BernsteinPoly<S> subdivide(const BernsteinPoly<S>& p, const S& t, bool left) {
    const int d = p.degree();
    std::vector<S> c = p.coeffs;
    std::vector<S> out(static_cast<std::size_t>(d) + 1);
    const S omt = S(1) - t;
    if (left)
        out[0] = c[0];
    else
        out[d] = c[d];
    for (int j = 1; j <= d; ++j) {
        for (int i = 0; i + j <= d; ++i) c[i] = omt * c[i] + t * c[i + 1];
        if (left)
            out[j] = c[0];
        else
            out[d - j] = c[d - j];
    }
    return BernsteinPoly<S>{std::move(out)};
}

}  // namespace detail

// p((b-a)x + a) as a same-degree polynomial, computed by two subdivisions
// (numerically stable for 0 <= a < b <= 1).
template <class S>
BernsteinPoly<S> restrict_to(const BernsteinPoly<S>& p, const S& a, const S& b) {
    if (!(a < b)) throw std::invalid_argument("restriction needs a < b");
    if (a < S(0) || b > S(1)) throw std::invalid_argument("restriction interval outside [0,1]");
    BernsteinPoly<S> q = (a == S(0)) ? p : detail::subdivide(p, a, /*left=*/false);
    if (b == S(1)) return q;
    const S t = (b - a) / (S(1) - a);
    return detail::subdivide(q, t, /*left=*/true);
}

// Stretch of a nonlinearity f to the sub-interval [a1,a2] of its domain:
// ft(x) = f((a2-a1)x + a1). When f(a1) = f(a2) = 0 the result vanishes at the
// endpoints.
template <class S>
BernsteinPoly<S> rescale_nonlinearity(const BernsteinPoly<S>& f, const S& a1, const S& a2) {
    if (!(a1 < a2)) throw std::invalid_argument("rescale needs a1 < a2");
    return restrict_to(f, a1, a2);
}

}  // namespace votewave
