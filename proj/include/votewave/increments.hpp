#pragma once
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

// The step distribution q of the branching random walk: either a finite
// atomic measure or a compactly supported density sampled on a uniform grid.
// support_radius() is C_q with supp(q) within [-C_q, C_q]; it bounds the
// per-generation movement of the voting outcome.

namespace votewave {

struct IncrementLaw {
    enum class Kind { atomic, density };

    Kind kind = Kind::atomic;

    // atomic: (position, weight), sorted by position
    std::vector<std::pair<double, double>> atoms;

    // density: values at x0 + j*h, j = 0..values.size()-1
    double x0 = 0.0;
    double h = 1.0;
    std::vector<double> pdf;

    std::vector<double> cdf;  // sampling table (cumulative weights / trapezoid mass)

    static IncrementLaw from_atoms(std::vector<std::pair<double, double>> atoms_in) {
        IncrementLaw law;
        law.kind = Kind::atomic;
        law.atoms = std::move(atoms_in);
        std::sort(law.atoms.begin(), law.atoms.end());
        if (law.atoms.empty()) throw std::invalid_argument("atomic law needs at least one atom");
        long double total = 0.0L;
        for (auto& [x, w] : law.atoms) {
            if (w < 0.0) throw std::invalid_argument("atom weights must be >= 0");
            total += w;
        }
        if (std::abs(static_cast<double>(total) - 1.0) > 1e-10)
            throw std::invalid_argument("atom weights must sum to 1");
        law.cdf.reserve(law.atoms.size());
        long double run = 0.0L;
        for (auto& [x, w] : law.atoms) {
            run += w;
            law.cdf.push_back(static_cast<double>(run));
        }
        law.cdf.back() = 1.0;
        return law;
    }

    // The grid values are renormalized so the trapezoid mass is exactly 1;
    // quadrature and sampling then agree with the grid recursion.
    static IncrementLaw from_density_grid(double x0, double h, std::vector<double> values) {
        if (values.size() < 2 || h <= 0.0) throw std::invalid_argument("density grid needs h > 0 and >= 2 nodes");
        IncrementLaw law;
        law.kind = Kind::density;
        law.x0 = x0;
        law.h = h;
        law.pdf = std::move(values);
        long double mass = 0.0L;
        for (std::size_t j = 0; j < law.pdf.size(); ++j) {
            if (law.pdf[j] < 0.0) throw std::invalid_argument("density values must be >= 0");
            const double w = (j == 0 || j + 1 == law.pdf.size()) ? 0.5 : 1.0;
            mass += w * law.pdf[j];
        }
        mass *= h;
        if (std::abs(static_cast<double>(mass) - 1.0) > 1e-10)
            throw std::invalid_argument("density must integrate to 1");
        for (double& v : law.pdf) v /= static_cast<double>(mass);

        law.cdf.assign(law.pdf.size(), 0.0);
        long double run = 0.0L;
        for (std::size_t j = 1; j < law.pdf.size(); ++j) {
            run += 0.5L * h * (law.pdf[j - 1] + law.pdf[j]);
            law.cdf[j] = static_cast<double>(run);
        }
        law.cdf.back() = 1.0;
        return law;
    }

    // q(x) = (1 + cos(pi x / c)) / (2c) on [-c, c].
    static IncrementLaw raised_cosine(double half_width = 1.0, int nodes = 401) {
        if (half_width <= 0.0 || nodes < 3) throw std::invalid_argument("bad raised cosine parameters");
        const double h = 2.0 * half_width / (nodes - 1);
        std::vector<double> v(nodes);
        for (int j = 0; j < nodes; ++j) {
            const double x = -half_width + j * h;
            v[j] = (1.0 + std::cos(std::numbers::pi * x / half_width)) / (2.0 * half_width);
        }
        v.front() = v.back() = 0.0;
        return from_density_grid(-half_width, h, std::move(v));
    }

    double min_support() const {
        return kind == Kind::atomic ? atoms.front().first : x0;
    }
    double max_support() const {
        return kind == Kind::atomic ? atoms.back().first : x0 + h * (pdf.size() - 1);
    }
    double support_radius() const {
        return std::max(std::abs(min_support()), std::abs(max_support()));
    }
    double mean() const {
        long double m = 0.0L;
        if (kind == Kind::atomic) {
            for (auto& [x, w] : atoms) m += static_cast<long double>(x) * w;
        } else {
            for (std::size_t j = 0; j < pdf.size(); ++j) {
                const double w = (j == 0 || j + 1 == pdf.size()) ? 0.5 : 1.0;
                m += w * pdf[j] * (x0 + j * h);
            }
            m *= h;
        }
        return static_cast<double>(m);
    }

    // q_hat(x) = q(-x)
    IncrementLaw reflected() const {
        IncrementLaw law = *this;
        if (kind == Kind::atomic) {
            for (auto& [x, w] : law.atoms) x = -x;
            std::sort(law.atoms.begin(), law.atoms.end());
            law.cdf.clear();
            long double run = 0.0L;
            for (auto& [x, w] : law.atoms) {
                run += w;
                law.cdf.push_back(static_cast<double>(run));
            }
            law.cdf.back() = 1.0;
        } else {
            std::reverse(law.pdf.begin(), law.pdf.end());
            law.x0 = -max_support();
            law.cdf.assign(law.pdf.size(), 0.0);
            long double run = 0.0L;
            for (std::size_t j = 1; j < law.pdf.size(); ++j) {
                run += 0.5L * law.h * (law.pdf[j - 1] + law.pdf[j]);
                law.cdf[j] = static_cast<double>(run);
            }
            law.cdf.back() = 1.0;
        }
        return law;
    }

    IncrementLaw shifted(double a) const {
        IncrementLaw law = *this;
        if (kind == Kind::atomic) {
            for (auto& [x, w] : law.atoms) x += a;
        } else {
            law.x0 += a;
        }
        return law;
    }

    bool symmetric(double tol = 1e-12) const {
        if (kind == Kind::atomic) {
            for (std::size_t i = 0, j = atoms.size(); i < atoms.size(); ++i) {
                --j;
                if (std::abs(atoms[i].first + atoms[j].first) > tol) return false;
                if (std::abs(atoms[i].second - atoms[j].second) > tol) return false;
            }
            return true;
        }
        if (std::abs(min_support() + max_support()) > tol) return false;
        for (std::size_t i = 0, j = pdf.size(); i < pdf.size(); ++i) {
            --j;
            if (std::abs(pdf[i] - pdf[j]) > tol) return false;
        }
        return true;
    }

    // Inverse-CDF sampling; the density case interpolates linearly on the
    // quadrature grid.
    double sample(double u) const {
        if (kind == Kind::atomic) {
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
            const std::size_t i = std::min<std::size_t>(it - cdf.begin(), atoms.size() - 1);
            return atoms[i].first;
        }
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t j = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
        if (j == 0) j = 1;
        const double c0 = cdf[j - 1], c1 = cdf[j];
        const double frac = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
        return x0 + (j - 1 + std::clamp(frac, 0.0, 1.0)) * h;
    }
};

}  // namespace votewave
