// Cylindrical functionals m -> F(int f_1 dm, ..., int f_k dm) together with
// their linear and intrinsic derivatives, the truncated-moment distance q,
// the smoothed positive part gamma_h, and the transversality validator.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "wfpc/grid.hpp"

namespace wfpc {

// One inner function of a cylindrical functional; node samples possibly
// modulated by a scalar factor in time.
struct InnerFunction {
    std::vector<double> base;                       // n_x node samples
    std::function<double(double)> time_factor;      // default: constant 1

    double factor(double t) const { return time_factor ? time_factor(t) : 1.0; }
};

struct CylindricalFunctional {
    std::vector<InnerFunction> inner;
    std::function<double(std::span<const double>)> outer;                 // F
    std::function<std::vector<double>(std::span<const double>)> outer_grad;  // grad F

    bool empty() const { return inner.empty(); }

    // F(m) = int psi dm - offset
    static CylindricalFunctional linear(std::vector<double> psi_samples, double offset) {
        CylindricalFunctional f;
        f.inner.push_back({std::move(psi_samples), nullptr});
        f.outer = [offset](std::span<const double> s) { return s[0] - offset; };
        f.outer_grad = [](std::span<const double>) { return std::vector<double>{1.0}; };
        return f;
    }

    // F(m) = coeff * (int g1 dm - target)^2
    static CylindricalFunctional quadratic_moment(std::vector<double> g1_samples, double target,
                                                  double coeff) {
        CylindricalFunctional f;
        f.inner.push_back({std::move(g1_samples), nullptr});
        f.outer = [target, coeff](std::span<const double> s) {
            const double d = s[0] - target;
            return coeff * d * d;
        };
        f.outer_grad = [target, coeff](std::span<const double> s) {
            return std::vector<double>{2.0 * coeff * (s[0] - target)};
        };
        return f;
    }

    static CylindricalFunctional zero() {
        CylindricalFunctional f;
        f.outer = [](std::span<const double>) { return 0.0; };
        f.outer_grad = [](std::span<const double>) { return std::vector<double>{}; };
        return f;
    }
};

inline std::vector<double> moments(const CylindricalFunctional& F, const GridMeasure& m, double t) {
    std::vector<double> s(F.inner.size());
    for (size_t j = 0; j < F.inner.size(); ++j)
        s[j] = F.inner[j].factor(t) * integrate(m, F.inner[j].base);
    return s;
}

inline double eval(const CylindricalFunctional& F, const GridMeasure& m, double t = 0.0) {
    const auto s = moments(F, m, t);
    return F.outer(s);
}

// delta F / delta m as a node array, normalized so it integrates to zero
// against m.
inline std::vector<double> linear_derivative(const CylindricalFunctional& F, const GridMeasure& m,
                                             double t = 0.0) {
    const int n = m.grid.n_x;
    std::vector<double> out(n, 0.0);
    if (F.empty()) return out;
    const auto s = moments(F, m, t);
    const auto g = F.outer_grad(s);
    for (size_t j = 0; j < F.inner.size(); ++j) {
        const double w = g[j] * F.inner[j].factor(t);
        for (int i = 0; i < n; ++i) out[i] += w * F.inner[j].base[i];
    }
    const double avg = integrate(m, out);
    for (double& v : out) v -= avg;
    return out;
}

// D_m F = d/dx of the linear derivative; the normalization constant drops out.
inline std::vector<double> intrinsic_derivative(const CylindricalFunctional& F, const GridMeasure& m,
                                                double t = 0.0) {
    return d_dx(m.grid, linear_derivative(F, m, t));
}

inline double psi_plus(double psi_value) { return psi_value > 0.0 ? psi_value : 0.0; }

// C^2 smoothing of r -> max(0, r): exact outside [-h, h], quintic inside.
// With s = r/h the interior polynomial is h * (s+1)^3 (3-s) / 16, the unique
// quintic matching value, slope and curvature of max(0, r) at r = +-h.
// Its derivative (s+1)^2 (2-s) / 4 stays in [0, 1] and equals 1/2 at r = 0.
struct SmoothPlus {
    double h = 1e-3;

    explicit SmoothPlus(double width) : h(width) {
        if (!(h > 0.0)) throw std::invalid_argument("SmoothPlus: width must be positive");
    }

    double value(double r) const {
        if (r >= h) return r;
        if (r <= -h) return 0.0;
        const double s = r / h;
        const double sp1 = s + 1.0;
        return h * sp1 * sp1 * sp1 * (3.0 - s) / 16.0;
    }
    double prime(double r) const {
        if (r >= h) return 1.0;
        if (r <= -h) return 0.0;
        const double s = r / h;
        const double sp1 = s + 1.0;
        return sp1 * sp1 * (2.0 - s) / 4.0;
    }
};

inline double smooth_plus(const SmoothPlus& s, double r) { return s.value(r); }
inline double smooth_plus_prime(const SmoothPlus& s, double r) { return s.prime(r); }

// Constraint Psi with the transversality margins eta1, eta2.
struct ConstraintSpec {
    CylindricalFunctional psi;
    double eta1 = 0.1;
    double eta2 = 1.0;

    ConstraintSpec() = default;
    ConstraintSpec(CylindricalFunctional p, double e1, double e2)
        : psi(std::move(p)), eta1(e1), eta2(e2) {
        if (!(eta1 > 0.0) || !(eta2 > 0.0))
            throw std::invalid_argument("ConstraintSpec: eta1, eta2 must be positive");
    }
};

// Distance-like functional built from the first K torus Fourier modes:
// q(m1, m2) = sum_i w_i (int phi_i d(m1 - m2))^2 with
// w_i = 2^{-i} / (1 + |phi_i|_inf^2 + |D phi_i|_inf^2).
// A finite truncation separates only the first K trigonometric moments; q is
// used as a convergence diagnostic, not as a metric.
inline double q_distance(const GridMeasure& m1, const GridMeasure& m2, int K = 16) {
    if (!(m1.grid == m2.grid)) throw std::invalid_argument("q_distance: grids differ");
    const SpaceGrid& g = m1.grid;
    const int n = g.n_x;
    double q = 0.0;
    double pow2 = 0.5;  // 2^{-i}, i starting at 1
    for (int i = 1; i <= K; ++i, pow2 *= 0.5) {
        const int mode = (i + 1) / 2;
        const bool use_cos = (i % 2 == 1);
        const double wnum = 2.0 * std::numbers::pi * mode / g.Lx;
        double gap = 0.0;
        for (int ix = 0; ix < n; ++ix) {
            const double th = wnum * g.node(ix);
            const double phi = use_cos ? std::cos(th) : std::sin(th);
            gap += phi * (m1.density[ix] - m2.density[ix]);
        }
        gap *= g.dx();
        const double weight = pow2 / (1.0 + 1.0 + wnum * wnum);
        q += weight * gap * gap;
    }
    return q;
}

inline double q_distance(const MeasurePath& p1, const MeasurePath& p2, int K = 16) {
    if (p1.slices.size() != p2.slices.size()) throw std::invalid_argument("q_distance: paths differ");
    double worst = 0.0;
    for (size_t j = 0; j < p1.slices.size(); ++j) {
        const double q = q_distance(GridMeasure(p1.sg, p1.slices[j]), GridMeasure(p2.sg, p2.slices[j]), K);
        if (q > worst) worst = q;
    }
    return worst;
}

struct TransversalityReport {
    bool pass = true;
    int n_checked = 0;      // samples with |Psi(m)| <= eta1
    int n_samples = 0;
    double min_grad_sq = std::numeric_limits<double>::infinity();  // min int |D_m Psi|^2 dm over checked
};

// For every sample with |Psi(m)| <= eta1, verifies int |D_m Psi|^2 dm > eta2.
// Failure indicates a bad (Psi, eta1, eta2, domain) configuration rather than
// a solver defect.
inline TransversalityReport transversality_check(const ConstraintSpec& c,
                                                 std::span<const GridMeasure> samples) {
    TransversalityReport rep;
    rep.n_samples = static_cast<int>(samples.size());
    for (const GridMeasure& m : samples) {
        const double psi = eval(c.psi, m);
        if (std::abs(psi) > c.eta1) continue;
        ++rep.n_checked;
        const auto dm = intrinsic_derivative(c.psi, m);
        std::vector<double> sq(dm.size());
        for (size_t i = 0; i < dm.size(); ++i) sq[i] = dm[i] * dm[i];
        const double g2 = integrate(m, sq);
        if (g2 < rep.min_grad_sq) rep.min_grad_sq = g2;
        if (!(g2 > c.eta2)) rep.pass = false;
    }
    return rep;
}

}  // namespace wfpc
