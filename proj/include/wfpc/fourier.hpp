// Trigonometric transforms on the periodic grid. These back the spectral heat
// semigroup and the spectral oracles; the finite-difference solvers never call
// into this header, which keeps the two solution paths independent.
#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "wfpc/grid.hpp"

namespace wfpc {

// Real trigonometric series f(x) = a_0 + sum_k [a_k cos(k~x) + b_k sin(k~x)],
// k~ = 2*pi*k/Lx, k = 1..n/2. Direct O(n^2) summation with precomputed tables;
// grids here never exceed a few hundred nodes.
class SpectralTorus {
public:
    struct Coeffs {
        std::vector<double> a, b;  // size n/2+1 each; b[0] and b[n/2] (even n) unused
    };

    explicit SpectralTorus(const SpaceGrid& g) : g_(g), n_(g.n_x), kmax_(g.n_x / 2) {
        cos_.resize(static_cast<size_t>(kmax_ + 1) * n_);
        sin_.resize(static_cast<size_t>(kmax_ + 1) * n_);
        for (int k = 0; k <= kmax_; ++k)
            for (int i = 0; i < n_; ++i) {
                const double th = 2.0 * std::numbers::pi * k * i / n_;
                cos_[idx(k, i)] = std::cos(th);
                sin_[idx(k, i)] = std::sin(th);
            }
    }

    const SpaceGrid& grid() const { return g_; }
    int max_mode() const { return kmax_; }
    double wavenumber(int k) const { return 2.0 * std::numbers::pi * k / g_.Lx; }

    Coeffs forward(std::span<const double> f) const {
        if (static_cast<int>(f.size()) != n_) throw std::invalid_argument("SpectralTorus: size mismatch");
        Coeffs c{std::vector<double>(kmax_ + 1, 0.0), std::vector<double>(kmax_ + 1, 0.0)};
        for (int k = 0; k <= kmax_; ++k) {
            double sa = 0.0, sb = 0.0;
            for (int i = 0; i < n_; ++i) {
                sa += f[i] * cos_[idx(k, i)];
                sb += f[i] * sin_[idx(k, i)];
            }
            double norm = (k == 0 || (n_ % 2 == 0 && k == kmax_)) ? 1.0 / n_ : 2.0 / n_;
            c.a[k] = sa * norm;
            c.b[k] = sb * norm;
        }
        c.b[0] = 0.0;
        if (n_ % 2 == 0) c.b[kmax_] = 0.0;
        return c;
    }

    std::vector<double> inverse(const Coeffs& c) const {
        std::vector<double> f(n_, 0.0);
        for (int k = 0; k <= kmax_; ++k)
            for (int i = 0; i < n_; ++i)
                f[i] += c.a[k] * cos_[idx(k, i)] + c.b[k] * sin_[idx(k, i)];
        return f;
    }

    // Heat semigroup P_t: multiplies mode k by exp(-(2*pi*k/Lx)^2 t).
    void apply_heat(Coeffs& c, double t) const {
        for (int k = 0; k <= kmax_; ++k) {
            const double w = wavenumber(k);
            const double damp = std::exp(-w * w * t);
            c.a[k] *= damp;
            c.b[k] *= damp;
        }
    }

    // Exact spectral derivative: (a,b) -> (k~ b, -k~ a).
    Coeffs derivative(const Coeffs& c) const {
        Coeffs d{std::vector<double>(kmax_ + 1, 0.0), std::vector<double>(kmax_ + 1, 0.0)};
        for (int k = 1; k <= kmax_; ++k) {
            const double w = wavenumber(k);
            d.a[k] = w * c.b[k];
            d.b[k] = -w * c.a[k];
        }
        if (n_ % 2 == 0) {
            // Nyquist cosine has no resolvable sine partner; drop it.
            d.a[kmax_] = 0.0;
            d.b[kmax_] = 0.0;
        }
        return d;
    }

    // Drift-diffusion multiplier for constant drift c: mode k gets
    // exp(-k~^2 t) and a phase rotation by -k~ c t (advection by +c).
    void apply_heat_with_drift(Coeffs& c, double drift, double t) const {
        for (int k = 0; k <= kmax_; ++k) {
            const double w = wavenumber(k);
            const double damp = std::exp(-w * w * t);
            const double ph = w * drift * t;
            const double ca = std::cos(ph), sa = std::sin(ph);
            // translate f(x - c t): cos/sin pair rotates
            const double na = c.a[k] * ca + c.b[k] * sa * (-1.0);
            const double nb = c.a[k] * sa + c.b[k] * ca;
            c.a[k] = damp * na;
            c.b[k] = damp * nb;
        }
    }

private:
    size_t idx(int k, int i) const { return static_cast<size_t>(k) * n_ + i; }
    SpaceGrid g_;
    int n_, kmax_;
    std::vector<double> cos_, sin_;
};

}  // namespace wfpc
