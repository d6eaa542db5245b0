// Hamiltonian H(x, p), its derivatives, the Lagrangian via Legendre transform,
// and validators for the growth/convexity bounds the solvers rely on.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wfpc/grid.hpp"

namespace wfpc {

struct HamiltonianSpec {
    std::function<double(double, double)> H;       // H(x, p)
    std::function<double(double, double)> dpH;     // D_p H
    std::function<double(double, double)> dppH;    // D_pp H
    std::function<double(double, double)> dxH;     // D_x H
    double C0 = 1.0;  // two-sided quadratic growth constant
    double mu = 1.0;  // uniform convexity: 1/mu <= D_pp H <= mu

    // Set for the built-in quadratic family H = p^2/2 + b(x) p + V(x); enables
    // the closed-form Lagrangian (q + b)^2/2 - V.
    struct QuadraticData {
        std::function<double(double)> b, V;
    };
    std::optional<QuadraticData> quadratic;

    static HamiltonianSpec make_quadratic(std::function<double(double)> b,
                                          std::function<double(double)> bprime,
                                          std::function<double(double)> V,
                                          std::function<double(double)> Vprime, double C0,
                                          double mu = 1.0) {
        HamiltonianSpec s;
        s.H = [b, V](double x, double p) { return 0.5 * p * p + b(x) * p + V(x); };
        s.dpH = [b](double x, double p) { return p + b(x); };
        s.dppH = [](double, double) { return 1.0; };
        s.dxH = [bprime, Vprime](double x, double p) { return bprime(x) * p + Vprime(x); };
        s.C0 = C0;
        s.mu = mu;
        s.quadratic = QuadraticData{b, V};
        return s;
    }

    static HamiltonianSpec kinetic() {
        auto zero = [](double) { return 0.0; };
        return make_quadratic(zero, zero, zero, zero, 2.0, 1.0);
    }
};

// L(x, q) = sup_p { -p q - H(x, p) }. Closed form on the quadratic family;
// otherwise damped Newton on the strictly concave dual, with a bracketing
// bisection fallback.
inline double lagrangian(const HamiltonianSpec& spec, double x, double q) {
    if (spec.quadratic) {
        const double b = spec.quadratic->b(x);
        const double V = spec.quadratic->V(x);
        return 0.5 * (q + b) * (q + b) - V;
    }
    // Maximizer solves dpH(x, p) = -q.
    double p = 0.0;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        const double r = spec.dpH(x, p) + q;
        if (std::abs(r) < 1e-13 * (1.0 + std::abs(q))) {
            converged = true;
            break;
        }
        const double step = r / spec.dppH(x, p);
        p -= (std::abs(step) > 1.0 / spec.mu * 1e3) ? step * 0.5 : step;
    }
    if (!converged) {
        // Bracket the root of dpH + q; monotone by uniform convexity.
        double lo = -1.0, hi = 1.0;
        while (spec.dpH(x, lo) + q > 0.0) lo *= 2.0;
        while (spec.dpH(x, hi) + q < 0.0) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            p = 0.5 * (lo + hi);
            ((spec.dpH(x, p) + q > 0.0) ? hi : lo) = p;
        }
        if (std::abs(spec.dpH(x, p) + q) > 1e-8 * (1.0 + std::abs(q)))
            throw NumericalError("lagrangian: Legendre solve failed to converge at x=" +
                                 std::to_string(x) + ", q=" + std::to_string(q));
    }
    return -p * q - spec.H(x, p);
}

// Fenchel-Young gap L(x,q) + H(x,p) + p q; nonnegative, zero exactly on the
// graph q = -D_p H(x, p).
inline double young_gap(const HamiltonianSpec& spec, double x, double p, double q) {
    return lagrangian(spec, x, q) + spec.H(x, p) + p * q;
}

struct AssumptionReport {
    bool pass = true;
    double growth_C0_required = 0.0;  // smallest C0 validating the two-sided growth on the box
    double dxH_C0_required = 0.0;     // smallest C0 with |D_x H| <= C0 (1 + |p|)
    double dpp_min = std::numeric_limits<double>::infinity();
    double dpp_max = -std::numeric_limits<double>::infinity();
    std::string message;
};

// Scans a sample box of (x, p) pairs for the growth bound, the D_x H linear
// bound and the uniform convexity window. Rejecting a configuration here is
// cheaper than diagnosing a diverged solve later.
inline AssumptionReport validate_assumptions(const HamiltonianSpec& spec,
                                             std::span<const double> xs,
                                             std::span<const double> ps) {
    AssumptionReport rep;
    for (double x : xs)
        for (double p : ps) {
            const double h = spec.H(x, p);
            if (!std::isfinite(h)) {
                rep.pass = false;
                rep.message = "H not finite on sample box";
                return rep;
            }
            // C0^{-1} p^2 - C0 <= H <= C0 p^2 + C0: find the smallest C0 making
            // both sides hold at this sample.
            const double p2 = p * p;
            // upper: C0 >= (H - C0 p2 ... ) solve H <= C0 (p2 + 1) -> C0 >= H/(p2+1)
            double need = h / (p2 + 1.0);
            if (need > rep.growth_C0_required) rep.growth_C0_required = need;
            // lower: C0^{-1} p2 - C0 <= H. For C0 >= 1 it suffices that
            // C0 >= (sqrt(H^2 + 4 p2... ) solve c - H c ... quadratic in C0:
            // p2/C0 - C0 <= H  <=>  C0^2 + H C0 - p2 >= 0.
            const double disc = h * h + 4.0 * p2;
            need = 0.5 * (-h + std::sqrt(disc));
            if (need > rep.growth_C0_required) rep.growth_C0_required = need;

            const double dxh = std::abs(spec.dxH(x, p));
            need = dxh / (1.0 + std::abs(p));
            if (need > rep.dxH_C0_required) rep.dxH_C0_required = need;

            const double dpp = spec.dppH(x, p);
            if (dpp < rep.dpp_min) rep.dpp_min = dpp;
            if (dpp > rep.dpp_max) rep.dpp_max = dpp;
        }
    if (rep.growth_C0_required > spec.C0 || rep.dxH_C0_required > spec.C0) {
        rep.pass = false;
        rep.message = "declared C0 too small for sample box";
    }
    if (rep.dpp_min < 1.0 / spec.mu - 1e-12 || rep.dpp_max > spec.mu + 1e-12) {
        rep.pass = false;
        rep.message = "D_pp H leaves the [1/mu, mu] window";
    }
    return rep;
}

}  // namespace wfpc
