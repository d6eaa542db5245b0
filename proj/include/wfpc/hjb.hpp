// Backward HJB solver for -du/dt + H(x, Du) - Lap u = psi(t, x) with sources
// that are only measurable in time. The march works on the shifted unknown
// v(t,x) = u(t,x) - sum_{s>=t} psi(s,x) dt, so a jump in psi never enters a
// difference quotient; u is reconstructed from v and the running source sum.
//
// Two spatial treatments of the Hamiltonian:
//   central  - H evaluated at the centered gradient; second order in dx.
//   godunov  - monotone one-sided selection; first order, but its transport
//              linearization is exactly transposed by the upwind
//              Fokker-Planck step (see fokker_planck.hpp), which the coupled
//              solver needs for the discrete verification identity.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wfpc/fourier.hpp"
#include "wfpc/grid.hpp"
#include "wfpc/hamiltonian.hpp"

namespace wfpc {

enum class SpaceScheme { central, godunov };

struct HjbProblem {
    HamiltonianSpec spec;
    TimeGrid tg;
    SpaceGrid sg;
    ValueField source;             // psi(t_j, x_i); row n acts on step [t_n, t_{n+1})
    std::vector<double> terminal;  // g~(x_i)
};

struct HjbSolution {
    ValueField u;
    ValueField v;                  // shifted unknown; u = v + cumulative source by construction
    double residual_max = 0.0;     // filled by hjb_residual
    int max_substeps = 1;          // worst CFL sub-stepping encountered
    double max_grad = 0.0;         // observed max |Du| (centered)
};

namespace detail {

// Godunov numerical Hamiltonian for H convex in p, split as
// G(x, q-, q+) = Hpos(x, max(q-,0)) + Hneg(x, min(q+,0)) - H(x, 0) ... for the
// quadratic family this reduces to the classic
//   G = 1/2 (q-^+)^2 + 1/2 (q+^-)^2 + b^+ q- + b^- q+ + V.
// Only the quadratic family runs through the godunov path.
struct GodunovEval {
    double value;   // G
    double g1;      // dG/dq-  (>= 0)
    double g2;      // dG/dq+  (<= 0)
};

inline GodunovEval godunov_quadratic(double b, double V, double qm, double qp) {
    const double qmp = qm > 0.0 ? qm : 0.0;
    const double qpm = qp < 0.0 ? qp : 0.0;
    const double bp = b > 0.0 ? b : 0.0;
    const double bm = b < 0.0 ? b : 0.0;
    GodunovEval e;
    e.value = 0.5 * qmp * qmp + 0.5 * qpm * qpm + bp * qm + bm * qp + V;
    e.g1 = qmp + bp;
    e.g2 = qpm + bm;
    return e;
}

}  // namespace detail

// One explicit Hamiltonian sweep u -> u + dt*(psi - H[u]) with the chosen
// stencil; returns the max wave speed seen (for CFL accounting).
inline double hamiltonian_sweep(const HamiltonianSpec& spec, const SpaceGrid& sg,
                                SpaceScheme scheme, std::span<const double> w,
                                std::span<const double> psi, double dt,
                                std::span<double> out) {
    const int n = sg.n_x;
    const double dx = sg.dx();
    double max_speed = 0.0;
    if (scheme == SpaceScheme::central) {
        for (int i = 0; i < n; ++i) {
            const double p = (w[sg.wrap(i + 1)] - w[sg.wrap(i - 1)]) / (2.0 * dx);
            const double x = sg.node(i);
            out[i] = w[i] + dt * (psi[i] - spec.H(x, p));
            max_speed = std::max(max_speed, std::abs(spec.dpH(x, p)));
        }
    } else {
        if (!spec.quadratic)
            throw std::invalid_argument("godunov scheme requires the quadratic Hamiltonian family");
        for (int i = 0; i < n; ++i) {
            const double qm = (w[i] - w[sg.wrap(i - 1)]) / dx;
            const double qp = (w[sg.wrap(i + 1)] - w[i]) / dx;
            const double x = sg.node(i);
            const auto e = detail::godunov_quadratic(spec.quadratic->b(x), spec.quadratic->V(x), qm, qp);
            out[i] = w[i] + dt * (psi[i] - e.value);
            max_speed = std::max(max_speed, e.g1 - e.g2);
        }
    }
    return max_speed;
}

// Explicit part of one backward step, sub-stepped under the CFL guard
// dt * speed <= 0.95 dx. If the wave speed grows during the sub-stepping the
// whole step restarts with twice as many sub-steps, so the routine is a pure
// function of (w, psi, dt) and can be replayed exactly by the transport dual.
// When `states` is given it receives the s pre-sweep fields y_0 .. y_{s-1}.
inline int explicit_hamiltonian_step(const HamiltonianSpec& spec, const SpaceGrid& sg,
                                     SpaceScheme scheme, std::span<const double> w,
                                     std::span<const double> psi, double dt,
                                     std::vector<double>& result,
                                     std::vector<std::vector<double>>* states = nullptr) {
    const int n = sg.n_x;
    const double dx = sg.dx();
    std::vector<double> scratch(n);
    double speed0 = hamiltonian_sweep(spec, sg, scheme, w, psi, dt, scratch);
    int s = std::max(1, static_cast<int>(std::ceil(dt * speed0 / (0.95 * dx))));

    for (int attempt = 0; attempt < 24; ++attempt) {
        const double tau = dt / s;
        std::vector<double> y(w.begin(), w.end());
        if (states) {
            states->clear();
            states->reserve(s);
        }
        bool ok = true;
        for (int k = 0; k < s; ++k) {
            if (states) states->push_back(y);
            const double speed = hamiltonian_sweep(spec, sg, scheme, y, psi, tau, scratch);
            if (tau * speed > dx) {
                ok = false;
                break;
            }
            y.swap(scratch);
        }
        if (ok) {
            result = std::move(y);
            return s;
        }
        s *= 2;
    }
    throw NumericalError("explicit_hamiltonian_step: CFL sub-stepping failed to stabilise");
}

// Backward march. Diffusion is implicit (cyclic tridiagonal), the Hamiltonian
// explicit on the diffused field, sub-stepped whenever dt * speed > dx.
inline HjbSolution solve_backward(const HjbProblem& p, SpaceScheme scheme = SpaceScheme::central) {
    const TimeGrid& tg = p.tg;
    const SpaceGrid& sg = p.sg;
    const int n = sg.n_x;
    const double dt = tg.dt();
    if (static_cast<int>(p.terminal.size()) != n)
        throw std::invalid_argument("solve_backward: terminal size mismatch");
    if (!p.source.finite()) throw std::invalid_argument("solve_backward: source not finite");

    const ImplicitHeatStep heat(sg, dt);
    HjbSolution sol;
    sol.u = ValueField(tg, sg);
    sol.v = ValueField(tg, sg);

    std::vector<double> u(p.terminal.begin(), p.terminal.end());
    std::vector<double> cum(n, 0.0);  // sum_{s >= t} psi(s) dt
    std::copy(u.begin(), u.end(), sol.u.row(tg.n_t).begin());
    std::copy(u.begin(), u.end(), sol.v.row(tg.n_t).begin());

    for (int j = tg.n_t - 1; j >= 0; --j) {
        // v-step: diffuse v and the source sum together; their sum is the
        // diffused u whose shifted gradient feeds the Hamiltonian.
        std::vector<double> w = heat.apply_inverse(u);
        const auto psi = p.source.row(j);

        const int s = explicit_hamiltonian_step(p.spec, sg, scheme, w, psi, dt, u);
        sol.max_substeps = std::max(sol.max_substeps, s);

        for (int i = 0; i < n; ++i) {
            if (!std::isfinite(u[i]))
                throw NumericalError("solve_backward: non-finite value at step " + std::to_string(j));
            cum[i] += dt * psi[i];
            sol.u.at(j, i) = u[i];
            sol.v.at(j, i) = u[i] - cum[i];
        }
    }

    for (int j = 0; j <= tg.n_t; ++j) {
        const auto du = d_dx(sg, sol.u.row(j));
        for (double g : du) sol.max_grad = std::max(sol.max_grad, std::abs(g));
    }
    return sol;
}

// Interior residual of -du/dt + H(x, Du) - Lap u - psi in max norm, evaluated
// at half-steps and skipping steps adjacent to jumps of the source in time.
inline double hjb_residual(const HjbSolution& sol, const HjbProblem& p) {
    const TimeGrid& tg = p.tg;
    const SpaceGrid& sg = p.sg;
    const int n = sg.n_x;
    const double dt = tg.dt();

    // source jump detection: relative step-to-step change
    double scale = 1e-30;
    for (double v : p.source.data) scale = std::max(scale, std::abs(v));
    std::vector<bool> smooth(tg.n_t, true);
    for (int j = 0; j + 1 < tg.n_t; ++j) {
        double jump = 0.0;
        for (int i = 0; i < n; ++i) jump = std::max(jump, std::abs(p.source.at(j + 1, i) - p.source.at(j, i)));
        if (jump > 0.5 * scale && jump > 10.0 * dt * scale) {
            smooth[j] = false;
            smooth[j + 1] = false;
        }
    }

    double worst = 0.0;
    std::vector<double> mid(n);
    for (int j = 0; j < tg.n_t; ++j) {
        if (!smooth[j]) continue;
        for (int i = 0; i < n; ++i) mid[i] = 0.5 * (sol.u.at(j, i) + sol.u.at(j + 1, i));
        const auto du = d_dx(sg, mid);
        const auto lap = laplacian(sg, mid);
        for (int i = 0; i < n; ++i) {
            const double ut = (sol.u.at(j + 1, i) - sol.u.at(j, i)) / dt;
            const double r = -ut + p.spec.H(sg.node(i), du[i]) - lap[i] - p.source.at(j, i);
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

// Closed-form a-priori gradient bound: the source is split into a multiplier
// part nu(t) * phi plus a plain part psi, the terminal into eta * phi(T) plus g.
//   |Du| <= 2 e^{C0 T} [ C0 T + |Dphi| * int nu dt + |Dpsi| ]
//           + 2 sqrt(2) [ eta |Dphi(T)| + |Dg| ].
struct BernsteinInputs {
    double C0 = 1.0;
    double T = 1.0;
    double nu_time_integral = 0.0;  // int lambda/eps dt
    double eta = 0.0;               // beta/delta
    double sup_dphi = 0.0;          // sup_t |D delta Psi/dm|
    double sup_dphi_T = 0.0;
    double sup_dpsi = 0.0;          // plain source part
    double sup_dg = 0.0;            // plain terminal part
};

struct BernsteinCertificate {
    double bound = 0.0;
    double observed = 0.0;
    bool ok = true;
};

inline BernsteinCertificate bernstein_bound(const HjbSolution& sol, const BernsteinInputs& in) {
    BernsteinCertificate cert;
    cert.bound = 2.0 * std::exp(in.C0 * in.T) *
                     (in.C0 * in.T + in.sup_dphi * in.nu_time_integral + in.sup_dpsi) +
                 2.0 * std::sqrt(2.0) * (in.eta * in.sup_dphi_T + in.sup_dg);
    cert.observed = sol.max_grad;
    cert.ok = cert.observed <= cert.bound;
    return cert;
}

// ---------------------------------------------------------------------------
// Fixed-point solver through the exact heat semigroup on the torus.
// Iterates u <- P_{T-s} g~ + int_s^T P_{t-s} [ psi(t) - H_R(., Du'(t)) ] dt
// with H_R the cutoff Hamiltonian; everything spectral, so this path shares
// nothing with the finite-difference march above.
// ---------------------------------------------------------------------------

struct PicardOptions {
    double tol = 1e-10;
    int max_iter = 200;
    double mu_weight = 8.0;  // weight e^{-mu (T-t)} in the iterate-gap norm
};

struct PicardResult {
    HjbSolution sol;
    std::vector<double> gap_history;
    bool converged = false;
    int iterations = 0;
};

namespace detail {

// Smooth cutoff: 1 for |p| <= R+1, 0 for |p| >= R+2, quintic smoothstep between.
inline double cutoff_chi(double R, double p) {
    const double a = std::abs(p);
    if (a <= R + 1.0) return 1.0;
    if (a >= R + 2.0) return 0.0;
    const double s = a - (R + 1.0);
    return 1.0 - (10.0 * s * s * s - 15.0 * s * s * s * s + 6.0 * s * s * s * s * s);
}

}  // namespace detail

inline PicardResult heat_semigroup_picard(const HjbProblem& p, double R,
                                          const PicardOptions& opt = {}) {
    const TimeGrid& tg = p.tg;
    const SpaceGrid& sg = p.sg;
    const int n = sg.n_x;
    const int nt = tg.n_t;
    const double dt = tg.dt();
    const SpectralTorus spec(sg);

    // Precompute spectral coefficients of the terminal data and the sources.
    const auto ghat = spec.forward(p.terminal);
    std::vector<SpectralTorus::Coeffs> psihat(nt);
    for (int j = 0; j < nt; ++j) psihat[j] = spec.forward(p.source.row(j));

    PicardResult res;
    ValueField u(tg, sg);
    for (int j = 0; j <= nt; ++j)
        std::copy(p.terminal.begin(), p.terminal.end(), u.row(j).begin());

    const double damp_dt = dt;  // per-step semigroup increment
    std::vector<double> F(n);
    ValueField u_next(tg, sg);

    for (int it = 0; it < opt.max_iter; ++it) {
        // F(t) = psi(t) - H_R(x, Du'(t)) in physical space, then integrate
        // backward: I(s) = P_dt I(s+dt) + dt/2 [ F(s) + P_dt F(s+dt) ].
        std::vector<SpectralTorus::Coeffs> Fhat(nt + 1);
        for (int j = 0; j <= nt; ++j) {
            auto chat = spec.forward(u.row(j));
            auto dhat = spec.derivative(chat);
            const auto du = spec.inverse(dhat);
            for (int i = 0; i < n; ++i) {
                const double x = sg.node(i);
                const double h = detail::cutoff_chi(R, du[i]) * p.spec.H(x, du[i]);
                const double src = (j < nt) ? p.source.at(j, i) : p.source.at(nt - 1, i);
                F[i] = src - h;
            }
            Fhat[j] = spec.forward(F);
        }

        SpectralTorus::Coeffs integ{std::vector<double>(spec.max_mode() + 1, 0.0),
                                    std::vector<double>(spec.max_mode() + 1, 0.0)};
        auto term = ghat;
        // fill u(T) row
        std::copy(p.terminal.begin(), p.terminal.end(), u_next.row(nt).begin());
        for (int j = nt - 1; j >= 0; --j) {
            // semigroup-advance the accumulated integral and the terminal part
            spec.apply_heat(integ, damp_dt);
            spec.apply_heat(term, damp_dt);
            auto fw = Fhat[j + 1];
            spec.apply_heat(fw, damp_dt);
            for (int k = 0; k <= spec.max_mode(); ++k) {
                integ.a[k] += 0.5 * dt * (Fhat[j].a[k] + fw.a[k]);
                integ.b[k] += 0.5 * dt * (Fhat[j].b[k] + fw.b[k]);
            }
            SpectralTorus::Coeffs tot = term;
            for (int k = 0; k <= spec.max_mode(); ++k) {
                tot.a[k] += integ.a[k];
                tot.b[k] += integ.b[k];
            }
            const auto row = spec.inverse(tot);
            std::copy(row.begin(), row.end(), u_next.row(j).begin());
        }

        // weighted sup-norm iterate gap, emphasis near t = T where the map is
        // closest to exact
        double gap = 0.0;
        for (int j = 0; j <= nt; ++j) {
            const double w = std::exp(-opt.mu_weight * (tg.T - tg.node(j)) / tg.T);
            for (int i = 0; i < n; ++i)
                gap = std::max(gap, w * std::abs(u_next.at(j, i) - u.at(j, i)));
        }
        res.gap_history.push_back(gap);
        u = u_next;
        res.iterations = it + 1;
        if (gap < opt.tol) {
            res.converged = true;
            break;
        }
        const size_t ng = res.gap_history.size();
        if (ng >= 4 && res.gap_history[ng - 1] > res.gap_history[ng - 2] &&
            res.gap_history[ng - 2] > res.gap_history[ng - 3] &&
            res.gap_history[ng - 3] > res.gap_history[ng - 4])
            throw NumericalError(
                "heat_semigroup_picard: iterate gaps growing; truncation radius too small or time "
                "grid too coarse");
    }

    res.sol.u = u;
    res.sol.v = ValueField(tg, sg);
    std::vector<double> cum(n, 0.0);
    for (int j = nt; j >= 0; --j) {
        for (int i = 0; i < n; ++i) res.sol.v.at(j, i) = u.at(j, i) - cum[i];
        if (j > 0)
            for (int i = 0; i < n; ++i) cum[i] += dt * p.source.at(j - 1, i);
    }
    for (int j = 0; j <= nt; ++j) {
        const auto du = d_dx(sg, res.sol.u.row(j));
        for (double g : du) res.sol.max_grad = std::max(res.sol.max_grad, std::abs(g));
    }
    return res;
}

}  // namespace wfpc
