// The quantities the theory talks about: the constraint trajectory and its
// time derivatives, complementarity residuals, multiplier norms, control
// Lipschitz quotients and the value identity.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wfpc/functionals.hpp"
#include "wfpc/grid.hpp"
#include "wfpc/penalized.hpp"

namespace wfpc {

inline std::vector<double> psi_trajectory(const CylindricalFunctional& psi, const MeasurePath& m) {
    std::vector<double> out(m.tg.n_nodes());
    for (int j = 0; j <= m.tg.n_t; ++j)
        out[j] = eval(psi, GridMeasure(m.sg, m.slices[j]), m.tg.node(j));
    return out;
}

// d/dt Psi(m(t)) = -int D_m Psi . D_p H(x, Du) dm + int div_x D_m Psi dm.
inline double psi_dot(const ExperimentProblem& prob, const ValueField& u, const MeasurePath& m,
                      int j) {
    const SpaceGrid& sg = prob.sg;
    const GridMeasure mj(sg, m.slices[j]);
    const double t = prob.tg.node(j);
    const auto lin = linear_derivative(prob.constraint.psi, mj, t);
    const auto dm_psi = d_dx(sg, lin);
    const auto div_dm = laplacian(sg, lin);
    const auto du = d_dx(sg, u.row(j));
    std::vector<double> integrand(sg.n_x);
    for (int i = 0; i < sg.n_x; ++i)
        integrand[i] = -dm_psi[i] * prob.hamiltonian.dpH(sg.node(i), du[i]) + div_dm[i];
    return integrate(mj, integrand);
}

struct PsiSecondDerivative {
    double leading = 0.0;    // nu(t) int D_m Psi . D_pp H . D_m Psi dm
    double remainder = 0.0;  // centered FD of psi_dot minus the leading term
    bool in_smoothing_band = false;  // |Psi| <= h at some stencil node; FD is noisy there
};

// Leading coercive term of d^2/dt^2 Psi(m(t)) plus the finite-difference
// remainder. Refuses time nodes whose FD stencil straddles a sign change of
// Psi(m(t)): the trajectory is only C^2 away from zero crossings.
inline PsiSecondDerivative psi_ddot_leading(const ExperimentProblem& prob, const ValueField& u,
                                            const MeasurePath& m, const MultiplierState& mult,
                                            int j) {
    const TimeGrid& tg = prob.tg;
    if (j < 1 || j > tg.n_t - 1)
        throw std::domain_error("psi_ddot_leading: need an interior time node");

    const auto series = psi_trajectory(prob.constraint.psi, m);
    const double s0 = series[j - 1], s1 = series[j], s2 = series[j + 1];
    if ((s0 > 0) != (s1 > 0) || (s1 > 0) != (s2 > 0))
        throw std::domain_error(
            "psi_ddot_leading: t lies at a sign change of Psi(m(t)); the trajectory is not C^2 "
            "there");

    PsiSecondDerivative out;
    out.in_smoothing_band = std::abs(s0) <= prob.gamma.h || std::abs(s1) <= prob.gamma.h ||
                            std::abs(s2) <= prob.gamma.h;

    const SpaceGrid& sg = prob.sg;
    const GridMeasure mj(sg, m.slices[j]);
    const auto dm_psi = intrinsic_derivative(prob.constraint.psi, mj, tg.node(j));
    const auto du = d_dx(sg, u.row(j));
    std::vector<double> integrand(sg.n_x);
    for (int i = 0; i < sg.n_x; ++i)
        integrand[i] = dm_psi[i] * prob.hamiltonian.dppH(sg.node(i), du[i]) * dm_psi[i];
    out.leading = mult.nu(j) * integrate(mj, integrand);

    const double fd =
        (psi_dot(prob, u, m, j + 1) - psi_dot(prob, u, m, j - 1)) / (2.0 * tg.dt());
    out.remainder = fd - out.leading;
    return out;
}

// int nu(t) max(-Psi(m(t)) - h, 0) dt + eta max(-Psi(m(T)) - h, 0); the
// h-smeared band is where the smoothed multiplier is allowed to be active.
inline double complementarity_residual(const MultiplierState& mult,
                                       std::span<const double> psi_series, double h,
                                       const TimeGrid& tg) {
    if (static_cast<int>(psi_series.size()) != tg.n_nodes())
        throw std::invalid_argument("complementarity_residual: series size mismatch");
    std::vector<double> vals(psi_series.size());
    for (size_t j = 0; j < psi_series.size(); ++j)
        vals[j] = mult.nu(static_cast<int>(j)) * std::max(-psi_series[j] - h, 0.0);
    return trapezoid(tg, vals) + mult.eta() * std::max(-psi_series.back() - h, 0.0);
}

inline double multiplier_l1(const MultiplierState& mult, const TimeGrid& tg) {
    std::vector<double> nu(mult.lambda.size());
    for (size_t j = 0; j < nu.size(); ++j) nu[j] = mult.nu(static_cast<int>(j));
    return trapezoid(tg, nu) + mult.eta();
}

// Max difference quotients of the control in time and in space.
inline std::pair<double, double> control_lipschitz(const ControlField& alpha) {
    const TimeGrid& tg = alpha.tg;
    const SpaceGrid& sg = alpha.sg;
    double lip_t = 0.0, lip_x = 0.0;
    for (int j = 0; j <= tg.n_t; ++j)
        for (int i = 0; i < sg.n_x; ++i) {
            if (j < tg.n_t)
                lip_t = std::max(lip_t, std::abs(alpha.at(j + 1, i) - alpha.at(j, i)) / tg.dt());
            lip_x = std::max(lip_x,
                             std::abs(alpha.at(j, sg.wrap(i + 1)) - alpha.at(j, i)) / sg.dx());
        }
    return {lip_t, lip_x};
}

struct ValueReport {
    double lhs = 0.0;  // int u(0) dm0 + int f dt + g(m(T))
    double rhs = 0.0;  // J
    double gap = 0.0;
    double machine_defect = 0.0;  // exact-telescoping residual of the paired schemes
};

inline ValueReport value_report(const PenalizedSolution& sol) {
    ValueReport rep;
    rep.lhs = sol.identity.u0_m0 + sol.cost.f_term + sol.cost.g_term;
    rep.rhs = sol.cost.J;
    rep.gap = std::abs(rep.lhs - rep.rhs);
    rep.machine_defect = sol.identity.machine_defect;
    return rep;
}

}  // namespace wfpc
