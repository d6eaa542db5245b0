// Outer solver for the penalized problem: fictitious play over the measure
// path, with the multiplier lambda(t) = gamma_h'(Psi(m(t))) feeding the HJB
// source and the resulting feedback control feeding the Fokker-Planck flow.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wfpc/fokker_planck.hpp"
#include "wfpc/functionals.hpp"
#include "wfpc/grid.hpp"
#include "wfpc/hamiltonian.hpp"
#include "wfpc/hjb.hpp"

namespace wfpc {

struct MultiplierState {
    double epsilon = 1.0;
    double delta = 1.0;
    std::vector<double> lambda;  // one entry per time node, in [0, 1]
    double beta = 0.0;           // in [0, 1]

    double nu(int j) const { return lambda[j] / epsilon; }
    double eta() const { return beta / delta; }

    void validate() const {
        if (!(epsilon > 0.0) || !(delta > 0.0))
            throw std::invalid_argument("MultiplierState: epsilon, delta must be positive");
        for (double l : lambda)
            if (!(l >= 0.0 && l <= 1.0))
                throw std::invalid_argument("MultiplierState: lambda outside [0,1]");
        if (!(beta >= 0.0 && beta <= 1.0))
            throw std::invalid_argument("MultiplierState: beta outside [0,1]");
    }
};

// Everything that defines one experiment instance.
struct ExperimentProblem {
    TimeGrid tg;
    SpaceGrid sg;
    HamiltonianSpec hamiltonian;
    CylindricalFunctional f;  // running mean-field cost (may be empty)
    CylindricalFunctional g;  // terminal mean-field cost (may be empty)
    ConstraintSpec constraint;
    GridMeasure m0;
    SmoothPlus gamma{1e-3};
};

struct CostReport {
    double kinetic = 0.0;
    double f_term = 0.0;
    double g_term = 0.0;
    double J = 0.0;
    double penalty_running = 0.0;
    double penalty_terminal = 0.0;
    double J_pen = 0.0;
};

struct ValueIdentity {
    double u0_m0 = 0.0;
    double kinetic = 0.0;
    double source_pairing = 0.0;
    double terminal_pairing = 0.0;
    double machine_defect = 0.0;  // telescoping check, rounding-level when schemes pair exactly
    double gap = 0.0;             // |u0_m0 - kinetic|, the reported identity gap
};

struct ConvergenceHistory {
    bool converged = false;
    int rounds = 0;
    double q_consecutive = 0.0;
    double q_best_response = 0.0;
    double lambda_change = 0.0;
};

struct PenalizedSolution {
    ValueField u;
    MeasurePath m;
    ControlField alpha;
    MultiplierState mult;
    CostReport cost;
    ValueIdentity identity;
    ConvergenceHistory history;
    double hjb_residual_max = 0.0;
    BernsteinCertificate bernstein;
    std::vector<double> psi_series;          // Psi(m(t_j)) on the reported path
    std::vector<GridMeasure> iterate_samples;  // for transversality checks
};

// HJB right-hand side at time node j: nu(t) dPsi/dm(mbar(t)) + df/dm(t, mbar(t)).
inline std::vector<double> assemble_source(const ExperimentProblem& prob, const MeasurePath& mbar,
                                           const MultiplierState& mult, int j) {
    const double t = prob.tg.node(j);
    const GridMeasure mj(prob.sg, mbar.slices[j]);
    std::vector<double> out = linear_derivative(prob.constraint.psi, mj, t);
    const double nu = mult.nu(j);
    for (double& v : out) v *= nu;
    if (!prob.f.empty()) {
        const auto df = linear_derivative(prob.f, mj, t);
        for (size_t i = 0; i < out.size(); ++i) out[i] += df[i];
    }
    return out;
}

// Terminal data: eta dPsi/dm(m(T)) + dg/dm(m(T)).
inline std::vector<double> assemble_terminal(const ExperimentProblem& prob, const GridMeasure& mT,
                                             const MultiplierState& mult) {
    std::vector<double> out = linear_derivative(prob.constraint.psi, mT, prob.tg.T);
    const double eta = mult.eta();
    for (double& v : out) v *= eta;
    if (!prob.g.empty()) {
        const auto dg = linear_derivative(prob.g, mT, prob.tg.T);
        for (size_t i = 0; i < out.size(); ++i) out[i] += dg[i];
    }
    return out;
}

// lambda(t_j) = gamma_h'(Psi(m(t_j))), beta = gamma_h'(Psi(m(T))).
inline void update_multiplier(const ExperimentProblem& prob, const MeasurePath& mbar,
                              MultiplierState& mult) {
    mult.lambda.resize(prob.tg.n_nodes());
    for (int j = 0; j <= prob.tg.n_t; ++j) {
        const double psi =
            eval(prob.constraint.psi, GridMeasure(prob.sg, mbar.slices[j]), prob.tg.node(j));
        mult.lambda[j] = prob.gamma.prime(psi);
    }
    mult.beta = mult.lambda[prob.tg.n_t];
}

// Cost of a (control, path) pair. The kinetic term uses the scheme-native
// left-rectangle sum in time (the running cost lives on steps, like a flux);
// the mean-field and penalty integrals use the trapezoid rule on nodes.
inline CostReport total_cost(const ExperimentProblem& prob, const ControlField& alpha,
                             const MeasurePath& m, const MultiplierState& mult) {
    const TimeGrid& tg = prob.tg;
    const SpaceGrid& sg = prob.sg;
    const int n = sg.n_x;
    CostReport rep;

    for (int j = 0; j < tg.n_t; ++j) {
        double k = 0.0;
        for (int i = 0; i < n; ++i)
            k += lagrangian(prob.hamiltonian, sg.node(i), alpha.at(j, i)) * m.slices[j][i];
        rep.kinetic += k * sg.dx() * tg.dt();
    }

    std::vector<double> fvals(tg.n_nodes(), 0.0), psivals(tg.n_nodes(), 0.0);
    for (int j = 0; j <= tg.n_t; ++j) {
        const GridMeasure mj(sg, m.slices[j]);
        if (!prob.f.empty()) fvals[j] = eval(prob.f, mj, tg.node(j));
        psivals[j] = psi_plus(eval(prob.constraint.psi, mj, tg.node(j)));
    }
    rep.f_term = prob.f.empty() ? 0.0 : trapezoid(tg, fvals);
    rep.g_term = prob.g.empty() ? 0.0 : eval(prob.g, GridMeasure(sg, m.slices[tg.n_t]), tg.T);
    rep.penalty_running = trapezoid(tg, psivals) / mult.epsilon;
    rep.penalty_terminal = psivals[tg.n_t] / mult.delta;
    rep.J = rep.kinetic + rep.f_term + rep.g_term;
    rep.J_pen = rep.J + rep.penalty_running + rep.penalty_terminal;
    return rep;
}

struct SolveOptions {
    int max_rounds = 20000;
    double tol_fp = 1e-15;      // q-distance between consecutive averaged paths
    double tol_br = 1e-11;      // q-distance of best response vs average
    double tol_lambda = 2e-3;   // max |lambda_{k+1} - lambda_k|
    int sample_stride = 500;    // iterate sampling for transversality checks
    bool throw_on_nonconverged = false;
};

namespace detail {

struct RoundOutput {
    HjbProblem hp;
    HjbSolution hs;
    DualTransportResult dual;
};

inline RoundOutput best_response(const ExperimentProblem& prob, const MeasurePath& mbar,
                                 const MultiplierState& mult) {
    RoundOutput out;
    out.hp.spec = prob.hamiltonian;
    out.hp.tg = prob.tg;
    out.hp.sg = prob.sg;
    out.hp.source = ValueField(prob.tg, prob.sg);
    for (int j = 0; j < prob.tg.n_t; ++j) {
        const auto src = assemble_source(prob, mbar, mult, j);
        std::copy(src.begin(), src.end(), out.hp.source.row(j).begin());
    }
    out.hp.terminal =
        assemble_terminal(prob, GridMeasure(prob.sg, mbar.slices[prob.tg.n_t]), mult);
    out.hs = solve_backward(out.hp, SpaceScheme::godunov);
    out.dual = solve_forward_dual(out.hp, out.hs, prob.m0);
    return out;
}

inline double sup_grad(const SpaceGrid& g, std::span<const double> v) {
    double worst = 0.0;
    for (double d : d_dx(g, v)) worst = std::max(worst, std::abs(d));
    return worst;
}

}  // namespace detail

inline PenalizedSolution solve_penalized(const ExperimentProblem& prob, double epsilon, double delta,
                                         const SolveOptions& opt = {}) {
    const TimeGrid& tg = prob.tg;
    const SpaceGrid& sg = prob.sg;

    if (eval(prob.constraint.psi, prob.m0, 0.0) >= 0.0)
        throw std::invalid_argument("solve_penalized: Psi(m0) must be negative");

    MultiplierState mult;
    mult.epsilon = epsilon;
    mult.delta = delta;

    // start from the uncontrolled heat flow
    MeasurePath mbar = solve_forward(ControlField(tg, sg, 0.0), prob.m0);

    PenalizedSolution sol;
    std::vector<double> lambda_prev;

    int k = 0;
    for (; k < opt.max_rounds; ++k) {
        update_multiplier(prob, mbar, mult);
        const double dlam = [&] {
            if (lambda_prev.empty()) return 1.0;
            double d = 0.0;
            for (size_t j = 0; j < mult.lambda.size(); ++j)
                d = std::max(d, std::abs(mult.lambda[j] - lambda_prev[j]));
            return d;
        }();
        lambda_prev = mult.lambda;

        auto round = detail::best_response(prob, mbar, mult);

        const double omega = 2.0 / (k + 2.0);
        MeasurePath mbar_next = mbar;
        for (int j = 0; j <= tg.n_t; ++j)
            for (int i = 0; i < sg.n_x; ++i)
                mbar_next.slices[j][i] =
                    (1.0 - omega) * mbar.slices[j][i] + omega * round.dual.m.slices[j][i];

        const double q_cons = q_distance(mbar_next, mbar);
        const double q_br = q_distance(round.dual.m, mbar);
        mbar = std::move(mbar_next);

        if (opt.sample_stride > 0 && k % opt.sample_stride == 0)
            sol.iterate_samples.emplace_back(sg, mbar.slices[tg.n_t / 2]);

        sol.history.rounds = k + 1;
        sol.history.q_consecutive = q_cons;
        sol.history.q_best_response = q_br;
        sol.history.lambda_change = dlam;
        if (q_cons < opt.tol_fp && q_br < opt.tol_br && dlam < opt.tol_lambda) {
            sol.history.converged = true;
            break;
        }
    }
    if (!sol.history.converged && opt.throw_on_nonconverged)
        throw NumericalError("solve_penalized: not converged after " +
                             std::to_string(sol.history.rounds) + " rounds (q_br=" +
                             std::to_string(sol.history.q_best_response) + ")");

    // Final consistent tuple: multipliers from the averaged path, u solving the
    // HJB at that path, m the exact FP flow under the resulting control.
    update_multiplier(prob, mbar, mult);
    auto fin = detail::best_response(prob, mbar, mult);

    sol.u = fin.hs.u;
    sol.m = fin.dual.m;
    sol.alpha = fin.dual.alpha;
    sol.mult = mult;
    sol.mult.validate();
    sol.hjb_residual_max = hjb_residual(fin.hs, fin.hp);

    sol.cost = total_cost(prob, sol.alpha, sol.m, mult);
    sol.cost.kinetic = fin.dual.kinetic;  // scheme-exact running cost
    sol.cost.J = sol.cost.kinetic + sol.cost.f_term + sol.cost.g_term;
    sol.cost.J_pen = sol.cost.J + sol.cost.penalty_running + sol.cost.penalty_terminal;

    sol.identity.u0_m0 = integrate(sg, prob.m0.density, fin.hs.u.row(0));
    sol.identity.kinetic = fin.dual.kinetic;
    sol.identity.source_pairing = fin.dual.source_pairing;
    sol.identity.terminal_pairing = fin.dual.terminal_pairing;
    sol.identity.machine_defect = fin.dual.identity_defect;
    sol.identity.gap = std::abs(sol.identity.u0_m0 - sol.identity.kinetic);

    sol.psi_series.resize(tg.n_nodes());
    for (int j = 0; j <= tg.n_t; ++j)
        sol.psi_series[j] =
            eval(prob.constraint.psi, GridMeasure(sg, sol.m.slices[j]), tg.node(j));

    // Bernstein inputs from the assembled data
    BernsteinInputs bi;
    bi.C0 = prob.hamiltonian.C0;
    bi.T = tg.T;
    std::vector<double> nu_vals(tg.n_nodes());
    for (int j = 0; j <= tg.n_t; ++j) nu_vals[j] = mult.nu(j);
    bi.nu_time_integral = trapezoid(tg, nu_vals);
    bi.eta = mult.eta();
    for (int j = 0; j <= tg.n_t; ++j) {
        const GridMeasure mj(sg, mbar.slices[j]);
        bi.sup_dphi = std::max(
            bi.sup_dphi,
            detail::sup_grad(sg, linear_derivative(prob.constraint.psi, mj, tg.node(j))));
        if (!prob.f.empty())
            bi.sup_dpsi = std::max(
                bi.sup_dpsi, detail::sup_grad(sg, linear_derivative(prob.f, mj, tg.node(j))));
    }
    {
        const GridMeasure mT(sg, mbar.slices[tg.n_t]);
        bi.sup_dphi_T = detail::sup_grad(sg, linear_derivative(prob.constraint.psi, mT, tg.T));
        if (!prob.g.empty())
            bi.sup_dg = detail::sup_grad(sg, linear_derivative(prob.g, mT, tg.T));
    }
    sol.bernstein = bernstein_bound(fin.hs, bi);

    for (int j = 0; j <= tg.n_t; j += std::max(1, tg.n_t / 8))
        sol.iterate_samples.emplace_back(sg, sol.m.slices[j]);
    return sol;
}

}  // namespace wfpc
