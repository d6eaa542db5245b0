// (epsilon, delta) sweep locating the constraint-satisfaction threshold.
#pragma once

#include <algorithm>
#include <future>
#include <string>
#include <vector>

#include "wfpc/diagnostics.hpp"
#include "wfpc/penalized.hpp"

namespace wfpc {

struct SweepRow {
    double epsilon = 0.0, delta = 0.0;
    bool converged = false;
    bool solver_failed = false;
    std::string failure;
    int rounds = 0;
    double max_psi = 0.0;
    double psi_T = 0.0;
    CostReport cost;
    double nu_l1_eta = 0.0;  // int nu dt + eta
    double lip_t = 0.0, lip_x = 0.0;
    double max_du = 0.0;
    double bernstein_bound_value = 0.0;
    double complementarity = 0.0;
    double value_gap = 0.0;
    PenalizedSolution solution;  // kept for downstream diagnostics
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double ctol = 1e-2;
    double threshold_epsilon = 0.0;  // largest eps with itself and everything smaller feasible
    bool threshold_found = false;
};

inline SweepReport epsilon_sweep(const ExperimentProblem& prob, std::vector<double> epsilons,
                                 std::vector<double> deltas, const SolveOptions& opt = {},
                                 double ctol = 1e-2, int jobs = 1) {
    if (epsilons.size() != deltas.size() || epsilons.empty())
        throw std::invalid_argument("epsilon_sweep: need matching nonempty epsilon/delta lists");
    for (size_t i = 1; i < epsilons.size(); ++i)
        if (epsilons[i] >= epsilons[i - 1])
            throw std::invalid_argument("epsilon_sweep: epsilon list must be sorted decreasing");

    SweepReport rep;
    rep.ctol = ctol;
    rep.rows.resize(epsilons.size());

    auto run_one = [&](size_t idx) {
        SweepRow row;
        row.epsilon = epsilons[idx];
        row.delta = deltas[idx];
        try {
            PenalizedSolution s = solve_penalized(prob, epsilons[idx], deltas[idx], opt);
            row.converged = s.history.converged;
            row.rounds = s.history.rounds;
            row.max_psi = *std::max_element(s.psi_series.begin(), s.psi_series.end());
            row.psi_T = s.psi_series.back();
            row.cost = s.cost;
            row.nu_l1_eta = multiplier_l1(s.mult, prob.tg);
            auto [lt, lx] = control_lipschitz(s.alpha);
            row.lip_t = lt;
            row.lip_x = lx;
            row.max_du = s.bernstein.observed;
            row.bernstein_bound_value = s.bernstein.bound;
            row.complementarity =
                complementarity_residual(s.mult, s.psi_series, prob.gamma.h, prob.tg);
            row.value_gap = s.identity.gap;
            row.solution = std::move(s);
        } catch (const std::exception& e) {
            row.solver_failed = true;
            row.failure = e.what();
        }
        rep.rows[idx] = std::move(row);
    };

    if (jobs <= 1) {
        for (size_t i = 0; i < epsilons.size(); ++i) run_one(i);
    } else {
        std::vector<std::future<void>> pending;
        for (size_t i = 0; i < epsilons.size(); ++i) {
            pending.push_back(std::async(std::launch::async, run_one, i));
            if (static_cast<int>(pending.size()) >= jobs) {
                for (auto& f : pending) f.get();
                pending.clear();
            }
        }
        for (auto& f : pending) f.get();
    }

    for (size_t i = 0; i < rep.rows.size(); ++i) {
        bool all_ok = true;
        for (size_t j = i; j < rep.rows.size(); ++j)
            all_ok = all_ok && !rep.rows[j].solver_failed && rep.rows[j].max_psi <= ctol;
        if (all_ok) {
            rep.threshold_epsilon = rep.rows[i].epsilon;
            rep.threshold_found = true;
            break;
        }
    }
    return rep;
}

}  // namespace wfpc
