// Stochastic oracle: Euler-Maruyama for dX = alpha(t, X) dt + sqrt(2) dB on
// the torus, the McKean-Vlasov steering flow, an Ito-formula checker for
// cylindrical functionals, and the circle Wasserstein-1 distance.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "wfpc/functionals.hpp"
#include "wfpc/grid.hpp"
#include "wfpc/rng.hpp"

namespace wfpc {

struct ParticleEnsemble {
    std::vector<double> positions;  // wrapped into [0, Lx)
    uint64_t seed = 0;
    SpaceGrid grid;
};

namespace detail {

inline double wrap_position(double x, double Lx) {
    x = std::fmod(x, Lx);
    return x < 0.0 ? x + Lx : x;
}

// Linear interpolation of a node field at an arbitrary torus point.
inline double interp(const SpaceGrid& g, std::span<const double> f, double x) {
    const double s = x / g.dx();
    const int i0 = static_cast<int>(std::floor(s));
    const double w = s - i0;
    return (1.0 - w) * f[g.wrap(i0)] + w * f[g.wrap(i0 + 1)];
}

}  // namespace detail

// Inverse-CDF sampling of the histogram density: node i owns the cell
// [x_i - dx/2, x_i + dx/2).
inline ParticleEnsemble sample_initial(const GridMeasure& m0, int N, uint64_t seed) {
    const SpaceGrid& g = m0.grid;
    const int n = g.n_x;
    std::vector<double> cdf(n + 1, 0.0);
    for (int i = 0; i < n; ++i) cdf[i + 1] = cdf[i] + m0.density[i] * g.dx();
    const double total = cdf[n];

    ParticleEnsemble ens;
    ens.seed = seed;
    ens.grid = g;
    ens.positions.resize(N);
    const CounterRng rng{seed};
    for (int p = 0; p < N; ++p) {
        const double u = rng.uniform(/*stream=*/0, p) * total;
        const int cell = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) - 1;
        const int c = std::clamp(cell, 0, n - 1);
        const double frac = (u - cdf[c]) / std::max(cdf[c + 1] - cdf[c], 1e-300);
        ens.positions[p] = detail::wrap_position(g.node(c) - 0.5 * g.dx() + frac * g.dx(), g.Lx);
    }
    return ens;
}

inline GridMeasure histogram(std::span<const double> positions, const SpaceGrid& g) {
    std::vector<double> counts(g.n_x, 0.0);
    for (double x : positions) {
        const int i = g.wrap(static_cast<int>(std::lround(x / g.dx())));
        counts[i] += 1.0;
    }
    const double w = 1.0 / (static_cast<double>(positions.size()) * g.dx());
    for (double& c : counts) c *= w;
    return GridMeasure(g, std::move(counts));
}

// Empirical measure flow of the controlled SDE; histogrammed per time node.
inline MeasurePath simulate_sde(const ControlField& alpha, const GridMeasure& m0, int N,
                                uint64_t seed) {
    if (N < 100) throw std::invalid_argument("simulate_sde: need N >= 100");
    const TimeGrid& tg = alpha.tg;
    const SpaceGrid& sg = alpha.sg;
    const double dt = tg.dt();
    const double noise = std::sqrt(2.0 * dt);

    ParticleEnsemble ens = sample_initial(m0, N, seed);
    MeasurePath path(tg, sg);
    path.slices[0] = histogram(ens.positions, sg).density;

    const CounterRng rng{seed};
    for (int j = 0; j < tg.n_t; ++j) {
        const auto a = alpha.row(j);
        for (int p = 0; p < N; ++p) {
            double x = ens.positions[p];
            x += detail::interp(sg, a, x) * dt +
                 noise * rng.normal(/*stream=*/static_cast<uint64_t>(j) + 1, p);
            ens.positions[p] = detail::wrap_position(x, sg.Lx);
        }
        path.slices[j + 1] = histogram(ens.positions, sg).density;
    }
    return path;
}

struct SteeringResult {
    MeasurePath path;
    std::vector<double> psi_series;
    double threshold = 0.0;  // minimal C with a guaranteed descent, |div D_m Psi|_inf / eta2
    bool above_threshold = true;
};

// McKean-Vlasov steering: each step recomputes D_m Psi from the current
// empirical measure and drifts every particle by -C D_m Psi(m^(t), X).
inline SteeringResult steering_flow(const ConstraintSpec& constraint, double C,
                                    const GridMeasure& m0, int N, uint64_t seed,
                                    const TimeGrid& tg) {
    const SpaceGrid& sg = m0.grid;
    const double dt = tg.dt();
    const double noise = std::sqrt(2.0 * dt);

    SteeringResult res;
    res.path = MeasurePath(tg, sg);
    res.psi_series.resize(tg.n_nodes());

    ParticleEnsemble ens = sample_initial(m0, N, seed);
    GridMeasure mh = histogram(ens.positions, sg);
    res.path.slices[0] = mh.density;
    res.psi_series[0] = eval(constraint.psi, mh, 0.0);

    {
        const auto div_dm = laplacian(sg, linear_derivative(constraint.psi, mh, 0.0));
        double sup = 0.0;
        for (double v : div_dm) sup = std::max(sup, std::abs(v));
        res.threshold = sup / constraint.eta2;
        res.above_threshold = C > res.threshold;
    }

    const CounterRng rng{seed ^ 0x5b1ce5ULL};
    for (int j = 0; j < tg.n_t; ++j) {
        const auto drift = intrinsic_derivative(constraint.psi, mh, tg.node(j));
        for (int p = 0; p < N; ++p) {
            double x = ens.positions[p];
            x += -C * detail::interp(sg, drift, x) * dt +
                 noise * rng.normal(static_cast<uint64_t>(j) + 1, p);
            ens.positions[p] = detail::wrap_position(x, sg.Lx);
        }
        mh = histogram(ens.positions, sg);
        res.path.slices[j + 1] = mh.density;
        res.psi_series[j + 1] = eval(constraint.psi, mh, tg.node(j + 1));
    }
    return res;
}

// Defect of U(m(t)) = U(m(0)) + int int D_m U . alpha dm ds
//                               + int int div_x D_m U dm ds
// along an empirical path; left-rectangle quadrature matching the Euler step.
inline double ito_check(const CylindricalFunctional& U, const MeasurePath& path,
                        const ControlField& alpha) {
    const TimeGrid& tg = path.tg;
    const SpaceGrid& sg = path.sg;
    const double dt = tg.dt();
    const double u0 = eval(U, GridMeasure(sg, path.slices[0]), 0.0);

    double integral = 0.0;
    double worst = 0.0;
    for (int j = 0; j < tg.n_t; ++j) {
        const GridMeasure mj(sg, path.slices[j]);
        const double t = tg.node(j);
        const auto lin = linear_derivative(U, mj, t);
        const auto dm_u = d_dx(sg, lin);
        const auto div_dm = laplacian(sg, lin);
        const auto a = alpha.row(j);
        std::vector<double> integrand(sg.n_x);
        for (int i = 0; i < sg.n_x; ++i) integrand[i] = dm_u[i] * a[i] + div_dm[i];
        integral += dt * integrate(mj, integrand);

        const double lhs = eval(U, GridMeasure(sg, path.slices[j + 1]), tg.node(j + 1)) - u0;
        worst = std::max(worst, std::abs(lhs - integral));
    }
    return worst;
}

// Wasserstein-1 on the circle via cumulative densities: W1 = min_theta
// int |F_1 - F_2 - theta| dx, minimized at the median of the CDF gap.
inline double wasserstein1_circle(const GridMeasure& m1, const GridMeasure& m2) {
    if (!(m1.grid == m2.grid)) throw std::invalid_argument("wasserstein1_circle: grids differ");
    const SpaceGrid& g = m1.grid;
    const int n = g.n_x;
    std::vector<double> gap(n);
    double c = 0.0;
    for (int i = 0; i < n; ++i) {
        c += (m1.density[i] - m2.density[i]) * g.dx();
        gap[i] = c;
    }
    std::vector<double> sorted = gap;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double med = sorted[n / 2];
    double w1 = 0.0;
    for (double v : gap) w1 += std::abs(v - med) * g.dx();
    return w1;
}

// 1 - |first trigonometric moment|; grows toward 1 - is_uniform under mixing.
inline double circular_variance(const GridMeasure& m) {
    const SpaceGrid& g = m.grid;
    double cr = 0.0, ci = 0.0;
    for (int i = 0; i < g.n_x; ++i) {
        const double th = 2.0 * std::numbers::pi * g.node(i) / g.Lx;
        cr += std::cos(th) * m.density[i];
        ci += std::sin(th) * m.density[i];
    }
    cr *= g.dx();
    ci *= g.dx();
    return 1.0 - std::sqrt(cr * cr + ci * ci);
}

}  // namespace wfpc
