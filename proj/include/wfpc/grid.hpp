// Core grid types for the periodic 1-d torus: time/space grids, probability
// densities, space-time fields, and the discrete calculus used everywhere else
// (quadrature, central differences, 3-point Laplacian, cyclic tridiagonal solves).
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfpc {

// Thrown when a solver hits NaN/Inf, loses mass, or violates a stability guard.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct TimeGrid {
    double T = 1.0;
    int n_t = 2;

    TimeGrid() = default;
    TimeGrid(double horizon, int steps) : T(horizon), n_t(steps) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
        if (n_t < 2) throw std::invalid_argument("TimeGrid: need n_t >= 2");
    }
    double dt() const { return T / n_t; }
    double node(int j) const { return j * dt(); }
    int n_nodes() const { return n_t + 1; }
};

struct SpaceGrid {
    double Lx = 1.0;
    int n_x = 8;
    bool periodic = true;  // always true in v1

    SpaceGrid() = default;
    SpaceGrid(double period, int cells) : Lx(period), n_x(cells) {
        if (!(Lx > 0.0)) throw std::invalid_argument("SpaceGrid: period must be positive");
        if (n_x < 8) throw std::invalid_argument("SpaceGrid: need n_x >= 8");
    }
    double dx() const { return Lx / n_x; }
    double node(int i) const { return i * dx(); }
    int wrap(int i) const {
        int r = i % n_x;
        return r < 0 ? r + n_x : r;
    }
    bool operator==(const SpaceGrid& o) const {
        return Lx == o.Lx && n_x == o.n_x;
    }
};

// Discrete probability density w.r.t. dx on the nodes of a SpaceGrid.
struct GridMeasure {
    SpaceGrid grid;
    std::vector<double> density;

    GridMeasure() = default;
    GridMeasure(const SpaceGrid& g, std::vector<double> d) : grid(g), density(std::move(d)) {
        if (static_cast<int>(density.size()) != grid.n_x)
            throw std::invalid_argument("GridMeasure: density size does not match grid");
        for (double v : density)
            if (!(v >= 0.0)) throw std::invalid_argument("GridMeasure: negative or NaN density entry");
        if (std::abs(mass() - 1.0) > 1e-12)
            throw std::invalid_argument("GridMeasure: total mass deviates from 1 by more than 1e-12");
    }

    double mass() const {
        double s = 0.0;
        for (double v : density) s += v;
        return s * grid.dx();
    }

    static GridMeasure uniform(const SpaceGrid& g) {
        return GridMeasure(g, std::vector<double>(g.n_x, 1.0 / g.Lx));
    }

    // Normalizes a nonnegative profile into a probability density.
    static GridMeasure from_profile(const SpaceGrid& g, std::span<const double> profile) {
        if (static_cast<int>(profile.size()) != g.n_x)
            throw std::invalid_argument("GridMeasure: profile size does not match grid");
        double s = 0.0;
        for (double v : profile) {
            if (!(v >= 0.0)) throw std::invalid_argument("GridMeasure: negative profile entry");
            s += v;
        }
        if (!(s > 0.0)) throw std::invalid_argument("GridMeasure: profile has no mass");
        std::vector<double> d(profile.begin(), profile.end());
        for (double& v : d) v /= s * g.dx();
        return GridMeasure(g, std::move(d));
    }
};

// Flat (n_t+1) x n_x storage shared by value fields, control fields and paths.
template <class Tag>
struct SpaceTimeField {
    TimeGrid tg;
    SpaceGrid sg;
    std::vector<double> data;  // row j = values at time node j

    SpaceTimeField() = default;
    SpaceTimeField(const TimeGrid& t, const SpaceGrid& s, double fill = 0.0)
        : tg(t), sg(s), data(static_cast<size_t>(t.n_nodes()) * s.n_x, fill) {}

    double& at(int j, int i) { return data[static_cast<size_t>(j) * sg.n_x + i]; }
    double at(int j, int i) const { return data[static_cast<size_t>(j) * sg.n_x + i]; }
    std::span<double> row(int j) { return {data.data() + static_cast<size_t>(j) * sg.n_x, static_cast<size_t>(sg.n_x)}; }
    std::span<const double> row(int j) const {
        return {data.data() + static_cast<size_t>(j) * sg.n_x, static_cast<size_t>(sg.n_x)};
    }
    bool finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

using ValueField = SpaceTimeField<struct ValueFieldTag>;
using ControlField = SpaceTimeField<struct ControlFieldTag>;

// Flow of probability measures; slice 0 is the initial measure.
struct MeasurePath {
    TimeGrid tg;
    SpaceGrid sg;
    std::vector<std::vector<double>> slices;  // n_t+1 densities

    MeasurePath() = default;
    MeasurePath(const TimeGrid& t, const SpaceGrid& s)
        : tg(t), sg(s), slices(t.n_nodes(), std::vector<double>(s.n_x, 0.0)) {}

    GridMeasure measure(int j) const { return GridMeasure(sg, slices[j]); }
    std::span<const double> slice(int j) const { return slices[j]; }
};

// dx * sum_i phi_i * m_i, the discrete realisation of the pairing of a measure
// with a node-sampled function.
inline double integrate(const GridMeasure& m, std::span<const double> phi) {
    if (phi.size() != m.density.size())
        throw std::invalid_argument("integrate: sample count does not match grid");
    double s = 0.0;
    for (size_t i = 0; i < phi.size(); ++i) s += phi[i] * m.density[i];
    return s * m.grid.dx();
}

inline double integrate(const SpaceGrid& g, std::span<const double> density, std::span<const double> phi) {
    if (phi.size() != density.size() || static_cast<int>(phi.size()) != g.n_x)
        throw std::invalid_argument("integrate: sample count does not match grid");
    double s = 0.0;
    for (size_t i = 0; i < phi.size(); ++i) s += phi[i] * density[i];
    return s * g.dx();
}

// Second-order central difference with periodic wraparound. Exact on constants;
// the Nyquist sawtooth (-1)^i is aliased to zero by this stencil.
inline std::vector<double> d_dx(const SpaceGrid& g, std::span<const double> f) {
    if (static_cast<int>(f.size()) != g.n_x) throw std::invalid_argument("d_dx: size mismatch");
    const int n = g.n_x;
    const double inv2dx = 1.0 / (2.0 * g.dx());
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = (f[g.wrap(i + 1)] - f[g.wrap(i - 1)]) * inv2dx;
    return out;
}

// Standard periodic 3-point Laplacian.
inline std::vector<double> laplacian(const SpaceGrid& g, std::span<const double> f) {
    if (static_cast<int>(f.size()) != g.n_x) throw std::invalid_argument("laplacian: size mismatch");
    const int n = g.n_x;
    const double invdx2 = 1.0 / (g.dx() * g.dx());
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = (f[g.wrap(i + 1)] - 2.0 * f[i] + f[g.wrap(i - 1)]) * invdx2;
    return out;
}

// Trapezoid rule over the time nodes of a grid.
inline double trapezoid(const TimeGrid& tg, std::span<const double> values) {
    if (static_cast<int>(values.size()) != tg.n_nodes())
        throw std::invalid_argument("trapezoid: need one value per time node");
    double s = 0.5 * (values.front() + values.back());
    for (int j = 1; j < tg.n_t; ++j) s += values[j];
    return s * tg.dt();
}

// Solves (diag, off-diagonal lower/upper, with periodic corner entries) systems
// by the Thomas algorithm plus a Sherman-Morrison rank-one correction.
// Rows: lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i], indices mod n.
inline std::vector<double> solve_cyclic_tridiagonal(std::span<const double> lower,
                                                    std::span<const double> diag,
                                                    std::span<const double> upper,
                                                    std::span<const double> rhs) {
    const int n = static_cast<int>(diag.size());
    if (n < 3) throw std::invalid_argument("solve_cyclic_tridiagonal: need n >= 3");
    if (static_cast<int>(lower.size()) != n || static_cast<int>(upper.size()) != n ||
        static_cast<int>(rhs.size()) != n)
        throw std::invalid_argument("solve_cyclic_tridiagonal: size mismatch");

    // Condensed system without the corner entries, gauge chosen so the
    // rank-one update stays well conditioned.
    const double gamma = -diag[0];
    std::vector<double> d(diag.begin(), diag.end());
    d[0] -= gamma;
    d[n - 1] -= lower[0] * upper[n - 1] / gamma;

    auto thomas = [&](std::span<const double> b) {
        std::vector<double> c(n), x(n);
        double piv = d[0];
        if (piv == 0.0) throw NumericalError("cyclic tridiagonal solve: zero pivot");
        c[0] = upper[0] / piv;
        x[0] = b[0] / piv;
        for (int i = 1; i < n; ++i) {
            piv = d[i] - lower[i] * c[i - 1];
            if (piv == 0.0) throw NumericalError("cyclic tridiagonal solve: zero pivot");
            c[i] = upper[i] / piv;
            x[i] = (b[i] - lower[i] * x[i - 1]) / piv;
        }
        for (int i = n - 2; i >= 0; --i) x[i] -= c[i] * x[i + 1];
        return x;
    };

    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = upper[n - 1];
    std::vector<double> y = thomas(rhs);
    std::vector<double> z = thomas(u);

    // v = (1, lower[0]/gamma, ..., 0) enters through v.y / (1 + v.z).
    const double vy = y[0] + lower[0] / gamma * y[n - 1];
    const double vz = z[0] + lower[0] / gamma * z[n - 1];
    const double factor = vy / (1.0 + vz);
    for (int i = 0; i < n; ++i) y[i] -= factor * z[i];
    return y;
}

// Backward-Euler heat step on the periodic grid: solves (I - nu*Lap_h) x = rhs.
// Row sums of the matrix are 1, so the solve conserves dx*sum exactly, and the
// matrix is an M-matrix, so nonnegative inputs stay nonnegative.
class ImplicitHeatStep {
public:
    ImplicitHeatStep() = default;
    ImplicitHeatStep(const SpaceGrid& g, double dt) : g_(g) {
        const double nu = dt / (g.dx() * g.dx());
        lower_.assign(g.n_x, -nu);
        diag_.assign(g.n_x, 1.0 + 2.0 * nu);
        upper_.assign(g.n_x, -nu);
    }
    std::vector<double> apply_inverse(std::span<const double> rhs) const {
        return solve_cyclic_tridiagonal(lower_, diag_, upper_, rhs);
    }
    // (I - nu*Lap_h) x, the forward action.
    std::vector<double> apply(std::span<const double> x) const {
        const int n = g_.n_x;
        std::vector<double> out(n);
        for (int i = 0; i < n; ++i)
            out[i] = lower_[i] * x[g_.wrap(i - 1)] + diag_[i] * x[i] + upper_[i] * x[g_.wrap(i + 1)];
        return out;
    }

private:
    SpaceGrid g_;
    std::vector<double> lower_, diag_, upper_;
};

}  // namespace wfpc
