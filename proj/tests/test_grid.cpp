#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "wfpc/grid.hpp"

using namespace wfpc;
using std::numbers::pi;

namespace {
SpaceGrid make_grid(int n) { return SpaceGrid(1.0, n); }

std::vector<double> sample(const SpaceGrid& g, auto&& f) {
    std::vector<double> v(g.n_x);
    for (int i = 0; i < g.n_x; ++i) v[i] = f(g.node(i));
    return v;
}
}  // namespace

TEST_CASE("grid invariants are enforced") {
    CHECK_THROWS_AS(TimeGrid(1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(SpaceGrid(1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(GridMeasure(make_grid(8), std::vector<double>(8, 0.5)), std::invalid_argument);

    const auto g = make_grid(16);
    CHECK(g.wrap(-1) == 15);
    CHECK(g.wrap(16) == 0);
    const auto m = GridMeasure::uniform(g);
    CHECK(m.mass() == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("integrate matches its defining examples") {
    const auto g = make_grid(32);
    const auto m = GridMeasure::uniform(g);

    CHECK(integrate(m, std::vector<double>(32, 1.0)) == Catch::Approx(1.0).margin(1e-12));

    // density of the uniform measure as the test function
    CHECK(integrate(m, m.density) == Catch::Approx(1.0).margin(1e-12));

    const auto s = sample(g, [](double x) { return std::sin(2.0 * pi * x); });
    CHECK(std::abs(integrate(m, s)) < 1e-12);

    CHECK_THROWS_AS(integrate(m, std::vector<double>(7, 0.0)), std::invalid_argument);
}

TEST_CASE("integrate is linear in both arguments") {
    const auto g = make_grid(24);
    std::vector<double> prof1(24), prof2(24);
    for (int i = 0; i < 24; ++i) {
        prof1[i] = 1.0 + 0.5 * std::cos(2.0 * pi * g.node(i));
        prof2[i] = 1.0 + 0.3 * std::sin(4.0 * pi * g.node(i));
    }
    const auto m1 = GridMeasure::from_profile(g, prof1);
    const auto m2 = GridMeasure::from_profile(g, prof2);
    const auto phi = sample(g, [](double x) { return std::cos(2.0 * pi * x) + 0.2; });
    const auto psi = sample(g, [](double x) { return x * (1.0 - x); });

    std::vector<double> combo(24), mix(24);
    for (int i = 0; i < 24; ++i) {
        combo[i] = 2.0 * phi[i] - 3.0 * psi[i];
        mix[i] = 0.25 * m1.density[i] + 0.75 * m2.density[i];
    }
    CHECK(integrate(m1, combo) ==
          Catch::Approx(2.0 * integrate(m1, phi) - 3.0 * integrate(m1, psi)).margin(1e-13));
    CHECK(integrate(g, mix, phi) ==
          Catch::Approx(0.25 * integrate(m1, phi) + 0.75 * integrate(m2, phi)).margin(1e-13));
}

TEST_CASE("d_dx: constants, analytic rate, Nyquist aliasing") {
    const auto g = make_grid(64);
    for (double v : d_dx(g, std::vector<double>(64, 3.7))) CHECK(v == 0.0);

    // refinement study against the analytic derivative of sin
    double prev_err = 0.0;
    for (int n : {32, 64, 128}) {
        const auto gn = make_grid(n);
        const auto f = sample(gn, [](double x) { return std::sin(2.0 * pi * x); });
        const auto df = d_dx(gn, f);
        double err = 0.0;
        for (int i = 0; i < n; ++i)
            err = std::max(err, std::abs(df[i] - 2.0 * pi * std::cos(2.0 * pi * gn.node(i))));
        if (prev_err > 0.0) {
            const double order = std::log2(prev_err / err);
            CHECK(order > 1.9);
        }
        prev_err = err;
    }

    // the Nyquist sawtooth (-1)^i is annihilated by the centered stencil
    std::vector<double> nyq(64);
    for (int i = 0; i < 64; ++i) nyq[i] = (i % 2 == 0) ? 1.0 : -1.0;
    for (double v : d_dx(g, nyq)) CHECK(v == 0.0);
}

TEST_CASE("laplacian: constants, analytic rate, spike stencil") {
    const auto g = make_grid(64);
    for (double v : laplacian(g, std::vector<double>(64, -2.0))) CHECK(v == 0.0);

    double prev_err = 0.0;
    for (int n : {32, 64, 128}) {
        const auto gn = make_grid(n);
        const auto f = sample(gn, [](double x) { return std::cos(2.0 * pi * x); });
        const auto lf = laplacian(gn, f);
        double err = 0.0;
        for (int i = 0; i < n; ++i)
            err = std::max(err, std::abs(lf[i] + 4.0 * pi * pi * std::cos(2.0 * pi * gn.node(i))));
        if (prev_err > 0.0) CHECK(std::log2(prev_err / err) > 1.9);
        prev_err = err;
    }

    std::vector<double> spike(64, 0.0);
    spike[10] = 1.0;
    const auto ls = laplacian(g, spike);
    const double invdx2 = 1.0 / (g.dx() * g.dx());
    CHECK(ls[10] == Catch::Approx(-2.0 * invdx2));
    CHECK(ls[9] == Catch::Approx(invdx2));
    CHECK(ls[11] == Catch::Approx(invdx2));
    CHECK(ls[12] == 0.0);
}

TEST_CASE("summation by parts and telescoping on the periodic grid") {
    const auto g = make_grid(48);
    const auto f = sample(g, [](double x) { return std::exp(std::sin(2.0 * pi * x)); });
    const auto h = sample(g, [](double x) { return std::cos(4.0 * pi * x) + 0.1 * std::sin(2.0 * pi * x); });

    const auto df = d_dx(g, f);
    const auto dh = d_dx(g, h);
    double lhs = 0.0, rhs = 0.0;
    for (int i = 0; i < 48; ++i) {
        lhs += f[i] * dh[i];
        rhs += df[i] * h[i];
    }
    CHECK(std::abs(lhs + rhs) * g.dx() < 1e-12);

    double tele = 0.0;
    for (double v : laplacian(g, f)) tele += v;
    CHECK(std::abs(tele) * g.dx() < 1e-12);
}

TEST_CASE("cyclic tridiagonal solver inverts the implicit heat step") {
    const auto g = make_grid(32);
    const ImplicitHeatStep heat(g, 1e-3);
    std::vector<double> x(32);
    for (int i = 0; i < 32; ++i) x[i] = std::sin(2.0 * pi * g.node(i)) + 0.2 * i;
    const auto b = heat.apply(x);
    const auto x2 = heat.apply_inverse(b);
    for (int i = 0; i < 32; ++i) CHECK(x2[i] == Catch::Approx(x[i]).margin(1e-11));

    // general nonsymmetric cyclic system against a dense residual check
    const int n = 8;
    std::vector<double> lower(n), diag(n), upper(n), rhs(n);
    for (int i = 0; i < n; ++i) {
        lower[i] = -0.3 + 0.05 * i;
        diag[i] = 4.0 + 0.1 * i;
        upper[i] = 0.7 - 0.03 * i;
        rhs[i] = std::cos(0.5 * i);
    }
    const auto sol = solve_cyclic_tridiagonal(lower, diag, upper, rhs);
    for (int i = 0; i < n; ++i) {
        const double r = lower[i] * sol[(i + n - 1) % n] + diag[i] * sol[i] + upper[i] * sol[(i + 1) % n];
        CHECK(r == Catch::Approx(rhs[i]).margin(1e-12));
    }
}

TEST_CASE("trapezoid rule") {
    const TimeGrid tg(2.0, 100);
    std::vector<double> vals(tg.n_nodes());
    for (int j = 0; j <= tg.n_t; ++j) vals[j] = tg.node(j);
    CHECK(trapezoid(tg, vals) == Catch::Approx(2.0).margin(1e-13));
}
