#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "wfpc/fourier.hpp"

using namespace wfpc;
using std::numbers::pi;

TEST_CASE("spectral roundtrip and derivative are exact on resolved modes") {
    const SpaceGrid g(2.0, 32);
    const SpectralTorus spec(g);

    std::vector<double> f(32);
    for (int i = 0; i < 32; ++i) {
        const double x = g.node(i);
        f[i] = 0.7 + 1.3 * std::cos(2.0 * pi * x / g.Lx) - 0.4 * std::sin(6.0 * pi * x / g.Lx);
    }
    const auto c = spec.forward(f);
    const auto back = spec.inverse(c);
    for (int i = 0; i < 32; ++i) CHECK(back[i] == Catch::Approx(f[i]).margin(1e-12));

    const auto dc = spec.derivative(c);
    const auto df = spec.inverse(dc);
    for (int i = 0; i < 32; ++i) {
        const double x = g.node(i);
        const double exact = -1.3 * (2.0 * pi / g.Lx) * std::sin(2.0 * pi * x / g.Lx) -
                             0.4 * (6.0 * pi / g.Lx) * std::cos(6.0 * pi * x / g.Lx);
        CHECK(df[i] == Catch::Approx(exact).margin(1e-11));
    }
}

TEST_CASE("heat multiplier decays a single mode at the exact rate") {
    const SpaceGrid g(1.0, 64);
    const SpectralTorus spec(g);
    std::vector<double> f(64);
    for (int i = 0; i < 64; ++i) f[i] = std::cos(2.0 * pi * g.node(i));
    auto c = spec.forward(f);
    const double t = 0.037;
    spec.apply_heat(c, t);
    const auto ft = spec.inverse(c);
    const double decay = std::exp(-4.0 * pi * pi * t);
    for (int i = 0; i < 64; ++i)
        CHECK(ft[i] == Catch::Approx(decay * std::cos(2.0 * pi * g.node(i))).margin(1e-12));
}

TEST_CASE("drift-diffusion multiplier translates and decays") {
    const SpaceGrid g(1.0, 64);
    const SpectralTorus spec(g);
    std::vector<double> f(64);
    for (int i = 0; i < 64; ++i) f[i] = std::sin(2.0 * pi * g.node(i));
    auto c = spec.forward(f);
    const double t = 0.02, drift = 0.8;
    spec.apply_heat_with_drift(c, drift, t);
    const auto ft = spec.inverse(c);
    const double decay = std::exp(-4.0 * pi * pi * t);
    for (int i = 0; i < 64; ++i) {
        const double exact = decay * std::sin(2.0 * pi * (g.node(i) - drift * t));
        CHECK(ft[i] == Catch::Approx(exact).margin(1e-12));
    }
}
