#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "modflow/config.hpp"
#include "modflow/heat_flow.hpp"
#include "modflow/io.hpp"

namespace modflow {

/// Builds the initial map described by spec on an n1 x n2 grid.
inline MapState make_initial_state(const InitialSpec& spec, std::size_t n1, std::size_t n2, std::uint64_t seed) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (spec.kind == "file") {
        MapState s = io::read_snapshot(spec.path);
        if (s.grid().n1() != n1 || s.grid().n2() != n2) {
            throw ConfigError("initial.path: snapshot grid " + std::to_string(s.grid().n1()) + "x" +
                              std::to_string(s.grid().n2()) + " does not match the configured grid");
        }
        return s;
    }

    const DomainGrid grid(n1, n2);
    ScalarField u(grid);
    ScalarField v(grid);
    if (spec.kind == "constant") {
        u = ScalarField(grid, spec.u0);
        v = ScalarField(grid, spec.v0);
    } else if (spec.kind == "sinusoidal") {
        u = ScalarField::sample(grid, [&](double x1, double) { return spec.u0 + spec.amp_u * std::sin(two_pi * spec.k1 * x1); });
        v = ScalarField::sample(grid, [&](double, double x2) { return spec.v0 + spec.amp_v * std::sin(two_pi * spec.k2 * x2); });
    } else if (spec.kind == "winding") {
        u = ScalarField::sample(grid, [&](double x1, double) { return spec.amp_u * std::sin(two_pi * spec.k1 * x1); });
        v = ScalarField::sample(grid, [&](double, double x2) { return std::exp(spec.amp_v * std::cos(two_pi * spec.k2 * x2)); });
    } else if (spec.kind == "random_fourier") {
        struct Mode {
            int kx, ky;
            double a_u, p_u, a_v, p_v;
        };
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> phase(0.0, two_pi);
        std::vector<Mode> modes;
        for (int kx = -spec.k1; kx <= spec.k1; ++kx) {
            for (int ky = -spec.k1; ky <= spec.k1; ++ky) {
                if (kx == 0 && ky == 0) continue;
                const double decay = 1.0 / (1.0 + kx * kx + ky * ky);
                Mode m{kx, ky, 0, 0, 0, 0};
                m.a_u = normal(rng) * decay;
                m.p_u = phase(rng);
                m.a_v = normal(rng) * decay;
                m.p_v = phase(rng);
                modes.push_back(m);
            }
        }
        u = ScalarField::sample(grid, [&](double x1, double x2) {
            double s = 0.0;
            for (const Mode& m : modes) s += m.a_u * std::cos(two_pi * (m.kx * x1 + m.ky * x2) + m.p_u);
            return spec.u0 + spec.amp_u * s;
        });
        v = ScalarField::sample(grid, [&](double x1, double x2) {
            double s = 0.0;
            for (const Mode& m : modes) s += m.a_v * std::cos(two_pi * (m.kx * x1 + m.ky * x2) + m.p_v);
            return spec.v0 * std::exp(spec.amp_v * s);
        });
    } else {
        throw ConfigError("initial.kind: unknown kind '" + spec.kind + "'");
    }
    return {std::move(u), std::move(v), 0.0};
}

}  // namespace modflow
