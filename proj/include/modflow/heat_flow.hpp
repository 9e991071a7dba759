#pragma once

// Harmonic map heat flow d(phi)/dt = tau(phi) from the periodic grid into the
// upper half-plane with the Poincaré metric.
//
// The discrete energy is
//   E = 1/2 * w * sum_edges a_e |phi(head) - phi(tail)|^2 / h_e^2,
//   a_e = (1/v_tail^2 + 1/v_head^2) / 2,
// and the discrete tension field is its exact negative gradient in the
// metric w / v^2:
//   tau_u = v^2 div(a grad u)                              ~ Lap u - (2/v) <grad u, grad v>
//   tau_v = v^2 div(a grad v) + (1/2v) sum_edges S_e / h^2  ~ Lap v + (|grad u|^2 - |grad v|^2) / v
// so that dE/dt = -sum w |tau|^2 / v^2 holds for the semi-discrete flow.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "modflow/errors.hpp"
#include "modflow/grid.hpp"
#include "modflow/hyperbolic.hpp"
#include "modflow/parallel.hpp"
#include "modflow/target_function.hpp"

namespace modflow {

/// Smallest admissible v; tension_field and step refuse anything at or below it.
inline constexpr double kPositivityFloor = 1e-8;

/// The discretized map phi(., t) = u + i v together with its time.
class MapState {
public:
    MapState(ScalarField u, ScalarField v, double t = 0.0) : u_(std::move(u)), v_(std::move(v)), t_(t) {
        if (!(u_.grid() == v_.grid())) throw DomainError("MapState: u and v live on different grids");
        if (!u_.all_finite() || !v_.all_finite() || !std::isfinite(t_)) {
            throw DomainError("MapState: non-finite entries");
        }
        for (std::size_t k = 0; k < v_.size(); ++k) {
            if (!(v_[k] > 0.0)) {
                const std::size_t i = k / grid().n2();
                throw TargetEscapeError("MapState: v <= 0 at node (" + std::to_string(i) + ", " +
                                            std::to_string(k - i * grid().n2()) + ")",
                                        i, k - i * grid().n2());
            }
        }
    }

    /// The constant map with image z.
    static MapState constant(const DomainGrid& grid, const UpperHalfPoint& z, double t = 0.0) {
        return {ScalarField(grid, z.x()), ScalarField(grid, z.y()), t};
    }

    const DomainGrid& grid() const noexcept { return u_.grid(); }
    const ScalarField& u() const noexcept { return u_; }
    const ScalarField& v() const noexcept { return v_; }
    double t() const noexcept { return t_; }
    void set_time(double t) noexcept { t_ = t; }

    UpperHalfPoint at(std::size_t i, std::size_t j) const { return {u_(i, j), v_(i, j)}; }

    friend bool operator==(const MapState&, const MapState&) = default;

private:
    ScalarField u_;
    ScalarField v_;
    double t_;
};

/// A section of phi^* T(target): one tangent vector per node.
struct TangentField {
    ScalarField tu;
    ScalarField tv;
};

namespace detail {

inline void check_floor(const MapState& s) {
    const auto& g = s.grid();
    for (std::size_t i = 0; i < g.n1(); ++i) {
        for (std::size_t j = 0; j < g.n2(); ++j) {
            if (!(s.v()(i, j) > kPositivityFloor)) {
                throw TargetEscapeError("target escape: v = " + std::to_string(s.v()(i, j)) + " at node (" +
                                            std::to_string(i) + ", " + std::to_string(j) + ")",
                                        i, j);
            }
        }
    }
}

}  // namespace detail

inline TangentField tension_field(const MapState& s) {
    detail::check_floor(s);
    const DomainGrid& g = s.grid();
    const ScalarField& u = s.u();
    const ScalarField& v = s.v();
    const double w1 = 1.0 / (g.h1() * g.h1());
    const double w2 = 1.0 / (g.h2() * g.h2());

    ScalarField q(g);
    for (std::size_t k = 0; k < g.size(); ++k) q[k] = 1.0 / (v[k] * v[k]);

    TangentField out{ScalarField(g), ScalarField(g)};
    for_each_row(g.n1(), [&](std::size_t i) {
        const std::size_t ip = g.next1(i);
        const std::size_t im = g.prev1(i);
        for (std::size_t j = 0; j < g.n2(); ++j) {
            const std::size_t jp = g.next2(j);
            const std::size_t jm = g.prev2(j);
            const double uc = u(i, j);
            const double vc = v(i, j);
            const double qc = q(i, j);

            double flux_u = 0.0;
            double flux_v = 0.0;
            double stretch = 0.0;
            auto edge = [&](double wd, double un, double vn, double qn) {
                const double a = 0.5 * (qc + qn);
                const double du = un - uc;
                const double dv = vn - vc;
                flux_u += wd * a * du;
                flux_v += wd * a * dv;
                stretch += wd * (du * du + dv * dv);
            };
            edge(w1, u(ip, j), v(ip, j), q(ip, j));
            edge(w1, u(im, j), v(im, j), q(im, j));
            edge(w2, u(i, jp), v(i, jp), q(i, jp));
            edge(w2, u(i, jm), v(i, jm), q(i, jm));

            out.tu(i, j) = vc * vc * flux_u;
            out.tv(i, j) = vc * vc * flux_v + stretch / (2.0 * vc);
        }
    });
    return out;
}

/// 1/2 * integral of |d phi|^2 in the Poincaré metric.
inline double energy(const MapState& s) {
    const DomainGrid& g = s.grid();
    const ScalarField& u = s.u();
    const ScalarField& v = s.v();
    const double w1 = 1.0 / (g.h1() * g.h1());
    const double w2 = 1.0 / (g.h2() * g.h2());
    const double sum = row_reduce(g.n1(), [&](std::size_t i) {
        const std::size_t ip = g.next1(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < g.n2(); ++j) {
            const std::size_t jp = g.next2(j);
            const double qc = 1.0 / (v(i, j) * v(i, j));
            const double q1 = 1.0 / (v(ip, j) * v(ip, j));
            const double q2 = 1.0 / (v(i, jp) * v(i, jp));
            const double du1 = u(ip, j) - u(i, j);
            const double dv1 = v(ip, j) - v(i, j);
            const double du2 = u(i, jp) - u(i, j);
            const double dv2 = v(i, jp) - v(i, j);
            acc += w1 * 0.5 * (qc + q1) * (du1 * du1 + dv1 * dv1);
            acc += w2 * 0.5 * (qc + q2) * (du2 * du2 + dv2 * dv2);
        }
        return acc;
    });
    return 0.5 * g.weight() * sum;
}

/// integral of |tau|^2 / v^2 for a precomputed tension field.
inline double dissipation_rate(const MapState& s, const TangentField& tau) {
    const DomainGrid& g = s.grid();
    const double sum = row_reduce(g.n1(), [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < g.n2(); ++j) {
            const double v = s.v()(i, j);
            acc += (tau.tu(i, j) * tau.tu(i, j) + tau.tv(i, j) * tau.tv(i, j)) / (v * v);
        }
        return acc;
    });
    return g.weight() * sum;
}

inline double dissipation_rate(const MapState& s) { return dissipation_rate(s, tension_field(s)); }

/// Largest forward Euler step allowed by the stability rule, scaled by the
/// safety factor: safety / max over nodes of the diagonal of the linearized
/// operator, sum_d v^2 (a_+ + a_-) / h_d^2. For v constant this is
/// safety * h^2 / 4 on a square grid.
inline double stable_dt(const MapState& s, double safety = 0.5) {
    const DomainGrid& g = s.grid();
    const ScalarField& v = s.v();
    const double w1 = 1.0 / (g.h1() * g.h1());
    const double w2 = 1.0 / (g.h2() * g.h2());
    double diag_max = 0.0;
    for (std::size_t i = 0; i < g.n1(); ++i) {
        for (std::size_t j = 0; j < g.n2(); ++j) {
            const double v2 = v(i, j) * v(i, j);
            auto a = [&](double vn) { return 0.5 * (1.0 + v2 / (vn * vn)); };
            const double diag = w1 * (a(v(g.next1(i), j)) + a(v(g.prev1(i), j))) +
                                w2 * (a(v(i, g.next2(j))) + a(v(i, g.prev2(j))));
            diag_max = std::max(diag_max, diag);
        }
    }
    return safety / diag_max;
}

/// Forward Euler step with a precomputed tension field.
inline MapState step(const MapState& s, const TangentField& tau, double dt) {
    if (!(dt > 0.0)) throw DomainError("step: dt must be positive");
    const DomainGrid& g = s.grid();
    ScalarField u = s.u();
    ScalarField v = s.v();
    for (std::size_t k = 0; k < g.size(); ++k) {
        u[k] += dt * tau.tu[k];
        v[k] += dt * tau.tv[k];
        if (!(v[k] > kPositivityFloor)) {
            throw StepRejectedError("step: v fell to " + std::to_string(v[k]) + " at node " +
                                    std::to_string(k) + " with dt = " + std::to_string(dt));
        }
    }
    return {std::move(u), std::move(v), s.t() + dt};
}

inline MapState step(const MapState& s, double dt) { return step(s, tension_field(s), dt); }

/// L2 norm over the grid of Lap(f o phi) - df(tau) - tr Hess_h f(d phi, d phi),
/// with Hess_h the covariant Hessian of the Poincaré metric.
inline double chain_rule_residual(const MapState& s, const TargetFunction& f) {
    const DomainGrid& g = s.grid();
    ScalarField composed(g);
    for (std::size_t k = 0; k < g.size(); ++k) composed[k] = f(s.u()[k], s.v()[k]);
    const ScalarField lhs = discrete_laplacian(composed);
    const TangentField tau = tension_field(s);
    const VectorField du = discrete_gradient(s.u());
    const VectorField dv = discrete_gradient(s.v());

    double sum = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double x = s.u()[k];
        const double y = s.v()[k];
        const auto [fx, fy] = f.grad(x, y);
        const auto [fxx, fxy, fyy] = f.hess(x, y);
        // Christoffel symbols: G^x_xy = -1/y, G^y_xx = 1/y, G^y_yy = -1/y.
        const double hxx = fxx - fy / y;
        const double hxy = fxy + fx / y;
        const double hyy = fyy + fy / y;
        const double trace = hxx * (du.c1[k] * du.c1[k] + du.c2[k] * du.c2[k]) +
                             2.0 * hxy * (du.c1[k] * dv.c1[k] + du.c2[k] * dv.c2[k]) +
                             hyy * (dv.c1[k] * dv.c1[k] + dv.c2[k] * dv.c2[k]);
        const double r = lhs[k] - (fx * tau.tu[k] + fy * tau.tv[k]) - trace;
        sum += r * r;
    }
    return std::sqrt(g.weight() * sum);
}

/// du/dx1 dv/dx2 - du/dx2 dv/dx1 by central differences.
inline ScalarField jacobian_det(const MapState& s) {
    const VectorField du = discrete_gradient(s.u());
    const VectorField dv = discrete_gradient(s.v());
    return du.c1 * dv.c2 - du.c2 * dv.c1;
}

/// Applies an element of SL(2,Z) to every node of the image.
inline MapState apply_isometry(const ModularMatrix& gamma, const MapState& s) {
    ScalarField u(s.grid());
    ScalarField v(s.grid());
    for (std::size_t k = 0; k < s.grid().size(); ++k) {
        const UpperHalfPoint z = mobius_apply(gamma, {s.u()[k], s.v()[k]});
        u[k] = z.x();
        v[k] = z.y();
    }
    return {std::move(u), std::move(v), s.t()};
}

// ---------------------------------------------------------------------------
// Time integration

struct FlowOptions {
    double t_final = 1.0;
    double cfl_safety = 0.5;
    double dt_floor = 1e-12;
    /// time between stored snapshots
    double snapshot_every = 0.02;
    /// dissipation below which the map is declared harmonic
    double stall_threshold = 1e-14;
    int growth_interval = 10;
    double growth_factor = 1.2;
};

/// One accepted state of the flow.
struct FlowSample {
    double t = 0.0;
    double energy = 0.0;
    double dissipation = 0.0;
    /// sum over previous steps of dt * D(start of step)
    double cumulative_dissipation = 0.0;
    /// step that produced this state (0 for the initial state)
    double dt = 0.0;
};

struct FlowTrajectory {
    std::vector<FlowSample> samples;
    std::vector<MapState> snapshots;
    /// index into samples for each snapshot
    std::vector<std::size_t> snapshot_samples;
    std::size_t rejected_steps = 0;
    bool stalled = false;

    /// Accepted steps whose energy rose by more than tol.
    std::size_t monotonicity_violations(double tol = 1e-10) const {
        std::size_t n = 0;
        for (std::size_t k = 1; k < samples.size(); ++k) {
            if (samples[k].energy > samples[k - 1].energy + tol) ++n;
        }
        return n;
    }

    /// |E(0) - E(T) - sum dt D| / E(0); zero when E(0) == 0 and the identity holds exactly.
    double energy_identity_error() const {
        if (samples.empty()) return 0.0;
        const double e0 = samples.front().energy;
        const double gap = e0 - samples.back().energy - samples.back().cumulative_dissipation;
        return e0 > 0.0 ? std::fabs(gap) / e0 : std::fabs(gap);
    }
};

/// run_flow gave up because dt fell below the floor.
class AbortedRunError : public Error {
public:
    AbortedRunError(const std::string& what, FlowTrajectory partial)
        : Error(what), partial(std::move(partial)) {}
    FlowTrajectory partial;
};

/// Adaptive forward Euler integration up to opts.t_final. dt starts at the
/// stability cap, halves on rejection, and grows by growth_factor after
/// growth_interval consecutive accepted steps (never above the cap). When the
/// dissipation drops under stall_threshold the map is treated as stationary
/// and carried to t_final unchanged.
inline FlowTrajectory run_flow(const MapState& initial, const FlowOptions& opts) {
    if (!(opts.t_final > initial.t())) throw DomainError("run_flow: t_final must exceed the initial time");
    if (!(opts.cfl_safety > 0.0) || !(opts.snapshot_every > 0.0) || !(opts.dt_floor > 0.0)) {
        throw DomainError("run_flow: cfl_safety, snapshot_every and dt_floor must be positive");
    }

    FlowTrajectory traj;
    MapState state = initial;
    TangentField tau = tension_field(state);
    double dissipation = dissipation_rate(state, tau);
    double cumulative = 0.0;

    traj.samples.push_back({state.t(), energy(state), dissipation, 0.0, 0.0});
    traj.snapshots.push_back(state);
    traj.snapshot_samples.push_back(0);

    const double t_end = opts.t_final;
    const double t_eps = 1e-14 * std::max(1.0, std::fabs(t_end));
    double next_snapshot = state.t() + opts.snapshot_every;
    double dt = stable_dt(state, opts.cfl_safety);
    int accepted_run = 0;

    while (state.t() < t_end - t_eps) {
        if (dissipation < opts.stall_threshold) {
            const double remaining = t_end - state.t();
            cumulative += remaining * dissipation;
            state.set_time(t_end);
            traj.samples.push_back({t_end, traj.samples.back().energy, dissipation, cumulative, remaining});
            traj.stalled = true;
            break;
        }

        const double cap = stable_dt(state, opts.cfl_safety);
        dt = std::min(dt, cap);
        const double this_dt = std::min(dt, t_end - state.t());

        MapState next = [&]() -> MapState {
            try {
                return step(state, tau, this_dt);
            } catch (const StepRejectedError&) {
                return state;
            }
        }();
        if (next.t() == state.t()) {
            ++traj.rejected_steps;
            accepted_run = 0;
            dt = 0.5 * this_dt;
            if (dt < opts.dt_floor) {
                throw AbortedRunError("run_flow: dt fell below the floor at t = " + std::to_string(state.t()),
                                      std::move(traj));
            }
            continue;
        }

        cumulative += this_dt * dissipation;
        state = std::move(next);
        if (std::fabs(state.t() - t_end) <= t_eps) state.set_time(t_end);
        try {
            tau = tension_field(state);
        } catch (const TargetEscapeError& e) {
            throw AbortedRunError(std::string("run_flow: ") + e.what(), std::move(traj));
        }
        dissipation = dissipation_rate(state, tau);
        traj.samples.push_back({state.t(), energy(state), dissipation, cumulative, this_dt});

        if (++accepted_run >= opts.growth_interval) {
            accepted_run = 0;
            dt *= opts.growth_factor;
        }
        if (state.t() >= next_snapshot - t_eps) {
            traj.snapshots.push_back(state);
            traj.snapshot_samples.push_back(traj.samples.size() - 1);
            next_snapshot = opts.snapshot_every * (std::floor((state.t() + t_eps) / opts.snapshot_every) + 1.0);
        }
    }

    if (traj.snapshot_samples.back() != traj.samples.size() - 1) {
        traj.snapshots.push_back(state);
        traj.snapshot_samples.push_back(traj.samples.size() - 1);
    }
    return traj;
}

}  // namespace modflow
