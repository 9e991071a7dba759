#pragma once

// Histogram measures on the truncated fundamental domain: pushforwards of the
// grid volume through the map, time averages, the normalized hyperbolic area
// measure, densities, relative entropy and weak-* pairings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "modflow/binning.hpp"
#include "modflow/errors.hpp"
#include "modflow/heat_flow.hpp"
#include "modflow/hyperbolic.hpp"
#include "modflow/parallel.hpp"
#include "modflow/target_function.hpp"

namespace modflow {

using BinningPtr = std::shared_ptr<const FundamentalDomainBinning>;

inline constexpr double kMassTolerance = 1e-12;

namespace detail {

inline double total_of(std::span<const double> m) {
    double s = 0.0;
    for (double x : m) s += x;
    return s;
}

inline void check_probability(std::span<const double> m, std::size_t expected, const char* who) {
    if (m.size() != expected) throw DomainError(std::string(who) + ": mass vector does not match binning");
    for (double x : m) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError(std::string(who) + ": negative or non-finite mass");
    }
    if (std::fabs(total_of(m) - 1.0) > kMassTolerance) {
        throw DomainError(std::string(who) + ": total mass " + std::to_string(total_of(m)) + " != 1");
    }
}

}  // namespace detail

/// Probability histogram mu_t over a binning (last entry is the overflow bin).
class PushforwardMeasure {
public:
    PushforwardMeasure(BinningPtr binning, std::vector<double> mass, double t)
        : binning_(std::move(binning)), mass_(std::move(mass)), t_(t) {
        if (!binning_) throw DomainError("PushforwardMeasure: null binning");
        detail::check_probability(mass_, binning_->size(), "PushforwardMeasure");
    }

    /// Normalizes nonnegative weights to total 1.
    static PushforwardMeasure from_weights(BinningPtr binning, std::vector<double> w, double t) {
        const double total = detail::total_of(w);
        if (!(total > 0.0)) throw DomainError("PushforwardMeasure: weights have no mass");
        for (double& x : w) x /= total;
        return {std::move(binning), std::move(w), t};
    }

    const FundamentalDomainBinning& binning() const noexcept { return *binning_; }
    const BinningPtr& binning_ptr() const noexcept { return binning_; }
    std::span<const double> masses() const noexcept { return mass_; }
    double mass(std::size_t k) const { return mass_.at(k); }
    double t() const noexcept { return t_; }
    double total() const { return detail::total_of(mass_); }

    friend bool operator==(const PushforwardMeasure& a, const PushforwardMeasure& b) {
        return *a.binning_ == *b.binning_ && a.mass_ == b.mass_ && a.t_ == b.t_;
    }

private:
    BinningPtr binning_;
    std::vector<double> mass_;
    double t_;
};

/// Normalized hyperbolic area dx dy / y^2 on F_trunc plus the cusp bin.
class ReferenceMeasure {
public:
    explicit ReferenceMeasure(BinningPtr binning) : binning_(std::move(binning)) {
        if (!binning_) throw DomainError("ReferenceMeasure: null binning");
        const auto& raw = binning_->raw_masses();
        raw_total_ = detail::total_of(raw);
        mass_.resize(raw.size());
        for (std::size_t k = 0; k < raw.size(); ++k) mass_[k] = raw[k] / raw_total_;
    }

    const FundamentalDomainBinning& binning() const noexcept { return *binning_; }
    const BinningPtr& binning_ptr() const noexcept { return binning_; }
    std::span<const double> masses() const noexcept { return mass_; }
    double mass(std::size_t k) const { return mass_.at(k); }
    /// Z: total hyperbolic mass before normalization (pi/3 up to quadrature error).
    double normalization() const noexcept { return raw_total_; }

private:
    BinningPtr binning_;
    std::vector<double> mass_;
    double raw_total_ = 0.0;
};

inline ReferenceMeasure reference_measure(BinningPtr binning) { return ReferenceMeasure(std::move(binning)); }

/// Bin index of every node's reduced image.
inline std::vector<std::size_t> image_bins(const MapState& state, const FundamentalDomainBinning& binning) {
    const DomainGrid& g = state.grid();
    std::vector<std::size_t> bins(g.size());
    for_each_row(g.n1(), [&](std::size_t i) {
        for (std::size_t j = 0; j < g.n2(); ++j) {
            const std::size_t k = g.index(i, j);
            const Reduction r = reduce_to_fundamental_domain({state.u()[k], state.v()[k]});
            bins[k] = binning.bin_index(r.point);
        }
    });
    return bins;
}

/// mu_t: each node carries its volume weight to the bin of its reduced image.
inline PushforwardMeasure pushforward(const MapState& state, BinningPtr binning) {
    const std::vector<std::size_t> bins = image_bins(state, *binning);
    std::vector<std::size_t> counts(binning->size(), 0);
    for (std::size_t b : bins) ++counts[b];
    const double w = state.grid().weight();
    std::vector<double> mass(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) mass[k] = static_cast<double>(counts[k]) * w;
    return {std::move(binning), std::move(mass), state.t()};
}

/// Trapezoidal time average of snapshot measures over [t_first, t_last],
/// renormalized to total mass 1. The result carries timestamp T.
inline PushforwardMeasure time_average(std::span<const PushforwardMeasure> measures, double T) {
    if (measures.size() < 2) throw DomainError("time_average: need at least two snapshots");
    const auto& binning = measures.front().binning_ptr();
    for (std::size_t k = 1; k < measures.size(); ++k) {
        if (!(measures[k].binning() == *binning)) throw DomainError("time_average: binning mismatch");
        if (measures[k].t() < measures[k - 1].t()) throw DomainError("time_average: timestamps not sorted");
    }
    if (!(measures.back().t() > measures.front().t())) throw DomainError("time_average: zero time span");
    if (measures.front().t() < 0.0 || measures.back().t() > T * (1.0 + 1e-12)) {
        throw DomainError("time_average: timestamps outside [0, T]");
    }
    std::vector<double> acc(binning->size(), 0.0);
    for (std::size_t k = 1; k < measures.size(); ++k) {
        const double half = 0.5 * (measures[k].t() - measures[k - 1].t());
        const auto a = measures[k - 1].masses();
        const auto b = measures[k].masses();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += half * (a[i] + b[i]);
    }
    return PushforwardMeasure::from_weights(binning, std::move(acc), T);
}

/// rho = mu / nu per bin.
inline std::vector<double> radon_nikodym(const PushforwardMeasure& mu, const ReferenceMeasure& nu) {
    if (!(mu.binning() == nu.binning())) throw DomainError("radon_nikodym: binning mismatch");
    std::vector<double> rho(nu.masses().size());
    for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = mu.mass(k) / nu.mass(k);
    return rho;
}

/// sum nu_b rho_b log rho_b over bins with 0 log 0 = 0. nu must be positive
/// wherever mu is.
inline double relative_entropy(std::span<const double> mu, std::span<const double> nu) {
    if (mu.size() != nu.size()) throw DomainError("relative_entropy: size mismatch");
    double h = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu[k] == 0.0) continue;
        if (!(nu[k] > 0.0)) throw DomainError("relative_entropy: mu not absolutely continuous w.r.t. nu");
        h += mu[k] * std::log(mu[k] / nu[k]);
    }
    return h;
}

inline double relative_entropy(const PushforwardMeasure& mu, const ReferenceMeasure& nu) {
    if (!(mu.binning() == nu.binning())) throw DomainError("relative_entropy: binning mismatch");
    return relative_entropy(mu.masses(), nu.masses());
}

/// Binned pairing: sum mass_b f(center_b), the overflow bin contributing
/// f.overflow_value.
inline double weak_star_pairing(const FundamentalDomainBinning& binning, std::span<const double> mass,
                                const TargetFunction& f) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < binning.size(); ++k) {
        if (mass[k] != 0.0) s += mass[k] * f(binning.bin(k).center());
    }
    return s + mass[binning.overflow_index()] * f.overflow_value;
}

inline double weak_star_pairing(const PushforwardMeasure& mu, const TargetFunction& f) {
    return weak_star_pairing(mu.binning(), mu.masses(), f);
}

inline double weak_star_pairing(const ReferenceMeasure& nu, const TargetFunction& f) {
    return weak_star_pairing(nu.binning(), nu.masses(), f);
}

/// Node-exact pairing: w * sum f(reduced image of node).
inline double weak_star_pairing(const MapState& state, const TargetFunction& f) {
    const DomainGrid& g = state.grid();
    const double sum = row_reduce(g.n1(), [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < g.n2(); ++j) {
            acc += f(reduce_to_fundamental_domain(state.at(i, j)).point);
        }
        return acc;
    });
    return g.weight() * sum;
}

/// |mean over [t_0, T_k] of mu_t(f) - mu_hyp(f)| for every snapshot time T_k,
/// with node-exact pairings and trapezoidal time quadrature over snapshots.
/// The first entry (zero time span) uses mu_{t_0}(f) itself.
inline std::vector<double> ergodic_error(const FlowTrajectory& traj, const TargetFunction& f,
                                         const ReferenceMeasure& nu) {
    if (traj.snapshots.empty()) throw DomainError("ergodic_error: trajectory has no snapshots");
    const double target = weak_star_pairing(nu, f);
    std::vector<double> pair(traj.snapshots.size());
    for (std::size_t k = 0; k < pair.size(); ++k) pair[k] = weak_star_pairing(traj.snapshots[k], f);

    std::vector<double> out(pair.size());
    double integral = 0.0;
    const double t0 = traj.snapshots.front().t();
    out[0] = std::fabs(pair[0] - target);
    for (std::size_t k = 1; k < pair.size(); ++k) {
        const double t_prev = traj.snapshots[k - 1].t();
        const double t_k = traj.snapshots[k].t();
        integral += 0.5 * (t_k - t_prev) * (pair[k - 1] + pair[k]);
        const double span = t_k - t0;
        const double mean = span > 0.0 ? integral / span : pair[k];
        out[k] = std::fabs(mean - target);
    }
    return out;
}

struct LaplacianDiagnostic {
    double value = 0.0;
    /// the support of f is not strictly inside F_trunc
    bool boundary_warning = false;
};

inline constexpr double kLaplacianStep = 1e-3;

/// mu(Delta_H f) with Delta_H f evaluated by hyperbolic_laplacian_fd at bin centers.
inline LaplacianDiagnostic laplacian_invariance_diagnostic(const PushforwardMeasure& mu, const TargetFunction& f,
                                                           double h = kLaplacianStep) {
    const FundamentalDomainBinning& binning = mu.binning();
    LaplacianDiagnostic out;
    out.boundary_warning = !f.support_inside(binning);
    for (std::size_t k = 0; k + 1 < binning.size(); ++k) {
        if (mu.mass(k) == 0.0) continue;
        out.value += mu.mass(k) * hyperbolic_laplacian_fd(f, binning.bin(k).center(), h);
    }
    return out;
}

/// Node-exact variant: w * sum of Delta_H f at the reduced images.
inline LaplacianDiagnostic laplacian_invariance_diagnostic(const MapState& state, const TargetFunction& f,
                                                           const FundamentalDomainBinning& binning,
                                                           double h = kLaplacianStep) {
    LaplacianDiagnostic out;
    out.boundary_warning = !f.support_inside(binning);
    const DomainGrid& g = state.grid();
    double sum = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const UpperHalfPoint z = reduce_to_fundamental_domain({state.u()[k], state.v()[k]}).point;
        if (z.y() > binning.y_max()) continue;
        sum += hyperbolic_laplacian_fd(f, z, h);
    }
    out.value = g.weight() * sum;
    return out;
}

struct EntropyReport {
    double t = 0.0;
    /// histogram relative entropy H(mu_t | mu_hyp) at the binning resolution
    double entropy = 0.0;
    double rho_max = 0.0;
    /// integral of rho over {rho > K} against nu
    double tail_mass = 0.0;
    /// fraction of nodes with |J| <= jacobian threshold
    double degenerate_fraction = 0.0;
};

inline constexpr double kDefaultJacobianThreshold = 1e-8;

/// Measure-level fields of the report; degenerate_fraction is left at 0.
inline EntropyReport entropy_report(const PushforwardMeasure& mu, const ReferenceMeasure& nu, double K) {
    if (!(K > 1.0)) throw DomainError("entropy_report: K must exceed 1");
    const std::vector<double> rho = radon_nikodym(mu, nu);
    EntropyReport r;
    r.t = mu.t();
    r.entropy = relative_entropy(mu, nu);
    for (std::size_t k = 0; k < rho.size(); ++k) {
        r.rho_max = std::max(r.rho_max, rho[k]);
        if (rho[k] > K) r.tail_mass += rho[k] * nu.mass(k);
    }
    return r;
}

inline double degenerate_fraction(const MapState& state, double jacobian_threshold = kDefaultJacobianThreshold) {
    const ScalarField J = jacobian_det(state);
    std::size_t n = 0;
    for (std::size_t k = 0; k < J.size(); ++k) {
        if (std::fabs(J[k]) <= jacobian_threshold) ++n;
    }
    return static_cast<double>(n) / static_cast<double>(J.size());
}

inline EntropyReport entropy_report(const MapState& state, BinningPtr binning, const ReferenceMeasure& nu, double K,
                                    double jacobian_threshold = kDefaultJacobianThreshold) {
    EntropyReport r = entropy_report(pushforward(state, std::move(binning)), nu, K);
    r.degenerate_fraction = degenerate_fraction(state, jacobian_threshold);
    return r;
}

}  // namespace modflow
