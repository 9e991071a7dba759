#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "modflow/measures.hpp"

namespace {

using namespace modflow;

BinningPtr make_binning(int nx = 60, int ny = 60, double y_max = 10.0) {
    return std::make_shared<const FundamentalDomainBinning>(nx, ny, y_max);
}

MapState random_state(std::mt19937_64& rng, std::size_t n = 16) {
    const DomainGrid g(n, n);
    std::uniform_real_distribution<double> ux(-3.0, 3.0);
    std::uniform_real_distribution<double> ly(-2.0, 2.0);
    ScalarField u(g), v(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        u[k] = ux(rng);
        v[k] = std::exp(ly(rng));
    }
    return {u, v};
}

std::vector<double> random_probability(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::vector<double> w(n);
    double s = 0.0;
    for (auto& x : w) s += (x = d(rng));
    for (auto& x : w) x /= s;
    return w;
}

double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 40) {
    auto rec = [&](auto&& self, double a0, double b0, double fa, double fm, double fb, double whole, int d) -> double {
        const double m = 0.5 * (a0 + b0);
        const double lm = 0.5 * (a0 + m), rm = 0.5 * (m + b0);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a0) / 6 * (fa + 4 * flm + fm);
        const double right = (b0 - m) / 6 * (fm + 4 * frm + fb);
        if (d <= 0 || std::fabs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
        return self(self, a0, m, fa, flm, fm, left, d - 1) + self(self, m, b0, fm, frm, fb, right, d - 1);
    };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return rec(rec, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), depth);
}

// f = y on a plateau, tapering smoothly to zero. Delta_H y = 0.
TargetFunction windowed_height(double cx, double cy, double r_flat, double r_out) {
    auto taper = [=](double x, double y) {
        const double r = std::hypot(x - cx, y - cy);
        if (r <= r_flat) return 1.0;
        if (r >= r_out) return 0.0;
        auto psi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
        const double s = (r - r_flat) / (r_out - r_flat);
        return psi(1.0 - s) / (psi(1.0 - s) + psi(s));
    };
    TargetFunction f;
    f.value = [=](double x, double y) { return y * taper(x, y); };
    f.support = SupportBox{cx - r_out, cx + r_out, cy - r_out, cy + r_out};
    return f;
}

}  // namespace

TEST(Pushforward, ConstantMapIsDirac) {
    const auto b = make_binning();
    const UpperHalfPoint z0(0.1, 2.0);
    const auto mu = pushforward(MapState::constant(DomainGrid(8, 8), z0), b);
    const std::size_t k = b->bin_index(z0);
    EXPECT_EQ(mu.mass(k), 1.0);
    EXPECT_EQ(mu.total(), 1.0);
}

TEST(Pushforward, HalfAndHalf) {
    const auto b = make_binning();
    const std::size_t A = *b->cell_bin(30, 30), B = *b->cell_bin(10, 45);
    const DomainGrid g(8, 8);
    ScalarField u(g), v(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto c = b->bin(k % 2 ? A : B).center();
        u[k] = c.x();
        v[k] = c.y();
    }
    const auto mu = pushforward(MapState(u, v), b);
    EXPECT_EQ(mu.mass(A), 0.5);
    EXPECT_EQ(mu.mass(B), 0.5);
}

TEST(Pushforward, EquivariantUnderModularGroup) {
    const auto b = make_binning();
    std::mt19937_64 rng(5);
    const ModularMatrix gamma = ModularMatrix::translation(2) * ModularMatrix::inversion() *
                                ModularMatrix::translation(-1);
    for (int trial = 0; trial < 10; ++trial) {
        const MapState s = random_state(rng);
        EXPECT_EQ(pushforward(s, b), pushforward(apply_isometry(gamma, s), b));
    }
}

TEST(Pushforward, RejectsBadMasses) {
    const auto b = make_binning(4, 4);
    EXPECT_THROW(PushforwardMeasure(b, std::vector<double>(b->size(), 0.0), 0.0), DomainError);
    EXPECT_THROW(PushforwardMeasure(b, {1.0}, 0.0), DomainError);
    EXPECT_THROW(PushforwardMeasure(nullptr, {1.0}, 0.0), DomainError);
}

TEST(TimeAverage, RepeatedMeasureIsFixed) {
    const auto b = make_binning(6, 6);
    std::mt19937_64 rng(1);
    const auto m = random_probability(rng, b->size());
    std::vector<PushforwardMeasure> list;
    for (double t : {0.0, 0.3, 0.4, 1.0}) list.emplace_back(b, m, t);
    const auto avg = time_average(list, 1.0);
    for (std::size_t k = 0; k < m.size(); ++k) EXPECT_NEAR(avg.mass(k), m[k], 1e-14);
    EXPECT_EQ(avg.t(), 1.0);
}

TEST(TimeAverage, TwoPointsGiveMean) {
    const auto b = make_binning(6, 6);
    std::mt19937_64 rng(2);
    const auto m0 = random_probability(rng, b->size());
    const auto m1 = random_probability(rng, b->size());
    const std::vector<PushforwardMeasure> list{{b, m0, 0.0}, {b, m1, 2.0}};
    const auto avg = time_average(list, 2.0);
    for (std::size_t k = 0; k < m0.size(); ++k) EXPECT_NEAR(avg.mass(k), 0.5 * (m0[k] + m1[k]), 1e-15);
}

TEST(TimeAverage, UnevenSpacingMatchesDenseResampling) {
    const auto b = make_binning(6, 6);
    std::mt19937_64 rng(3);
    const std::vector<double> ts{0.0, 0.15, 1.0};
    std::vector<std::vector<double>> ms;
    std::vector<PushforwardMeasure> list;
    for (double t : ts) {
        ms.push_back(random_probability(rng, b->size()));
        list.emplace_back(b, ms.back(), t);
    }
    const auto avg = time_average(list, 1.0);

    // linear interpolation sampled at 1000 midpoints
    const int n = 1000;
    std::vector<double> dense(b->size(), 0.0);
    for (int s = 0; s < n; ++s) {
        const double t = (s + 0.5) / n;
        const std::size_t seg = t < ts[1] ? 0 : 1;
        const double a = (t - ts[seg]) / (ts[seg + 1] - ts[seg]);
        for (std::size_t k = 0; k < dense.size(); ++k) {
            dense[k] += ((1 - a) * ms[seg][k] + a * ms[seg + 1][k]) / n;
        }
    }
    for (std::size_t k = 0; k < dense.size(); ++k) EXPECT_NEAR(avg.mass(k), dense[k], 1e-3);
}

TEST(TimeAverage, Errors) {
    const auto b = make_binning(6, 6);
    std::mt19937_64 rng(4);
    const auto m = random_probability(rng, b->size());
    EXPECT_THROW(time_average(std::vector<PushforwardMeasure>{}, 1.0), DomainError);
    EXPECT_THROW(time_average(std::vector<PushforwardMeasure>{{b, m, 0.0}}, 1.0), DomainError);
    EXPECT_THROW(time_average(std::vector<PushforwardMeasure>{{b, m, 0.5}, {b, m, 0.2}}, 1.0), DomainError);
    EXPECT_THROW(time_average(std::vector<PushforwardMeasure>{{b, m, 0.0}, {b, m, 2.0}}, 1.0), DomainError);
    EXPECT_THROW(time_average(std::vector<PushforwardMeasure>{{b, m, 0.3}, {b, m, 0.3}}, 1.0), DomainError);
}

TEST(ReferenceMeasure, NormalizationAndOverflow) {
    const ReferenceMeasure nu(make_binning());
    EXPECT_NEAR(nu.normalization() / (std::numbers::pi / 3.0), 1.0, 1e-3);
    EXPECT_NEAR(nu.mass(nu.binning().overflow_index()), 0.1 / (std::numbers::pi / 3.0), 1e-4);
    EXPECT_NEAR(0.1 / (std::numbers::pi / 3.0), 0.09549, 1e-5);
    double total = 0.0;
    for (double m : nu.masses()) {
        EXPECT_GT(m, 0.0);
        total += m;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (int n : {10, 30, 120}) EXPECT_NEAR(detail::total_of(ReferenceMeasure(make_binning(n, n)).masses()), 1.0, 1e-12);
}

TEST(RadonNikodym, Basics) {
    const auto b = make_binning(8, 8);
    const ReferenceMeasure nu(b);
    const PushforwardMeasure same(b, std::vector<double>(nu.masses().begin(), nu.masses().end()), 0.0);
    for (double r : radon_nikodym(same, nu)) EXPECT_DOUBLE_EQ(r, 1.0);

    std::vector<double> dirac(b->size(), 0.0);
    dirac[5] = 1.0;
    const auto rho = radon_nikodym(PushforwardMeasure(b, dirac, 0.0), nu);
    for (std::size_t k = 0; k < rho.size(); ++k) EXPECT_EQ(rho[k], k == 5 ? 1.0 / nu.mass(5) : 0.0);

    std::mt19937_64 rng(6);
    const PushforwardMeasure mu(b, random_probability(rng, b->size()), 0.0);
    const auto r = radon_nikodym(mu, nu);
    double s = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) s += r[k] * nu.mass(k);
    EXPECT_NEAR(s, 1.0, 1e-12);

    EXPECT_THROW(radon_nikodym(mu, ReferenceMeasure(make_binning(9, 8))), DomainError);
}

TEST(RelativeEntropy, TwoBinCase) {
    const std::vector<double> mu{0.5, 0.5}, nu{0.25, 0.75};
    const double oracle = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
    EXPECT_NEAR(relative_entropy(mu, nu), oracle, 1e-15);
    EXPECT_NEAR(oracle, 0.143841, 1e-6);
}

TEST(RelativeEntropy, SelfIsZero) {
    const ReferenceMeasure nu(make_binning(10, 10));
    const PushforwardMeasure mu(nu.binning_ptr(), std::vector<double>(nu.masses().begin(), nu.masses().end()), 0.0);
    EXPECT_NEAR(relative_entropy(mu, nu), 0.0, 1e-12);
}

TEST(RelativeEntropy, NonnegativeAndCoarseningNeverIncreases) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto mu = random_probability(rng, 12);
        auto nu = random_probability(rng, 12);
        if (trial % 3 == 0) nu = mu;
        EXPECT_GE(relative_entropy(mu, nu), -1e-12);
    }
    for (int trial = 0; trial < 100; ++trial) {
        auto mu = random_probability(rng, 12);
        const auto nu = random_probability(rng, 12);
        if (trial % 4 == 0) mu[trial % 12] = 0.0;
        std::vector<double> mc(6), nc(6);
        for (int k = 0; k < 6; ++k) {
            mc[k] = mu[2 * k] + mu[2 * k + 1];
            nc[k] = nu[2 * k] + nu[2 * k + 1];
        }
        EXPECT_LE(relative_entropy(mc, nc), relative_entropy(mu, nu) + 1e-12);
    }
}

TEST(WeakStarPairing, ConstantOneGivesTotalMass) {
    const auto one = make_constant(1.0);
    const ReferenceMeasure nu(make_binning());
    EXPECT_NEAR(weak_star_pairing(nu, one), 1.0, 1e-12);
    std::mt19937_64 rng(8);
    const MapState s = random_state(rng);
    EXPECT_NEAR(weak_star_pairing(s, one), 1.0, 1e-12);
    EXPECT_NEAR(weak_star_pairing(pushforward(s, nu.binning_ptr()), one), 1.0, 1e-12);
}

TEST(WeakStarPairing, ConstantMapEvaluatesBump) {
    const auto f = make_bump(0.0, 1.5, 0.3, 0.4);
    const UpperHalfPoint z0(0.05, 1.6);
    EXPECT_DOUBLE_EQ(weak_star_pairing(MapState::constant(DomainGrid(8, 8), z0), f), f(z0));
    const auto fine = make_binning(400, 400);
    const auto mu = pushforward(MapState::constant(DomainGrid(8, 8), z0), fine);
    const auto c = fine->bin(fine->bin_index(z0)).center();
    EXPECT_DOUBLE_EQ(weak_star_pairing(mu, f), f(c));
    const auto g = f.grad(z0.x(), z0.y());
    EXPECT_NEAR(weak_star_pairing(mu, f), f(z0), 2.0 * std::hypot(g[0], g[1]) * std::hypot(c.x() - z0.x(), c.y() - z0.y()));
}

TEST(WeakStarPairing, ReferenceMatchesQuadrature) {
    const double cx = 0.0, cy = 1.5, rx = 0.3, ry = 0.4;
    const auto f = make_bump(cx, cy, rx, ry);
    const double integral = simpson(
        [&](double x) { return simpson([&](double y) { return f(x, y) / (y * y); }, cy - ry, cy + ry, 1e-12); },
        cx - rx, cx + rx, 1e-11);
    const double oracle = integral / (std::numbers::pi / 3.0);
    const ReferenceMeasure nu(make_binning(200, 400));
    EXPECT_NEAR(weak_star_pairing(nu, f), oracle, 1e-4);
}

TEST(ErgodicError, ConstantMapIsConstant) {
    const auto f = make_bump(0.0, 1.5, 0.3, 0.4);
    const ReferenceMeasure nu(make_binning());
    const UpperHalfPoint z0(0.1, 1.7);
    FlowTrajectory traj;
    for (double t : {0.0, 0.25, 0.7, 1.0}) traj.snapshots.push_back(MapState::constant(DomainGrid(8, 8), z0, t));
    const double expected = std::fabs(f(z0) - weak_star_pairing(nu, f));
    for (double e : ergodic_error(traj, f, nu)) EXPECT_NEAR(e, expected, 1e-14);
    for (double e : ergodic_error(traj, make_constant(1.0), nu)) EXPECT_NEAR(e, 0.0, 1e-12);
}

TEST(ErgodicError, MatchesOnePassAccumulation) {
    const auto f = make_bump(-0.2, 2.5, 0.2, 0.8);
    const ReferenceMeasure nu(make_binning());
    std::mt19937_64 rng(9);
    FlowTrajectory traj;
    double t = 0.0;
    std::uniform_real_distribution<double> gap(0.01, 0.1);
    for (int k = 0; k < 12; ++k) {
        MapState s = random_state(rng, 8);
        s.set_time(t);
        traj.snapshots.push_back(s);
        t += gap(rng);
    }
    const auto err = ergodic_error(traj, f, nu);

    double target = 0.0;
    for (std::size_t b = 0; b + 1 < nu.binning().size(); ++b) target += nu.mass(b) * f(nu.binning().bin(b).center());
    double integral = 0.0, prev_pair = 0.0, prev_t = 0.0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const MapState& s = traj.snapshots[k];
        double pair = 0.0;
        for (std::size_t i = 0; i < s.grid().n1(); ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < s.grid().n2(); ++j) {
                row += f(reduce_to_fundamental_domain(s.at(i, j)).point);
            }
            pair += row;
        }
        pair *= s.grid().weight();
        double e;
        if (k == 0) {
            e = std::fabs(pair - target);
        } else {
            integral += 0.5 * (s.t() - prev_t) * (pair + prev_pair);
            e = std::fabs(integral / (s.t() - traj.snapshots.front().t()) - target);
        }
        EXPECT_NEAR(err[k], e, 1e-12) << k;
        prev_pair = pair;
        prev_t = s.t();
    }
}

TEST(LaplacianDiagnostic, HarmonicPlateauIsNearZero) {
    const auto b = make_binning();
    const auto f = windowed_height(0.0, 2.0, 0.3, 0.45);
    std::vector<double> w(b->size(), 0.0);
    for (std::size_t k = 0; k + 1 < b->size(); ++k) {
        const auto c = b->bin(k).center();
        if (std::hypot(c.x(), c.y() - 2.0) < 0.25) w[k] = 1.0;
    }
    const auto mu = PushforwardMeasure::from_weights(b, w, 0.0);
    const auto d = laplacian_invariance_diagnostic(mu, f);
    // rounding of the second difference: ~ eps * y / h^2 * y^2
    EXPECT_LT(std::fabs(d.value), 1e-6);
    EXPECT_FALSE(d.boundary_warning);
}

TEST(LaplacianDiagnostic, DiracMatchesPointwise) {
    const auto b = make_binning();
    const auto f = make_bump(0.0, 1.5, 0.3, 0.4);
    const std::size_t k = *b->cell_bin(33, 4);
    std::vector<double> m(b->size(), 0.0);
    m[k] = 1.0;
    const auto d = laplacian_invariance_diagnostic(PushforwardMeasure(b, m, 0.0), f);
    EXPECT_EQ(d.value, hyperbolic_laplacian_fd(f, b->bin(k).center(), kLaplacianStep));

    const UpperHalfPoint z0(0.05, 1.4);
    const auto node = laplacian_invariance_diagnostic(MapState::constant(DomainGrid(4, 4), z0), f, *b);
    EXPECT_NEAR(node.value, hyperbolic_laplacian_fd(f, z0, kLaplacianStep), 1e-12);
}

TEST(LaplacianDiagnostic, LinearInF) {
    const auto b = make_binning();
    std::mt19937_64 rng(10);
    const PushforwardMeasure mu(b, random_probability(rng, b->size()), 0.0);
    const auto f = make_bump(0.0, 1.5, 0.3, 0.4);
    const auto g = make_bump(-0.2, 2.5, 0.2, 0.8);
    const double a = 1.7, c = -0.6;
    TargetFunction comb;
    comb.value = [&](double x, double y) { return a * f(x, y) + c * g(x, y); };
    const double lhs = laplacian_invariance_diagnostic(mu, comb).value;
    const double rhs = a * laplacian_invariance_diagnostic(mu, f).value + c * laplacian_invariance_diagnostic(mu, g).value;
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::fabs(rhs)) + 1e-9);
}

TEST(LaplacianDiagnostic, WarnsWhenSupportTouchesBoundary) {
    const auto b = make_binning();
    const ReferenceMeasure nu(b);
    const PushforwardMeasure mu(b, std::vector<double>(nu.masses().begin(), nu.masses().end()), 0.0);
    EXPECT_TRUE(laplacian_invariance_diagnostic(mu, make_bump(0.4, 1.5, 0.2, 0.3)).boundary_warning);
    EXPECT_TRUE(laplacian_invariance_diagnostic(mu, make_bump(0.0, 1.0, 0.2, 0.3)).boundary_warning);
    EXPECT_FALSE(laplacian_invariance_diagnostic(mu, make_bump(0.0, 1.5, 0.3, 0.4)).boundary_warning);
}

TEST(EntropyReport, SyntheticReferenceSample) {
    // coarse bins so that nu can be matched exactly by node counts
    const auto b = make_binning(2, 2, 2.0);
    const ReferenceMeasure nu(b);
    const DomainGrid g(64, 64);
    const std::size_t N = g.size();
    // largest-remainder allocation of N nodes proportional to nu
    std::vector<std::size_t> counts(b->size());
    std::size_t used = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) used += (counts[k] = static_cast<std::size_t>(nu.mass(k) * N));
    for (std::size_t k = 0; used < N; k = (k + 1) % counts.size(), ++used) ++counts[k];
    ScalarField u(g), v(g);
    std::size_t node = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const auto c = b->bin(k).center();
        for (std::size_t r = 0; r < counts[k]; ++r, ++node) {
            u[node] = c.x();
            v[node] = c.y();
        }
    }
    const auto rep = entropy_report(MapState(u, v), b, nu, 10.0);
    // the residual entropy is the histogram rounding, O(bins / N^2)
    double oracle = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double m = static_cast<double>(counts[k]) / N;
        if (m > 0) oracle += m * std::log(m / nu.mass(k));
    }
    EXPECT_NEAR(rep.entropy, oracle, 1e-12);
    EXPECT_LE(rep.entropy, 1e-5);
    EXPECT_EQ(rep.tail_mass, 0.0);

    // exact synthetic measure: H vanishes to rounding
    const PushforwardMeasure exact(b, std::vector<double>(nu.masses().begin(), nu.masses().end()), 0.0);
    const auto r2 = entropy_report(exact, nu, 10.0);
    EXPECT_LE(std::fabs(r2.entropy), 1e-10);
    EXPECT_EQ(r2.tail_mass, 0.0);
    EXPECT_NEAR(r2.rho_max, 1.0, 1e-12);
}

TEST(EntropyReport, ConstantMap) {
    const auto b = make_binning();
    const ReferenceMeasure nu(b);
    const UpperHalfPoint z0(0.1, 1.6);
    const auto rep = entropy_report(MapState::constant(DomainGrid(16, 16), z0), b, nu, 10.0);
    const double nb = nu.mass(b->bin_index(z0));
    EXPECT_DOUBLE_EQ(rep.rho_max, 1.0 / nb);
    EXPECT_NEAR(rep.entropy, std::log(1.0 / nb), 1e-12);
    EXPECT_NEAR(rep.tail_mass, 1.0, 1e-12);
    EXPECT_EQ(rep.degenerate_fraction, 1.0);
    EXPECT_THROW(entropy_report(pushforward(MapState::constant(DomainGrid(4, 4), z0), b), nu, 1.0), DomainError);
}

TEST(EntropyReport, MatchesIndependentRecomputation) {
    const auto b = make_binning(20, 20);
    const ReferenceMeasure nu(b);
    std::mt19937_64 rng(11);
    const MapState s = random_state(rng, 32);
    const double K = 3.0;
    const auto rep = entropy_report(s, b, nu, K);

    std::vector<double> mass(b->size(), 0.0);
    for (std::size_t k = 0; k < s.grid().size(); ++k) {
        mass[b->bin_index(reduce_to_fundamental_domain({s.u()[k], s.v()[k]}).point)] += s.grid().weight();
    }
    double H = 0.0, rmax = 0.0, tail = 0.0;
    for (std::size_t k = 0; k < mass.size(); ++k) {
        const double rho = mass[k] / nu.mass(k);
        if (mass[k] > 0) H += mass[k] * std::log(rho);
        rmax = std::max(rmax, rho);
        if (rho > K) tail += mass[k];
    }
    EXPECT_NEAR(rep.entropy, H, 1e-12);
    EXPECT_NEAR(rep.rho_max, rmax, 1e-12 * rmax);
    EXPECT_NEAR(rep.tail_mass, tail, 1e-12);
    EXPECT_EQ(rep.degenerate_fraction, degenerate_fraction(s));
}
