#pragma once

// The flat unit-volume torus as a periodic n1-by-n2 grid with 5-point
// Laplacian, central and forward difference gradients, and quadrature.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "modflow/errors.hpp"
#include "modflow/parallel.hpp"

namespace modflow {

/// Periodic grid on [0,1)^2. Node (i, j) sits at (i h1, j h2).
class DomainGrid {
public:
    static constexpr std::size_t kMinNodes = 4;

    DomainGrid(std::size_t n1, std::size_t n2) : n1_(n1), n2_(n2) {
        if (n1 < kMinNodes || n2 < kMinNodes) {
            throw DomainError("DomainGrid: need at least 4 nodes per axis, got " + std::to_string(n1) +
                              "x" + std::to_string(n2));
        }
    }

    std::size_t n1() const noexcept { return n1_; }
    std::size_t n2() const noexcept { return n2_; }
    std::size_t size() const noexcept { return n1_ * n2_; }
    double h1() const noexcept { return 1.0 / static_cast<double>(n1_); }
    double h2() const noexcept { return 1.0 / static_cast<double>(n2_); }
    /// Node volume; sums to 1 over the grid.
    double weight() const noexcept { return h1() * h2(); }

    double x1(std::size_t i) const noexcept { return static_cast<double>(i) * h1(); }
    double x2(std::size_t j) const noexcept { return static_cast<double>(j) * h2(); }

    std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * n2_ + j; }
    std::size_t next1(std::size_t i) const noexcept { return i + 1 == n1_ ? 0 : i + 1; }
    std::size_t prev1(std::size_t i) const noexcept { return i == 0 ? n1_ - 1 : i - 1; }
    std::size_t next2(std::size_t j) const noexcept { return j + 1 == n2_ ? 0 : j + 1; }
    std::size_t prev2(std::size_t j) const noexcept { return j == 0 ? n2_ - 1 : j - 1; }

    friend bool operator==(const DomainGrid&, const DomainGrid&) = default;

private:
    std::size_t n1_;
    std::size_t n2_;
};

/// One real value per grid node, row-major in i.
class ScalarField {
public:
    explicit ScalarField(const DomainGrid& grid, double value = 0.0)
        : grid_(grid), data_(grid.size(), value) {}

    ScalarField(const DomainGrid& grid, std::vector<double> values) : grid_(grid), data_(std::move(values)) {
        if (data_.size() != grid_.size()) throw DomainError("ScalarField: size does not match grid");
    }

    /// Samples f(x1, x2) at every node.
    static ScalarField sample(const DomainGrid& grid, const std::function<double(double, double)>& f) {
        ScalarField out(grid);
        for (std::size_t i = 0; i < grid.n1(); ++i) {
            for (std::size_t j = 0; j < grid.n2(); ++j) out(i, j) = f(grid.x1(i), grid.x2(j));
        }
        return out;
    }

    const DomainGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[grid_.index(i, j)]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[grid_.index(i, j)]; }
    double& operator[](std::size_t k) noexcept { return data_[k]; }
    double operator[](std::size_t k) const noexcept { return data_[k]; }

    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    bool all_finite() const {
        for (double d : data_) {
            if (!std::isfinite(d)) return false;
        }
        return true;
    }

    ScalarField& operator+=(const ScalarField& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    ScalarField& operator*=(double s) {
        for (double& d : data_) d *= s;
        return *this;
    }
    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

    /// Pointwise product.
    friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
        a.check_same(b);
        ScalarField out(a.grid_);
        for (std::size_t k = 0; k < a.data_.size(); ++k) out.data_[k] = a.data_[k] * b.data_[k];
        return out;
    }

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    void check_same(const ScalarField& o) const {
        if (!(grid_ == o.grid_)) throw DomainError("ScalarField: grid mismatch");
    }

    DomainGrid grid_;
    std::vector<double> data_;
};

/// Pair of scalar fields (components along x1 and x2).
struct VectorField {
    ScalarField c1;
    ScalarField c2;
};

/// 5-point periodic Laplacian.
inline ScalarField discrete_laplacian(const ScalarField& f) {
    const DomainGrid& g = f.grid();
    const double w1 = 1.0 / (g.h1() * g.h1());
    const double w2 = 1.0 / (g.h2() * g.h2());
    ScalarField out(g);
    for_each_row(g.n1(), [&](std::size_t i) {
        const std::size_t ip = g.next1(i);
        const std::size_t im = g.prev1(i);
        for (std::size_t j = 0; j < g.n2(); ++j) {
            const double c = f(i, j);
            out(i, j) = w1 * ((f(ip, j) - c) - (c - f(im, j))) +
                        w2 * ((f(i, g.next2(j)) - c) - (c - f(i, g.prev2(j))));
        }
    });
    return out;
}

/// Central-difference gradient with periodic wraparound.
inline VectorField discrete_gradient(const ScalarField& f) {
    const DomainGrid& g = f.grid();
    const double s1 = 0.5 / g.h1();
    const double s2 = 0.5 / g.h2();
    VectorField out{ScalarField(g), ScalarField(g)};
    for_each_row(g.n1(), [&](std::size_t i) {
        const std::size_t ip = g.next1(i);
        const std::size_t im = g.prev1(i);
        for (std::size_t j = 0; j < g.n2(); ++j) {
            out.c1(i, j) = s1 * (f(ip, j) - f(im, j));
            out.c2(i, j) = s2 * (f(i, g.next2(j)) - f(i, g.prev2(j)));
        }
    });
    return out;
}

/// Forward-difference gradient, living on the edges (i+1/2, j) and (i, j+1/2).
/// Paired with discrete_laplacian it satisfies summation by parts exactly.
inline VectorField forward_gradient(const ScalarField& f) {
    const DomainGrid& g = f.grid();
    const double s1 = 1.0 / g.h1();
    const double s2 = 1.0 / g.h2();
    VectorField out{ScalarField(g), ScalarField(g)};
    for_each_row(g.n1(), [&](std::size_t i) {
        const std::size_t ip = g.next1(i);
        for (std::size_t j = 0; j < g.n2(); ++j) {
            out.c1(i, j) = s1 * (f(ip, j) - f(i, j));
            out.c2(i, j) = s2 * (f(i, g.next2(j)) - f(i, j));
        }
    });
    return out;
}

/// w * sum of node values.
inline double integrate(const ScalarField& f) {
    const DomainGrid& g = f.grid();
    const double sum = row_reduce(g.n1(), [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.n2(); ++j) s += f(i, j);
        return s;
    });
    return g.weight() * sum;
}

/// Discrete L2 inner product of two vector fields, w * sum <a, b>.
inline double integrate_dot(const VectorField& a, const VectorField& b) {
    return integrate(a.c1 * b.c1) + integrate(a.c2 * b.c2);
}

}  // namespace modflow
