#pragma once

// Geometry of the upper half-plane with the Poincaré metric
// ds^2 = (dx^2 + dy^2) / y^2, the SL(2,Z) action, and reduction to the
// standard fundamental domain F = {|Re z| <= 1/2, |z| >= 1}.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <utility>

#include "modflow/errors.hpp"

namespace modflow {

/// A point z = x + iy with y > 0.
class UpperHalfPoint {
public:
    UpperHalfPoint(double x, double y) : x_(x), y_(y) {
        if (!std::isfinite(x) || !std::isfinite(y)) {
            throw DomainError("UpperHalfPoint: non-finite component");
        }
        if (!(y > 0.0)) {
            throw DomainError("UpperHalfPoint: y must be > 0, got " + std::to_string(y));
        }
    }

    double x() const noexcept { return x_; }
    double y() const noexcept { return y_; }

    friend bool operator==(const UpperHalfPoint&, const UpperHalfPoint&) = default;

    friend std::ostream& operator<<(std::ostream& os, const UpperHalfPoint& z) {
        return os << "(" << z.x_ << ", " << z.y_ << ")";
    }

private:
    double x_;
    double y_;
};

namespace detail {

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw DomainError("ModularMatrix: integer overflow");
    return r;
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw DomainError("ModularMatrix: integer overflow");
    return r;
}

}  // namespace detail

/// An element (a b; c d) of SL(2,Z). The determinant is checked exactly.
class ModularMatrix {
public:
    ModularMatrix(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d)
        : a_(a), b_(b), c_(c), d_(d) {
        const std::int64_t det =
            detail::checked_add(detail::checked_mul(a, d), -detail::checked_mul(b, c));
        if (det != 1) {
            throw DomainError("ModularMatrix: determinant " + std::to_string(det) + " != 1");
        }
    }

    static ModularMatrix identity() { return {1, 0, 0, 1}; }
    /// z -> -1/z
    static ModularMatrix inversion() { return {0, -1, 1, 0}; }
    /// z -> z + n
    static ModularMatrix translation(std::int64_t n) { return {1, n, 0, 1}; }

    std::int64_t a() const noexcept { return a_; }
    std::int64_t b() const noexcept { return b_; }
    std::int64_t c() const noexcept { return c_; }
    std::int64_t d() const noexcept { return d_; }

    ModularMatrix inverse() const { return {d_, -b_, -c_, a_}; }

    bool is_identity() const noexcept { return a_ == 1 && b_ == 0 && c_ == 0 && d_ == 1; }

    friend ModularMatrix operator*(const ModularMatrix& l, const ModularMatrix& r) {
        using detail::checked_add;
        using detail::checked_mul;
        return {checked_add(checked_mul(l.a_, r.a_), checked_mul(l.b_, r.c_)),
                checked_add(checked_mul(l.a_, r.b_), checked_mul(l.b_, r.d_)),
                checked_add(checked_mul(l.c_, r.a_), checked_mul(l.d_, r.c_)),
                checked_add(checked_mul(l.c_, r.b_), checked_mul(l.d_, r.d_))};
    }

    friend bool operator==(const ModularMatrix&, const ModularMatrix&) = default;

    friend std::ostream& operator<<(std::ostream& os, const ModularMatrix& g) {
        return os << "[[" << g.a_ << ", " << g.b_ << "], [" << g.c_ << ", " << g.d_ << "]]";
    }

private:
    std::int64_t a_, b_, c_, d_;
};

/// (a z + b) / (c z + d). Im of the result is computed as y / |cz+d|^2.
inline UpperHalfPoint mobius_apply(const ModularMatrix& g, const UpperHalfPoint& z) {
    const double a = static_cast<double>(g.a());
    const double b = static_cast<double>(g.b());
    const double c = static_cast<double>(g.c());
    const double d = static_cast<double>(g.d());
    const double x = z.x();
    const double y = z.y();
    const double re_den = c * x + d;
    const double im_den = c * y;
    const double denom = re_den * re_den + im_den * im_den;
    if (!(denom >= std::numeric_limits<double>::min()) || !std::isfinite(denom)) {
        throw DegenerateInputError("mobius_apply: |cz+d|^2 outside the normal double range");
    }
    // (az+b)(c conj(z)+d) has imaginary part (ad-bc) y = y.
    const double re_num = (a * x + b) * re_den + a * c * y * y;
    return {re_num / denom, y / denom};
}

/// Result of reducing a point into the fundamental domain.
struct Reduction {
    UpperHalfPoint point;
    /// witness with mobius_apply(witness, input) == point up to rounding
    ModularMatrix witness;
};

inline constexpr int kReductionIterationCap = 200;
/// Points with | |z|^2 - 1 | below this are treated as lying on the unit arc.
inline constexpr double kArcTolerance = 1e-14;

/// Alternates integer translation and inversion until z lies in F.
/// Ties: Re z in [-1/2, 1/2), and on the unit arc Re z <= 0 is preferred.
inline Reduction reduce_to_fundamental_domain(const UpperHalfPoint& z) {
    double x = z.x();
    double y = z.y();
    ModularMatrix witness = ModularMatrix::identity();

    auto translate = [&] {
        double n = std::floor(x + 0.5);
        double r = x - n;
        if (r < -0.5) {
            n -= 1.0;
            r = x - n;
        }
        if (n != 0.0) {
            if (std::fabs(n) > 9.0e15) {
                throw NonConvergenceError("reduce_to_fundamental_domain: translation out of range", x, y);
            }
            witness = ModularMatrix::translation(-static_cast<std::int64_t>(n)) * witness;
            x = r;
        }
    };

    for (int it = 0;; ++it) {
        if (it >= kReductionIterationCap) {
            throw NonConvergenceError("reduce_to_fundamental_domain: iteration cap exceeded at (" +
                                          std::to_string(x) + ", " + std::to_string(y) + ")",
                                      x, y);
        }
        translate();
        const double r2 = x * x + y * y;
        if (r2 < 1.0 - kArcTolerance) {
            x = -x / r2;
            y = y / r2;
            witness = ModularMatrix::inversion() * witness;
            continue;
        }
        break;
    }

    // On the arc prefer Re z <= 0, unless that would leave the strip (corner).
    const double r2 = x * x + y * y;
    if (x > 0.0 && std::fabs(r2 - 1.0) <= 0.5 * kArcTolerance) {
        const double nx = -x / r2;
        if (nx >= -0.5) {
            x = nx;
            y = y / r2;
            witness = ModularMatrix::inversion() * witness;
        }
    }
    return {UpperHalfPoint(x, y), witness};
}

/// True if z satisfies |Re z| <= 1/2 + tol and |z| >= 1 - tol.
inline bool in_fundamental_domain(const UpperHalfPoint& z, double tol = 1e-12) {
    return std::fabs(z.x()) <= 0.5 + tol && std::hypot(z.x(), z.y()) >= 1.0 - tol;
}

/// Poincaré distance, 2 asinh(|p - q| / (2 sqrt(y_p y_q))).
inline double hyperbolic_distance(const UpperHalfPoint& p, const UpperHalfPoint& q) {
    const double chord = std::hypot(p.x() - q.x(), p.y() - q.y());
    return 2.0 * std::asinh(chord / (2.0 * std::sqrt(p.y() * q.y())));
}

template <class F>
concept PlaneFunction = std::regular_invocable<F, double, double> &&
                        std::convertible_to<std::invoke_result_t<F, double, double>, double>;

/// -y^2 (f_xx + f_yy) by the 5-point central-difference stencil of width h.
template <PlaneFunction F>
double hyperbolic_laplacian_fd(F&& f, const UpperHalfPoint& z, double h) {
    if (!(h > 0.0)) throw DomainError("hyperbolic_laplacian_fd: step must be positive");
    const double x = z.x();
    const double y = z.y();
    if (!(y - h > 0.0)) {
        throw DomainError("hyperbolic_laplacian_fd: stencil leaves the upper half-plane");
    }
    const double f0 = f(x, y);
    const double sum = f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f0;
    return -y * y * sum / (h * h);
}

}  // namespace modflow
