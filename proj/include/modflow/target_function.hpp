#pragma once

// Scalar test functions on the target (functions of z = x + iy), with first
// and second derivatives for the chain-rule and Laplacian diagnostics.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>

#include "modflow/binning.hpp"
#include "modflow/hyperbolic.hpp"

namespace modflow {

/// Axis-aligned box [x0, x1] x [y0, y1] in the (x, y) plane.
struct SupportBox {
    double x0, x1, y0, y1;
};

struct TargetFunction {
    std::function<double(double, double)> value;
    /// (f_x, f_y); central differences of value when empty
    std::function<std::array<double, 2>(double, double)> gradient;
    /// (f_xx, f_xy, f_yy); central differences of value when empty
    std::function<std::array<double, 3>(double, double)> hessian;
    /// value assigned to the cusp overflow bin when pairing with binned measures
    double overflow_value = 0.0;
    /// closed support, when compact
    std::optional<SupportBox> support;

    double operator()(double x, double y) const { return value(x, y); }
    double operator()(const UpperHalfPoint& z) const { return value(z.x(), z.y()); }

    std::array<double, 2> grad(double x, double y) const {
        if (gradient) return gradient(x, y);
        const double h = 1e-5;
        return {(value(x + h, y) - value(x - h, y)) / (2 * h), (value(x, y + h) - value(x, y - h)) / (2 * h)};
    }

    std::array<double, 3> hess(double x, double y) const {
        if (hessian) return hessian(x, y);
        const double h = 1e-4;
        const double f0 = value(x, y);
        const double fxx = (value(x + h, y) - 2 * f0 + value(x - h, y)) / (h * h);
        const double fyy = (value(x, y + h) - 2 * f0 + value(x, y - h)) / (h * h);
        const double fxy = (value(x + h, y + h) - value(x + h, y - h) - value(x - h, y + h) +
                            value(x - h, y - h)) /
                           (4 * h * h);
        return {fxx, fxy, fyy};
    }

    /// True if the support is compact and stays strictly inside F_trunc with
    /// the given margin.
    bool support_inside(const FundamentalDomainBinning& binning, double margin = 0.0) const {
        if (!support) return false;
        const SupportBox& s = *support;
        if (s.x0 <= -0.5 + margin || s.x1 >= 0.5 - margin) return false;
        if (s.y1 >= binning.y_max() - margin) return false;
        // smallest |z| over the box
        const double xn = (s.x0 <= 0.0 && s.x1 >= 0.0) ? 0.0 : std::min(std::fabs(s.x0), std::fabs(s.x1));
        return std::hypot(xn, s.y0) > 1.0 + margin;
    }
};

namespace detail {

// Standard bump e * exp(-1/(1 - s^2)) on |s| < 1, peak value 1 at s = 0.
struct BumpProfile {
    double value = 0.0, d1 = 0.0, d2 = 0.0;
};

inline BumpProfile bump_profile(double s) {
    if (std::fabs(s) >= 1.0) return {};
    const double q = 1.0 - s * s;
    const double g = -1.0 / q;
    const double g1 = -2.0 * s / (q * q);
    const double g2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
    const double p = std::exp(1.0 + g);
    return {p, p * g1, p * (g1 * g1 + g2)};
}

}  // namespace detail

/// Tensor-product smooth bump centered at (cx, cy) with radii (rx, ry).
inline TargetFunction make_bump(double cx, double cy, double rx, double ry) {
    if (!(rx > 0.0) || !(ry > 0.0)) throw DomainError("make_bump: radii must be positive");
    TargetFunction f;
    f.value = [=](double x, double y) {
        return detail::bump_profile((x - cx) / rx).value * detail::bump_profile((y - cy) / ry).value;
    };
    f.gradient = [=](double x, double y) -> std::array<double, 2> {
        const auto bx = detail::bump_profile((x - cx) / rx);
        const auto by = detail::bump_profile((y - cy) / ry);
        return {bx.d1 / rx * by.value, bx.value * by.d1 / ry};
    };
    f.hessian = [=](double x, double y) -> std::array<double, 3> {
        const auto bx = detail::bump_profile((x - cx) / rx);
        const auto by = detail::bump_profile((y - cy) / ry);
        return {bx.d2 / (rx * rx) * by.value, bx.d1 / rx * by.d1 / ry, bx.value * by.d2 / (ry * ry)};
    };
    f.support = SupportBox{cx - rx, cx + rx, cy - ry, cy + ry};
    return f;
}

/// f = c everywhere, including the cusp.
inline TargetFunction make_constant(double c) {
    TargetFunction f;
    f.value = [c](double, double) { return c; };
    f.gradient = [](double, double) -> std::array<double, 2> { return {0.0, 0.0}; };
    f.hessian = [](double, double) -> std::array<double, 3> { return {0.0, 0.0, 0.0}; };
    f.overflow_value = c;
    return f;
}

/// f = a x + b y + c.
inline TargetFunction make_affine(double a, double b, double c) {
    TargetFunction f;
    f.value = [=](double x, double y) { return a * x + b * y + c; };
    f.gradient = [=](double, double) -> std::array<double, 2> { return {a, b}; };
    f.hessian = [](double, double) -> std::array<double, 3> { return {0.0, 0.0, 0.0}; };
    return f;
}

}  // namespace modflow
