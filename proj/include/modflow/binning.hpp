#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "modflow/errors.hpp"
#include "modflow/hyperbolic.hpp"

namespace modflow {

/// A rectangular cell [x0, x1] x [y0, y1] of the truncated fundamental domain.
/// The overflow bin is the cusp region y > y_max with y1 = +inf.
struct Bin {
    int ix = -1;
    int iy = -1;
    double x0 = 0.0;
    double x1 = 0.0;
    double y0 = 0.0;
    double y1 = 0.0;
    bool overflow = false;

    UpperHalfPoint center() const {
        if (overflow) return {0.5 * (x0 + x1), 2.0 * y0};
        return {0.5 * (x0 + x1), 0.5 * (y0 + y1)};
    }
};

inline constexpr int kCellQuadratureColumns = 16;

/// Hyperbolic area dx dy / y^2 of bin ∩ F. The y-integral is exact with the
/// |z| >= 1 arc clipped; the x-integral uses the midpoint rule on
/// kCellQuadratureColumns sub-columns. The overflow bin is exact: 1/y_max.
inline double hyperbolic_cell_mass(const Bin& bin) {
    const double width = bin.x1 - bin.x0;
    if (!(width > 0.0) || !(bin.y1 > bin.y0)) return 0.0;
    if (bin.overflow) return width / bin.y0;

    const double dx = width / kCellQuadratureColumns;
    const double inv_top = std::isfinite(bin.y1) ? 1.0 / bin.y1 : 0.0;
    double mass = 0.0;
    for (int k = 0; k < kCellQuadratureColumns; ++k) {
        const double xm = bin.x0 + (k + 0.5) * dx;
        const double arc = std::fabs(xm) < 1.0 ? std::sqrt(1.0 - xm * xm) : 0.0;
        const double lower = std::max(bin.y0, arc);
        if (lower < bin.y1) mass += (1.0 / lower - inv_top) * dx;
    }
    return mass;
}

/// Rectangular bins over F_trunc = {|x| <= 1/2, |z| >= 1, y <= y_max} plus a
/// single overflow bin for the cusp. Cells of the nx-by-ny grid on
/// [-1/2, 1/2] x [sqrt(3)/2, y_max] whose quadrature mass is zero (they lie
/// below the unit arc) are not bins.
class FundamentalDomainBinning {
public:
    static constexpr double kYMin = std::numbers::sqrt3 / 2.0;

    FundamentalDomainBinning(int nx, int ny, double y_max) : nx_(nx), ny_(ny), y_max_(y_max) {
        if (nx < 1 || ny < 1) throw DomainError("FundamentalDomainBinning: bin counts must be >= 1");
        if (!(y_max > 1.0) || !std::isfinite(y_max)) {
            throw DomainError("FundamentalDomainBinning: y_max must be > 1, got " + std::to_string(y_max));
        }
        dx_ = 1.0 / nx_;
        dy_ = (y_max_ - kYMin) / ny_;
        cell_to_bin_.assign(static_cast<std::size_t>(nx_) * ny_, -1);
        for (int iy = 0; iy < ny_; ++iy) {
            for (int ix = 0; ix < nx_; ++ix) {
                Bin b = cell(ix, iy);
                const double m = hyperbolic_cell_mass(b);
                if (m > 0.0) {
                    cell_to_bin_[cell_offset(ix, iy)] = static_cast<long>(bins_.size());
                    bins_.push_back(b);
                    raw_mass_.push_back(m);
                }
            }
        }
        Bin over;
        over.x0 = -0.5;
        over.x1 = 0.5;
        over.y0 = y_max_;
        over.y1 = std::numeric_limits<double>::infinity();
        over.overflow = true;
        bins_.push_back(over);
        raw_mass_.push_back(hyperbolic_cell_mass(over));
    }

    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }
    double y_max() const noexcept { return y_max_; }

    /// Number of bins including the overflow bin.
    std::size_t size() const noexcept { return bins_.size(); }
    std::size_t overflow_index() const noexcept { return bins_.size() - 1; }
    const Bin& bin(std::size_t k) const { return bins_.at(k); }
    const std::vector<Bin>& bins() const noexcept { return bins_; }

    /// Unnormalized hyperbolic mass of bin k, as hyperbolic_cell_mass.
    double raw_mass(std::size_t k) const { return raw_mass_.at(k); }
    const std::vector<double>& raw_masses() const noexcept { return raw_mass_; }

    /// Bin index of the grid cell (ix, iy), or nullopt if that cell is not a bin.
    std::optional<std::size_t> cell_bin(int ix, int iy) const {
        if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) return std::nullopt;
        const long k = cell_to_bin_[cell_offset(ix, iy)];
        if (k < 0) return std::nullopt;
        return static_cast<std::size_t>(k);
    }

    /// Bin index of a point of F (as returned by reduce_to_fundamental_domain).
    /// A point in a zero-mass sliver cell goes to the first bin above it in
    /// the same column.
    std::size_t bin_index(const UpperHalfPoint& reduced) const {
        if (reduced.y() > y_max_) return overflow_index();
        int ix = static_cast<int>(std::floor((reduced.x() + 0.5) / dx_));
        int iy = static_cast<int>(std::floor((reduced.y() - kYMin) / dy_));
        ix = std::clamp(ix, 0, nx_ - 1);
        iy = std::clamp(iy, 0, ny_ - 1);
        for (; iy < ny_; ++iy) {
            const long k = cell_to_bin_[cell_offset(ix, iy)];
            if (k >= 0) return static_cast<std::size_t>(k);
        }
        return overflow_index();
    }

    friend bool operator==(const FundamentalDomainBinning& a, const FundamentalDomainBinning& b) {
        return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.y_max_ == b.y_max_;
    }

private:
    std::size_t cell_offset(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * nx_ + static_cast<std::size_t>(ix);
    }

    Bin cell(int ix, int iy) const {
        Bin b;
        b.ix = ix;
        b.iy = iy;
        b.x0 = -0.5 + ix * dx_;
        b.x1 = ix + 1 == nx_ ? 0.5 : -0.5 + (ix + 1) * dx_;
        b.y0 = kYMin + iy * dy_;
        b.y1 = iy + 1 == ny_ ? y_max_ : kYMin + (iy + 1) * dy_;
        return b;
    }

    int nx_;
    int ny_;
    double y_max_;
    double dx_ = 0.0;
    double dy_ = 0.0;
    std::vector<long> cell_to_bin_;
    std::vector<Bin> bins_;
    std::vector<double> raw_mass_;
};

}  // namespace modflow
