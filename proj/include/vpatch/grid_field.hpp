#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "vpatch/types.hpp"

namespace vpatch {

/// Nonnegative scalar field on the truncated half cylinder [0, xmax] x [-pi, pi).
///
/// Cell (i, j) covers x1 in [i dx, (i+1) dx) and x2 in [-pi + j dy, -pi + (j+1) dy);
/// values are stored row-major, i.e. index j * nx + i.
class GridField {
public:
    GridField() = default;
    GridField(std::size_t nx, std::size_t ny, double xmax);
    GridField(std::size_t nx, std::size_t ny, double xmax, std::vector<double> values);

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    double xmax() const { return xmax_; }
    double dx() const { return xmax_ / static_cast<double>(nx_); }
    double dy() const { return kTwoPi / static_cast<double>(ny_); }
    double cellArea() const { return dx() * dy(); }
    double x1Center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx(); }
    double x2Center(std::size_t j) const { return -kPi + (static_cast<double>(j) + 0.5) * dy(); }

    double& at(std::size_t i, std::size_t j) { return values_[j * nx_ + i]; }
    double at(std::size_t i, std::size_t j) const { return values_[j * nx_ + i]; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double maxValue() const;
    bool sameGeometry(const GridField& other) const;

    /// Throws DomainError on negative or non-finite values, or support that
    /// reaches the last column.
    void validate() const;

    static GridField fromFunction(std::size_t nx, std::size_t ny, double xmax,
                                  const std::function<double(double, double)>& f);

private:
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    double xmax_ = 0.0;
    std::vector<double> values_;
};

/// x2-independent non-increasing profile zeta(x1), sampled on a uniform
/// partition of [0, lmax] and linearly interpolated between samples.
class StripProfile {
public:
    StripProfile(std::vector<double> samples, double lmax, double supportBound, double heightBound);

    double operator()(double x1) const;
    double supportBound() const { return support_; }
    double heightBound() const { return height_; }
    std::span<const double> samples() const { return samples_; }

    GridField rasterize(std::size_t nx, std::size_t ny, double xmax) const;

    static StripProfile indicator(double width);

private:
    std::vector<double> samples_;
    double lmax_;
    double support_;
    double height_;
};

// Text format: line 1 "nx,ny,xmax", line 2 the three values, then ny lines of
// nx comma-separated values (row j = 0 first).
void writeGridCsv(const GridField& f, const std::filesystem::path& path);
GridField readGridCsv(const std::filesystem::path& path);

// Binary format: 8-byte magic "VPGRID01", uint64 nx, uint64 ny, double xmax,
// then nx*ny little-endian doubles in row-major order.
void writeGridBinary(const GridField& f, const std::filesystem::path& path);
GridField readGridBinary(const std::filesystem::path& path);

}  // namespace vpatch
