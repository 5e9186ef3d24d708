#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bridgesteer/errors.hpp"

namespace bridgesteer {

/// Action and mass scales. Defaults give the dimensionless units used
/// throughout (hbar = m = 1); the diffusion coefficient of the associated
/// process is hbar/m.
struct PhysicalConstants {
    double hbar = 1.0;
    double mass = 1.0;

    void validate() const {
        if (!(hbar > 0.0) || !(mass > 0.0)) {
            throw ConfigError("PhysicalConstants: hbar and mass must be positive");
        }
    }
    double epsilon() const { return hbar / mass; }     // diffusion coefficient
    double nu() const { return hbar / (2.0 * mass); }  // half of it, the PDE viscosity
};

/// Uniform 1-D spatial grid crossed with a uniform time grid.
/// All fields in the library live on slices of one of these.
class SpaceTimeGrid {
public:
    SpaceTimeGrid(double x_min, double x_max, std::size_t n_x,
                  double t0, double t1, std::size_t n_t)
        : x_min_(x_min), x_max_(x_max), n_x_(n_x), t0_(t0), t1_(t1), n_t_(n_t) {
        if (!(x_min < x_max)) throw ConfigError("grid: x_min must be < x_max");
        if (!(t0 < t1)) throw ConfigError("grid: t0 must be < t1");
        if (n_x < 16) throw GridTooSmall("grid: n_x must be >= 16");
        if (n_t < 2) throw GridTooSmall("grid: n_t must be >= 2");
        dx_ = (x_max - x_min) / static_cast<double>(n_x - 1);
        dt_ = (t1 - t0) / static_cast<double>(n_t - 1);
    }

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double t0() const { return t0_; }
    double t1() const { return t1_; }
    std::size_t n_x() const { return n_x_; }
    std::size_t n_t() const { return n_t_; }
    double dx() const { return dx_; }
    double dt() const { return dt_; }

    double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx_; }
    double t(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }

    std::vector<double> x_points() const {
        std::vector<double> xs(n_x_);
        for (std::size_t i = 0; i < n_x_; ++i) xs[i] = x(i);
        return xs;
    }
    std::vector<double> times() const {
        std::vector<double> ts(n_t_);
        for (std::size_t k = 0; k < n_t_; ++k) ts[k] = t(k);
        return ts;
    }

    /// Grid refined by 2x in both directions (same extents).
    SpaceTimeGrid refined() const {
        return SpaceTimeGrid(x_min_, x_max_, 2 * (n_x_ - 1) + 1, t0_, t1_, 2 * (n_t_ - 1) + 1);
    }

    bool operator==(const SpaceTimeGrid& o) const {
        return x_min_ == o.x_min_ && x_max_ == o.x_max_ && n_x_ == o.n_x_ &&
               t0_ == o.t0_ && t1_ == o.t1_ && n_t_ == o.n_t_;
    }

private:
    double x_min_, x_max_;
    std::size_t n_x_;
    double t0_, t1_;
    std::size_t n_t_;
    double dx_, dt_;
};

/// Default grid for the unit-shift Gaussian steering problem: wide enough
/// that both endpoint Gaussians are below 1e-12 of peak at the boundary.
inline SpaceTimeGrid default_gaussian_grid(std::size_t n_x = 1024, std::size_t n_t = 513) {
    return SpaceTimeGrid(-6.0, 7.0, n_x, 0.0, 1.0, n_t);
}

}  // namespace bridgesteer
