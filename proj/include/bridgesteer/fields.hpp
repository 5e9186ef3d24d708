#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "bridgesteer/grid.hpp"

namespace bridgesteer {

using Complex = std::complex<double>;
using GridPtr = std::shared_ptr<const SpaceTimeGrid>;

/// Real-valued function sampled on one time slice of a grid.
/// Immutable after construction; the `density` flag asserts positivity and
/// unit mass (trapezoid rule) within 1e-8.
class RealField {
public:
    RealField(GridPtr grid, std::vector<double> values, bool density = false);

    const SpaceTimeGrid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    bool is_density() const { return density_; }

private:
    GridPtr grid_;
    std::vector<double> values_;
    bool density_;
};

/// Complex wavefunction sampled on one time slice.
class WaveField {
public:
    WaveField(GridPtr grid, std::vector<Complex> values, bool normalized = false);

    const SpaceTimeGrid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    std::span<const Complex> values() const { return values_; }
    Complex operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    bool is_normalized() const { return normalized_; }

private:
    GridPtr grid_;
    std::vector<Complex> values_;
    bool normalized_;
};

/// Madelung pair: psi = exp(R + i S / hbar) with real log-amplitude R and
/// phase action S (units of hbar).
struct MadelungPair {
    RealField R;
    RealField S;
};

constexpr double kDensityTol = 1e-8;
constexpr double kAmplitudeFloor = 1e-300;

/// Trapezoid-rule integral over the spatial grid.
double integrate(const RealField& f);
double integrate(GridPtr grid, std::span<const double> values);

double l1_distance(std::span<const double> a, std::span<const double> b, double dx);

MadelungPair madelung_decompose(const WaveField& psi, const PhysicalConstants& constants);
WaveField madelung_compose(const MadelungPair& pair, const PhysicalConstants& constants,
                           bool normalized_hint = false);

RealField density(const WaveField& psi);

/// Central second-order first derivative, one-sided second-order at the ends.
RealField gradient(const RealField& f);
/// Central second-order second derivative, one-sided second-order at the ends.
RealField laplacian(const RealField& f);

std::vector<double> gradient(const SpaceTimeGrid& grid, std::span<const double> v);
std::vector<double> laplacian(const SpaceTimeGrid& grid, std::span<const double> v);

struct FiniteAction {
    double value = 0.0;
    bool finite = false;
};

/// Trapezoid-in-time, rectangle-in-space approximation of the gradient
/// action integral of a wavefunction sequence (one slice per grid time).
FiniteAction finite_action(std::span<const WaveField> psis);

/// -(hbar^2/2m) * lap(sqrt(rho)) / sqrt(rho), using the module stencils.
RealField quantum_potential(const RealField& rho, const PhysicalConstants& constants);

}  // namespace bridgesteer
