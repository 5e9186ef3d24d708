#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bridgesteer/fields.hpp"

namespace bridgesteer {

/// Dense row-major (n_t x n_x) sample of a space-time function.
struct SliceMatrix {
    std::size_t n_t = 0;
    std::size_t n_x = 0;
    std::vector<double> data;

    SliceMatrix() = default;
    SliceMatrix(std::size_t rows, std::size_t cols) : n_t(rows), n_x(cols), data(rows * cols) {}
    double& at(std::size_t k, std::size_t i) { return data[k * n_x + i]; }
    double at(std::size_t k, std::size_t i) const { return data[k * n_x + i]; }
    std::span<double> row(std::size_t k) { return {data.data() + k * n_x, n_x}; }
    std::span<const double> row(std::size_t k) const { return {data.data() + k * n_x, n_x}; }
};

/// Time-dependent velocity field b(x, t). Evaluation outside the grid domain
/// clamps x to the nearest edge; exit accounting is the simulator's job.
class DriftField {
public:
    using Fn = std::function<double(double, double)>;

    DriftField(std::string name, Fn value)
        : name_(std::move(name)), value_(std::move(value)) {}
    DriftField(std::string name, Fn value, Fn derivative)
        : name_(std::move(name)), value_(std::move(value)), derivative_(std::move(derivative)) {}

    double operator()(double x, double t) const { return value_(x, t); }

    /// db/dx; analytic when provided, otherwise a central difference.
    double derivative(double x, double t) const {
        if (derivative_) return derivative_(x, t);
        const double h = 1e-5;
        return (value_(x + h, t) - value_(x - h, t)) / (2.0 * h);
    }

    const std::string& name() const { return name_; }

    static DriftField zero() {
        return DriftField("zero", [](double, double) { return 0.0; },
                          [](double, double) { return 0.0; });
    }

    /// Nelson forward drift (1/m) grad S + (hbar/m) grad R from Madelung
    /// pairs sampled per time slice; bilinear interpolation, x clamped.
    static DriftField from_madelung(const std::vector<MadelungPair>& pairs,
                                    const PhysicalConstants& constants);

    /// Gridded drift from precomputed slice samples.
    static DriftField from_samples(std::string name, GridPtr grid, SliceMatrix samples);

private:
    std::string name_;
    Fn value_;
    Fn derivative_;
};

}  // namespace bridgesteer
