#include "bridgesteer/fields.hpp"

#include <cmath>
#include <numbers>

namespace bridgesteer {

namespace {

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(std::string(what) + ": non-finite value");
    }
}

}  // namespace

RealField::RealField(GridPtr grid, std::vector<double> values, bool density)
    : grid_(std::move(grid)), values_(std::move(values)), density_(density) {
    if (values_.size() != grid_->n_x()) throw ConfigError("RealField: size != n_x");
    require_finite(values_, "RealField");
    if (density_) {
        for (double x : values_) {
            if (!(x > 0.0)) throw NonpositiveDensity("RealField: density values must be > 0");
        }
        double mass = integrate(grid_, values_);
        if (std::abs(mass - 1.0) > kDensityTol) {
            throw InvalidDensity("RealField: density mass " + std::to_string(mass) +
                                 " outside 1 +- 1e-8");
        }
    }
}

WaveField::WaveField(GridPtr grid, std::vector<Complex> values, bool normalized)
    : grid_(std::move(grid)), values_(std::move(values)), normalized_(normalized) {
    if (values_.size() != grid_->n_x()) throw ConfigError("WaveField: size != n_x");
    for (const Complex& z : values_) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw Error("WaveField: non-finite value");
        }
    }
    if (normalized_) {
        double mass = 0.0;
        const double dx = grid_->dx();
        for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
            mass += 0.5 * (std::norm(values_[i]) + std::norm(values_[i + 1])) * dx;
        }
        if (std::abs(mass - 1.0) > kDensityTol) {
            throw InvalidDensity("WaveField: |psi|^2 mass " + std::to_string(mass) +
                                 " outside 1 +- 1e-8");
        }
    }
}

double integrate(GridPtr grid, std::span<const double> values) {
    const double dx = grid->dx();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        s += 0.5 * (values[i] + values[i + 1]) * dx;
    }
    return s;
}

double integrate(const RealField& f) { return integrate(f.grid_ptr(), f.values()); }

double l1_distance(std::span<const double> a, std::span<const double> b, double dx) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        s += 0.5 * (std::abs(a[i] - b[i]) + std::abs(a[i + 1] - b[i + 1])) * dx;
    }
    return s;
}

MadelungPair madelung_decompose(const WaveField& psi, const PhysicalConstants& constants) {
    const std::size_t n = psi.size();
    std::vector<double> r(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::abs(psi[i]);
        if (a < kAmplitudeFloor) throw ZeroAmplitude("madelung_decompose: |psi| below 1e-300");
        r[i] = std::log(a);
    }
    // Unwrap the phase continuously across the grid, anchored at the leftmost
    // point so S(x_min) lies in (-pi*hbar, pi*hbar].
    double prev_raw = std::arg(psi[0]);
    if (prev_raw <= -std::numbers::pi) prev_raw += 2.0 * std::numbers::pi;
    double unwrapped = prev_raw;
    s[0] = constants.hbar * unwrapped;
    for (std::size_t i = 1; i < n; ++i) {
        const double raw = std::arg(psi[i]);
        double delta = raw - prev_raw;
        while (delta > std::numbers::pi) delta -= 2.0 * std::numbers::pi;
        while (delta <= -std::numbers::pi) delta += 2.0 * std::numbers::pi;
        unwrapped += delta;
        prev_raw = raw;
        s[i] = constants.hbar * unwrapped;
    }
    GridPtr g = psi.grid_ptr();
    return MadelungPair{RealField(g, std::move(r)), RealField(g, std::move(s))};
}

WaveField madelung_compose(const MadelungPair& pair, const PhysicalConstants& constants,
                           bool normalized_hint) {
    const std::size_t n = pair.R.size();
    std::vector<Complex> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (pair.R[i] > 300.0) throw Overflow("madelung_compose: R > 300 would overflow");
        const double amp = std::exp(pair.R[i]);
        const double phase = pair.S[i] / constants.hbar;
        out[i] = Complex(amp * std::cos(phase), amp * std::sin(phase));
    }
    return WaveField(pair.R.grid_ptr(), std::move(out), normalized_hint);
}

RealField density(const WaveField& psi) {
    const std::size_t n = psi.size();
    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) rho[i] = std::norm(psi[i]);
    return RealField(psi.grid_ptr(), std::move(rho), psi.is_normalized());
}

std::vector<double> gradient(const SpaceTimeGrid& grid, std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 5) throw GridTooSmall("gradient: need n_x >= 5");
    const double dx = grid.dx();
    std::vector<double> g(n);
    for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (v[i + 1] - v[i - 1]) / (2.0 * dx);
    g[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx);
    g[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx);
    return g;
}

std::vector<double> laplacian(const SpaceTimeGrid& grid, std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 5) throw GridTooSmall("laplacian: need n_x >= 5");
    const double dx2 = grid.dx() * grid.dx();
    std::vector<double> l(n);
    for (std::size_t i = 1; i + 1 < n; ++i) l[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / dx2;
    l[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / dx2;
    l[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / dx2;
    return l;
}

RealField gradient(const RealField& f) {
    return RealField(f.grid_ptr(), gradient(f.grid(), f.values()));
}

RealField laplacian(const RealField& f) {
    return RealField(f.grid_ptr(), laplacian(f.grid(), f.values()));
}

FiniteAction finite_action(std::span<const WaveField> psis) {
    if (psis.size() < 2) throw ConfigError("finite_action: need >= 2 time slices");
    const SpaceTimeGrid& grid = psis[0].grid();
    const double dx = grid.dx();
    const std::size_t n = grid.n_x();

    auto slice_action = [&](const WaveField& psi) {
        // rectangle rule in space on |d psi/dx|^2
        std::vector<double> re(n), im(n);
        for (std::size_t i = 0; i < n; ++i) {
            re[i] = psi[i].real();
            im[i] = psi[i].imag();
        }
        auto gre = gradient(grid, re);
        auto gim = gradient(grid, im);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (gre[i] * gre[i] + gim[i] * gim[i]) * dx;
        return s;
    };

    const double dt = (grid.t1() - grid.t0()) / static_cast<double>(psis.size() - 1);
    double total = 0.0;
    bool ok = true;
    double prev = slice_action(psis[0]);
    for (std::size_t k = 1; k < psis.size(); ++k) {
        const double cur = slice_action(psis[k]);
        total += 0.5 * (prev + cur) * dt;
        prev = cur;
    }
    if (!std::isfinite(total)) ok = false;
    return FiniteAction{total, ok};
}

RealField quantum_potential(const RealField& rho, const PhysicalConstants& constants) {
    const std::size_t n = rho.size();
    std::vector<double> root(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(rho[i] > 0.0)) throw NonpositiveDensity("quantum_potential: rho must be > 0");
        root[i] = std::sqrt(rho[i]);
    }
    auto lap = laplacian(rho.grid(), root);
    const double coef = -constants.hbar * constants.hbar / (2.0 * constants.mass);
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = coef * lap[i] / root[i];
    return RealField(rho.grid_ptr(), std::move(q));
}

}  // namespace bridgesteer
