#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bridgesteer/gaussian_bridge.hpp"
#include "bridgesteer/pipeline.hpp"
#include "bridgesteer/schrodinger_system.hpp"

using namespace bridgesteer;

namespace {

constexpr double kPi = std::numbers::pi;

GridPtr make_grid(std::size_t nx, std::size_t nt, double x0 = -6.0, double x1 = 7.0) {
    return std::make_shared<const SpaceTimeGrid>(x0, x1, nx, 0.0, 1.0, nt);
}

RealField gaussian_density(GridPtr grid, double omega, double mean) {
    std::vector<double> v(grid->n_x());
    const double norm = std::sqrt(omega / kPi);
    for (std::size_t i = 0; i < grid->n_x(); ++i) {
        const double d = grid->x(i) - mean;
        v[i] = norm * std::exp(-omega * d * d);
    }
    const double mass = integrate(grid, v);
    for (double& y : v) y /= mass;
    return RealField(grid, std::move(v), true);
}

DriftField reference_drift(const GaussianBridgeSolution& sol) {
    const double w = sol.omega();
    const auto p = sol.constants().params;
    return DriftField("ref", [w, p](double x, double t) { return p.c - w * (x - p.mean(t)); },
                      [w](double, double) { return -w; });
}

/// sup over slices of (max |num - exact| / max |exact|) restricted to |x|<=4,
/// after removing a single global log-gauge constant
double gauge_fixed_relative_sup(const SliceMatrix& logs, const SpaceTimeGrid& g,
                                const std::function<double(double, double)>& exact_log) {
    double gauge = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            if (std::abs(g.x(i)) > 4.0) continue;
            gauge += logs.at(k, i) - exact_log(g.x(i), g.t(k));
            ++count;
        }
    }
    gauge /= static_cast<double>(count);
    double worst = 0.0;
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        double err = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            if (std::abs(g.x(i)) > 4.0) continue;
            const double ex = std::exp(exact_log(g.x(i), g.t(k)));
            err = std::max(err, std::abs(std::exp(logs.at(k, i) - gauge) - ex));
            peak = std::max(peak, ex);
        }
        worst = std::max(worst, err / peak);
    }
    return worst;
}

}  // namespace

TEST_CASE("constants solve the backward equation exactly under zero drift") {
    for (PdeScheme scheme : {PdeScheme::LogSpace, PdeScheme::Flux}) {
        auto grid = make_grid(128, 33);
        RealField terminal(grid, std::vector<double>(grid->n_x(), 1.0));
        auto phi = propagate_phi_backward(terminal, DriftField::zero(), PhysicalConstants{},
                                          scheme);
        REQUIRE(phi.size() == grid->n_t());
        for (const auto& slice : phi) {
            for (std::size_t i = 0; i < slice.size(); ++i) {
                CHECK(slice[i] == doctest::Approx(1.0).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("affine terminal stays affine under zero-drift backward flow") {
    // the boundary closures cannot represent an affine profile exactly, so
    // keep the horizon short and check away from the diffusion layers
    auto grid = std::make_shared<const SpaceTimeGrid>(-6.0, 7.0, 256, 0.0, 0.01, 65);
    std::vector<double> lin(grid->n_x());
    for (std::size_t i = 0; i < grid->n_x(); ++i) lin[i] = 1.5 + 0.05 * (grid->x(i) + 6.0);
    auto phi = propagate_phi_backward(RealField(grid, lin), DriftField::zero(),
                                      PhysicalConstants{}, PdeScheme::LogSpace);
    const double dx2 = grid->dx() * grid->dx();
    for (std::size_t k = 0; k < grid->n_t(); k += 16) {
        for (std::size_t i = 0; i < grid->n_x(); ++i) {
            if (grid->x(i) < -4.5 || grid->x(i) > 5.5 || i == 0 || i + 1 == grid->n_x()) continue;
            const double curv = (phi[k][i + 1] - 2.0 * phi[k][i] + phi[k][i - 1]) / dx2;
            CHECK(std::abs(curv) < 1e-8);
        }
    }
}

TEST_CASE("backward propagation reproduces the closed-form factor") {
    GaussianConfig gc;
    GaussianBridgeSolution sol(gc);
    auto drift = reference_drift(sol);

    auto run = [&](std::size_t nx, std::size_t nt) {
        auto grid = make_grid(nx, nt);
        std::vector<double> term(grid->n_x());
        for (std::size_t i = 0; i < grid->n_x(); ++i) {
            term[i] = std::exp(sol.log_phi(grid->x(i), 1.0));
        }
        auto phi = propagate_phi_backward(RealField(grid, term), drift, gc.constants,
                                          PdeScheme::LogSpace);
        double worst = 0.0;
        for (std::size_t k = 0; k < grid->n_t(); ++k) {
            double err = 0.0, peak = 0.0;
            for (std::size_t i = 0; i < grid->n_x(); ++i) {
                if (std::abs(grid->x(i)) > 4.0) continue;
                const double ex = std::exp(sol.log_phi(grid->x(i), grid->t(k)));
                err = std::max(err, std::abs(phi[k][i] - ex));
                peak = std::max(peak, ex);
            }
            worst = std::max(worst, err / peak);
        }
        return worst;
    };

    const double coarse = run(1024, 513);
    CHECK(coarse < 5e-5);
    const double mid = run(1024, 1025);
    CHECK(mid < 1e-5);
    const double fine = run(2048, 1025);
    CHECK(coarse / fine >= 3.0);  // one full refinement, second-order scheme
}

TEST_CASE("forward propagation reproduces the closed-form hatted factor") {
    GaussianConfig gc;
    GaussianBridgeSolution sol(gc);
    auto drift = reference_drift(sol);
    auto grid = make_grid(1024, 1025);
    std::vector<double> init(grid->n_x());
    for (std::size_t i = 0; i < grid->n_x(); ++i) {
        init[i] = std::exp(sol.log_phi_hat(grid->x(i), 0.0));
    }
    auto phi_hat = propagate_phihat_forward(RealField(grid, init), drift, gc.constants,
                                            PdeScheme::LogSpace);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid->n_t(); ++k) {
        double err = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < grid->n_x(); ++i) {
            if (std::abs(grid->x(i)) > 4.0) continue;
            const double ex = std::exp(sol.log_phi_hat(grid->x(i), grid->t(k)));
            err = std::max(err, std::abs(phi_hat[k][i] - ex));
            peak = std::max(peak, ex);
        }
        worst = std::max(worst, err / peak);
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("flux scheme conserves mass to roundoff") {
    GaussianConfig gc;
    GaussianBridgeSolution sol(gc);
    auto drift = reference_drift(sol);
    auto grid = make_grid(512, 257);
    auto rho = gaussian_density(grid, kPi, 0.0);
    auto seq = propagate_phihat_forward(rho, drift, gc.constants, PdeScheme::Flux);
    // rectangle-rule mass is the conserved discrete quantity
    auto rect_mass = [&](const RealField& f) {
        double s = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * grid->dx();
        return s;
    };
    const double m0 = rect_mass(seq.front());
    for (const auto& slice : seq) {
        CHECK(std::abs(rect_mass(slice) - m0) < 1e-10);
    }
}

TEST_CASE("zero-drift forward flux flow spreads variance at rate epsilon") {
    auto grid = make_grid(1024, 513);
    const double sigma2 = 0.25;
    std::vector<double> v(grid->n_x());
    for (std::size_t i = 0; i < grid->n_x(); ++i) {
        v[i] = std::exp(-grid->x(i) * grid->x(i) / (2.0 * sigma2)) /
               std::sqrt(2.0 * kPi * sigma2);
    }
    const double mass0 = integrate(grid, v);
    for (double& y : v) y /= mass0;
    auto seq = propagate_phihat_forward(RealField(grid, v, true), DriftField::zero(),
                                        PhysicalConstants{}, PdeScheme::Flux);
    for (std::size_t k = 0; k < grid->n_t(); k += 128) {
        double mass = 0.0, mean = 0.0, second = 0.0;
        for (std::size_t i = 0; i < grid->n_x(); ++i) {
            const double w = seq[k][i] * grid->dx();
            mass += w;
            mean += w * grid->x(i);
            second += w * grid->x(i) * grid->x(i);
        }
        mean /= mass;
        const double var = second / mass - mean * mean;
        // diffusion coefficient epsilon = hbar/m = 1
        CHECK(std::abs(var - (sigma2 + grid->t(k))) < 1e-4);
    }
}

TEST_CASE("transpose-backward pairing is conserved across slices") {
    // <phi(t), phihat(t)> must be invariant when the backward propagator is
    // the exact adjoint of the forward one
    auto grid = make_grid(256, 129);
    DriftField ou("ou", [](double x, double) { return -1.3 * x; },
                  [](double, double) { return -1.3; });
    auto rho = gaussian_density(grid, 1.3, 0.0);
    auto fwd = propagate_phihat_forward(rho, ou, PhysicalConstants{}, PdeScheme::Flux);
    std::vector<double> term(grid->n_x());
    for (std::size_t i = 0; i < grid->n_x(); ++i) {
        term[i] = 1.0 + 0.3 * std::cos(0.5 * grid->x(i));
    }
    auto bwd = propagate_phi_backward(RealField(grid, term), ou, PhysicalConstants{},
                                      PdeScheme::Flux);
    auto pairing = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t i = 0; i < grid->n_x(); ++i) s += fwd[k][i] * bwd[k][i] * grid->dx();
        return s;
    };
    const double p0 = pairing(0);
    for (std::size_t k = 0; k < grid->n_t(); k += 8) {
        CHECK(pairing(k) == doctest::Approx(p0).epsilon(1e-12));
    }
}

TEST_CASE("self-bridge of a stationary process converges immediately") {
    // OU drift -w x is the Nelson drift of the stationary ground state;
    // bridging the invariant density to itself returns the process
    const double w = kPi;
    auto grid = make_grid(512, 129);
    DriftField ou("ou", [w](double x, double) { return -w * x; },
                  [w](double, double) { return -w; });
    auto rho = gaussian_density(grid, w, 0.0);
    FortetConfig fc;
    fc.marginal_tolerance = 1e-8;
    auto bridge = solve_bridge(rho, rho, ou, PhysicalConstants{}, fc);
    CHECK(bridge.iterations <= 2);
    // phi is constant across space and time
    double lo = 1e300, hi = -1e300;
    for (std::size_t k = 0; k < grid->n_t(); ++k) {
        for (std::size_t i = 0; i < grid->n_x(); ++i) {
            if (std::abs(grid->x(i)) > 4.0) continue;
            lo = std::min(lo, bridge.log_phi.at(k, i));
            hi = std::max(hi, bridge.log_phi.at(k, i));
        }
    }
    CHECK(hi - lo < 1e-8);
}

TEST_CASE("unit-shift bridge matches the closed forms after gauge fixing") {
    GaussianConfig gc;
    GaussianBridgeSolution sol(gc);
    auto grid = make_grid(1024, 513);
    auto rho0 = gaussian_density(grid, kPi, 0.0);
    auto rho1 = gaussian_density(grid, kPi, 1.0);
    auto drift = reference_drift(sol);

    FortetConfig fc;
    fc.max_iterations = 50;
    auto bridge = solve_bridge(rho0, rho1, drift, gc.constants, fc);
    CHECK(bridge.iterations <= 50);
    CHECK(bridge.final_marginal_error <= 1e-8);
    CHECK(!bridge.boundary_mass_warning);

    // marginal errors decrease monotonically
    for (std::size_t i = 1; i < bridge.history.size(); ++i) {
        CHECK(bridge.history[i].err_t0 <= bridge.history[i - 1].err_t0 + 1e-12);
        CHECK(bridge.history[i].err_t1 <= bridge.history[i - 1].err_t1 + 1e-12);
    }

    const double rel_phi = gauge_fixed_relative_sup(
        bridge.log_phi, *grid, [&](double x, double t) { return sol.log_phi(x, t); });
    CHECK(rel_phi < 1e-4);
    const double rel_hat = gauge_fixed_relative_sup(
        bridge.log_phi_hat, *grid, [&](double x, double t) { return sol.log_phi_hat(x, t); });
    CHECK(rel_hat < 1e-4);
}

TEST_CASE("bimodal terminal density converges on the property gates") {
    // flux scheme on a domain sized to the data: the transpose-backward
    // propagator makes the iteration an exact discrete Sinkhorn scheme, so
    // the marginals and the product normalization converge to roundoff
    GaussianConfig gc;
    GaussianBridgeSolution sol(gc);
    auto grid = make_grid(1024, 1025, -3.5, 5.0);
    auto rho0 = gaussian_density(grid, kPi, 0.0);
    std::vector<double> mix(grid->n_x());
    for (std::size_t i = 0; i < grid->n_x(); ++i) {
        const double x = grid->x(i);
        mix[i] = 0.5 * (std::exp(-kPi * (x - 1.4) * (x - 1.4)) +
                        std::exp(-kPi * (x + 0.4) * (x + 0.4)));
    }
    const double mass = integrate(grid, mix);
    for (double& v : mix) v /= mass;
    RealField rho1(grid, std::move(mix), true);

    FortetConfig fc;
    fc.scheme = PdeScheme::Flux;
    fc.max_iterations = 50;
    auto bridge = solve_bridge(rho0, rho1, reference_drift(sol), gc.constants, fc);
    CHECK(bridge.iterations <= 50);
    CHECK(bridge.final_marginal_error <= 1e-8);
    // product density stays positive (construction would have thrown) and
    // normalized; the adjoint pairing conserves the product integral exactly
    for (std::size_t k = 0; k < grid->n_t(); k += 128) {
        auto rho = bridge.density_slice(k);
        CHECK(std::abs(integrate(rho) - 1.0) < 1e-6);
    }

    // the log scheme converges on the same data only down to its
    // scheme-consistency floor; with a matching tolerance it passes too
    FortetConfig lc;
    lc.scheme = PdeScheme::LogSpace;
    lc.marginal_tolerance = 5e-4;
    lc.max_iterations = 50;
    auto log_bridge = solve_bridge(rho0, rho1, reference_drift(sol), gc.constants, lc);
    CHECK(log_bridge.final_marginal_error <= 5e-4);
}

TEST_CASE("bridge density satisfies the forward equation with the bridge drift") {
    GaussianConfig gc;
    GaussianBridgeSolution sol(gc);
    auto grid = make_grid(1024, 513);
    auto rho0 = gaussian_density(grid, kPi, 0.0);
    auto rho1 = gaussian_density(grid, kPi, 1.0);
    auto bridge = solve_bridge(rho0, rho1, reference_drift(sol), gc.constants, {});
    auto bdrift = bridge_drift(reference_drift(sol), bridge, gc.constants);

    const double dx = grid->dx();
    const double dt = grid->dt();
    double peak = 0.0;
    std::vector<std::vector<double>> rho(grid->n_t());
    for (std::size_t k = 0; k < grid->n_t(); ++k) {
        rho[k].resize(grid->n_x());
        for (std::size_t i = 0; i < grid->n_x(); ++i) {
            rho[k][i] = std::exp(bridge.log_phi.at(k, i) + bridge.log_phi_hat.at(k, i));
            peak = std::max(peak, rho[k][i]);
        }
    }
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < grid->n_t(); k += 8) {
        for (std::size_t i = 1; i + 1 < grid->n_x(); ++i) {
            if (rho[k][i] < 1e-8 * peak) continue;
            const double rt = (rho[k + 1][i] - rho[k - 1][i]) / (2.0 * dt);
            const double flux_r = bdrift(grid->x(i + 1), grid->t(k)) * rho[k][i + 1];
            const double flux_l = bdrift(grid->x(i - 1), grid->t(k)) * rho[k][i - 1];
            const double div = (flux_r - flux_l) / (2.0 * dx);
            const double lap = (rho[k][i + 1] - 2.0 * rho[k][i] + rho[k][i - 1]) / (dx * dx);
            worst = std::max(worst, std::abs(rt + div - 0.5 * lap));
        }
    }
    CHECK(worst <= 40.0 * (dx * dx + dt * dt));
}

TEST_CASE("bridge drift helpers") {
    GaussianConfig gc;
    GaussianBridgeSolution sol(gc);
    auto grid = make_grid(256, 65);
    // constant phi leaves the drift untouched
    std::vector<RealField> phi(grid->n_t(), RealField(grid, std::vector<double>(grid->n_x(), 2.0)));
    auto same = bridge_drift(reference_drift(sol), grid, phi, gc.constants);
    for (double t : {0.1, 0.6}) {
        for (double x : {-1.0, 0.5}) {
            CHECK(same(x, t) == doctest::Approx(sol.reference_drift(x, t)).epsilon(1e-10));
        }
    }
    // closed-form phi gives the spatially constant correction beta(t)
    std::vector<RealField> phic;
    for (std::size_t k = 0; k < grid->n_t(); ++k) {
        std::vector<double> v(grid->n_x());
        for (std::size_t i = 0; i < grid->n_x(); ++i) {
            v[i] = std::exp(sol.log_phi(grid->x(i), grid->t(k)));
        }
        phic.emplace_back(grid, std::move(v));
    }
    auto steered = bridge_drift(reference_drift(sol), grid, phic, gc.constants);
    for (double t : {0.0, 0.5, 1.0}) {
        for (double x : {-2.0, 0.0, 2.0}) {
            CHECK(steered(x, t) ==
                  doctest::Approx(sol.reference_drift(x, t) + sol.beta(t)).epsilon(1e-6));
        }
    }
    // nonpositive phi is rejected
    std::vector<RealField> bad(grid->n_t(),
                               RealField(grid, std::vector<double>(grid->n_x(), 0.0)));
    CHECK_THROWS_AS(bridge_drift(reference_drift(sol), grid, bad, gc.constants), NonpositivePhi);
}

TEST_CASE("madelung-built drift matches the analytic reference drift") {
    GaussianConfig gc;
    GaussianBridgeSolution sol(gc);
    auto grid = make_grid(512, 65);
    auto pairs = reference_pairs_on_grid(sol, grid);
    auto drift = DriftField::from_madelung(pairs, gc.constants);
    for (double t : {0.0, 0.37, 0.81, 1.0}) {
        for (double x : {-3.0, -0.5, 0.9, 3.5}) {
            CHECK(drift(x, t) == doctest::Approx(sol.reference_drift(x, t)).epsilon(1e-9));
        }
    }
}

TEST_CASE("solver input validation") {
    auto grid = make_grid(128, 33);
    auto rho = gaussian_density(grid, kPi, 0.0);
    RealField not_density(grid, std::vector<double>(grid->n_x(), 1.0));
    CHECK_THROWS_AS(
        solve_bridge(not_density, rho, DriftField::zero(), PhysicalConstants{}, {}),
        InvalidDensity);
    std::vector<double> with_zero(grid->n_x(), 1.0);
    with_zero[5] = 0.0;
    CHECK_THROWS_AS(propagate_phi_backward(RealField(grid, with_zero), DriftField::zero(),
                                           PhysicalConstants{}, PdeScheme::LogSpace),
                    NonpositiveDensity);
    FortetConfig bad;
    bad.max_iterations = 0;
    CHECK_THROWS_AS(solve_bridge(rho, rho, DriftField::zero(), PhysicalConstants{}, bad),
                    ConfigError);
}

TEST_CASE("no convergence is reported, not silently returned") {
    GaussianConfig gc;
    GaussianBridgeSolution sol(gc);
    auto grid = make_grid(128, 33);
    auto rho0 = gaussian_density(grid, kPi, 0.0);
    auto rho1 = gaussian_density(grid, kPi, 1.0);
    FortetConfig fc;
    fc.max_iterations = 1;
    fc.marginal_tolerance = 1e-14;
    CHECK_THROWS_AS(solve_bridge(rho0, rho1, reference_drift(sol), gc.constants, fc),
                    NoConvergence);
}
