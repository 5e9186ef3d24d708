#include "bridgesteer/schrodinger_system.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace bridgesteer {

namespace {

/// Tridiagonal solve, no pivoting (rows are diagonally dominant here).
void thomas_solve(std::vector<double>& lo, std::vector<double>& di, std::vector<double>& up,
                  std::vector<double>& rhs) {
    const std::size_t n = di.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lo[i] / di[i - 1];
        di[i] -= m * up[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= di[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
    }
}

void check_finite(std::span<const double> v, const char* where) {
    for (double x : v) {
        if (!std::isfinite(x)) throw SchemeInstability(std::string(where) + ": non-finite value");
    }
}

// ---------------------------------------------------------------------------
// Log-space Crank-Nicolson stepper.
//
// Backward factor:  v_t + b v_x + nu (v_xx + v_x^2) = 0, v = log phi
// Forward factor:   w_t + b w_x + b_x - nu (w_xx + w_x^2) = 0, w = log phihat
//
// One CN step from t_cur to t_next (dt signed), Newton on the squared
// gradient, boundary rows closed by linear extrapolation.
// ---------------------------------------------------------------------------
class LogStepper {
public:
    LogStepper(const SpaceTimeGrid& grid, const DriftField& drift,
               const PhysicalConstants& constants, bool backward_factor,
               std::size_t max_newton, double newton_tol)
        : grid_(grid), drift_(drift), nu_(constants.nu()), backward_(backward_factor),
          max_newton_(max_newton), newton_tol_(newton_tol), n_(grid.n_x()),
          d1_(n_), d2_(n_), rhs_(n_), lo_(n_ - 2), di_(n_ - 2), up_(n_ - 2), rr_(n_ - 2),
          b_cur_(n_), b_nxt_(n_), bx_nxt_(n_) {}

    void step(std::vector<double>& u, double t_cur, double t_next) {
        const double dt = t_next - t_cur;
        const double dx = grid_.dx();
        for (std::size_t i = 0; i < n_; ++i) {
            const double x = grid_.x(i);
            b_cur_[i] = drift_(x, t_cur);
            b_nxt_[i] = drift_(x, t_next);
            bx_nxt_[i] = drift_.derivative(x, t_next);
        }
        deriv1(u);
        deriv2(u);
        // explicit half: F(u, t_cur)
        for (std::size_t i = 0; i < n_; ++i) {
            const double adv = b_cur_[i] * d1_[i];
            if (backward_) {
                rhs_[i] = u[i] + 0.5 * dt * (-(adv + nu_ * (d2_[i] + d1_[i] * d1_[i])));
            } else {
                const double bx = drift_.derivative(grid_.x(i), t_cur);
                rhs_[i] = u[i] + 0.5 * dt * (-(adv + bx) + nu_ * (d2_[i] + d1_[i] * d1_[i]));
            }
        }
        std::vector<double> iter = u;
        for (std::size_t pass = 0; pass < max_newton_; ++pass) {
            deriv1(iter);
            const double h = 0.5 * dt;
            // linearize v_x^2 ~ 2 vbar_x v_x - vbar_x^2 around the iterate
            for (std::size_t i = 1; i + 1 < n_; ++i) {
                double cu, cm, cl, src;
                if (backward_) {
                    const double a = b_nxt_[i] + 2.0 * nu_ * d1_[i];
                    cu = -(a / (2.0 * dx) + nu_ / (dx * dx));
                    cm = 2.0 * nu_ / (dx * dx);
                    cl = a / (2.0 * dx) - nu_ / (dx * dx);
                    src = nu_ * d1_[i] * d1_[i];
                } else {
                    const double a = b_nxt_[i] - 2.0 * nu_ * d1_[i];
                    cu = -a / (2.0 * dx) + nu_ / (dx * dx);
                    cm = -2.0 * nu_ / (dx * dx);
                    cl = a / (2.0 * dx) + nu_ / (dx * dx);
                    src = -bx_nxt_[i] - nu_ * d1_[i] * d1_[i];
                }
                const std::size_t j = i - 1;
                lo_[j] = -h * cl;
                di_[j] = 1.0 - h * cm;
                up_[j] = -h * cu;
                rr_[j] = rhs_[i] + h * src;
            }
            // fold u0 = 2u1 - u2 and u_{n-1} = 2u_{n-2} - u_{n-3}
            di_[0] += 2.0 * lo_[0];
            up_[0] -= lo_[0];
            lo_[0] = 0.0;
            const std::size_t last = n_ - 3;
            di_[last] += 2.0 * up_[last];
            lo_[last] -= up_[last];
            up_[last] = 0.0;

            thomas_solve(lo_, di_, up_, rr_);
            double delta = 0.0;
            for (std::size_t i = 1; i + 1 < n_; ++i) {
                delta = std::max(delta, std::abs(rr_[i - 1] - iter[i]));
                iter[i] = rr_[i - 1];
            }
            iter[0] = 2.0 * iter[1] - iter[2];
            iter[n_ - 1] = 2.0 * iter[n_ - 2] - iter[n_ - 3];
            if (delta < newton_tol_) break;
        }
        check_finite(iter, "log-space step");
        u = std::move(iter);
    }

private:
    void deriv1(std::span<const double> u) {
        const double dx = grid_.dx();
        for (std::size_t i = 1; i + 1 < n_; ++i) d1_[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        d1_[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
        d1_[n_ - 1] = (3.0 * u[n_ - 1] - 4.0 * u[n_ - 2] + u[n_ - 3]) / (2.0 * dx);
    }
    void deriv2(std::span<const double> u) {
        const double dx2 = grid_.dx() * grid_.dx();
        for (std::size_t i = 1; i + 1 < n_; ++i) d2_[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / dx2;
        d2_[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / dx2;
        d2_[n_ - 1] = (2.0 * u[n_ - 1] - 5.0 * u[n_ - 2] + 4.0 * u[n_ - 3] - u[n_ - 4]) / dx2;
    }

    const SpaceTimeGrid& grid_;
    const DriftField& drift_;
    double nu_;
    bool backward_;
    std::size_t max_newton_;
    double newton_tol_;
    std::size_t n_;
    std::vector<double> d1_, d2_, rhs_, lo_, di_, up_, rr_, b_cur_, b_nxt_, bx_nxt_;
};

SliceMatrix log_propagate(const SpaceTimeGrid& grid, std::span<const double> boundary_slice,
                          const DriftField& drift, const PhysicalConstants& constants,
                          bool backward_factor, std::size_t max_newton, double newton_tol) {
    const std::size_t nt = grid.n_t();
    SliceMatrix out(nt, grid.n_x());
    LogStepper stepper(grid, drift, constants, backward_factor, max_newton, newton_tol);
    std::vector<double> cur(boundary_slice.begin(), boundary_slice.end());
    if (backward_factor) {
        std::copy(cur.begin(), cur.end(), out.row(nt - 1).begin());
        for (std::size_t k = nt - 1; k-- > 0;) {
            stepper.step(cur, grid.t(k + 1), grid.t(k));
            std::copy(cur.begin(), cur.end(), out.row(k).begin());
        }
    } else {
        std::copy(cur.begin(), cur.end(), out.row(0).begin());
        for (std::size_t k = 1; k < nt; ++k) {
            stepper.step(cur, grid.t(k - 1), grid.t(k));
            std::copy(cur.begin(), cur.end(), out.row(k).begin());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Conservative finite-volume Crank-Nicolson stepper for the forward
// divergence-form equation; the backward propagator applies the exact
// transpose of the forward step matrices.
// ---------------------------------------------------------------------------
class FluxStepper {
public:
    FluxStepper(const SpaceTimeGrid& grid, const DriftField& drift,
                const PhysicalConstants& constants)
        : grid_(grid), drift_(drift), nu_(constants.nu()), n_(grid.n_x()),
          lo_(n_), di_(n_), up_(n_), wlo_(n_), wdi_(n_), wup_(n_), rhs_(n_) {}

    /// Assemble the flux-form generator diagonals at time t:
    /// (L u)_i = -(F_{i+1/2} - F_{i-1/2}) / dx with
    /// F_{i+1/2} = b_{i+1/2} (u_i + u_{i+1})/2 - nu (u_{i+1} - u_i)/dx
    /// and zero flux through both ends.
    void assemble(double t, std::vector<double>& lo, std::vector<double>& di,
                  std::vector<double>& up) const {
        const double dx = grid_.dx();
        std::fill(lo.begin(), lo.end(), 0.0);
        std::fill(di.begin(), di.end(), 0.0);
        std::fill(up.begin(), up.end(), 0.0);
        for (std::size_t i = 0; i + 1 < n_; ++i) {
            const double bh = drift_(grid_.x(i) + 0.5 * dx, t);
            // flux i+1/2 leaves cell i and enters cell i+1
            di[i] += -(0.5 * bh + nu_ / dx) / dx;
            up[i] += -(0.5 * bh - nu_ / dx) / dx;
            di[i + 1] += (0.5 * bh - nu_ / dx) / dx;
            lo[i + 1] += (0.5 * bh + nu_ / dx) / dx;
        }
    }

    void forward_step(std::vector<double>& u, double t_cur, double t_next) {
        const double h = 0.5 * (t_next - t_cur);
        assemble(t_cur, lo_, di_, up_);
        for (std::size_t i = 0; i < n_; ++i) {
            double lu = di_[i] * u[i];
            if (i > 0) lu += lo_[i] * u[i - 1];
            if (i + 1 < n_) lu += up_[i] * u[i + 1];
            rhs_[i] = u[i] + h * lu;
        }
        assemble(t_next, lo_, di_, up_);
        for (std::size_t i = 0; i < n_; ++i) {
            wlo_[i] = -h * lo_[i];
            wdi_[i] = 1.0 - h * di_[i];
            wup_[i] = -h * up_[i];
        }
        thomas_solve(wlo_, wdi_, wup_, rhs_);
        u = rhs_;
        check_finite(u, "flux forward step");
    }

    /// phi^k = A^T phi^{k+1} with A = (I - h L(t_{k+1}))^{-1} (I + h L(t_k)).
    void backward_step_transpose(std::vector<double>& u, double t_cur, double t_next) {
        // stepping downward: t_next < t_cur; forward step matrix was built
        // for t_next -> t_cur
        const double h = 0.5 * (t_cur - t_next);
        assemble(t_cur, lo_, di_, up_);
        for (std::size_t i = 0; i < n_; ++i) {
            // transpose: swap lower and upper bands
            wlo_[i] = (i > 0) ? -h * up_[i - 1] : 0.0;
            wdi_[i] = 1.0 - h * di_[i];
            wup_[i] = (i + 1 < n_) ? -h * lo_[i + 1] : 0.0;
        }
        rhs_ = u;
        thomas_solve(wlo_, wdi_, wup_, rhs_);
        assemble(t_next, lo_, di_, up_);
        for (std::size_t i = 0; i < n_; ++i) {
            double v = (1.0 + h * di_[i]) * rhs_[i];
            if (i > 0) v += h * up_[i - 1] * rhs_[i - 1];
            if (i + 1 < n_) v += h * lo_[i + 1] * rhs_[i + 1];
            u[i] = v;
        }
        check_finite(u, "flux backward step");
    }

private:
    const SpaceTimeGrid& grid_;
    const DriftField& drift_;
    double nu_;
    std::size_t n_;
    std::vector<double> lo_, di_, up_, wlo_, wdi_, wup_, rhs_;
};

SliceMatrix flux_propagate(const SpaceTimeGrid& grid, std::span<const double> boundary_slice,
                           const DriftField& drift, const PhysicalConstants& constants,
                           bool backward) {
    const std::size_t nt = grid.n_t();
    SliceMatrix out(nt, grid.n_x());
    FluxStepper stepper(grid, drift, constants);
    std::vector<double> cur(boundary_slice.begin(), boundary_slice.end());
    if (backward) {
        std::copy(cur.begin(), cur.end(), out.row(nt - 1).begin());
        for (std::size_t k = nt - 1; k-- > 0;) {
            stepper.backward_step_transpose(cur, grid.t(k + 1), grid.t(k));
            std::copy(cur.begin(), cur.end(), out.row(k).begin());
        }
    } else {
        std::copy(cur.begin(), cur.end(), out.row(0).begin());
        for (std::size_t k = 1; k < nt; ++k) {
            stepper.forward_step(cur, grid.t(k - 1), grid.t(k));
            std::copy(cur.begin(), cur.end(), out.row(k).begin());
        }
    }
    return out;
}

std::vector<RealField> matrix_to_fields(GridPtr grid, const SliceMatrix& m, bool values_are_logs) {
    std::vector<RealField> out;
    out.reserve(m.n_t);
    for (std::size_t k = 0; k < m.n_t; ++k) {
        std::vector<double> v(m.n_x);
        for (std::size_t i = 0; i < m.n_x; ++i) {
            v[i] = values_are_logs ? std::exp(m.at(k, i)) : m.at(k, i);
            if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
                throw SchemeInstability("propagation produced a nonpositive or non-finite value");
            }
        }
        out.emplace_back(grid, std::move(v));
    }
    return out;
}

std::vector<double> log_of(const RealField& f, const char* what) {
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(f[i] > 0.0)) throw NonpositiveDensity(std::string(what) + ": values must be > 0");
        out[i] = std::log(f[i]);
    }
    return out;
}

}  // namespace

std::vector<RealField> propagate_phi_backward(const RealField& terminal, const DriftField& drift,
                                              const PhysicalConstants& constants,
                                              PdeScheme scheme) {
    const SpaceTimeGrid& grid = terminal.grid();
    if (scheme == PdeScheme::LogSpace) {
        auto lv = log_of(terminal, "propagate_phi_backward terminal");
        auto m = log_propagate(grid, lv, drift, constants, /*backward=*/true, 30, 1e-13);
        return matrix_to_fields(terminal.grid_ptr(), m, /*logs=*/true);
    }
    SliceMatrix m = flux_propagate(grid, terminal.values(), drift, constants, /*backward=*/true);
    return matrix_to_fields(terminal.grid_ptr(), m, /*logs=*/false);
}

std::vector<RealField> propagate_phihat_forward(const RealField& initial, const DriftField& drift,
                                                const PhysicalConstants& constants,
                                                PdeScheme scheme) {
    const SpaceTimeGrid& grid = initial.grid();
    if (scheme == PdeScheme::LogSpace) {
        auto lv = log_of(initial, "propagate_phihat_forward initial");
        auto m = log_propagate(grid, lv, drift, constants, /*backward=*/false, 30, 1e-13);
        return matrix_to_fields(initial.grid_ptr(), m, /*logs=*/true);
    }
    SliceMatrix m = flux_propagate(grid, initial.values(), drift, constants, /*backward=*/false);
    return matrix_to_fields(initial.grid_ptr(), m, /*logs=*/false);
}

RealField BridgeSolution::phi_slice(std::size_t k) const {
    std::vector<double> v(log_phi.n_x);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(log_phi.at(k, i));
    return RealField(grid, std::move(v));
}

RealField BridgeSolution::phi_hat_slice(std::size_t k) const {
    std::vector<double> v(log_phi_hat.n_x);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(log_phi_hat.at(k, i));
    return RealField(grid, std::move(v));
}

RealField BridgeSolution::density_slice(std::size_t k) const {
    std::vector<double> v(log_phi.n_x);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = std::exp(log_phi.at(k, i) + log_phi_hat.at(k, i));
    }
    return RealField(grid, std::move(v));
}

BridgeSolution solve_bridge(const RealField& rho0, const RealField& rho1,
                            const DriftField& drift, const PhysicalConstants& constants,
                            const FortetConfig& config) {
    config.validate();
    if (!rho0.is_density() || !rho1.is_density()) {
        throw InvalidDensity("solve_bridge: rho0 and rho1 must be density-flagged fields");
    }
    if (!(rho0.grid() == rho1.grid())) throw ConfigError("solve_bridge: grids differ");
    const SpaceTimeGrid& grid = rho0.grid();
    const std::size_t n = grid.n_x();
    const std::size_t nt = grid.n_t();
    const double dx = grid.dx();

    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    BridgeSolution out;
    out.grid = rho0.grid_ptr();

    const std::vector<double> lr0 = log_of(rho0, "solve_bridge rho0");
    const std::vector<double> lr1 = log_of(rho1, "solve_bridge rho1");

    std::vector<double> prod(n), slice(n);
    auto boundary_error = [&](const SliceMatrix& V, const SliceMatrix& W, std::size_t k,
                              std::span<const double> target_log) {
        for (std::size_t i = 0; i < n; ++i) {
            prod[i] = std::exp(V.at(k, i) + W.at(k, i));
            slice[i] = std::exp(target_log[i]);
        }
        return l1_distance(prod, slice, dx);
    };

    if (config.scheme == PdeScheme::LogSpace) {
        std::vector<double> zero(n, 0.0);
        SliceMatrix V = log_propagate(grid, zero, drift, constants, true,
                                      config.max_newton_iterations, config.newton_tolerance);
        SliceMatrix W;
        for (std::size_t it = 1; it <= config.max_iterations; ++it) {
            for (std::size_t i = 0; i < n; ++i) slice[i] = lr0[i] - V.at(0, i);
            W = log_propagate(grid, slice, drift, constants, false,
                              config.max_newton_iterations, config.newton_tolerance);
            const double err_t1 = boundary_error(V, W, nt - 1, lr1);
            for (std::size_t i = 0; i < n; ++i) slice[i] = lr1[i] - W.at(nt - 1, i);
            V = log_propagate(grid, slice, drift, constants, true,
                              config.max_newton_iterations, config.newton_tolerance);
            const double err_t0 = boundary_error(V, W, 0, lr0);
            out.history.push_back({it, err_t0, err_t1, elapsed()});
            if (std::max(err_t0, err_t1) <= config.marginal_tolerance) {
                out.iterations = it;
                out.final_marginal_error = std::max(err_t0, err_t1);
                out.log_phi = std::move(V);
                out.log_phi_hat = std::move(W);
                break;
            }
        }
    } else {
        // Flux scheme: value-space Sinkhorn with guarded ratios.
        std::vector<double> ones(n, 1.0);
        SliceMatrix P = flux_propagate(grid, ones, drift, constants, true);
        SliceMatrix Q;
        std::vector<double> r0(n), r1v(n);
        for (std::size_t i = 0; i < n; ++i) {
            r0[i] = std::exp(lr0[i]);
            r1v[i] = std::exp(lr1[i]);
        }
        auto guarded_ratio = [&](double num, double den) {
            const double floor = 1e-300;
            if (den < floor) {
                if (num > 1e-10) {
                    throw SchemeInstability("solve_bridge: ratio floor hit where rho > 1e-10");
                }
                den = floor;
            }
            return num / den;
        };
        for (std::size_t it = 1; it <= config.max_iterations; ++it) {
            for (std::size_t i = 0; i < n; ++i) slice[i] = guarded_ratio(r0[i], P.at(0, i));
            Q = flux_propagate(grid, slice, drift, constants, false);
            double err_t1 = 0.0;
            for (std::size_t i = 0; i < n; ++i) prod[i] = P.at(nt - 1, i) * Q.at(nt - 1, i);
            err_t1 = l1_distance(prod, r1v, dx);
            for (std::size_t i = 0; i < n; ++i) {
                slice[i] = guarded_ratio(r1v[i], Q.at(nt - 1, i));
            }
            P = flux_propagate(grid, slice, drift, constants, true);
            double err_t0 = 0.0;
            for (std::size_t i = 0; i < n; ++i) prod[i] = P.at(0, i) * Q.at(0, i);
            err_t0 = l1_distance(prod, r0, dx);
            out.history.push_back({it, err_t0, err_t1, elapsed()});
            if (std::max(err_t0, err_t1) <= config.marginal_tolerance) {
                out.iterations = it;
                out.final_marginal_error = std::max(err_t0, err_t1);
                out.log_phi = SliceMatrix(nt, n);
                out.log_phi_hat = SliceMatrix(nt, n);
                for (std::size_t k = 0; k < nt; ++k) {
                    for (std::size_t i = 0; i < n; ++i) {
                        if (!(P.at(k, i) > 0.0) || !(Q.at(k, i) > 0.0)) {
                            throw SchemeInstability("solve_bridge: flux factors not positive");
                        }
                        out.log_phi.at(k, i) = std::log(P.at(k, i));
                        out.log_phi_hat.at(k, i) = std::log(Q.at(k, i));
                    }
                }
                break;
            }
        }
    }

    if (out.iterations == 0) {
        const double last =
            out.history.empty() ? 0.0
                                : std::max(out.history.back().err_t0, out.history.back().err_t1);
        throw NoConvergence("solve_bridge: no convergence after " +
                            std::to_string(config.max_iterations) +
                            " iterations, last marginal error " + std::to_string(last));
    }

    // domain-width check: bridge density should be negligible at the edges
    double peak = 0.0, edge = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const double r = std::exp(out.log_phi.at(k, i) + out.log_phi_hat.at(k, i));
            peak = std::max(peak, r);
        }
        edge = std::max({edge, std::exp(out.log_phi.at(k, 0) + out.log_phi_hat.at(k, 0)),
                         std::exp(out.log_phi.at(k, n - 1) + out.log_phi_hat.at(k, n - 1))});
    }
    out.boundary_mass_warning = edge > 1e-12 * peak;
    return out;
}

DriftField bridge_drift(const DriftField& reference, const BridgeSolution& solution,
                        const PhysicalConstants& constants) {
    const SpaceTimeGrid& grid = *solution.grid;
    SliceMatrix corr(grid.n_t(), grid.n_x());
    const double scale = constants.epsilon();
    for (std::size_t k = 0; k < grid.n_t(); ++k) {
        auto g = gradient(grid, solution.log_phi.row(k));
        for (std::size_t i = 0; i < grid.n_x(); ++i) corr.at(k, i) = scale * g[i];
    }
    DriftField gridded = DriftField::from_samples("bridge_correction", solution.grid, corr);
    auto ref = reference;
    return DriftField(
        reference.name() + "+log_phi_correction",
        [ref, gridded](double x, double t) { return ref(x, t) + gridded(x, t); },
        [ref, gridded](double x, double t) {
            return ref.derivative(x, t) + gridded.derivative(x, t);
        });
}

DriftField bridge_drift(const DriftField& reference, GridPtr grid,
                        const std::vector<RealField>& phi, const PhysicalConstants& constants) {
    BridgeSolution tmp;
    tmp.grid = grid;
    tmp.log_phi = SliceMatrix(grid->n_t(), grid->n_x());
    for (std::size_t k = 0; k < phi.size(); ++k) {
        for (std::size_t i = 0; i < grid->n_x(); ++i) {
            if (!(phi[k][i] > 0.0)) throw NonpositivePhi("bridge_drift: phi must be > 0");
            tmp.log_phi.at(k, i) = std::log(phi[k][i]);
        }
    }
    return bridge_drift(reference, tmp, constants);
}

// ---------------------------------------------------------------------------
// DriftField factories
// ---------------------------------------------------------------------------

namespace {

struct GriddedEval {
    GridPtr grid;
    std::shared_ptr<const SliceMatrix> samples;

    double operator()(double x, double t) const {
        const SpaceTimeGrid& g = *grid;
        const double xc = std::clamp(x, g.x_min(), g.x_max());
        const double tc = std::clamp(t, g.t0(), g.t1());
        const double fx = (xc - g.x_min()) / g.dx();
        const double ft = (tc - g.t0()) / g.dt();
        const std::size_t i = std::min(static_cast<std::size_t>(fx), g.n_x() - 2);
        const std::size_t k = std::min(static_cast<std::size_t>(ft), g.n_t() - 2);
        const double ax = fx - static_cast<double>(i);
        const double at = ft - static_cast<double>(k);
        const double v00 = samples->at(k, i), v01 = samples->at(k, i + 1);
        const double v10 = samples->at(k + 1, i), v11 = samples->at(k + 1, i + 1);
        return (1.0 - at) * ((1.0 - ax) * v00 + ax * v01) +
               at * ((1.0 - ax) * v10 + ax * v11);
    }
};

}  // namespace

DriftField DriftField::from_samples(std::string name, GridPtr grid, SliceMatrix samples) {
    auto values = std::make_shared<const SliceMatrix>(std::move(samples));
    const SpaceTimeGrid& g = *grid;
    SliceMatrix deriv(g.n_t(), g.n_x());
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        auto dv = gradient(g, values->row(k));
        for (std::size_t i = 0; i < g.n_x(); ++i) deriv.at(k, i) = dv[i];
    }
    auto derivs = std::make_shared<const SliceMatrix>(std::move(deriv));
    GriddedEval value_eval{grid, values};
    GriddedEval deriv_eval{grid, derivs};
    return DriftField(std::move(name), value_eval, deriv_eval);
}

DriftField DriftField::from_madelung(const std::vector<MadelungPair>& pairs,
                                     const PhysicalConstants& constants) {
    if (pairs.empty()) throw ConfigError("DriftField::from_madelung: empty sequence");
    GridPtr grid = pairs[0].R.grid_ptr();
    const SpaceTimeGrid& g = *grid;
    if (pairs.size() != g.n_t()) {
        throw ConfigError("DriftField::from_madelung: one pair per time slice required");
    }
    SliceMatrix b(g.n_t(), g.n_x());
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        auto gs = gradient(g, pairs[k].S.values());
        auto gr = gradient(g, pairs[k].R.values());
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            b.at(k, i) = gs[i] / constants.mass + constants.hbar / constants.mass * gr[i];
        }
    }
    return from_samples("nelson_forward_drift", grid, b);
}

}  // namespace bridgesteer
