#pragma once

#include <complex>

#include "bridgesteer/grid.hpp"

namespace bridgesteer {

/// Parameters of the unit-shift Gaussian steering example: move a Gaussian
/// packet of precision 2*omega from mean 0 at t=0 to mean 1 at t=1, in
/// units with hbar = m = 1.
struct GaussianConfig {
    double omega = 3.14159265358979323846;
    PhysicalConstants constants{};
    double t0 = 0.0;
    double t1 = 1.0;

    void validate() const {
        if (!(omega > 0.0)) throw ConfigError("GaussianConfig: omega must be > 0");
        if (constants.hbar != 1.0 || constants.mass != 1.0) {
            throw ConfigError("GaussianConfig: closed forms assume hbar = m = 1");
        }
        if (t0 != 0.0 || t1 != 1.0) {
            throw ConfigError("GaussianConfig: closed forms assume t0 = 0, t1 = 1");
        }
    }
};

/// Reference packet mean line m(t) = m1 + m2*t, drift constant c = m2, and
/// phase offset d(t) = d1*t (d0 = 0).
struct ReferenceParams {
    double m1 = 0.0;
    double m2 = 0.0;
    double c = 0.0;
    double d0 = 0.0;
    double d1 = 0.0;

    double mean(double t) const { return m1 + m2 * t; }
    double d(double t) const { return d0 + d1 * t; }
};

/// Residuals of the phase-matching conditions and the beta0 identity for a
/// solved constant set. All vanish for the closed-form constants.
struct ConstantsResiduals {
    double u1 = 0.0;
    double u2 = 0.0;
    double u3 = 0.0;
    double u4 = 0.0;
    double beta0 = 0.0;
    double max_abs() const;
};

struct SolvedConstants {
    double omega = 0.0;
    ReferenceParams params;
    double beta0 = 0.0;
    double gamma0 = 0.0;
    ConstantsResiduals residuals;
};

/// Closed-form constants of the unit-shift example as functions of omega.
/// Throws DegenerateDenominator if the shared denominator underflows
/// (cannot happen for omega > 0; guarded anyway).
SolvedConstants solve_constants(double omega);

/// Exact solution of the factor system for the Gaussian example:
/// phi = exp(beta(t) x + gamma(t)), phi_hat = exp(-omega x^2 + beta_hat(t) x
/// + gamma_hat(t)), with the reference evolution psi = exp(R + iS).
class GaussianBridgeSolution {
public:
    explicit GaussianBridgeSolution(const GaussianConfig& config);

    const GaussianConfig& config() const { return config_; }
    const SolvedConstants& constants() const { return constants_; }
    double omega() const { return config_.omega; }

    // quadratic/linear/constant coefficients of log phi and log phi_hat
    double alpha(double /*t*/) const { return 0.0; }
    double alpha_hat(double /*t*/) const { return -config_.omega; }
    double beta(double t) const;
    double beta_hat(double t) const;
    double gamma(double t) const;
    double gamma_hat(double t) const;

    double log_phi(double x, double t) const { return beta(t) * x + gamma(t); }
    double log_phi_hat(double x, double t) const {
        return -config_.omega * x * x + beta_hat(t) * x + gamma_hat(t);
    }
    double phi(double x, double t) const;
    double phi_hat(double x, double t) const;

    /// Product density of the bridge; normalized=true applies the
    /// sqrt(omega/pi) Gaussian normalizer dropped in the factor identities.
    double bridge_density(double x, double t, bool normalized = true) const;
    /// Mean of the bridge density at time t: (beta + beta_hat)/(2 omega).
    double bridge_mean(double t) const;

    // reference evolution
    double reference_R(double x, double t) const;
    double reference_S(double x, double t) const;
    std::complex<double> reference_psi(double x, double t, bool normalized = false) const;
    double reference_density(double x, double t, bool normalized = true) const;

    /// Forward drift of the reference Nelson process: grad S + grad R.
    double reference_drift(double x, double t) const;
    /// Spatially constant drift correction of the bridge: (hbar/m) beta(t).
    double drift_correction(double t) const { return beta(t); }
    /// Forward drift of the bridge process.
    double bridge_drift(double x, double t) const {
        return reference_drift(x, t) + drift_correction(t);
    }

    /// Girsanov action of the bridge against the reference:
    /// beta0^2 (e^{2 omega} - 1) / (4 omega).
    double entropy_action_closed_form() const;
    /// Relative entropy of the bridge initial marginal against the reference
    /// initial marginal (two equal-variance Gaussians): omega * m1^2.
    double initial_marginal_kl() const;

private:
    GaussianConfig config_;
    SolvedConstants constants_;
};

/// Max absolute finite-difference residual per equation of the two ODE
/// systems governing (alpha, beta, gamma) and the hatted counterparts.
struct OdeResidualReport {
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
    double alpha_hat = 0.0, beta_hat = 0.0, gamma_hat = 0.0;
    double max_abs() const;
    bool pass(double tol = 1e-6) const { return max_abs() < tol; }
};

/// Central finite-difference verification of the six coefficient ODEs at
/// n_check interior sample times, differentiation step 1e-4.
OdeResidualReport verify_ode_systems(const GaussianBridgeSolution& solution,
                                     std::size_t n_check = 101);

}  // namespace bridgesteer
