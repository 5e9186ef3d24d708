#pragma once

#include <optional>
#include <vector>

#include "bridgesteer/drift.hpp"

namespace bridgesteer {

/// Spatial discretization of the factor equations.
///
/// LogSpace: Crank-Nicolson on the logarithm of each factor, Newton-linearized
/// quadratic term, linear-extrapolation boundary rows. Positive by
/// construction and accurate across the huge dynamic range of exponential
/// factors; this is the default.
///
/// Flux: conservative finite-volume Crank-Nicolson for the forward equation;
/// the backward propagator applies the exact transpose of the forward step
/// matrices. Mass and the discrete pairing sum_i phi_i phihat_i dx are then
/// conserved to roundoff and the alternating iteration is an exact discrete
/// Sinkhorn scheme.
enum class PdeScheme { LogSpace, Flux };

struct FortetConfig {
    std::size_t max_iterations = 200;
    double marginal_tolerance = 1e-8;  // L1 on both boundary products
    PdeScheme scheme = PdeScheme::LogSpace;
    std::size_t max_newton_iterations = 30;
    double newton_tolerance = 1e-13;

    void validate() const {
        if (max_iterations < 1) throw ConfigError("FortetConfig: max_iterations >= 1");
        if (!(marginal_tolerance > 0.0)) throw ConfigError("FortetConfig: tolerance > 0");
    }
};

struct IterationRecord {
    std::size_t iter = 0;
    double err_t0 = 0.0;
    double err_t1 = 0.0;
    double seconds = 0.0;
};

/// Factors phi, phihat on every time slice plus convergence metadata.
/// log_phi/log_phi_hat carry the same information in log form; downstream
/// consumers (drift assembly, phase reconstruction) prefer the logs.
struct BridgeSolution {
    GridPtr grid;
    SliceMatrix log_phi;
    SliceMatrix log_phi_hat;
    std::size_t iterations = 0;
    double final_marginal_error = 0.0;
    std::vector<IterationRecord> history;
    bool boundary_mass_warning = false;  // rho-tilde not negligible at grid edges

    RealField phi_slice(std::size_t k) const;
    RealField phi_hat_slice(std::size_t k) const;
    /// Product density phi * phihat at slice k.
    RealField density_slice(std::size_t k) const;
};

/// One-factor propagation of the backward transport-diffusion equation from
/// the terminal slice down to t0. Values stay positive or SchemeInstability
/// is thrown.
std::vector<RealField> propagate_phi_backward(const RealField& terminal, const DriftField& drift,
                                              const PhysicalConstants& constants,
                                              PdeScheme scheme = PdeScheme::LogSpace);

/// Forward propagation of the divergence-form equation from the initial
/// slice up to t1. The Flux scheme conserves the rectangle-rule mass to
/// roundoff.
std::vector<RealField> propagate_phihat_forward(const RealField& initial, const DriftField& drift,
                                                const PhysicalConstants& constants,
                                                PdeScheme scheme = PdeScheme::LogSpace);

/// Alternating boundary-ratio iteration for the factor system with product
/// boundary conditions rho0 and rho1 (strictly positive densities).
BridgeSolution solve_bridge(const RealField& rho0, const RealField& rho1,
                            const DriftField& drift, const PhysicalConstants& constants,
                            const FortetConfig& config = {});

/// Forward drift of the bridge process: reference drift plus
/// (hbar/m) grad log phi, interpolated off the solved slices.
DriftField bridge_drift(const DriftField& reference, const BridgeSolution& solution,
                        const PhysicalConstants& constants);

/// Same correction built from value-space phi slices (must be positive).
DriftField bridge_drift(const DriftField& reference, GridPtr grid,
                        const std::vector<RealField>& phi, const PhysicalConstants& constants);

}  // namespace bridgesteer
