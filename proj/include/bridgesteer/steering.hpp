#pragma once

#include <vector>

#include "bridgesteer/schrodinger_system.hpp"

namespace bridgesteer {

/// Controlled quantum evolution assembled from a reference Madelung pair and
/// a solved factor pair: the steered wavefunction, its density, phases, and
/// the controlling potential, one slice per grid time.
struct ControlledEvolution {
    GridPtr grid;
    std::vector<MadelungPair> tilde;   // R~, S~ per slice
    std::vector<WaveField> psi_tilde;  // exp(R~ + i S~/hbar)
    std::vector<RealField> rho_tilde;  // exp(2 R~)
    bool normalized = false;           // rho~ integrates to 1 at every slice
};

/// S~ = S + hbar R + (hbar/2) log(phi/phihat), R~ = (1/2) log(phi phihat).
/// The factor pair is passed in log form (as solved); the reference pair per
/// slice.
ControlledEvolution assemble_tilde(const std::vector<MadelungPair>& reference,
                                   const SliceMatrix& log_phi, const SliceMatrix& log_phi_hat,
                                   GridPtr grid, const PhysicalConstants& constants);

/// Controlling potential V_c = V - V_i + (hbar^2/m)[lap sqrt(rho~)/sqrt(rho~)
/// - lap sqrt(rho)/sqrt(rho)], evaluated per slice with the module stencils.
std::vector<RealField> control_potential(const std::vector<RealField>& V,
                                         const std::vector<RealField>& V_i,
                                         const std::vector<RealField>& rho,
                                         const std::vector<RealField>& rho_tilde,
                                         const PhysicalConstants& constants);

/// Residual fields of the Madelung system for a phase/amplitude pair under
/// potential V: continuity-like equation and the Hamilton-Jacobi-like
/// equation. Central time differences inside, one-sided at the ends.
struct MadelungResiduals {
    std::vector<RealField> continuity;      // R_t + (1/m) grad R . grad S + (1/2m) lap S
    std::vector<RealField> hamilton_jacobi; // S_t + (1/2m)|grad S|^2 + V - (hbar/2m)(|grad R|^2 + lap R)
    double max_continuity = 0.0;
    double max_hamilton_jacobi = 0.0;
};

MadelungResiduals madelung_residuals(const std::vector<MadelungPair>& pairs,
                                     const std::vector<RealField>& V,
                                     const PhysicalConstants& constants);

/// Extract the potential that makes the Hamilton-Jacobi-like equation exact
/// for the given pair, slice by slice:
/// V = -S_t - (1/2m)|grad S|^2 + (hbar/2m)(|grad R|^2 + lap R).
std::vector<RealField> extract_potential(const std::vector<MadelungPair>& pairs,
                                         const PhysicalConstants& constants);

struct SchrodingerResidualReport {
    double max_residual = 0.0;          // max |discretized equation| over masked interior
    double psi_scale = 0.0;             // max |psi| over the run
    double dx = 0.0, dt = 0.0;
    double threshold(double C) const { return C * (dx * dx + dt * dt); }
    bool pass(double C) const { return max_residual <= threshold(C); }
};

/// Interior residual of the controlled equation
/// dpsi/dt = (i hbar/2m) lap psi - (i/hbar) V_total psi
/// restricted to points where |psi|^2 exceeds mask_fraction of its peak.
SchrodingerResidualReport verify_schrodinger(const std::vector<WaveField>& psi,
                                             const std::vector<RealField>& V_total,
                                             const PhysicalConstants& constants,
                                             double mask_fraction = 1e-10);

/// Discretization constant for the residual gate, frozen from a plane-wave
/// calibration run on the default grid (see tests).
constexpr double kSchrodingerResidualC = 130.0;

}  // namespace bridgesteer
