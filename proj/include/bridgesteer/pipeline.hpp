#pragma once

#include "bridgesteer/gaussian_bridge.hpp"
#include "bridgesteer/run_config.hpp"
#include "bridgesteer/steering.hpp"

namespace bridgesteer {

struct GateResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
};

struct PipelineResult {
    std::vector<GateResult> gates;
    std::filesystem::path out_dir;

    bool all_pass() const {
        for (const auto& g : gates) {
            if (!g.pass) return false;
        }
        return true;
    }
    std::string first_failure() const {
        for (const auto& g : gates) {
            if (!g.pass) return g.name;
        }
        return "";
    }
};

PipelineResult run_gaussian_example(const RunConfig& config);
PipelineResult run_solve_bridge(const RunConfig& config);
PipelineResult run_simulate(const RunConfig& config);
PipelineResult run_verify_all(const RunConfig& config);
PipelineResult run_pipeline(const RunConfig& config);

/// Reference Madelung pairs of the closed-form solution sampled on a grid.
/// normalized=true folds the packet normalizer into R.
std::vector<MadelungPair> reference_pairs_on_grid(const GaussianBridgeSolution& sol, GridPtr grid,
                                                  bool normalized = false);

/// Closed-form factor logs sampled per slice. normalize_product=true folds
/// the density normalizer into log phi_hat so phi*phihat integrates to one.
void closed_form_factor_logs(const GaussianBridgeSolution& sol, const SpaceTimeGrid& grid,
                             SliceMatrix& log_phi, SliceMatrix& log_phi_hat,
                             bool normalize_product = true);

/// Density field loaded from a two-column CSV, resampled to the grid by
/// monotone cubic interpolation and renormalized.
RealField load_density_csv(const std::filesystem::path& path, GridPtr grid);

}  // namespace bridgesteer
