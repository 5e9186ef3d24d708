#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bridgesteer/schrodinger_system.hpp"

namespace bridgesteer {

enum class RunMode { GaussianExample, SolveBridge, Simulate, VerifyAll };

RunMode parse_mode(const std::string& s);
std::string mode_name(RunMode m);

/// Flat key = value run configuration; every key defaults to the unit-shift
/// Gaussian setup. Unknown keys are rejected.
struct RunConfig {
    RunMode mode = RunMode::GaussianExample;
    double omega = 3.14159265358979323846;

    // grid
    double x_min = -6.0;
    double x_max = 7.0;
    std::size_t n_x = 1024;
    std::size_t n_t = 513;
    double t0 = 0.0;
    double t1 = 1.0;

    // bridge solve
    std::size_t max_iterations = 200;
    double marginal_tolerance = 1e-8;
    PdeScheme scheme = PdeScheme::LogSpace;

    // simulation
    std::size_t n_paths = 100000;
    double dt_sim = 1e-3;
    std::uint64_t seed = 20240901;

    // io
    std::filesystem::path out_dir = "out";
    std::vector<std::size_t> export_slices;  // empty = quartile defaults
    bool quiet = false;
    std::size_t threads = 0;
    std::string rho0_file;
    std::string rho1_file;

    SpaceTimeGrid make_grid() const { return SpaceTimeGrid(x_min, x_max, n_x, t0, t1, n_t); }
    FortetConfig fortet() const {
        FortetConfig f;
        f.max_iterations = max_iterations;
        f.marginal_tolerance = marginal_tolerance;
        f.scheme = scheme;
        return f;
    }
    std::vector<std::size_t> resolved_export_slices() const;

    /// Validates every referenced parameter against the module preconditions.
    void validate() const;
};

/// Parse `key = value` lines; '#' starts a comment, blank lines ignored.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_key(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace bridgesteer
