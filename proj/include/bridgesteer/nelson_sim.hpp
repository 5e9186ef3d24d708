#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bridgesteer/drift.hpp"

namespace bridgesteer {

/// Counter-based generator: SplitMix64 output function over an incrementing
/// Weyl counter. Substreams are derived by hashing (seed, path index), so an
/// ensemble is bit-identical regardless of thread count or schedule.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t state) : state_(state) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static CounterRng substream(std::uint64_t seed, std::uint64_t stream) {
        return CounterRng(mix(mix(seed + 0x9E3779B97F4A7C15ull) + stream));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /// Uniform in (0, 1].
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (two uniforms per call, no caching, so
    /// the draw count per path stays deterministic).
    double next_normal();

private:
    std::uint64_t state_;
};

struct SimulationConfig {
    std::size_t n_paths = 100000;
    double dt_sim = 1e-3;
    std::uint64_t seed = 0;
    double epsilon = 1.0;  // diffusion coefficient hbar/m
    double t0 = 0.0;
    double t1 = 1.0;
    std::vector<double> save_times = {0.0, 0.25, 0.5, 0.75, 1.0};
    double x_min = -6.0;  // domain for drift clamping / exit accounting
    double x_max = 7.0;
    std::size_t threads = 0;  // 0 = library default

    void validate() const;
};

/// Positions per saved slice (row-major: slice k, path p).
struct PathEnsemble {
    SimulationConfig config;
    std::string drift_name;
    std::vector<double> slice_times;
    std::vector<std::vector<double>> positions;  // [slice][path]
    std::uint64_t clamped_steps = 0;
    std::uint64_t total_steps = 0;

    double clamp_fraction() const {
        return total_steps ? static_cast<double>(clamped_steps) / static_cast<double>(total_steps)
                           : 0.0;
    }
    const std::vector<double>& at_time(double t) const;
};

struct EntropyEstimate {
    double action = 0.0;         // Monte Carlo Girsanov action term
    double action_std_error = 0.0;
    double marginal_term = 0.0;  // caller-supplied H(q(t0), p(t0))
    std::size_t n_paths = 0;
    double total() const { return marginal_term + action; }
};

struct MarginalTestReport {
    double t = 0.0;
    std::size_t n = 0;
    double mean = 0.0, variance = 0.0;
    double target_mean = 0.0, target_variance = 0.0;
    double ks_statistic = 0.0;
    double ks_threshold = 0.0;       // 1.63 / sqrt(n), alpha ~ 0.01
    double mean_band = 0.0;          // 3 sigma_target / sqrt(n)
    double variance_band = 0.05;     // relative
    bool mean_pass = false, variance_pass = false, ks_pass = false;
    bool pass() const { return mean_pass && variance_pass && ks_pass; }
};

/// KL divergence between two Gaussians (natural log).
double gaussian_kl(double mean0, double var0, double mean1, double var1);

/// Exact i.i.d. Gaussian samples, one substream per sample index.
std::vector<double> sample_initial_gaussian(double mean, double variance, std::size_t n,
                                            std::uint64_t seed);

/// Inverse-CDF sampling on the trapezoid CDF of a gridded density.
/// Rejects densities whose variance is below (2 dx)^2.
std::vector<double> sample_initial(const RealField& rho0, std::size_t n, std::uint64_t seed);

/// Euler-Maruyama with fixed step; paths saved at config.save_times.
/// Drift evaluation clamps x to [x_min, x_max] and counts clamped steps.
PathEnsemble simulate(const DriftField& drift, std::vector<double> initial_positions,
                      const SimulationConfig& config);

/// Moment and Kolmogorov-Smirnov test of a saved slice against a gridded
/// target density (trapezoid CDF).
MarginalTestReport marginal_test(const PathEnsemble& ensemble, double t, const RealField& target);

/// Same test against an exact Gaussian target.
MarginalTestReport marginal_test_gaussian(const PathEnsemble& ensemble, double t,
                                          double target_mean, double target_variance);

/// Girsanov relative-entropy estimator: regenerates the ensemble paths under
/// q_drift (same seed/config), accumulating the per-path trapezoid integral
/// of |q_drift - p_drift|^2 / (2 epsilon); the t0 marginal entropy is passed
/// through. Standard error = sample standard deviation / sqrt(n_paths).
EntropyEstimate entropy_estimate(const DriftField& q_drift, const DriftField& p_drift,
                                 std::vector<double> initial_positions,
                                 const SimulationConfig& config, double marginal_term = 0.0);

/// Worker cap: explicit argument, else BRIDGESTEER_THREADS, else hardware.
std::size_t resolve_thread_count(std::size_t requested);

}  // namespace bridgesteer
