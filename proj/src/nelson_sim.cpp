#include "bridgesteer/nelson_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

namespace bridgesteer {

double CounterRng::next_normal() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SimulationConfig::validate() const {
    if (n_paths < 1) throw ConfigError("SimulationConfig: n_paths >= 1");
    if (!(dt_sim > 0.0)) throw ConfigError("SimulationConfig: dt_sim > 0");
    if (!(epsilon > 0.0)) throw ConfigError("SimulationConfig: epsilon > 0");
    if (!(t0 < t1)) throw ConfigError("SimulationConfig: t0 < t1");
    if (!(x_min < x_max)) throw ConfigError("SimulationConfig: x_min < x_max");
    if (save_times.empty()) throw ConfigError("SimulationConfig: save_times empty");
    for (std::size_t i = 0; i < save_times.size(); ++i) {
        const double t = save_times[i];
        if (t < t0 - 1e-12 || t > t1 + 1e-12) {
            throw ConfigError("SimulationConfig: save time outside [t0, t1]");
        }
        if (i > 0 && !(save_times[i] > save_times[i - 1])) {
            throw ConfigError("SimulationConfig: save_times must be strictly increasing");
        }
    }
}

const std::vector<double>& PathEnsemble::at_time(double t) const {
    for (std::size_t k = 0; k < slice_times.size(); ++k) {
        if (std::abs(slice_times[k] - t) < 1e-9) return positions[k];
    }
    throw SliceNotSaved("PathEnsemble: no slice saved at t = " + std::to_string(t));
}

double gaussian_kl(double mean0, double var0, double mean1, double var1) {
    if (!(var0 > 0.0) || !(var1 > 0.0)) throw ConfigError("gaussian_kl: variances must be > 0");
    return 0.5 * std::log(var1 / var0) + (var0 + (mean0 - mean1) * (mean0 - mean1)) / (2.0 * var1) -
           0.5;
}

std::size_t resolve_thread_count(std::size_t requested) {
    std::size_t n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("BRIDGESTEER_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) n = static_cast<std::size_t>(v);
        }
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

namespace {

/// Deterministic parallel sweep over [0, n): chunks are fixed by index, every
/// worker writes only its own slots.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, const Body& body) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t w = 0; w < threads; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

std::vector<double> sample_initial_gaussian(double mean, double variance, std::size_t n,
                                            std::uint64_t seed) {
    if (!(variance > 0.0)) throw InvalidDensity("sample_initial_gaussian: variance must be > 0");
    const double sd = std::sqrt(variance);
    std::vector<double> out(n);
    for (std::size_t p = 0; p < n; ++p) {
        CounterRng rng = CounterRng::substream(seed, p);
        out[p] = mean + sd * rng.next_normal();
    }
    return out;
}

std::vector<double> sample_initial(const RealField& rho0, std::size_t n, std::uint64_t seed) {
    const SpaceTimeGrid& g = rho0.grid();
    const std::size_t nx = g.n_x();
    const double dx = g.dx();

    double mass = 0.0, mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i + 1 < nx; ++i) {
        const double w = 0.5 * (rho0[i] + rho0[i + 1]) * dx;
        const double xm = 0.5 * (g.x(i) + g.x(i + 1));
        mass += w;
        mean += w * xm;
        second += w * xm * xm;
        if (!(rho0[i] >= 0.0)) throw InvalidDensity("sample_initial: negative density value");
    }
    if (!(mass > 0.0)) throw InvalidDensity("sample_initial: zero total mass");
    mean /= mass;
    const double variance = second / mass - mean * mean;
    if (variance < 4.0 * dx * dx) {
        throw InvalidDensity("sample_initial: variance below the (2 dx)^2 resolution floor");
    }

    // trapezoid CDF at the nodes, then piecewise-linear inversion
    std::vector<double> cdf(nx, 0.0);
    for (std::size_t i = 1; i < nx; ++i) {
        cdf[i] = cdf[i - 1] + 0.5 * (rho0[i - 1] + rho0[i]) * dx;
    }
    for (double& c : cdf) c /= cdf.back();

    std::vector<double> out(n);
    for (std::size_t p = 0; p < n; ++p) {
        CounterRng rng = CounterRng::substream(seed, p);
        const double u = rng.next_uniform();
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        std::size_t hi = static_cast<std::size_t>(it - cdf.begin());
        if (hi == 0) hi = 1;
        if (hi >= nx) hi = nx - 1;
        const double c0 = cdf[hi - 1], c1 = cdf[hi];
        const double frac = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.5;
        out[p] = g.x(hi - 1) + frac * dx;
    }
    return out;
}

PathEnsemble simulate(const DriftField& drift, std::vector<double> initial_positions,
                      const SimulationConfig& config) {
    config.validate();
    const std::size_t n = initial_positions.size();
    if (n != config.n_paths) {
        throw ConfigError("simulate: initial positions count != config.n_paths");
    }
    const double domain_width = config.x_max - config.x_min;

    // fixed step count; save slices snap to the nearest step boundary
    const std::size_t n_steps =
        static_cast<std::size_t>(std::llround((config.t1 - config.t0) / config.dt_sim));
    if (n_steps < 1) throw ConfigError("simulate: dt_sim larger than the horizon");

    std::vector<std::size_t> save_steps;
    save_steps.reserve(config.save_times.size());
    for (double ts : config.save_times) {
        const double k = (ts - config.t0) / config.dt_sim;
        save_steps.push_back(static_cast<std::size_t>(std::llround(k)));
    }

    PathEnsemble out;
    out.config = config;
    out.drift_name = drift.name();
    out.slice_times.reserve(save_steps.size());
    for (std::size_t s : save_steps) {
        out.slice_times.push_back(config.t0 + static_cast<double>(s) * config.dt_sim);
    }
    out.positions.assign(save_steps.size(), std::vector<double>(n));
    out.total_steps = static_cast<std::uint64_t>(n) * n_steps;

    const double sqrt_eps_dt = std::sqrt(config.epsilon * config.dt_sim);
    std::atomic<std::uint64_t> clamped{0};
    std::atomic<bool> blowup{false};

    parallel_for(n, resolve_thread_count(config.threads), [&](std::size_t lo, std::size_t hi) {
        std::uint64_t local_clamped = 0;
        for (std::size_t p = lo; p < hi; ++p) {
            CounterRng rng = CounterRng::substream(config.seed ^ 0x424D435053494Dull, p);
            double x = initial_positions[p];
            std::size_t next_save = 0;
            for (std::size_t s = 0; s <= n_steps; ++s) {
                while (next_save < save_steps.size() && save_steps[next_save] == s) {
                    out.positions[next_save][p] = x;
                    ++next_save;
                }
                if (s == n_steps) break;
                const double t = config.t0 + static_cast<double>(s) * config.dt_sim;
                double xe = x;
                if (xe < config.x_min || xe > config.x_max) {
                    xe = std::clamp(xe, config.x_min, config.x_max);
                    ++local_clamped;
                }
                const double b = drift(xe, t);
                if (std::abs(b) * config.dt_sim > domain_width) {
                    blowup.store(true);
                    return;
                }
                x += b * config.dt_sim + sqrt_eps_dt * rng.next_normal();
            }
        }
        clamped.fetch_add(local_clamped);
    });

    if (blowup.load()) {
        throw DriftBlowup("simulate: |drift| * dt_sim exceeded the domain width");
    }
    out.clamped_steps = clamped.load();
    return out;
}

namespace {

MarginalTestReport ks_and_moments(const std::vector<double>& samples, double t,
                                  double target_mean, double target_var,
                                  const std::function<double(double)>& target_cdf) {
    MarginalTestReport rep;
    rep.t = t;
    rep.n = samples.size();
    double s1 = 0.0, s2 = 0.0;
    for (double x : samples) {
        s1 += x;
        s2 += x * x;
    }
    const double n = static_cast<double>(rep.n);
    rep.mean = s1 / n;
    rep.variance = s2 / n - rep.mean * rep.mean;
    rep.target_mean = target_mean;
    rep.target_variance = target_var;

    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = target_cdf(sorted[i]);
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - f));
        ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
    }
    rep.ks_statistic = ks;
    rep.ks_threshold = 1.63 / std::sqrt(n);
    rep.mean_band = 3.0 * std::sqrt(target_var) / std::sqrt(n);
    rep.mean_pass = std::abs(rep.mean - target_mean) <= rep.mean_band;
    rep.variance_pass = std::abs(rep.variance / target_var - 1.0) <= rep.variance_band;
    rep.ks_pass = ks < rep.ks_threshold;
    return rep;
}

}  // namespace

MarginalTestReport marginal_test(const PathEnsemble& ensemble, double t, const RealField& target) {
    const auto& samples = ensemble.at_time(t);
    const SpaceTimeGrid& g = target.grid();
    const std::size_t nx = g.n_x();
    const double dx = g.dx();

    auto cdf_nodes = std::make_shared<std::vector<double>>(nx, 0.0);
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 1; i < nx; ++i) {
        (*cdf_nodes)[i] = (*cdf_nodes)[i - 1] + 0.5 * (target[i - 1] + target[i]) * dx;
    }
    const double mass = cdf_nodes->back();
    for (double& c : *cdf_nodes) c /= mass;
    for (std::size_t i = 0; i + 1 < nx; ++i) {
        const double w = 0.5 * (target[i] + target[i + 1]) * dx / mass;
        const double xm = 0.5 * (g.x(i) + g.x(i + 1));
        mean += w * xm;
        second += w * xm * xm;
    }

    auto cdf = [cdf_nodes, &g, nx](double x) {
        if (x <= g.x_min()) return 0.0;
        if (x >= g.x_max()) return 1.0;
        const double f = (x - g.x_min()) / g.dx();
        const std::size_t i = std::min(static_cast<std::size_t>(f), nx - 2);
        const double a = f - static_cast<double>(i);
        return (*cdf_nodes)[i] * (1.0 - a) + (*cdf_nodes)[i + 1] * a;
    };
    return ks_and_moments(samples, t, mean, second - mean * mean, cdf);
}

MarginalTestReport marginal_test_gaussian(const PathEnsemble& ensemble, double t,
                                          double target_mean, double target_variance) {
    const auto& samples = ensemble.at_time(t);
    const double sd = std::sqrt(target_variance);
    auto cdf = [target_mean, sd](double x) {
        return 0.5 * std::erfc(-(x - target_mean) / (sd * std::numbers::sqrt2));
    };
    return ks_and_moments(samples, t, target_mean, target_variance, cdf);
}

EntropyEstimate entropy_estimate(const DriftField& q_drift, const DriftField& p_drift,
                                 std::vector<double> initial_positions,
                                 const SimulationConfig& config, double marginal_term) {
    config.validate();
    const std::size_t n = initial_positions.size();
    if (n != config.n_paths) {
        throw ConfigError("entropy_estimate: initial positions count != config.n_paths");
    }
    const std::size_t n_steps =
        static_cast<std::size_t>(std::llround((config.t1 - config.t0) / config.dt_sim));
    const double sqrt_eps_dt = std::sqrt(config.epsilon * config.dt_sim);
    const double half_inv_eps = 0.5 / config.epsilon;

    std::vector<double> actions(n);
    parallel_for(n, resolve_thread_count(config.threads), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            CounterRng rng = CounterRng::substream(config.seed ^ 0x424D435053494Dull, p);
            double x = initial_positions[p];
            auto integrand = [&](double xx, double tt) {
                const double d = q_drift(xx, tt) - p_drift(xx, tt);
                return half_inv_eps * d * d;
            };
            double acc = 0.0;
            double prev = integrand(x, config.t0);
            for (std::size_t s = 0; s < n_steps; ++s) {
                const double t = config.t0 + static_cast<double>(s) * config.dt_sim;
                const double xe = std::clamp(x, config.x_min, config.x_max);
                const double b = q_drift(xe, t);
                x += b * config.dt_sim + sqrt_eps_dt * rng.next_normal();
                const double cur = integrand(std::clamp(x, config.x_min, config.x_max),
                                             t + config.dt_sim);
                acc += 0.5 * (prev + cur) * config.dt_sim;
                prev = cur;
            }
            actions[p] = acc;
        }
    });

    EntropyEstimate est;
    est.n_paths = n;
    est.marginal_term = marginal_term;
    double s1 = 0.0;
    for (double a : actions) s1 += a;
    est.action = s1 / static_cast<double>(n);
    double s2 = 0.0;
    for (double a : actions) s2 += (a - est.action) * (a - est.action);
    est.action_std_error = std::sqrt(s2 / static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
    return est;
}

}  // namespace bridgesteer
