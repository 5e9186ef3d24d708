#include "bridgesteer/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>

#include "bridgesteer/csv_io.hpp"
#include "bridgesteer/nelson_sim.hpp"

namespace bridgesteer {

namespace {

constexpr double kMaxClampFraction = 1e-4;  // 0.01% of path-steps

void note(const RunConfig& config, const std::string& msg) {
    if (!config.quiet) std::cout << msg << "\n";
}

GateResult gate_leq(std::string name, double value, double threshold) {
    return GateResult{std::move(name), value <= threshold, value, threshold};
}

void write_named_values(const std::filesystem::path& path,
                        const std::vector<std::pair<std::string, double>>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string());
    out << "name,value\n";
    for (const auto& [name, value] : rows) out << name << "," << format_full(value) << "\n";
}

void write_summary(const std::filesystem::path& path, const std::string& mode,
                   const std::vector<GateResult>& gates) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string());
    out << "mode: " << mode << "\n";
    bool all = true;
    for (const auto& g : gates) {
        out << "gate " << g.name << ": " << (g.pass ? "pass" : "FAIL")
            << " value=" << format_full(g.value) << " threshold=" << format_full(g.threshold)
            << "\n";
        all = all && g.pass;
    }
    out << "overall: " << (all ? "pass" : "FAIL") << "\n";
}

RealField gaussian_density_field(GridPtr grid, double omega, double mean) {
    const SpaceTimeGrid& g = *grid;
    std::vector<double> v(g.n_x());
    const double norm = std::sqrt(omega / std::numbers::pi);
    for (std::size_t i = 0; i < g.n_x(); ++i) {
        const double d = g.x(i) - mean;
        v[i] = norm * std::exp(-omega * d * d);
    }
    // the grid truncates the tails; renormalize the trapezoid mass exactly
    const double mass = integrate(grid, v);
    for (double& y : v) y /= mass;
    return RealField(grid, std::move(v), /*density=*/true);
}

DriftField reference_drift_field(const GaussianBridgeSolution& sol) {
    const double omega = sol.omega();
    const auto params = sol.constants().params;
    return DriftField(
        "gaussian_reference",
        [omega, params](double x, double t) { return params.c - omega * (x - params.mean(t)); },
        [omega](double, double) { return -omega; });
}

DriftField bridge_drift_field(const GaussianBridgeSolution& sol) {
    const double omega = sol.omega();
    const auto params = sol.constants().params;
    const double beta0 = sol.constants().beta0;
    return DriftField(
        "gaussian_bridge",
        [omega, params, beta0](double x, double t) {
            return params.c - omega * (x - params.mean(t)) + beta0 * std::exp(omega * t);
        },
        [omega](double, double) { return -omega; });
}

struct MonteCarloOutputs {
    std::vector<GateResult> gates;
    PathEnsemble bridge_ensemble;
    PathEnsemble reference_ensemble;
    EntropyEstimate entropy;
    double entropy_closed_form = 0.0;
    double entropy_tolerance = 0.0;
};

/// Shared Monte Carlo stage: bridge and reference ensembles from the closed
/// forms, endpoint statistics, and the Girsanov entropy estimate.
MonteCarloOutputs run_monte_carlo(const GaussianBridgeSolution& sol, GridPtr grid,
                                  const RunConfig& config) {
    const double omega = sol.omega();
    const double var = 1.0 / (2.0 * omega);

    SimulationConfig sim;
    sim.n_paths = config.n_paths;
    sim.dt_sim = config.dt_sim;
    sim.seed = config.seed;
    sim.epsilon = sol.config().constants.epsilon();
    sim.t0 = config.t0;
    sim.t1 = config.t1;
    sim.x_min = config.x_min;
    sim.x_max = config.x_max;
    sim.threads = config.threads;

    const DriftField ref_drift = reference_drift_field(sol);
    const DriftField brg_drift = bridge_drift_field(sol);

    auto init_bridge = sample_initial_gaussian(0.0, var, sim.n_paths, sim.seed);
    auto init_ref = sample_initial_gaussian(sol.constants().params.m1, var, sim.n_paths,
                                            sim.seed ^ 0x5245464552ull);

    MonteCarloOutputs out;
    out.bridge_ensemble = simulate(brg_drift, init_bridge, sim);
    out.reference_ensemble = simulate(ref_drift, init_ref, sim);

    RealField rho0 = gaussian_density_field(grid, omega, 0.0);
    RealField rho1 = gaussian_density_field(grid, omega, 1.0);

    const auto b0_test = marginal_test(out.bridge_ensemble, sim.t0, rho0);
    const auto b1_test = marginal_test(out.bridge_ensemble, sim.t1, rho1);
    const auto r1_test = marginal_test(out.reference_ensemble, sim.t1, rho1);

    out.gates.push_back(gate_leq("mc_clamp_fraction", out.bridge_ensemble.clamp_fraction(),
                                 kMaxClampFraction));
    out.gates.push_back(gate_leq("mc_bridge_t1_mean_error", std::abs(b1_test.mean - 1.0),
                                 b1_test.mean_band));
    out.gates.push_back(gate_leq("mc_bridge_t1_variance_reldev",
                                 std::abs(b1_test.variance / var - 1.0), 0.05));
    out.gates.push_back(gate_leq("mc_bridge_t1_ks", b1_test.ks_statistic, b1_test.ks_threshold));
    out.gates.push_back(gate_leq("mc_bridge_t0_ks", b0_test.ks_statistic, b0_test.ks_threshold));
    // the unsteered reference must fail the same t1 test
    out.gates.push_back(GateResult{"mc_reference_t1_ks_fails", !r1_test.ks_pass,
                                   r1_test.ks_statistic, r1_test.ks_threshold});

    out.entropy = entropy_estimate(brg_drift, ref_drift, init_bridge, sim,
                                   sol.initial_marginal_kl());
    out.entropy_closed_form = sol.entropy_action_closed_form();
    // statistical band plus the a priori trapezoid bound for the
    // deterministic integrand beta(t)^2/2 (second derivative 2 w^2 beta^2)
    const double beta1 = sol.beta(sim.t1);
    const double quad_bound =
        sim.dt_sim * sim.dt_sim * omega * omega * beta1 * beta1 / 6.0 * (sim.t1 - sim.t0);
    out.entropy_tolerance = std::max(2.0 * out.entropy.action_std_error, quad_bound);
    out.gates.push_back(gate_leq("mc_entropy_action_error",
                                 std::abs(out.entropy.action - out.entropy_closed_form),
                                 out.entropy_tolerance));
    return out;
}

void write_ensemble_csv(const std::filesystem::path& path, const PathEnsemble& ensemble,
                        const GaussianBridgeSolution& sol, GridPtr grid, bool bridge) {
    CsvTable t;
    t.header = "t,mean,var,ks_stat,n";
    for (double ts : ensemble.slice_times) {
        // slice target density from the closed forms
        const SpaceTimeGrid& g = *grid;
        std::vector<double> target(g.n_x());
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            target[i] = bridge ? sol.bridge_density(g.x(i), ts, /*normalized=*/true)
                               : sol.reference_density(g.x(i), ts, /*normalized=*/true);
        }
        const double mass = integrate(grid, target);
        for (double& v : target) v /= mass;
        RealField tf(grid, std::move(target), true);
        const auto rep = marginal_test(ensemble, ts, tf);
        t.rows.push_back({ts, rep.mean, rep.variance, rep.ks_statistic,
                          static_cast<double>(rep.n)});
    }
    write_csv(path, t);
}

}  // namespace

std::vector<MadelungPair> reference_pairs_on_grid(const GaussianBridgeSolution& sol, GridPtr grid,
                                                  bool normalized) {
    const SpaceTimeGrid& g = *grid;
    const double rnorm = normalized ? 0.25 * std::log(sol.omega() / std::numbers::pi) : 0.0;
    std::vector<MadelungPair> pairs;
    pairs.reserve(g.n_t());
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        const double t = g.t(k);
        std::vector<double> r(g.n_x()), s(g.n_x());
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            r[i] = sol.reference_R(g.x(i), t) + rnorm;
            s[i] = sol.reference_S(g.x(i), t);
        }
        pairs.push_back(MadelungPair{RealField(grid, std::move(r)), RealField(grid, std::move(s))});
    }
    return pairs;
}

void closed_form_factor_logs(const GaussianBridgeSolution& sol, const SpaceTimeGrid& grid,
                             SliceMatrix& log_phi, SliceMatrix& log_phi_hat,
                             bool normalize_product) {
    log_phi = SliceMatrix(grid.n_t(), grid.n_x());
    log_phi_hat = SliceMatrix(grid.n_t(), grid.n_x());
    const double norm = normalize_product ? 0.5 * std::log(sol.omega() / std::numbers::pi) : 0.0;
    for (std::size_t k = 0; k < grid.n_t(); ++k) {
        const double t = grid.t(k);
        for (std::size_t i = 0; i < grid.n_x(); ++i) {
            log_phi.at(k, i) = sol.log_phi(grid.x(i), t);
            log_phi_hat.at(k, i) = sol.log_phi_hat(grid.x(i), t) + norm;
        }
    }
}

RealField load_density_csv(const std::filesystem::path& path, GridPtr grid) {
    const XyData data = read_xy_csv(path);
    for (double y : data.y) {
        if (!(y > 0.0)) {
            throw NonpositiveDensity("input density " + path.string() +
                                     " must be strictly positive everywhere");
        }
    }
    if (data.x.front() > grid->x_min() || data.x.back() < grid->x_max()) {
        throw ConfigError("input density " + path.string() + " does not cover the run grid");
    }
    auto vals = pchip_interpolate(data.x, data.y, grid->x_points());
    for (double& v : vals) v = std::max(v, 1e-300);
    const double mass = integrate(grid, vals);
    for (double& v : vals) v /= mass;
    return RealField(grid, std::move(vals), /*density=*/true);
}

PipelineResult run_gaussian_example(const RunConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    auto grid = std::make_shared<const SpaceTimeGrid>(config.make_grid());
    const SpaceTimeGrid& g = *grid;

    GaussianConfig gc;
    gc.omega = config.omega;
    GaussianBridgeSolution sol(gc);
    const auto& sc = sol.constants();

    PipelineResult result;
    result.out_dir = config.out_dir;

    // constants + residuals
    CsvTable ct;
    ct.header = "omega,m1,m2,beta0,gamma0,d0,d1,res_u1,res_u2,res_u3,res_u4";
    ct.rows.push_back({config.omega, sc.params.m1, sc.params.m2, sc.beta0, sc.gamma0,
                       sc.params.d0, sc.params.d1, sc.residuals.u1, sc.residuals.u2,
                       sc.residuals.u3, sc.residuals.u4});
    write_csv(config.out_dir / "constants.csv", ct);
    result.gates.push_back(gate_leq("constants_residuals", sc.residuals.max_abs(), 1e-9));

    const auto ode = verify_ode_systems(sol);
    result.gates.push_back(gate_leq("ode_residuals", ode.max_abs(), 1e-6));

    // boundary products against the factor identities (unnormalized form)
    double bp_err = 0.0;
    for (std::size_t i = 0; i < g.n_x(); ++i) {
        const double x = g.x(i);
        if (std::abs(x) > 4.0) continue;
        const double p0 = sol.phi(x, 0.0) * sol.phi_hat(x, 0.0);
        const double p1 = sol.phi(x, 1.0) * sol.phi_hat(x, 1.0);
        bp_err = std::max(bp_err, std::abs(p0 - std::exp(-config.omega * x * x)));
        bp_err = std::max(bp_err, std::abs(p1 - std::exp(-config.omega * (x - 1) * (x - 1))));
    }
    result.gates.push_back(gate_leq("boundary_products", bp_err, 1e-10));

    // Theorem-1 assembly from the closed forms
    SliceMatrix log_phi, log_phi_hat;
    closed_form_factor_logs(sol, g, log_phi, log_phi_hat, /*normalize_product=*/true);
    const auto reference = reference_pairs_on_grid(sol, grid, /*normalized=*/false);
    const auto evolution = assemble_tilde(reference, log_phi, log_phi_hat, grid, gc.constants);

    double norm_err = 0.0;
    for (const auto& rho : evolution.rho_tilde) {
        norm_err = std::max(norm_err, std::abs(integrate(rho) - 1.0));
    }
    result.gates.push_back(gate_leq("rho_tilde_normalization", norm_err, 1e-8));

    // endpoint modulus and phase constancy on the significant region
    auto endpoint_gates = [&](std::size_t k, double mean_target, const char* tag) {
        const RealField target = gaussian_density_field(grid, config.omega, mean_target);
        double peak = 0.0;
        for (std::size_t i = 0; i < g.n_x(); ++i) peak = std::max(peak, target[i]);
        double mod_err = 0.0, s_min = 0.0, s_max = 0.0;
        bool first = true;
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            if (target[i] <= 1e-10 * peak) continue;
            mod_err = std::max(mod_err,
                               std::abs(std::abs(evolution.psi_tilde[k][i]) - std::sqrt(target[i])));
            const double s = evolution.tilde[k].S[i];
            if (first) {
                s_min = s_max = s;
                first = false;
            } else {
                s_min = std::min(s_min, s);
                s_max = std::max(s_max, s);
            }
        }
        result.gates.push_back(gate_leq(std::string("endpoint_modulus_") + tag, mod_err, 1e-6));
        result.gates.push_back(
            gate_leq(std::string("phase_constancy_") + tag, s_max - s_min, 1e-6));
    };
    endpoint_gates(0, 0.0, "t0");
    endpoint_gates(g.n_t() - 1, 1.0, "t1");

    // potentials: reference V extracted per slice, ambient V_i = V
    const auto V = extract_potential(reference, gc.constants);
    std::vector<RealField> rho_ref;
    rho_ref.reserve(g.n_t());
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        std::vector<double> r(g.n_x());
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            r[i] = sol.reference_density(g.x(i), g.t(k), /*normalized=*/true);
        }
        rho_ref.emplace_back(grid, std::move(r));
    }
    const auto V_c = control_potential(V, V, rho_ref, evolution.rho_tilde, gc.constants);

    std::vector<RealField> V_total;
    V_total.reserve(g.n_t());
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        std::vector<double> v(g.n_x());
        for (std::size_t i = 0; i < g.n_x(); ++i) v[i] = V[k][i] + V_c[k][i];
        V_total.emplace_back(grid, std::move(v));
    }

    const auto sres = verify_schrodinger(evolution.psi_tilde, V_total, gc.constants);
    result.gates.push_back(gate_leq("schrodinger_residual", sres.max_residual,
                                    sres.threshold(kSchrodingerResidualC)));

    // invariance of V_c - (hbar^2/m) lap sqrt(rho~)/sqrt(rho~) when V_i = 0
    std::vector<RealField> zeros;
    zeros.reserve(g.n_t());
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        zeros.emplace_back(grid, std::vector<double>(g.n_x(), 0.0));
    }
    const auto V_c0 = control_potential(V, zeros, rho_ref, evolution.rho_tilde, gc.constants);
    const double coef = gc.constants.hbar * gc.constants.hbar / gc.constants.mass;
    double inv_err = 0.0;
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        std::vector<double> root_t(g.n_x()), root(g.n_x());
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            root_t[i] = std::sqrt(evolution.rho_tilde[k][i]);
            root[i] = std::sqrt(rho_ref[k][i]);
        }
        auto lap_t = laplacian(g, root_t);
        auto lap_r = laplacian(g, root);
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            const double lhs = V_c0[k][i] - coef * lap_t[i] / root_t[i];
            const double rhs = V[k][i] - coef * lap_r[i] / root[i];
            inv_err = std::max(inv_err, std::abs(lhs - rhs));
        }
    }
    result.gates.push_back(gate_leq("remark1_invariance", inv_err, 1e-10));

    // reference pair consistency under its extracted potential
    const auto mres = madelung_residuals(reference, V, gc.constants);
    result.gates.push_back(gate_leq("madelung_residuals",
                                    std::max(mres.max_continuity, mres.max_hamilton_jacobi),
                                    1e-5));

    // Monte Carlo stage
    auto mc = run_monte_carlo(sol, grid, config);
    for (auto& gate : mc.gates) result.gates.push_back(gate);

    // artifacts
    for (std::size_t k : config.resolved_export_slices()) {
        write_field_csv(config.out_dir, "vc", k, V_c[k]);
        write_wave_csv(config.out_dir, "psi_tilde", k, evolution.psi_tilde[k]);
    }
    write_ensemble_csv(config.out_dir / "ensemble.csv", mc.bridge_ensemble, sol, grid, true);
    write_ensemble_csv(config.out_dir / "ensemble_reference.csv", mc.reference_ensemble, sol,
                       grid, false);
    std::vector<std::pair<std::string, double>> residual_rows{
        {"res_u1", sc.residuals.u1},
        {"res_u2", sc.residuals.u2},
        {"res_u3", sc.residuals.u3},
        {"res_u4", sc.residuals.u4},
        {"res_beta0", sc.residuals.beta0},
        {"ode_alpha", ode.alpha},
        {"ode_beta", ode.beta},
        {"ode_gamma", ode.gamma},
        {"ode_alpha_hat", ode.alpha_hat},
        {"ode_beta_hat", ode.beta_hat},
        {"ode_gamma_hat", ode.gamma_hat},
        {"boundary_products", bp_err},
        {"rho_tilde_normalization", norm_err},
        {"schrodinger_residual", sres.max_residual},
        {"remark1_invariance", inv_err},
        {"madelung_continuity", mres.max_continuity},
        {"madelung_hamilton_jacobi", mres.max_hamilton_jacobi},
        {"entropy_action", mc.entropy.action},
        {"entropy_action_closed_form", mc.entropy_closed_form},
        {"entropy_total", mc.entropy.total()},
        {"entropy_std_error", mc.entropy.action_std_error},
    };
    write_named_values(config.out_dir / "residuals.csv", residual_rows);
    write_summary(config.out_dir / "summary.txt", "gaussian-example", result.gates);
    note(config, "gaussian-example: " + std::to_string(result.gates.size()) + " gates, " +
                     (result.all_pass() ? "all pass" : "FAIL at " + result.first_failure()));
    return result;
}

PipelineResult run_solve_bridge(const RunConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    auto grid = std::make_shared<const SpaceTimeGrid>(config.make_grid());
    const SpaceTimeGrid& g = *grid;

    GaussianConfig gc;
    gc.omega = config.omega;
    GaussianBridgeSolution sol(gc);

    const bool default_inputs = config.rho0_file.empty() && config.rho1_file.empty();
    RealField rho0 = config.rho0_file.empty()
                         ? gaussian_density_field(grid, config.omega, 0.0)
                         : load_density_csv(config.rho0_file, grid);
    RealField rho1 = config.rho1_file.empty()
                         ? gaussian_density_field(grid, config.omega, 1.0)
                         : load_density_csv(config.rho1_file, grid);

    const DriftField drift = reference_drift_field(sol);

    PipelineResult result;
    result.out_dir = config.out_dir;

    BridgeSolution bridge;
    try {
        bridge = solve_bridge(rho0, rho1, drift, gc.constants, config.fortet());
    } catch (const NoConvergence&) {
        // surface the iteration log path with a failing gate
        write_summary(config.out_dir / "summary.txt", "solve-bridge",
                      {{"fortet_converged", false, 0.0, 0.0}});
        throw;
    }

    CsvTable it;
    it.header = "iter,err_t0,err_t1,seconds";
    for (const auto& rec : bridge.history) {
        it.rows.push_back({static_cast<double>(rec.iter), rec.err_t0, rec.err_t1, rec.seconds});
    }
    write_csv(config.out_dir / "fortet_iterations.csv", it);

    result.gates.push_back(gate_leq("fortet_marginal_error", bridge.final_marginal_error,
                                    config.marginal_tolerance));
    result.gates.push_back(gate_leq("fortet_iterations",
                                    static_cast<double>(bridge.iterations),
                                    static_cast<double>(config.max_iterations)));
    if (bridge.boundary_mass_warning) {
        note(config, "warning: bridge density is not negligible at the grid boundary");
    }

    const auto reference = reference_pairs_on_grid(sol, grid, /*normalized=*/false);
    const auto evolution =
        assemble_tilde(reference, bridge.log_phi, bridge.log_phi_hat, grid, gc.constants);

    double norm_err = 0.0;
    for (const auto& rho : evolution.rho_tilde) {
        norm_err = std::max(norm_err, std::abs(integrate(rho) - 1.0));
    }
    result.gates.push_back(gate_leq("rho_tilde_normalization", norm_err, 1e-6));

    double positivity = 1.0;  // factors are exponentials of finite logs
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            if (!std::isfinite(bridge.log_phi.at(k, i)) ||
                !std::isfinite(bridge.log_phi_hat.at(k, i))) {
                positivity = 0.0;
            }
        }
    }
    result.gates.push_back(GateResult{"factor_positivity", positivity == 1.0, positivity, 1.0});

    // closed-form cross-check only for the default (unit-shift Gaussian) data
    if (default_inputs) {
        double gauge = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < g.n_t(); ++k) {
            for (std::size_t i = 0; i < g.n_x(); ++i) {
                if (std::abs(g.x(i)) > 4.0) continue;
                gauge += bridge.log_phi.at(k, i) - sol.log_phi(g.x(i), g.t(k));
                ++count;
            }
        }
        gauge /= static_cast<double>(count);
        const double hat_gauge = 0.5 * std::log(config.omega / std::numbers::pi) - gauge;
        double rel_phi = 0.0, rel_phi_hat = 0.0;
        for (std::size_t k = 0; k < g.n_t(); ++k) {
            double max_phi = 0.0, max_hat = 0.0, err_phi = 0.0, err_hat = 0.0;
            for (std::size_t i = 0; i < g.n_x(); ++i) {
                if (std::abs(g.x(i)) > 4.0) continue;
                const double t = g.t(k);
                const double exact_phi = std::exp(sol.log_phi(g.x(i), t));
                const double exact_hat = std::exp(sol.log_phi_hat(g.x(i), t));
                err_phi = std::max(err_phi, std::abs(std::exp(bridge.log_phi.at(k, i) - gauge) -
                                                     exact_phi));
                err_hat = std::max(err_hat,
                                   std::abs(std::exp(bridge.log_phi_hat.at(k, i) - hat_gauge) -
                                            exact_hat));
                max_phi = std::max(max_phi, exact_phi);
                max_hat = std::max(max_hat, exact_hat);
            }
            rel_phi = std::max(rel_phi, err_phi / max_phi);
            rel_phi_hat = std::max(rel_phi_hat, err_hat / max_hat);
        }
        result.gates.push_back(gate_leq("closed_form_match_phi", rel_phi, 1e-4));
        result.gates.push_back(gate_leq("closed_form_match_phi_hat", rel_phi_hat, 1e-4));
    }

    // controlling potential from the numeric bridge (reported, not gated:
    // only property gates apply to general marginals)
    const auto V = extract_potential(reference, gc.constants);
    std::vector<RealField> rho_ref;
    rho_ref.reserve(g.n_t());
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        std::vector<double> r(g.n_x());
        for (std::size_t i = 0; i < g.n_x(); ++i) {
            r[i] = sol.reference_density(g.x(i), g.t(k), /*normalized=*/true);
        }
        rho_ref.emplace_back(grid, std::move(r));
    }
    const auto V_c = control_potential(V, V, rho_ref, evolution.rho_tilde, gc.constants);
    std::vector<RealField> V_total;
    V_total.reserve(g.n_t());
    for (std::size_t k = 0; k < g.n_t(); ++k) {
        std::vector<double> v(g.n_x());
        for (std::size_t i = 0; i < g.n_x(); ++i) v[i] = V[k][i] + V_c[k][i];
        V_total.emplace_back(grid, std::move(v));
    }
    const auto sres = verify_schrodinger(evolution.psi_tilde, V_total, gc.constants);

    for (std::size_t k : config.resolved_export_slices()) {
        write_field_csv(config.out_dir, "phi", k, bridge.phi_slice(k));
        write_field_csv(config.out_dir, "phi_hat", k, bridge.phi_hat_slice(k));
        write_field_csv(config.out_dir, "vc", k, V_c[k]);
        write_wave_csv(config.out_dir, "psi_tilde", k, evolution.psi_tilde[k]);
    }
    write_named_values(config.out_dir / "residuals.csv",
                       {{"fortet_marginal_error", bridge.final_marginal_error},
                        {"fortet_iterations", static_cast<double>(bridge.iterations)},
                        {"rho_tilde_normalization", norm_err},
                        {"schrodinger_residual", sres.max_residual}});
    write_summary(config.out_dir / "summary.txt", "solve-bridge", result.gates);
    note(config, "solve-bridge: converged in " + std::to_string(bridge.iterations) +
                     " iterations, marginal error " + format_full(bridge.final_marginal_error));
    return result;
}

PipelineResult run_simulate(const RunConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);
    auto grid = std::make_shared<const SpaceTimeGrid>(config.make_grid());

    GaussianConfig gc;
    gc.omega = config.omega;
    GaussianBridgeSolution sol(gc);

    PipelineResult result;
    result.out_dir = config.out_dir;
    auto mc = run_monte_carlo(sol, grid, config);
    result.gates = std::move(mc.gates);
    write_ensemble_csv(config.out_dir / "ensemble.csv", mc.bridge_ensemble, sol, grid, true);
    write_ensemble_csv(config.out_dir / "ensemble_reference.csv", mc.reference_ensemble, sol,
                       grid, false);
    write_named_values(config.out_dir / "residuals.csv",
                       {{"entropy_action", mc.entropy.action},
                        {"entropy_action_closed_form", mc.entropy_closed_form},
                        {"entropy_total", mc.entropy.total()},
                        {"entropy_std_error", mc.entropy.action_std_error}});
    write_summary(config.out_dir / "summary.txt", "simulate", result.gates);
    return result;
}

PipelineResult run_verify_all(const RunConfig& config) {
    RunConfig sub = config;
    PipelineResult result;
    result.out_dir = config.out_dir;

    sub.out_dir = config.out_dir / "gaussian";
    auto a = run_gaussian_example(sub);
    for (auto& gate : a.gates) {
        gate.name = "gaussian." + gate.name;
        result.gates.push_back(gate);
    }
    sub.out_dir = config.out_dir / "bridge";
    auto b = run_solve_bridge(sub);
    for (auto& gate : b.gates) {
        gate.name = "bridge." + gate.name;
        result.gates.push_back(gate);
    }
    write_summary(config.out_dir / "summary.txt", "verify-all", result.gates);
    return result;
}

PipelineResult run_pipeline(const RunConfig& config) {
    switch (config.mode) {
        case RunMode::GaussianExample: return run_gaussian_example(config);
        case RunMode::SolveBridge: return run_solve_bridge(config);
        case RunMode::Simulate: return run_simulate(config);
        case RunMode::VerifyAll: return run_verify_all(config);
    }
    throw ConfigError("run_pipeline: unknown mode");
}

}  // namespace bridgesteer
