#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bridgesteer/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Schrodinger-bridge steering of quantum states: closed-form Gaussian example, "
                 "general bridge solves, and Monte Carlo validation"};

    std::string config_path, mode_str, out_dir, omega_str, seed_str;
    bool quiet = false;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--mode", mode_str,
                   "gaussian-example | solve-bridge | simulate | verify-all");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed_str, "64-bit simulation seed");
    app.add_option("--omega", omega_str, "Gaussian width parameter");
    app.add_flag("--quiet", quiet, "suppress progress output");

    CLI11_PARSE(app, argc, argv);

    try {
        bridgesteer::RunConfig config;
        if (!config_path.empty()) config = bridgesteer::load_run_config(config_path);
        if (!mode_str.empty()) config.mode = bridgesteer::parse_mode(mode_str);
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (!seed_str.empty()) config.seed = std::stoull(seed_str);
        if (!omega_str.empty()) config.omega = std::stod(omega_str);
        if (quiet) config.quiet = true;

        const auto result = bridgesteer::run_pipeline(config);
        if (!result.all_pass()) {
            std::cerr << "gate failed: " << result.first_failure() << " (see "
                      << (result.out_dir / "summary.txt").string() << ")\n";
            return 1;
        }
        if (!config.quiet) {
            std::cout << "all gates passed; outputs in " << result.out_dir.string() << "\n";
        }
        return 0;
    } catch (const bridgesteer::NoConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
