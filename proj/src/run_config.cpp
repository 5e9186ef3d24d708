#include "bridgesteer/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace bridgesteer {

RunMode parse_mode(const std::string& s) {
    if (s == "gaussian-example") return RunMode::GaussianExample;
    if (s == "solve-bridge") return RunMode::SolveBridge;
    if (s == "simulate") return RunMode::Simulate;
    if (s == "verify-all") return RunMode::VerifyAll;
    throw ConfigError("unknown mode '" + s +
                      "' (expected gaussian-example | solve-bridge | simulate | verify-all)");
}

std::string mode_name(RunMode m) {
    switch (m) {
        case RunMode::GaussianExample: return "gaussian-example";
        case RunMode::SolveBridge: return "solve-bridge";
        case RunMode::Simulate: return "simulate";
        case RunMode::VerifyAll: return "verify-all";
    }
    return "?";
}

std::vector<std::size_t> RunConfig::resolved_export_slices() const {
    if (!export_slices.empty()) return export_slices;
    const std::size_t last = n_t - 1;
    std::vector<std::size_t> s{0, last / 4, last / 2, 3 * last / 4, last};
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

void RunConfig::validate() const {
    if (!(omega > 0.0)) throw ConfigError("config: omega must be > 0");
    if (!(x_min < x_max)) throw ConfigError("config: x_min < x_max required");
    if (n_x < 16) throw GridTooSmall("config: n_x must be >= 16");
    if (n_t < 2) throw GridTooSmall("config: n_t must be >= 2");
    if (mode == RunMode::GaussianExample || mode == RunMode::VerifyAll) {
        if (t0 != 0.0 || t1 != 1.0) {
            throw ConfigError("config: the gaussian example requires t0 = 0, t1 = 1");
        }
    }
    if (!(t0 < t1)) throw ConfigError("config: t0 < t1 required");
    if (max_iterations < 1) throw ConfigError("config: max_iterations >= 1");
    if (!(marginal_tolerance > 0.0)) throw ConfigError("config: marginal_tolerance > 0");
    if (n_paths < 1000) throw ConfigError("config: n_paths >= 1000 for statistical tests");
    if (!(dt_sim > 0.0)) throw ConfigError("config: dt_sim > 0");
    for (std::size_t s : resolved_export_slices()) {
        if (s >= n_t) throw ConfigError("config: export slice index out of range");
    }
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
    auto as_size = [&](const std::string& v) { return static_cast<std::size_t>(std::stoull(v)); };
    if (key == "mode") c.mode = parse_mode(value);
    else if (key == "omega") c.omega = std::stod(value);
    else if (key == "x_min") c.x_min = std::stod(value);
    else if (key == "x_max") c.x_max = std::stod(value);
    else if (key == "n_x") c.n_x = as_size(value);
    else if (key == "n_t") c.n_t = as_size(value);
    else if (key == "t0") c.t0 = std::stod(value);
    else if (key == "t1") c.t1 = std::stod(value);
    else if (key == "max_iterations") c.max_iterations = as_size(value);
    else if (key == "marginal_tolerance") c.marginal_tolerance = std::stod(value);
    else if (key == "scheme") {
        if (value == "log") c.scheme = PdeScheme::LogSpace;
        else if (value == "flux") c.scheme = PdeScheme::Flux;
        else throw ConfigError("config: scheme must be 'log' or 'flux'");
    }
    else if (key == "n_paths") c.n_paths = as_size(value);
    else if (key == "dt_sim") c.dt_sim = std::stod(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "quiet") c.quiet = (value == "1" || value == "true");
    else if (key == "threads") c.threads = as_size(value);
    else if (key == "rho0_file") c.rho0_file = value;
    else if (key == "rho1_file") c.rho1_file = value;
    else if (key == "export_slices") {
        c.export_slices.clear();
        std::istringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ' ')) {
            if (!tok.empty()) c.export_slices.push_back(as_size(tok));
        }
    }
    else throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    RunConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        apply_key(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

}  // namespace bridgesteer
