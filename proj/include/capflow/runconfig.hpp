#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "capflow/flow.hpp"
#include "capflow/initial.hpp"

namespace capflow {

/// Any problem with user-supplied configuration; the CLI maps it to exit 2.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Contact angle from JSON: a number in radians, or one of the exact strings
/// "pi/2", "pi/3", "pi/4", "pi/6".
[[nodiscard]] inline double parse_theta(const nlohmann::json& j)
{
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        const double pi = std::numbers::pi;
        if (s == "pi/2") return pi / 2.0;
        if (s == "pi/3") return pi / 3.0;
        if (s == "pi/4") return pi / 4.0;
        if (s == "pi/6") return pi / 6.0;
        try {
            std::size_t pos = 0;
            const double val = std::stod(s, &pos);
            if (pos == s.size()) return val;
        } catch (const std::exception&) {
        }
        throw config_error("unrecognized theta string '" + s + "'");
    }
    throw config_error("theta must be a number (radians) or a pi-fraction string");
}

struct InitialCap {
    double r = 1.0;
};
struct InitialPerturbedCap {
    double r = 1.0;
    std::vector<PerturbationMode> modes;
};
struct InitialFile {
    std::string path;
};

/// Full experiment description: flow parameters plus initial data, seed and
/// output options.
struct RunConfig {
    FlowConfig flow;
    std::variant<InitialCap, InitialPerturbedCap, InitialFile> initial = InitialCap{};
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    bool export_mesh = false;
    int mesh_n_alpha = 64;  // revolution resolution when exporting axisym n=2
};

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error("bad value for '" + key + "': " + e.what());
    }
}

}  // namespace detail

[[nodiscard]] inline RunConfig parse_run_config(const nlohmann::json& j)
{
    using detail::get_or;
    if (!j.is_object()) throw config_error("config root must be a JSON object");
    RunConfig cfg;
    cfg.flow.n = get_or(j, "n", 2);
    const std::string backend = get_or<std::string>(j, "backend", "axisym");
    if (backend == "axisym") {
        cfg.flow.backend = Backend::Axisym;
    } else if (backend == "sphere2d") {
        cfg.flow.backend = Backend::Sphere2d;
    } else {
        throw config_error("backend must be 'axisym' or 'sphere2d'");
    }
    cfg.flow.n_beta = get_or(j, "n_beta", 400);
    cfg.flow.n_alpha = get_or(j, "n_alpha", cfg.flow.backend == Backend::Sphere2d ? 64 : 0);
    cfg.flow.flow_index = get_or(j, "k", 1);
    if (j.contains("theta")) cfg.flow.theta = parse_theta(j.at("theta"));
    cfg.flow.cfl_factor = get_or(j, "cfl_factor", 0.2);
    cfg.flow.t_max = get_or(j, "t_max", 50.0);
    cfg.flow.steady_tol = get_or(j, "steady_tol", 1e-7);
    cfg.flow.steady_window = get_or(j, "steady_window", 50);
    cfg.flow.emit_every = get_or(j, "emit_every", 2000);
    cfg.flow.abort_on_violation = get_or(j, "abort_on_violation", false);
    cfg.flow.convexity_slack = get_or(j, "convexity_slack", 1e-8);
    cfg.flow.conservation_slack = get_or(j, "conservation_slack", 1e-3);
    cfg.flow.monotonicity_slack = get_or(j, "monotonicity_slack", 1e-8);

    if (j.contains("af_pairs")) {
        cfg.flow.af_pairs.clear();
        for (const auto& p : j.at("af_pairs")) {
            if (!p.is_array() || p.size() != 2) {
                throw config_error("af_pairs entries must be [k, l] pairs");
            }
            cfg.flow.af_pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
        }
    }

    if (!(cfg.flow.cfl_factor > 0.0 && cfg.flow.cfl_factor <= 0.5)) {
        throw config_error("cfl_factor must lie in (0, 0.5]");
    }
    if (cfg.flow.steady_tol <= 0.0 || cfg.flow.conservation_slack <= 0.0 ||
        cfg.flow.monotonicity_slack <= 0.0 || cfg.flow.convexity_slack <= 0.0) {
        throw config_error("tolerances must be > 0");
    }
    if (cfg.flow.flow_index < 1 || cfg.flow.flow_index > cfg.flow.n) {
        throw config_error("k must satisfy 1 <= k <= n");
    }
    if (!(cfg.flow.theta > 0.0 && cfg.flow.theta <= std::numbers::pi / 2.0 + 1e-15)) {
        throw config_error("theta must lie in (0, pi/2]");
    }
    for (const auto& [kk, ll] : cfg.flow.af_pairs) {
        if (!(0 <= ll && ll < kk && kk <= cfg.flow.n)) {
            throw config_error("af_pairs entries need 0 <= l < k <= n");
        }
    }

    const nlohmann::json init =
        j.contains("initial") ? j.at("initial") : nlohmann::json{{"type", "cap"}};
    const std::string type = get_or<std::string>(init, "type", "cap");
    if (type == "cap") {
        cfg.initial = InitialCap{get_or(init, "r", 1.0)};
    } else if (type == "perturbed_cap") {
        InitialPerturbedCap pc;
        pc.r = get_or(init, "r", 1.0);
        for (const auto& m : init.value("modes", nlohmann::json::array())) {
            PerturbationMode mode;
            mode.beta_freq = get_or(m, "beta_freq", 1);
            mode.azimuth_freq = get_or(m, "azimuth_freq", 0);
            mode.amplitude = get_or(m, "amplitude", 0.0);
            if (mode.beta_freq < 0 || mode.azimuth_freq < 0) {
                throw config_error("perturbation frequencies must be >= 0");
            }
            pc.modes.push_back(mode);
        }
        cfg.initial = std::move(pc);
    } else if (type == "file") {
        if (!init.contains("path")) throw config_error("initial type 'file' needs 'path'");
        cfg.initial = InitialFile{init.at("path").get<std::string>()};
    } else {
        throw config_error("initial type must be cap | perturbed_cap | file");
    }

    cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
    cfg.out_dir = get_or<std::string>(j, "out", ".");
    cfg.export_mesh = get_or(j, "export_mesh", false);
    cfg.mesh_n_alpha = get_or(j, "mesh_n_alpha", 64);
    if (cfg.export_mesh && cfg.flow.n != 2) {
        throw config_error("export_mesh requires n = 2");
    }
    return cfg;
}

[[nodiscard]] inline nlohmann::json load_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config parse failure: ") + e.what());
    }
}

}  // namespace capflow
