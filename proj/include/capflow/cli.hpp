#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "capflow/caps.hpp"
#include "capflow/checkpoint.hpp"
#include "capflow/flow.hpp"
#include "capflow/functionals.hpp"
#include "capflow/initial.hpp"
#include "capflow/runconfig.hpp"

namespace capflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitMonitor = 3;
inline constexpr int kExitNotConverged = 4;
inline constexpr int kExitNumeric = 5;

/// Full-precision decimal rendering used for every CSV number; round-trips
/// doubles exactly, so reruns produce identical bytes.
[[nodiscard]] inline std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

[[nodiscard]] inline RadialField build_initial(const RunConfig& cfg)
{
    if (const auto* file = std::get_if<InitialFile>(&cfg.initial)) {
        Checkpoint ck = load_checkpoint(file->path);
        const auto& g = ck.state.field.grid;
        if (g.n != cfg.flow.n || g.backend != cfg.flow.backend ||
            g.n_beta != cfg.flow.n_beta || g.n_alpha != cfg.flow.n_alpha) {
            throw config_error("initial-state file grid does not match the config grid");
        }
        return ck.state.field;
    }
    const HalfSphereGrid grid = cfg.flow.make_grid();
    if (const auto* cap = std::get_if<InitialCap>(&cfg.initial)) {
        return cap_field(grid, {cap->r, cfg.flow.theta});
    }
    const auto& pc = std::get<InitialPerturbedCap>(cfg.initial);
    RadialField f = perturbed_cap_field(grid, {pc.r, cfg.flow.theta}, pc.modes, cfg.seed);
    const CurvatureData curv = curvature(f, cfg.flow.theta);
    if (curv.kappa.col(0).minCoeff() <= 0.0) {
        throw config_error(
            "perturbation amplitude too large: initial field is not strictly convex");
    }
    return f;
}

// ---------------------------------------------------------------------------
// Mesh export (n = 2)
// ---------------------------------------------------------------------------

/// Triangulated surface in OBJ-style plain text: apex fan at the pole, one
/// vertex ring per beta row, a boundary ring on the support plane. Vertex
/// order is beta-major, alpha-minor; deterministic. Axisym states are revolved
/// with `revolve_n_alpha` azimuthal samples.
inline void export_mesh(const RadialField& field, const std::string& path,
                        int revolve_n_alpha = 64)
{
    const auto& g = field.grid;
    if (g.n != 2) throw config_error("mesh export requires n = 2");
    const int na = (g.backend == Backend::Sphere2d) ? g.n_alpha : revolve_n_alpha;
    if (na < 8) throw config_error("mesh export needs at least 8 azimuthal samples");
    const double da = 2.0 * std::numbers::pi / na;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_mesh: cannot open " + path);

    const Eigen::ArrayXd pole = phi_at_pole(field);
    const double rho_pole = std::exp(pole.mean());
    out << "v " << fmt17(0.0) << ' ' << fmt17(0.0) << ' ' << fmt17(rho_pole) << '\n';

    for (int ib = 0; ib < g.n_beta; ++ib) {
        const double sb = g.sin_beta(ib), cb = g.cos_beta(ib);
        for (int j = 0; j < na; ++j) {
            const int jc = (g.backend == Backend::Sphere2d) ? j : 0;
            const double rho = std::exp(field.phi(ib, jc));
            const double alpha = j * da;
            out << "v " << fmt17(rho * sb * std::cos(alpha)) << ' '
                << fmt17(rho * sb * std::sin(alpha)) << ' ' << fmt17(rho * cb) << '\n';
        }
    }
    const Eigen::ArrayXd R = boundary_radius(field);
    for (int j = 0; j < na; ++j) {
        const int jc = (g.backend == Backend::Sphere2d) ? j : 0;
        const double alpha = j * da;
        out << "v " << fmt17(R(jc) * std::cos(alpha)) << ' '
            << fmt17(R(jc) * std::sin(alpha)) << ' ' << fmt17(0.0) << '\n';
    }

    auto ring = [&](int level, int j) { return 2 + level * na + (j % na); };
    for (int j = 0; j < na; ++j) {
        out << "f 1 " << ring(0, j + 1) << ' ' << ring(0, j) << '\n';
    }
    for (int level = 0; level < g.n_beta; ++level) {  // last level joins boundary ring
        for (int j = 0; j < na; ++j) {
            const int a = ring(level, j), b = ring(level, j + 1);
            const int c = ring(level + 1, j + 1), d = ring(level + 1, j);
            out << "f " << a << ' ' << b << ' ' << c << '\n';
            out << "f " << a << ' ' << c << ' ' << d << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

namespace detail {

inline void write_series_header(std::ofstream& out, const FlowConfig& cfg)
{
    out << "# capflow series v1\n";
    out << "t,dt";
    for (int m = 0; m <= cfg.n + 1; ++m) out << ",V_" << m;
    out << ",min_F,max_F,min_kappa,max_kappa,min_ubar";
    for (int k = 1; k <= cfg.n; ++k) out << ",minkowski_residual_" << k;
    for (const auto& [k, l] : cfg.af_pairs) out << ",af_gap_" << k << '_' << l;
    out << ",max_rhs";
    const char* names[] = {"convexity",    "F_upper",      "ubarF_lower", "ubar_lower",
                           "barrier",      "conservation", "monotonicity"};
    for (const char* nm : names) out << ",ok_" << nm;
    out << '\n';
}

inline void write_series_row(std::ofstream& out, const FlowState& state,
                             const QuermassReport& rep, const CurvatureData& curv,
                             const MonitorReport& monitors, double max_rhs,
                             const FlowConfig& cfg)
{
    out << fmt17(state.t) << ',' << fmt17(state.dt_last);
    for (int m = 0; m <= cfg.n + 1; ++m) out << ',' << fmt17(rep.V(m));
    const Eigen::ArrayXd F = quotient_F(curv, cfg.flow_index);
    const Eigen::ArrayXd ubar = modified_support(curv, cfg.theta);
    out << ',' << fmt17(F.minCoeff()) << ',' << fmt17(F.maxCoeff());
    out << ',' << fmt17(curv.kappa.col(0).minCoeff()) << ','
        << fmt17(curv.kappa.col(curv.grid.n - 1).maxCoeff());
    out << ',' << fmt17(ubar.minCoeff());
    for (int k = 1; k <= cfg.n; ++k) out << ',' << fmt17(rep.minkowski_residual(k - 1));
    for (const auto& gap : rep.af_gaps) out << ',' << fmt17(gap.second);
    out << ',' << fmt17(max_rhs);
    for (const auto& e : monitors.entries) out << ',' << (e.violated ? 0 : 1);
    out << '\n';
}

inline nlohmann::ordered_json monitor_json(const MonitorReport& monitors)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : monitors.entries) {
        nlohmann::ordered_json m;
        m["name"] = e.name;
        m["worst_margin"] = e.worst_margin;
        m["worst_node"] = e.worst_node;
        m["violated"] = e.violated;
        if (e.violated) {
            m["first_violation_t"] = e.first_violation_t;
        } else {
            m["first_violation_t"] = nullptr;
        }
        arr.push_back(m);
    }
    return arr;
}

}  // namespace detail

inline int cmd_run(const std::string& config_path,
                   const std::optional<std::string>& out_override,
                   const std::optional<std::uint64_t>& seed_override, bool quiet)
{
    RunConfig cfg;
    try {
        cfg = parse_run_config(load_json(config_path));
        if (out_override) cfg.out_dir = *out_override;
        if (seed_override) cfg.seed = *seed_override;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    RadialField initial;
    try {
        initial = build_initial(cfg);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::filesystem::create_directories(cfg.out_dir);
    const auto opath = [&](const char* name) {
        return (std::filesystem::path(cfg.out_dir) / name).string();
    };

    std::ofstream series(opath("series.csv"));
    detail::write_series_header(series, cfg.flow);

    nlohmann::ordered_json report;
    report["schema_version"] = 1;
    report["n"] = cfg.flow.n;
    report["k"] = cfg.flow.flow_index;
    report["theta"] = cfg.flow.theta;
    report["backend"] = cfg.flow.backend == Backend::Axisym ? "axisym" : "sphere2d";
    report["n_beta"] = cfg.flow.n_beta;
    report["n_alpha"] = cfg.flow.n_alpha;
    report["seed"] = cfg.seed;

    auto finish = [&](int code, const std::string& status,
                      const std::string& failure = {}) {
        report["status"] = status;
        report["exit_code"] = code;
        if (!failure.empty()) report["failure"] = failure;
        std::ofstream rj(opath("report.json"));
        rj << report.dump(2) << '\n';
        if (!quiet) std::cout << "status: " << status << '\n';
        return code;
    };

    RunResult result;
    try {
        result = run_to_steady(initial, cfg.flow,
                               [&](const FlowState& s, const QuermassReport& rep,
                                   const CurvatureData& curv, const MonitorReport& mon,
                                   double max_rhs) {
                                   detail::write_series_row(series, s, rep, curv, mon,
                                                            max_rhs, cfg.flow);
                               });
    } catch (const numeric_failure& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return finish(kExitNumeric, "numeric_failure", e.what());
    }
    series.close();

    save_checkpoint(opath("final_state.ckpt"), result.state, cfg.flow.theta);
    if (cfg.export_mesh) {
        export_mesh(result.state.field, opath("final_state.obj"), cfg.mesh_n_alpha);
    }

    report["t_final"] = result.state.t;
    report["steps"] = result.state.step_count;
    report["max_rhs_final"] = result.max_rhs_final;
    report["r_fit"] = result.fit.r_fit;
    report["cap_sup_error"] = result.fit.sup_error;
    report["r_infinity_predicted"] = result.r_infinity_predicted;
    report["r_fit_error"] = std::abs(result.fit.r_fit - result.r_infinity_predicted);
    report["V_initial"] = std::vector<double>(
        result.initial_report.V.data(),
        result.initial_report.V.data() + result.initial_report.V.size());
    report["V_final"] = std::vector<double>(
        result.final_report.V.data(),
        result.final_report.V.data() + result.final_report.V.size());
    {
        nlohmann::ordered_json gaps = nlohmann::ordered_json::array();
        for (const auto& [pair, gap] : result.final_report.af_gaps) {
            gaps.push_back({{"k", pair.first}, {"l", pair.second}, {"gap", gap}});
        }
        report["af_gaps_final"] = gaps;
    }
    report["monitors"] = detail::monitor_json(result.monitors);

    if (!quiet) {
        std::cout << "t_final=" << result.state.t << " steps=" << result.state.step_count
                  << " r_fit=" << result.fit.r_fit
                  << " r_inf=" << result.r_infinity_predicted
                  << " cap_sup_error=" << result.fit.sup_error << '\n';
    }

    switch (result.status) {
        case RunStatus::Converged:
            return finish(kExitOk, "converged");
        case RunStatus::MonitorAbort:
            return finish(kExitMonitor, "monitor_abort", "monitor violation with abort");
        case RunStatus::ReachedTMax:
        default:
            return finish(kExitNotConverged, "t_max", "not converged by t_max");
    }
}

// ---------------------------------------------------------------------------
// cap-table
// ---------------------------------------------------------------------------

inline int cmd_cap_table(int n, const std::vector<double>& thetas,
                         const std::vector<double>& rs, int n_beta,
                         const std::string& out_dir, bool quiet)
{
    if (thetas.empty() || rs.empty()) {
        std::cerr << "config error: cap-table needs nonempty theta and r lists\n";
        return kExitConfig;
    }
    HalfSphereGrid grid;
    try {
        grid = build_grid(n, Backend::Axisym, n_beta);
        for (double th : thetas) check_theta(th);
        for (double r : rs) {
            if (!(r > 0.0)) throw std::invalid_argument("cap radius must be > 0");
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::filesystem::create_directories(out_dir);
    const std::string path =
        (std::filesystem::path(out_dir) / "cap_table.csv").string();
    std::ofstream out(path);
    out << "# capflow cap-table v1\n";
    out << "n,theta,r,m,V_numeric,V_exact,rel_error\n";
    double worst = 0.0;
    for (double th : thetas) {
        for (double r : rs) {
            const SphericalCap cap{r, th};
            const RadialField f = cap_field(grid, cap);
            const CurvatureData curv = curvature(f, th);
            for (int m = 0; m <= n + 1; ++m) {
                const double num = quermass(curv, f, th, m);
                const double exact = cap_quermass(cap, n, m);
                const double rel = std::abs(num - exact) / std::abs(exact);
                worst = std::max(worst, rel);
                out << n << ',' << fmt17(th) << ',' << fmt17(r) << ',' << m << ','
                    << fmt17(num) << ',' << fmt17(exact) << ',' << fmt17(rel) << '\n';
            }
        }
    }
    if (!quiet) std::cout << "cap table written to " << path << ", worst rel error "
                          << worst << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// af-check
// ---------------------------------------------------------------------------

inline int cmd_af_check(const std::string& config_path,
                        const std::optional<std::string>& out_override,
                        const std::optional<std::uint64_t>& seed_override, bool quiet)
{
    nlohmann::json j;
    int n, n_beta, samples;
    std::vector<double> thetas;
    double amplitude;
    std::uint64_t seed;
    std::string out_dir;
    try {
        j = load_json(config_path);
        n = capflow::detail::get_or(j, "n", 2);
        n_beta = capflow::detail::get_or(j, "n_beta", 200);
        samples = capflow::detail::get_or(j, "samples", 100);
        amplitude = capflow::detail::get_or(j, "amplitude", 0.05);
        seed = capflow::detail::get_or<std::uint64_t>(j, "seed", 0);
        out_dir = capflow::detail::get_or<std::string>(j, "out", ".");
        if (j.contains("thetas")) {
            for (const auto& t : j.at("thetas")) thetas.push_back(parse_theta(t));
        } else {
            thetas = {std::numbers::pi / 2.0, std::numbers::pi / 3.0};
        }
        if (samples < 1) throw config_error("samples must be >= 1");
        for (double th : thetas) check_theta(th);
        if (out_override) out_dir = *out_override;
        if (seed_override) seed = *seed_override;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const HalfSphereGrid grid = build_grid(n, Backend::Axisym, n_beta);
    std::filesystem::create_directories(out_dir);
    const std::string path = (std::filesystem::path(out_dir) / "af_audit.csv").string();
    std::ofstream out(path);
    out << "# capflow af-audit v1\n";
    out << "sample,theta,inequality,gap\n";

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-amplitude, amplitude);
    double min_gap = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        for (double th : thetas) {
            std::vector<PerturbationMode> modes;
            for (int m = 1; m <= 3; ++m) modes.push_back({m, 0, amp(rng)});
            RadialField f = perturbed_cap_field(grid, {1.0, th}, modes);
            CurvatureData curv = curvature(f, th);
            if (curv.kappa.col(0).minCoeff() <= 0.0) {
                f = convexify(f, th, 0.005);
                curv = curvature(f, th);
            }
            QuermassReport rep;
            rep.V.resize(n + 2);
            for (int m = 0; m <= n + 1; ++m) rep.V(m) = quermass(curv, f, th, m);
            for (int k = 1; k <= n; ++k) {
                for (int l = 0; l < k; ++l) {
                    const double gap = af_gap(rep.V(k), rep.V(l), k, l, n, th);
                    min_gap = std::min(min_gap, gap);
                    out << s << ',' << fmt17(th) << ",af_" << k << '_' << l << ','
                        << fmt17(gap) << '\n';
                }
            }
            const double mg = minkowski_inequality_gap(curv, f, th);
            min_gap = std::min(min_gap, mg);
            out << s << ',' << fmt17(th) << ",minkowski," << fmt17(mg) << '\n';
        }
    }
    if (!quiet) std::cout << "audit written to " << path << ", min gap " << min_gap
                          << '\n';
    if (min_gap < -1e-8) {
        std::cerr << "inequality audit failed: min gap " << min_gap << '\n';
        return kExitMonitor;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// minkowski-check
// ---------------------------------------------------------------------------

inline int cmd_minkowski_check(const std::string& config_path,
                               const std::optional<std::string>& out_override,
                               bool quiet)
{
    nlohmann::json j;
    int n;
    double theta, amplitude;
    std::vector<int> ladder;
    std::string out_dir, backend_name;
    try {
        j = load_json(config_path);
        n = capflow::detail::get_or(j, "n", 2);
        theta = j.contains("theta") ? parse_theta(j.at("theta")) : std::numbers::pi / 3.0;
        amplitude = capflow::detail::get_or(j, "amplitude", 0.05);
        out_dir = capflow::detail::get_or<std::string>(j, "out", ".");
        backend_name = capflow::detail::get_or<std::string>(j, "backend", "axisym");
        ladder = j.value("ladder", std::vector<int>{100, 200, 400, 800});
        if (ladder.size() < 2) throw config_error("ladder needs >= 2 resolutions");
        check_theta(theta);
        if (out_override) out_dir = *out_override;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    const Backend backend =
        backend_name == "sphere2d" ? Backend::Sphere2d : Backend::Axisym;

    std::filesystem::create_directories(out_dir);
    const std::string path =
        (std::filesystem::path(out_dir) / "minkowski_orders.csv").string();
    std::ofstream out(path);
    out << "# capflow minkowski-orders v1\n";
    out << "k,n_beta,residual,order\n";

    const bool cap_input = amplitude == 0.0;
    std::vector<std::vector<double>> res(n + 1);
    for (int n_beta : ladder) {
        const int n_alpha = backend == Backend::Sphere2d ? std::max(16, n_beta / 2) : 0;
        const HalfSphereGrid grid = build_grid(n, backend, n_beta, n_alpha);
        std::vector<PerturbationMode> modes{{1, 0, amplitude}, {2, 0, 0.4 * amplitude}};
        if (backend == Backend::Sphere2d) modes.push_back({1, 2, 0.3 * amplitude});
        const RadialField f = perturbed_cap_field(grid, {1.0, theta}, modes, 7);
        const CurvatureData curv = curvature(f, theta);
        for (int k = 1; k <= n; ++k) {
            res[k].push_back(std::abs(minkowski_residual(curv, theta, k)));
        }
    }
    bool ok = true;
    for (int k = 1; k <= n; ++k) {
        for (std::size_t i = 0; i < ladder.size(); ++i) {
            double order = std::numeric_limits<double>::quiet_NaN();
            if (i > 0 && res[k][i] > 0.0) {
                order = std::log2(res[k][i - 1] / res[k][i]);
            }
            out << k << ',' << ladder[i] << ',' << fmt17(res[k][i]) << ','
                << fmt17(order) << '\n';
            if (i + 1 == ladder.size() && !cap_input) {
                if (res[k][i] < 1e-10) continue;  // round-off floor, order meaningless
                if (!(order >= 1.7)) ok = false;
            }
        }
    }
    if (!quiet) std::cout << "orders written to " << path << '\n';
    if (!ok && !cap_input) {
        std::cerr << "minkowski residual convergence order below 1.7\n";
        return kExitMonitor;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// export-mesh / convexify
// ---------------------------------------------------------------------------

inline int cmd_export_mesh(const std::string& checkpoint_path,
                           const std::string& mesh_path, int revolve_n_alpha,
                           bool quiet)
{
    try {
        const Checkpoint ck = load_checkpoint(checkpoint_path);
        if (ck.state.field.grid.n != 2) {
            std::cerr << "config error: mesh export requires n = 2\n";
            return kExitConfig;
        }
        export_mesh(ck.state.field, mesh_path, revolve_n_alpha);
        if (!quiet) std::cout << "mesh written to " << mesh_path << '\n';
        return kExitOk;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}

inline int cmd_convexify(const std::string& config_path,
                         const std::optional<std::string>& out_override,
                         const std::optional<std::uint64_t>& seed_override, bool quiet)
{
    RunConfig cfg;
    double t_stop;
    try {
        const nlohmann::json j = load_json(config_path);
        cfg = parse_run_config(j);
        t_stop = capflow::detail::get_or(j, "t_stop", 0.01);
        if (!(t_stop > 0.0)) throw config_error("t_stop must be > 0");
        if (out_override) cfg.out_dir = *out_override;
        if (seed_override) cfg.seed = *seed_override;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    RadialField field;
    try {
        const HalfSphereGrid grid = cfg.flow.make_grid();
        if (const auto* file = std::get_if<InitialFile>(&cfg.initial)) {
            field = load_checkpoint(file->path).state.field;
        } else if (const auto* cap = std::get_if<InitialCap>(&cfg.initial)) {
            field = cap_field(grid, {cap->r, cfg.flow.theta});
        } else {
            const auto& pc = std::get<InitialPerturbedCap>(cfg.initial);
            // no strict-convexity gate here: producing it is the whole point
            field = perturbed_cap_field(grid, {pc.r, cfg.flow.theta}, pc.modes, cfg.seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::filesystem::create_directories(cfg.out_dir);
    try {
        const double min_kappa_before =
            curvature(field, cfg.flow.theta).kappa.col(0).minCoeff();
        const RadialField result = convexify(field, cfg.flow.theta, t_stop);
        const double min_kappa_after =
            curvature(result, cfg.flow.theta).kappa.col(0).minCoeff();
        FlowState state;
        state.t = t_stop;
        state.field = result;
        save_checkpoint(
            (std::filesystem::path(cfg.out_dir) / "convexified.ckpt").string(), state,
            cfg.flow.theta);
        if (!quiet) {
            std::cout << "min kappa " << min_kappa_before << " -> " << min_kappa_after
                      << '\n';
        }
        return kExitOk;
    } catch (const numeric_failure& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    }
}

}  // namespace capflow::cli
