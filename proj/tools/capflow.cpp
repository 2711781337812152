#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "capflow/cli.hpp"
#include "capflow/runconfig.hpp"

namespace {

std::vector<double> parse_theta_list(const std::vector<std::string>& raw)
{
    std::vector<double> out;
    for (const auto& s : raw) out.push_back(capflow::parse_theta(nlohmann::json(s)));
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    if (const char* threads = std::getenv("CAPFLOW_THREADS")) {
        Eigen::setNbThreads(std::max(1, std::atoi(threads)));
    }

    CLI::App app{"Numerical laboratory for locally constrained inverse curvature "
                 "flows of convex capillary hypersurfaces in the half-space"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint_path, mesh_path;
    std::optional<std::string> out_override;
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;
    app.add_flag("--quiet", quiet, "suppress informational output");

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config) {
            cmd->add_option("--config", config_path, "JSON config file")->required();
        }
        cmd->add_option_function<std::string>(
            "--out", [&](const std::string& v) { out_override = v; },
            "output directory (overrides config)");
        cmd->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t v) { seed_override = v; },
            "RNG seed (overrides config)");
    };

    auto* run = app.add_subcommand("run", "integrate the flow to steady state");
    add_common(run, true);

    auto* cap_table = app.add_subcommand("cap-table",
                                         "compare numeric quermassintegrals of "
                                         "spherical caps against closed forms");
    int ct_n = 2, ct_n_beta = 400;
    std::vector<std::string> ct_thetas;
    std::vector<double> ct_rs;
    std::string ct_out = ".";
    cap_table->add_option("--n", ct_n, "hypersurface dimension");
    cap_table->add_option("--theta", ct_thetas, "contact angles (radians or pi/k)");
    cap_table->add_option("--r", ct_rs, "cap radii");
    cap_table->add_option("--n-beta", ct_n_beta, "polar resolution");
    cap_table->add_option("--out", ct_out, "output directory");

    auto* af = app.add_subcommand("af-check",
                                  "audit the Alexandrov-Fenchel and Minkowski "
                                  "inequalities on seeded convex samples");
    add_common(af, true);

    auto* mink = app.add_subcommand("minkowski-check",
                                    "Minkowski identity residual refinement ladder");
    add_common(mink, true);

    auto* mesh = app.add_subcommand("export-mesh", "triangulate a checkpoint (n = 2)");
    int mesh_n_alpha = 64;
    mesh->add_option("--checkpoint", checkpoint_path, "input checkpoint")->required();
    mesh->add_option("--path", mesh_path, "output mesh file")->required();
    mesh->add_option("--n-alpha", mesh_n_alpha, "azimuthal samples for axisym revolve");

    auto* convex = app.add_subcommand("convexify",
                                      "short mean-curvature-flow run making a weakly "
                                      "convex field strictly convex");
    add_common(convex, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : capflow::cli::kExitConfig;
    }

    try {
        if (run->parsed()) {
            return capflow::cli::cmd_run(config_path, out_override, seed_override, quiet);
        }
        if (cap_table->parsed()) {
            return capflow::cli::cmd_cap_table(ct_n, parse_theta_list(ct_thetas), ct_rs,
                                               ct_n_beta, ct_out, quiet);
        }
        if (af->parsed()) {
            return capflow::cli::cmd_af_check(config_path, out_override, seed_override,
                                              quiet);
        }
        if (mink->parsed()) {
            return capflow::cli::cmd_minkowski_check(config_path, out_override, quiet);
        }
        if (mesh->parsed()) {
            return capflow::cli::cmd_export_mesh(checkpoint_path, mesh_path,
                                                 mesh_n_alpha, quiet);
        }
        if (convex->parsed()) {
            return capflow::cli::cmd_convexify(config_path, out_override, seed_override,
                                               quiet);
        }
    } catch (const capflow::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return capflow::cli::kExitConfig;
    } catch (const capflow::numeric_failure& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return capflow::cli::kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return capflow::cli::kExitNumeric;
    }
    return capflow::cli::kExitConfig;
}
