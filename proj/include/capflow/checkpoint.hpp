#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

#include "capflow/field.hpp"
#include "capflow/flow.hpp"
#include "capflow/grid.hpp"

namespace capflow {

/// Plain-text checkpoint of a flow state. Every floating-point value is
/// written with %.17g, so a write/read round trip reproduces the doubles
/// bit for bit and a resumed run is step-for-step identical.
inline void save_checkpoint(const std::string& path, const FlowState& state,
                            double theta)
{
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (fp == nullptr) {
        throw std::runtime_error("save_checkpoint: cannot open " + path);
    }
    const auto& g = state.field.grid;
    std::fprintf(fp, "capflow-checkpoint 1\n");
    std::fprintf(fp, "n %d\n", g.n);
    std::fprintf(fp, "backend %s\n",
                 g.backend == Backend::Axisym ? "axisym" : "sphere2d");
    std::fprintf(fp, "n_beta %d\n", g.n_beta);
    std::fprintf(fp, "n_alpha %d\n", g.n_alpha);
    std::fprintf(fp, "theta %.17g\n", theta);
    std::fprintf(fp, "t %.17g\n", state.t);
    std::fprintf(fp, "dt_last %.17g\n", state.dt_last);
    std::fprintf(fp, "step_count %ld\n", state.step_count);
    std::fprintf(fp, "phi\n");
    for (int jc = 0; jc < g.cols(); ++jc) {
        for (int ib = 0; ib < g.n_beta; ++ib) {
            std::fprintf(fp, "%.17g\n", state.field.phi(ib, jc));
        }
    }
    std::fclose(fp);
}

struct Checkpoint {
    FlowState state;
    double theta = 0.0;
};

[[nodiscard]] inline Checkpoint load_checkpoint(const std::string& path)
{
    std::FILE* fp = std::fopen(path.c_str(), "r");
    if (fp == nullptr) {
        throw std::runtime_error("load_checkpoint: cannot open " + path);
    }
    auto fail = [&](const std::string& what) -> std::runtime_error {
        std::fclose(fp);
        return std::runtime_error("load_checkpoint: " + what + " in " + path);
    };
    int version = 0;
    if (std::fscanf(fp, "capflow-checkpoint %d\n", &version) != 1 || version != 1) {
        throw fail("bad header");
    }
    int n = 0, n_beta = 0, n_alpha = 0;
    char backend_name[16] = {0};
    Checkpoint ck;
    long step_count = 0;
    if (std::fscanf(fp, "n %d\n", &n) != 1 ||
        std::fscanf(fp, "backend %15s\n", backend_name) != 1 ||
        std::fscanf(fp, "n_beta %d\n", &n_beta) != 1 ||
        std::fscanf(fp, "n_alpha %d\n", &n_alpha) != 1 ||
        std::fscanf(fp, "theta %lg\n", &ck.theta) != 1 ||
        std::fscanf(fp, "t %lg\n", &ck.state.t) != 1 ||
        std::fscanf(fp, "dt_last %lg\n", &ck.state.dt_last) != 1 ||
        std::fscanf(fp, "step_count %ld\n", &step_count) != 1 ||
        std::fscanf(fp, "phi\n") != 0) {
        throw fail("malformed header fields");
    }
    ck.state.step_count = step_count;
    const std::string name(backend_name);
    Backend backend;
    if (name == "axisym") {
        backend = Backend::Axisym;
    } else if (name == "sphere2d") {
        backend = Backend::Sphere2d;
    } else {
        throw fail("unknown backend '" + name + "'");
    }
    HalfSphereGrid grid = build_grid(n, backend, n_beta, n_alpha);
    ck.state.field = RadialField::zero(grid);
    for (int jc = 0; jc < grid.cols(); ++jc) {
        for (int ib = 0; ib < grid.n_beta; ++ib) {
            if (std::fscanf(fp, "%lg\n", &ck.state.field.phi(ib, jc)) != 1) {
                throw fail("truncated phi block");
            }
        }
    }
    std::fclose(fp);
    return ck;
}

}  // namespace capflow
