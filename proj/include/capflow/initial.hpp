#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "capflow/caps.hpp"
#include "capflow/field.hpp"
#include "capflow/grid.hpp"

namespace capflow {

/// One perturbation mode added to log rho of a cap. The polar profile
/// cos(2 m beta) has vanishing normal derivative at both ends, so the
/// capillary and pole conditions hold to leading order in the amplitude.
/// On the 2-D grid an azimuthal factor sin^j(beta) cos(j alpha + phase)
/// keeps the mode smooth at the pole (it is the polar form of a degree-j
/// spherical-harmonic-like function).
struct PerturbationMode {
    int beta_freq = 1;     // m >= 0: polar profile cos(2 m beta)
    int azimuth_freq = 0;  // j >= 0: azimuthal wave number (0 = axisymmetric)
    double amplitude = 0.0;
};

/// Cap plus a superposition of perturbation modes; azimuthal phases are drawn
/// deterministically from the seed so runs are reproducible.
[[nodiscard]] inline RadialField perturbed_cap_field(const HalfSphereGrid& grid,
                                                     const SphericalCap& cap,
                                                     const std::vector<PerturbationMode>& modes,
                                                     std::uint64_t seed = 0)
{
    RadialField f = cap_field(grid, cap);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 2.0 * std::numbers::pi);
    for (const auto& mode : modes) {
        const double phase = (mode.azimuth_freq > 0) ? unif(rng) : 0.0;
        for (int ib = 0; ib < grid.n_beta; ++ib) {
            const double beta = grid.beta(ib);
            const double polar = std::cos(2.0 * mode.beta_freq * beta);
            if (grid.backend == Backend::Axisym || mode.azimuth_freq == 0) {
                f.phi.row(ib) += mode.amplitude * polar;
            } else {
                const double env =
                    std::pow(grid.sin_beta(ib), mode.azimuth_freq) * polar;
                for (int jc = 0; jc < grid.cols(); ++jc) {
                    const double alpha = grid.dalpha * jc;
                    f.phi(ib, jc) += mode.amplitude * env *
                                     std::cos(mode.azimuth_freq * alpha + phase);
                }
            }
        }
    }
    return f;
}

}  // namespace capflow
