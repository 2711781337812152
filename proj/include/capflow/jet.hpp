#pragma once

#include <Eigen/Dense>

#include "capflow/field.hpp"
#include "capflow/grid.hpp"

namespace capflow {

/// Second-order finite-difference jet of the radial function in the
/// orthonormal frame of the round metric: gradient (db, da) and covariant
/// Hessian (hbb, hba, haa), plus v = sqrt(1 + |grad|^2) and r = e^phi.
struct SurfaceJet {
    HalfSphereGrid grid;
    double theta = 0.0;
    Eigen::ArrayXXd phi;
    Eigen::ArrayXXd db, da;        // orthonormal gradient components
    Eigen::ArrayXXd hbb, hba, haa; // orthonormal covariant Hessian
    Eigen::ArrayXXd v, r;
};

[[nodiscard]] inline SurfaceJet jet(const RadialField& field, double theta)
{
    const auto& g = field.grid;
    const int nb = g.n_beta;
    const int nc = g.cols();
    const double h = g.dbeta;

    const Eigen::ArrayXXd p = with_ghosts(field, theta);

    SurfaceJet out;
    out.grid = g;
    out.theta = theta;
    out.phi = field.phi;
    out.db = (p.middleRows(2, nb) - p.middleRows(0, nb)) / (2.0 * h);
    out.hbb = (p.middleRows(2, nb) - 2.0 * p.middleRows(1, nb) + p.middleRows(0, nb)) /
              (h * h);

    if (g.backend == Backend::Axisym) {
        out.da = Eigen::ArrayXXd::Zero(nb, 1);
        out.hba = Eigen::ArrayXXd::Zero(nb, 1);
        out.haa = (g.cot_beta * out.db.col(0)).eval();
    } else {
        const int na = g.n_alpha;
        const double da2 = 2.0 * g.dalpha;
        const double daa = g.dalpha * g.dalpha;
        Eigen::ArrayXXd dalpha_raw(nb, na), daalpha_raw(nb, na), dbda_raw(nb, na);
        for (int j = 0; j < na; ++j) {
            const int jm = (j + na - 1) % na;
            const int jp = (j + 1) % na;
            dalpha_raw.col(j) = (p.block(1, jp, nb, 1) - p.block(1, jm, nb, 1)) / da2;
            daalpha_raw.col(j) = (p.block(1, jp, nb, 1) - 2.0 * p.block(1, j, nb, 1) +
                                  p.block(1, jm, nb, 1)) /
                                 daa;
            dbda_raw.col(j) = (p.block(2, jp, nb, 1) - p.block(2, jm, nb, 1) -
                               p.block(0, jp, nb, 1) + p.block(0, jm, nb, 1)) /
                              (2.0 * h * da2);
        }
        out.da = dalpha_raw.colwise() / g.sin_beta;
        out.hba = (dbda_raw - dalpha_raw.colwise() * g.cot_beta).colwise() / g.sin_beta;
        out.haa = daalpha_raw.colwise() / g.sin_beta.square() +
                  out.db.colwise() * g.cot_beta;
    }

    out.v = (1.0 + out.db.square() + out.da.square()).sqrt();
    out.r = field.phi.exp();
    return out;
}

}  // namespace capflow
