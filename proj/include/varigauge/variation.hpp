#pragma once

// Variational equation along an admissible base curve: infinitesimal
// deformations, the fundamental matrix and the endpoint functional.

#include <Eigen/Dense>
#include <vector>

#include "varigauge/geometry.hpp"

namespace varigauge {

struct InfinitesimalDeformation {
    Eigen::MatrixXd X;      // (N+1) x n
    Eigen::MatrixXd Gamma;  // (N+1) x r
};

/// Non-singular solution A(t) of dA/dt + A (dpsi/dq) = 0 along the
/// base curve, sampled on its grid.
struct FundamentalMatrix {
    std::vector<Eigen::MatrixXd> A;  // N+1 entries, each n x n
    Eigen::MatrixXd A0;
};

struct DeformationReport {
    double max_residual = 0.0;
    Eigen::VectorXd residual_profile;
    bool admissible = false;
};

/// RK4 on dX/dt = (dpsi/dq) X + (dpsi/dz) Gamma with coefficients
/// along the base curve; between nodes the base state and Gamma are
/// linearly interpolated, which sets an O(h^2) accuracy floor on
/// coarse grids. Refuses a base that fails admissibility at 1e-6.
InfinitesimalDeformation variational_flow(const ProblemSpec& spec,
                                          const SampledCurve& base,
                                          const Eigen::MatrixXd& Gamma,
                                          const Eigen::VectorXd& X0);

FundamentalMatrix fundamental_matrix(const ProblemSpec& spec,
                                     const SampledCurve& base,
                                     const Eigen::MatrixXd& A0);
FundamentalMatrix fundamental_matrix(const ProblemSpec& spec,
                                     const SampledCurve& base);

/// Simpson quadrature of A (dpsi/dz) Gamma; a deformation started at
/// X(t0) = 0 closes at t1 iff this vanishes.
Eigen::VectorXd endpoint_functional(const ProblemSpec& spec,
                                    const SampledCurve& base,
                                    const FundamentalMatrix& A,
                                    const Eigen::MatrixXd& Gamma);

/// Residual of the variational equation with dX/dt by the 4th-order
/// stencil.
DeformationReport check_infinitesimal_admissibility(
    const ProblemSpec& spec, const SampledCurve& base,
    const InfinitesimalDeformation& def, double tol);

}  // namespace varigauge
