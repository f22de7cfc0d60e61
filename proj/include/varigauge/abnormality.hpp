#pragma once

// Abnormality index of an admissible curve: dimension of the space of
// costate paths solving the homogeneous adjoint system, plus the
// uniqueness check for normal extremals.

#include <Eigen/Dense>
#include <vector>

#include "varigauge/geometry.hpp"
#include "varigauge/pontryagin.hpp"

namespace varigauge {

struct AbnormalityReport {
    int index = 0;
    // Each basis element is a costate path (N+1) x n, p = beta^T A,
    // with the beta vectors orthonormal.
    std::vector<Eigen::MatrixXd> basis_paths;
    Eigen::MatrixXd basis_beta;  // n x index, orthonormal columns
    Eigen::VectorXd singular_values;
};

struct UniquenessReport {
    int index = 0;
    double disagreement = 0.0;         // sup-norm gap of the two lifts
    double projected_residual = 0.0;   // gap after removing abnormal span
    bool consistent = false;
};

/// Every homogeneous costate solution is p = beta^T A; the index is
/// the null-space dimension of the stacked stationarity constraints
/// (rank cut sigma > svd_tol * sigma_max, default 1e-8).
AbnormalityReport abnormality_index(const ProblemSpec& spec,
                                    const SampledCurve& base,
                                    double svd_tol = 1e-8);

/// Reconstructs costates twice with different random non-singular
/// initial matrices; normal curves must agree in sup-norm, abnormal
/// ones modulo the homogeneous solution space.
UniquenessReport verify_normal_uniqueness(const ProblemSpec& spec,
                                          const SampledCurve& base,
                                          const ShootingConfig& cfg = {},
                                          std::uint64_t seed = 0x616e6f6du);

}  // namespace varigauge
