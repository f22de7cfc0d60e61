#pragma once

// The full extremal system as a two-point boundary value problem
// (control elimination + single shooting) and costate reconstruction
// over a given admissible curve.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "varigauge/gauge.hpp"
#include "varigauge/geometry.hpp"

namespace varigauge {

inline constexpr std::uint64_t kShootingSeed = 0x73686f6fu;  // documented default

struct ShootingConfig {
    int N = 400;  // must be even
    double newton_tol = 1e-10;
    int max_newton = 50;
    double shoot_tol = 1e-8;
    int max_shoot = 100;
    std::vector<Eigen::VectorXd> initial_p0_guesses;  // default: 0 + 8 random
    std::uint64_t seed = kShootingSeed;

    void validate() const;
};

struct ExtremalSolution {
    LiftedCurve lifted;
    double res_admissibility = 0.0;  // Eq for dq/dt
    double res_costate = 0.0;        // Eq for dp/dt
    double res_stationarity = 0.0;   // dH/dz
    bool converged = false;
    Eigen::VectorXd p0_found;
    std::vector<double> guess_best_residuals;  // diagnostics, one per guess
};

struct Reconstruction {
    LiftedCurve lifted;
    Eigen::VectorXd beta;
    double lsq_residual = 0.0;
};

/// Newton solve of the stationarity condition p_i dpsi^i/dz^A =
/// dL/dz^A for the controls, Jacobian by central differences.
Eigen::VectorXd solve_controls(const ProblemSpec& spec, double t,
                               const Eigen::VectorXd& q,
                               const Eigen::VectorXd& p,
                               const Eigen::VectorXd& z_guess,
                               double newton_tol = 1e-10, int max_newton = 50);

struct ExtremalRhs {
    Eigen::VectorXd dq;
    Eigen::VectorXd dp;
    Eigen::VectorXd z;
};

ExtremalRhs extremal_rhs(const ProblemSpec& spec, double t,
                         const Eigen::VectorXd& q, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& z_warm,
                         double newton_tol = 1e-10, int max_newton = 50);

/// Damped Newton on p(t0) -> q(t1) - q1_target over the configured
/// initial guesses; the first converged guess (in list order) wins.
ExtremalSolution shoot(const ProblemSpec& spec, const Eigen::VectorXd& q0,
                       const Eigen::VectorXd& q1_target,
                       const ShootingConfig& cfg = {});

/// Costate reconstruction over a given admissible curve: particular
/// solution from p(t0) = 0, homogeneous family through the fundamental
/// matrix, beta fixed by least squares on the stationarity condition.
/// The residual doubles as the extremality certificate.
Reconstruction reconstruct_costates(
    const ProblemSpec& spec, const SampledCurve& base,
    const ShootingConfig& cfg = {},
    const std::optional<Eigen::MatrixXd>& A0 = std::nullopt);

}  // namespace varigauge
