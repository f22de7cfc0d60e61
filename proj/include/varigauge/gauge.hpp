#pragma once

// Gauge action on Lagrangian representatives, gauge-equivalence
// testing, the Pontryagin Hamiltonian and the action functionals.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "varigauge/geometry.hpp"

namespace varigauge {

/// Gauge function f(t, q1..qn); must not reference controls.
struct GaugeFunction {
    Expression f;

    static GaugeFunction parse(std::string_view source, int n);
};

/// Admissible curve lifted by costates p_i on the same grid.
struct LiftedCurve {
    SampledCurve base;
    Eigen::MatrixXd p;  // (N+1) x n
};

struct PPCEvaluation {
    double hamiltonian = 0.0;
    double p0 = 0.0;  // always -hamiltonian
    double theta_dt_coefficient = 0.0;
};

struct GaugeVerdict {
    bool equivalent = false;
    double max_residual = 0.0;
};

inline constexpr std::uint64_t kGaugeTrialSeed = 0x76617269u;  // documented default

/// L' = L + df/dt + sum_i (df/dq^i) psi^i, composed symbolically.
ProblemSpec gauge_transform(const ProblemSpec& spec, const GaugeFunction& f);

/// Sampling-based equivalence verdict: the Lagrangian difference must
/// fit a(t,q) + b_i(t,q) psi^i over the control samples and the fitted
/// coefficients must satisfy da/dq^i = db_i/dt and db_i/dq^j =
/// db_j/dq^i (finite differences) at every trial point.
GaugeVerdict gauge_equivalent(const ProblemSpec& specA,
                              const ProblemSpec& specB, int trial_points,
                              double tol,
                              std::uint64_t seed = kGaugeTrialSeed);

/// H = p_i psi^i - L; when a velocity is supplied the dt-coefficient
/// of the Pontryagin-Poincare-Cartan form along (1, qdot) is reported,
/// i.e. L + p_i (qdot^i - psi^i).
PPCEvaluation pontryagin_hamiltonian(
    const ProblemSpec& spec, double t, const Eigen::VectorXd& q,
    const Eigen::VectorXd& p, const Eigen::VectorXd& z,
    const std::optional<Eigen::VectorXd>& qdot = std::nullopt);

/// Simpson quadrature of L along the curve.
double action(const ProblemSpec& spec, const SampledCurve& curve);

/// Simpson quadrature of p_i dq^i/dt - H along the lifted curve.
double ppc_action(const ProblemSpec& spec, const LiftedCurve& lifted);

}  // namespace varigauge
