#pragma once

// Event space, parametric constraint manifold q' = psi(t, q, z) and
// admissibility of sampled curves.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "varigauge/expr.hpp"

namespace varigauge {

/// Full problem datum: dimensions, constraints psi^i, Lagrangian,
/// optional implicit constraints and gauge function, time interval.
///
/// Symbol convention: constraint and Lagrangian expressions are
/// declared over {t, q1..qn, z1..zr}; implicit constraints over
/// {t, q1..qn, qd1..qdn}; the gauge function over {t, q1..qn}.
struct ProblemSpec {
    int n = 0;
    int r = 0;
    double t0 = 0.0;
    double t1 = 1.0;
    std::vector<Expression> psi;
    Expression lagrangian;
    std::optional<std::vector<Expression>> implicit_constraints;
    std::optional<Expression> gauge;

    /// Symbol order shared by psi and the Lagrangian.
    static std::vector<std::string> symbol_set(int n, int r);
    std::vector<std::string> symbols() const { return symbol_set(n, r); }

    void validate() const;
};

/// Uniformly sampled section: q (and optionally z) on N+1 grid nodes.
struct SampledCurve {
    double t0 = 0.0;
    double t1 = 1.0;
    int N = 0;
    Eigen::MatrixXd q;  // (N+1) x n
    Eigen::MatrixXd z;  // (N+1) x r, zero columns when absent

    bool has_z() const { return z.cols() > 0; }
    double h() const { return (t1 - t0) / N; }
    double time(int k) const { return t0 + k * h(); }
};

struct AdmissibilityReport {
    double max_residual = 0.0;
    Eigen::VectorXd residual_profile;  // per node, max over components
    bool admissible = false;
};

/// Numerical rank of the n x r Jacobian d(psi)/d(z) at a point, via
/// singular values with relative cutoff 1e-10.
int check_rank(const ProblemSpec& spec, const EvalPoint& point);
int check_rank(const ProblemSpec& spec, double t, const Eigen::VectorXd& q,
               const Eigen::VectorXd& z);

/// Residual of dq/dt = psi along the curve, derivative by 4th-order
/// stencils. If implicit constraints are present, their consistency
/// with the parametric form is verified on the grid (1e-9) first.
AdmissibilityReport check_admissible(const ProblemSpec& spec,
                                     const SampledCurve& curve, double tol);

/// Classical fixed-step RK4 for dq/dt = psi(t, q, controls(t)); the
/// returned curve carries the controls sampled at the grid nodes.
SampledCurve integrate_admissible(
    const ProblemSpec& spec, const Eigen::VectorXd& q0,
    const std::function<Eigen::VectorXd(double)>& controls, int N);

// Pointwise constraint/Lagrangian evaluation helpers shared by the
// variational and extremal machinery. `x` packs (t, q, z) in symbol
// order; see pack_point.
std::vector<double> pack_point(const ProblemSpec& spec, double t,
                               const Eigen::VectorXd& q,
                               const Eigen::VectorXd& z);
Eigen::VectorXd psi_value(const ProblemSpec& spec, std::span<const double> x);
Eigen::MatrixXd psi_jacobian_q(const ProblemSpec& spec,
                               std::span<const double> x);
Eigen::MatrixXd psi_jacobian_z(const ProblemSpec& spec,
                               std::span<const double> x);
double lagrangian_value(const ProblemSpec& spec, std::span<const double> x);
Eigen::VectorXd lagrangian_grad_q(const ProblemSpec& spec,
                                  std::span<const double> x);
Eigen::VectorXd lagrangian_grad_z(const ProblemSpec& spec,
                                  std::span<const double> x);

}  // namespace varigauge
