#include "varigauge/variation.hpp"

#include <cmath>

#include "varigauge/numerics.hpp"

namespace varigauge {

namespace {

void require_admissible(const ProblemSpec& spec, const SampledCurve& base) {
    auto report = check_admissible(spec, base, 1e-6);
    if (!report.admissible)
        throw std::invalid_argument(
            "base curve is not admissible (max_residual = " +
            std::to_string(report.max_residual) + ")");
}

// Base state at node k, node k+1 or their midpoint (linear
// interpolation).
struct BaseSampler {
    const SampledCurve& base;

    void at(int k, double frac, Eigen::VectorXd& q, Eigen::VectorXd& z) const {
        if (frac == 0.0) {
            q = base.q.row(k);
            z = base.z.row(k);
        } else if (frac == 1.0) {
            q = base.q.row(k + 1);
            z = base.z.row(k + 1);
        } else {
            q = (1.0 - frac) * base.q.row(k) + frac * base.q.row(k + 1);
            z = (1.0 - frac) * base.z.row(k) + frac * base.z.row(k + 1);
        }
    }
};

}  // namespace

InfinitesimalDeformation variational_flow(const ProblemSpec& spec,
                                          const SampledCurve& base,
                                          const Eigen::MatrixXd& Gamma,
                                          const Eigen::VectorXd& X0) {
    require_admissible(spec, base);
    if (Gamma.rows() != base.N + 1 || Gamma.cols() != spec.r)
        throw std::invalid_argument("Gamma does not match the base grid");
    if (X0.size() != spec.n)
        throw std::invalid_argument("X0 has wrong dimension");

    const double h = base.h();
    BaseSampler sampler{base};
    Eigen::VectorXd q(spec.n), z(spec.r);

    auto rhs = [&](int k, double frac, const Eigen::VectorXd& X) {
        sampler.at(k, frac, q, z);
        double t = base.time(k) + frac * h;
        auto x = pack_point(spec, t, q, z);
        Eigen::VectorXd g = (1.0 - frac) * Gamma.row(k) + frac * Gamma.row(k + 1);
        return (psi_jacobian_q(spec, x) * X + psi_jacobian_z(spec, x) * g)
            .eval();
    };

    InfinitesimalDeformation def;
    def.Gamma = Gamma;
    def.X.resize(base.N + 1, spec.n);
    Eigen::VectorXd X = X0;
    def.X.row(0) = X;
    for (int k = 0; k < base.N; ++k) {
        Eigen::VectorXd k1 = rhs(k, 0.0, X);
        Eigen::VectorXd k2 = rhs(k, 0.5, X + 0.5 * h * k1);
        Eigen::VectorXd k3 = rhs(k, 0.5, X + 0.5 * h * k2);
        Eigen::VectorXd k4 = rhs(k, 1.0, X + h * k3);
        X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        def.X.row(k + 1) = X;
    }
    return def;
}

FundamentalMatrix fundamental_matrix(const ProblemSpec& spec,
                                     const SampledCurve& base,
                                     const Eigen::MatrixXd& A0) {
    require_admissible(spec, base);
    if (A0.rows() != spec.n || A0.cols() != spec.n)
        throw std::invalid_argument("A0 must be n x n");
    if (std::abs(A0.determinant()) <=
        1e-12 * std::pow(std::max(A0.norm(), 1.0), spec.n))
        throw std::invalid_argument("A0 is singular");

    const double h = base.h();
    BaseSampler sampler{base};
    Eigen::VectorXd q(spec.n), z(spec.r);

    auto rhs = [&](int k, double frac, const Eigen::MatrixXd& A) {
        sampler.at(k, frac, q, z);
        double t = base.time(k) + frac * h;
        auto x = pack_point(spec, t, q, z);
        return (-A * psi_jacobian_q(spec, x)).eval();
    };

    FundamentalMatrix out;
    out.A0 = A0;
    out.A.reserve(static_cast<std::size_t>(base.N + 1));
    Eigen::MatrixXd A = A0;
    out.A.push_back(A);
    for (int k = 0; k < base.N; ++k) {
        Eigen::MatrixXd k1 = rhs(k, 0.0, A);
        Eigen::MatrixXd k2 = rhs(k, 0.5, A + 0.5 * h * k1);
        Eigen::MatrixXd k3 = rhs(k, 0.5, A + 0.5 * h * k2);
        Eigen::MatrixXd k4 = rhs(k, 1.0, A + h * k3);
        A += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (std::abs(A.determinant()) < 1e-12 * std::pow(A.norm(), spec.n))
            throw std::runtime_error(
                "fundamental matrix became singular along the flow "
                "(internal inconsistency)");
        out.A.push_back(A);
    }
    return out;
}

FundamentalMatrix fundamental_matrix(const ProblemSpec& spec,
                                     const SampledCurve& base) {
    return fundamental_matrix(spec, base,
                              Eigen::MatrixXd::Identity(spec.n, spec.n));
}

Eigen::VectorXd endpoint_functional(const ProblemSpec& spec,
                                    const SampledCurve& base,
                                    const FundamentalMatrix& A,
                                    const Eigen::MatrixXd& Gamma) {
    if (static_cast<int>(A.A.size()) != base.N + 1)
        throw std::invalid_argument("fundamental matrix does not match grid");
    if (Gamma.rows() != base.N + 1 || Gamma.cols() != spec.r)
        throw std::invalid_argument("Gamma does not match the base grid");

    Eigen::MatrixXd integrand(base.N + 1, spec.n);
    for (int k = 0; k <= base.N; ++k) {
        Eigen::VectorXd q = base.q.row(k);
        Eigen::VectorXd z = base.z.row(k);
        auto x = pack_point(spec, base.time(k), q, z);
        integrand.row(k) = A.A[static_cast<std::size_t>(k)] *
                           psi_jacobian_z(spec, x) * Gamma.row(k).transpose();
    }
    Eigen::VectorXd out(spec.n);
    for (int i = 0; i < spec.n; ++i)
        out[i] = simpson(integrand.col(i), base.h());
    return out;
}

DeformationReport check_infinitesimal_admissibility(
    const ProblemSpec& spec, const SampledCurve& base,
    const InfinitesimalDeformation& def, double tol) {
    if (def.X.rows() != base.N + 1 || def.Gamma.rows() != base.N + 1)
        throw std::invalid_argument("deformation does not match the base grid");

    Eigen::MatrixXd dX = grid_derivative(def.X, base.h());
    DeformationReport report;
    report.residual_profile.resize(base.N + 1);
    for (int k = 0; k <= base.N; ++k) {
        Eigen::VectorXd q = base.q.row(k);
        Eigen::VectorXd z = base.z.row(k);
        auto x = pack_point(spec, base.time(k), q, z);
        Eigen::VectorXd expected =
            psi_jacobian_q(spec, x) * def.X.row(k).transpose() +
            psi_jacobian_z(spec, x) * def.Gamma.row(k).transpose();
        report.residual_profile[k] =
            (dX.row(k).transpose() - expected).cwiseAbs().maxCoeff();
    }
    report.max_residual = report.residual_profile.maxCoeff();
    report.admissible = report.max_residual <= tol;
    return report;
}

}  // namespace varigauge
