#include "varigauge/geometry.hpp"

#include <cmath>

#include "varigauge/numerics.hpp"

namespace varigauge {

std::vector<std::string> ProblemSpec::symbol_set(int n, int r) {
    std::vector<std::string> syms;
    syms.reserve(static_cast<std::size_t>(1 + n + r));
    syms.emplace_back("t");
    for (int i = 1; i <= n; ++i) syms.push_back("q" + std::to_string(i));
    for (int a = 1; a <= r; ++a) syms.push_back("z" + std::to_string(a));
    return syms;
}

void ProblemSpec::validate() const {
    if (n < 1) throw std::invalid_argument("state dimension n must be >= 1");
    if (r < 1 || r > n)
        throw std::invalid_argument("control dimension r must satisfy 1 <= r <= n");
    if (!(t0 < t1)) throw std::invalid_argument("interval must have t0 < t1");
    if (static_cast<int>(psi.size()) != n)
        throw std::invalid_argument("psi must list exactly n expressions");
    if (!lagrangian.valid())
        throw std::invalid_argument("lagrangian expression missing");
    if (implicit_constraints &&
        static_cast<int>(implicit_constraints->size()) != n - r)
        throw std::invalid_argument(
            "implicit constraint list must have n - r entries");
    if (gauge) {
        for (int a = 1; a <= r; ++a)
            if (gauge->references("z" + std::to_string(a)))
                throw std::invalid_argument(
                    "gauge function must not reference controls");
    }
}

std::vector<double> pack_point(const ProblemSpec& spec, double t,
                               const Eigen::VectorXd& q,
                               const Eigen::VectorXd& z) {
    std::vector<double> x(static_cast<std::size_t>(1 + spec.n + spec.r));
    x[0] = t;
    for (int i = 0; i < spec.n; ++i) x[static_cast<std::size_t>(1 + i)] = q[i];
    for (int a = 0; a < spec.r; ++a)
        x[static_cast<std::size_t>(1 + spec.n + a)] = z[a];
    return x;
}

Eigen::VectorXd psi_value(const ProblemSpec& spec, std::span<const double> x) {
    Eigen::VectorXd v(spec.n);
    for (int i = 0; i < spec.n; ++i)
        v[i] = spec.psi[static_cast<std::size_t>(i)].eval(x);
    return v;
}

namespace {

Eigen::MatrixXd expr_jacobian(const std::vector<Expression>& exprs,
                              std::span<const double> x, int first, int count) {
    Eigen::MatrixXd J(static_cast<Eigen::Index>(exprs.size()), count);
    std::vector<int> idx(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) idx[static_cast<std::size_t>(j)] = first + j;
    std::vector<double> grad(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < exprs.size(); ++i) {
        exprs[i].eval_grad(x, idx, grad);
        for (int j = 0; j < count; ++j)
            J(static_cast<Eigen::Index>(i), j) = grad[static_cast<std::size_t>(j)];
    }
    return J;
}

}  // namespace

Eigen::MatrixXd psi_jacobian_q(const ProblemSpec& spec,
                               std::span<const double> x) {
    return expr_jacobian(spec.psi, x, 1, spec.n);
}

Eigen::MatrixXd psi_jacobian_z(const ProblemSpec& spec,
                               std::span<const double> x) {
    return expr_jacobian(spec.psi, x, 1 + spec.n, spec.r);
}

double lagrangian_value(const ProblemSpec& spec, std::span<const double> x) {
    return spec.lagrangian.eval(x);
}

Eigen::VectorXd lagrangian_grad_q(const ProblemSpec& spec,
                                  std::span<const double> x) {
    std::vector<int> idx(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) idx[static_cast<std::size_t>(i)] = 1 + i;
    std::vector<double> grad(static_cast<std::size_t>(spec.n));
    spec.lagrangian.eval_grad(x, idx, grad);
    return Eigen::Map<Eigen::VectorXd>(grad.data(), spec.n);
}

Eigen::VectorXd lagrangian_grad_z(const ProblemSpec& spec,
                                  std::span<const double> x) {
    std::vector<int> idx(static_cast<std::size_t>(spec.r));
    for (int a = 0; a < spec.r; ++a)
        idx[static_cast<std::size_t>(a)] = 1 + spec.n + a;
    std::vector<double> grad(static_cast<std::size_t>(spec.r));
    spec.lagrangian.eval_grad(x, idx, grad);
    return Eigen::Map<Eigen::VectorXd>(grad.data(), spec.r);
}

int check_rank(const ProblemSpec& spec, double t, const Eigen::VectorXd& q,
               const Eigen::VectorXd& z) {
    auto x = pack_point(spec, t, q, z);
    Eigen::MatrixXd J = psi_jacobian_z(spec, x);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > 1e-10 * sv[0]) ++rank;
    return rank;
}

int check_rank(const ProblemSpec& spec, const EvalPoint& point) {
    Eigen::VectorXd q(spec.n), z(spec.r);
    double t = 0.0;
    if (auto it = point.find("t"); it != point.end()) t = it->second;
    for (int i = 0; i < spec.n; ++i) {
        auto it = point.find("q" + std::to_string(i + 1));
        if (it == point.end())
            throw std::invalid_argument("point misses q" + std::to_string(i + 1));
        q[i] = it->second;
    }
    for (int a = 0; a < spec.r; ++a) {
        auto it = point.find("z" + std::to_string(a + 1));
        if (it == point.end())
            throw std::invalid_argument("point misses z" + std::to_string(a + 1));
        z[a] = it->second;
    }
    return check_rank(spec, t, q, z);
}

namespace {

void check_implicit_consistency(const ProblemSpec& spec,
                                const SampledCurve& curve) {
    if (!spec.implicit_constraints) return;
    std::vector<std::string> syms;
    syms.emplace_back("t");
    for (int i = 1; i <= spec.n; ++i) syms.push_back("q" + std::to_string(i));
    for (int i = 1; i <= spec.n; ++i) syms.push_back("qd" + std::to_string(i));
    std::vector<double> x(syms.size());
    for (int k = 0; k <= curve.N; ++k) {
        double t = curve.time(k);
        Eigen::VectorXd q = curve.q.row(k);
        Eigen::VectorXd z = curve.z.row(k);
        auto p = pack_point(spec, t, q, z);
        Eigen::VectorXd qdot = psi_value(spec, p);
        x[0] = t;
        for (int i = 0; i < spec.n; ++i) {
            x[static_cast<std::size_t>(1 + i)] = q[i];
            x[static_cast<std::size_t>(1 + spec.n + i)] = qdot[i];
        }
        for (const auto& g : *spec.implicit_constraints) {
            double residual = g.eval(x);
            if (std::abs(residual) > 1e-9)
                throw std::runtime_error(
                    "implicit constraint inconsistent with parametric form at "
                    "t = " +
                    std::to_string(t) + " (residual " +
                    std::to_string(residual) + ")");
        }
    }
}

}  // namespace

AdmissibilityReport check_admissible(const ProblemSpec& spec,
                                     const SampledCurve& curve, double tol) {
    if (!curve.has_z())
        throw std::invalid_argument("admissibility check needs controls z");
    if (curve.N < 4)
        throw std::invalid_argument("admissibility check needs N >= 4");
    check_implicit_consistency(spec, curve);

    Eigen::MatrixXd dq = grid_derivative(curve.q, curve.h());
    AdmissibilityReport report;
    report.residual_profile.resize(curve.N + 1);
    for (int k = 0; k <= curve.N; ++k) {
        Eigen::VectorXd q = curve.q.row(k);
        Eigen::VectorXd z = curve.z.row(k);
        auto x = pack_point(spec, curve.time(k), q, z);
        Eigen::VectorXd psi = psi_value(spec, x);
        report.residual_profile[k] =
            (dq.row(k).transpose() - psi).cwiseAbs().maxCoeff();
    }
    report.max_residual = report.residual_profile.maxCoeff();
    report.admissible = report.max_residual <= tol;
    return report;
}

SampledCurve integrate_admissible(
    const ProblemSpec& spec, const Eigen::VectorXd& q0,
    const std::function<Eigen::VectorXd(double)>& controls, int N) {
    if (N < 2) throw std::invalid_argument("N must be >= 2");
    if (q0.size() != spec.n)
        throw std::invalid_argument("initial state has wrong dimension");

    SampledCurve curve;
    curve.t0 = spec.t0;
    curve.t1 = spec.t1;
    curve.N = N;
    curve.q.resize(N + 1, spec.n);
    curve.z.resize(N + 1, spec.r);

    const double h = curve.h();
    auto f = [&](double t, const Eigen::VectorXd& q) {
        auto x = pack_point(spec, t, q, controls(t));
        return psi_value(spec, x);
    };

    Eigen::VectorXd q = q0;
    curve.q.row(0) = q;
    curve.z.row(0) = controls(spec.t0);
    for (int k = 0; k < N; ++k) {
        double t = curve.time(k);
        Eigen::VectorXd k1 = f(t, q);
        Eigen::VectorXd k2 = f(t + 0.5 * h, q + 0.5 * h * k1);
        Eigen::VectorXd k3 = f(t + 0.5 * h, q + 0.5 * h * k2);
        Eigen::VectorXd k4 = f(t + h, q + h * k3);
        q += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!q.allFinite())
            throw std::runtime_error("state became non-finite at t = " +
                                     std::to_string(curve.time(k + 1)));
        curve.q.row(k + 1) = q;
        curve.z.row(k + 1) = controls(curve.time(k + 1));
    }
    return curve;
}

}  // namespace varigauge
