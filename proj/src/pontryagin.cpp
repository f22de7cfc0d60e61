#include "varigauge/pontryagin.hpp"

#include <cmath>
#include <cstdlib>
#include <future>
#include <random>
#include <thread>

#include "varigauge/numerics.hpp"
#include "varigauge/variation.hpp"

namespace varigauge {

void ShootingConfig::validate() const {
    if (N < 4 || N % 2 != 0)
        throw std::invalid_argument("grid size N must be even and >= 4");
    if (newton_tol <= 0 || shoot_tol <= 0)
        throw std::invalid_argument("tolerances must be positive");
    if (max_newton < 1 || max_shoot < 1)
        throw std::invalid_argument("iteration limits must be positive");
}

namespace {

Eigen::VectorXd stationarity_residual(const ProblemSpec& spec, double t,
                                      const Eigen::VectorXd& q,
                                      const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& z) {
    auto x = pack_point(spec, t, q, z);
    return psi_jacobian_z(spec, x).transpose() * p - lagrangian_grad_z(spec, x);
}

int thread_cap() {
    if (const char* env = std::getenv("VARIGAUGE_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

Eigen::VectorXd solve_controls(const ProblemSpec& spec, double t,
                               const Eigen::VectorXd& q,
                               const Eigen::VectorXd& p,
                               const Eigen::VectorXd& z_guess,
                               double newton_tol, int max_newton) {
    const int r = spec.r;
    Eigen::VectorXd z = z_guess;
    const double fd = 1e-6;
    for (int it = 0; it < max_newton; ++it) {
        Eigen::VectorXd R = stationarity_residual(spec, t, q, p, z);
        if (R.norm() <= newton_tol) return z;
        Eigen::MatrixXd J(r, r);
        for (int a = 0; a < r; ++a) {
            Eigen::VectorXd zp = z, zm = z;
            zp[a] += fd;
            zm[a] -= fd;
            J.col(a) = (stationarity_residual(spec, t, q, p, zp) -
                        stationarity_residual(spec, t, q, p, zm)) /
                       (2.0 * fd);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible())
            throw std::runtime_error(
                "control solve singular at t = " + std::to_string(t) +
                " (degenerate stationarity Jacobian)");
        z -= lu.solve(R);
        if (!z.allFinite())
            throw std::runtime_error("control solve diverged at t = " +
                                     std::to_string(t));
    }
    Eigen::VectorXd R = stationarity_residual(spec, t, q, p, z);
    if (R.norm() <= newton_tol) return z;
    throw std::runtime_error("control solve did not converge at t = " +
                             std::to_string(t));
}

ExtremalRhs extremal_rhs(const ProblemSpec& spec, double t,
                         const Eigen::VectorXd& q, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& z_warm, double newton_tol,
                         int max_newton) {
    ExtremalRhs out;
    out.z = solve_controls(spec, t, q, p, z_warm, newton_tol, max_newton);
    auto x = pack_point(spec, t, q, out.z);
    out.dq = psi_value(spec, x);
    out.dp = -psi_jacobian_q(spec, x).transpose() * p +
             lagrangian_grad_q(spec, x);
    return out;
}

namespace {

struct FlowResult {
    Eigen::MatrixXd q, p, z;  // (N+1) x {n, n, r}
    bool ok = false;
};

// RK4 flow of the extremal system from (q0, p0); the control solve is
// warm-started across stages.
FlowResult integrate_extremal(const ProblemSpec& spec,
                              const Eigen::VectorXd& q0,
                              const Eigen::VectorXd& p0,
                              const ShootingConfig& cfg, bool store_path) {
    const int N = cfg.N;
    const double h = (spec.t1 - spec.t0) / N;
    FlowResult out;
    if (store_path) {
        out.q.resize(N + 1, spec.n);
        out.p.resize(N + 1, spec.n);
        out.z.resize(N + 1, spec.r);
    } else {
        out.q.resize(1, spec.n);
        out.p.resize(1, spec.n);
    }

    Eigen::VectorXd q = q0, p = p0;
    Eigen::VectorXd z_warm = Eigen::VectorXd::Zero(spec.r);
    try {
        for (int k = 0; k <= N; ++k) {
            double t = spec.t0 + k * h;
            ExtremalRhs s1 = extremal_rhs(spec, t, q, p, z_warm,
                                          cfg.newton_tol, cfg.max_newton);
            z_warm = s1.z;
            if (store_path) {
                out.q.row(k) = q;
                out.p.row(k) = p;
                out.z.row(k) = s1.z;
            }
            if (k == N) break;
            ExtremalRhs s2 = extremal_rhs(
                spec, t + 0.5 * h, q + 0.5 * h * s1.dq, p + 0.5 * h * s1.dp,
                z_warm, cfg.newton_tol, cfg.max_newton);
            ExtremalRhs s3 = extremal_rhs(
                spec, t + 0.5 * h, q + 0.5 * h * s2.dq, p + 0.5 * h * s2.dp,
                s2.z, cfg.newton_tol, cfg.max_newton);
            ExtremalRhs s4 =
                extremal_rhs(spec, t + h, q + h * s3.dq, p + h * s3.dp, s3.z,
                             cfg.newton_tol, cfg.max_newton);
            q += (h / 6.0) * (s1.dq + 2.0 * s2.dq + 2.0 * s3.dq + s4.dq);
            p += (h / 6.0) * (s1.dp + 2.0 * s2.dp + 2.0 * s3.dp + s4.dp);
            if (!q.allFinite() || !p.allFinite()) return out;
        }
    } catch (const std::runtime_error&) {
        return out;  // control-solve failure along the flow: guess fails
    }
    if (!store_path) {
        out.q.row(0) = q;
        out.p.row(0) = p;
    }
    out.ok = true;
    return out;
}

struct GuessOutcome {
    bool converged = false;
    double best_residual = std::numeric_limits<double>::infinity();
    Eigen::VectorXd p0;
};

GuessOutcome shoot_from_guess(const ProblemSpec& spec,
                              const Eigen::VectorXd& q0,
                              const Eigen::VectorXd& q1_target,
                              const Eigen::VectorXd& guess,
                              const ShootingConfig& cfg) {
    GuessOutcome out;
    Eigen::VectorXd p0 = guess;

    auto endpoint = [&](const Eigen::VectorXd& p) -> std::optional<Eigen::VectorXd> {
        FlowResult flow = integrate_extremal(spec, q0, p, cfg, false);
        if (!flow.ok) return std::nullopt;
        return Eigen::VectorXd(flow.q.row(0).transpose() - q1_target);
    };

    auto F0 = endpoint(p0);
    if (!F0) return out;
    Eigen::VectorXd F = *F0;

    for (int it = 0; it < cfg.max_shoot; ++it) {
        double res = F.norm();
        out.best_residual = std::min(out.best_residual, res);
        if (res <= cfg.shoot_tol) {
            out.converged = true;
            out.p0 = p0;
            return out;
        }
        // Sensitivity Jacobian by forward differences.
        const double fd = 1e-6 * std::max(1.0, p0.lpNorm<Eigen::Infinity>());
        Eigen::MatrixXd J(spec.n, spec.n);
        bool jac_ok = true;
        for (int j = 0; j < spec.n; ++j) {
            Eigen::VectorXd pj = p0;
            pj[j] += fd;
            auto Fj = endpoint(pj);
            if (!Fj) {
                jac_ok = false;
                break;
            }
            J.col(j) = (*Fj - F) / fd;
        }
        if (!jac_ok) return out;

        // Min-norm least-squares Newton step; the Jacobian can be
        // genuinely rank-deficient (solution families, abnormal
        // directions). The cut sits above the finite-difference noise
        // floor so near-null directions do not blow up the step.
        Eigen::BDCSVD<Eigen::MatrixXd> svd(
            J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-6);
        Eigen::VectorXd step = svd.solve(-F);

        // Armijo backtracking on the residual norm.
        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= 1e-4) {
            auto Ftrial = endpoint(p0 + alpha * step);
            if (Ftrial && Ftrial->norm() < (1.0 - 1e-4 * alpha) * res) {
                p0 += alpha * step;
                F = *Ftrial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) return out;  // stalled
    }
    double res = F.norm();
    out.best_residual = std::min(out.best_residual, res);
    if (res <= cfg.shoot_tol) {
        out.converged = true;
        out.p0 = p0;
    }
    return out;
}

std::vector<Eigen::VectorXd> default_guesses(int n, std::uint64_t seed) {
    std::vector<Eigen::VectorXd> guesses;
    guesses.push_back(Eigen::VectorXd::Zero(n));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int g = 0; g < 8; ++g) {
        Eigen::VectorXd p(n);
        for (int i = 0; i < n; ++i) p[i] = normal(rng);
        guesses.push_back(p);
    }
    return guesses;
}

}  // namespace

ExtremalSolution shoot(const ProblemSpec& spec, const Eigen::VectorXd& q0,
                       const Eigen::VectorXd& q1_target,
                       const ShootingConfig& cfg) {
    spec.validate();
    cfg.validate();
    if (q0.size() != spec.n || q1_target.size() != spec.n)
        throw std::invalid_argument("boundary data has wrong dimension");

    std::vector<Eigen::VectorXd> guesses = cfg.initial_p0_guesses.empty()
                                               ? default_guesses(spec.n, cfg.seed)
                                               : cfg.initial_p0_guesses;
    for (const auto& g : guesses)
        if (g.size() != spec.n)
            throw std::invalid_argument("initial p0 guess has wrong dimension");

    // Guesses run concurrently; the first converged one in list order
    // wins, which keeps the outcome deterministic.
    const int cap = thread_cap();
    std::vector<GuessOutcome> outcomes(guesses.size());
    for (std::size_t start = 0; start < guesses.size();
         start += static_cast<std::size_t>(cap)) {
        std::size_t stop =
            std::min(guesses.size(), start + static_cast<std::size_t>(cap));
        std::vector<std::future<GuessOutcome>> futures;
        for (std::size_t g = start; g < stop; ++g)
            futures.push_back(std::async(std::launch::async, [&, g] {
                return shoot_from_guess(spec, q0, q1_target, guesses[g], cfg);
            }));
        bool found = false;
        for (std::size_t g = start; g < stop; ++g) {
            outcomes[g] = futures[g - start].get();
            if (outcomes[g].converged) found = true;
        }
        if (found) break;
    }

    ExtremalSolution sol;
    for (const auto& o : outcomes)
        sol.guess_best_residuals.push_back(o.best_residual);

    const GuessOutcome* winner = nullptr;
    for (const auto& o : outcomes)
        if (o.converged) {
            winner = &o;
            break;
        }
    if (!winner) return sol;

    FlowResult flow = integrate_extremal(spec, q0, winner->p0, cfg, true);
    if (!flow.ok) return sol;

    sol.p0_found = winner->p0;
    sol.lifted.base.t0 = spec.t0;
    sol.lifted.base.t1 = spec.t1;
    sol.lifted.base.N = cfg.N;
    sol.lifted.base.q = flow.q;
    sol.lifted.base.z = flow.z;
    sol.lifted.p = flow.p;

    // Certify all three extremality residuals on the grid.
    sol.res_admissibility =
        check_admissible(spec, sol.lifted.base, 1.0).max_residual;
    Eigen::MatrixXd dp = grid_derivative(flow.p, sol.lifted.base.h());
    double res_costate = 0.0, res_stat = 0.0;
    for (int k = 0; k <= cfg.N; ++k) {
        double t = sol.lifted.base.time(k);
        Eigen::VectorXd q = flow.q.row(k);
        Eigen::VectorXd p = flow.p.row(k);
        Eigen::VectorXd z = flow.z.row(k);
        auto x = pack_point(spec, t, q, z);
        Eigen::VectorXd rhs = -psi_jacobian_q(spec, x).transpose() * p +
                              lagrangian_grad_q(spec, x);
        res_costate = std::max(
            res_costate,
            (dp.row(k).transpose() - rhs).cwiseAbs().maxCoeff());
        res_stat = std::max(res_stat,
                            stationarity_residual(spec, t, q, p, z)
                                .cwiseAbs()
                                .maxCoeff());
    }
    sol.res_costate = res_costate;
    sol.res_stationarity = res_stat;
    double bound = 10.0 * cfg.shoot_tol;
    sol.converged = sol.res_admissibility <= bound &&
                    sol.res_costate <= bound && sol.res_stationarity <= bound;
    return sol;
}

Reconstruction reconstruct_costates(const ProblemSpec& spec,
                                    const SampledCurve& base,
                                    const ShootingConfig& cfg,
                                    const std::optional<Eigen::MatrixXd>& A0) {
    spec.validate();
    auto report = check_admissible(spec, base, 1e-6);
    if (!report.admissible)
        throw std::invalid_argument(
            "base curve is not admissible (max_residual = " +
            std::to_string(report.max_residual) + ")");

    const int N = base.N;
    const double h = base.h();

    // Particular solution of the costate equation from p(t0) = 0,
    // coefficients linearly interpolated between nodes.
    auto rhs = [&](int k, double frac, const Eigen::VectorXd& p) {
        Eigen::VectorXd q =
            (1.0 - frac) * base.q.row(k) + frac * base.q.row(k + 1);
        Eigen::VectorXd z =
            (1.0 - frac) * base.z.row(k) + frac * base.z.row(k + 1);
        double t = base.time(k) + frac * h;
        auto x = pack_point(spec, t, q, z);
        return (-psi_jacobian_q(spec, x).transpose() * p +
                lagrangian_grad_q(spec, x))
            .eval();
    };

    Eigen::MatrixXd p_path(N + 1, spec.n);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(spec.n);
    p_path.row(0) = p;
    for (int k = 0; k < N; ++k) {
        Eigen::VectorXd k1 = rhs(k, 0.0, p);
        Eigen::VectorXd k2 = rhs(k, 0.5, p + 0.5 * h * k1);
        Eigen::VectorXd k3 = rhs(k, 0.5, p + 0.5 * h * k2);
        Eigen::VectorXd k4 = rhs(k, 1.0, p + h * k3);
        p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        p_path.row(k + 1) = p;
    }

    FundamentalMatrix A = A0 ? fundamental_matrix(spec, base, *A0)
                             : fundamental_matrix(spec, base);

    // Least squares for beta over the stationarity condition at every
    // node and control direction.
    Eigen::MatrixXd M((N + 1) * spec.r, spec.n);
    Eigen::VectorXd rhs_lsq((N + 1) * spec.r);
    for (int k = 0; k <= N; ++k) {
        Eigen::VectorXd q = base.q.row(k);
        Eigen::VectorXd z = base.z.row(k);
        auto x = pack_point(spec, base.time(k), q, z);
        Eigen::MatrixXd Jz = psi_jacobian_z(spec, x);
        Eigen::VectorXd Lz = lagrangian_grad_z(spec, x);
        const Eigen::MatrixXd& Ak = A.A[static_cast<std::size_t>(k)];
        // row for (k, a): sum_j beta_j [Ak (dpsi/dz)](j, a)
        Eigen::MatrixXd block = Ak * Jz;  // n x r
        for (int a = 0; a < spec.r; ++a) {
            M.row(k * spec.r + a) = block.col(a).transpose();
            rhs_lsq[k * spec.r + a] =
                Lz[a] - Jz.col(a).dot(p_path.row(k).transpose());
        }
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    Eigen::VectorXd beta = svd.solve(rhs_lsq);

    Reconstruction out;
    out.beta = beta;
    out.lifted.base = base;
    out.lifted.p.resize(N + 1, spec.n);
    for (int k = 0; k <= N; ++k)
        out.lifted.p.row(k) =
            p_path.row(k) +
            (beta.transpose() * A.A[static_cast<std::size_t>(k)]);

    double residual = 0.0;
    for (int k = 0; k <= N; ++k) {
        Eigen::VectorXd q = base.q.row(k);
        Eigen::VectorXd z = base.z.row(k);
        Eigen::VectorXd pk = out.lifted.p.row(k);
        residual = std::max(residual,
                            stationarity_residual(spec, base.time(k), q, pk, z)
                                .cwiseAbs()
                                .maxCoeff());
    }
    out.lsq_residual = residual;
    return out;
}

}  // namespace varigauge
