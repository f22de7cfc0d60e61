#include "varigauge/gauge.hpp"

#include <cmath>
#include <random>

#include "varigauge/numerics.hpp"

namespace varigauge {

GaugeFunction GaugeFunction::parse(std::string_view source, int n) {
    std::vector<std::string> syms;
    syms.emplace_back("t");
    for (int i = 1; i <= n; ++i) syms.push_back("q" + std::to_string(i));
    return GaugeFunction{Expression::parse(source, std::move(syms))};
}

ProblemSpec gauge_transform(const ProblemSpec& spec, const GaugeFunction& gf) {
    spec.validate();
    for (int a = 1; a <= spec.r; ++a)
        if (gf.f.references("z" + std::to_string(a)))
            throw std::invalid_argument(
                "gauge function must not reference controls");

    auto syms = spec.symbols();
    Expression total = gf.f.derivative("t").with_symbols(syms);
    for (int i = 0; i < spec.n; ++i) {
        Expression dfdq =
            gf.f.derivative("q" + std::to_string(i + 1)).with_symbols(syms);
        total = total + dfdq * spec.psi[static_cast<std::size_t>(i)];
    }
    ProblemSpec out = spec;
    out.lagrangian = spec.lagrangian + total;
    return out;
}

namespace {

struct Fit {
    double a;
    Eigen::VectorXd b;
    double residual;
};

// Min-norm least-squares fit of D(t,q,z) = a + b_i psi^i(t,q,z) over a
// fixed set of control samples. When the components of (1, psi) are
// linearly dependent over the controls (the fit matrix drops rank) the
// coefficients are not identifiable from point values alone; in that
// case rows coming from the Lie brackets of the fields V_z = d/dt +
// psi(z) d/dq are appended: [V_z, V_w] f = V_z D(w) - V_w D(z) pins b
// along the bracket directions, which restores identifiability for
// bracket-generating constraints.
Fit fit_affine(const ProblemSpec& specA, const ProblemSpec& specB, double t,
               const Eigen::VectorXd& q,
               const std::vector<Eigen::VectorXd>& z_samples) {
    const int n = specA.n;
    const auto m = static_cast<Eigen::Index>(z_samples.size());
    const double delta = 1e-4;

    auto difference = [&](double tt, const Eigen::VectorXd& qq,
                          const Eigen::VectorXd& z) {
        auto x = pack_point(specA, tt, qq, z);
        return lagrangian_value(specB, x) - lagrangian_value(specA, x);
    };

    std::vector<Eigen::VectorXd> psis(z_samples.size());
    Eigen::MatrixXd M(m, n + 1);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index s = 0; s < m; ++s) {
        const auto& z = z_samples[static_cast<std::size_t>(s)];
        auto x = pack_point(specA, t, q, z);
        psis[static_cast<std::size_t>(s)] = psi_value(specA, x);
        M(s, 0) = 1.0;
        M.row(s).tail(n) = psis[static_cast<std::size_t>(s)];
        rhs[s] = difference(t, q, z);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-8);
    if (svd.rank() < n + 1) {
        // Directional derivative of a field along V_z by central
        // differences.
        auto along = [&](const Eigen::VectorXd& dir,
                         const auto& field) -> Eigen::VectorXd {
            Eigen::VectorXd hi = field(t + delta, q + delta * dir);
            Eigen::VectorXd lo = field(t - delta, q - delta * dir);
            return (hi - lo) / (2.0 * delta);
        };
        auto along_scalar = [&](const Eigen::VectorXd& dir,
                                const auto& field) -> double {
            return (field(t + delta, q + delta * dir) -
                    field(t - delta, q - delta * dir)) /
                   (2.0 * delta);
        };
        std::vector<Eigen::VectorXd> rows;
        std::vector<double> row_rhs;
        const auto pairs = std::min<Eigen::Index>(m, 6);
        for (Eigen::Index s = 0; s < pairs; ++s) {
            for (Eigen::Index w = s + 1; w < pairs; ++w) {
                const auto& zs = z_samples[static_cast<std::size_t>(s)];
                const auto& zw = z_samples[static_cast<std::size_t>(w)];
                auto psi_of = [&](const Eigen::VectorXd& z) {
                    return [&, z](double tt, const Eigen::VectorXd& qq) {
                        return psi_value(specA, pack_point(specA, tt, qq, z));
                    };
                };
                auto diff_of = [&](const Eigen::VectorXd& z) {
                    return [&, z](double tt, const Eigen::VectorXd& qq) {
                        return difference(tt, qq, z);
                    };
                };
                const auto& ps = psis[static_cast<std::size_t>(s)];
                const auto& pw = psis[static_cast<std::size_t>(w)];
                Eigen::VectorXd bracket =
                    along(ps, psi_of(zw)) - along(pw, psi_of(zs));
                double c = along_scalar(ps, diff_of(zw)) -
                           along_scalar(pw, diff_of(zs));
                if (bracket.norm() < 1e-10 && std::abs(c) < 1e-10) continue;
                Eigen::VectorXd row = Eigen::VectorXd::Zero(n + 1);
                row.tail(n) = bracket;
                rows.push_back(std::move(row));
                row_rhs.push_back(c);
            }
        }
        auto extra = static_cast<Eigen::Index>(rows.size());
        M.conservativeResize(m + extra, Eigen::NoChange);
        rhs.conservativeResize(m + extra);
        for (Eigen::Index e = 0; e < extra; ++e) {
            M.row(m + e) = rows[static_cast<std::size_t>(e)];
            rhs[m + e] = row_rhs[static_cast<std::size_t>(e)];
        }
        svd.compute(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-8);
    }

    Eigen::VectorXd coef = svd.solve(rhs);
    Fit fit;
    fit.a = coef[0];
    fit.b = coef.tail(n);
    fit.residual = (M * coef - rhs).cwiseAbs().maxCoeff();
    return fit;
}

}  // namespace

GaugeVerdict gauge_equivalent(const ProblemSpec& specA,
                              const ProblemSpec& specB, int trial_points,
                              double tol, std::uint64_t seed) {
    specA.validate();
    specB.validate();
    if (specA.n != specB.n || specA.r != specB.r)
        throw std::invalid_argument("specs have different dimensions");

    const int n = specA.n;
    const int r = specA.r;
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) *
                        (static_cast<double>(rng()) /
                         static_cast<double>(std::mt19937_64::max()));
    };

    const int n_samples = std::max(n + 3, r + 4);
    const double delta = 1e-4;
    double max_residual = 0.0;

    for (int trial = 0; trial < trial_points; ++trial) {
        double t = uniform(specA.t0, specA.t1);
        Eigen::VectorXd q(n);
        for (int i = 0; i < n; ++i) q[i] = uniform(-1.0, 1.0);
        std::vector<Eigen::VectorXd> zs;
        zs.reserve(static_cast<std::size_t>(n_samples));
        for (int s = 0; s < n_samples; ++s) {
            Eigen::VectorXd z(r);
            for (int a = 0; a < r; ++a) z[a] = uniform(-1.0, 1.0);
            zs.push_back(std::move(z));
        }

        // The two specs must describe the same constraint manifold.
        for (const auto& z : zs) {
            auto x = pack_point(specA, t, q, z);
            Eigen::VectorXd pa = psi_value(specA, x);
            Eigen::VectorXd pb = psi_value(specB, x);
            if ((pa - pb).cwiseAbs().maxCoeff() > 1e-9)
                throw std::invalid_argument(
                    "specs disagree on the constraints psi");
        }

        Fit base = fit_affine(specA, specB, t, q, zs);
        max_residual = std::max(max_residual, base.residual);

        auto fit_at = [&](double tt, const Eigen::VectorXd& qq) {
            return fit_affine(specA, specB, tt, qq, zs);
        };

        // db_i/dt and da/dt by central differences of the fit.
        Fit tp = fit_at(t + delta, q);
        Fit tm = fit_at(t - delta, q);
        Eigen::VectorXd db_dt = (tp.b - tm.b) / (2.0 * delta);

        Eigen::VectorXd da_dq(n);
        Eigen::MatrixXd db_dq(n, n);  // db_dq(i, j) = db_i/dq^j
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd qp = q, qm = q;
            qp[j] += delta;
            qm[j] -= delta;
            Fit fp = fit_at(t, qp);
            Fit fm = fit_at(t, qm);
            da_dq[j] = (fp.a - fm.a) / (2.0 * delta);
            db_dq.col(j) = (fp.b - fm.b) / (2.0 * delta);
        }

        for (int i = 0; i < n; ++i) {
            max_residual = std::max(max_residual, std::abs(da_dq[i] - db_dt[i]));
            for (int j = i + 1; j < n; ++j)
                max_residual = std::max(
                    max_residual, std::abs(db_dq(i, j) - db_dq(j, i)));
        }
        if (max_residual > tol) break;  // verdict settled
    }
    return GaugeVerdict{max_residual <= tol, max_residual};
}

PPCEvaluation pontryagin_hamiltonian(
    const ProblemSpec& spec, double t, const Eigen::VectorXd& q,
    const Eigen::VectorXd& p, const Eigen::VectorXd& z,
    const std::optional<Eigen::VectorXd>& qdot) {
    auto x = pack_point(spec, t, q, z);
    Eigen::VectorXd psi = psi_value(spec, x);
    double L = lagrangian_value(spec, x);
    PPCEvaluation out;
    out.hamiltonian = p.dot(psi) - L;
    out.p0 = -out.hamiltonian;
    out.theta_dt_coefficient =
        qdot ? L + p.dot(*qdot - psi) : -out.hamiltonian;
    return out;
}

double action(const ProblemSpec& spec, const SampledCurve& curve) {
    if (!curve.has_z())
        throw std::invalid_argument("action needs controls z on the curve");
    Eigen::VectorXd f(curve.N + 1);
    for (int k = 0; k <= curve.N; ++k) {
        Eigen::VectorXd q = curve.q.row(k);
        Eigen::VectorXd z = curve.z.row(k);
        auto x = pack_point(spec, curve.time(k), q, z);
        f[k] = lagrangian_value(spec, x);
    }
    return simpson(f, curve.h());
}

double ppc_action(const ProblemSpec& spec, const LiftedCurve& lifted) {
    const SampledCurve& c = lifted.base;
    if (!c.has_z())
        throw std::invalid_argument("ppc_action needs controls z on the curve");
    if (lifted.p.rows() != c.N + 1 || lifted.p.cols() != spec.n)
        throw std::invalid_argument("costate array does not match the grid");
    Eigen::MatrixXd dq = grid_derivative(c.q, c.h());
    Eigen::VectorXd f(c.N + 1);
    for (int k = 0; k <= c.N; ++k) {
        Eigen::VectorXd q = c.q.row(k);
        Eigen::VectorXd z = c.z.row(k);
        Eigen::VectorXd p = lifted.p.row(k);
        auto x = pack_point(spec, c.time(k), q, z);
        double H = p.dot(psi_value(spec, x)) - lagrangian_value(spec, x);
        f[k] = p.dot(dq.row(k)) - H;
    }
    return simpson(f, c.h());
}

}  // namespace varigauge
