#include "varigauge/abnormality.hpp"

#include <cmath>
#include <random>

#include "varigauge/variation.hpp"

namespace varigauge {

AbnormalityReport abnormality_index(const ProblemSpec& spec,
                                    const SampledCurve& base, double svd_tol) {
    spec.validate();
    auto adm = check_admissible(spec, base, 1e-6);
    if (!adm.admissible)
        throw std::invalid_argument(
            "base curve is not admissible (max_residual = " +
            std::to_string(adm.max_residual) + ")");

    AbnormalityReport report;

    // Square full-rank constraint gradient forces p = 0 directly.
    if (spec.n == spec.r) {
        bool full_rank = true;
        for (int k = 0; k <= base.N && full_rank; ++k) {
            Eigen::VectorXd q = base.q.row(k);
            Eigen::VectorXd z = base.z.row(k);
            if (check_rank(spec, base.time(k), q, z) != spec.n)
                full_rank = false;
        }
        if (full_rank) {
            report.index = 0;
            report.basis_beta.resize(spec.n, 0);
            return report;
        }
    }

    FundamentalMatrix A = fundamental_matrix(spec, base);
    Eigen::MatrixXd M((base.N + 1) * spec.r, spec.n);
    for (int k = 0; k <= base.N; ++k) {
        Eigen::VectorXd q = base.q.row(k);
        Eigen::VectorXd z = base.z.row(k);
        auto x = pack_point(spec, base.time(k), q, z);
        Eigen::MatrixXd block =
            A.A[static_cast<std::size_t>(k)] * psi_jacobian_z(spec, x);
        for (int a = 0; a < spec.r; ++a)
            M.row(k * spec.r + a) = block.col(a).transpose();
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinV);
    report.singular_values = svd.singularValues();
    double smax = report.singular_values.size() ? report.singular_values[0] : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < report.singular_values.size(); ++i)
        if (report.singular_values[i] > svd_tol * smax) ++rank;
    if (smax == 0.0) rank = 0;
    report.index = spec.n - rank;

    report.basis_beta = svd.matrixV().rightCols(report.index);
    for (int j = 0; j < report.index; ++j) {
        Eigen::VectorXd beta = report.basis_beta.col(j);
        Eigen::MatrixXd path(base.N + 1, spec.n);
        for (int k = 0; k <= base.N; ++k)
            path.row(k) =
                beta.transpose() * A.A[static_cast<std::size_t>(k)];
        report.basis_paths.push_back(std::move(path));
    }
    return report;
}

namespace {

Eigen::MatrixXd random_nonsingular(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        Eigen::MatrixXd A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
        if (std::abs(A.determinant()) > 1e-3) return A;
    }
}

}  // namespace

UniquenessReport verify_normal_uniqueness(const ProblemSpec& spec,
                                          const SampledCurve& base,
                                          const ShootingConfig& cfg,
                                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd A0a = random_nonsingular(spec.n, rng);
    Eigen::MatrixXd A0b = random_nonsingular(spec.n, rng);

    Reconstruction ra = reconstruct_costates(spec, base, cfg, A0a);
    Reconstruction rb = reconstruct_costates(spec, base, cfg, A0b);
    AbnormalityReport ab = abnormality_index(spec, base);

    UniquenessReport out;
    out.index = ab.index;
    Eigen::MatrixXd diff = ra.lifted.p - rb.lifted.p;
    out.disagreement = diff.cwiseAbs().maxCoeff();

    if (ab.index == 0) {
        out.projected_residual = out.disagreement;
    } else {
        // Remove the component inside the homogeneous solution space.
        const Eigen::Index m = diff.size();
        Eigen::MatrixXd basis(m, ab.index);
        for (int j = 0; j < ab.index; ++j)
            basis.col(j) = Eigen::Map<const Eigen::VectorXd>(
                ab.basis_paths[static_cast<std::size_t>(j)].data(), m);
        Eigen::Map<const Eigen::VectorXd> d(diff.data(), m);
        Eigen::VectorXd c = basis.colPivHouseholderQr().solve(d);
        out.projected_residual =
            (d - basis * c).cwiseAbs().maxCoeff();
    }
    out.consistent = out.projected_residual <= 1e-6;
    return out;
}

}  // namespace varigauge
