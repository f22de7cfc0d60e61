#pragma once

// Grid numerics shared across modules: finite-difference stencils on
// uniform grids and composite Simpson quadrature.

#include <Eigen/Dense>
#include <stdexcept>

namespace varigauge {

/// Fourth-order first derivative of uniformly sampled columns.
/// Central 5-point stencil in the interior, biased 5-point stencils on
/// the four boundary-adjacent rows, so the truncation error is O(h^4)
/// everywhere. Needs at least 5 rows.
inline Eigen::MatrixXd grid_derivative(const Eigen::MatrixXd& y, double h) {
    const Eigen::Index m = y.rows();
    if (m < 5)
        throw std::invalid_argument("grid_derivative needs at least 5 samples");
    Eigen::MatrixXd d(m, y.cols());
    const double s = 1.0 / (12.0 * h);
    d.row(0) = s * (-25.0 * y.row(0) + 48.0 * y.row(1) - 36.0 * y.row(2) +
                    16.0 * y.row(3) - 3.0 * y.row(4));
    d.row(1) = s * (-3.0 * y.row(0) - 10.0 * y.row(1) + 18.0 * y.row(2) -
                    6.0 * y.row(3) + y.row(4));
    for (Eigen::Index k = 2; k + 2 < m; ++k)
        d.row(k) = s * (y.row(k - 2) - 8.0 * y.row(k - 1) + 8.0 * y.row(k + 1) -
                        y.row(k + 2));
    d.row(m - 2) = s * (3.0 * y.row(m - 1) + 10.0 * y.row(m - 2) -
                        18.0 * y.row(m - 3) + 6.0 * y.row(m - 4) -
                        y.row(m - 5));
    d.row(m - 1) = s * (25.0 * y.row(m - 1) - 48.0 * y.row(m - 2) +
                        36.0 * y.row(m - 3) - 16.0 * y.row(m - 4) +
                        3.0 * y.row(m - 5));
    return d;
}

/// Composite Simpson rule over N panels of width h (N+1 samples). For
/// odd N the last panel falls back to the trapezoid rule.
inline double simpson(const Eigen::VectorXd& f, double h) {
    const Eigen::Index n = f.size() - 1;
    if (n < 1) throw std::invalid_argument("simpson needs at least 2 samples");
    Eigen::Index even = (n % 2 == 0) ? n : n - 1;
    double sum = 0.0;
    for (Eigen::Index k = 0; k + 2 <= even; k += 2)
        sum += f[k] + 4.0 * f[k + 1] + f[k + 2];
    sum *= h / 3.0;
    if (even != n) sum += 0.5 * h * (f[n - 1] + f[n]);
    return sum;
}

}  // namespace varigauge
