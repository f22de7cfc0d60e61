// Direct-transcription benchmark for the Heisenberg boundary problem
// q: (0,0,0) -> (0,0,2*pi) on [0, 2*pi].
//
// Controls are piecewise constant on 200 segments; within a segment the
// state update is exact:
//   dq1 = u h, dq2 = v h, dq3 = (q1 v - q2 u) h
// (the bilinear term is constant along the segment because the linear
// parts cancel). The endpoint constraint is enforced by an augmented
// Lagrangian; the inner minimization is gradient descent with numeric
// central-difference gradients and backtracking line search.
//
// The converged action is frozen into tests/fixtures/heisenberg_oracle.txt
// and is never recomputed by the test suite.

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

namespace {

constexpr int kSegments = 200;
constexpr double kPi = 3.14159265358979323846;
constexpr double kT1 = 2.0 * kPi;
constexpr double kH = kT1 / kSegments;

struct Rollout {
    double q1, q2, q3, cost;
};

Rollout roll(const std::vector<double>& u) {
    Rollout s{0.0, 0.0, 0.0, 0.0};
    for (int k = 0; k < kSegments; ++k) {
        double a = u[2 * k], b = u[2 * k + 1];
        s.q3 += (s.q1 * b - s.q2 * a) * kH;
        s.q1 += a * kH;
        s.q2 += b * kH;
        s.cost += 0.5 * (a * a + b * b) * kH;
    }
    return s;
}

double augmented(const std::vector<double>& u, const double lam[3],
                 double mu) {
    Rollout s = roll(u);
    double c1 = s.q1, c2 = s.q2, c3 = s.q3 - kT1;
    return s.cost + lam[0] * c1 + lam[1] * c2 + lam[2] * c3 +
           0.5 * mu * (c1 * c1 + c2 * c2 + c3 * c3);
}

}  // namespace

int main() {
    std::vector<double> u(2 * kSegments);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    for (auto& x : u) x = U(rng);

    double lam[3] = {0.0, 0.0, 0.0};
    double mu = 10.0;
    std::vector<double> grad(u.size());

    for (int outer = 0; outer < 30; ++outer) {
        double step = 1e-2;
        for (int iter = 0; iter < 2000; ++iter) {
            double f0 = augmented(u, lam, mu);
            double gnorm2 = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                const double d = 1e-6;
                double save = u[i];
                u[i] = save + d;
                double fp = augmented(u, lam, mu);
                u[i] = save - d;
                double fm = augmented(u, lam, mu);
                u[i] = save;
                grad[i] = (fp - fm) / (2.0 * d);
                gnorm2 += grad[i] * grad[i];
            }
            if (std::sqrt(gnorm2) < 1e-9) break;
            // backtracking line search along -grad
            std::vector<double> trial(u.size());
            double alpha = step * 4.0;
            double ftrial = f0;
            for (int bt = 0; bt < 40; ++bt) {
                for (std::size_t i = 0; i < u.size(); ++i)
                    trial[i] = u[i] - alpha * grad[i];
                ftrial = augmented(trial, lam, mu);
                if (ftrial < f0 - 1e-4 * alpha * gnorm2) break;
                alpha *= 0.5;
            }
            if (ftrial >= f0) break;
            u = trial;
            step = alpha;
        }
        Rollout s = roll(u);
        double c1 = s.q1, c2 = s.q2, c3 = s.q3 - kT1;
        double viol = std::sqrt(c1 * c1 + c2 * c2 + c3 * c3);
        std::printf("outer %2d  mu %.3g  action %.12f  violation %.3e\n",
                    outer, mu, s.cost, viol);
        if (viol < 1e-10) break;
        lam[0] += mu * c1;
        lam[1] += mu * c2;
        lam[2] += mu * c3;
        if (viol > 1e-8) mu *= 2.0;
    }

    Rollout s = roll(u);
    std::printf("final action %.17g\n", s.cost);
    std::printf("endpoint %.3e %.3e %.3e\n", s.q1, s.q2, s.q3 - kT1);
    return 0;
}
