#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "test_helpers.hpp"
#include "varigauge/gauge.hpp"

using namespace varigauge;
using vgtest::make_spec;

namespace {

constexpr double kPi = 3.14159265358979323846;

bool numerically_equal(const ProblemSpec& a, const ProblemSpec& b,
                       std::uint64_t seed, double tol) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    auto syms = a.symbols();
    for (int trial = 0; trial < 10; ++trial) {
        EvalPoint x;
        for (const auto& s : syms) x[s] = U(rng);
        if (std::abs(a.lagrangian.eval(x) - b.lagrangian.eval(x)) > tol)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("gauge_transform composes the total derivative") {
    auto spec = vgtest::free_particle();
    auto out = gauge_transform(spec, GaugeFunction::parse("q1", 1));
    auto want = make_spec(1, 1, {"z1"}, "z1^2/2 + z1", 0.0, 1.0);
    CHECK(numerically_equal(out, want, 11, 1e-14));
    // psi untouched
    CHECK(out.psi[0].same_tree(spec.psi[0]));
}

TEST_CASE("constant gauge functions leave L unchanged") {
    auto spec = vgtest::heisenberg();
    auto out = gauge_transform(spec, GaugeFunction::parse("3.75", 3));
    CHECK(numerically_equal(out, spec, 12, 1e-14));
}

TEST_CASE("f = q1 q2 over the Heisenberg constraint") {
    auto spec = make_spec(3, 2, {"z1", "z2", "q1*z2 - q2*z1"}, "0", 0.0, kPi);
    auto out = gauge_transform(spec, GaugeFunction::parse("q1*q2", 3));
    auto want =
        make_spec(3, 2, {"z1", "z2", "q1*z2 - q2*z1"}, "q2*z1 + q1*z2", 0.0, kPi);
    CHECK(numerically_equal(out, want, 13, 1e-13));
}

TEST_CASE("gauge functions must not reference controls") {
    CHECK_THROWS_AS(GaugeFunction::parse("q1 + z1", 1),
                    varigauge::UnknownSymbolError);
}

TEST_CASE("gauge_equivalent accepts a transformed spec") {
    auto spec = make_spec(2, 2, {"z1", "z2"}, "(z1^2 + z2^2)/2", 0.0, 1.0);
    auto out = gauge_transform(spec, GaugeFunction::parse("q1*q2", 2));
    auto verdict = gauge_equivalent(spec, out, 50, 1e-8);
    CHECK(verdict.equivalent);
    CHECK(verdict.max_residual <= 1e-8);
}

TEST_CASE("gauge_equivalent rejects a non-affine difference") {
    auto a = vgtest::free_particle();
    auto b = make_spec(1, 1, {"z1"}, "z1^2/2 + z1^2", 0.0, 1.0);
    CHECK_FALSE(gauge_equivalent(a, b, 50, 1e-8).equivalent);
}

TEST_CASE("gauge_equivalent rejects a non-closed b-field") {
    // difference q2 z1 - q1 z2 fits b = (q2, -q1), which is not a
    // q-gradient: db1/dq2 = 1 while db2/dq1 = -1.
    auto a = make_spec(2, 2, {"z1", "z2"}, "0", 0.0, 1.0);
    auto b = make_spec(2, 2, {"z1", "z2"}, "q2*z1 - q1*z2", 0.0, 1.0);
    auto verdict = gauge_equivalent(a, b, 50, 1e-8);
    CHECK_FALSE(verdict.equivalent);
    CHECK(verdict.max_residual > 1e-2);
}

TEST_CASE("gauge_equivalent handles control-dependent constraints") {
    // With the Heisenberg constraints psi3 is a pointwise combination
    // of psi1 and psi2 over the controls, so the affine fit alone
    // cannot identify the b-field; these cases exercise the bracket
    // enrichment that restores identifiability.
    auto heis = vgtest::heisenberg();

    auto out = gauge_transform(heis, GaugeFunction::parse("q1*q2", 3));
    CHECK(gauge_equivalent(heis, out, 50, 1e-6).equivalent);

    auto out2 = gauge_transform(heis, GaugeFunction::parse("sin(q3) + t*q1", 3));
    CHECK(gauge_equivalent(heis, out2, 50, 1e-6).equivalent);

    // q2 z1 - q1 z2 equals -psi3, the total derivative of f = -q3.
    auto shifted = make_spec(3, 2, {"z1", "z2", "q1*z2 - q2*z1"},
                             "(z1^2 + z2^2)/2 + q2*z1 - q1*z2", 0.0,
                             heis.t1);
    CHECK(gauge_equivalent(heis, shifted, 50, 1e-6).equivalent);

    // q3 z1 admits no potential: the commutator of the horizontal
    // fields forces df/dq3 = -q1/2, and the resulting b-field is not
    // closed.
    auto bad = make_spec(3, 2, {"z1", "z2", "q1*z2 - q2*z1"},
                         "(z1^2 + z2^2)/2 + q3*z1", 0.0, heis.t1);
    auto verdict = gauge_equivalent(heis, bad, 50, 1e-6);
    CHECK_FALSE(verdict.equivalent);
    CHECK(verdict.max_residual > 1e-2);
}

TEST_CASE("gauge_equivalent demands matching constraints") {
    auto a = vgtest::free_particle();
    auto b = make_spec(1, 1, {"2*z1"}, "z1^2/2", 0.0, 1.0);
    CHECK_THROWS(gauge_equivalent(a, b, 50, 1e-8));
    auto c = vgtest::double_channel();
    CHECK_THROWS(gauge_equivalent(a, c, 50, 1e-8));
}

TEST_CASE("gauge_equivalent is reflexive, symmetric and transitive") {
    auto a = make_spec(2, 2, {"z1", "z2"}, "(z1^2 + z2^2)/2", 0.0, 1.0);
    auto b = gauge_transform(a, GaugeFunction::parse("sin(q1) + q2^2", 2));
    auto c = gauge_transform(b, GaugeFunction::parse("q1*q2/2", 2));
    CHECK(gauge_equivalent(a, a, 30, 1e-8).equivalent);
    CHECK(gauge_equivalent(a, b, 30, 1e-7).equivalent);
    CHECK(gauge_equivalent(b, a, 30, 1e-7).equivalent);
    CHECK(gauge_equivalent(b, c, 30, 1e-7).equivalent);
    CHECK(gauge_equivalent(a, c, 30, 1e-7).equivalent);
}

TEST_CASE("pontryagin_hamiltonian hand values") {
    auto free_p = vgtest::free_particle();
    Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    auto ev = pontryagin_hamiltonian(free_p, 0.0, Eigen::VectorXd::Zero(1), one,
                                     one);
    CHECK(ev.hamiltonian == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(ev.p0 == -ev.hamiltonian);

    auto zero_l = make_spec(2, 2, {"z1", "z2"}, "0", 0.0, 1.0);
    Eigen::VectorXd q2(2), z2(2);
    q2 << 0.3, -0.7;
    z2 << 1.0, 2.0;
    CHECK(pontryagin_hamiltonian(zero_l, 0.1, q2, Eigen::VectorXd::Zero(2), z2)
              .hamiltonian == 0.0);

    auto heis = vgtest::heisenberg();
    Eigen::VectorXd q(3), p(3), z(2);
    q << 1.0, 0.0, 0.0;
    p << 0.0, 0.0, 1.0;
    z << 0.0, 1.0;
    CHECK(pontryagin_hamiltonian(heis, 0.0, q, p, z).hamiltonian ==
          doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("pontryagin_hamiltonian is affine in p") {
    auto heis = vgtest::heisenberg();
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    auto rnd = [&](int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = U(rng);
        return v;
    };
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd q = rnd(3), z = rnd(2), p1 = rnd(3), p2 = rnd(3);
        double hsum =
            pontryagin_hamiltonian(heis, 0.2, q, (p1 + p2).eval(), z).hamiltonian;
        double h0 =
            pontryagin_hamiltonian(heis, 0.2, q, Eigen::VectorXd::Zero(3), z)
                .hamiltonian;
        double ha = pontryagin_hamiltonian(heis, 0.2, q, p1, z).hamiltonian;
        double hb = pontryagin_hamiltonian(heis, 0.2, q, p2, z).hamiltonian;
        CHECK(std::abs((hsum + h0) - (ha + hb)) <=
              8 * std::numeric_limits<double>::epsilon() *
                  std::max({1.0, std::abs(ha), std::abs(hb)}));
    }
}

TEST_CASE("action quadrature examples") {
    auto spec = vgtest::free_particle();
    SampledCurve line;
    line.t0 = 0.0;
    line.t1 = 1.0;
    line.N = 100;
    line.q.resize(101, 1);
    line.z = Eigen::MatrixXd::Ones(101, 1);
    for (int k = 0; k <= 100; ++k) line.q(k, 0) = line.time(k);
    CHECK(std::abs(action(spec, line) - 0.5) <= 1e-12);

    auto zero_l = make_spec(1, 1, {"z1"}, "0", 0.0, 1.0);
    CHECK(action(zero_l, line) == 0.0);

    auto heis = vgtest::heisenberg();
    auto circle = vgtest::heisenberg_circle(heis, 400);
    CHECK(std::abs(action(heis, circle) - kPi / 2.0) <= 1e-8);
}

TEST_CASE("ppc_action reduces to the action on admissible curves") {
    auto heis = vgtest::heisenberg();
    auto circle = vgtest::heisenberg_circle(heis, 400);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    Eigen::MatrixXd p(circle.N + 1, 3);
    for (int k = 0; k <= circle.N; ++k)
        for (int i = 0; i < 3; ++i) p(k, i) = U(rng);
    double base = action(heis, circle);
    CHECK(std::abs(ppc_action(heis, LiftedCurve{circle, p}) - base) <= 1e-8);
}

TEST_CASE("ppc_action sees the inadmissibility defect") {
    // q = t but z = 0: the p (dq - psi dt) term contributes exactly 1.
    auto spec = make_spec(1, 1, {"z1"}, "0", 0.0, 1.0);
    SampledCurve c;
    c.t0 = 0.0;
    c.t1 = 1.0;
    c.N = 100;
    c.q.resize(101, 1);
    c.z = Eigen::MatrixXd::Zero(101, 1);
    for (int k = 0; k <= 100; ++k) c.q(k, 0) = c.time(k);
    Eigen::MatrixXd p = Eigen::MatrixXd::Ones(101, 1);
    CHECK(std::abs(ppc_action(spec, LiftedCurve{c, p}) - 1.0) <= 1e-10);
}

TEST_CASE("ppc_action is p-independent on admissible curves") {
    auto spec = vgtest::free_particle();
    SampledCurve line;
    line.t0 = 0.0;
    line.t1 = 1.0;
    line.N = 100;
    line.q.resize(101, 1);
    line.z = Eigen::MatrixXd::Ones(101, 1);
    for (int k = 0; k <= 100; ++k) line.q(k, 0) = line.time(k);
    double v0 =
        ppc_action(spec, LiftedCurve{line, Eigen::MatrixXd::Zero(101, 1)});
    double v5 = ppc_action(
        spec, LiftedCurve{line, Eigen::MatrixXd::Constant(101, 1, 5.0)});
    CHECK(std::abs(v0 - 0.5) <= 1e-8);
    CHECK(std::abs(v5 - 0.5) <= 1e-8);
}

TEST_CASE("action telescopes under gauge transformation") {
    auto heis = vgtest::heisenberg();
    auto f = GaugeFunction::parse("q1*q2 - cos(q3)", 3);
    auto primed = gauge_transform(heis, f);
    auto circle = vgtest::heisenberg_circle(heis, 400);
    double delta = action(primed, circle) - action(heis, circle);
    auto boundary = [&](int k) {
        return f.f.eval(EvalPoint{{"t", circle.time(k)},
                                  {"q1", circle.q(k, 0)},
                                  {"q2", circle.q(k, 1)},
                                  {"q3", circle.q(k, 2)}});
    };
    CHECK(std::abs(delta - (boundary(circle.N) - boundary(0))) <= 1e-7);
}
