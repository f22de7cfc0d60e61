import math

import numpy as np
import pytest

import varigauge as vg


def free_particle():
    return vg.ProblemSpec(1, 1, ["z1"], "z1^2 / 2", 0.0, 1.0)


def heisenberg(t1=2 * math.pi):
    return vg.ProblemSpec(
        3,
        2,
        ["z1", "z2", "q1 * z2 - q2 * z1"],
        "(z1^2 + z2^2) / 2",
        0.0,
        t1,
    )


def circle(spec, n):
    ts = np.linspace(spec.t0, spec.t1, n + 1)
    q = np.column_stack([np.sin(ts), 1 - np.cos(ts), ts - np.sin(ts)])
    z = np.column_stack([np.cos(ts), np.sin(ts)])
    return vg.SampledCurve(spec.t0, spec.t1, q, z)


def test_expression_eval_and_grad():
    e = vg.Expression.parse("q1^2 + sin(t) * z1", ["t", "q1", "z1"])
    x = {"t": 0.0, "q1": 3.0, "z1": 5.0}
    assert e.eval(x) == pytest.approx(9.0)
    v, g = e.eval_grad(x, ["q1", "z1"])
    assert v == pytest.approx(9.0)
    assert g == pytest.approx([6.0, 0.0])
    d = e.derivative("q1")
    assert d.eval(x) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        vg.Expression.parse("q1 + w", ["q1"])


def test_admissibility_and_rank():
    spec = heisenberg()
    base = circle(spec, 400)
    assert vg.check_rank(spec, 0.0, np.zeros(3), np.zeros(2)) == 2
    rep = vg.check_admissible(spec, base, 1e-6)
    assert rep.admissible
    rolled = vg.integrate_admissible(
        spec, np.zeros(3), lambda t: np.array([math.cos(t), math.sin(t)]), 400
    )
    assert np.max(np.abs(rolled.q - base.q)) < 1e-6


def test_gauge_transform_and_equivalence():
    spec = heisenberg()
    other = vg.gauge_transform(spec, "q1 * q2")
    verdict = vg.gauge_equivalent(spec, other, 200, 1e-6)
    assert verdict.equivalent
    assert vg.gauge_equivalent(
        spec, vg.ProblemSpec(3, 2, spec.psi_sources(), "(z1^2 + z2^2) / 2 + z1^2", 0.0, spec.t1),
        200, 1e-6,
    ).equivalent is False


def test_action_and_ppc_identity():
    spec = heisenberg()
    base = circle(spec, 400)
    a = vg.action(spec, base)
    assert a == pytest.approx(math.pi, abs=1e-6)
    p = np.random.default_rng(0).normal(size=(base.N + 1, 3))
    assert vg.ppc_action(spec, vg.LiftedCurve(base, p)) == pytest.approx(a, abs=1e-8)


def test_variational_flow_and_endpoint():
    spec = heisenberg()
    base = circle(spec, 400)
    gamma = np.zeros((base.N + 1, 2))
    defm = vg.variational_flow(spec, base, gamma, np.zeros(3))
    assert np.max(np.abs(defm.X)) < 1e-12
    A = vg.fundamental_matrix(spec, base)
    end = vg.endpoint_functional(spec, base, A, gamma)
    assert np.max(np.abs(end)) < 1e-12


def test_shoot_and_reconstruct():
    spec = free_particle()
    sol = vg.shoot(spec, np.array([0.0]), np.array([1.0]))
    assert sol.converged
    assert sol.lifted.p[:, 0] == pytest.approx(np.ones(401), abs=1e-7)
    rec = vg.reconstruct_costates(spec, sol.lifted.base)
    assert rec.lsq_residual < 1e-7
    assert rec.lifted.p[:, 0] == pytest.approx(np.ones(401), abs=1e-6)


def test_abnormality_and_uniqueness():
    twin = vg.ProblemSpec(2, 1, ["z1", "z1"], "z1^2 / 2", 0.0, 1.0)
    ts = np.linspace(0.0, 1.0, 201)
    q = np.column_stack([ts, ts])
    z = np.ones((201, 1))
    base = vg.SampledCurve(0.0, 1.0, q, z)
    rep = vg.abnormality_index(twin, base)
    assert rep.index == 1
    assert np.abs(rep.basis_beta[:, 0]) == pytest.approx(
        np.full(2, 1 / math.sqrt(2)), abs=1e-9
    )
    uniq = vg.verify_normal_uniqueness(twin, base)
    assert uniq.consistent


def test_problem_json_and_csv_roundtrip(tmp_path):
    pf = vg.parse_problem_json(
        """
        {
          "n": 1, "r": 1,
          "interval": [0.0, 1.0],
          "psi": ["z1"],
          "lagrangian": "z1^2 / 2",
          "boundary": {"q0": [0.0], "q1": [1.0]}
        }
        """
    )
    assert pf.spec.n == 1
    assert pf.boundary_q1 == pytest.approx([1.0])
    spec = heisenberg()
    base = circle(spec, 40)
    path = tmp_path / "curve.csv"
    vg.write_curve_csv(path, base)
    back, p = vg.read_curve_csv(path)
    assert p is None
    assert np.array_equal(back.q, base.q)
    assert np.array_equal(back.z, base.z)
