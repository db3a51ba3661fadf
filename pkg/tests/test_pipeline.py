import json

import numpy as np
import pytest

from symphodge import exteralg as ea
from symphodge import pipeline as pl
from symphodge import torusfields as tf
from symphodge.chains import boundary, wrap
from symphodge.exteralg import PointwiseForm as PF


def cfg(n, grid, p, Q, **kw):
    return pl.PipelineConfig.from_json({"n": n, "grid": grid, "p": p, "Q": Q, **kw})


@pytest.fixture(scope="module")
def t2_report():
    return pl.run(cfg(1, 32, 1, {"subtorus": [1], "at": [0.0, 0.5]}))


@pytest.fixture(scope="module")
def full_report():
    q = {"subtorus": [1, 3], "at": [0.25, 0.5, 0.25, 0.5], "bump": {"axes": [1, 2, 3], "at": [0.25, 0.5, 0.25, 0.5]}}
    return pl.run(cfg(2, 12, 2, q, epsilon=1 / 6))


# ---------------------------------------------------------------- cycles


def test_subtorus_cycle_is_closed_and_has_unit_mass():
    Q = pl.cycle_from_spec(2, (8,) * 4, {"subtorus": [1, 3], "at": [0, 0.5, 0, 0.5]})
    assert Q.p == 2
    assert Q.mass() == pytest.approx(1.0)
    assert wrap(boundary(Q)).canonical().is_empty()
    assert np.allclose(pl.class_vector(Q, 2, 2), [0, 1, 0, 0, 0, 0])


def test_bump_does_not_change_the_class():
    spec = {"subtorus": [1, 3], "at": [0.25, 0.5, 0.25, 0.5]}
    Q0 = pl.cycle_from_spec(2, (8,) * 4, spec)
    Q1 = pl.cycle_from_spec(2, (8,) * 4, {**spec, "bump": {"axes": [1, 2, 3], "at": [0.25, 0.5, 0.25, 0.5]}})
    assert np.allclose(pl.class_vector(Q0, 2, 2), pl.class_vector(Q1, 2, 2))
    assert Q1.mass() > Q0.mass()


def test_bad_q_specs():
    with pytest.raises(pl.ConfigError):
        pl.cycle_from_spec(1, (8, 8), {"at": [0, 0]})
    with pytest.raises(pl.ConfigError):
        pl.cycle_from_spec(1, (8, 8), {"subtorus": [3]})
    with pytest.raises(pl.ConfigError):
        pl.cycle_from_spec(2, (8,) * 4, {"subtorus": [1], "bump": {"axes": [1, 2, 3]}})
    with pytest.raises(pl.ConfigError):
        cfg(1, 32, 2, {"subtorus": [1]})
    with pytest.raises(pl.ConfigError):
        pl.PipelineConfig.from_json({"n": 1, "grid": 32})


def test_config_json_round_trip(tmp_path):
    c = cfg(1, 32, 1, {"subtorus": [1], "at": [0.0, 0.5]}, epsilon=0.125, label="x")
    (tmp_path / "c.json").write_text(json.dumps(c.to_json()))
    c2 = pl.PipelineConfig.from_json(tmp_path / "c.json")
    assert c2.to_json() == c.to_json()
    assert c2.mollifier_width == pytest.approx(1.5 / 32)


# ---------------------------------------------------------------- primitivity


def test_symplectic_class_is_rejected():
    with pytest.raises(pl.PrimitivityError) as e:
        pl.run(cfg(2, 8, 2, {"subtorus": [1, 2], "at": [0, 0, 0.5, 0.5]}))
    assert e.value.pairing["max"] == pytest.approx(1.0)


def test_lagrangian_class_is_primitive():
    Q = pl.cycle_from_spec(2, (8,) * 4, {"subtorus": [1, 3], "at": [0, 0.5, 0, 0.5]})
    assert pl.check_primitive_class(Q, 2, 2, 1e-10)["max"] == pytest.approx(0.0, abs=1e-14)


# ---------------------------------------------------------------- runs


def test_t2_circle_short_circuits(t2_report):
    r = t2_report
    assert r.branch == "T=Q" and r.ok
    assert r.harmonic["is_harmonic"]
    assert r.empty_ball.radius_cells >= 1.0
    assert r.empty_ball.max_norm_inside == 0.0
    assert r.class_pairings[0]["T"] == pytest.approx(1.0)


def test_full_path_residuals(full_report):
    r = full_report
    assert r.branch == "full" and r.ok, r.failures
    for key in ("dT", "LT", "class"):
        assert r.residuals[key] <= 1e-6
    for key in ("solve_local", "d_PS_equals_W", "LB_equals_PS", "deform_identity"):
        assert r.residuals[key] <= 1e-8
    assert r.deform_certificate["ok"]
    assert r.empty_ball.radius_cells >= 1.0


def test_full_path_T_is_primitive_closed_and_cohomologous(full_report):
    T = full_report.T
    assert tf.d(T).max_abs() < 1e-9
    assert tf.L(T).max_abs() < 1e-9
    # ∫ T ∧ e^{13} against ∫_Q e^{13}: both pair to the Lagrangian class
    vals = {tuple(c["form"]): (c["T"], c["Q"]) for c in full_report.class_pairings}
    t, q = vals[(1, 3)]
    assert t == pytest.approx(q) and abs(q) == pytest.approx(1.0)


def test_full_path_B_components_stay_in_source(full_report):
    assert full_report.B_components
    for c in full_report.B_components:
        assert c["support_nodes"] > 0


def test_artifacts_and_recheck(tmp_path):
    out = tmp_path / "run"
    r = pl.run(cfg(1, 32, 1, {"subtorus": [1], "at": [0.0, 0.5]}, out=str(out)))
    for name in ("T.sff", "F.sff", "Q.pchain", "config.json", "report.json"):
        assert (out / name).exists()
    chk = pl.recheck(out)
    assert chk["is_harmonic"] and chk["ball_clear"]
    saved = json.loads((out / "report.json").read_text())
    assert saved["branch"] == r.branch
    F = tf.load_sff(out / "F.sff")
    assert (F - r.F).max_abs() == 0.0


def test_report_rows_are_flat(t2_report):
    rows = dict(t2_report.rows())
    assert rows["branch"] == "T=Q"
    assert "residual.class" in rows


# ---------------------------------------------------------------- building blocks


def test_solve_local_is_supported_near_W():
    n, shape = 1, (16, 16)
    # W = d of a single cubical edge: exact and compactly supported
    e = np.zeros(shape + (2,))
    e[5, 6, 0] = 1.0
    G0 = tf.cube_to_field(n, e, 1)
    W = tf.d(G0)
    G, res = pl.solve_local(W)
    assert res < 1e-12
    assert (tf.d(G) - W).max_abs() < 1e-9
    supp = np.argwhere(G.pointwise_norm() > 1e-12)
    assert np.all(np.abs(supp - [5, 6]).max(axis=1) <= 3)


def test_solve_local_rejects_spectral():
    with pytest.raises(pl.DomainError):
        pl.solve_local(tf.random_field(1, 1, (8, 8), rng=0))


def test_find_empty_ball_on_point_support():
    c = np.zeros((16, 16, 1))
    c[0, 0, 0] = 1.0
    F = tf.FieldForm(1, 0, c, "cubical")
    b = pl.find_empty_ball(F, 1e-12)
    # farthest cell center from the cube [0, h]^2 on the torus
    assert b.radius == pytest.approx(np.hypot(7 / 16, 7 / 16), abs=1 / 16)
    assert b.max_norm_inside == 0.0
    full = tf.FieldForm(1, 0, np.ones((4, 4, 1)), "cubical")
    assert pl.find_empty_ball(full, 1e-12) is None


def test_decompose_B_vacuous_when_zero():
    B = tf.FieldForm(2, 1, np.zeros((4,) * 4 + (4,)), "cubical")
    assert all(c["support_nodes"] == 0 for c in pl.lefschetz_decompose_B(B, None))


def test_decompose_B_inside_source():
    shape = (6,) * 4
    mask = np.zeros(shape, bool)
    mask[2:4, 2:4, 2:4, 2:4] = True
    beta = tf.constant_field(PF.basis_form(2, 0, 2), shape, "cubical")
    beta = beta.with_coeffs(beta.coeffs * mask[..., None])
    B = beta + tf.L(tf.constant_field(PF.scalar(2), shape, "cubical").with_coeffs(mask[..., None] * 1.0))
    comps = pl.lefschetz_decompose_B(B, B)
    assert {c["r"] for c in comps if c["support_nodes"]} == {0, 1}


def test_decompose_B_leak_detected():
    shape = (6,) * 4
    mask = np.zeros(shape, bool)
    mask[2, 2, 2, 2] = True
    B = tf.constant_field(PF.basis_form(2, 0, 2), shape, "cubical")
    src = B.with_coeffs(B.coeffs * mask[..., None])
    with pytest.raises(pl.SupportLeakError) as e:
        pl.lefschetz_decompose_B(B, src)
    assert len(e.value.witness) == 4


def test_closed_battery_is_closed():
    for phi in pl.closed_battery(2, 2, 12, 0):
        d = phi.d()
        assert np.abs(d.coeffs).max(initial=0.0) < 1e-9


# ---------------------------------------------------------------- Thom classes


def test_thom_form_is_poincare_dual():
    for n, axes in ((1, [0]), (2, [0, 2]), (2, [0, 1]), (3, [1, 2, 5])):
        tau = pl.thom_form(n, axes)
        eA = PF.basis_form(n, *axes)
        assert (tau ^ eA).vector(2 * n)[0] == pytest.approx(1.0)


@pytest.mark.parametrize("n,axes,branch", [
    (1, [0], "small-support"),
    (2, [0, 2], "small-support"),
    (2, [0, 1], "nowhere-vanishing"),
    (3, [0, 2], "small-support"),
    (3, [0, 1, 2, 3], "nowhere-vanishing"),
])
def test_thom_branches(n, axes, branch):
    assert pl.thom_checks(n, axes).branch == branch


def test_thom_details():
    r = pl.thom_checks(1, [0])
    assert r.odd_codim and r.codim == 1
    r = pl.thom_checks(2, [0, 2])
    assert r.isotropic and r.omega_tau_zero and r.p == 1
    r = pl.thom_checks(2, [0, 1])
    assert r.symplectic and r.wedge_class_zero is False


def test_thom_rejects_bad_input():
    from symphodge import invariant as inv
    with pytest.raises(pl.DomainError):
        pl.thom_checks(2, [0, 0])
    with pytest.raises(pl.DomainError):
        pl.thom_checks(2, [0, 2], inv.kodaira_thurston())
