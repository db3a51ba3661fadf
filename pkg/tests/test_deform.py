import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as o
from symphodge import chains as ch
from symphodge.chains import PolyChain, PolyForm
from symphodge.deform import (CertificationError, DeformResult, DegenerateError, GridSpec, deform,
                              skeletal_error, verify_certificate)
from symphodge.exteralg import DomainError


def identity_residual(T, res, forms):
    worst = 0.0
    for phi in forms:
        lhs = ch.evaluate(T, phi, 3)
        rhs = ch.evaluate(res.P, phi, 3) + ch.evaluate(res.S, phi, 3)
        if not res.R.is_empty():
            rhs += ch.evaluate(res.R, phi.d(), 3)
        worst = max(worst, abs(lhs - rhs))
    return worst


def test_aligned_segment_is_fixed():
    g = GridSpec(2, 0.25)
    T = PolyChain.simplex([[0.25, 0.5], [0.75, 0.5]])
    r = deform(T, g)
    assert r.R.is_empty() and r.S.is_empty()
    # P is T subdivided at the grid walls
    assert r.P.mass() == pytest.approx(T.mass())
    for seed in range(5):
        phi = PolyForm.random(2, 1, seed, order=3)
        assert ch.evaluate(r.P, phi) == pytest.approx(ch.evaluate(T, phi), abs=1e-13)
    assert r.certificate["ok"]


def test_staircase_stays_in_crossed_cells():
    g = GridSpec(2, 0.25)
    p0, p1 = [0.1, 0.2], [0.9, 0.65]
    T = PolyChain.simplex([p0, p1])
    r = deform(T, g)
    assert skeletal_error(r.P, g) <= 1e-10
    cells = o.segment_cells_2d(p0, p1, 0.25, 0.0)
    for V in r.P.verts:
        mid = V.mean(axis=0)
        # each P edge lies on the closure of a crossed cell
        near = {tuple(np.floor((mid + s) / 0.25).astype(int)) for s in
                ([1e-9, 1e-9], [-1e-9, 1e-9], [1e-9, -1e-9], [-1e-9, -1e-9])}
        assert near & cells
    # endpoints move to grid vertices, so ∂P = ∂T - ∂S
    forms = [PolyForm.random(2, 0, s, order=2) for s in range(5)]
    for phi in forms:
        lhs = ch.evaluate(ch.boundary(T), phi)
        rhs = ch.evaluate(ch.boundary(r.P), phi) + ch.evaluate(ch.boundary(r.S), phi)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_closed_loop_has_no_S_and_P_is_a_cycle():
    pts = np.array([[0.1, 0.1], [0.8, 0.3], [0.4, 0.9]])
    T = PolyChain.from_terms([(1.0, [pts[i], pts[(i + 1) % 3]]) for i in range(3)])
    r = deform(T, GridSpec(2, 0.25, [0.03, 0.07]))
    assert r.S.is_empty()
    assert ch.boundary(r.P).canonical().is_empty()
    assert r.certificate["ok"]


def test_identity_independent_battery():
    rng = np.random.default_rng(5)
    T = PolyChain(3, 2, rng.standard_normal(2), rng.uniform(0, 1, (2, 3, 3)))
    r = deform(T, GridSpec(3, 0.2, [0.01, 0.02, 0.03]))
    forms = [PolyForm.random(3, 2, s, order=3) for s in range(10, 20)]
    assert identity_residual(T, r, forms) <= 1e-9


@settings(max_examples=15)
@given(p=st.integers(1, 2), N=st.integers(2, 4), seed=st.integers(0, 10_000))
def test_support_bounds_and_skeleton(p, N, seed):
    if p >= N:
        return
    rng = np.random.default_rng(seed)
    T = PolyChain(N, p, rng.standard_normal(2), rng.uniform(0, 1, (2, p + 1, N)))
    g = GridSpec(N, 0.25, rng.uniform(0, 0.25, N))
    r = deform(T, g, seed=seed)
    c = r.certificate
    assert c["ok"]
    assert c["dist_PR_to_T"] <= 2 * N * 0.25
    assert c["dist_S_to_boundary_T"] <= 2 * N * 0.25
    assert c["skeletal_error"] <= 1e-10
    assert c["identity_residual"] <= 1e-8


def test_degenerate_center_retries_with_new_offset():
    g = GridSpec(2, 0.25)
    T = PolyChain(2, 0, np.array([1.0]), np.array([[[0.125, 0.125]]]))
    r = deform(T, g, seed=1)
    assert r.attempts > 1
    assert skeletal_error(r.P, r.grid) <= 1e-10
    with pytest.raises(DegenerateError):
        deform(T, g, max_retries=0)


def test_periodic_grid_and_wrapping():
    T = PolyChain.simplex([[0.9, 0.3], [1.2, 0.45]])
    g = GridSpec(2, 0.25, [0.1, 0.1], periodic=True)
    r = deform(T, g)
    assert r.certificate["ok"]
    w = r.wrapped()
    bc = w.P.verts.mean(axis=1)
    assert np.all((bc >= 0) & (bc < 1))


def test_tampered_result_fails_certificate():
    T = PolyChain.simplex([[0.1, 0.2], [0.9, 0.65]])
    g = GridSpec(2, 0.25)
    r = deform(T, g)
    bad = DeformResult(r.P * 2.0, r.R, r.S, g)
    with pytest.raises(CertificationError):
        verify_certificate(T, g, bad)
    cert = verify_certificate(T, g, bad, strict=False)
    assert not cert["ok"]


def test_result_json_round_trip(tmp_path):
    T = PolyChain.simplex([[0.1, 0.2], [0.9, 0.65]])
    r = deform(T, GridSpec(2, 0.25))
    r.save(tmp_path / "r.json")
    import json
    back = DeformResult.from_json(json.loads((tmp_path / "r.json").read_text()))
    assert (back.P - r.P).canonical().is_empty()
    assert back.certificate["ok"]


def test_gridspec_validation():
    with pytest.raises(DomainError):
        GridSpec(2, 0.0)
    with pytest.raises(DomainError):
        GridSpec(2, 0.25, [0.3, 0.0])
    with pytest.raises(DomainError):
        GridSpec(2, 0.3, periodic=True)
    with pytest.raises(DomainError):
        deform(PolyChain.simplex([[0, 0], [1, 0], [0, 1]]), GridSpec(2, 0.25))
