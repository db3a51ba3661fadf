import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as o
from symphodge import exteralg as ea
from symphodge import invariant as inv


@pytest.fixture(scope="module", params=list(inv.MODELS))
def model(request):
    return inv.MODELS[request.param]()


@pytest.fixture(scope="module")
def reports():
    return {name: inv.report(f()) for name, f in inv.MODELS.items()}


def test_betti_matches_bracket_oracle(model):
    assert inv.cohomology(model).betti == o.betti_from_bracket(model.N, model.C())


def test_d_matches_tensor_oracle(model):
    for k in range(model.N):
        assert np.allclose(model.d(k), o.ce_differential_tensor(model.N, k, model.C()))


def test_d_squares_to_zero_and_jacobi(model):
    assert model.jacobi_residual() < 1e-12
    for k in range(model.N - 1):
        assert np.abs(model.d(k + 1) @ model.d(k)).max(initial=0.0) < 1e-12


def test_omega_closed_and_sl2(model):
    w = model.omega.vector(2)
    assert np.abs(model.d(2) @ w).max(initial=0.0) < 1e-12
    assert model.check_sl2() < 1e-10


def test_rank_nullity(model):
    coh = inv.cohomology(model)
    for k in range(model.N + 1):
        rk = inv.rank(model.d(k)) if k < model.N else 0
        rk_prev = inv.rank(model.d(k - 1)) if k else 0
        assert coh.betti[k] == ea.dim(model.n, k) - rk - rk_prev
    assert coh.betti == coh.betti[::-1]
    assert inv.cohomology(model, exact=True).betti == coh.betti


def test_torus_values(reports):
    assert reports["T4"].betti == [1, 4, 6, 4, 1]
    assert reports["T4"].hl_iso == [True, True, True]
    assert reports["T6"].betti == [math.comb(6, k) for k in range(7)]


def test_kodaira_thurston_values(reports):
    r = reports["kodaira-thurston"]
    assert r.betti[1] == 3
    assert r.betti == [1, 3, 4, 3, 1]
    assert r.hl_iso == [True, False, True]


@pytest.mark.parametrize("name", ["T2", "T4", "T6"])
def test_primitive_cohomology_dimensions_on_tori(reports, name):
    r = reports[name]
    N = len(r.betti) - 1
    for k in range(1, N // 2 + 1):
        expected = math.comb(N, k) - (math.comb(N, k - 2) if k >= 2 else 0)
        assert r.ph_dims[k] == expected
        assert r.phd_dims[k - 1] == expected
        assert r.natmap_rank[k - 1] == expected


def test_triple_equality_on_hard_lefschetz_models(reports):
    for r in reports.values():
        if all(r.hl_iso):
            assert all(a == b == c for a, b, c in r.ddlambda_dims), r.model


def test_triple_equality_fails_without_hard_lefschetz(reports):
    r = reports["kodaira-thurston"]
    assert not all(a == b == c for a, b, c in r.ddlambda_dims)


def test_d_preserves_pprime(reports):
    for r in reports.values():
        assert all(r.d_preserves_pprime)


def test_hyperelliptic_has_nonzero_ddlambda_image(reports):
    assert reports["hyperelliptic"].ddlambda_dims[2] == (2, 2, 2)
    assert reports["hyperelliptic"].betti == [1, 2, 2, 2, 1]


def test_decompose_reconstructs(model):
    rng = np.random.default_rng(0)
    for k in range(model.N + 1):
        v = rng.standard_normal(ea.dim(model.n, k))
        parts = inv.decompose(model, k, v)
        total = sum(model.L_power(r, k - 2 * r) @ b for r, b in parts)
        assert np.allclose(total, v)
        for r, b in parts:
            if k - 2 * r >= 2:
                assert np.abs(model.Lambda(k - 2 * r) @ b).max() < 1e-10


@given(seed=st.integers(0, 10_000))
def test_primitive_ddlambda_refine(seed):
    m = inv.hyperelliptic()
    B = inv.primitive_ddl_image(m, 2)
    assert B.shape[1] == 2
    alpha = B @ np.random.default_rng(seed).standard_normal(2)
    beta = inv.primitive_ddlambda_refine(m, alpha, 2)
    assert np.abs(m.Lambda(2) @ beta).max() < 1e-9
    assert np.allclose(inv.ddl_matrix(m, 2) @ beta, alpha, atol=1e-9)


def test_refine_rejects_non_primitive():
    m = inv.hyperelliptic()
    with pytest.raises(inv.DomainError):
        inv.primitive_ddlambda_refine(m, m.omega.vector(2), 2)


def test_model_json_round_trip():
    m = inv.kodaira_thurston()
    m2 = inv.CEModel.from_json(m.to_json())
    assert m2.structure == m.structure
    assert inv.cohomology(m2).betti == [1, 3, 4, 3, 1]


def test_bad_structure_rejected():
    w, _ = ea.make_standard_symplectic(2)
    with pytest.raises(inv.ModelError):
        inv.CEModel(2, {(0, 0, 1): 1.0}, w)
    with pytest.raises(inv.ModelError):
        # with d e^3 = e^1∧e^2 the standard ω has d ω = e^{124} != 0
        inv.CEModel(2, {(0, 1, 2): -1.0}, w)
