import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as o
from symphodge import exteralg as ea
from symphodge.exteralg import PointwiseForm as PF


def rand_form(n, k, seed):
    rng = np.random.default_rng(seed)
    return PF.from_vector(n, k, rng.standard_normal(ea.dim(n, k)))


def rand_mixed(n, seed):
    rng = np.random.default_rng(seed)
    terms = {}
    for k in range(2 * n + 1):
        for I, v in zip(ea.basis(n, k), rng.standard_normal(ea.dim(n, k))):
            terms[I] = v
    return PF(n, terms)


def omega_matrix(n):
    W = np.zeros((2 * n, 2 * n))
    for i in range(n):
        W[2 * i, 2 * i + 1], W[2 * i + 1, 2 * i] = 1.0, -1.0
    return W


# ---------------------------------------------------------------- symplectic form


def test_standard_form_n1():
    w, _ = ea.make_standard_symplectic(1)
    assert w.terms == {(0, 1): 1.0}


def test_standard_form_n2():
    w, _ = ea.make_standard_symplectic(2)
    assert w.terms == {(0, 1): 1.0, (2, 3): 1.0}


def test_omega_squared_matches_tensor_oracle():
    w, _ = ea.make_standard_symplectic(2)
    expected = o.wedge_dicts(4, 2, dict(w.terms), 2, dict(w.terms))
    assert expected == {(0, 1, 2, 3): 2.0}
    assert (w ^ w).terms == expected


# ---------------------------------------------------------------- wedge


def test_wedge_basics():
    e1, e2, e3 = (PF.basis_form(2, i) for i in range(3))
    assert (e1 ^ e2).terms == {(0, 1): 1.0}
    assert (e2 ^ e1).terms == {(0, 1): -1.0}
    assert ((e1 + e3) ^ (e1 + e3)).terms == {}


@given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 3), st.integers(0, 10_000))
def test_wedge_agrees_with_tensor_oracle(n, a, b, seed):
    if a + b > 2 * n or a > 2 * n or b > 2 * n:
        return
    A, B = rand_form(n, a, seed), rand_form(n, b, seed + 1)
    ref = o.wedge_dicts(2 * n, a, dict(A.terms), b, dict(B.terms))
    got = (A ^ B).terms
    for I in set(ref) | set(got):
        assert got.get(I, 0.0) == pytest.approx(ref.get(I, 0.0), abs=1e-10)


@given(st.integers(1, 3), st.integers(0, 10_000))
def test_wedge_graded_commutative_and_associative(n, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (int(x) for x in rng.integers(0, 3, size=3))
    A, B, C = rand_form(n, a, seed), rand_form(n, b, seed + 1), rand_form(n, c, seed + 2)
    assert (A ^ B).isclose((B ^ A) * (-1) ** (a * b), 1e-10)
    assert ((A ^ B) ^ C).isclose(A ^ (B ^ C), 1e-10)


# ---------------------------------------------------------------- L, Λ, H


def test_H_and_Lambda_trivial_values():
    e1 = PF.basis_form(2, 0)
    assert ea.counting_H(e1).isclose(e1)
    top = PF.basis_form(2, 0, 1, 2, 3)
    assert ea.counting_H(top).isclose(top * -2.0)
    assert ea.dual_lefschetz(PF.scalar(2)).terms == {}
    for n in (1, 2, 3):
        w, _ = ea.make_standard_symplectic(n)
        assert ea.dual_lefschetz(w).isclose(PF.scalar(n, float(n)))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_Lambda_is_euclidean_adjoint_of_L(n):
    # flat Kähler identity: Λ = L^T in the orthonormal basis e^I
    for k in range(2, 2 * n + 1):
        assert np.allclose(ea.Lambda_matrix(n, k), ea.L_matrix(n, k - 2).T)


@given(st.integers(1, 3), st.integers(0, 10_000))
def test_sl2_relations_on_mixed_forms(n, seed):
    a = rand_mixed(n, seed)
    L, Lam, H = ea.lefschetz_L, ea.dual_lefschetz, ea.counting_H
    assert (Lam(L(a)) - L(Lam(a))).isclose(H(a), 1e-12)
    assert (H(Lam(a)) - Lam(H(a))).isclose(Lam(a) * 2.0, 1e-12)
    assert (H(L(a)) - L(H(a))).isclose(L(a) * -2.0, 1e-12)


def test_sl2_n4_spot_check():
    a = rand_mixed(4, 3)
    L, Lam, H = ea.lefschetz_L, ea.dual_lefschetz, ea.counting_H
    assert (Lam(L(a)) - L(Lam(a))).isclose(H(a), 1e-12)


# ---------------------------------------------------------------- pairing and star


def test_pairing_trivial_values():
    e1, e2 = PF.basis_form(1, 0), PF.basis_form(1, 1)
    assert ea.pairing(PF.scalar(1), PF.scalar(1)) == 1.0
    assert ea.pairing(e1, e1) == 0.0
    # ω^{-1} has entry -1 at (x, y) for ω = dx∧dy
    assert ea.pairing(e1, e2) == -1.0
    assert np.linalg.inv(omega_matrix(1))[0, 1] == -1.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pairing_is_gram_determinant_of_inverse_omega(n):
    P = np.linalg.inv(omega_matrix(n))
    for k in range(2 * n + 1):
        assert np.allclose(ea.pairing_matrix(n, k), o.gram_pairing(n, k, P))


def test_pairing_e12_n2():
    a = PF.basis_form(2, 0, 1)
    assert ea.pairing(a, a) == pytest.approx(np.linalg.det(np.linalg.inv(omega_matrix(2))[:2, :2]))
    assert ea.pairing(a, a) == pytest.approx(1.0)


def test_star_trivial_values():
    for n in (1, 2, 3):
        vol = ea.omega_power(n, n) / math.factorial(n)
        assert ea.star(PF.scalar(n)).isclose(vol)
        assert ea.star(vol).isclose(PF.scalar(n))
    e1 = PF.basis_form(1, 0)
    assert ea.star(e1).isclose(e1 * -1.0)


@given(st.integers(1, 3), st.integers(0, 10_000))
def test_star_defining_identity(n, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, 2 * n + 1))
    a, b = rand_form(n, k, seed), rand_form(n, k, seed + 7)
    vol = ea.omega_power(n, n) / math.factorial(n)
    lhs = (a ^ ea.star(b)).vector(2 * n)[0]
    assert lhs == pytest.approx(ea.pairing(a, b) * vol.vector(2 * n)[0], abs=1e-10)


@given(st.integers(1, 3), st.integers(0, 10_000))
def test_star_involution(n, seed):
    a = rand_mixed(n, seed)
    for k in range(2 * n + 1):
        c = a.component(k)
        assert ea.star(ea.star(c)).isclose(c, 1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_star_on_lefschetz_components(n):
    # ⋆ L^r β = (-1)^{k(k+1)/2} r!/(n-k-r)! L^{n-k-r} β for primitive β of degree k
    for k in range(n + 1):
        B = ea.primitive_basis(n, k)
        for r in range(n - k + 1):
            lhs = ea.star_matrix(n, k + 2 * r) @ ea.L_power_matrix(n, r, k) @ B
            rhs = ea.L_power_matrix(n, n - k - r, k) @ B * math.factorial(r) / math.factorial(n - k - r)
            assert np.allclose(lhs, (-1) ** (k * (k + 1) // 2) * rhs)


# ---------------------------------------------------------------- decomposition


def test_decompose_omega():
    w, _ = ea.make_standard_symplectic(2)
    parts = dict(ea.lefschetz_decompose(w))
    assert parts[0].terms == {}
    assert parts[1].isclose(PF.scalar(2, 1.0))


def test_decompose_e12():
    w, _ = ea.make_standard_symplectic(2)
    parts = dict(ea.lefschetz_decompose(PF.basis_form(2, 0, 1)))
    assert parts[1].isclose(PF.scalar(2, 0.5))
    assert parts[0].isclose(PF.basis_form(2, 0, 1) - w * 0.5)
    assert ea.dual_lefschetz(parts[0]).terms == {}
    assert ea.is_primitive(PF.basis_form(2, 0, 1) - w * 0.5)


def test_decompose_primitive_is_itself():
    a = PF.basis_form(2, 0, 2)
    parts = ea.lefschetz_decompose(a)
    assert parts[0][0] == 0 and parts[0][1].isclose(a)
    assert all(not b.terms for r, b in parts if r > 0)


@given(st.integers(1, 3), st.integers(0, 10_000))
def test_decomposition_round_trip_and_primitivity(n, seed):
    k = int(np.random.default_rng(seed).integers(0, 2 * n + 1))
    a = rand_form(n, k, seed)
    parts = ea.lefschetz_decompose(a)
    assert ea.lefschetz_reconstruct(n, parts).isclose(a, 1e-10)
    for _, b in parts:
        if b.terms:
            assert ea.is_primitive(b, 1e-9)
    peeled = ea.peel_decompose_vector(n, k, a.vector(k))
    for (r1, b1), (r2, b2) in zip(ea.decompose_vector(n, k, a.vector(k)), peeled):
        assert r1 == r2 and np.allclose(b1, b2, atol=1e-10)


# ---------------------------------------------------------------- L-power inversion and primitivity


def test_invert_L_power_zero_is_identity():
    b = PF.basis_form(2, 0, 1)
    assert ea.invert_L_power(0, b).isclose(b)


def test_invert_top_power_gives_constant():
    for n in (1, 2, 3):
        vol = ea.omega_power(n, n) / math.factorial(n)
        c = ea.invert_L_power(n, vol * 2.5)
        assert c.isclose(PF.scalar(n, 2.5 / math.factorial(n)))


def test_invert_L_on_3form_n2():
    # ω∧a = e^{123}: a = e^1
    a = ea.invert_L_power(1, PF.basis_form(2, 0, 2, 3))
    assert a.isclose(PF.basis_form(2, 0))
    with pytest.raises(ea.DomainError):
        ea.invert_L_power(1, PF.basis_form(2, 0, 1))


@given(st.integers(1, 3), st.integers(0, 10_000))
def test_invert_L_power_round_trip(n, seed):
    k = int(np.random.default_rng(seed).integers(0, n + 1))
    a = rand_form(n, n - k, seed)
    b = a
    for _ in range(k):
        b = ea.lefschetz_L(b)
    assert ea.invert_L_power(k, b).isclose(a, 1e-9)


def test_is_primitive_values():
    for n in (1, 2, 3):
        assert ea.is_primitive(PF.basis_form(n, 0))
        assert ea.is_primitive(PF.scalar(n))
    w, _ = ea.make_standard_symplectic(2)
    assert not ea.is_primitive(w)
    assert ea.is_primitive(PF.basis_form(2, 0, 2))
    with pytest.raises(ea.DomainError):
        ea.is_primitive(PF.basis_form(2, 0, 1, 2))


# ---------------------------------------------------------------- comass


def test_comass_values():
    assert ea.comass(PF.basis_form(2, 0)).value == pytest.approx(1.0)
    a = PF(2, {(0, 1): 1.0, (2, 3): 1.0})
    est = ea.comass(a, seed=1)
    assert est.lower == pytest.approx(1.0, abs=1e-6)
    assert est.upper == pytest.approx(math.sqrt(2))
    est3 = ea.comass(a * -3.0, seed=1)
    assert est3.value == pytest.approx(3 * est.value, rel=1e-6)


def test_comass_lower_bound_is_attained_by_frame():
    a = rand_form(2, 2, 5)
    est = ea.comass(a, seed=2)
    assert est.frame is not None
    assert np.allclose(est.frame.T @ est.frame, np.eye(2), atol=1e-10)
    assert ea.simple_pairing(a.vector(2), 2, 2, est.frame) == pytest.approx(est.lower, abs=1e-9)
    assert est.lower <= est.upper + 1e-12


def test_json_round_trip():
    a = rand_mixed(2, 1)
    assert PF.from_json(a.to_json()).isclose(a)


def test_bad_indices_rejected():
    with pytest.raises(ea.DomainError):
        PF(1, {(0, 2): 1.0})
    with pytest.raises(ea.DomainError):
        PF(0, {})
