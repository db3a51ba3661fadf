import numpy as np
import pytest

from symphodge import currents as cu
from symphodge import exteralg as ea
from symphodge import torusfields as tf
from symphodge.chains import FormWedgeChain, PolyChain, boundary


def square(n, ax_a, ax_b, at):
    """The coordinate 2-torus along axes (ax_a, ax_b) through ``at``, as two triangles."""
    base = np.asarray(at, float)

    def pt(s, t):
        v = base.copy()
        v[ax_a], v[ax_b] = s, t
        return v

    return PolyChain.from_terms([(1.0, [pt(0, 0), pt(1, 0), pt(1, 1)]), (-1.0, [pt(0, 0), pt(0, 1), pt(1, 1)])])


def x_circle():
    return PolyChain.from_terms([(1.0, [[0.0, 0.3], [0.5, 0.3]]), (1.0, [[0.5, 0.3], [1.0, 0.3]])])


AT4 = [0.0, 0.5, 0.0, 0.5]


def spectral_current(k, seed=0, n=2):
    return cu.current(tf.random_field(n, k, (6,) * (2 * n), rng=seed))


# ---------------------------------------------------------------- chain currents


def test_x_circle_pairs_with_dx():
    T = cu.current(x_circle())
    assert T.degree == 1
    assert T(ea.PointwiseForm.basis_form(1, 0)) == pytest.approx(1.0)
    assert T(ea.PointwiseForm.basis_form(1, 1)) == pytest.approx(0.0, abs=1e-14)
    assert cu.battery_residual(cu.d_c(T)) < 1e-10


def test_lagrangian_torus_is_primitive():
    T = cu.current(square(2, 0, 2, AT4))
    assert T.degree == 2
    assert cu.battery_residual(cu.L_c(T)) < 1e-10
    assert cu.is_primitive_c(T)
    assert isinstance(cu.L_c(T).rep, FormWedgeChain)


def test_symplectic_torus_is_not_primitive():
    T = cu.current(square(2, 0, 1, AT4))
    assert abs(cu.L_c(T)(ea.PointwiseForm.scalar(2))) == pytest.approx(1.0)
    assert not cu.is_primitive_c(T)


def test_d_of_segment_is_signed_boundary():
    seg = PolyChain.simplex([[0.1, 0.2], [0.4, 0.7]])
    T = cu.current(seg)
    dT = cu.d_c(T)
    B = cu.current(boundary(seg))
    for phi in cu.battery(1, 0, 10):
        # degree 1: (dT)(φ) = T(dφ) = (∂T)(φ)
        assert dT(phi) == pytest.approx(B(phi), abs=1e-10)


def test_degree_mismatch_rejected():
    T = cu.current(x_circle())
    with pytest.raises(cu.DomainError):
        T(ea.PointwiseForm.scalar(1))


# ---------------------------------------------------------------- sl2 on currents


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_sl2_on_spectral_field_currents(k):
    T = spectral_current(k, seed=k)
    L, Lam, H = cu.L_c, cu.Lambda_c, cu.H_c
    assert cu.battery_difference(Lam(L(T)) - L(Lam(T)), H(T)) < 1e-10
    if k >= 2:
        assert cu.battery_difference(H(Lam(T)) - Lam(H(T)), Lam(T) * 2.0) < 1e-10
    if k <= 2:
        assert cu.battery_difference(H(L(T)) - L(H(T)), L(T) * -2.0) < 1e-10


def test_H_on_degree_zero_current_is_plus_n():
    T = spectral_current(0, seed=1)
    HT = cu.H_c(T)
    phi = cu.battery(2, 4, 1)[0]
    assert HT(phi) == pytest.approx(2 * T(phi))
    assert (HT.field - T.field * 2.0).max_abs() == 0.0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_field_reps_agree_with_dual_evaluators(k):
    T = spectral_current(k, seed=10 + k)
    for op in (cu.L_c, cu.Lambda_c, cu.star_c, cu.d_c, cu.H_c, cu.dlambda_c):
        S = op(T)
        if not 0 <= S.degree <= 4:
            continue
        assert S.rep is not None
        via_field = cu.current(S.field)
        assert cu.battery_difference(S, via_field) < 1e-9, op.__name__


def test_cubical_currents_keep_only_dual_evaluator():
    f = tf.random_field(1, 1, (8, 8), rng=0, scheme="cubical")
    T = cu.current(f)
    for op in (cu.L_c, cu.Lambda_c, cu.star_c):
        S = op(T)
        if 0 <= S.degree <= 2:
            assert S.rep is None
            with pytest.raises(cu.RepresentationError):
                S.field
    assert cu.d_c(T).rep is not None


def test_dlambda_anticommutes_with_d():
    T = spectral_current(2, seed=3)
    lhs = cu.d_c(cu.dlambda_c(T)) + cu.dlambda_c(cu.d_c(T))
    assert cu.battery_residual(lhs) < 1e-9


def test_star_involution_on_currents():
    T = spectral_current(2, seed=4)
    assert cu.battery_difference(cu.star_c(cu.star_c(T)), T) < 1e-10


# ---------------------------------------------------------------- decomposition and inversion


def test_lefschetz_decomposition_of_field_current():
    T = spectral_current(2, seed=5)
    parts = cu.lefschetz_decompose_c(T)
    assert cu.battery_difference(cu.lefschetz_reconstruct_c(parts), T) < 1e-10
    for r, b in parts:
        if b.degree >= 2:
            assert cu.is_primitive_c(b)


def test_invert_L_power_round_trip():
    T = spectral_current(1, seed=6)
    back = cu.invert_L_power_c(1, cu.L_c(T))
    assert cu.battery_difference(back, T) < 1e-10


def test_decompose_needs_field():
    with pytest.raises(cu.RepresentationError):
        cu.lefschetz_decompose_c(cu.current(x_circle()))


# ---------------------------------------------------------------- smoothing


def test_smoothing_is_dual_to_mollified_test_forms():
    f = tf.random_field(1, 1, (16, 16), rng=2)
    T = cu.current(f)
    m = tf.Mollifier(0.2, (16, 16))
    S = cu.smooth_c(T, m)
    for phi in cu.battery(1, 1, 5, seed=3):
        assert S(phi) == pytest.approx(T(cu.mollify_test_form(phi, m)), abs=1e-10)


def test_smoothing_a_chain_current():
    m = tf.Mollifier(0.2, (16, 16))
    S = cu.smooth_c(cu.current(x_circle()), m)
    assert S.rep is not None
    assert S(ea.PointwiseForm.basis_form(1, 0)) == pytest.approx(1.0)
    with pytest.raises(cu.RepresentationError):
        cu.smooth_c(cu.L_c(cu.current(square(2, 0, 2, AT4))), tf.Mollifier(0.2, (8,) * 4))


def test_current_json_round_trip():
    for T in (cu.current(x_circle()), spectral_current(1, n=1),
              cu.current(FormWedgeChain(ea.PointwiseForm.basis_form(1, 1), x_circle()))):
        back = cu.DualCurrent.from_json(T.to_json())
        assert back.degree == T.degree
        assert cu.battery_difference(back, T) < 1e-12
