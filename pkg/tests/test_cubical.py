import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symphodge import cubical as cb
from symphodge import torusfields as tf
from symphodge.chains import PolyChain, boundary, multi_indices, wrap


def random_cubes(shape, N, p, seed):
    return np.random.default_rng(seed).standard_normal(tuple(shape) + (len(multi_indices(N, p)),))


@given(p=st.integers(2, 3), seed=st.integers(0, 1000))
def test_cube_boundary_squares_to_zero(p, seed):
    c = random_cubes((4, 4, 4), 3, p, seed)
    assert np.abs(cb.cube_boundary(cb.cube_boundary(c, 3, p), 3, p - 1)).max() < 1e-12


def test_unit_square_boundary():
    c = np.zeros((4, 4, 1))
    c[1, 1, 0] = 1.0
    b = cb.cube_boundary(c, 2, 2)
    # edges along x (index 0) at y=1 (+) and y=2 (-); along y at x=1 (-) and x=2 (+)
    assert b[1, 1, 0] == 1.0 and b[1, 2, 0] == -1.0
    assert b[1, 1, 1] == -1.0 and b[2, 1, 1] == 1.0
    assert np.count_nonzero(b) == 4


@given(p=st.integers(1, 2), seed=st.integers(0, 1000))
def test_field_d_is_signed_cube_boundary(p, seed):
    c = random_cubes((5, 5), 2, p, seed)
    f = tf.cube_to_field(1, c, p)
    k = f.degree
    lhs = tf.field_to_cube_coeffs(tf.d(f))
    assert np.allclose(lhs, (-1) ** (k + 1) * cb.cube_boundary(c, 2, p), atol=1e-12)


def test_cube_field_round_trip():
    c = random_cubes((4, 6), 2, 1, 0)
    assert np.allclose(tf.field_to_cube_coeffs(tf.cube_to_field(1, c, 1)), c)


def test_rasterize_aligned_chain_is_identity():
    c = np.zeros((4, 4, 4, 4, len(multi_indices(4, 2))))
    c[1, 2, 0, 3, 0] = 2.0
    c[3, 3, 3, 3, 5] = -1.0
    chain = cb.cubes_to_chain(c, 4, 2)
    assert np.allclose(cb.rasterize(chain, (4, 4, 4, 4)), c, atol=1e-12)


def test_rasterize_is_chain_map():
    chain = PolyChain.from_terms([(1.0, [[0.13, 0.21], [0.71, 0.43], [0.35, 0.88]])])
    shape = (8, 8)
    lhs = cb.cube_boundary(cb.rasterize(chain, shape), 2, 2)
    rhs = cb.rasterize(wrap(boundary(chain)), shape)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_rasterize_preserves_total_flux():
    # the x-extent of a segment equals the total dx-weight of its image
    chain = PolyChain.from_terms([(1.0, [[0.1, 0.2], [0.6, 0.45]])])
    c = cb.rasterize(chain, (8, 8))
    assert c[..., 0].sum() * (1 / 8) == pytest.approx(0.5)
    assert c[..., 1].sum() * (1 / 8) == pytest.approx(0.25)


def test_clip_to_cells_preserves_mass():
    chain = PolyChain.from_terms([(1.0, [[0.05, 0.1], [0.9, 0.7], [0.3, 0.95]])])
    clipped = cb.clip_to_cells(chain, 0.25)
    assert clipped.mass() == pytest.approx(chain.mass())
    lo = np.floor(clipped.verts.min(axis=1) / 0.25 + 1e-9)
    hi = np.ceil(clipped.verts.max(axis=1) / 0.25 - 1e-9)
    assert np.all(hi - lo <= 1)


def test_support_mask():
    c = np.zeros((4, 4, 2))
    c[2, 1, 1] = 0.5
    m = cb.cube_support_mask(c)
    assert m.sum() == 1 and m[2, 1]


def test_rasterize_rank_mismatch():
    with pytest.raises(cb.DomainError):
        cb.rasterize(PolyChain.from_terms([(1.0, [[0.0, 0.0], [0.5, 0.0]])]), (4, 4, 4))
