"""Low-level simplex geometry: quadrature, clipping, distances."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.spatial import Delaunay, QhullError

CLIP_TOL = 1e-12


@lru_cache(maxsize=None)
def simplex_rule(p: int, degree: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Legendre rule on the unit p-simplex.

    Returns barycentric points of shape ``(q, p+1)`` and weights summing to
    ``1/p!``; exact for polynomials of total degree ``<= degree``.
    """
    if p == 0:
        return np.ones((1, 1)), np.ones(1)
    m = max(1, math.ceil((degree + p) / 2))
    g, w = np.polynomial.legendre.leggauss(m)
    g, w = (g + 1) / 2, w / 2
    grids = np.meshgrid(*([g] * p), indexing="ij")
    wgrids = np.meshgrid(*([w] * p), indexing="ij")
    U = np.stack([a.ravel() for a in grids], axis=1)
    W = np.prod(np.stack([a.ravel() for a in wgrids], axis=1), axis=1)
    X = np.empty_like(U)
    rest = np.ones(len(U))
    jac = np.ones(len(U))
    for i in range(p):
        X[:, i] = rest * U[:, i]
        jac *= (1 - U[:, i]) ** (p - 1 - i) if i < p - 1 else 1.0
        rest = rest * (1 - U[:, i])
    bary = np.column_stack([1 - X.sum(axis=1), X])
    return bary, W * jac


def edge_matrix(V: np.ndarray) -> np.ndarray:
    """Columns v_i - v_0, shape (N, p)."""
    return (V[1:] - V[0]).T


def volume(V: np.ndarray) -> float:
    p = len(V) - 1
    if p == 0:
        return 1.0
    J = edge_matrix(V)
    g = np.linalg.det(J.T @ J)
    return math.sqrt(max(g, 0.0)) / math.factorial(p)


def _local_coords(V: np.ndarray, pts: np.ndarray) -> np.ndarray:
    J = edge_matrix(V)
    return np.linalg.lstsq(J, (pts - V[0]).T, rcond=None)[0].T


def orient_like(parent: np.ndarray, child: np.ndarray) -> np.ndarray | None:
    """Reorder ``child`` to share the parent's orientation; None if degenerate."""
    p = len(child) - 1
    if p == 0:
        return child
    lc = _local_coords(parent, child)
    det = np.linalg.det((lc[1:] - lc[0]).T) if p > 0 else 1.0
    if abs(det) < 1e-14:
        return None
    if det < 0:
        child = child.copy()
        child[[0, 1]] = child[[1, 0]]
    return child


def _dedupe(pts: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    out: list[np.ndarray] = []
    for q in pts:
        if all(np.abs(q - r).max() > tol for r in out):
            out.append(q)
    return np.array(out)


def _triangulate(parent: np.ndarray, pts: np.ndarray) -> list[np.ndarray]:
    """Triangulate the convex hull of ``pts`` lying in the parent's affine hull."""
    p = len(parent) - 1
    pts = _dedupe(pts)
    if len(pts) < p + 1:
        return []
    if p == 1:
        lc = _local_coords(parent, pts)[:, 0]
        a, b = pts[np.argmin(lc)], pts[np.argmax(lc)]
        if abs(lc.max() - lc.min()) < 1e-14:
            return []
        return [np.array([a, b])]
    lc = _local_coords(parent, pts)
    if len(pts) == p + 1:
        simplices = [np.arange(p + 1)]
    else:
        try:
            simplices = Delaunay(lc).simplices
        except QhullError:
            return []
    out = []
    for s in simplices:
        c = orient_like(parent, pts[s])
        if c is not None and volume(c) > 1e-15:
            out.append(c)
    return out


def clip_simplex(V: np.ndarray, axis: int, value: float) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Split an oriented simplex by the hyperplane ``x[axis] = value``.

    Returns ``(below, above)`` lists of oriented child simplices.
    """
    return clip_simplex_halfspace(V, np.eye(V.shape[1])[axis], value)


def clip_simplex_halfspace(V: np.ndarray, normal: np.ndarray, value: float):
    s = V @ normal - value
    if np.all(s <= CLIP_TOL):
        return [V], []
    if np.all(s >= -CLIP_TOL):
        return [], [V]
    p = len(V) - 1
    if p == 0:
        return ([V], []) if s[0] < 0 else ([], [V])
    cuts = []
    for i in range(p + 1):
        for j in range(i + 1, p + 1):
            if (s[i] < -CLIP_TOL and s[j] > CLIP_TOL) or (s[i] > CLIP_TOL and s[j] < -CLIP_TOL):
                t = s[i] / (s[i] - s[j])
                cuts.append(V[i] + t * (V[j] - V[i]))
    on = [V[i] for i in range(p + 1) if abs(s[i]) <= CLIP_TOL]
    cut_pts = np.array(cuts + on)
    below = np.vstack([V[s < -CLIP_TOL], cut_pts])
    above = np.vstack([V[s > CLIP_TOL], cut_pts])
    return _triangulate(V, below), _triangulate(V, above)


# --------------------------------------------------------------------------
# distances


def _point_segment(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    dd = d @ d
    t = np.clip(((P - a) @ d) / dd, 0.0, 1.0) if dd > 0 else np.zeros(len(P))
    return np.linalg.norm(P - (a + t[:, None] * d), axis=1)


def point_simplex_distance(P: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Euclidean distance from each row of ``P`` to the closed simplex ``V``."""
    P = np.atleast_2d(P)
    p = len(V) - 1
    if p == 0:
        return np.linalg.norm(P - V[0], axis=1)
    if p == 1:
        return _point_segment(P, V[0], V[1])
    J = edge_matrix(V)
    lam = np.linalg.lstsq(J, (P - V[0]).T, rcond=None)[0].T
    bary = np.column_stack([1 - lam.sum(axis=1), lam])
    inside = np.all(bary >= -1e-14, axis=1)
    proj = V[0] + lam @ J.T
    d_in = np.linalg.norm(P - proj, axis=1)
    faces = [np.delete(V, i, axis=0) for i in range(p + 1)]
    d_face = np.min([point_simplex_distance(P, F) for F in faces], axis=0)
    return np.where(inside, d_in, d_face)


def sample_points(V: np.ndarray, degree: int = 3) -> np.ndarray:
    """Vertices plus interior quadrature points, for support sampling."""
    bary, _ = simplex_rule(len(V) - 1, degree)
    return np.vstack([V, bary @ V])
