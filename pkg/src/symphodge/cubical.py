"""Cubical chains of the periodic grid on T^N and Whitney rasterization.

A cubical p-chain is an array ``c[x, I]`` over grid nodes x and sorted axis
sets I with ``|I| = p``; the cube ``(x, I)`` is ``x + [0, h]^I`` oriented by
increasing axes.  :func:`rasterize` sends a simplicial chain c to the grid
chain ``D(c)(x, I) = c(W_{x,I})`` where ``W_{x,I}`` is the tensor-product
Whitney form (hat functions across I, cell indicators along I).  D is a chain
map and is the identity on grid-aligned chains.
"""
from __future__ import annotations

import itertools

import numpy as np

from . import _simplex as sx
from .chains import PolyChain, multi_indices, simplex_minors
from .exteralg import DomainError

WALL_TOL = 1e-12


def clip_to_cells(c: PolyChain, h: np.ndarray | float, offset: np.ndarray | float = 0.0) -> PolyChain:
    """Split every simplex along the walls ``offset + h*Z`` of each axis."""
    N = c.N
    h = np.broadcast_to(np.asarray(h, float), (N,))
    offset = np.broadcast_to(np.asarray(offset, float), (N,))
    if c.is_empty() or c.p == 0:
        return c
    coeffs = list(c.coeffs)
    pieces = list(c.verts)
    for ax in range(N):
        new_c, new_v = [], []
        for a, V in zip(coeffs, pieces):
            lo, hi = V[:, ax].min(), V[:, ax].max()
            k0 = int(np.floor((lo - offset[ax]) / h[ax] + WALL_TOL)) + 1
            k1 = int(np.ceil((hi - offset[ax]) / h[ax] - WALL_TOL)) - 1
            work = [V]
            for kk in range(k0, k1 + 1):
                wall = offset[ax] + kk * h[ax]
                nxt = []
                for W in work:
                    below, above = sx.clip_simplex(W, ax, wall)
                    nxt.extend(below + above)
                work = nxt
            new_v.extend(work)
            new_c.extend([a] * len(work))
        coeffs, pieces = new_c, new_v
    if not pieces:
        return PolyChain.empty(N, c.p)
    return PolyChain(N, c.p, np.array(coeffs), np.stack(pieces))


def rasterize(c: PolyChain, shape: tuple[int, ...]) -> np.ndarray:
    """Whitney rasterization of a chain on the torus into cube coefficients."""
    N, p = c.N, c.p
    if len(shape) != N:
        raise DomainError("grid rank does not match the chain's ambient dimension")
    shape = tuple(shape)
    h = 1.0 / np.array(shape, dtype=float)
    out = np.zeros(shape + (len(multi_indices(N, p)),))
    if c.is_empty():
        return out
    pieces = clip_to_cells(c, h)
    if pieces.is_empty():
        return out
    V = pieces.verts
    cell = np.floor(V.mean(axis=1) / h).astype(int)  # (M, N) lower-corner index
    U = V / h - cell[:, None, :]  # local coordinates in [0, 1]
    bary, w = sx.simplex_rule(p, max(N - p, 1))
    Uq = np.einsum("qv,mvn->mqn", bary, U)  # (M, Q, N)
    minors = simplex_minors(V)  # (M, nI), in physical units
    for ci, I in enumerate(multi_indices(N, p)):
        J = [j for j in range(N) if j not in I]
        coef = pieces.coeffs * minors[:, ci] / float(np.prod(h[list(I)]) if I else 1.0)
        live = np.abs(coef) > 0
        if not np.any(live):
            continue
        for b in itertools.product((0, 1), repeat=len(J)):
            f = np.ones(Uq.shape[:2])
            for j, bj in zip(J, b):
                f = f * (Uq[:, :, j] if bj else 1.0 - Uq[:, :, j])
            val = coef * (f @ w)
            node = cell.copy()
            for j, bj in zip(J, b):
                node[:, j] += bj
            node %= np.array(shape)
            np.add.at(out[..., ci], tuple(node[live].T), val[live])
    return out


def rasterize_field(c: PolyChain, shape: tuple[int, ...]):
    from .torusfields import cube_to_field

    if c.N % 2:
        raise DomainError("field rasterization needs an even-dimensional torus")
    return cube_to_field(c.N // 2, rasterize(c, shape), c.p)


def cube_boundary(c: np.ndarray, N: int, p: int) -> np.ndarray:
    """Cubical boundary: ``∂(x, I) = Σ_k (-1)^k [(x + h e_{i_k}, I∖i_k) - (x, I∖i_k)]``."""
    shape = c.shape[:-1]
    out = np.zeros(shape + (len(multi_indices(N, p - 1)),))
    if p == 0:
        return out
    idx = {I: i for i, I in enumerate(multi_indices(N, p - 1))}
    for ci, I in enumerate(multi_indices(N, p)):
        for k, ik in enumerate(I):
            F = I[:k] + I[k + 1:]
            s = (-1) ** k
            # cube (x, I) contributes +s to face (x+e_ik, F) and -s to (x, F)
            out[..., idx[F]] += s * (np.roll(c[..., ci], 1, axis=ik) - c[..., ci])
    return out


def cubes_to_chain(c: np.ndarray, N: int, p: int, tol: float = 0.0) -> PolyChain:
    """Triangulate a cubical chain into an equivalent simplicial chain (Freudenthal)."""
    shape = c.shape[:-1]
    h = 1.0 / np.array(shape, dtype=float)
    coeffs, verts = [], []
    for ci, I in enumerate(multi_indices(N, p)):
        nodes = np.argwhere(np.abs(c[..., ci]) > tol)
        for x in nodes:
            a = c[tuple(x) + (ci,)]
            base = x * h
            if p == 0:
                coeffs.append(a)
                verts.append(base[None, :])
                continue
            for perm in itertools.permutations(range(p)):
                pts = [base.copy()]
                cur = base.copy()
                for k in perm:
                    cur = cur.copy()
                    cur[I[k]] += h[I[k]]
                    pts.append(cur)
                coeffs.append(a * _sign(perm))
                verts.append(np.array(pts))
    if not coeffs:
        return PolyChain.empty(N, p)
    return PolyChain(N, p, np.array(coeffs), np.stack(verts))


def _sign(perm) -> int:
    s = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                s = -s
    return s


def cube_support_mask(c: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Nodes x such that some cube (x, I) carries weight."""
    return np.abs(c).max(axis=-1) > tol if c.shape[-1] else np.zeros(c.shape[:-1], bool)
