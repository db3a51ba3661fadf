"""Grid-scale deformation of polyhedral chains onto the p-skeleton.

The chain is clipped to the cells of the ε-grid, then for q = N, ..., p+1
every piece that spans a q-face is pushed radially from the face center onto
the face boundary.  Radial projection inside one pyramid
``{s (x_a - c_a) >= |x_b - c_b|}`` is a central projection, so flat simplices
stay flat and the straight-line homotopy is the prism
``h[v_0..v_p] = Σ_i (-1)^i [v_0..v_i, w_i..w_p]`` with ``∂h + h∂ = ψ - id``.
Iterating ``T = ψT - ∂(hT) - h(∂T)`` gives ``T = P + ∂R + S``.

Periodic runs deform the lift in R^N (the grid is lattice-periodic, so the
construction is equivariant) and wrap only for reporting; the identity can
then be certified exactly with polynomial test forms on the lift.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _simplex as sx
from .chains import ChainQuadrature, PolyChain, SupportSet, boundary, form_battery, wrap
from .cubical import clip_to_cells
from .exteralg import DomainError

WALL_TOL = 1e-10
CENTER_TOL = 1e-9


class DegenerateError(RuntimeError):
    """A piece of the chain passes through a projection center."""


class CertificationError(AssertionError):
    def __init__(self, msg: str, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True, eq=False)
class GridSpec:
    ambient_N: int
    epsilon: float
    offset: np.ndarray = None
    periodic: bool = False
    period: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        off = np.zeros(self.ambient_N) if self.offset is None else np.asarray(self.offset, dtype=float)
        off = np.broadcast_to(off, (self.ambient_N,)).copy()
        if np.any(off < 0) or np.any(off >= self.epsilon):
            raise DomainError("offset must lie in [0, epsilon)^N")
        object.__setattr__(self, "offset", off)
        if self.periodic:
            ratio = self.period / self.epsilon
            if abs(ratio - round(ratio)) > 1e-9:
                raise DomainError("periodic grids need epsilon dividing the period")

    @property
    def bound(self) -> float:
        return 2 * self.ambient_N * self.epsilon

    def with_offset(self, offset) -> "GridSpec":
        return GridSpec(self.ambient_N, self.epsilon, offset, self.periodic, self.period)

    def to_json(self) -> dict:
        return {"N": self.ambient_N, "epsilon": self.epsilon, "offset": self.offset.tolist(),
                "periodic": self.periodic, "period": self.period}

    @classmethod
    def from_json(cls, obj: dict) -> "GridSpec":
        return cls(int(obj["N"]), float(obj["epsilon"]), obj.get("offset"),
                   bool(obj.get("periodic", False)), float(obj.get("period", 1.0)))


@dataclass(eq=False)
class DeformResult:
    P: PolyChain
    R: PolyChain
    S: PolyChain
    grid: GridSpec
    certificate: dict = field(default_factory=dict)
    attempts: int = 1

    def wrapped(self) -> "DeformResult":
        if not self.grid.periodic:
            return self
        L = self.grid.period
        return DeformResult(wrap(self.P, L).canonical(), wrap(self.R, L).canonical(),
                            wrap(self.S, L).canonical(), self.grid, self.certificate, self.attempts)

    def to_json(self) -> dict:
        return {"grid": self.grid.to_json(), "P": self.P.to_json(), "R": self.R.to_json(),
                "S": self.S.to_json(), "certificate": self.certificate, "attempts": self.attempts}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def from_json(cls, obj: dict) -> "DeformResult":
        return cls(PolyChain.from_json(obj["P"]), PolyChain.from_json(obj["R"]),
                   PolyChain.from_json(obj["S"]), GridSpec.from_json(obj["grid"]),
                   obj.get("certificate", {}), obj.get("attempts", 1))


# --------------------------------------------------------------------------
# one projection level


def _free_axes(verts: np.ndarray, g: GridSpec) -> np.ndarray:
    """(M, N) mask: axis is free unless every vertex sits on the same grid wall."""
    x = verts  # (M, V, N)
    spread = x.max(axis=1) - x.min(axis=1)
    t = (x[:, 0, :] - g.offset) / g.epsilon
    on_wall = np.abs(t - np.round(t)) < WALL_TOL
    return ~((spread < WALL_TOL * g.epsilon) & on_wall)


def _centers(verts: np.ndarray, free: np.ndarray, g: GridSpec) -> np.ndarray:
    bc = verts.mean(axis=1)
    cell = np.floor((bc - g.offset) / g.epsilon)
    c = g.offset + g.epsilon * (cell + 0.5)
    return np.where(free, c, verts[:, 0, :])


def _prism(V: np.ndarray, W: np.ndarray) -> tuple[list[float], list[np.ndarray]]:
    p = len(V) - 1
    signs, pieces = [], []
    for i in range(p + 1):
        signs.append((-1.0) ** i)
        pieces.append(np.vstack([V[: i + 1], W[i:]]))
    return signs, pieces


def _project_level(chain: PolyChain, g: GridSpec, q: int) -> tuple[PolyChain, PolyChain]:
    """Apply ψ_q; returns (ψ chain, homotopy chain h(chain))."""
    N, p = chain.N, chain.p
    empty_h = PolyChain.empty(N, p + 1)
    if chain.is_empty():
        return chain, empty_h
    free = _free_axes(chain.verts, g)
    nfree = free.sum(axis=1)
    if np.any(nfree > q):
        raise AssertionError("piece above the current skeleton level")
    keep = nfree < q
    out_c, out_v = list(chain.coeffs[keep]), list(chain.verts[keep])
    h_c, h_v = [], []
    idx = np.nonzero(~keep)[0]
    if len(idx):
        centers = _centers(chain.verts[idx], free[idx], g)
    for row, i in enumerate(idx):
        a0, V, c = chain.coeffs[i], chain.verts[i], centers[row]
        A = np.nonzero(free[i])[0]
        pieces = [V]
        for ii, a in enumerate(A):
            for b in A[ii + 1:]:
                for sgn in (1.0, -1.0):
                    nrm = np.zeros(N)
                    nrm[a], nrm[b] = 1.0, -sgn
                    val = nrm @ c
                    nxt = []
                    for W in pieces:
                        lo, hi = sx.clip_simplex_halfspace(W, nrm, val)
                        nxt.extend(lo + hi)
                    pieces = nxt
        for W in pieces:
            rel = W - c
            radial = np.abs(rel[:, A]).max(axis=1)
            if radial.min() < CENTER_TOL * g.epsilon:
                raise DegenerateError("chain meets a projection center")
            bc = rel.mean(axis=0)
            a = A[np.argmax(np.abs(bc[A]))]
            s = np.sign(bc[a])
            t = (0.5 * g.epsilon) / (s * rel[:, a])
            if np.any(t <= 0) or np.any(np.abs(rel[:, A]).max(axis=1) > s * rel[:, a] * (1 + 1e-9) + 1e-12):
                raise AssertionError("piece straddles a pyramid boundary")
            img = c + rel * t[:, None]
            img[:, a] = c[a] + s * 0.5 * g.epsilon
            out_c.append(a0)
            out_v.append(img)
            sg, pr = _prism(W, img)
            h_c.extend(a0 * x for x in sg)
            h_v.extend(pr)
    proj = PolyChain(N, p, np.array(out_c), np.stack(out_v)) if out_c else PolyChain.empty(N, p)
    hom = PolyChain(N, p + 1, np.array(h_c), np.stack(h_v)) if h_c else empty_h
    if p > 0:
        proj = proj.drop_degenerate()
    return proj, hom.drop_degenerate()


def _deform_once(T: PolyChain, g: GridSpec) -> tuple[PolyChain, PolyChain, PolyChain]:
    N, p = T.N, T.p
    cur = clip_to_cells(T.canonical(), g.epsilon, g.offset)
    if p > 0:
        cur = cur.drop_degenerate()
    B = clip_to_cells(boundary(T), g.epsilon, g.offset) if p > 0 else None
    R = PolyChain.empty(N, p + 1)
    S = PolyChain.empty(N, p)
    for q in range(N, p, -1):
        cur, hT = _project_level(cur, g, q)
        R = R - hT
        if B is not None:
            B, hB = _project_level(B, g, q)
            S = S - hB
    return cur.canonical(), R.canonical(), S.canonical()


def deform(T: PolyChain, g: GridSpec, seed: int = 0, max_retries: int = 8, certify: bool = True,
           battery: int = 50) -> DeformResult:
    """Decompose ``T = P + ∂R + S`` with P on the ε-grid p-skeleton."""
    if T.N != g.ambient_N:
        raise DomainError("grid and chain disagree on the ambient dimension")
    if T.p >= T.N:
        raise DomainError("deformation needs p < N")
    rng = np.random.default_rng(seed)
    grid = g
    for attempt in range(1, max_retries + 2):
        try:
            P, R, S = _deform_once(T, grid)
        except DegenerateError:
            if attempt > max_retries:
                raise
            grid = g.with_offset(rng.uniform(0, g.epsilon, size=g.ambient_N))
            continue
        res = DeformResult(P, R, S, grid, attempts=attempt)
        if certify:
            res.certificate = verify_certificate(T, grid, res, battery=battery, seed=seed)
        return res
    raise DegenerateError("unreachable")


# --------------------------------------------------------------------------
# certificate


def _max_distance(src: PolyChain, target: SupportSet) -> tuple[float, np.ndarray | None]:
    if src.is_empty():
        return 0.0, None
    pts = SupportSet(src).points()
    if target.empty:
        return math.inf, pts[0]
    dist = target.distance(pts)
    k = int(np.argmax(dist))
    return float(dist[k]), pts[k]


def skeletal_error(P: PolyChain, g: GridSpec) -> float:
    """Largest violation of 'each simplex of P lies in one grid p-face'."""
    if P.is_empty():
        return 0.0
    free = _free_axes(P.verts, g)
    if np.any(free.sum(axis=1) > P.p):
        return math.inf
    bc = P.verts.mean(axis=1)
    cell = np.floor((bc - g.offset) / g.epsilon)
    lo = g.offset + g.epsilon * cell
    over = np.maximum(lo[:, None, :] - P.verts, P.verts - (lo + g.epsilon)[:, None, :])
    return float(max(0.0, over.max()))


def verify_certificate(T: PolyChain, g: GridSpec, result: DeformResult, battery: int = 50,
                       seed: int = 0, tol: float = 1e-8, strict: bool = True) -> dict:
    """Recheck support bounds, skeletality and ``T = P + ∂R + S`` on a form battery."""
    period = g.period if g.periodic else None
    P, R, S = result.P, result.R, result.S
    suppT = SupportSet(T.canonical(), period)
    dT = boundary(T) if T.p > 0 else PolyChain.empty(T.N, 0)
    supp_dT = SupportSet(dT, period)
    dPR = max(_max_distance(P, suppT), _max_distance(R, suppT), key=lambda t: t[0])
    dS = _max_distance(S, supp_dT)

    lo, hi = T.bbox()
    center, scale = (lo + hi) / 2, max(float(np.max(hi - lo)), g.epsilon)
    forms = form_battery(T.N, T.p, battery, seed, order=2, center=center, scale=scale)
    mass_scale = T.mass() + P.mass() + R.mass() + S.mass()
    qT, qP, qR, qS = (ChainQuadrature(x, 2) for x in (T, P, R, S))
    dforms = [phi.d() for phi in forms]
    res = qT.integrate_batch(forms) - qP.integrate_batch(forms) - qR.integrate_batch(dforms) - qS.integrate_batch(forms)
    worst = float(np.abs(res).max(initial=0.0))
    skel = skeletal_error(P, g)
    cert = {
        "bound": g.bound,
        "dist_PR_to_T": dPR[0],
        "dist_S_to_boundary_T": dS[0],
        "identity_residual": worst,
        "identity_tolerance": tol * (1 + mass_scale),
        "skeletal_error": skel,
        "mass_T": T.mass(), "mass_P": P.mass(), "mass_R": R.mass(), "mass_S": S.mass(),
        "epsilon": g.epsilon, "offset": g.offset.tolist(), "attempts": result.attempts,
    }
    slack = 1e-9
    problems = []
    if dPR[0] > g.bound + slack:
        problems.append(("supp P ∪ supp R too far from supp T", dPR[1]))
    if dS[0] > g.bound + slack:
        problems.append(("supp S too far from supp ∂T", dS[1]))
    if worst > tol * (1 + mass_scale):
        problems.append((f"identity residual {worst:.3e}", None))
    if skel > 1e-10:
        problems.append((f"P leaves the p-skeleton by {skel:.3e}", None))
    cert["ok"] = not problems
    if problems and strict:
        msg, wit = problems[0]
        raise CertificationError(msg, None if wit is None else np.asarray(wit).tolist())
    return cert
