"""Real polyhedral chains in R^N (and lifted to the torus), plus current reps.

A :class:`PolyChain` is a weighted list of oriented affine simplices stored
as flat arrays.  Everything linear (evaluation, boundary, pushforward) is
vectorized over simplices; sums are taken in storage order.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Union

import numpy as np

from . import _simplex as sx
from . import exteralg as ea
from .exteralg import DimensionError, DomainError

DEGENERACY_TOL = 1e-12
COEFF_TOL = 1e-13
KEY_DECIMALS = 11


class ModelError(ValueError):
    """Geometrically invalid input (degenerate simplex, mixed dimensions)."""


class RefinementError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# multi-indices over N coordinates


@lru_cache(maxsize=None)
def multi_indices(N: int, p: int) -> tuple[tuple[int, ...], ...]:
    if p < 0 or p > N:
        return ()
    return tuple(itertools.combinations(range(N), p))


@lru_cache(maxsize=None)
def _mi_index(N: int, p: int) -> dict:
    return {I: i for i, I in enumerate(multi_indices(N, p))}


@lru_cache(maxsize=None)
def ext_matrix_N(N: int, j: int, p: int) -> np.ndarray:
    """Matrix of ``e^j ∧`` from degree p to p+1 in ``R^N``."""
    src, dst = multi_indices(N, p), _mi_index(N, p + 1)
    M = np.zeros((len(dst), len(src)))
    for c, I in enumerate(src):
        if j in I:
            continue
        J = tuple(sorted(I + (j,)))
        M[dst[J], c] = (-1) ** sum(1 for i in I if i < j)
    return M


@lru_cache(maxsize=None)
def wedge_table(N: int, a: int, b: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Index triples (i, j, out, sign) for the product of degree a and b vectors."""
    out_idx = _mi_index(N, a + b)
    rows = []
    for i, I in enumerate(multi_indices(N, a)):
        for j, J in enumerate(multi_indices(N, b)):
            if set(I) & set(J):
                continue
            rows.append((i, j, out_idx[tuple(sorted(I + J))], ea.merge_sign(I, J)))
    if not rows:
        z = np.zeros(0, dtype=int)
        return z, z, z, np.zeros(0)
    r = np.array(rows)
    return r[:, 0], r[:, 1], r[:, 2], r[:, 3].astype(float)


def wedge_values(N: int, a: int, A: np.ndarray, b: int, B: np.ndarray) -> np.ndarray:
    """Pointwise wedge of coefficient arrays ``(Q, C(N,a))`` and ``(Q, C(N,b))``."""
    i, j, o, s = wedge_table(N, a, b)
    out = np.zeros((A.shape[0], len(multi_indices(N, a + b))))
    np.add.at(out.T, o, (s[:, None] * A[:, i].T * B[:, j].T))
    return out


# --------------------------------------------------------------------------
# simplices and chains


@dataclass(frozen=True, eq=False)
class Simplex:
    vertices: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "vertices", V)
        if len(V) - 1 > V.shape[1]:
            raise ModelError("more vertices than the ambient dimension allows")
        if len(V) > 1 and _flat(V[None], DEGENERACY_TOL)[0]:
            raise ModelError("degenerate simplex (vertices not independent)")

    @property
    def p(self) -> int:
        return len(self.vertices) - 1

    @property
    def ambient_N(self) -> int:
        return self.vertices.shape[1]

    @property
    def volume(self) -> float:
        return sx.volume(self.vertices)


def _volumes(verts: np.ndarray) -> np.ndarray:
    p = verts.shape[1] - 1
    if p == 0 or len(verts) == 0:
        return np.ones(len(verts))
    E = verts[:, 1:] - verts[:, :1]  # (M, p, N)
    sv = np.linalg.svd(E, compute_uv=False)  # stable under vertex reordering
    return np.prod(sv, axis=1) / math.factorial(p)


def _flat(verts: np.ndarray, rel_tol: float) -> np.ndarray:
    """Numerically flat simplices: the edge matrix is rank deficient relative to its own scale."""
    p = verts.shape[1] - 1
    if p == 0 or len(verts) == 0:
        return np.zeros(len(verts), bool)
    sv = np.linalg.svd(verts[:, 1:] - verts[:, :1], compute_uv=False)
    return (sv[:, -1] <= rel_tol * sv[:, 0]) | (sv[:, 0] <= 1e-300)


@dataclass(frozen=True, eq=False)
class PolyChain:
    N: int
    p: int
    coeffs: np.ndarray  # (M,)
    verts: np.ndarray  # (M, p+1, N)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).reshape(-1)
        V = np.asarray(self.verts, dtype=float).reshape(len(c), self.p + 1, self.N)
        if self.p < 0 or self.p > self.N:
            raise ModelError(f"chain dimension {self.p} invalid in R^{self.N}")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "verts", V)

    # construction ----------------------------------------------------------
    @classmethod
    def empty(cls, N: int, p: int) -> "PolyChain":
        return cls(N, p, np.zeros(0), np.zeros((0, p + 1, N)))

    @classmethod
    def from_terms(cls, terms, N: int | None = None, p: int | None = None) -> "PolyChain":
        terms = [(float(a), s if isinstance(s, Simplex) else Simplex(s)) for a, s in terms]
        if not terms:
            if N is None or p is None:
                raise ModelError("empty chain needs explicit N and p")
            return cls.empty(N, p)
        Ns = {s.ambient_N for _, s in terms}
        ps = {s.p for _, s in terms}
        if len(Ns) > 1 or len(ps) > 1:
            raise ModelError("mixed ambient dimension or simplex dimension")
        N0, p0 = Ns.pop(), ps.pop()
        return cls(N0, p0, np.array([a for a, _ in terms]), np.stack([s.vertices for _, s in terms]))

    @classmethod
    def simplex(cls, vertices, coeff: float = 1.0) -> "PolyChain":
        return cls.from_terms([(coeff, Simplex(vertices))])

    @property
    def terms(self) -> list[tuple[float, Simplex]]:
        return [(float(a), Simplex(V)) for a, V in zip(self.coeffs, self.verts)]

    def __len__(self) -> int:
        return len(self.coeffs)

    def is_empty(self) -> bool:
        return len(self.coeffs) == 0

    # linear structure ------------------------------------------------------
    def _check(self, other: "PolyChain"):
        if (self.N, self.p) != (other.N, other.p):
            raise DimensionError(f"chains of type (N={self.N}, p={self.p}) and (N={other.N}, p={other.p})")

    def __add__(self, other: "PolyChain") -> "PolyChain":
        self._check(other)
        return PolyChain(self.N, self.p, np.concatenate([self.coeffs, other.coeffs]),
                         np.concatenate([self.verts, other.verts]))

    def __mul__(self, s: float) -> "PolyChain":
        return PolyChain(self.N, self.p, self.coeffs * s, self.verts)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def translate(self, shift: np.ndarray) -> "PolyChain":
        return PolyChain(self.N, self.p, self.coeffs, self.verts + np.asarray(shift, dtype=float))

    def drop_degenerate(self, tol: float = 100 * DEGENERACY_TOL) -> "PolyChain":
        keep = ~_flat(self.verts, tol)
        return PolyChain(self.N, self.p, self.coeffs[keep], self.verts[keep])

    def canonical(self, tol: float = COEFF_TOL) -> "PolyChain":
        """Merge equal simplices (up to orientation) and prune small coefficients."""
        if self.is_empty():
            return self
        acc: dict = {}
        order: list = []
        R = np.round(self.verts, KEY_DECIMALS) + 0.0
        for a, V, Vr in zip(self.coeffs, self.verts, R):
            keys = [tuple(v) for v in Vr]
            perm = sorted(range(len(keys)), key=lambda i: keys[i])
            sgn = _perm_sign(perm)
            key = tuple(keys[i] for i in perm)
            if key not in acc:
                acc[key] = [0.0, V[perm]]
                order.append(key)
            acc[key][0] += sgn * a
        items = [(acc[k][0], acc[k][1]) for k in order if abs(acc[k][0]) > tol]
        if not items:
            return PolyChain.empty(self.N, self.p)
        return PolyChain(self.N, self.p, np.array([a for a, _ in items]), np.stack([V for _, V in items]))

    # geometry --------------------------------------------------------------
    def volumes(self) -> np.ndarray:
        return _volumes(self.verts)

    def mass(self) -> float:
        c = self.canonical()
        if len(c) and c.p > 0 and np.any(_flat(c.verts, DEGENERACY_TOL)):
            raise ModelError("degenerate simplex in chain")
        return float(np.sum(np.abs(c.coeffs) * c.volumes()))

    def normal_norm(self) -> float:
        return self.mass() + (boundary(self).mass() if self.p > 0 else 0.0)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        V = self.verts.reshape(-1, self.N)
        return V.min(axis=0), V.max(axis=0)

    # IO ----------------------------------------------------------------------
    def to_json(self) -> dict:
        return {"N": self.N, "p": self.p,
                "terms": [{"c": float(a), "v": V.tolist()} for a, V in zip(self.coeffs, self.verts)]}

    @classmethod
    def from_json(cls, obj) -> "PolyChain":
        if isinstance(obj, str):
            obj = json.loads(obj)
        N, p = int(obj["N"]), int(obj["p"])
        terms = obj["terms"]
        if not terms:
            return cls.empty(N, p)
        return cls(N, p, np.array([t["c"] for t in terms], dtype=float),
                   np.array([t["v"] for t in terms], dtype=float))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path: str | Path) -> "PolyChain":
        return cls.from_json(json.loads(Path(path).read_text()))


def _perm_sign(perm) -> int:
    perm = list(perm)
    s = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            s = -s
    return s


def boundary(c: PolyChain) -> PolyChain:
    """Alternating face sum, merged so that shared faces cancel."""
    if c.p == 0:
        return PolyChain.empty(c.N, 0)
    p = c.p
    coeffs, verts = [], []
    for i in range(p + 1):
        coeffs.append(c.coeffs * (-1) ** i)
        verts.append(np.delete(c.verts, i, axis=1))
    return PolyChain(c.N, p - 1, np.concatenate(coeffs), np.concatenate(verts)).canonical()


def mass(c: PolyChain) -> float:
    return c.mass()


def normal_norm(c: PolyChain) -> float:
    return c.normal_norm()


# --------------------------------------------------------------------------
# test forms on R^N


@dataclass(frozen=True, eq=False)
class PolyForm:
    """A p-form on R^N whose coefficients are polynomials of total degree <= ``order``
    in the rescaled variable ``(x - center) / scale``."""

    N: int
    degree: int
    order: int
    exps: np.ndarray  # (K, N)
    coeffs: np.ndarray  # (K, C(N, degree))
    center: np.ndarray = None
    scale: float = 1.0

    def __post_init__(self):
        c = np.zeros(self.N) if self.center is None else np.asarray(self.center, float)
        object.__setattr__(self, "center", c)

    @staticmethod
    @lru_cache(maxsize=None)
    def monomials(N: int, order: int) -> np.ndarray:
        return np.array([e for e in itertools.product(range(order + 1), repeat=N) if sum(e) <= order], dtype=int)

    @classmethod
    def random(cls, N: int, degree: int, rng, order: int = 2, center=None, scale: float = 1.0) -> "PolyForm":
        rng = np.random.default_rng(rng)
        E = cls.monomials(N, order)
        C = rng.standard_normal((len(E), len(multi_indices(N, degree))))
        return cls(N, degree, order, E, C, center, scale)

    @classmethod
    def constant(cls, N: int, degree: int, vec: np.ndarray) -> "PolyForm":
        return cls(N, degree, 0, cls.monomials(N, 0), np.asarray(vec, float)[None, :])

    def monomial_table(self, X: np.ndarray) -> np.ndarray:
        Y = (np.atleast_2d(X) - self.center) / self.scale
        pw = Y[:, :, None] ** np.arange(self.order + 1)  # (Q, N, order+1)
        mono = np.ones((len(Y), len(self.exps)))
        for j in range(self.N):
            mono *= pw[:, j, self.exps[:, j]]
        return mono

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.monomial_table(X) @ self.coeffs

    def d(self) -> "PolyForm":
        N, p = self.N, self.degree
        idx = {tuple(e): i for i, e in enumerate(self.exps)}
        out = np.zeros((len(self.exps), len(multi_indices(N, p + 1))))
        for j in range(N):
            Dj = np.zeros_like(self.coeffs)
            for i, e in enumerate(self.exps):
                if e[j] > 0:
                    e2 = e.copy()
                    e2[j] -= 1
                    Dj[idx[tuple(e2)]] += e[j] * self.coeffs[i]
            out += Dj @ ext_matrix_N(N, j, p).T
        return PolyForm(N, p + 1, self.order, self.exps, out / self.scale, self.center, self.scale)


def form_battery(N: int, degree: int, count: int, rng, order: int = 2, center=None, scale: float = 1.0) -> list:
    rng = np.random.default_rng(rng)
    return [PolyForm.random(N, degree, rng, order, center, scale) for _ in range(count)]


# --------------------------------------------------------------------------
# evaluation


def _form_function(phi, N: int) -> tuple[int, Callable[[np.ndarray], np.ndarray]]:
    """Normalize a test form to ``(degree, values_at(points))``."""
    from . import torusfields as tf

    if isinstance(phi, ea.PointwiseForm):
        if 2 * phi.n != N:
            raise DimensionError(f"form on R^{2 * phi.n} against chain in R^{N}")
        k = phi.homogeneous_degree()
        v = phi.vector(k)
        return k, lambda X: np.broadcast_to(v, (len(X), len(v)))
    if isinstance(phi, tf.FieldForm):
        if 2 * phi.n != N:
            raise DimensionError(f"field on T^{2 * phi.n} against chain in R^{N}")
        return phi.degree, lambda X: tf.interpolate(phi, np.mod(X, 1.0))
    if isinstance(phi, tf.TrigForm):
        if 2 * phi.n != N:
            raise DimensionError(f"form on T^{2 * phi.n} against chain in R^{N}")
        return phi.degree, phi
    if isinstance(phi, PolyForm):
        if phi.N != N:
            raise DimensionError(f"form on R^{phi.N} against chain in R^{N}")
        return phi.degree, phi
    if isinstance(phi, tuple) and len(phi) == 2 and callable(phi[1]):
        return int(phi[0]), phi[1]
    raise DomainError(f"cannot evaluate against {type(phi).__name__}")


def simplex_minors(verts: np.ndarray) -> np.ndarray:
    """``det(E[I, :])`` for every simplex and multi-index I, shape (M, C(N,p))."""
    M, p1, N = verts.shape
    p = p1 - 1
    if p == 0:
        return np.ones((M, 1))
    E = np.transpose(verts[:, 1:] - verts[:, :1], (0, 2, 1))  # (M, N, p)
    out = np.empty((M, len(multi_indices(N, p))))
    for c, I in enumerate(multi_indices(N, p)):
        out[:, c] = np.linalg.det(E[:, list(I), :])
    return out


@dataclass(frozen=True, eq=False)
class ChainQuadrature:
    """Quadrature nodes of a chain, reusable across many test forms."""

    chain: PolyChain
    degree: int = 4

    def __post_init__(self):
        c = self.chain
        bary, w = sx.simplex_rule(c.p, self.degree)
        X = np.einsum("qv,mvn->mqn", bary, c.verts).reshape(-1, c.N)
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "minors", simplex_minors(c.verts) * c.coeffs[:, None])

    def integrate_batch(self, forms: list["PolyForm"]) -> np.ndarray:
        """Integrals of many PolyForms sharing exponents, center and scale."""
        if self.chain.is_empty() or not forms:
            return np.zeros(len(forms))
        mono = forms[0].monomial_table(self.points)
        C = np.concatenate([f.coeffs for f in forms], axis=1)  # (K, F*nI)
        vals = (mono @ C).reshape(len(self.chain), len(self.weights), len(forms), -1)
        return np.einsum("mqfc,q,mc->f", vals, self.weights, self.minors)

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        if self.chain.is_empty():
            return 0.0
        vals = np.asarray(fn(self.points)).reshape(len(self.chain), len(self.weights), -1)
        return float(np.einsum("mqc,q,mc->", vals, self.weights, self.minors))


def evaluate_chain(c: PolyChain, fn: Callable[[np.ndarray], np.ndarray], n: int | None = None,
                   degree: int = 4) -> float:
    """``Σ a_i ∫_{σ_i} φ`` with the per-simplex Gauss rule of the given degree."""
    if c.is_empty():
        return 0.0
    return ChainQuadrature(c, degree).integrate(fn)


# --------------------------------------------------------------------------
# current representations


@dataclass(frozen=True, eq=False)
class Chain:
    chain: PolyChain

    @property
    def dimension(self) -> int:
        return self.chain.p

    @property
    def N(self) -> int:
        return self.chain.N

    def to_field(self, shape: tuple[int, ...]):
        from .cubical import rasterize_field

        return rasterize_field(self.chain, shape)


@dataclass(frozen=True, eq=False)
class Field:
    form: "object"  # FieldForm

    @property
    def dimension(self) -> int:
        return 2 * self.form.n - self.form.degree

    @property
    def N(self) -> int:
        return 2 * self.form.n

    def to_field(self, shape):
        if tuple(shape) != self.form.grid_shape:
            raise DomainError("grid mismatch")
        return self.form


@dataclass(frozen=True, eq=False)
class FormWedgeChain:
    alpha: "object"  # PointwiseForm or FieldForm
    chain: PolyChain

    @property
    def alpha_degree(self) -> int:
        a = self.alpha
        return a.homogeneous_degree() if isinstance(a, ea.PointwiseForm) else a.degree

    @property
    def dimension(self) -> int:
        return self.chain.p - self.alpha_degree

    @property
    def N(self) -> int:
        return self.chain.N


CurrentRep = Union[Chain, Field, FormWedgeChain]


def as_current(obj) -> CurrentRep:
    if isinstance(obj, (Chain, Field, FormWedgeChain)):
        return obj
    if isinstance(obj, PolyChain):
        return Chain(obj)
    from . import torusfields as tf

    if isinstance(obj, tf.FieldForm):
        return Field(obj)
    raise DomainError(f"not a current: {type(obj).__name__}")


def evaluate(c, phi, degree: int = 4) -> float:
    """Evaluate a current on a test form."""
    from . import torusfields as tf

    c = as_current(c)
    if isinstance(c, Chain):
        k, fn = _form_function(phi, c.N)
        if k != c.dimension:
            raise DomainError(f"{k}-form against a {c.dimension}-chain")
        return evaluate_chain(c.chain, fn, degree=degree)
    if isinstance(c, Field):
        f = c.form
        if isinstance(phi, ea.PointwiseForm):
            phi = tf.TrigForm.constant(phi)
        if isinstance(phi, tf.FieldForm):
            return tf.pair_fields(f, phi)
        if isinstance(phi, tf.TrigForm):
            return tf.evaluate_field_current(f, phi)
        raise DomainError(f"cannot evaluate a field current against {type(phi).__name__}")
    # FormWedgeChain: (α∧T)(φ) = T(α∧φ)
    N = c.N
    k, fn = _form_function(phi, N)
    if k != c.dimension:
        raise DomainError(f"{k}-form against a current of dimension {c.dimension}")
    a_deg, a_fn = _form_function(c.alpha, N)

    def prod(X):
        return wedge_values(N, a_deg, np.asarray(a_fn(X)), k, np.asarray(fn(X)))

    return evaluate_chain(c.chain, prod, degree=degree)


def wedge_boundary_terms(c: FormWedgeChain) -> tuple[CurrentRep, CurrentRep]:
    """``(α∧∂T, dα∧T)``; the identity ``(-1)^a ∂(α∧T) = α∧∂T - dα∧T`` ties them."""
    from . import torusfields as tf

    a = c.alpha
    if isinstance(a, ea.PointwiseForm):
        da = None
    else:
        da = tf.d(a)
    left = FormWedgeChain(a, boundary(c.chain))
    right = FormWedgeChain(da, c.chain) if da is not None else None
    return left, right


# --------------------------------------------------------------------------
# pushforward


@dataclass(frozen=True)
class AffineMap:
    A: np.ndarray
    b: np.ndarray

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X) @ np.asarray(self.A).T + self.b

    @property
    def lipschitz(self) -> float:
        return float(np.linalg.norm(self.A, 2))


def barycentric_subdivide(c: PolyChain) -> PolyChain:
    """Oriented barycentric subdivision: (p+1)! children per simplex."""
    if c.p == 0 or c.is_empty():
        return c
    p = c.p
    coeffs, verts = [], []
    for perm in itertools.permutations(range(p + 1)):
        # flag v_{π0} ⊂ {v_{π0}, v_{π1}} ⊂ ... ; child vertex k = barycenter of first k+1
        pts = [c.verts[:, list(perm[: k + 1]), :].mean(axis=1) for k in range(p + 1)]
        verts.append(np.stack(pts, axis=1))
        coeffs.append(c.coeffs * _perm_sign(perm))
    return PolyChain(c.N, p, np.concatenate(coeffs), np.concatenate(verts))


def pushforward_with_error(f, c: PolyChain, subdivisions: int = 0, tol: float | None = None
                           ) -> tuple[PolyChain, float]:
    if isinstance(f, AffineMap):
        out = PolyChain(f.b.shape[0], c.p, c.coeffs, f(c.verts.reshape(-1, c.N)).reshape(len(c), c.p + 1, -1))
        lip = f.lipschitz
        if out.mass() > lip ** c.p * c.mass() * (1 + 1e-10) + 1e-14:
            raise ModelError("Lipschitz mass bound violated")
        return out, 0.0
    fine = c
    for _ in range(subdivisions):
        fine = barycentric_subdivide(fine)
    Vf = np.asarray(f(fine.verts.reshape(-1, c.N)))
    N2 = Vf.shape[-1]
    out = PolyChain(N2, c.p, fine.coeffs, Vf.reshape(len(fine), c.p + 1, N2))
    # Hausdorff-type error: true image vs piecewise-linear image at sample points
    bary, _ = sx.simplex_rule(c.p, 3)
    X = np.einsum("qv,mvn->mqn", bary, fine.verts).reshape(-1, c.N)
    Y = np.einsum("qv,mvn->mqn", bary, out.verts).reshape(-1, N2)
    err = float(np.linalg.norm(np.asarray(f(X)) - Y, axis=1).max(initial=0.0))
    if tol is not None and err > tol:
        raise RefinementError(f"piecewise-linear error {err:.3e} exceeds {tol:.3e}; increase subdivisions")
    return out, err


def pushforward(f, c: PolyChain, subdivisions: int = 0, tol: float | None = None) -> PolyChain:
    return pushforward_with_error(f, c, subdivisions, tol)[0]


def sampled_map(axes: list[np.ndarray], values: np.ndarray):
    """Callable from a map sampled on a rectilinear grid (multilinear interpolation)."""
    from scipy.interpolate import RegularGridInterpolator

    interps = [RegularGridInterpolator(axes, values[..., i]) for i in range(values.shape[-1])]
    return lambda X: np.stack([g(np.atleast_2d(X)) for g in interps], axis=-1)


# --------------------------------------------------------------------------
# supports


@dataclass(frozen=True, eq=False)
class SupportSet:
    chain: PolyChain
    period: float | None = None

    @property
    def empty(self) -> bool:
        return self.chain.is_empty()

    def points(self, degree: int = 3) -> np.ndarray:
        if self.empty:
            return np.zeros((0, self.chain.N))
        return np.vstack([sx.sample_points(V, degree) for V in self.chain.verts])

    def distance(self, P: np.ndarray) -> np.ndarray:
        """Exact distance to the simplex union (flat-torus distance if periodic).

        Candidates are pruned with a KD-tree on simplex barycenters: the
        nearest barycenter gives an upper bound ``u``, and only simplices whose
        barycenter lies within ``u + radius_max`` can do better.
        """
        from scipy.spatial import cKDTree

        P = np.atleast_2d(np.asarray(P, float))
        if self.empty:
            return np.full(len(P), np.inf)
        V = self.chain.verts
        bc = V.mean(axis=1)
        rad = np.linalg.norm(V - bc[:, None, :], axis=2).max(axis=1)
        L = self.period
        if L is None:
            tree, Pq = cKDTree(bc), P
        else:
            tree, Pq = cKDTree(np.mod(bc, L), boxsize=L), np.mod(P, L)
        upper, _ = tree.query(Pq)
        cand = tree.query_ball_point(Pq, upper + rad.max() + 1e-12)
        best = upper.copy()
        by_simplex: dict[int, list[int]] = {}
        for i, lst in enumerate(cand):
            for k in lst:
                by_simplex.setdefault(k, []).append(i)
        for k, rows in by_simplex.items():
            Q = P[rows]
            if L is not None:
                Q = Q - L * np.round((Q - bc[k]) / L)
            best[rows] = np.minimum(best[rows], sx.point_simplex_distance(Q, V[k]))
        return best


def support_set(c: PolyChain, period: float | None = None) -> SupportSet:
    return SupportSet(c.canonical().drop_degenerate() if c.p > 0 else c.canonical(), period)


def wrap(c: PolyChain, period: float = 1.0) -> PolyChain:
    """Translate each simplex by a lattice vector so its barycenter lies in [0, period)^N."""
    if c.is_empty():
        return c
    bc = c.verts.mean(axis=1)
    shift = -period * np.floor(bc / period)
    return PolyChain(c.N, c.p, c.coeffs, c.verts + shift[:, None, :])
