"""Pointwise symplectic exterior algebra on R^{2n}.

Coordinates are ordered (x_1, y_1, ..., x_n, y_n) and indexed from 0
internally; the JSON format uses 1-based indices.  Every operator is backed
by a dense matrix between degree spaces (cached per ``(n, k)``), so the same
matrices are reused fiberwise by :mod:`symphodge.torusfields`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import minimize

ZERO_TOL = 1e-12


class DimensionError(ValueError):
    pass


class DomainError(ValueError):
    pass


class ConsistencyError(AssertionError):
    """Two independent routes to the same quantity disagree."""


# --------------------------------------------------------------------------
# combinatorics


@lru_cache(maxsize=None)
def basis(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Sorted k-subsets of ``range(2n)`` in lexicographic order."""
    if k < 0 or k > 2 * n:
        return ()
    return tuple(combinations(range(2 * n), k))


@lru_cache(maxsize=None)
def basis_index(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {I: i for i, I in enumerate(basis(n, k))}


def dim(n: int, k: int) -> int:
    return len(basis(n, k))


def merge_sign(I: Iterable[int], J: Iterable[int]) -> int:
    """Sign of the permutation sorting the concatenation ``I + J``."""
    inv = sum(1 for i in I for j in J if i > j)
    return -1 if inv % 2 else 1


def complement(n: int, I: tuple[int, ...]) -> tuple[int, ...]:
    s = set(I)
    return tuple(i for i in range(2 * n) if i not in s)


# --------------------------------------------------------------------------
# elementary operator matrices


@lru_cache(maxsize=None)
def ext_matrix(n: int, j: int, k: int) -> np.ndarray:
    """Matrix of ``e^j ∧ ·`` from degree k to degree k+1."""
    M = np.zeros((dim(n, k + 1), dim(n, k)))
    idx = basis_index(n, k + 1)
    for c, I in enumerate(basis(n, k)):
        if j in I:
            continue
        J = tuple(sorted(I + (j,)))
        M[idx[J], c] = merge_sign((j,), I)
    return M


@lru_cache(maxsize=None)
def int_matrix(n: int, j: int, k: int) -> np.ndarray:
    """Matrix of the interior product with the j-th basis vector, degree k -> k-1."""
    M = np.zeros((dim(n, k - 1), dim(n, k)))
    if k == 0:
        return M
    idx = basis_index(n, k - 1)
    for c, I in enumerate(basis(n, k)):
        if j not in I:
            continue
        pos = I.index(j)
        M[idx[I[:pos] + I[pos + 1:]], c] = -1.0 if pos % 2 else 1.0
    return M


@lru_cache(maxsize=None)
def wedge_matrix_of(n: int, key: tuple, p: int, k: int) -> np.ndarray:
    """Matrix of ``a ∧ ·`` (degree k -> k+p) for ``a`` given as a hashable term tuple."""
    M = np.zeros((dim(n, k + p), dim(n, k)))
    if k + p > 2 * n:
        return M
    idx = basis_index(n, k + p)
    for I, c in key:
        for col, J in enumerate(basis(n, k)):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            M[idx[K], col] += c * merge_sign(I, J)
    return M


def _omega_terms(n: int) -> tuple:
    return tuple(((2 * i, 2 * i + 1), 1.0) for i in range(n))


@lru_cache(maxsize=None)
def L_matrix(n: int, k: int) -> np.ndarray:
    """Lefschetz map ``ω ∧ ·`` from degree k to k+2."""
    return wedge_matrix_of(n, _omega_terms(n), 2, k)


@lru_cache(maxsize=None)
def _pi_sign(n: int) -> float:
    # ι_{u∧v} = ι_u ∘ ι_v; the sign of π = s Σ ∂x_i∧∂y_i is fixed so that
    # Λω = n, which is [Λ, L]1 = H1.
    raw = sum(int_matrix(n, 2 * i, 1) @ int_matrix(n, 2 * i + 1, 2) for i in range(n))
    val = (raw @ L_matrix(n, 0))[0, 0]
    return float(n / val)


@lru_cache(maxsize=None)
def Lambda_matrix(n: int, k: int) -> np.ndarray:
    """Dual Lefschetz map ``ι_π`` from degree k to k-2."""
    if k < 2:
        return np.zeros((0, dim(n, k))) if k < 0 else np.zeros((dim(n, k - 2), dim(n, k)))
    s = _pi_sign(n)
    return s * sum(int_matrix(n, 2 * i, k - 1) @ int_matrix(n, 2 * i + 1, k) for i in range(n))


@lru_cache(maxsize=None)
def L_power_matrix(n: int, r: int, k: int) -> np.ndarray:
    M = np.eye(dim(n, k))
    for s in range(r):
        if k + 2 * s > 2 * n:
            return np.zeros((0, dim(n, k)))
        M = L_matrix(n, k + 2 * s) @ M
    return M


@lru_cache(maxsize=None)
def pairing_gram(n: int) -> np.ndarray:
    """The pairing on 1-forms given by π itself: (e^i, e^j) = π^{ij}.

    With Λ normalized by [Λ, L] = H this gives (e^{x_i}, e^{y_i}) = -1, the
    sign for which (-1)^{k+1}⋆d⋆ and [d, Λ] coincide.
    """
    s = _pi_sign(n)
    G = np.zeros((2 * n, 2 * n))
    for i in range(n):
        G[2 * i, 2 * i + 1] = s
        G[2 * i + 1, 2 * i] = -s
    return G


@lru_cache(maxsize=None)
def pairing_matrix(n: int, k: int) -> np.ndarray:
    """Gram-determinant extension of the 1-form pairing to degree k."""
    G = pairing_gram(n)
    B = basis(n, k)
    P = np.empty((len(B), len(B)))
    for a, I in enumerate(B):
        for b, J in enumerate(B):
            P[a, b] = np.linalg.det(G[np.ix_(I, J)]) if k else 1.0
    P[np.abs(P) < ZERO_TOL] = 0.0
    return np.round(P)


@lru_cache(maxsize=None)
def star_matrix(n: int, k: int) -> np.ndarray:
    """Symplectic Hodge star, degree k -> 2n-k, from ``⋆a ∧ b = (a, b) vol``."""
    P = pairing_matrix(n, k)
    out_idx = basis_index(n, 2 * n - k)
    S = np.zeros((dim(n, 2 * n - k), dim(n, k)))
    for b, J in enumerate(basis(n, k)):
        K = complement(n, J)
        # e^K ∧ e^J = merge_sign(K, J) vol
        S[out_idx[K], :] = P[:, b] * merge_sign(K, J)
    return S


@lru_cache(maxsize=None)
def H_scalar(n: int, k: int) -> float:
    return float(n - k)


# --------------------------------------------------------------------------
# value types


def _prune(terms: Mapping[tuple[int, ...], float], tol: float = ZERO_TOL) -> dict:
    return {I: float(c) for I, c in sorted(terms.items()) if abs(c) > tol}


@dataclass(frozen=True)
class PointwiseForm:
    """An element of Λ(R^{2n})^*, stored as sorted-index-tuple -> coefficient."""

    n: int
    terms: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("half-dimension n must be >= 1")
        clean = {}
        for I, c in self.terms.items():
            I = tuple(int(i) for i in I)
            if list(I) != sorted(set(I)) or (I and (I[0] < 0 or I[-1] >= 2 * self.n)):
                raise DomainError(f"bad index key {I}")
            clean[I] = clean.get(I, 0.0) + float(c)
        object.__setattr__(self, "terms", _prune(clean))

    # construction ---------------------------------------------------------
    @classmethod
    def from_vector(cls, n: int, k: int, vec: np.ndarray) -> "PointwiseForm":
        return cls(n, {I: c for I, c in zip(basis(n, k), np.asarray(vec, dtype=float))})

    @classmethod
    def scalar(cls, n: int, c: float = 1.0) -> "PointwiseForm":
        return cls(n, {(): c})

    @classmethod
    def basis_form(cls, n: int, *idx: int) -> "PointwiseForm":
        """``e^{i_1} ∧ ... ∧ e^{i_k}`` with 0-based indices in any order."""
        if len(set(idx)) < len(idx):
            return cls(n, {})
        return cls(n, {tuple(sorted(idx)): merge_sign_perm(idx)})

    # structure ------------------------------------------------------------
    @property
    def degrees(self) -> list[int]:
        return sorted({len(I) for I in self.terms})

    @property
    def degree(self) -> int | None:
        """Homogeneous degree, or None for mixed (the zero form has degree 0)."""
        d = self.degrees
        if not d:
            return 0
        return d[0] if len(d) == 1 else None

    def homogeneous_degree(self) -> int:
        d = self.degree
        if d is None:
            raise DomainError("form is not homogeneous")
        return d

    def component(self, k: int) -> "PointwiseForm":
        return PointwiseForm(self.n, {I: c for I, c in self.terms.items() if len(I) == k})

    def vector(self, k: int) -> np.ndarray:
        idx = basis_index(self.n, k)
        v = np.zeros(dim(self.n, k))
        for I, c in self.terms.items():
            if len(I) == k:
                v[idx[I]] = c
        return v

    def norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.terms.values()))

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "PointwiseForm"):
        if self.n != other.n:
            raise DimensionError(f"dim_n mismatch: {self.n} vs {other.n}")

    def __add__(self, other: "PointwiseForm") -> "PointwiseForm":
        self._check(other)
        t = dict(self.terms)
        for I, c in other.terms.items():
            t[I] = t.get(I, 0.0) + c
        return PointwiseForm(self.n, t)

    def __neg__(self):
        return PointwiseForm(self.n, {I: -c for I, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s: float) -> "PointwiseForm":
        return PointwiseForm(self.n, {I: s * c for I, c in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, s: float):
        return self * (1.0 / s)

    def __xor__(self, other):
        return wedge(self, other)

    def isclose(self, other: "PointwiseForm", tol: float = 1e-10) -> bool:
        return (self - other).norm() <= tol

    # serialization --------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [{"idx": [i + 1 for i in I], "c": c} for I, c in sorted(self.terms.items())],
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> "PointwiseForm":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["n"]), {tuple(i - 1 for i in t["idx"]): t["c"] for t in obj["terms"]})


def merge_sign_perm(idx) -> int:
    idx = list(idx)
    inv = sum(1 for a in range(len(idx)) for b in range(a + 1, len(idx)) if idx[a] > idx[b])
    return -1 if inv % 2 else 1


@dataclass(frozen=True)
class PolyVector:
    """Contravariant counterpart of :class:`PointwiseForm` (index tuples of basis vectors)."""

    n: int
    terms: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "terms", _prune(dict(self.terms)))


def _apply(mat_for_degree, a: PointwiseForm, shift: int) -> PointwiseForm:
    out: dict = {}
    for k in a.degrees:
        M = mat_for_degree(k)
        if M.shape[0] == 0:
            continue
        v = M @ a.vector(k)
        for I, c in zip(basis(a.n, k + shift), v):
            out[I] = out.get(I, 0.0) + c
    return PointwiseForm(a.n, out)


# --------------------------------------------------------------------------
# operations


def make_standard_symplectic(n: int) -> tuple[PointwiseForm, PolyVector]:
    """Darboux ω = Σ dx_i∧dy_i and its Poisson bivector π (sign-normalized)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    omega = PointwiseForm(n, dict(_omega_terms(n)))
    s = _pi_sign(n)
    pi = PolyVector(n, {(2 * i, 2 * i + 1): s for i in range(n)})
    # normalization is part of construction
    one = PointwiseForm.scalar(n)
    lo = dual_lefschetz(lefschetz_L(one)) - lefschetz_L(dual_lefschetz(one))
    if not lo.isclose(counting_H(one), 1e-12):
        raise ConsistencyError("π normalization failed: [Λ, L] != H")
    return omega, pi


def omega_power(n: int, r: int) -> PointwiseForm:
    """ω^r (not divided by r!)."""
    v = L_power_matrix(n, r, 0)[:, 0] if 2 * r <= 2 * n else np.zeros(0)
    return PointwiseForm.from_vector(n, 2 * r, v) if v.size else PointwiseForm(n, {})


def volume_form(n: int) -> PointwiseForm:
    """ω^n / n!."""
    return omega_power(n, n) / math.factorial(n)


def wedge(a: PointwiseForm, b: PointwiseForm) -> PointwiseForm:
    if a.n != b.n:
        raise DimensionError(f"dim_n mismatch: {a.n} vs {b.n}")
    out: dict = {}
    for I, c in a.terms.items():
        sI = set(I)
        for J, e in b.terms.items():
            if sI.intersection(J):
                continue
            K = tuple(sorted(I + J))
            out[K] = out.get(K, 0.0) + c * e * merge_sign(I, J)
    return PointwiseForm(a.n, out)


def lefschetz_L(a: PointwiseForm) -> PointwiseForm:
    return _apply(lambda k: L_matrix(a.n, k), a, 2)


def dual_lefschetz(a: PointwiseForm) -> PointwiseForm:
    return _apply(lambda k: Lambda_matrix(a.n, k), a, -2)


def counting_H(a: PointwiseForm) -> PointwiseForm:
    return PointwiseForm(a.n, {I: (a.n - len(I)) * c for I, c in a.terms.items()})


def pairing(a: PointwiseForm, b: PointwiseForm) -> float:
    if a.n != b.n:
        raise DimensionError("dim_n mismatch")
    k = a.homogeneous_degree()
    if b.homogeneous_degree() != k and b.terms and a.terms:
        raise DomainError("pairing needs equal degrees")
    return float(a.vector(k) @ pairing_matrix(a.n, k) @ b.vector(k))


def star(a: PointwiseForm) -> PointwiseForm:
    k = a.homogeneous_degree()
    return PointwiseForm.from_vector(a.n, 2 * a.n - k, star_matrix(a.n, k) @ a.vector(k))


@lru_cache(maxsize=None)
def primitive_basis(n: int, k: int) -> np.ndarray:
    """Orthonormal columns spanning the primitive k-forms (kernel of Λ)."""
    if k > n or k < 0:
        return np.zeros((dim(n, k), 0))
    Lam = Lambda_matrix(n, k)
    if Lam.shape[0] == 0:
        return np.eye(dim(n, k))
    _, s, vt = np.linalg.svd(Lam)
    rank = int((s > 1e-9 * max(1.0, s.max(initial=0.0))).sum())
    return vt[rank:].T.copy()


def _component_range(n: int, k: int) -> range:
    return range(max(k - n, 0), k // 2 + 1)


@lru_cache(maxsize=None)
def decomposition_system(n: int, k: int) -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    """Square matrix whose columns are L^r/r! applied to primitive bases.

    Returns the matrix and the column blocks ``(r, start, stop)``.
    """
    cols, blocks, pos = [], [], 0
    for r in _component_range(n, k):
        Bp = primitive_basis(n, k - 2 * r)
        cols.append(L_power_matrix(n, r, k - 2 * r) @ Bp / math.factorial(r))
        blocks.append((r, pos, pos + Bp.shape[1]))
        pos += Bp.shape[1]
    M = np.hstack(cols) if cols else np.zeros((dim(n, k), 0))
    if M.shape[0] != M.shape[1]:
        raise ConsistencyError(f"decomposition system not square at n={n}, k={k}")
    return M, blocks


def decompose_vector(n: int, k: int, v: np.ndarray) -> list[tuple[int, np.ndarray]]:
    """Dense Lefschetz solve on coefficient vectors; trailing axes broadcast.

    ``v`` has shape ``(..., dim(n, k))``; returns ``[(r, beta_{k-2r})]``.
    """
    M, blocks = decomposition_system(n, k)
    coef = np.linalg.solve(M, np.moveaxis(v, -1, 0).reshape(M.shape[0], -1))
    out = []
    for r, a, b in blocks:
        Bp = primitive_basis(n, k - 2 * r)
        comp = (Bp @ coef[a:b]).reshape((Bp.shape[0],) + v.shape[:-1])
        out.append((r, np.moveaxis(comp, 0, -1)))
    return out


def peel_decompose_vector(n: int, k: int, v: np.ndarray) -> list[tuple[int, np.ndarray]]:
    """Lefschetz components via Λ-powers (the sl2 polynomial route).

    For primitive β of degree m, Λ^s L^s β = s! Π_{j=1..s}(n-m-j+1) β, and
    Λ^s kills L^r β for r < s, so components are peeled from the top r down.
    """
    rem = np.array(v, dtype=float)
    out = []
    for s in reversed(_component_range(n, k)):
        m = k - 2 * s
        Lam = np.eye(dim(n, k))
        for j in range(s):
            Lam = Lambda_matrix(n, k - 2 * j) @ Lam
        c = float(np.prod([n - m - j + 1 for j in range(1, s + 1)]))
        beta = rem @ Lam.T / c
        out.append((s, beta))
        rem = rem - beta @ L_power_matrix(n, s, m).T / math.factorial(s)
    if np.abs(rem).max(initial=0.0) > 1e-9 * max(1.0, np.abs(v).max(initial=0.0)):
        raise ConsistencyError("peeling left a nonzero remainder")
    return sorted(out, key=lambda t: t[0])


def lefschetz_decompose(a: PointwiseForm) -> list[tuple[int, PointwiseForm]]:
    """Unique ``a = Σ_r L^r/r! β_{k-2r}`` with primitive β."""
    k = a.homogeneous_degree()
    parts = decompose_vector(a.n, k, a.vector(k))
    return [(r, PointwiseForm.from_vector(a.n, k - 2 * r, b)) for r, b in parts]


def lefschetz_reconstruct(n: int, parts: list[tuple[int, PointwiseForm]]) -> PointwiseForm:
    out = PointwiseForm(n, {})
    for r, b in parts:
        x = b
        for _ in range(r):
            x = lefschetz_L(x)
        out = out + x / math.factorial(r)
    return out


def invert_L_power(k: int, b: PointwiseForm) -> PointwiseForm:
    n = b.n
    if not 0 <= k <= n:
        raise DomainError("need 0 <= k <= n")
    deg = b.degree if b.terms else n + k
    if deg != n + k:
        raise DomainError(f"expected degree {n + k}, got {deg}")
    M = L_power_matrix(n, k, n - k)
    return PointwiseForm.from_vector(n, n - k, np.linalg.solve(M, b.vector(n + k)))


@lru_cache(maxsize=None)
def _primitivity_ratio(n: int, k: int) -> float:
    # ‖L^{n-k+1} a‖ <= ratio ‖Λ a‖ on the complement of the primitive subspace
    Lp = L_power_matrix(n, n - k + 1, k)
    Lam = Lambda_matrix(n, k)
    if Lam.shape[0] == 0 or Lp.shape[0] == 0:
        return 1.0
    sl = np.linalg.svd(Lam, compute_uv=False)
    sp = np.linalg.svd(Lp, compute_uv=False)
    return float(sp.max() / sl[sl > 1e-9].min())


def is_primitive(a: PointwiseForm, tol: float = 1e-10) -> bool:
    k = a.homogeneous_degree()
    n = a.n
    if k > n:
        raise DomainError("primitivity is defined for degree <= n")
    v = a.vector(k)
    lam = float(np.linalg.norm(Lambda_matrix(n, k) @ v)) if k >= 2 else 0.0
    lpow = float(np.linalg.norm(L_power_matrix(n, n - k + 1, k) @ v)) if 2 * n - k + 2 <= 2 * n else 0.0
    by_lambda = lam <= tol
    ratio = _primitivity_ratio(n, k)
    if by_lambda and lpow > ratio * tol * (1 + 1e-6) + 1e-14:
        raise ConsistencyError("Λ-test and ω-power test disagree")
    if lpow <= tol and lam > ratio * tol * 1e6 + 1e-14 and k >= 2:
        raise ConsistencyError("ω-power test and Λ-test disagree")
    return by_lambda


# --------------------------------------------------------------------------
# comass


@dataclass(frozen=True)
class ComassEstimate:
    lower: float  # value attained at an explicit orthonormal frame
    value: float  # heuristic estimate after local refinement
    upper: float  # Euclidean coefficient norm, always an upper bound
    frame: np.ndarray | None = None


def simple_pairing(a_vec: np.ndarray, n: int, k: int, V: np.ndarray) -> float:
    """⟨a, v_1∧...∧v_k⟩ for columns of ``V`` (shape 2n x k)."""
    idx = np.array(basis(n, k))
    return float(a_vec @ np.linalg.det(V[idx]))


def comass(a: PointwiseForm, samples: int = 64, refine: int = 8, seed: int = 0) -> ComassEstimate:
    """Sup of ⟨a, w⟩ over unit simple k-vectors w.

    Exact for k in {0, 1, 2n-1, 2n}; otherwise random orthonormal frames
    followed by BFGS refinement on the Stiefel manifold via QR.
    """
    k = a.homogeneous_degree()
    n = a.n
    if k > 2 * n:
        raise DomainError("degree exceeds 2n")
    v = a.vector(k)
    euclid = float(np.linalg.norm(v))
    if k in (0, 1, 2 * n - 1, 2 * n):
        return ComassEstimate(euclid, euclid, euclid)
    rng = np.random.default_rng(seed)
    m = 2 * n

    def orth(X):
        Q, R = np.linalg.qr(X.reshape(m, k))
        return Q * np.sign(np.diag(R))

    def f(X):
        return -simple_pairing(v, n, k, orth(X))

    starts = [rng.standard_normal((m, k)) for _ in range(samples)]
    starts.sort(key=f)
    best_val, best_V = -np.inf, None
    for X0 in starts[:refine]:
        res = minimize(f, X0.ravel(), method="BFGS", options={"gtol": 1e-10})
        V = orth(res.x)
        val = simple_pairing(v, n, k, V)
        if val > best_val:
            best_val, best_V = val, V
    best_val = min(best_val, euclid)
    return ComassEstimate(best_val, best_val, euclid, best_V)
