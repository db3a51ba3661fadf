"""Chevalley-Eilenberg models of left-invariant forms on Lie groups.

A :class:`CEModel` is a real Lie algebra of dimension 2n (structure constants
``[e_i, e_j] = Σ_k c^k_ij e_k``) with a closed nondegenerate invariant 2-form.
Left-invariant forms form the finite complex ``(Λ g*, d)`` with
``d e^k = -Σ_{i<j} c^k_ij e^i∧e^j`` extended as a derivation, and every
question below is linear algebra on it.  Ranks are decided by singular
values at a relative threshold; ``exact=True`` switches to rational
Gaussian elimination.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import exteralg as ea
from .exteralg import ConsistencyError, DomainError

RANK_RTOL = 1e-9
JACOBI_TOL = 1e-12


class ModelError(ValueError):
    pass


# --------------------------------------------------------------------------
# linear algebra helpers


def rank(M: np.ndarray, exact: bool = False) -> int:
    if M.size == 0:
        return 0
    if exact:
        return _rank_exact(M)
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * max(s[0], 1.0)))


def _rank_exact(M: np.ndarray) -> int:
    A = [[Fraction(x).limit_denominator(10 ** 6) for x in row] for row in np.asarray(M)]
    rows, cols = len(A), len(A[0]) if A else 0
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(rows):
            if i != r and A[i][c] != 0:
                f = A[i][c] / A[r][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        r += 1
    return r


def null_space(M: np.ndarray, ncols: int | None = None) -> np.ndarray:
    if M.size == 0:
        n = M.shape[1] if ncols is None else ncols
        return np.eye(n)
    U, s, Vt = np.linalg.svd(M)
    r = int(np.sum(s > RANK_RTOL * max(s[0] if s.size else 0.0, 1.0)))
    return Vt[r:].T.copy()


def col_space(M: np.ndarray, nrows: int | None = None) -> np.ndarray:
    if M.size == 0:
        return np.zeros((M.shape[0] if nrows is None else nrows, 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > RANK_RTOL * max(s[0] if s.size else 0.0, 1.0)))
    return U[:, :r].copy()


def intersection_dim(A: np.ndarray, B: np.ndarray) -> int:
    """dim(col A ∩ col B) for orthonormal column bases."""
    if A.shape[1] == 0 or B.shape[1] == 0:
        return 0
    return A.shape[1] + B.shape[1] - rank(np.hstack([A, B]))


def intersection_basis(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if A.shape[1] == 0 or B.shape[1] == 0:
        return np.zeros((A.shape[0], 0))
    K = null_space(np.hstack([A, -B]))
    return col_space(A @ K[: A.shape[1]], A.shape[0])


# --------------------------------------------------------------------------
# model


@dataclass(frozen=True, eq=False)
class CEModel:
    n: int
    structure: dict  # {(i, j, k): c} with i < j, 0-based, [e_i, e_j] = Σ c e_k
    omega: ea.PointwiseForm
    name: str = "custom"

    def __post_init__(self):
        N = 2 * self.n
        clean = {}
        for (i, j, k), c in self.structure.items():
            if not (0 <= i < N and 0 <= j < N and 0 <= k < N) or i == j:
                raise ModelError(f"bad structure index {(i, j, k)}")
            if i > j:
                i, j, c = j, i, -c
            clean[(i, j, k)] = clean.get((i, j, k), 0.0) + float(c)
        object.__setattr__(self, "structure", {key: v for key, v in clean.items() if v != 0.0})
        if self.omega.n != self.n or self.omega.homogeneous_degree() != 2:
            raise ModelError("omega must be a 2-form on the same space")
        self.validate()

    # structure ----------------------------------------------------------------
    @property
    def N(self) -> int:
        return 2 * self.n

    def C(self) -> np.ndarray:
        """Dense antisymmetric array C[i, j, k] = c^k_ij."""
        C = np.zeros((self.N,) * 3)
        for (i, j, k), c in self.structure.items():
            C[i, j, k] += c
            C[j, i, k] -= c
        return C

    def jacobi_residual(self) -> float:
        C = self.C()
        # Σ_m c^m_ij c^l_mk + cyclic
        J = np.einsum("ijm,mkl->ijkl", C, C)
        J = J + np.einsum("jkm,mil->ijkl", C, C) + np.einsum("kim,mjl->ijkl", C, C)
        return float(np.abs(J).max(initial=0.0))

    def de1(self) -> list[ea.PointwiseForm]:
        """d e^k for each basis covector."""
        out = []
        for k in range(self.N):
            terms = {(i, j): -c for (i, j, kk), c in self.structure.items() if kk == k}
            out.append(ea.PointwiseForm(self.n, terms))
        return out

    def validate(self) -> None:
        res = self.jacobi_residual()
        if res > JACOBI_TOL:
            raise ModelError(f"Jacobi identity fails (residual {res:.3e})")
        w = self.omega.vector(2)
        if np.abs(self.d(2) @ w).max(initial=0.0) > 1e-12:
            raise ModelError("omega is not closed")
        top = self.L_power(self.n, 0)
        if abs(top[0, 0]) < 1e-12:
            raise ModelError("omega is degenerate")

    # operators ------------------------------------------------------------
    @cached_property
    def _d(self) -> dict:
        n = self.n
        de = self.de1()
        mats = {}
        for k in range(self.N + 1):
            M = np.zeros((ea.dim(n, k + 1), ea.dim(n, k)))
            for m in range(self.N):
                if not de[m].terms:
                    continue
                key = tuple(sorted(de[m].terms.items()))
                M += ea.wedge_matrix_of(n, key, 2, k - 1) @ ea.int_matrix(n, m, k) if k >= 1 else 0.0
            mats[k] = M
        return mats

    def d(self, k: int) -> np.ndarray:
        if k < 0 or k > self.N:
            return np.zeros((max(ea.dim(self.n, k + 1), 0), max(ea.dim(self.n, k), 0)))
        return self._d[k]

    @cached_property
    def _omega_key(self):
        return tuple(sorted(self.omega.terms.items()))

    def L(self, k: int) -> np.ndarray:
        return ea.wedge_matrix_of(self.n, self._omega_key, 2, k)

    def L_power(self, r: int, k: int) -> np.ndarray:
        M = np.eye(ea.dim(self.n, k))
        for s in range(r):
            M = self.L(k + 2 * s) @ M
        return M

    @cached_property
    def _pi(self) -> np.ndarray:
        N = self.N
        W = np.zeros((N, N))
        for (i, j), c in self.omega.terms.items():
            W[i, j], W[j, i] = c, -c
        P = np.linalg.inv(W)
        # fix the overall sign so that Λ ω = n, i.e. [Λ, L] = H on scalars
        lam = self._Lambda_from(P, 2) @ self.omega.vector(2)
        s = self.n / lam[0]
        if abs(abs(s) - 1) > 1e-9:
            raise ConsistencyError("contraction normalization is not ±1")
        return P * np.sign(s)

    def _Lambda_from(self, P: np.ndarray, k: int) -> np.ndarray:
        n = self.n
        M = np.zeros((ea.dim(n, k - 2), ea.dim(n, k))) if k >= 2 else np.zeros((0, ea.dim(n, k)))
        if k < 2:
            return M
        for i in range(self.N):
            for j in range(i + 1, self.N):
                if P[i, j] != 0:
                    M += P[i, j] * ea.int_matrix(n, j, k - 1) @ ea.int_matrix(n, i, k)
        return M

    def Lambda(self, k: int) -> np.ndarray:
        return self._Lambda_from(self._pi, k)

    def dlambda(self, k: int) -> np.ndarray:
        """``d^Λ = dΛ - Λd`` from degree k to k-1."""
        n = self.n
        out = np.zeros((max(ea.dim(n, k - 1), 0), ea.dim(n, k)))
        if k >= 2:
            out += self.d(k - 2) @ self.Lambda(k)
        if k + 1 >= 2 and k + 1 <= self.N:
            out -= self.Lambda(k + 1) @ self.d(k)
        return out

    def check_sl2(self) -> float:
        """max |[Λ, L] - H| over all degrees."""
        worst = 0.0
        for k in range(self.N + 1):
            LL = self.Lambda(k + 2) @ self.L(k) if k + 2 <= self.N else np.zeros((ea.dim(self.n, k),) * 2)
            LL2 = self.L(k - 2) @ self.Lambda(k) if k >= 2 else 0.0
            H = (self.n - k) * np.eye(ea.dim(self.n, k))
            worst = max(worst, float(np.abs(LL - LL2 - H).max()))
        return worst

    # IO -------------------------------------------------------------------
    def to_json(self) -> dict:
        return {"n": self.n, "name": self.name,
                "structure": [{"i": i + 1, "j": j + 1, "k": k + 1, "c": c} for (i, j, k), c in self.structure.items()],
                "omega": self.omega.to_json()}

    @classmethod
    def from_json(cls, obj) -> "CEModel":
        if isinstance(obj, (str, Path)) and Path(str(obj)).exists():
            obj = json.loads(Path(obj).read_text())
        elif isinstance(obj, str):
            obj = json.loads(obj)
        st = {(t["i"] - 1, t["j"] - 1, t["k"] - 1): float(t["c"]) for t in obj.get("structure", [])}
        return cls(int(obj["n"]), st, ea.PointwiseForm.from_json(obj["omega"]), obj.get("name", "custom"))


def ce_differential(m: CEModel, k: int) -> np.ndarray:
    D = m.d(k)
    if 0 <= k <= m.N - 2:
        dd = m.d(k + 1) @ D
        if np.abs(dd).max(initial=0.0) > 1e-10:
            raise ModelError("d∘d ≠ 0")
    return D


# --------------------------------------------------------------------------
# built-in models


def abelian(n: int) -> CEModel:
    w, _ = ea.make_standard_symplectic(n)
    return CEModel(n, {}, w, f"T{2 * n}")


def kodaira_thurston() -> CEModel:
    # [e1, e2] = -e3 so that d e^3 = e^1∧e^2 (0-based: (0, 1) -> 2)
    omega = ea.PointwiseForm(2, {(0, 3): 1.0, (1, 2): 1.0})
    return CEModel(2, {(0, 1, 2): -1.0}, omega, "kodaira-thurston")


def hyperelliptic() -> CEModel:
    """Flat Kähler solvable algebra e(2) ⊕ R: [X, Y1] = Y2, [X, Y2] = -Y1.

    Basis order (X, Z, Y1, Y2) with ω = e^X∧e^Z + e^{Y1}∧e^{Y2}.
    """
    st = {(0, 2, 3): 1.0, (0, 3, 2): -1.0}
    omega = ea.PointwiseForm(2, {(0, 1): 1.0, (2, 3): 1.0})
    return CEModel(2, st, omega, "hyperelliptic")


def hyperelliptic_x_T2() -> CEModel:
    st = {(0, 2, 3): 1.0, (0, 3, 2): -1.0}
    omega = ea.PointwiseForm(3, {(0, 1): 1.0, (2, 3): 1.0, (4, 5): 1.0})
    return CEModel(3, st, omega, "hyperelliptic-x-T2")


MODELS = {
    "T2": lambda: abelian(1),
    "T4": lambda: abelian(2),
    "T6": lambda: abelian(3),
    "kodaira-thurston": kodaira_thurston,
    "hyperelliptic": hyperelliptic,
    "hyperelliptic-x-T2": hyperelliptic_x_T2,
}


def load_model(name_or_path: str) -> CEModel:
    if name_or_path in MODELS:
        return MODELS[name_or_path]()
    return CEModel.from_json(Path(name_or_path))


# --------------------------------------------------------------------------
# cohomology


@dataclass
class Cohomology:
    betti: list[int]
    reps: list[np.ndarray]  # orthonormal columns, orthogonal to exact forms
    cycles: list[np.ndarray]
    boundaries: list[np.ndarray]

    def coords(self, k: int, z: np.ndarray) -> np.ndarray:
        """Class coordinates of closed forms (columns of z) in the rep basis."""
        return self.reps[k].T @ z


def cohomology(m: CEModel, exact: bool = False) -> Cohomology:
    N = m.N
    betti, reps, Zs, Bs = [], [], [], []
    for k in range(N + 1):
        Dk = ce_differential(m, k)
        Z = null_space(Dk, ea.dim(m.n, k)) if k < N else np.eye(ea.dim(m.n, k))
        B = col_space(m.d(k - 1), ea.dim(m.n, k)) if k >= 1 else np.zeros((1, 0))
        Hc = Z - B @ (B.T @ Z) if B.shape[1] else Z
        H = col_space(Hc, ea.dim(m.n, k))
        if exact:
            b = (ea.dim(m.n, k) - rank(Dk, True) if k < N else ea.dim(m.n, k)) - (rank(m.d(k - 1), True) if k else 0)
            if b != H.shape[1]:
                raise ConsistencyError(f"float and exact Betti numbers disagree in degree {k}")
        betti.append(H.shape[1])
        reps.append(H)
        Zs.append(Z)
        Bs.append(B)
    return Cohomology(betti, reps, Zs, Bs)


def poincare_pairing(m: CEModel, coh: Cohomology, k: int) -> np.ndarray:
    n = m.n
    A, B = coh.reps[k], coh.reps[m.N - k]
    out = np.zeros((A.shape[1], B.shape[1]))
    for i in range(A.shape[1]):
        a = ea.PointwiseForm.from_vector(n, k, A[:, i])
        for j in range(B.shape[1]):
            b = ea.PointwiseForm.from_vector(n, m.N - k, B[:, j])
            out[i, j] = (a ^ b).vector(m.N)[0]
    return out


def induced_L_power(m: CEModel, coh: Cohomology, r: int, k: int) -> np.ndarray:
    """Matrix of ``[ω^r]∧: H^k -> H^{k+2r}`` in the representative bases."""
    tgt = k + 2 * r
    if tgt > m.N:
        return np.zeros((0, coh.betti[k]))
    M = m.L_power(r, k)
    img = M @ coh.reps[k]
    # well-definedness: closed to closed, exact to exact
    if np.abs(m.d(tgt) @ img).max(initial=0.0) > 1e-9 if tgt < m.N else False:
        raise ConsistencyError("ω^r∧ does not preserve closed forms")
    Bk = coh.boundaries[k]
    if Bk.shape[1]:
        imB = M @ Bk
        Bt = coh.boundaries[tgt]
        resid = imB - Bt @ (Bt.T @ imB) if Bt.shape[1] else imB
        if np.abs(resid).max(initial=0.0) > 1e-9:
            raise ConsistencyError("ω^r∧ does not preserve exact forms")
    return coh.coords(tgt, img)


def hard_lefschetz_test(m: CEModel, coh: Cohomology | None = None) -> list[bool]:
    coh = coh or cohomology(m)
    out = []
    for k in range(m.n + 1):
        M = induced_L_power(m, coh, k, m.n - k)
        out.append(bool(M.shape[0] == M.shape[1] and rank(M) == M.shape[0]))
    return out


@dataclass
class Subspace:
    dim: int
    basis: np.ndarray  # form vectors (columns)


def ph(m: CEModel, r: int, coh: Cohomology | None = None) -> Subspace:
    """Primitive cohomology ``ker(L^{n-r+1}: H^r -> H^{2n-r+2})``."""
    if not 0 <= r <= m.n:
        raise DomainError(f"r = {r} outside 0..{m.n}")
    coh = coh or cohomology(m)
    M = induced_L_power(m, coh, m.n - r + 1, r)
    K = null_space(M, coh.betti[r]) if M.shape[0] else np.eye(coh.betti[r])
    return Subspace(K.shape[1], coh.reps[r] @ K)


def _pprime(m: CEModel, r: int) -> np.ndarray:
    """Basis of P'^r = {α primitive, d^Λ α = 0}."""
    dimr = ea.dim(m.n, r)
    if r < 0:
        return np.zeros((0, 0))
    blocks = [m.Lambda(r), m.dlambda(r)]
    S = np.vstack([b for b in blocks if b.shape[0]]) if any(b.shape[0] for b in blocks) else np.zeros((0, dimr))
    return null_space(S, dimr)


@dataclass
class PHd:
    dim: int
    basis: np.ndarray  # closed P' forms spanning a complement of d P'^{r-1}
    d_preserves_pprime: bool


def ph_d(m: CEModel, r: int) -> PHd:
    if not 1 <= r <= m.n:
        raise DomainError(f"r = {r} outside 1..{m.n}")
    P = _pprime(m, r)
    Z = intersection_basis(P, null_space(m.d(r), ea.dim(m.n, r)))
    Pm = _pprime(m, r - 1)
    img = col_space(m.d(r - 1) @ Pm, ea.dim(m.n, r)) if Pm.shape[1] else np.zeros((ea.dim(m.n, r), 0))
    inside = True
    if img.shape[1]:
        resid = img - Z @ (Z.T @ img) if Z.shape[1] else img
        inside = bool(np.abs(resid).max() < 1e-9)
    if not inside:
        # quotient by the part of the image that does land in Z
        img = intersection_basis(img, Z)
    comp = Z - img @ (img.T @ Z) if img.shape[1] else Z
    basis = col_space(comp, ea.dim(m.n, r))
    return PHd(Z.shape[1] - img.shape[1], basis, inside)


def natural_map_rank(m: CEModel, r: int, coh: Cohomology | None = None) -> int:
    """Rank of ``PH^r_d -> PH^r``, ``[α] ↦ [α]``."""
    coh = coh or cohomology(m)
    B = ph_d(m, r).basis
    if B.shape[1] == 0:
        return 0
    return rank(coh.coords(r, B))


@dataclass
class DDLambda:
    ker_d_im_dl: int
    im_d_ker_dl: int
    im_ddl: int

    @property
    def agree(self) -> bool:
        return self.ker_d_im_dl == self.im_d_ker_dl == self.im_ddl

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.ker_d_im_dl, self.im_d_ker_dl, self.im_ddl)


def ddlambda_subspaces(m: CEModel) -> list[DDLambda]:
    out = []
    for k in range(m.N + 1):
        dk = ea.dim(m.n, k)
        ker_d = null_space(m.d(k), dk) if k < m.N else np.eye(dk)
        ker_dl = null_space(m.dlambda(k), dk) if k > 0 else np.eye(dk)
        im_dl = col_space(m.dlambda(k + 1), dk) if k < m.N else np.zeros((dk, 0))
        im_d = col_space(m.d(k - 1), dk) if k > 0 else np.zeros((dk, 0))
        im_ddl = col_space(m.d(k - 1) @ m.dlambda(k), dk) if 0 < k < m.N + 1 and k >= 1 else np.zeros((dk, 0))
        out.append(DDLambda(intersection_dim(ker_d, im_dl), intersection_dim(im_d, ker_dl), im_ddl.shape[1]))
    return out


def ddl_matrix(m: CEModel, k: int) -> np.ndarray:
    """``d d^Λ`` on degree k."""
    return m.d(k - 1) @ m.dlambda(k)


# --------------------------------------------------------------------------
# Lefschetz decomposition with the model's ω


def decompose(m: CEModel, k: int, v: np.ndarray) -> list[tuple[int, np.ndarray]]:
    """``v = Σ_r L^r β_{k-2r}`` with primitive β, in the model's (ω, Λ)."""
    n = m.n
    cols, spans = [], []
    for r in range(max(k - n, 0), k // 2 + 1):
        deg = k - 2 * r
        Pb = null_space(m.Lambda(deg), ea.dim(n, deg)) if deg >= 2 else np.eye(ea.dim(n, deg))
        cols.append(m.L_power(r, deg) @ Pb)
        spans.append((r, deg, Pb))
    A = np.hstack(cols)
    if A.shape[0] != A.shape[1]:
        raise ConsistencyError("decomposition system is not square")
    x = np.linalg.solve(A, v)
    out, pos = [], 0
    for r, deg, Pb in spans:
        w = Pb.shape[1]
        out.append((r, Pb @ x[pos: pos + w]))
        pos += w
    return out


def primitive_ddlambda_refine(m: CEModel, alpha: np.ndarray, k: int, gamma: np.ndarray | None = None,
                              tol: float = 1e-9) -> np.ndarray:
    """Given primitive ``α = dd^Λ γ``, return primitive β with ``α = dd^Λ β``."""
    alpha = np.asarray(alpha, float)
    if k >= 2 and np.abs(m.Lambda(k) @ alpha).max(initial=0.0) > tol:
        raise DomainError("α is not primitive")
    D = ddl_matrix(m, k)
    if gamma is None:
        if not np.any(alpha):
            return np.zeros_like(alpha)
        gamma = np.linalg.lstsq(D, alpha, rcond=None)[0]
    if np.abs(D @ gamma - alpha).max(initial=0.0) > tol * max(1.0, np.abs(alpha).max()):
        raise DomainError("α is not in the image of dd^Λ")
    parts = dict(decompose(m, k, gamma))
    beta = parts[0]
    if np.abs(D @ beta - alpha).max(initial=0.0) > tol * max(1.0, np.abs(alpha).max()):
        raise ConsistencyError("top primitive component does not reproduce α")
    return beta


def primitive_ddl_image(m: CEModel, k: int) -> np.ndarray:
    """Basis of ``im dd^Λ ∩ ker Λ`` in degree k (the search space for instances)."""
    dk = ea.dim(m.n, k)
    im = col_space(ddl_matrix(m, k), dk)
    prim = null_space(m.Lambda(k), dk) if k >= 2 else np.eye(dk)
    return intersection_basis(im, prim)


# --------------------------------------------------------------------------
# report


@dataclass
class CohomologyReport:
    model: str
    betti: list[int]
    hl_iso: list[bool]
    ph_dims: list[int]
    phd_dims: list[int]
    ddlambda_dims: list[tuple[int, int, int]]
    natmap_rank: list[int]
    d_preserves_pprime: list[bool] = field(default_factory=list)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def report(m: CEModel) -> CohomologyReport:
    coh = cohomology(m)
    phd = [ph_d(m, r) for r in range(1, m.n + 1)]
    rep = CohomologyReport(
        model=m.name,
        betti=coh.betti,
        hl_iso=hard_lefschetz_test(m, coh),
        ph_dims=[ph(m, r, coh).dim for r in range(m.n + 1)],
        phd_dims=[p.dim for p in phd],
        ddlambda_dims=[x.as_tuple() for x in ddlambda_subspaces(m)],
        natmap_rank=[natural_map_rank(m, r, coh) for r in range(1, m.n + 1)],
        d_preserves_pprime=[p.d_preserves_pprime for p in phd],
    )
    for r in range(1, m.n + 1):
        if rep.ph_dims[r] > rep.betti[r] or rep.natmap_rank[r - 1] > min(rep.ph_dims[r], rep.phd_dims[r - 1]):
            raise ConsistencyError("report invariants violated")
    return rep
