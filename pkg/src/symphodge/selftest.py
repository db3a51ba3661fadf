"""Seeded self-test of the symplectic operator algebra on smooth trigonometric forms.

Every identity is checked on random band-limited forms; d acts exactly on
Fourier modes, so residuals are pure floating-point error.  Residuals are
relative to the largest term of each identity.
"""
from __future__ import annotations

import time
from typing import Callable

import numpy as np

from . import exteralg as ea
from .torusfields import L_trig, Lambda_trig, TrigForm, star_trig


def _H(phi: TrigForm) -> TrigForm:
    return phi * float(phi.n - phi.degree)


def _dl(phi: TrigForm) -> TrigForm:
    """``(-1)^{k+1} ⋆ d ⋆``."""
    return star_trig(star_trig(phi).d()) * float((-1) ** (phi.degree + 1))


def _d(phi: TrigForm) -> TrigForm:
    return phi.d()


def _in_range(phi: TrigForm) -> bool:
    return 0 <= phi.degree <= 2 * phi.n


def _safe(op):
    def f(phi):
        if not _in_range(phi):
            return phi
        return op(phi)
    return f


L, Lam, H, d, dl, star = (_safe(o) for o in (L_trig, Lambda_trig, _H, _d, _dl, star_trig))


def _vec(phi: TrigForm, degree: int) -> np.ndarray:
    if phi.degree != degree or not 0 <= degree <= 2 * phi.n:
        return np.zeros((len(phi.modes), 0), dtype=complex)
    return phi.coeffs


def _combo(target_degree: int, *terms: tuple[float, TrigForm]) -> tuple[float, float]:
    vecs = [(s, _vec(t, target_degree)) for s, t in terms]
    vecs = [(s, v) for s, v in vecs if v.size]
    if not vecs:
        return 0.0, 0.0
    total = sum(s * v for s, v in vecs)
    scale = max(float(np.abs(v).max()) for _, v in vecs)
    return float(np.abs(total).max()), scale


def _identities() -> dict[str, Callable[[TrigForm], tuple[int, list]]]:
    def sl2_LamL(a):
        return a.degree, [(1, Lam(L(a))), (-1, L(Lam(a))), (-1, H(a))]

    def sl2_HLam(a):
        return a.degree - 2, [(1, H(Lam(a))), (-1, Lam(H(a))), (-2, Lam(a))]

    def sl2_HL(a):
        return a.degree + 2, [(1, H(L(a))), (-1, L(H(a))), (2, L(a))]

    def dL(a):
        return a.degree + 3, [(1, d(L(a))), (-1, L(d(a)))]

    def dlLam(a):
        return a.degree - 3, [(1, dl(Lam(a))), (-1, Lam(dl(a)))]

    def dLam(a):
        return a.degree - 1, [(1, d(Lam(a))), (-1, Lam(d(a))), (-1, dl(a))]

    def dlL(a):
        return a.degree + 1, [(1, dl(L(a))), (-1, L(dl(a))), (-1, d(a))]

    def ddlL(a):
        return a.degree + 2, [(1, d(dl(L(a)))), (-1, L(d(dl(a))))]

    def ddlLam(a):
        return a.degree - 2, [(1, d(dl(Lam(a)))), (-1, Lam(d(dl(a))))]

    def star_inv(a):
        return a.degree, [(1, star(star(a))), (-1, a)]

    def dl_anticommutes(a):
        return a.degree, [(1, d(dl(a))), (1, dl(d(a)))]

    return {
        "[Λ,L]=H": sl2_LamL, "[H,Λ]=2Λ": sl2_HLam, "[H,L]=-2L": sl2_HL,
        "[d,L]=0": dL, "[dΛ,Λ]=0": dlLam, "[d,Λ]=dΛ": dLam, "[dΛ,L]=d": dlL,
        "[ddΛ,L]=0": ddlL, "[ddΛ,Λ]=0": ddlLam,
        "⋆⋆=1": star_inv, "d dΛ + dΛ d = 0": dl_anticommutes,
    }


IDENTITIES = tuple(_identities())


def algebra_selftest(ns=(1, 2, 3), count: int = 200, seed: int = 0, band: int = 2,
                     n_modes: int = 3) -> dict:
    """Max relative residual of every identity over ``count`` random forms per n.

    Degrees cycle through ``0..2n`` so every degree is exercised.
    """
    ids = _identities()
    rng = np.random.default_rng(seed)
    worst = {name: 0.0 for name in ids}
    t0 = time.perf_counter()
    for n in ns:
        for i in range(count):
            k = i % (2 * n + 1)
            a = TrigForm.random(n, k, rng, n_modes=n_modes, band=band)
            for name, f in ids.items():
                deg, terms = f(a)
                r, s = _combo(deg, *terms)
                if s:
                    worst[name] = max(worst[name], r / max(1.0, s))
    return {"residuals": worst, "count": count, "ns": list(ns), "seconds": time.perf_counter() - t0}


def dlambda_agreement(ns=(1, 2, 3), count: int = 200, seed: int = 1) -> float:
    """``(-1)^{k+1}⋆d⋆`` against ``dΛ - Λd`` on random forms (relative)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in ns:
        for i in range(count):
            a = TrigForm.random(n, i % (2 * n + 1), rng)
            r, s = _combo(a.degree - 1, (1, dl(a)), (-1, d(Lam(a))), (1, Lam(d(a))))
            if s:
                worst = max(worst, r / max(1.0, s))
    return worst


def pointwise_sl2(ns=(1, 2, 3), count: int = 200, seed: int = 2) -> float:
    """sl2 relations on random mixed-degree constant forms (absolute)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in ns:
        for _ in range(count):
            terms = {}
            for k in range(2 * n + 1):
                for I, v in zip(ea.basis(n, k), rng.standard_normal(ea.dim(n, k))):
                    terms[I] = float(v)
            a = ea.PointwiseForm(n, terms)
            L_, Lam_, H_ = ea.lefschetz_L, ea.dual_lefschetz, ea.counting_H
            for lhs, rhs in (
                (Lam_(L_(a)) - L_(Lam_(a)), H_(a)),
                (H_(Lam_(a)) - Lam_(H_(a)), Lam_(a) * 2.0),
                (H_(L_(a)) - L_(H_(a)), L_(a) * -2.0),
            ):
                diff = lhs - rhs
                worst = max(worst, max((abs(v) for v in diff.terms.values()), default=0.0))
    return worst
