"""Currents on the torus T^{2n} as functionals on band-limited test forms.

A current of degree k pairs with (2n-k)-forms.  Operators are defined by
duality on the test form, e.g. ``(L T)(φ) = T(ω∧φ)`` and
``(d T)(φ) = (-1)^{k+1} T(dφ)``.  When the input is a field current the
result keeps a field representation when that representation is exact:
always for d and H, and for the pointwise operators L, Λ, ⋆ only on
spectral fields.  A cubical field pairs through cube integrals, which do not
commute with component-mixing pointwise maps, so there the dual evaluator is
the only one kept.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import exteralg as ea
from . import torusfields as tf
from .chains import Chain, Field, FormWedgeChain, PolyChain, as_current, evaluate
from .exteralg import ConsistencyError, DomainError

CHAIN_QUAD_DEGREE = 40


class RepresentationError(DomainError):
    """The operation needs a field (smoothed) representation."""


@dataclass(frozen=True, eq=False)
class DualCurrent:
    n: int
    degree: int
    evaluator: Callable[[tf.TrigForm], float]
    rep: object = None  # Chain | Field | FormWedgeChain | None
    label: str = "T"

    @property
    def test_degree(self) -> int:
        return 2 * self.n - self.degree

    def __call__(self, phi: tf.TrigForm) -> float:
        if isinstance(phi, ea.PointwiseForm):
            phi = tf.TrigForm.constant(phi)
        if phi.n != self.n or phi.degree != self.test_degree:
            raise DomainError(f"degree-{self.degree} current pairs with {self.test_degree}-forms, got {phi.degree}")
        return float(self.evaluator(phi))

    def __add__(self, other: "DualCurrent") -> "DualCurrent":
        _same(self, other)
        rep = None
        if isinstance(self.rep, Field) and isinstance(other.rep, Field):
            rep = Field(self.rep.form + other.rep.form)
        return DualCurrent(self.n, self.degree, lambda p: self(p) + other(p), rep, f"({self.label}+{other.label})")

    def __mul__(self, s: float) -> "DualCurrent":
        rep = Field(self.rep.form * s) if isinstance(self.rep, Field) else None
        return DualCurrent(self.n, self.degree, lambda p: s * self(p), rep, f"{s}*{self.label}")

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + other * -1.0

    @property
    def field(self) -> tf.FieldForm:
        if not isinstance(self.rep, Field):
            raise RepresentationError("this current has no field representation; smooth it first")
        return self.rep.form

    def to_json(self) -> dict:
        r = self.rep
        if isinstance(r, Chain):
            body = {"kind": "chain", "chain": r.chain.to_json()}
        elif isinstance(r, FormWedgeChain) and isinstance(r.alpha, ea.PointwiseForm):
            body = {"kind": "form_wedge_chain", "alpha": r.alpha.to_json(), "chain": r.chain.to_json()}
        elif isinstance(r, Field):
            f = r.form
            body = {"kind": "field", "grid_shape": list(f.grid_shape), "scheme": f.scheme,
                    "coeffs": f.nodal().tolist()}
        else:
            raise DomainError("only chain, constant-form-wedge-chain and field currents serialize")
        return {"n": self.n, "degree": self.degree, "label": self.label, **body}

    @classmethod
    def from_json(cls, obj) -> "DualCurrent":
        if isinstance(obj, str):
            obj = json.loads(obj)
        n, kind = obj["n"], obj["kind"]
        if kind == "chain":
            return current(PolyChain.from_json(obj["chain"]), n)
        if kind == "form_wedge_chain":
            return current(FormWedgeChain(ea.PointwiseForm.from_json(obj["alpha"]),
                                          PolyChain.from_json(obj["chain"])), n)
        c = np.array(obj["coeffs"], dtype=float)
        return current(tf.FieldForm(n, obj["degree"], c, obj.get("scheme", "spectral")), n)


def _same(a: DualCurrent, b: DualCurrent):
    if a.n != b.n or a.degree != b.degree:
        raise DomainError("currents of different type")


def current(obj, n: int | None = None, quad_degree: int = CHAIN_QUAD_DEGREE, label: str = "T") -> DualCurrent:
    """Wrap a chain, field or form∧chain as a :class:`DualCurrent`."""
    rep = as_current(obj)
    N = rep.N
    if N % 2:
        raise DomainError("currents live on even-dimensional tori")
    n = N // 2 if n is None else n
    degree = N - rep.dimension
    if isinstance(rep, Field):
        return DualCurrent(n, degree, lambda phi: evaluate(rep, phi), rep, label)
    return DualCurrent(n, degree, lambda phi: evaluate(rep, phi, degree=quad_degree), rep, label)


# --------------------------------------------------------------------------
# sl2 action by duality


def _omega(n: int) -> ea.PointwiseForm:
    return ea.make_standard_symplectic(n)[0]


def _spectral(T: DualCurrent) -> bool:
    return isinstance(T.rep, Field) and T.rep.form.scheme == "spectral"


def L_c(T: DualCurrent) -> DualCurrent:
    rep = None
    if _spectral(T):
        rep = Field(tf.L(T.rep.form))
    elif isinstance(T.rep, Chain):
        rep = FormWedgeChain(_omega(T.n), T.rep.chain)
    return DualCurrent(T.n, T.degree + 2, lambda phi: T(tf.L_trig(phi)), rep, f"L{T.label}")


def L_power_c(T: DualCurrent, r: int) -> DualCurrent:
    for _ in range(r):
        T = L_c(T)
    return T


def Lambda_c(T: DualCurrent) -> DualCurrent:
    rep = Field(tf.Lambda(T.rep.form)) if _spectral(T) else None
    return DualCurrent(T.n, T.degree - 2, lambda phi: T(tf.Lambda_trig(phi)), rep, f"Λ{T.label}")


def H_c(T: DualCurrent) -> DualCurrent:
    """``(HT)(φ) = T(-Σ_i (n-i) Π^i φ)``; on a degree-k current this is ``(n-k) T``."""
    j = T.test_degree
    s = -(T.n - j)
    rep = Field(T.rep.form * float(s)) if isinstance(T.rep, Field) else None
    return DualCurrent(T.n, T.degree, lambda phi: T(phi * s), rep, f"H{T.label}")


def d_c(T: DualCurrent) -> DualCurrent:
    """``(dT)(φ) = (-1)^{k+1} T(dφ)``: for chains this is ``(-1)^{p+1} ∂``."""
    s = (-1) ** (T.degree + 1)
    rep = Field(tf.d(T.rep.form)) if isinstance(T.rep, Field) else None
    return DualCurrent(T.n, T.degree + 1, lambda phi: s * T(phi.d()), rep, f"d{T.label}")


def dlambda_c(T: DualCurrent) -> DualCurrent:
    out = d_c(Lambda_c(T)) - Lambda_c(d_c(T))
    return DualCurrent(out.n, out.degree, out.evaluator, out.rep, f"dΛ{T.label}")


def star_c(T: DualCurrent) -> DualCurrent:
    rep = Field(tf.star(T.rep.form)) if _spectral(T) else None
    return DualCurrent(T.n, 2 * T.n - T.degree, lambda phi: T(tf.star_trig(phi)), rep, f"⋆{T.label}")


# --------------------------------------------------------------------------
# batteries


def battery(n: int, degree: int, size: int = 50, seed: int = 0, band: int = 1, n_modes: int = 3) -> list[tf.TrigForm]:
    if size < 1:
        raise DomainError("battery must be nonempty")
    rng = np.random.default_rng(seed)
    return [tf.TrigForm.random(n, degree, rng, n_modes=n_modes, band=band) for _ in range(size)]


def battery_residual(T: DualCurrent, size: int = 50, seed: int = 0, band: int = 1) -> float:
    """``max |T(φ)|`` over a seeded battery (0 for degree-out-of-range currents)."""
    j = T.test_degree
    if not 0 <= j <= 2 * T.n:
        return 0.0
    return max(abs(T(phi)) for phi in battery(T.n, j, size, seed, band))


def battery_difference(A: DualCurrent, B: DualCurrent, size: int = 50, seed: int = 0, band: int = 1) -> float:
    _same(A, B)
    j = A.test_degree
    if not 0 <= j <= 2 * A.n:
        return 0.0
    return max(abs(A(phi) - B(phi)) for phi in battery(A.n, j, size, seed, band))


# --------------------------------------------------------------------------
# primitivity, decomposition, inversion


def is_primitive_c(T: DualCurrent, size: int = 50, seed: int = 0, tol: float = 1e-8) -> bool:
    """``L^{n-k+1} T ≈ 0`` on the battery, cross-checked against ``Λ T ≈ 0``."""
    k = T.degree
    if k > T.n:
        raise DomainError("primitivity is defined for degree <= n")
    scale = max(1.0, battery_residual(T, size, seed))
    by_L = battery_residual(L_power_c(T, T.n - k + 1), size, seed) <= tol * scale
    by_Lam = battery_residual(Lambda_c(T), size, seed) <= tol * scale if k >= 2 else True
    if by_L != by_Lam:
        raise ConsistencyError("L-power and Λ primitivity tests disagree")
    return by_L


def lefschetz_decompose_c(T: DualCurrent) -> list[tuple[int, DualCurrent]]:
    f = T.field
    return [(r, current(b, T.n, label=f"β{b.degree}")) for r, b in tf.lefschetz_decompose(f)]


def lefschetz_reconstruct_c(parts: list[tuple[int, DualCurrent]]) -> DualCurrent:
    total = None
    for r, beta in parts:
        term = L_power_c(beta, r) * (1.0 / float(np.prod(np.arange(1, r + 1))))
        total = term if total is None else total + term
    return total


def invert_L_power_c(k: int, T: DualCurrent) -> DualCurrent:
    return current(tf.invert_L_power(k, T.field), T.n, label=f"L^-{k}{T.label}")


def smooth_c(T: DualCurrent, m: tf.Mollifier, allowed: np.ndarray | None = None) -> DualCurrent:
    """Explicit smoothing; chain currents are rasterized onto the mollifier grid first."""
    rep = T.rep
    if isinstance(rep, Field):
        f = rep.form
    elif isinstance(rep, Chain):
        f = rep.to_field(m.shape)
    else:
        raise RepresentationError("only chain and field currents can be smoothed")
    return current(tf.smooth(f, m, allowed), T.n, label=f"S{T.label}")


def mollify_test_form(phi: tf.TrigForm, m: tf.Mollifier) -> tf.TrigForm:
    """The test form ``Σ_o w_o φ(· + o h)`` dual to grid smoothing."""
    mult = np.ones(len(phi.modes), dtype=complex)
    for ax, (offs, w) in enumerate(m.stencils):
        h = 1.0 / m.shape[ax]
        mult *= (w[None, :] * np.exp(2j * np.pi * phi.modes[:, ax:ax + 1] * offs[None, :] * h)).sum(axis=1)
    return tf.TrigForm(phi.n, phi.degree, phi.modes, phi.coeffs * mult[:, None])
