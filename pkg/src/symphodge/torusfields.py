"""Differential-form fields on the flat torus T^{2n} = R^{2n}/Z^{2n}.

A :class:`FieldForm` stores one coefficient vector per grid node.  Two
difference schemes are supported, both of the form ``d = Σ_j D_j e^j∧`` with
commuting translation-invariant ``D_j`` (so every identity built from d, L
and Λ holds exactly in either):

``spectral``
    the field is a smooth form sampled at nodes; ``D_j`` is spectral
    differentiation (Nyquist mode dropped).
``cubical``
    the field is the density of a cubical chain of the grid, read as a
    current; ``D_j`` is the backward difference.  Supports are exact here,
    which is what the pipeline's support bookkeeping relies on.

Reductions (sums over nodes) always run in C order over the flattened grid.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import exteralg as ea
from .exteralg import DomainError, ConsistencyError

SCHEMES = ("spectral", "cubical")


class NotExactError(ValueError):
    """The right-hand side has a nonzero harmonic (constant-mode) part."""


class SupportViolation(ValueError):
    pass


# --------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class FieldForm:
    n: int
    degree: int
    coeffs: np.ndarray  # grid_shape + (dim(n, degree),)
    scheme: str = "spectral"
    representation: str = "nodal"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}")
        c = np.asarray(self.coeffs)
        if c.ndim != 2 * self.n + 1 or c.shape[-1] != ea.dim(self.n, self.degree):
            raise DomainError(f"coefficient array shape {c.shape} does not match n={self.n}, degree={self.degree}")
        if self.representation == "nodal":
            c = np.asarray(c, dtype=float)
        object.__setattr__(self, "coeffs", c)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return tuple(self.coeffs.shape[:-1])

    @property
    def spacing(self) -> np.ndarray:
        return 1.0 / np.array(self.grid_shape, dtype=float)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def with_coeffs(self, coeffs: np.ndarray, degree: int | None = None) -> "FieldForm":
        return replace(self, coeffs=coeffs, degree=self.degree if degree is None else degree)

    def zeros_like(self, degree: int | None = None) -> "FieldForm":
        k = self.degree if degree is None else degree
        return replace(self, degree=k, coeffs=np.zeros(self.grid_shape + (ea.dim(self.n, k),)))

    # representation -------------------------------------------------------
    def to_spectral(self) -> "FieldForm":
        if self.representation == "spectral":
            return self
        axes = tuple(range(2 * self.n))
        return replace(self, coeffs=np.fft.fftn(self.coeffs, axes=axes), representation="spectral")

    def to_nodal(self) -> "FieldForm":
        if self.representation == "nodal":
            return self
        axes = tuple(range(2 * self.n))
        return replace(self, coeffs=np.fft.ifftn(self.coeffs, axes=axes).real, representation="nodal")

    def nodal(self) -> np.ndarray:
        return self.to_nodal().coeffs

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "FieldForm"):
        if (self.n, self.degree, self.grid_shape, self.scheme) != (other.n, other.degree, other.grid_shape, other.scheme):
            raise DomainError("incompatible fields")

    def __add__(self, other: "FieldForm") -> "FieldForm":
        self._check(other)
        if self.representation == "spectral":
            return replace(self, coeffs=self.coeffs + other.to_spectral().coeffs)
        return replace(self, coeffs=self.coeffs + other.nodal())

    def __sub__(self, other: "FieldForm") -> "FieldForm":
        return self + other * -1.0

    def __mul__(self, s: float) -> "FieldForm":
        return replace(self, coeffs=self.coeffs * s)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def max_abs(self) -> float:
        return float(np.abs(self.nodal()).max(initial=0.0))

    def pointwise_norm(self) -> np.ndarray:
        return np.linalg.norm(self.nodal(), axis=-1)

    def at(self, node: tuple[int, ...]) -> ea.PointwiseForm:
        return ea.PointwiseForm.from_vector(self.n, self.degree, self.nodal()[tuple(node)])


def grid_coords(shape: tuple[int, ...]) -> list[np.ndarray]:
    return np.meshgrid(*[np.arange(N) / N for N in shape], indexing="ij")


def constant_field(a: ea.PointwiseForm, shape: tuple[int, ...], scheme: str = "spectral") -> FieldForm:
    k = a.homogeneous_degree()
    c = np.broadcast_to(a.vector(k), tuple(shape) + (ea.dim(a.n, k),)).copy()
    return FieldForm(a.n, k, c, scheme)


def from_components(n: int, degree: int, shape: tuple[int, ...], comps: dict, scheme: str = "spectral") -> FieldForm:
    """Build a field from ``{index_tuple: array_or_callable(coords)}``."""
    X = grid_coords(shape)
    idx = ea.basis_index(n, degree)
    c = np.zeros(tuple(shape) + (ea.dim(n, degree),))
    for I, val in comps.items():
        c[..., idx[tuple(I)]] = val(X) if callable(val) else val
    return FieldForm(n, degree, c, scheme)


def random_field(n: int, degree: int, shape: tuple[int, ...], band: int = 2, rng=None,
                 scheme: str = "spectral") -> FieldForm:
    """Random real field whose Fourier support lies in ``|m_j| <= band``."""
    rng = np.random.default_rng(rng)
    comps = ea.dim(n, degree)
    coeffs = rng.standard_normal(tuple(shape) + (comps,))
    f = FieldForm(n, degree, coeffs, scheme).to_spectral()
    mask = np.ones(tuple(shape), dtype=bool)
    for ax, N in enumerate(shape):
        m = np.abs(np.fft.fftfreq(N, 1.0 / N))
        sl = [None] * len(shape)
        sl[ax] = slice(None)
        mask &= (m <= band)[tuple(sl)]
    return replace(f, coeffs=f.coeffs * mask[..., None]).to_nodal()


# --------------------------------------------------------------------------
# pointwise operators lifted fiberwise


def apply_matrix(f: FieldForm, M: np.ndarray, degree: int) -> FieldForm:
    f = f.to_nodal()
    out = f.coeffs @ M.T
    return replace(f, degree=degree, coeffs=out)


def _empty(f: FieldForm, degree: int) -> FieldForm:
    """Zero field in an out-of-range degree (no components)."""
    return replace(f.to_nodal(), degree=degree, coeffs=np.zeros(f.grid_shape + (0,)))


def L(f: FieldForm) -> FieldForm:
    return apply_matrix(f, ea.L_matrix(f.n, f.degree), f.degree + 2)


def L_power(f: FieldForm, r: int) -> FieldForm:
    return apply_matrix(f, ea.L_power_matrix(f.n, r, f.degree), f.degree + 2 * r)


def Lambda(f: FieldForm) -> FieldForm:
    return apply_matrix(f, ea.Lambda_matrix(f.n, f.degree), f.degree - 2)


def H(f: FieldForm) -> FieldForm:
    return f * float(f.n - f.degree)


def star(f: FieldForm) -> FieldForm:
    if not 0 <= f.degree <= 2 * f.n:
        return _empty(f, 2 * f.n - f.degree)
    return apply_matrix(f, ea.star_matrix(f.n, f.degree), 2 * f.n - f.degree)


def lefschetz_decompose(f: FieldForm) -> list[tuple[int, FieldForm]]:
    parts = ea.decompose_vector(f.n, f.degree, f.nodal())
    return [(r, replace(f.to_nodal(), degree=f.degree - 2 * r, coeffs=b)) for r, b in parts]


def invert_L_power(k: int, f: FieldForm) -> FieldForm:
    n = f.n
    if not 0 <= k <= n or f.degree != n + k:
        raise DomainError(f"invert_L_power({k}) needs degree {n + k}, got {f.degree}")
    M = ea.L_power_matrix(n, k, n - k)
    c = np.linalg.solve(M, f.nodal().reshape(-1, M.shape[0]).T).T
    return replace(f.to_nodal(), degree=n - k, coeffs=c.reshape(f.grid_shape + (M.shape[1],)))


def is_primitive(f: FieldForm, tol: float = 1e-8) -> bool:
    """Nodewise primitivity, with the Λ test and ω-power test cross-asserted."""
    n, k = f.n, f.degree
    if k > n:
        raise DomainError("primitivity is defined for degree <= n")
    lam = Lambda(f).max_abs()
    lpow = L_power(f, n - k + 1).max_abs()
    ratio = ea._primitivity_ratio(n, k) * math.sqrt(ea.dim(n, k))
    if lam <= tol and lpow > ratio * tol * 10 + 1e-13:
        raise ConsistencyError("Λ-test and ω-power test disagree")
    return bool(lam <= tol)


_LIFTS = {
    "L": L, "Lambda": Lambda, "H": H, "star": star,
    "lefschetz_decompose": lefschetz_decompose, "is_primitive": is_primitive,
}


def lift_pointwise(op: str, f: FieldForm, *args):
    """Apply a pointwise exterior-algebra operation at every node."""
    if op == "invert_L_power":
        return invert_L_power(args[0], f)
    try:
        fn = _LIFTS[op]
    except KeyError:
        raise DomainError(f"unknown pointwise operation {op!r}") from None
    return fn(f, *args)


def wedge_constant(a: ea.PointwiseForm, f: FieldForm) -> FieldForm:
    p = a.homogeneous_degree()
    key = tuple(sorted(a.terms.items()))
    return apply_matrix(f, ea.wedge_matrix_of(f.n, key, p, f.degree), f.degree + p)


def wedge(a: FieldForm, b: FieldForm) -> FieldForm:
    """Wedge of two spectral fields, de-aliased by 3/2 zero padding."""
    if a.n != b.n or a.grid_shape != b.grid_shape:
        raise DomainError("incompatible fields")
    n, shape = a.n, a.grid_shape
    big = tuple(3 * N // 2 for N in shape)
    A, B = _pad(a.nodal(), shape, big), _pad(b.nodal(), shape, big)
    out = np.zeros(big + (ea.dim(n, a.degree + b.degree),))
    idx = ea.basis_index(n, a.degree + b.degree)
    for i, I in enumerate(ea.basis(n, a.degree)):
        for j, J in enumerate(ea.basis(n, b.degree)):
            if set(I) & set(J):
                continue
            out[..., idx[tuple(sorted(I + J))]] += ea.merge_sign(I, J) * A[..., i] * B[..., j]
    return FieldForm(n, a.degree + b.degree, _unpad(out, big, shape), a.scheme)


def _pad(c: np.ndarray, shape, big) -> np.ndarray:
    axes = tuple(range(len(shape)))
    C = np.fft.fftshift(np.fft.fftn(c, axes=axes), axes=axes)
    pads = [((M - N) // 2, M - N - (M - N) // 2) for N, M in zip(shape, big)] + [(0, 0)]
    C = np.pad(C, pads)
    return np.fft.ifftn(np.fft.ifftshift(C, axes=axes), axes=axes).real * (np.prod(big) / np.prod(shape))


def _unpad(c: np.ndarray, big, shape) -> np.ndarray:
    axes = tuple(range(len(shape)))
    C = np.fft.fftshift(np.fft.fftn(c, axes=axes), axes=axes)
    sl = tuple(slice((M - N) // 2, (M - N) // 2 + N) for N, M in zip(shape, big)) + (slice(None),)
    C = np.fft.ifftshift(C[sl], axes=axes)
    return np.fft.ifftn(C, axes=axes).real * (np.prod(shape) / np.prod(big))


# --------------------------------------------------------------------------
# derivatives


@lru_cache(maxsize=None)
def _wavenumbers(N: int) -> np.ndarray:
    m = np.fft.fftfreq(N, 1.0 / N)
    if N % 2 == 0:
        m[N // 2] = 0.0  # Nyquist dropped from odd derivatives
    return m


def symbols(shape: tuple[int, ...], scheme: str) -> list[np.ndarray]:
    """Fourier symbols σ_j of ``D_j``, each broadcastable over the grid."""
    out = []
    for ax, N in enumerate(shape):
        if scheme == "spectral":
            s = 2j * np.pi * _wavenumbers(N)
        else:
            m = np.fft.fftfreq(N, 1.0 / N)
            s = (1 - np.exp(-2j * np.pi * m / N)) * N
        sl = [None] * len(shape)
        sl[ax] = slice(None)
        out.append(s[tuple(sl)])
    return out


def partial(f: FieldForm, axis: int) -> np.ndarray:
    """``D_axis`` applied to every coefficient (nodal array)."""
    c = f.nodal()
    if f.scheme == "cubical":
        N = f.grid_shape[axis]
        return (c - np.roll(c, 1, axis=axis)) * N
    C = np.fft.fft(c, axis=axis)
    sl = [None] * c.ndim
    sl[axis] = slice(None)
    C *= (2j * np.pi * _wavenumbers(f.grid_shape[axis]))[tuple(sl)]
    return np.fft.ifft(C, axis=axis).real


def d(f: FieldForm) -> FieldForm:
    n, k = f.n, f.degree
    out = np.zeros(f.grid_shape + (ea.dim(n, k + 1),))
    if out.shape[-1] and f.coeffs.shape[-1]:
        for j in range(2 * n):
            out += partial(f, j) @ ea.ext_matrix(n, j, k).T
    return replace(f.to_nodal(), degree=k + 1, coeffs=out)


def dlambda(f: FieldForm, check: bool = True, tol: float = 1e-8) -> FieldForm:
    """``(-1)^{k+1} ⋆d⋆ f``, cross-checked against ``dΛf - Λdf``.

    A 0-form maps to the empty field of degree -1.
    """
    k = f.degree
    primary = star(d(star(f))) * float((-1) ** (k + 1))
    if check:
        other = d(Lambda(f)) - Lambda(d(f))
        scale = max(1.0, f.max_abs()) * max(f.grid_shape)
        err = (primary - other).max_abs()
        if err > tol * scale:
            raise ConsistencyError(f"(-1)^(k+1)⋆d⋆ and [d, Λ] disagree by {err:.3e}")
    return primary


def is_harmonic(f: FieldForm, tol: float = 1e-6) -> bool:
    n, k = f.n, f.degree
    dn, dl = harmonic_residuals(f)
    return bool(dn <= tol and dl <= tol)


def harmonic_residuals(f: FieldForm) -> tuple[float, float]:
    return d(f).max_abs(), dlambda(f, check=False).max_abs()


# --------------------------------------------------------------------------
# solving d g = rhs


def solve_d(rhs: FieldForm, tol: float = 1e-8) -> FieldForm:
    """Minimal-norm g with ``d g = rhs``, mode by mode.

    On each Fourier mode d acts as ``Σ σ_j e^j∧`` and the minimal-norm
    preimage of a closed r is ``Σ conj(σ_j) ι_j r / |σ|²``.
    """
    n, k = rhs.n, rhs.degree
    if k <= 0:
        raise DomainError("a 0-form is never exact")
    scale = max(1.0, rhs.max_abs())
    res = d(rhs).max_abs()
    if res > tol * scale * max(rhs.grid_shape):
        raise DomainError(f"right-hand side is not closed (|d rhs| = {res:.3e})")
    shape = rhs.grid_shape
    axes = tuple(range(2 * n))
    R = np.fft.fftn(rhs.nodal(), axes=axes)
    sig = symbols(shape, rhs.scheme)
    s2 = sum(np.abs(s) ** 2 for s in sig)
    dead = s2 < 1e-14
    leftover = np.abs(R[dead]).max(initial=0.0) / np.prod(shape)
    if leftover > tol * scale:
        raise NotExactError(f"rhs has a harmonic part of size {leftover:.3e}")
    inv = np.where(dead, 0.0, 1.0 / np.where(dead, 1.0, s2))
    G = np.zeros(shape + (ea.dim(n, k - 1),), dtype=complex)
    for j in range(2 * n):
        G += (np.conj(sig[j]) * inv)[..., None] * (R @ ea.int_matrix(n, j, k).T)
    g = np.fft.ifftn(G, axes=axes).real
    return replace(rhs.to_nodal(), degree=k - 1, coeffs=g)


# --------------------------------------------------------------------------
# mollifier and smoothing


def _bump(t: np.ndarray, w: float) -> np.ndarray:
    u = np.clip(np.abs(t) / w, 0.0, 1.0)
    out = np.zeros_like(u)
    inside = u < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass(frozen=True, eq=False)
class Mollifier:
    """Tensor-product bump ``exp(-1/(1-(t/w)^2))``, normalized on the grid."""

    width: float
    shape: tuple[int, ...]
    stencils: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.width < 0.5:
            raise DomainError("mollifier width must lie in (0, 1/2)")
        st = []
        for N in self.shape:
            r = int(math.ceil(self.width * N))
            offs = np.arange(-r, r + 1)
            w = _bump(offs / N, self.width)
            if w.sum() <= 0:
                raise DomainError(f"width {self.width} is below the grid spacing 1/{N}")
            st.append((offs[w > 0], w[w > 0] / w.sum()))
        object.__setattr__(self, "stencils", tuple(st))

    @property
    def radius_nodes(self) -> tuple[int, ...]:
        return tuple(int(np.abs(o).max()) for o, _ in self.stencils)

    def kernel(self) -> np.ndarray:
        """The full kernel on the grid (centered at node 0), total integral 1."""
        K = np.ones(self.shape)
        for ax, (offs, w) in enumerate(self.stencils):
            v = np.zeros(self.shape[ax])
            v[offs % self.shape[ax]] = w
            sl = [None] * len(self.shape)
            sl[ax] = slice(None)
            K = K * v[tuple(sl)]
        return K / np.prod(1.0 / np.array(self.shape))


def dilate(mask: np.ndarray, radius: tuple[int, ...]) -> np.ndarray:
    out = mask.copy()
    for ax, r in enumerate(radius):
        acc = out.copy()
        for s in range(-r, r + 1):
            if s:
                acc |= np.roll(out, s, axis=ax)
        out = acc
    return out


def support_mask(f: FieldForm, tol: float = 0.0) -> np.ndarray:
    return f.pointwise_norm() > tol


def smooth(f, m: Mollifier, allowed: np.ndarray | None = None) -> FieldForm:
    """Convolve with the mollifier over torus translations.

    Accepts a :class:`FieldForm` or anything with a ``to_field(shape)``
    method (chain currents rasterize themselves first).  When ``allowed`` (a
    node mask standing for the open set W) is given, the width-neighborhood
    of the support must stay inside it.
    """
    if not isinstance(f, FieldForm):
        f = f.to_field(m.shape)
    if f.grid_shape != tuple(m.shape):
        raise DomainError("mollifier grid does not match the field")
    if allowed is not None:
        grown = dilate(support_mask(f), m.radius_nodes)
        bad = np.argwhere(grown & ~allowed)
        if len(bad):
            raise SupportViolation(f"mollified support leaves W at node {tuple(bad[0])}")
    c = f.nodal()
    for ax, (offs, w) in enumerate(m.stencils):
        acc = np.zeros_like(c)
        for o, wt in zip(offs, w):
            acc += wt * np.roll(c, int(o), axis=ax)
        c = acc
    return replace(f.to_nodal(), coeffs=c)


# --------------------------------------------------------------------------
# integration


def integrate(f: FieldForm) -> float:
    if f.degree != 2 * f.n:
        raise DomainError("integrate needs a top-degree field")
    return float(f.nodal()[..., 0].sum() * f.cell_volume)


def pair_fields(a: FieldForm, b: FieldForm) -> float:
    """``∫ a ∧ b`` by the (spectrally exact) trapezoid rule."""
    if a.degree + b.degree != 2 * a.n:
        raise DomainError("degrees must add to 2n")
    n = a.n
    total = 0.0
    A, B = a.nodal(), b.nodal()
    for i, I in enumerate(ea.basis(n, a.degree)):
        J = ea.complement(n, I)
        j = ea.basis_index(n, b.degree)[J]
        total += ea.merge_sign(I, J) * float((A[..., i] * B[..., j]).sum())
    return total * a.cell_volume


def interpolate(f: FieldForm, points: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of a spectral field at arbitrary points."""
    if f.scheme != "spectral":
        raise DomainError("point evaluation is defined for spectral fields only")
    shape = f.grid_shape
    axes = tuple(range(2 * f.n))
    C = np.fft.fftn(f.nodal(), axes=axes) / np.prod(shape)
    freqs = [np.fft.fftfreq(N, 1.0 / N) for N in shape]
    points = np.atleast_2d(points)
    out = np.empty((len(points), C.shape[-1]))
    for q, x in enumerate(points):
        ph = np.ones(shape, dtype=complex)
        for ax, (fr, xa) in enumerate(zip(freqs, x)):
            e = np.exp(2j * np.pi * fr * xa)
            if shape[ax] % 2 == 0:
                e[shape[ax] // 2] = np.cos(np.pi * shape[ax] * xa)
            sl = [None] * len(shape)
            sl[ax] = slice(None)
            ph = ph * e[tuple(sl)]
        out[q] = np.tensordot(ph, C, axes=(axes, axes)).real
    return out


def pair_with_cycle(f: FieldForm, chain, degree: int = 6) -> float:
    """``Σ a_i ∫_{σ_i} f`` by per-simplex Gauss quadrature of the pullback."""
    from .chains import evaluate_chain

    if f.degree != chain.p:
        raise DomainError(f"form degree {f.degree} != chain dimension {chain.p}")
    return evaluate_chain(chain, lambda pts: interpolate(f, pts % 1.0), f.n, degree)


# --------------------------------------------------------------------------
# exact band-limited test forms


@dataclass(frozen=True, eq=False)
class TrigForm:
    """``Re Σ_m c_m e^{2πi m·x}``: an exactly representable smooth test form."""

    n: int
    degree: int
    modes: np.ndarray  # (M, 2n) integers
    coeffs: np.ndarray  # (M, dim(n, degree)) complex

    @classmethod
    def random(cls, n: int, degree: int, rng, n_modes: int = 3, band: int = 2,
               include_constant: bool = True) -> "TrigForm":
        rng = np.random.default_rng(rng)
        modes = rng.integers(-band, band + 1, size=(n_modes, 2 * n))
        if include_constant:
            modes[0] = 0
        c = rng.standard_normal((n_modes, ea.dim(n, degree))) + 1j * rng.standard_normal((n_modes, ea.dim(n, degree)))
        return cls(n, degree, modes, c)

    @classmethod
    def constant(cls, a: ea.PointwiseForm) -> "TrigForm":
        k = a.homogeneous_degree()
        return cls(a.n, k, np.zeros((1, 2 * a.n), dtype=int), a.vector(k)[None, :].astype(complex))

    def __add__(self, other: "TrigForm") -> "TrigForm":
        if other.degree != self.degree:
            raise DomainError("degree mismatch")
        return TrigForm(self.n, self.degree, np.vstack([self.modes, other.modes]),
                        np.vstack([self.coeffs, other.coeffs]))

    def __mul__(self, s: float) -> "TrigForm":
        return TrigForm(self.n, self.degree, self.modes, self.coeffs * s)

    __rmul__ = __mul__

    def matrix(self, M: np.ndarray, degree: int) -> "TrigForm":
        return TrigForm(self.n, degree, self.modes, self.coeffs @ M.T)

    def d(self) -> "TrigForm":
        n, k = self.n, self.degree
        out = np.zeros((len(self.modes), ea.dim(n, k + 1)), dtype=complex)
        for j in range(2 * n):
            out += (2j * np.pi * self.modes[:, j])[:, None] * (self.coeffs @ ea.ext_matrix(n, j, k).T)
        return TrigForm(n, k + 1, self.modes, out)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        ph = np.exp(2j * np.pi * (np.atleast_2d(points) @ self.modes.T))
        return (ph @ self.coeffs).real

    def sample(self, shape: tuple[int, ...], scheme: str = "spectral") -> FieldForm:
        X = np.stack(grid_coords(shape), axis=-1)
        vals = self(X.reshape(-1, 2 * self.n)).reshape(tuple(shape) + (self.coeffs.shape[1],))
        return FieldForm(self.n, self.degree, vals, scheme)

    def cube_integrals(self, shape: tuple[int, ...]) -> np.ndarray:
        """``∫_{cube(x, I)} φ_I`` for every node x and index set I (de Rham map)."""
        h = 1.0 / np.array(shape, dtype=float)
        X = np.stack(grid_coords(shape), axis=-1).reshape(-1, 2 * self.n)
        ph = np.exp(2j * np.pi * (X @ self.modes.T))  # (nodes, M)
        theta = 2j * np.pi * self.modes * h  # (M, 2n)
        with np.errstate(invalid="ignore", divide="ignore"):
            fac = np.where(self.modes == 0, h, (np.exp(theta) - 1) / (2j * np.pi * np.where(self.modes == 0, 1, self.modes)))
        out = np.empty((X.shape[0], self.coeffs.shape[1]))
        for c, I in enumerate(ea.basis(self.n, self.degree)):
            w = np.prod(fac[:, list(I)], axis=1) if I else np.ones(len(self.modes))
            out[:, c] = (ph @ (self.coeffs[:, c] * w)).real
        return out.reshape(tuple(shape) + (self.coeffs.shape[1],))


def L_trig(phi: TrigForm) -> TrigForm:
    return phi.matrix(ea.L_matrix(phi.n, phi.degree), phi.degree + 2)


def Lambda_trig(phi: TrigForm) -> TrigForm:
    return phi.matrix(ea.Lambda_matrix(phi.n, phi.degree), phi.degree - 2)


def star_trig(phi: TrigForm) -> TrigForm:
    return phi.matrix(ea.star_matrix(phi.n, phi.degree), 2 * phi.n - phi.degree)


def evaluate_field_current(f: FieldForm, phi: TrigForm) -> float:
    """The field read as a current: ``∫ f ∧ φ`` (spectral) or the cubical pairing."""
    if f.degree + phi.degree != 2 * f.n:
        raise DomainError(f"current of degree {f.degree} cannot pair with a {phi.degree}-form")
    if f.scheme == "spectral":
        return pair_fields(f, phi.sample(f.grid_shape))
    chain = field_to_cube_coeffs(f)
    return float((chain * phi.cube_integrals(f.grid_shape)).sum())


def field_to_cube_coeffs(f: FieldForm) -> np.ndarray:
    """Cube coefficients ``c(x, I)`` of a cubical field of degree 2n-p.

    The field stores densities: ``α_J = sgn(J, I) c(x, I) / h^{|J|}`` with
    ``J`` the complement of ``I``.  Output is indexed by ``basis(n, p)``.
    """
    n, k = f.n, f.degree
    p = 2 * n - k
    h = f.spacing
    out = np.zeros(f.grid_shape + (ea.dim(n, p),))
    idxJ = ea.basis_index(n, k)
    A = f.nodal()
    for i, I in enumerate(ea.basis(n, p)):
        J = ea.complement(n, I)
        hJ = float(np.prod(h[list(J)])) if J else 1.0
        out[..., i] = ea.merge_sign(J, I) * hJ * A[..., idxJ[J]]
    return out


def cube_to_field(n: int, c: np.ndarray, p: int) -> FieldForm:
    return _cube_to_field(n, c, c.shape[:-1], p)


def _cube_to_field(n, c, shape, p) -> FieldForm:
    k = 2 * n - p
    h = 1.0 / np.array(shape, dtype=float)
    out = np.zeros(tuple(shape) + (ea.dim(n, k),))
    idxJ = ea.basis_index(n, k)
    for i, I in enumerate(ea.basis(n, p)):
        J = ea.complement(n, I)
        hJ = float(np.prod(h[list(J)])) if J else 1.0
        out[..., idxJ[J]] = ea.merge_sign(J, I) * c[..., i] / hJ
    return FieldForm(n, k, out, "cubical")


# --------------------------------------------------------------------------
# .sff files


def save_sff(f: FieldForm, path: str | Path) -> None:
    header = {"n": f.n, "grid_shape": list(f.grid_shape), "degree": f.degree,
              "representation": f.representation, "scheme": f.scheme}
    c = f.coeffs
    if f.representation == "spectral":
        c = np.stack([c.real, c.imag], axis=-1)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(np.ascontiguousarray(c, dtype="<f8").tobytes())


def load_sff(path: str | Path) -> FieldForm:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        raw = np.frombuffer(fh.read(), dtype="<f8")
    n, k = header["n"], header["degree"]
    shape = tuple(header["grid_shape"]) + (ea.dim(n, k),)
    if header["representation"] == "spectral":
        raw = raw.reshape(shape + (2,))
        c = raw[..., 0] + 1j * raw[..., 1]
    else:
        c = raw.reshape(shape).copy()
    return FieldForm(n, k, c, header.get("scheme", "spectral"), header["representation"])
