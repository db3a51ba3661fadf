"""From a primitive class dual to a polyhedral cycle Q to a Harmonic form with a hole.

Everything runs in the cubical model of a periodic grid on T^{2n}: a grid
field of degree k is the density of a cubical (2n-k)-chain, d is the
backward difference (exactly dual to the cubical boundary) and ω acts
nodewise.  The steps are

1. ``W = ω^r ∧ D(Q)`` with ``r = n - p + 1`` and D the Whitney rasterization;
   if W vanishes the result is simply ``T = D(Q)``;
2. a compactly supported Γ with ``dΓ = W`` from a local sparse solve;
3. ``Γ = P + ∂R + S`` by grid deformation at scale ε;
4. ``B = L^{-r} D(P + S)`` nodewise, so that ``L^r dB = W``;
5. ``T = D(Q) - dB`` (closed, primitive, cohomologous to Q) and the smoothed
   field ``F = κ * T``, which is Harmonic and vanishes on an explicit ball.

Each intermediate identity is rechecked before moving on.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsmr
from scipy.spatial import cKDTree

from . import exteralg as ea
from . import invariant as inv
from . import torusfields as tf
from .chains import FormWedgeChain, PolyChain, boundary, wrap
from .cubical import cube_boundary, cubes_to_chain, rasterize_field
from .currents import battery_residual, current, d_c, L_power_c
from .deform import GridSpec, deform
from .exteralg import ConsistencyError, DomainError


class ConfigError(DomainError):
    """Invalid pipeline configuration."""


class PrimitivityError(DomainError):
    """The class of Q is not primitive; carries the offending pairing."""

    def __init__(self, msg: str, pairing: dict):
        super().__init__(msg)
        self.pairing = pairing


class StepError(AssertionError):
    def __init__(self, step: str, diagnostics: dict):
        super().__init__(f"step {step!r} failed: {diagnostics}")
        self.step = step
        self.diagnostics = diagnostics


class SupportLeakError(AssertionError):
    def __init__(self, msg: str, witness: tuple):
        super().__init__(f"{msg} at node {witness}")
        self.witness = witness


# --------------------------------------------------------------------------
# cycles built from subtori


def subtorus_cubes(n: int, axes, shape, at=None) -> np.ndarray:
    """Cube coefficients of the coordinate subtorus through ``at`` spanned by ``axes`` (0-based)."""
    axes = tuple(sorted(axes))
    N = 2 * n
    at = np.zeros(N) if at is None else np.asarray(at, float)
    idx = ea.basis_index(n, len(axes))
    out = np.zeros(tuple(shape) + (ea.dim(n, len(axes)),))
    sl = []
    for ax in range(N):
        sl.append(slice(None) if ax in axes else int(round(at[ax] * shape[ax])) % shape[ax])
    out[tuple(sl) + (idx[axes],)] = 1.0
    return out


def bump_cubes(n: int, axes, shape, at) -> np.ndarray:
    """Boundary of one grid cube spanned by ``axes`` at the node nearest ``at``."""
    axes = tuple(sorted(axes))
    q = len(axes)
    c = np.zeros(tuple(shape) + (ea.dim(n, q),))
    node = tuple(int(round(a * s)) % s for a, s in zip(at, shape))
    c[node + (ea.basis_index(n, q)[axes],)] = 1.0
    return cube_boundary(c, 2 * n, q)


def cycle_from_spec(n: int, shape, spec: dict) -> PolyChain:
    """Build Q from a JSON spec.

    Accepted keys: ``subtorus`` (1-based axes), ``at`` (fractional point),
    optional ``bump`` = ``{"axes": [...], "at": [...]}`` adding the boundary of
    one grid cube; or ``chain`` (inline .pchain object) / ``path``.
    """
    if "chain" in spec:
        return PolyChain.from_json(spec["chain"])
    if "path" in spec:
        return PolyChain.load(spec["path"])
    if "subtorus" not in spec:
        raise ConfigError("Q needs one of 'subtorus', 'chain' or 'path'")
    axes = [a - 1 for a in spec["subtorus"]]
    if any(not 0 <= a < 2 * n for a in axes) or len(set(axes)) != len(axes):
        raise ConfigError(f"bad subtorus axes {spec['subtorus']}")
    c = subtorus_cubes(n, axes, shape, spec.get("at"))
    if "bump" in spec:
        b = spec["bump"]
        baxes = [a - 1 for a in b["axes"]]
        if len(baxes) != len(axes) + 1:
            raise ConfigError("bump cube must have one more axis than the subtorus")
        c = c + bump_cubes(n, baxes, shape, b.get("at", [0.5] * 2 * n))
    return cubes_to_chain(c, 2 * n, len(axes))


# --------------------------------------------------------------------------
# configuration and report


@dataclass
class PipelineConfig:
    n: int
    grid: int
    p: int
    Q: PolyChain
    epsilon: float = 0.25
    offset: list | None = None
    mollifier_width: float | None = None
    tol_step: float = 1e-8
    tol_end: float = 1e-6
    tol_zero: float = 1e-8
    battery: int = 50
    seed: int = 0
    out: str | None = None
    label: str = "run"
    q_spec: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be positive")
        if not 1 <= self.p <= self.n:
            raise ConfigError(f"p = {self.p} outside 1..n")
        if self.Q.N != 2 * self.n:
            raise ConfigError("Q does not live in T^{2n}")
        if self.Q.p != 2 * self.n - self.p:
            raise ConfigError(f"Q has dimension {self.Q.p}, expected 2n - p = {2 * self.n - self.p}")
        if self.grid < 4:
            raise ConfigError("grid too coarse")
        if self.mollifier_width is None:
            self.mollifier_width = 1.5 / self.grid
        ratio = 1.0 / self.epsilon
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("1/epsilon must be an integer")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.grid,) * (2 * self.n)

    @property
    def h(self) -> float:
        return 1.0 / self.grid

    @classmethod
    def from_json(cls, obj) -> "PipelineConfig":
        if isinstance(obj, (str, Path)):
            obj = json.loads(Path(obj).read_text())
        try:
            n, grid, p = int(obj["n"]), int(obj["grid"]), int(obj["p"])
            spec = obj["Q"]
        except KeyError as e:
            raise ConfigError(f"missing config key {e}") from None
        Q = cycle_from_spec(n, (grid,) * (2 * n), spec)
        kw = {k: obj[k] for k in ("epsilon", "offset", "mollifier_width", "tol_step", "tol_end",
                                   "tol_zero", "battery", "seed", "out", "label") if k in obj}
        return cls(n, grid, p, Q, q_spec=spec, **kw)

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in ("n", "grid", "p", "epsilon", "offset", "mollifier_width",
                                           "tol_step", "tol_end", "tol_zero", "battery", "seed",
                                           "out", "label")}
        d["Q"] = self.q_spec if self.q_spec is not None else {"chain": self.Q.to_json()}
        return d


@dataclass
class EmptyBall:
    center: list
    radius: float
    radius_cells: float
    max_norm_inside: float
    nodes_inside: int


@dataclass
class PipelineReport:
    label: str
    branch: str
    ok: bool
    residuals: dict
    class_pairings: list
    masses: dict
    harmonic: dict
    empty_ball: EmptyBall | None
    B_components: list
    timings: dict
    deform_certificate: dict | None = None
    artifacts: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    # in-memory results (not serialized)
    T: tf.FieldForm | None = field(default=None, repr=False)
    F: tf.FieldForm | None = field(default=None, repr=False)
    B: tf.FieldForm | None = field(default=None, repr=False)
    Gamma: PolyChain | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("T", "F", "B", "Gamma")}
        return json.loads(json.dumps(d, default=_jsonable))

    def rows(self) -> list[tuple[str, str]]:
        """Flat (key, value) pairs for CSV output."""
        out = [("label", self.label), ("branch", self.branch), ("ok", str(self.ok))]
        out += [(f"residual.{k}", f"{v:.3e}") for k, v in self.residuals.items()]
        out += [(f"mass.{k}", f"{v:.6g}") for k, v in self.masses.items()]
        out += [(f"harmonic.{k}", str(v)) for k, v in self.harmonic.items()]
        if self.empty_ball:
            out += [("ball.radius_cells", f"{self.empty_ball.radius_cells:.3f}"),
                    ("ball.center", " ".join(f"{c:.4f}" for c in self.empty_ball.center))]
        out += [(f"time.{k}", f"{v:.3f}") for k, v in self.timings.items()]
        return out


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


# --------------------------------------------------------------------------
# pieces


def class_vector(Q: PolyChain, n: int, degree: int) -> np.ndarray:
    """``Q(e^I)`` for every constant basis form of the given degree."""
    out = []
    for I in ea.basis(n, degree):
        phi = ea.PointwiseForm.basis_form(n, *I)
        out.append(current(Q, n)(phi) if Q.p == degree else 0.0)
    return np.array(out)


def check_primitive_class(Q: PolyChain, n: int, p: int, tol: float) -> dict:
    """``Q(ω^r ∧ ψ)`` over constant ψ of degree ``2n - p - 2r``; all must vanish."""
    r = n - p + 1
    k = 2 * n - p - 2 * r
    if k < 0:
        return {"r": r, "max": 0.0}
    wr = ea.omega_power(n, r)
    TQ = current(Q, n)
    vals = []
    for I in ea.basis(n, k):
        psi = ea.PointwiseForm.basis_form(n, *I)
        vals.append((I, TQ(wr ^ psi)))
    worst = max(vals, key=lambda t: abs(t[1]))
    info = {"r": r, "max": abs(worst[1]), "form": [i + 1 for i in worst[0]], "value": worst[1]}
    if abs(worst[1]) > tol:
        raise PrimitivityError(f"L^{r}[Q] ≠ 0: Q(ω^{r}∧e^{info['form']}) = {worst[1]:.3e}", info)
    return info


def _box(mask: np.ndarray, margin: int) -> list[np.ndarray]:
    """Per-axis index ranges (mod grid) of a box containing mask, grown by margin."""
    ranges = []
    for ax, N in enumerate(mask.shape):
        occ = np.flatnonzero(mask.any(axis=tuple(a for a in range(mask.ndim) if a != ax)))
        # smallest cyclic interval covering occ: cut at the largest gap
        gaps = np.diff(np.concatenate([occ, [occ[0] + N]]))
        cut = int(np.argmax(gaps))
        start = occ[(cut + 1) % len(occ)]
        length = (occ[cut] - start) % N + 1
        length = min(length + 2 * margin + 1, N)
        if length >= N:
            raise StepError("solve", {"reason": f"support of W wraps around axis {ax}"})
        ranges.append((start - margin + np.arange(length)) % N)
    return ranges


def solve_local(W: tf.FieldForm, margin: int = 1, tol: float = 1e-10) -> tuple[tf.FieldForm, float]:
    """A Γ supported in a box around supp W with ``dΓ = W`` (cubical scheme)."""
    if W.scheme != "cubical":
        raise DomainError("the local solve works in the cubical scheme")
    n, k = W.n, W.degree
    shape = W.grid_shape
    mask = W.pointwise_norm() > 0
    if not mask.any():
        return W.zeros_like(k - 1), 0.0
    ranges = _box(mask, margin)
    lens = [len(r) for r in ranges]
    # unknown nodes: the box; equation nodes: the box grown by one step forward
    eq_ranges = [np.concatenate([r, [(r[-1] + 1) % N]]) for r, N in zip(ranges, shape)]
    eq_lens = [len(r) for r in eq_ranges]
    nu, ne = int(np.prod(lens)), int(np.prod(eq_lens))
    du, de = ea.dim(n, k - 1), ea.dim(n, k)
    # position of unknown node along each axis inside the equation box: identical (prefix)
    D = sp.csr_matrix((ne * de, nu * du))
    for a in range(2 * n):
        h_inv = shape[a]
        mats = []
        for ax in range(2 * n):
            I = sp.eye(eq_lens[ax], lens[ax], format="csr")
            if ax == a:
                I = (I - sp.eye(eq_lens[ax], lens[ax], k=-1, format="csr")) * h_inv
            mats.append(I)
        Diff = mats[0]
        for m in mats[1:]:
            Diff = sp.kron(Diff, m, format="csr")
        D = D + sp.kron(Diff, sp.csr_matrix(ea.ext_matrix(n, a, k - 1)), format="csr")
    rhs_full = W.nodal()
    ix = np.ix_(*eq_ranges)
    rhs = rhs_full[ix].reshape(-1)
    outside = rhs_full.copy()
    outside[ix] = 0.0
    if np.abs(outside).max(initial=0.0) > 0:
        raise StepError("solve", {"reason": "W not contained in the equation box"})
    if nu * du <= 6000:
        g, *_ = np.linalg.lstsq(D.toarray(), rhs, rcond=None)
    else:
        g = lsmr(D, rhs, atol=1e-15, btol=1e-15, maxiter=20 * nu * du)[0]
    res = float(np.abs(D @ g - rhs).max(initial=0.0))
    out = np.zeros(shape + (du,))
    out[np.ix_(*ranges)] = g.reshape(tuple(lens) + (du,))
    return tf.FieldForm(n, k - 1, out, "cubical"), res


def field_to_chain(f: tf.FieldForm, tol: float = 0.0) -> PolyChain:
    c = tf.field_to_cube_coeffs(f)
    return cubes_to_chain(c, 2 * f.n, 2 * f.n - f.degree, tol)


def closed_battery(n: int, degree: int, size: int, seed: int) -> list[tf.TrigForm]:
    """Constant basis forms plus exact forms dψ: a battery of closed test forms."""
    forms = [tf.TrigForm.constant(ea.PointwiseForm.basis_form(n, *I)) for I in ea.basis(n, degree)]
    if degree >= 1:
        rng = np.random.default_rng(seed)
        forms += [tf.TrigForm.random(n, degree - 1, rng, n_modes=3, band=1).d()
                  for _ in range(max(size - len(forms), 0))]
    return forms


def find_empty_ball(F: tf.FieldForm, tol: float) -> EmptyBall | None:
    """Largest ball (centered at a cell center) missing every support cube of F."""
    shape = np.array(F.grid_shape)
    h = 1.0 / shape
    norm = F.pointwise_norm()
    supp = np.argwhere(norm > tol)
    if len(supp) == 0:
        return EmptyBall([0.5] * len(shape), 0.5, 0.5 * float(shape.min()), 0.0, int(norm.size))
    centers = (supp + 0.5) * h
    tree = cKDTree(centers, boxsize=1.0)
    cand = (np.argwhere(np.ones(F.grid_shape, bool)) + 0.5) * h
    dist, _ = tree.query(cand, k=1)
    best = int(np.argmax(dist))
    c = cand[best]
    if dist[best] == 0:
        return None
    # exact distance from c to the union of closed support cubes x + [0, h]^N
    delta = np.abs(((supp * h + h / 2) - c + 0.5) % 1.0 - 0.5)
    gap = np.maximum(delta - h / 2, 0.0)
    radius = float(np.sqrt((gap ** 2).sum(axis=1)).min())
    # recheck on the nodes inside the open ball
    nodes = np.argwhere(np.ones(F.grid_shape, bool))
    dn = np.abs(((nodes * h) - c + 0.5) % 1.0 - 0.5)
    inside = np.sqrt((dn ** 2).sum(axis=1)) < radius
    inner = float(norm.reshape(-1)[inside].max(initial=0.0))
    return EmptyBall(c.tolist(), radius, radius / float(h.max()), inner, int(inside.sum()))


def lefschetz_decompose_B(B: tf.FieldForm, source: tf.FieldForm | None, m: tf.Mollifier | None = None,
                          tol: float = 1e-12) -> list[dict]:
    """Decompose B nodewise and check each component stays inside supp(source) (grown by m).

    ``source`` is the field B was obtained from (``D(P + S)``); ``None`` means
    B must vanish.
    """
    parts = tf.lefschetz_decompose(B) if B.coeffs.shape[-1] else []
    allowed = np.zeros(B.grid_shape, bool) if source is None else tf.support_mask(source, tol)
    if m is not None:
        allowed = tf.dilate(allowed, m.radius_nodes)
    out = []
    for r, beta in parts:
        mask = tf.support_mask(beta, tol)
        bad = np.argwhere(mask & ~allowed)
        if len(bad):
            raise SupportLeakError(f"component L^{r}β_{beta.degree} leaks outside the allowed support",
                                   tuple(int(i) for i in bad[0]))
        out.append({"r": r, "degree": beta.degree, "max": beta.max_abs(), "support_nodes": int(mask.sum())})
    return out


# --------------------------------------------------------------------------
# the run


def run(cfg: PipelineConfig) -> PipelineReport:
    n, p, shape = cfg.n, cfg.p, cfg.shape
    r = n - p + 1
    tol = cfg.tol_step
    times: dict[str, float] = {}
    res: dict[str, float] = {}
    masses: dict[str, float] = {}
    clock = time.perf_counter()

    def tick(name):
        nonlocal clock
        now = time.perf_counter()
        times[name] = now - clock
        clock = now

    def need(name, value, bound, **diag):
        res[name] = float(value)
        if not value <= bound:
            raise StepError(name, {"residual": float(value), "bound": bound, **diag})

    Q = cfg.Q
    dQ = wrap(boundary(Q)).canonical() if Q.p > 0 else None
    if dQ is not None and not dQ.is_empty():
        raise ConfigError(f"Q is not a cycle: ∂Q has mass {dQ.mass():.3e}")
    masses["Q"] = Q.mass()
    prim = check_primitive_class(Q, n, p, tol * max(1.0, masses["Q"]))
    res["primitive_class"] = prim["max"]
    tick("validate")

    # step 1: W = ω^r ∧ Q
    DQ = rasterize_field(Q, shape)
    need("dDQ", tf.d(DQ).max_abs(), tol * cfg.grid)
    W = tf.L_power(DQ, r) if p + 2 * r <= 2 * n else tf._empty(DQ, p + 2 * r)
    W_dual = 0.0
    if p + 2 * r <= 2 * n:
        W_dual = battery_residual(current(FormWedgeChain(ea.omega_power(n, r), Q), n), cfg.battery, cfg.seed)
    res["W_battery"] = W_dual
    res["W_field"] = W.max_abs()
    short = W_dual <= tol * max(1.0, masses["Q"]) and res["W_field"] <= tol
    tick("wedge")

    cert = None
    Gamma = None
    if short:
        branch = "T=Q"
        B = DQ.zeros_like(p - 1) if p >= 1 else tf._empty(DQ, -1)
        source = None
    else:
        branch = "full"
        # step 2: local cubical solve, global spectral-symbol solve as a cross-check
        G, r_loc = solve_local(W)
        need("solve_local", r_loc, tol * max(1.0, W.max_abs()))
        need("dGamma", (tf.d(G) - W).max_abs(), tol * max(1.0, W.max_abs()) * cfg.grid)
        G_glob = tf.solve_d(W, tol)
        need("solve_global_agree", tf.d(G - G_glob).max_abs(), tol * max(1.0, W.max_abs()) * cfg.grid)
        Gamma = field_to_chain(G)
        need("Gamma_roundtrip", (rasterize_field(Gamma, shape) - G).max_abs(), tol * max(1.0, G.max_abs()))
        masses["Gamma"] = Gamma.mass()
        tick("solve")

        # step 3: deformation
        offset = cfg.offset if cfg.offset is not None else [cfg.h / 2] * (2 * n)
        g = GridSpec(2 * n, cfg.epsilon, offset, periodic=True)
        dr = deform(Gamma, g, seed=cfg.seed, battery=cfg.battery)
        cert = dr.certificate
        res["deform_identity"] = cert["identity_residual"]
        masses.update(P=cert["mass_P"], R=cert["mass_R"], S=cert["mass_S"])
        tick("deform")

        # step 4: B = L^{-r} D(P + S)
        source = rasterize_field(dr.P + dr.S, shape)
        need("d_PS_equals_W", (tf.d(source) - W).max_abs(), tol * max(1.0, W.max_abs()) * cfg.grid)
        B = tf.invert_L_power(r, source)
        need("LB_equals_PS", (tf.L_power(B, r) - source).max_abs(), tol * max(1.0, source.max_abs()))
        tick("invert")

    m = tf.Mollifier(cfg.mollifier_width, shape)
    comps = lefschetz_decompose_B(B, source, None)

    # step 5: T and its smoothing
    T = DQ - tf.d(B) if B.coeffs.shape[-1] else DQ
    scale = max(1.0, T.max_abs())
    need("dT_field", tf.d(T).max_abs(), tol * scale * cfg.grid)
    need("LT_field", tf.L_power(T, r).max_abs(), tol * scale)

    Tc = current(T, n)
    need("dT", battery_residual(d_c(Tc), cfg.battery, cfg.seed), cfg.tol_end)
    need("LT", battery_residual(current(tf.L_power(T, r), n), cfg.battery, cfg.seed), cfg.tol_end)
    # informative: ω∧ by exact duality on the cubical current (differs at O(h))
    res["LT_dual_gap"] = battery_residual(L_power_c(Tc, r), min(cfg.battery, 10), cfg.seed)

    TQ = current(Q, n)
    pairs = []
    worst = 0.0
    for phi in closed_battery(n, 2 * n - p, cfg.battery, cfg.seed):
        a, b = Tc(phi), TQ(phi)
        worst = max(worst, abs(a - b))
        pairs.append((a, b))
    need("class", worst, cfg.tol_end)
    const = [{"form": [i + 1 for i in I], "T": pairs[j][0], "Q": pairs[j][1]}
             for j, I in enumerate(ea.basis(n, 2 * n - p))]
    tick("verify_T")

    F = tf.smooth(T, m)
    dn, dl = tf.harmonic_residuals(F)
    harm = {"d": dn, "dlambda": dl, "is_harmonic": bool(dn <= cfg.tol_end and dl <= cfg.tol_end),
            "primitive": tf.is_primitive(F, cfg.tol_end)}
    ball = find_empty_ball(F, cfg.tol_zero)
    tick("smooth")

    failures = []
    if not harm["is_harmonic"]:
        failures.append("final form is not Harmonic")
    if ball is None or ball.radius_cells < 1.0 or ball.max_norm_inside > cfg.tol_zero:
        failures.append("no empty ball of radius >= one cell")
    report = PipelineReport(cfg.label, branch, not failures, res, const, masses, harm, ball, comps, times,
                            cert, {}, failures, T=T, F=F, B=B, Gamma=Gamma)
    if cfg.out:
        write_artifacts(report, cfg)
    return report


def write_artifacts(report: PipelineReport, cfg: PipelineConfig) -> None:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"T": "T.sff", "F": "F.sff", "B": "B.sff"}
    for key, name in paths.items():
        f = getattr(report, key)
        if f is not None and f.coeffs.shape[-1]:
            tf.save_sff(f, out / name)
    if report.Gamma is not None:
        report.Gamma.save(out / "Gamma.pchain")
        paths["Gamma"] = "Gamma.pchain"
    cfg.Q.save(out / "Q.pchain")
    paths["Q"] = "Q.pchain"
    report.artifacts = {k: str(out / v) for k, v in paths.items() if (out / v).exists()}
    (out / "config.json").write_text(json.dumps(cfg.to_json(), indent=1))
    (out / "report.json").write_text(json.dumps(report.to_json(), indent=1))


def recheck(out_dir: str | Path, tol: float = 1e-6, tol_zero: float = 1e-8) -> dict:
    """Recompute the report's claims about the final form from the saved artifacts."""
    out = Path(out_dir)
    rep = json.loads((out / "report.json").read_text())
    F = tf.load_sff(out / "F.sff")
    dn, dl = tf.harmonic_residuals(F)
    ball = rep["empty_ball"]
    h = 1.0 / np.array(F.grid_shape)
    nodes = np.argwhere(np.ones(F.grid_shape, bool))
    dv = np.abs((nodes * h) - np.array(ball["center"]) + 0.5) % 1.0 - 0.5
    inside = np.sqrt((dv ** 2).sum(axis=1)) < ball["radius"]
    inner = float(F.pointwise_norm().reshape(-1)[inside].max(initial=0.0))
    return {"is_harmonic": bool(dn <= tol and dl <= tol), "ball_clear": inner <= tol_zero,
            "radius_cells": ball["radius_cells"]}


# --------------------------------------------------------------------------
# Thom classes of subtori


@dataclass
class ThomReport:
    n: int
    axes: list  # 1-based
    codim: int
    odd_codim: bool
    isotropic: bool
    symplectic: bool
    p: int | None
    wedge_class_zero: bool | None
    omega_tau_zero: bool
    branch: str

    def to_json(self) -> dict:
        return asdict(self)


def thom_form(n: int, axes) -> ea.PointwiseForm:
    """Constant Poincaré dual of the coordinate subtorus spanned by ``axes`` (0-based)."""
    A = tuple(sorted(axes))
    J = ea.complement(n, A)
    return ea.PointwiseForm(n, {J: float(ea.merge_sign(J, A))})


def _class_is_zero(m: inv.CEModel, k: int, v: np.ndarray) -> bool:
    if k > m.N:
        return True
    if np.abs(v).max(initial=0.0) <= 1e-12:
        return True
    if k == 0:
        return False
    D = m.d(k - 1)
    return inv.rank(np.column_stack([D, v])) == inv.rank(D)


def thom_checks(n: int, axes, model: inv.CEModel | None = None) -> ThomReport:
    """Classify the Thom class of a coordinate subtorus (``axes`` 0-based)."""
    axes = sorted(int(a) for a in axes)
    N = 2 * n
    if not axes or len(set(axes)) != len(axes) or any(not 0 <= a < N for a in axes) or len(axes) >= N:
        raise DomainError(f"unsupported submanifold spec {axes}")
    m = inv.abelian(n) if model is None else model
    if m.structure or m.n != n:
        raise DomainError("Thom checks are implemented for product subtori of the flat torus only")
    tau = thom_form(n, axes)
    k = N - len(axes)
    pairs = [(2 * i, 2 * i + 1) for i in range(n)]
    in_pairs = [a in axes and b in axes for a, b in pairs]
    isotropic = not any(in_pairs)
    symplectic = all((a in axes) == (b in axes) for a, b in pairs)
    w = m.omega
    omega_tau = (w ^ tau)
    omega_tau_zero = _class_is_zero(m, k + 2, omega_tau.vector(k + 2) if k + 2 <= N else np.zeros(0))
    if isotropic and not omega_tau_zero:
        raise ConsistencyError("isotropic subtorus with [ω∧τ] ≠ 0")
    if k % 2:
        return ThomReport(n, [a + 1 for a in axes], k, True, isotropic, symplectic, None, None,
                          omega_tau_zero, "small-support")
    p = k // 2
    v = (ea.omega_power(n, n - p) ^ tau) if n - p > 0 else tau
    zero = _class_is_zero(m, 2 * n, v.vector(2 * n))
    branch = "small-support" if zero else "nowhere-vanishing"
    return ThomReport(n, [a + 1 for a in axes], k, False, isotropic, symplectic, p, zero, omega_tau_zero, branch)


__all__ = [
    "ConfigError", "PrimitivityError", "StepError", "SupportLeakError", "PipelineConfig", "PipelineReport",
    "EmptyBall", "run", "recheck", "lefschetz_decompose_B", "solve_local", "find_empty_ball",
    "subtorus_cubes", "bump_cubes", "cycle_from_spec", "check_primitive_class", "class_vector",
    "closed_battery", "field_to_chain", "thom_checks", "thom_form", "ThomReport", "write_artifacts",
]
