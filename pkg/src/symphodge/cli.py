"""Command line front end.

Exit codes: 0 when every asserted property holds, 1 on an assertion failure,
2 on a usage error (bad arguments, missing or malformed config).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import invariant as inv
from . import pipeline as pl
from . import selftest
from .chains import PolyChain
from .deform import CertificationError, DegenerateError, GridSpec, deform
from .exteralg import DomainError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _flatten(obj, prefix="") -> list[tuple[str, str]]:
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out += _flatten(v, f"{prefix}{k}.")
        return out
    if isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        out = []
        for i, v in enumerate(obj):
            out += _flatten(v, f"{prefix}{i}.")
        return out
    if isinstance(obj, list):
        return [(prefix[:-1], " ".join(str(x) for x in obj))]
    return [(prefix[:-1], str(obj))]


def _render(payload: dict, fmt: str, rows: list[tuple[str, str]] | None = None) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=1, default=str) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["key", "value"])
    w.writerows(rows if rows is not None else _flatten(payload))
    return buf.getvalue()


def _emit(args, payload: dict, name: str, rows=None) -> None:
    text = _render(payload, args.format, rows)
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    if out.suffix.lower() in (".json", ".csv"):
        out.parent.mkdir(parents=True, exist_ok=True)
        target = out
    else:
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"{name}.{args.format}"
    target.write_text(text)
    print(f"wrote {target}", file=sys.stderr)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise UsageError(f"config is not valid JSON: {e}") from None


# --------------------------------------------------------------------------
# subcommands


def cmd_algebra_selftest(args) -> int:
    cfg = _load_config(args.config)
    count = int(cfg.get("count", args.count))
    tol = float(cfg.get("tol", args.tol))
    ns = tuple(cfg.get("ns", (1, 2, 3)))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    res = selftest.algebra_selftest(ns, count, seed)
    res["residuals"]["dΛ dual definitions"] = selftest.dlambda_agreement(ns, count, seed + 1)
    res["residuals"]["sl2 (pointwise)"] = selftest.pointwise_sl2(ns, count, seed + 2)
    passed = {k: v <= tol for k, v in res["residuals"].items()}
    payload = {**res, "tol": tol, "pass": passed, "ok": all(passed.values())}
    rows = [(k, f"{v:.3e}", "pass" if passed[k] else "FAIL") for k, v in res["residuals"].items()]
    _emit(args, payload, "algebra-selftest", [(k, f"{v} {p}") for k, v, p in rows])
    return EXIT_OK if payload["ok"] else EXIT_FAIL


def cmd_model(args) -> int:
    cfg = _load_config(args.config)
    name = args.name or cfg.get("name")
    if name is None and cfg.get("structure") is not None:
        m = inv.CEModel.from_json(cfg)
    elif name is None:
        raise UsageError("model needs --name or --config")
    elif name in inv.MODELS:
        m = inv.MODELS[name]()
    else:
        raise UsageError(f"unknown model {name!r}; known: {', '.join(inv.MODELS)}")
    rep = inv.report(m)
    payload = rep.to_json()
    payload["ddlambda_equal"] = [a == b == c for a, b, c in rep.ddlambda_dims]
    payload["poincare_symmetric"] = rep.betti == rep.betti[::-1]
    _emit(args, payload, f"model-{m.name}")
    return EXIT_OK if payload["poincare_symmetric"] else EXIT_FAIL


def cmd_deform(args) -> int:
    cfg = _load_config(args.config)
    chain = args.chain or cfg.get("chain")
    eps = args.eps if args.eps is not None else cfg.get("eps")
    if chain is None or eps is None:
        raise UsageError("deform needs --chain and --eps")
    if not Path(chain).is_file():
        raise UsageError(f"chain file not found: {chain}")
    T = PolyChain.load(chain)
    offset = args.offset if args.offset is not None else cfg.get("offset")
    periodic = args.periodic or bool(cfg.get("periodic", False))
    g = GridSpec(T.N, float(eps), offset, periodic=periodic)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    try:
        res = deform(T, g, seed=seed, battery=int(cfg.get("battery", args.battery)))
    except CertificationError as e:
        _emit(args, {"ok": False, "error": str(e), "witness": e.witness}, "deform")
        return EXIT_FAIL
    except DegenerateError as e:
        _emit(args, {"ok": False, "error": str(e)}, "deform")
        return EXIT_FAIL
    payload = {"ok": res.certificate["ok"], **res.to_json()}
    rows = [(f"certificate.{k}", str(v)) for k, v in res.certificate.items()]
    _emit(args, payload, "deform", rows)
    return EXIT_OK if payload["ok"] else EXIT_FAIL


def cmd_pipeline(args) -> int:
    if args.config is None:
        raise UsageError("pipeline needs --config")
    obj = _load_config(args.config)
    if args.seed is not None:
        obj["seed"] = args.seed
    if args.out is not None:
        obj["out"] = args.out
    try:
        cfg = pl.PipelineConfig.from_json(obj)
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"bad pipeline config: {e}") from None
    try:
        rep = pl.run(cfg)
    except pl.PrimitivityError as e:
        _emit_pipeline_failure(args, {"ok": False, "error": str(e), "pairing": e.pairing})
        return EXIT_FAIL
    except (pl.StepError, pl.SupportLeakError, AssertionError) as e:
        _emit_pipeline_failure(args, {"ok": False, "error": str(e)})
        return EXIT_FAIL
    payload = rep.to_json()
    if args.out is None:
        sys.stdout.write(_render(payload, args.format, rep.rows()))
    elif args.format == "csv":
        Path(args.out, "report.csv").write_text(_render(payload, "csv", rep.rows()))
    return EXIT_OK if rep.ok else EXIT_FAIL


def _emit_pipeline_failure(args, payload):
    if args.out is None:
        sys.stdout.write(_render(payload, args.format))
    else:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        Path(args.out, f"report.{args.format}").write_text(_render(payload, args.format))


def cmd_thom(args) -> int:
    cfg = _load_config(args.config)
    n = args.n if args.n is not None else cfg.get("n")
    axes = args.axes if args.axes is not None else cfg.get("axes")
    if n is None or axes is None:
        raise UsageError("thom needs --n and --axes (1-based)")
    if isinstance(axes, str):
        try:
            axes = [int(a) for a in axes.split(",") if a.strip()]
        except ValueError:
            raise UsageError(f"bad --axes {axes!r}") from None
    rep = pl.thom_checks(int(n), [a - 1 for a in axes])
    payload = rep.to_json()
    expect = cfg.get("expect")
    ok = expect is None or expect == rep.branch
    payload["ok"] = ok
    _emit(args, payload, "thom")
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="output file (.json/.csv) or directory")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    ap = argparse.ArgumentParser(prog="symphodge", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("algebra-selftest", parents=[common], help="operator identities on random forms")
    s.add_argument("--count", type=int, default=200)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_algebra_selftest)

    s = sub.add_parser("model", parents=[common], help="cohomology report of an invariant model")
    s.add_argument("--name", help=f"one of {', '.join(inv.MODELS)}")
    s.set_defaults(func=cmd_model)

    s = sub.add_parser("deform", parents=[common], help="deform a .pchain onto the ε-grid skeleton")
    s.add_argument("--chain")
    s.add_argument("--eps", type=float)
    s.add_argument("--offset", type=float, nargs="+")
    s.add_argument("--periodic", action="store_true")
    s.add_argument("--battery", type=int, default=50)
    s.set_defaults(func=cmd_deform)

    s = sub.add_parser("pipeline", parents=[common], help="primitive class to Harmonic form with a hole")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("thom", parents=[common], help="classify the Thom class of a coordinate subtorus")
    s.add_argument("--n", type=int)
    s.add_argument("--axes", help="comma-separated 1-based axes, e.g. 1,3")
    s.set_defaults(func=cmd_thom)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as e:
        print(f"assertion failed: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
