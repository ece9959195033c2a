"""Command-line front end: ``wellround {reduce,kan,certify,blc-check,count,version}``.

Reports are JSON documents with sorted keys; each embeds the parsed
configuration, the tool version and the seed.  Exit codes: 0 success,
2 bad input, 3 numeric failure, 4 scale limit.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .calculus import (
    DiskFibers,
    blc_check,
    disk_family,
    family_certificate,
    fibered_oracle,
)
from .certifier import (
    DEFAULT_SEED,
    ball,
    box,
    certify,
    disk,
    empty,
    ensure_window,
    interval,
    kan_box,
    polygon,
    square,
    whole,
)
from .counting import counting_report
from .errors import InputError, ParameterOutOfRange, WellRoundError
from .groups import builtin_group
from .linalg import kan_decompose, read_matrix
from .reduction import (
    boundary_flags,
    canonicalize,
    is_in_fundamental_domain,
    is_in_reduced_siegel_set,
    reduce_basis,
    shape_representative,
)


def _clean(x):
    """Convert a result tree into JSON-safe plain values."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x.numerator)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return x


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ParameterOutOfRange(f"bad number list {text!r}") from exc


def _threads(arg) -> int:
    env = os.environ.get("WELLROUND_THREADS")
    if env:
        return max(1, int(env))
    if arg:
        return max(1, int(arg))
    return os.cpu_count() or 1


# -- set and family documents -------------------------------------------------------------------


def set_from_doc(doc: dict, group):
    kind = doc.get("kind")
    if kind in ("ball", "disk"):
        return ball(float(doc["radius"]), doc.get("center"), group)
    if kind == "box":
        return box(doc["lows"], doc["highs"], group)
    if kind == "square":
        return square(float(doc["side"]), doc.get("center", (0.0, 0.0)), group)
    if kind == "interval":
        return interval(float(doc["lo"]), float(doc["hi"]), group)
    if kind == "polygon":
        return polygon(doc["vertices"], group)
    if kind == "kanbox":
        return kan_box(doc.get("t", (-0.5, 0.5)), doc.get("x", (-0.5, 0.5)), doc.get("theta", (0.0, 2 * math.pi)), group)
    if kind == "empty":
        return empty(group)
    if kind == "whole":
        return whole(group)
    raise ParameterOutOfRange(f"unknown set kind {kind!r}")


def parse_set(spec: str, group):
    """``disk:1``, ``square:2``, ``box:x0,y0,x1,y1``, ``interval:a,b``, ``polygon:x1,y1,...``, ``kanbox:t0,t1,x0,x1``, ``empty``, ``whole`` or a JSON file."""
    path = Path(spec)
    if spec.endswith(".json") or path.is_file():
        return set_from_doc(json.loads(path.read_text()), group)
    name, _, rest = spec.partition(":")
    vals = _floats(rest) if rest else []
    n = group.dim
    if name in ("disk", "ball"):
        center = vals[1:] if len(vals) > 1 else None
        return ball(vals[0] if vals else 1.0, center, group)
    if name == "square":
        return square(vals[0] if vals else 2.0, group=group)
    if name == "box":
        if len(vals) != 2 * n:
            raise ParameterOutOfRange(f"box needs {2 * n} numbers")
        return box(vals[:n], vals[n:], group)
    if name == "interval":
        return interval(vals[0], vals[1], group)
    if name == "polygon":
        return polygon(np.reshape(vals, (-1, 2)), group)
    if name == "kanbox":
        return kan_box(tuple(vals[0:2]) or (-0.5, 0.5), tuple(vals[2:4]) or (-0.5, 0.5), group=group)
    if name in ("empty", "whole"):
        return set_from_doc({"kind": name}, group)
    raise ParameterOutOfRange(f"unknown set {spec!r}")


def family_from_doc(doc: dict):
    """BLC family document: base interval, disk fibers and the family parameters."""
    try:
        base = doc["base"]
        fib = doc["fiber"]
        kind = fib.get("kind", "radius-function")
        fiber = DiskFibers(
            float(fib.get("r0", 1.0)),
            float(fib.get("amp", 0.0)),
            float(fib.get("freq", 1.0)),
            float(fib.get("phase", 0.0)),
            tuple(float(v) for v in fib.get("drift", (0.0, 0.0))),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterOutOfRange(f"malformed family document: {exc}") from exc
    if kind not in ("constant", "radius-function", "affine"):
        raise ParameterOutOfRange(f"unknown fiber kind {kind!r}")
    if fiber.kind != kind and not (kind == "radius-function" and fiber.kind == "constant"):
        raise ParameterOutOfRange(f"fiber parameters describe a {fiber.kind} family, not {kind}")
    return disk_family(
        float(base["lo"]),
        float(base["hi"]),
        fiber,
        C_D=doc.get("C_D", 16),
        V_min=doc.get("V_min"),
        R=doc.get("R"),
        c=doc.get("c", 1),
    )


# -- commands ----------------------------------------------------------------------------------------


def cmd_reduce(args):
    m = read_matrix(args.input)
    rb = reduce_basis(m)
    canon = canonicalize(rb)
    siegel = is_in_reduced_siegel_set(canon.reduced)
    return {
        "input": m,
        "reduced": rb.reduced,
        "transform": [[int(v) for v in row] for row in rb.transform],
        "a": rb.a,
        "n": rb.n_coeffs,
        "phi": rb.phi,
        "canonical": {
            "reduced": canon.reduced,
            "transform": [[int(v) for v in row] for row in canon.transform],
            "n": canon.n_coeffs,
            "phi": canon.phi,
        },
        "shape_representative": shape_representative(rb),
        "member_of_F": is_in_fundamental_domain(canon.reduced),
        "siegel": {
            "member": siegel.member,
            "violations": [[list(i), lhs, rhs] for i, lhs, rhs in siegel.violations],
            "candidate_vectors_tested": siegel.candidate_vectors_tested,
        },
        "boundary_flags": [list(f) for f in boundary_flags(canon)],
    }


def cmd_kan(args):
    m = read_matrix(args.input)
    d = kan_decompose(m)
    err = float(np.max(np.abs(d.reconstruct() - m)))
    return {"input": m, "k": d.k, "a": d.a, "n": d.n, "reconstruction_error": err, "det_k": float(np.linalg.det(d.k))}


def cmd_certify(args, threads):
    eps_grid = _floats(args.eps_grid)
    if args.family:
        fam = family_from_doc(json.loads(Path(args.family).read_text()))
        oracle = fibered_oracle(fam)
    else:
        if not args.set:
            raise ParameterOutOfRange("certify needs --set or --family")
        oracle = ensure_window(parse_set(args.set, builtin_group(args.group)), max(eps_grid))
    rep = certify(
        oracle,
        eps_grid,
        n_points=args.points,
        n_pert=args.perts,
        seed=args.seed,
        mode=args.mode,
        fit_method=args.fit,
        threads=threads,
    )
    out = rep.to_doc()
    if args.family:
        cert = family_certificate(fam)
        out["formula_certificate"] = cert.to_doc()
        out["dominated"] = bool(rep.max_slope_C <= float(cert.C))
    out["provenance"] = {"fitted_C": "monte_carlo", "formula_certificate": "closed_form"}
    if args.csv:
        Path(args.csv).write_text(rep.to_csv())
    return out


def cmd_blc(args):
    fam = family_from_doc(json.loads(Path(args.family).read_text()))
    rep = blc_check(fam, _floats(args.eps_grid), n_samples=args.samples, seed=args.seed)
    out = rep.to_doc()
    out["family"] = fam.to_doc()
    out["formula_certificate"] = family_certificate(fam).to_doc()
    return out


def cmd_count(args):
    body = None
    if args.kind == "integer_points":
        body = parse_set(args.body, builtin_group(args.group))
    rep = counting_report(args.kind, _floats(args.T_grid), args.reference, body=body, seed=args.seed)
    if args.out:
        Path(args.out).write_text(rep.to_csv())
    return rep.to_doc()


# -- parser ---------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wellround", description="Well-roundedness certificates and reduction theory.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="write the JSON report here (default: stdout)"):
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out", default=None, help=out_help)

    sp = sub.add_parser("reduce", help="reduce a lattice basis (columns) and place it in the fundamental domain")
    sp.add_argument("--in", dest="input", required=True)
    common(sp)

    sp = sub.add_parser("kan", help="KAN (Iwasawa) factorization of a square matrix")
    sp.add_argument("--in", dest="input", required=True)
    common(sp)

    sp = sub.add_parser("certify", help="estimate fattened/eroded volumes and fit the Lipschitz constant")
    sp.add_argument("--group", default="R2")
    sp.add_argument("--set", default=None)
    sp.add_argument("--family", default=None, help="BLC family document (fibered set in R1xR2)")
    sp.add_argument("--eps-grid", default="0.01,0.02,0.05")
    sp.add_argument("--points", type=int, default=200_000)
    sp.add_argument("--perts", type=int, default=32)
    sp.add_argument("--mode", choices=("auto", "exact", "sampled"), default="auto")
    sp.add_argument("--fit", choices=("zero_limit", "max_slope"), default="zero_limit")
    sp.add_argument("--csv", default=None, help="plot-ready CSV (eps, ratio, stderr)")
    common(sp)

    sp = sub.add_parser("blc-check", help="check the four BLC conditions of a fiber family")
    sp.add_argument("--family", required=True)
    sp.add_argument("--eps-grid", default="0.01,0.05")
    sp.add_argument("--samples", type=int, default=2000)
    common(sp)

    sp = sub.add_parser("count", help="lattice-point counts against reference volumes")
    sp.add_argument("--kind", choices=("integer_points", "sl2z_ball"), required=True)
    sp.add_argument("--T-grid", dest="T_grid", required=True)
    sp.add_argument("--reference", choices=("analytic", "monte_carlo_volume"), default="analytic")
    sp.add_argument("--body", default="disk:1")
    sp.add_argument("--group", default="R2")
    common(sp, out_help="write the CSV table here (T, count, volume, ratio, doubling)")

    sub.add_parser("version", help="print the tool version")
    return p


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("threads",)}
    return _clean(cfg)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "version":
        sys.stdout.write(json.dumps({"version": __version__}, sort_keys=True) + "\n")
        return 0
    threads = _threads(args.threads)
    try:
        if args.command == "reduce":
            result = cmd_reduce(args)
        elif args.command == "kan":
            result = cmd_kan(args)
        elif args.command == "certify":
            result = cmd_certify(args, threads)
        elif args.command == "blc-check":
            result = cmd_blc(args)
        else:
            result = cmd_count(args)
    except WellRoundError as exc:
        return _fail(exc.exit_code, type(exc).__name__, str(exc))
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        return _fail(InputError.exit_code, type(exc).__name__, str(exc))
    doc = {"command": args.command, "config": _config(args), "version": __version__, "seed": args.seed, "result": result}
    text = json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"
    if args.out and args.command != "count":
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _fail(code: int, name: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": name, "message": message, "exit_code": code}, sort_keys=True) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
