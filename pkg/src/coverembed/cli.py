"""Command-line front end.

Exit codes: 0 success, 1 unreadable or malformed input, 2 contract violation
(ground mismatch, non-refinement, refiner misbehaviour), 3 pipeline failure,
4 failed certificate or bound.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction

from . import __version__
from .complexes import SHIPPED
from .covers import (
    CoverError,
    CubeCoverSpec,
    cube_cover,
    cube_set_diameters,
    dimension_upper_bound,
    dump_cover,
    lebesgue_number,
    load_cover,
    merge_refinements,
    order,
    order_in,
    refines,
    staged_cover,
    star_cover,
    star_refiner,
)
from .embed import PerturbationError, embed_iterative, pl_embed, to_obj, to_svg
from .exact import decimal_fraction
from .geometry import GeneralPositionError
from .space import build_exhaustion, load_complex, load_coords, realize_metric, sup_metric

EXIT_OK, EXIT_INPUT, EXIT_CONTRACT, EXIT_PIPELINE, EXIT_FAILED = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc


def _cover(path):
    obj = _read_json(path)
    try:
        return load_cover(obj)
    except ValueError as exc:
        if isinstance(exc, CoverError):
            raise
        raise InputError(f"{path}: {exc}") from exc


def _ids(path):
    obj = _read_json(path)
    if not isinstance(obj, list):
        raise InputError(f"{path}: expected a JSON list of ids")
    return [tuple(v) if isinstance(v, list) else v for v in obj]


def _complex(spec):
    """A complex JSON path, or the name of a shipped complex."""
    if not os.path.exists(spec) and spec in SHIPPED:
        return SHIPPED[spec]()
    obj = _read_json(spec)
    try:
        return load_complex(obj)
    except ValueError as exc:
        raise InputError(f"{spec}: {exc}") from exc


def _coords(path):
    try:
        return load_coords(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _exact_coords(path):
    out = {}
    try:
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].startswith("#"):
                    continue
                try:
                    vals = [Fraction(v.strip()) for v in row[1:]]
                except ValueError:
                    if not out:
                        continue
                    raise
                key = row[0].strip()
                out[int(key) if key.lstrip("-").isdigit() else key] = vals
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return out


def _num(x):
    if isinstance(x, Fraction):
        return {"value": float(x), "exact": str(x)}
    return x


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=2) + "\n"
    sys.stdout.write(text)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)


def _config(args, **extra) -> dict:
    keys = ["seed", "exact", "mesh", "stages", "tau"]
    cfg = {"command": " ".join(args.command_path)}
    cfg.update({k: getattr(args, k) for k in keys if hasattr(args, k)})
    cfg.update(extra)
    return cfg


# cover ----------------------------------------------------------------------


def _lebesgue_exact(cover, pts) -> Fraction:
    ids = list(pts)
    if frozenset(ids) != cover.ground:
        raise CoverError("cover ground does not match the space")

    def d(a, b):
        return max((abs(x - y) for x, y in zip(pts[a], pts[b])), default=Fraction(0))

    diam = max((d(a, b) for a in ids for b in ids), default=Fraction(0))
    best = None
    for x in ids:
        reach = Fraction(0)
        for s in cover.sets:
            if x in s:
                outside = [d(x, y) for y in ids if y not in s]
                reach = max(reach, min(outside) if outside else diam + 1)
        best = reach if best is None else min(best, reach)
    return best


def cmd_cover(args) -> int:
    op = args.op
    tol = {"arithmetic": "exact set combinatorics"}
    if op == "order":
        cov = _cover(args.cover)
        if args.region:
            region = _ids(args.region)
            val = order_in(cov, region)
        else:
            val = order(cov)
        counts = cov.counts()
        witness = None
        if val is not None:
            pts = [p for p in (region if args.region else cov.ground) if counts[p] == val + 1]
            witness = sorted(pts, key=str)[0]
            witness = list(witness) if isinstance(witness, tuple) else witness
        result = {"order": val, "witness_point": witness, "sets": len(cov.sets)}
    elif op == "refines":
        v, u = _cover(args.cover), _cover(args.of)
        ref = refines(v, u)
        result = {
            "refines": ref.ok,
            "witness": {lab: (u.labels[w] if w is not None else None) for lab, w in zip(v.labels, ref.witness)},
        }
    elif op == "lebesgue":
        cov = _cover(args.cover)
        if args.exact:
            lam = _lebesgue_exact(cov, _exact_coords(args.space))
            tol = {"arithmetic": "exact rationals from decimal coordinates"}
        else:
            pts = _coords(args.space)
            ids = sorted(pts, key=str)
            lam = lebesgue_number(cov, sup_metric([pts[i] for i in ids], ids))
            tol = {"arithmetic": "float64 sup-norm distances"}
        result = {"lebesgue_number": _num(lam)}
    elif op == "cube":
        box = [tuple(args.box)] * args.n
        spec = CubeCoverSpec(args.n, args.lam, box, args.pitch)
        cov = cube_cover(spec)
        diams = cube_set_diameters(spec, cov)
        bound = decimal_fraction(args.lam) / 2
        result = {
            "n": args.n,
            "lambda": args.lam,
            "box": list(args.box),
            "pitch": args.pitch,
            "grid_points": len(cov.ground),
            "sets": len(cov.sets),
            "order": order(cov),
            "max_diameter": _num(max(diams)),
            "diameter_bound": _num(bound),
            "diameters_within_bound": max(diams) <= bound,
            "set_diameters": {lab: str(dm) for lab, dm in zip(cov.labels, diams)} if args.verbose else None,
        }
        tol = {"arithmetic": "exact rationals on the decimal grid"}
    elif op == "merge":
        a1, a2 = _cover(args.a1), _cover(args.a2)
        x1, x2 = _ids(args.x1), _ids(args.x2)
        merged = merge_refinements(a1, a2, x1, x2)
        result = {
            "order": order(merged),
            "order_in_a1_x1": order_in(a1, x1),
            "order_in_a2_x2": order_in(a2, x2),
            "refines_a1": refines(merged, a1).ok,
            "cover": json.loads(dump_cover(merged)),
        }
    elif op == "staged":
        cx = _complex(args.complex)
        samples, space = realize_metric(cx, mesh=args.mesh)
        ex = build_exhaustion(space, args.stages)
        u = star_cover(samples, 0)
        gaps = []
        for i in range(1, len(ex)):
            inner, outer = ex.stage(i - 1), ex.ground - ex.stage(i)
            if inner and outer:
                gaps.append(float(space.dist[space.index(inner)][:, space.index(outer)].min()))
        scale = min(gaps, default=math.inf)
        d = cx.n if args.d is None else args.d
        v = staged_cover(u, ex, star_refiner(samples, space, scale=scale), d)
        result = {
            "d": d,
            "order": order(v),
            "refines_input": refines(v, u).ok,
            "sets": len(v.sets),
            "stage_sizes": [len(s) for s in ex.stages],
            "refiner_scale": scale,
        }
        tol = {"arithmetic": "exact set combinatorics; float64 sup-norm diameters"}
    else:  # pragma: no cover - argparse restricts choices
        raise InputError(f"unknown cover op {op}")
    _emit({"config": _config(args), "tolerances": tol, "result": result}, args)
    return EXIT_OK


# embed / dim ------------------------------------------------------------------


def cmd_embed(args) -> int:
    cx = _complex(args.complex)
    method = args.method or ("iterative" if args.stages else "pl")
    coords = _coords(args.coords) if args.coords else None
    samples, space = realize_metric(cx, coords, mesh=args.mesh)
    if method == "pl":
        m, cert = pl_embed(cx, seed=args.seed, N=args.force_dim, samples=samples, space=space)
    else:
        if args.force_dim:
            raise InputError("--force-dim applies to --method pl only")
        m, cert = embed_iterative(cx, samples, space, K=args.stages or 6, seed=args.seed, tau=args.tau)
    report = {
        "config": _config(args, method=method, force_dim=args.force_dim, samples=len(samples)),
        "tolerances": {
            "simplex_checks": "exact rationals" if method == "pl" else None,
            "equal_image_tau": args.tau if method == "iterative" else None,
            "margin": "float64 sup norm",
        },
        "certificate": cert.to_json(),
    }
    _emit(report, args)
    if args.map:
        with open(args.map, "w") as fh:
            fh.write(json.dumps(m.to_json(), indent=1) + "\n")
    if args.obj:
        with open(args.obj, "w") as fh:
            fh.write(to_obj(m))
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(to_svg(m))
    return EXIT_OK if cert.passed else EXIT_FAILED


def cmd_dim(args) -> int:
    cx = _complex(args.complex)
    samples, _ = realize_metric(cx, mesh=args.mesh)
    bound = dimension_upper_bound(cx, samples, args.rounds)
    result = {"n": cx.n, "rounds": args.rounds, "samples": len(samples), "dimension_upper_bound": bound, "within_n": bound <= cx.n}
    _emit({"config": _config(args, rounds=args.rounds), "tolerances": {"arithmetic": "exact barycentric subdivision"}, "result": result}, args)
    return EXIT_OK if bound <= cx.n else EXIT_FAILED


# parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coverembed", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--exact", action="store_true", help="exact rational arithmetic where optional")
        sp.add_argument("--out", help="also write the JSON report here")

    cover = sub.add_parser("cover", help="cover combinatorics")
    csub = cover.add_subparsers(dest="op", required=True)
    c = csub.add_parser("order")
    c.add_argument("--cover", required=True)
    c.add_argument("--region", help="JSON list of ids; report order_in instead")
    c = csub.add_parser("refines")
    c.add_argument("--cover", required=True)
    c.add_argument("--of", required=True)
    c = csub.add_parser("lebesgue")
    c.add_argument("--cover", required=True)
    c.add_argument("--space", required=True, help="coordinates CSV (id, x1, ..., xm), sup metric")
    c = csub.add_parser("cube")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--lambda", dest="lam", type=float, default=3.0)
    c.add_argument("--box", type=float, nargs=2, default=[-2.0, 2.0], metavar=("LO", "HI"))
    c.add_argument("--pitch", type=float, default=0.1)
    c.add_argument("--verbose", action="store_true", help="list every set diameter")
    c = csub.add_parser("merge")
    for name in ("a1", "a2", "x1", "x2"):
        c.add_argument(f"--{name}", required=True)
    c = csub.add_parser("staged")
    c.add_argument("--complex", required=True)
    c.add_argument("--mesh", type=float, default=0.25)
    c.add_argument("--stages", type=int, default=3)
    c.add_argument("--d", type=int, default=None, help="target order (default: complex dimension)")
    for sp in csub.choices.values():
        common(sp)

    embed = sub.add_parser("embed", help="embeddings into R^(2n+1)")
    esub = embed.add_subparsers(dest="op", required=True)
    e = esub.add_parser("run")
    e.add_argument("--complex", required=True, help="complex JSON or a shipped name: " + ", ".join(SHIPPED))
    e.add_argument("--method", choices=["pl", "iterative"], help="default: iterative when --stages is given, else pl")
    e.add_argument("--stages", type=int, default=None)
    e.add_argument("--mesh", type=float, default=0.25)
    e.add_argument("--tau", type=float, default=1e-9)
    e.add_argument("--coords", help="reference coordinates CSV for sampling")
    e.add_argument("--force-dim", type=int, default=None)
    e.add_argument("--map", help="write the final map JSON here")
    e.add_argument("--obj", help="write an OBJ export here")
    e.add_argument("--svg", help="write an SVG export here")
    common(e)

    d = sub.add_parser("dim", help="covering-dimension upper bound from star covers")
    d.add_argument("--complex", required=True)
    d.add_argument("--rounds", type=int, default=2)
    d.add_argument("--mesh", type=float, default=0.1)
    common(d)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.command_path = [args.command] + ([args.op] if getattr(args, "op", None) else [])
    handler = {"cover": cmd_cover, "embed": cmd_embed, "dim": cmd_dim}[args.command]
    try:
        return handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CoverError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (PerturbationError, GeneralPositionError) as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
