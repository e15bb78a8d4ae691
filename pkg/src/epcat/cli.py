"""``epcat`` command line: spectra, EPs, reality domains, secular polynomials.

Exit codes: 0 success, 2 bad usage, 3 numerical failure.  JSON artifacts
carry ``"schema": "epcat/1"``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import fields, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .config import Tolerances
from .ep import (
    AmbiguousClustering,
    canonical_form,
    classification_record,
    classify_point,
    find_eps,
    trace_ep_curve,
)
from .flow import BranchSet, DomainMap, MergerEvent, WOutOfRange, cheb_spectrum, domain_map, sweep
from .models import ModelFamily, get_family, list_families
from .poly import NonConvergence, NotPolynomialInParam, symbolic_char_poly

SCHEMA = "epcat/1"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

# flags whose values may legitimately start with "-"
_VALUE_FLAGS = ("--range", "--sweep", "--fix", "--at", "--w", "--blocks")


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------
# flag grammar


def _number(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}")


def parse_point(specs: Optional[Sequence[str]]) -> dict:
    """``name=value,name=value`` (flags may repeat) -> dict."""
    out: dict = {}
    for spec in specs or []:
        for item in spec.split(","):
            if not item.strip():
                continue
            name, sep, value = item.partition("=")
            if not sep or not name.strip():
                raise UsageError(f"expected name=value, got {item!r}")
            out[name.strip()] = _number(value)
    return out


def parse_sweep(spec: str) -> tuple:
    """``name=lo:hi:count`` -> (name, grid)."""
    name, sep, rest = spec.partition("=")
    parts = rest.split(":")
    if not sep or not name.strip() or len(parts) != 3:
        raise UsageError(f"expected name=lo:hi:count, got {spec!r}")
    lo, hi = _number(parts[0]), _number(parts[1])
    try:
        count = int(parts[2])
    except ValueError:
        raise UsageError(f"sweep count must be an integer, got {parts[2]!r}")
    if count < 1 or hi < lo or (count == 1 and hi != lo):
        raise UsageError(f"bad sweep {spec!r}: need lo <= hi, count >= 1 (count 1 only when lo == hi)")
    return name.strip(), np.linspace(lo, hi, count)


def parse_range(spec: str) -> tuple:
    parts = spec.split(":")
    if len(parts) != 2:
        raise UsageError(f"expected lo:hi, got {spec!r}")
    lo, hi = _number(parts[0]), _number(parts[1])
    if not lo < hi:
        raise UsageError(f"empty range {spec!r}")
    return lo, hi


def parse_blocks(spec: str) -> list:
    """``size:eta,size:eta`` with complex ``eta`` such as ``1+2j``."""
    out = []
    for item in spec.split(","):
        size, sep, eta = item.partition(":")
        try:
            s, e = int(size), complex(eta.replace(" ", "")) if sep else 0j
        except ValueError:
            raise UsageError(f"bad block {item!r}; expected size:eta")
        if s < 1:
            raise UsageError(f"block size must be >= 1, got {s}")
        out.append((s, e))
    return out


def _family(args) -> ModelFamily:
    if not args.model:
        raise UsageError("--model is required")
    blocks = parse_blocks(args.blocks) if getattr(args, "blocks", None) else None
    try:
        return get_family(args.model, args.dim, blocks)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc.args[0] if exc.args else exc))


def _tolerances(args) -> Tolerances:
    tol = Tolerances.from_env()
    overrides = {f.name: getattr(args, f"tol_{f.name}") for f in fields(Tolerances)
                 if getattr(args, f"tol_{f.name}", None) is not None}
    try:
        return replace(tol, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc))


def _check_params(family: ModelFamily, point: dict):
    try:
        family.check_point(point)
    except ValueError as exc:
        raise UsageError(str(exc))


# ----------------------------------------------------------------------
# serialisation


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _c(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def spectrum_csv(bs: BranchSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "branch_index", "re", "im", "is_real"])
    for i, x in enumerate(bs.param_grid):
        for k in range(bs.n_branches):
            z = bs.branches[k, i]
            w.writerow([repr(float(x)), k, repr(float(z.real)), repr(float(z.imag)), int(bs.reality_mask[k, i])])
    return buf.getvalue()


def read_spectrum_csv(text: str, param: str = "param") -> BranchSet:
    """Inverse of :func:`spectrum_csv` (merger events are not stored in CSV)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    grid = sorted({float(r["param"]) for r in rows})
    n = max(int(r["branch_index"]) for r in rows) + 1
    index = {x: i for i, x in enumerate(grid)}
    br = np.zeros((n, len(grid)), dtype=complex)
    mask = np.zeros((n, len(grid)), dtype=bool)
    for r in rows:
        i, k = index[float(r["param"])], int(r["branch_index"])
        br[k, i] = complex(float(r["re"]), float(r["im"]))
        mask[k, i] = r["is_real"] == "1"
    return BranchSet(param, np.array(grid), br, mask)


def spectrum_json(bs: BranchSet, family: ModelFamily, fixed: dict) -> dict:
    return {
        "schema": SCHEMA,
        "family": family.name,
        "dim": family.dim,
        "fixed": fixed,
        "param": bs.param,
        "grid": [float(x) for x in bs.param_grid],
        "branches": [[_c(z) for z in row] for row in bs.branches],
        "reality_mask": [[bool(b) for b in row] for row in bs.reality_mask],
        "merger_events": [
            {"interval": [float(e.interval[0]), float(e.interval[1])], "pair": list(e.pair), "kind": e.kind}
            for e in bs.merger_events
        ],
        "invalid": list(bs.invalid),
    }


def branchset_from_json(d: dict) -> BranchSet:
    br = np.array([[complex(z["re"], z["im"]) for z in row] for row in d["branches"]], dtype=complex)
    return BranchSet(
        d["param"],
        np.array(d["grid"], dtype=float),
        br,
        np.array(d["reality_mask"], dtype=bool),
        [MergerEvent(tuple(e["interval"]), tuple(e["pair"]), e["kind"]) for e in d["merger_events"]],
        list(d["invalid"]),
    )


def domain_csv(dm: DomainMap) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p1", "p2", "all_real"])
    for i, a in enumerate(dm.grid1):
        for j, b in enumerate(dm.grid2):
            flag = "" if not dm.valid[i, j] else int(dm.all_real[i, j])
            w.writerow([repr(float(a)), repr(float(b)), flag])
    return buf.getvalue()


def domain_json(dm: DomainMap, family: ModelFamily, fixed: dict) -> dict:
    return {
        "schema": SCHEMA,
        "family": family.name,
        "fixed": fixed,
        "params": list(dm.params),
        "grid1": [float(x) for x in dm.grid1],
        "grid2": [float(x) for x in dm.grid2],
        "all_real": [[bool(b) for b in row] for row in dm.all_real],
        "valid": [[bool(b) for b in row] for row in dm.valid],
        "boundary": [[[float(p), float(q)] for p, q in line] for line in dm.boundary],
    }


def _exact_str(c) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# ----------------------------------------------------------------------
# SVG


class _Canvas:
    W, H, M = 640, 420, 50

    def __init__(self, xr, yr):
        self.x0, self.x1 = xr if xr[1] > xr[0] else (xr[0] - 0.5, xr[0] + 0.5)
        self.y0, self.y1 = yr if yr[1] > yr[0] else (yr[0] - 0.5, yr[0] + 0.5)
        self.parts = []

    def px(self, x, y):
        u = self.M + (x - self.x0) / (self.x1 - self.x0) * (self.W - 2 * self.M)
        v = self.H - self.M - (y - self.y0) / (self.y1 - self.y0) * (self.H - 2 * self.M)
        return f"{u:.2f},{v:.2f}"

    def polyline(self, pts, style):
        if len(pts) >= 2:
            self.parts.append(f'<polyline fill="none" {style} points="{" ".join(self.px(x, y) for x, y in pts)}"/>')

    def rect(self, x, y, dx, dy, fill):
        a = self.px(x, y + dy).split(",")
        b = self.px(x + dx, y).split(",")
        w, h = float(b[0]) - float(a[0]), float(b[1]) - float(a[1])
        self.parts.append(f'<rect x="{a[0]}" y="{a[1]}" width="{w:.2f}" height="{h:.2f}" fill="{fill}"/>')

    def render(self, xlabel, ylabel, title) -> str:
        W, H, M = self.W, self.H, self.M
        head = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        ]
        axes = [
            f'<rect x="{M}" y="{M}" width="{W - 2 * M}" height="{H - 2 * M}" fill="none" stroke="black"/>',
            f'<text x="{W / 2:.0f}" y="{H - 12}" text-anchor="middle" font-size="12">{xlabel}</text>',
            f'<text x="14" y="{H / 2:.0f}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 14 {H / 2:.0f})">{ylabel}</text>',
            f'<text x="{M}" y="{H - M + 16}" font-size="10">{self.x0:.4g}</text>',
            f'<text x="{W - M}" y="{H - M + 16}" text-anchor="end" font-size="10">{self.x1:.4g}</text>',
            f'<text x="{M - 4}" y="{H - M}" text-anchor="end" font-size="10">{self.y0:.4g}</text>',
            f'<text x="{M - 4}" y="{M + 8}" text-anchor="end" font-size="10">{self.y1:.4g}</text>',
        ]
        return "\n".join(head + self.parts + axes + ["</svg>"]) + "\n"


def spectrum_svg(bs: BranchSet, title: str) -> str:
    """Real parts against the parameter; complex stretches dashed."""
    x = bs.param_grid
    re = bs.branches.real
    cv = _Canvas((float(x.min()), float(x.max())), (float(np.nanmin(re)), float(np.nanmax(re))))
    for k in range(bs.n_branches):
        start = 0
        for i in range(1, x.size + 1):
            if i == x.size or bs.reality_mask[k, i] != bs.reality_mask[k, start]:
                # segments share their end point so the curve stays connected
                end = min(i, x.size - 1)
                pts = list(zip(x[start:end + 1], re[k, start:end + 1]))
                style = 'stroke="#1f4e99" stroke-width="1.2"'
                if not bs.reality_mask[k, start]:
                    style = 'stroke="#c0392b" stroke-width="1" stroke-dasharray="4,3"'
                cv.polyline(pts, style)
                start = i
    return cv.render(bs.param, "Re E", title)


def domain_svg(dm: DomainMap, title: str) -> str:
    g1, g2 = dm.grid1, dm.grid2
    cv = _Canvas((float(g1.min()), float(g1.max())), (float(g2.min()), float(g2.max())))
    d1 = (g1[-1] - g1[0]) / max(g1.size - 1, 1) if g1.size > 1 else 1.0
    d2 = (g2[-1] - g2[0]) / max(g2.size - 1, 1) if g2.size > 1 else 1.0
    for i, a in enumerate(g1):
        for j, b in enumerate(g2):
            if not dm.valid[i, j]:
                fill = "#cccccc"
            elif dm.all_real[i, j]:
                fill = "#b7d7f0"
            else:
                continue
            cv.rect(a - d1 / 2, b - d2 / 2, d1, d2, fill)
    for line in dm.boundary:
        cv.polyline([tuple(p) for p in line], 'stroke="#c0392b" stroke-width="1.5"')
    return cv.render(dm.params[0], dm.params[1], title)


# ----------------------------------------------------------------------
# commands


def _emit(text: str, args):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need_format(args, allowed: tuple) -> str:
    fmt = args.format or allowed[0]
    if fmt not in allowed:
        raise UsageError(f"--format {fmt} not supported here; choose from {list(allowed)}")
    return fmt


def cmd_model(args) -> int:
    if args.action == "list":
        if (args.format or "text") == "json":
            _emit(_json({"schema": SCHEMA, "models": [{"name": n, "summary": s} for n, s in list_families()]}), args)
        else:
            _emit("".join(f"{n:8s} {s}\n" for n, s in list_families()), args)
        return EXIT_OK
    fam = _family(args)
    info = {
        "schema": SCHEMA,
        "name": fam.name,
        "dim": fam.dim,
        "params": list(fam.param_names),
        "polynomial_params": sorted(fam.polynomial_params),
        "exact": fam.exact_builder is not None,
        "symmetry_tags": sorted(fam.symmetry_tags),
        "description": fam.description,
    }
    _emit(_json(info), args)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    fam = _family(args)
    tol = _tolerances(args)
    fmt = _need_format(args, ("csv", "json", "svg"))
    fixed = parse_point(args.fix)
    if len(args.sweep or []) != 1:
        raise UsageError("spectrum needs exactly one --sweep name=lo:hi:count")
    name, grid = parse_sweep(args.sweep[0])
    _check_params(fam, {**fixed, name: float(grid[0])})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        bs = sweep(fam, fixed, name, grid, tol, workers=args.workers)
    if fmt == "csv":
        text = spectrum_csv(bs)
    elif fmt == "json":
        text = _json(spectrum_json(bs, fam, fixed))
    else:
        text = spectrum_svg(bs, f"{fam.name} spectrum")
    _emit(text, args)
    if bs.invalid:
        bad = ", ".join(f"{name}={float(bs.param_grid[i])!r}" for i in bs.invalid)
        print(f"epcat: eigensolver failed at {bad}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _records_doc(records: list, **extra) -> dict:
    doc = {"schema": SCHEMA, **extra, "records": [r.to_json() for r in records]}
    return doc


def cmd_ep(args) -> int:
    fam = _family(args)
    tol = _tolerances(args)
    _need_format(args, ("json",))
    if args.action == "classify":
        point = parse_point(args.at)
        _check_params(fam, point)
        rec = classification_record(fam, point, tol)
        H, s = classify_point(fam, point, tol)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cf = canonical_form(H, s, tol)
        doc = _records_doc([rec])
        doc["records"][0]["canonical_residual"] = cf.residual
        doc["records"][0]["blocks"] = [{"size": int(k), **_c(e)} for k, e in cf.blocks]
        _emit(_json(doc), args)
        return EXIT_OK

    if not args.param or not args.range:
        raise UsageError(f"ep {args.action} needs --param and --range")
    lo, hi = parse_range(args.range)
    fixed = parse_point(args.fix)

    if args.action == "find":
        _check_params(fam, {**fixed, args.param: lo})
        try:
            records = find_eps(fam, fixed, args.param, (lo, hi), tol)
        except NonConvergence as exc:
            _emit(_json({"schema": SCHEMA, "status": "partial", "error": str(exc), "records": []}), args)
            return EXIT_NUMERIC
        status = "partial" if any(r.status != "ok" for r in records) else "ok"
        _emit(_json(_records_doc(records, status=status)), args)
        return EXIT_OK if status == "ok" else EXIT_NUMERIC

    # trace
    if len(args.sweep or []) != 1:
        raise UsageError("ep trace needs exactly one --sweep other=lo:hi:count")
    other, grid = parse_sweep(args.sweep[0])
    _check_params(fam, {**fixed, args.param: lo, other: float(grid[0])})
    try:
        tr = trace_ep_curve(fam, args.param, other, grid, (lo, hi), fixed, tol, workers=args.workers)
    except NonConvergence as exc:
        _emit(_json({"schema": SCHEMA, "status": "partial", "error": str(exc), "curves": []}), args)
        return EXIT_NUMERIC
    doc = {
        "schema": SCHEMA,
        "family": fam.name,
        "fixed": fixed,
        "free_param": args.param,
        "other_param": other,
        "grid": [float(g) for g in tr.grid],
        "curves": [[[float(g), float(x)] for g, x in c] for c in tr.curves],
        "records": [[r.to_json() for r in recs] for recs in tr.points],
    }
    _emit(_json(doc), args)
    return EXIT_OK


def cmd_domain(args) -> int:
    fam = _family(args)
    tol = _tolerances(args)
    fmt = _need_format(args, ("csv", "json", "svg"))
    if len(args.sweep or []) != 2:
        raise UsageError("domain needs two --sweep flags (one per parameter)")
    (n1, g1), (n2, g2) = parse_sweep(args.sweep[0]), parse_sweep(args.sweep[1])
    if n1 == n2:
        raise UsageError("the two --sweep flags must name different parameters")
    fixed = parse_point(args.fix)
    _check_params(fam, {**fixed, n1: float(g1[0]), n2: float(g2[0])})
    dm = domain_map(fam, n1, g1, n2, g2, fixed, tol, workers=args.workers)
    if fmt == "csv":
        text = domain_csv(dm)
    elif fmt == "json":
        text = _json(domain_json(dm, fam, fixed))
    else:
        text = domain_svg(dm, f"{fam.name} real-spectrum domain")
    _emit(text, args)
    return EXIT_OK


def cmd_charpoly(args) -> int:
    fam = _family(args)
    _need_format(args, ("json",))
    if not args.free:
        raise UsageError("charpoly needs --free")
    fixed = parse_point(args.fix)
    _check_params(fam, {**fixed, args.free: 0.0})
    fixed_exact = {k: Fraction(str(v)) if isinstance(v, float) else v for k, v in fixed.items()}
    try:
        p = symbolic_char_poly(fam, fixed_exact, args.free)
    except NotPolynomialInParam as exc:
        raise UsageError(str(exc))
    table = p.table()
    if not all(isinstance(c, (int, Fraction)) for row in table for c in row):
        raise UsageError("characteristic polynomial has non-rational coefficients at this point")
    doc = {
        "schema": SCHEMA,
        "family": fam.name,
        "dim": fam.dim,
        "fixed": fixed,
        "var": "F",
        "free": args.free,
        "layout": f"coefficients[i][j] multiplies F^i {args.free}^j",
        "coefficients": [[_exact_str(c) for c in row] for row in table],
    }
    _emit(_json(doc), args)
    return EXIT_OK


def cmd_cheb(args) -> int:
    _need_format(args, ("json",))
    if args.J is None or args.w is None:
        raise UsageError("cheb needs --J and --w")
    w = _number(args.w)
    if abs(w) >= 1:
        raise UsageError(f"cheb needs |w| < 1, got {w!r}")
    try:
        cs = cheb_spectrum(args.J, w)
    except (WOutOfRange, ValueError) as exc:
        raise UsageError(str(exc))
    doc = {
        "schema": SCHEMA,
        "J": cs.J,
        "w": cs.w,
        "energies": [float(e) for e in cs.energies],
        "branch": [int(b) for b in cs.branch_of],
        "principal_branch_energies": [float(e) for e in cs.principal],
        "matching_branch": cs.matching_branch,
        "eigensolver_residual": cs.residual,
    }
    _emit(_json(doc), args)
    return EXIT_OK


# ----------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model family (see `epcat model list`)")
    common.add_argument("--dim", type=int, help="matrix dimension for latti/mytoy")
    common.add_argument("--blocks", help="jordan blocks as size:eta,size:eta")
    common.add_argument("--fix", action="append", help="fixed parameters name=value,name=value")
    common.add_argument("--format", choices=("csv", "json", "svg", "text"))
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized corpora")
    common.add_argument("--workers", type=int, default=None, help="threads for grid evaluations")
    for f in fields(Tolerances):
        common.add_argument(f"--tol-{f.name.replace('_', '-')}", dest=f"tol_{f.name}", type=float,
                            help=f"override tolerance {f.name} (default {getattr(Tolerances(), f.name)})")

    p = argparse.ArgumentParser(prog="epcat", description="Exceptional points of parametric matrix families.")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("model", parents=[common], help="list or describe model families")
    m.add_argument("action", choices=("list", "show"))
    m.set_defaults(func=cmd_model)

    s = sub.add_parser("spectrum", parents=[common], help="eigenvalue branches along a sweep")
    s.add_argument("--sweep", action="append", help="name=lo:hi:count")
    s.set_defaults(func=cmd_spectrum)

    e = sub.add_parser("ep", parents=[common], help="find, classify or trace exceptional points")
    e.add_argument("action", choices=("find", "classify", "trace"))
    e.add_argument("--param", help="free parameter")
    e.add_argument("--range", help="lo:hi for the free parameter")
    e.add_argument("--at", action="append", help="full parameter point for classify")
    e.add_argument("--sweep", action="append", help="second parameter for trace, name=lo:hi:count")
    e.set_defaults(func=cmd_ep)

    d = sub.add_parser("domain", parents=[common], help="real-spectrum domain over two parameters")
    d.add_argument("--sweep", action="append", help="name=lo:hi:count (give two)")
    d.set_defaults(func=cmd_domain)

    c = sub.add_parser("charpoly", parents=[common], help="exact secular polynomial table")
    c.add_argument("--free", help="parameter kept symbolic")
    c.set_defaults(func=cmd_charpoly)

    h = sub.add_parser("cheb", parents=[common], help="Chebyshev secular equation for the rho = 0 chain")
    h.add_argument("--J", type=int)
    h.add_argument("--w")
    h.set_defaults(func=cmd_cheb)
    return p


def _glue_negative_values(argv: list) -> list:
    """Turn ``--range -1:1`` into ``--range=-1:1`` so argparse does not see an option."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"epcat: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergence, AmbiguousClustering, np.linalg.LinAlgError) as exc:
        print(f"epcat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
