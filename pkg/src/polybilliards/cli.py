"""Command-line front end: ``polybilliards <command> ...``.

Exit codes: 0 when the computation completed (a nonexistent orbit is a
result, not a failure), 1 for computational errors, 2 for bad input, 3 when
``simulate`` stops at an edge or vertex.
"""
from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import sys
from pathlib import Path

import numpy as np

from .billiard import PhasePoint, TraceStatus, format_word, trace, validate_word
from .errors import GeometryError, PolyBilliardsError, PreconditionError
from .fixtures import FIXTURES, get_fixture, regular_face_basis
from .geometry import Polyhedron, dump_polyhedron, load_polyhedron
from .periodic import find_periodic
from .returnmap import FaceBasis, beam_ellipse, face_polygon, first_return_map, fixed_point, invariant_conic
from .scan import VertexRange, scan_around_regular, scan_vertex_ranges
from .stability import stability_classify

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_EDGE = 0, 1, 2, 3

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_NAMES = {"pi": math.pi}
_FUNCS = {"sqrt": math.sqrt}


class InputError(Exception):
    """Bad command-line input; reported with exit code 2."""


def _eval_number(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _eval_number(node.operand)
        return -value if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_number(node.left), _eval_number(node.right))
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        return _FUNCS[node.func.id](_eval_number(node.args[0]))
    raise InputError(f"unsupported expression: {ast.unparse(node)!r}")


def parse_vector(text: str, size: int = 3) -> np.ndarray:
    """Comma-separated numbers; each may be an arithmetic expression using sqrt and pi."""
    try:
        tree = ast.parse(f"({text},)", mode="eval").body
    except SyntaxError as exc:
        raise InputError(f"cannot parse vector {text!r}: {exc.msg}") from None
    values = [_eval_number(elt) for elt in tree.elts]
    if len(values) != size:
        raise InputError(f"expected {size} numbers, got {len(values)} in {text!r}")
    return np.array(values)


def load_poly(source: str) -> Polyhedron:
    """A JSON file path, or ``fixture:NAME`` for a bundled polyhedron."""
    if source.startswith("fixture:"):
        try:
            return get_fixture(source.split(":", 1)[1])
        except KeyError as exc:
            raise InputError(exc.args[0]) from None
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return load_polyhedron(data)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _word(poly: Polyhedron, text: str):
    return validate_word(poly, text)


# -- commands -----------------------------------------------------------------
def cmd_simulate(args) -> int:
    poly = load_poly(args.poly)
    pp = PhasePoint(args.face, parse_vector(args.point), parse_vector(args.direction))
    tr = trace(poly, pp, args.steps)
    _emit(tr.to_csv() if args.format == "csv" else tr.to_jsonl(), args.out)
    closure = float(np.linalg.norm(tr.end.point - pp.point))
    print(f"coding: {format_word(tr.full_coding)}", file=sys.stderr)
    print(f"termination: {tr.status.value}" + (f" ({tr.message})" if tr.message else ""), file=sys.stderr)
    print(f"closure: {closure:.3e}", file=sys.stderr)
    return EXIT_EDGE if tr.status is TraceStatus.HIT_EDGE else EXIT_OK


def cmd_periodic(args) -> int:
    poly = load_poly(args.poly)
    res = find_periodic(poly, _word(poly, args.word))
    _emit(_json(res.to_dict()), args.out)
    print(f"{format_word(res.word)}: {res.kind.value}" + (f" ({res.diagnostic})" if res.diagnostic else ""), file=sys.stderr)
    return EXIT_OK


def cmd_stability(args) -> int:
    poly = load_poly(args.poly)
    report = stability_classify(
        poly, _word(poly, args.word), args.samples, args.delta, args.seed, args.workers
    )
    _emit(_json(report.to_dict()), args.out)
    print(report.summary(), file=sys.stderr)
    return EXIT_OK


def cmd_scan(args) -> int:
    if args.around_regular:
        if args.vertices_range or args.base:
            raise InputError("--around-regular cannot be combined with --base/--vertices-range")
        grid = scan_around_regular(args.delta, args.resolution, args.word, args.vertex, args.workers)
    else:
        if not args.base:
            raise InputError("give --around-regular or --base POLY")
        base = load_poly(args.base)
        ranges = [VertexRange.parse(t) for t in args.vertices_range]
        grid = scan_vertex_ranges(base, ranges, args.resolution, args.word, args.workers)
    _emit(_json(grid.to_dict()) if args.format == "json" else grid.to_csv(), args.out)
    counts = ", ".join(f"{k}={v}" for k, v in sorted(grid.counts().items()))
    print(f"{len(grid.cells)} cells: {counts}", file=sys.stderr)
    return EXIT_OK


def _basis(poly: Polyhedron, face: str, text: str | None) -> FaceBasis:
    if text is None or text == "orthonormal":
        return FaceBasis.orthonormal(poly, face)
    if text == "regular-a":
        return regular_face_basis()
    v = parse_vector(text, 9)
    return FaceBasis(v[:3], v[3:6], v[6:])


def cmd_return_map(args) -> int:
    poly = load_poly(args.poly)
    word = _word(poly, args.word)
    fb = _basis(poly, word[0], args.basis)
    r = first_return_map(poly, word, fb)
    conic = invariant_conic(r)
    ellipse = beam_ellipse(r, conic, face_polygon(poly, word[0], fb))
    if args.boundary_csv:
        Path(args.boundary_csv).write_text(ellipse.boundary_csv(args.boundary_points))
    if args.format == "csv":
        _emit(ellipse.boundary_csv(args.boundary_points), args.out)
        return EXIT_OK
    out = {
        "word": format_word(word),
        "basis": {"origin": fb.origin.tolist(), "e1": fb.e1.tolist(), "e2": fb.e2.tolist()},
        "map": r.to_dict(),
        "det": r.det,
        "trace": r.trace,
        "fixed_point": fixed_point(r).tolist(),
        "ellipse": ellipse.to_dict(),
    }
    _emit(_json(out), args.out)
    return EXIT_OK


def cmd_fixtures(args) -> int:
    if args.name is None and args.out_dir is None:
        for name, (_, note) in sorted(FIXTURES.items()):
            print(f"{name}: {note}")
        return EXIT_OK
    names = [args.name] if args.name else sorted(FIXTURES)
    for name in names:
        if name not in FIXTURES:
            raise InputError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
        factory, note = FIXTURES[name]
        text = dump_polyhedron(factory(), {"note": note})
        if args.out_dir:
            Path(args.out_dir).mkdir(parents=True, exist_ok=True)
            Path(args.out_dir, f"{name}.json").write_text(text)
        else:
            sys.stdout.write(text)
    return EXIT_OK


# -- parser -------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polybilliards",
        description="Periodic billiard orbits in convex polyhedra.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    poly_help = "polyhedron JSON file, or fixture:NAME"

    p = sub.add_parser("simulate", help="trace a billiard trajectory")
    p.add_argument("poly", help=poly_help)
    p.add_argument("--face", required=True, help="start face label")
    p.add_argument("--point", required=True, help="start point x,y,z (sqrt and pi allowed)")
    p.add_argument("--direction", required=True, help="start direction x,y,z")
    p.add_argument("-n", "--steps", type=int, default=10, help="number of bounces (default 10)")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--out", help="write output here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("periodic", help="decide existence of a periodic orbit for a word")
    p.add_argument("poly", help=poly_help)
    p.add_argument("word", help="face labels, e.g. abcd or c,c'")
    p.add_argument("--out")
    p.set_defaults(func=cmd_periodic)

    p = sub.add_parser("stability", help="classify stability of a periodic word")
    p.add_argument("poly", help=poly_help)
    p.add_argument("word")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("scan", help="grid scan of orbit existence over vertex positions")
    p.add_argument("--around-regular", action="store_true", help="move one vertex of the regular tetrahedron")
    p.add_argument("--delta", type=float, default=1e-2, help="half-width for --around-regular")
    p.add_argument("--vertex", default="D", help="vertex moved by --around-regular (default D)")
    p.add_argument("--base", help=poly_help + " to scan around")
    p.add_argument(
        "--vertices-range",
        action="append",
        default=[],
        metavar="V.c=lo:hi",
        help="offset range for one vertex coordinate (repeatable)",
    )
    p.add_argument("--resolution", type=int, default=5, help="grid points per axis")
    p.add_argument("--word", default="abcd")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("return-map", help="first-return map and invariant ellipse")
    p.add_argument("poly", help=poly_help)
    p.add_argument("word")
    p.add_argument(
        "--basis",
        help="orthonormal (default), regular-a, or 9 numbers origin,e1,e2",
    )
    p.add_argument("--format", choices=("json", "csv"), default="json", help="csv emits the ellipse boundary")
    p.add_argument("--boundary-csv", help="also write ellipse boundary points to this file")
    p.add_argument("--boundary-points", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=cmd_return_map)

    p = sub.add_parser("fixtures", help="list or dump the bundled polyhedra")
    p.add_argument("name", nargs="?")
    p.add_argument("--out-dir", help="write NAME.json files here")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, PreconditionError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PolyBilliardsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
