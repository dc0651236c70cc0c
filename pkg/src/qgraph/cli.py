"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 invalid input or violated
precondition, 3 numerical failure (pole proximity, singular solve).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as qio
from .bands import band_sweep, certify_gap_near
from .dtn import NumericalError, dirichlet_spectrum_G, dtn_matrix, pole_scaling, solvable_at
from .eigensolve import ScanOptions, scan_spectrum, weyl_check
from .graph import GraphError, decorate, decorate_periodic, validate
from .reduction import reduced_spectrum_check


def fmt(x) -> str:
    return f"{x:.12g}"


def _round(obj):
    """Round every float in a JSON-able structure to 12 significant digits."""
    if isinstance(obj, float | np.floating):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else None
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, list | tuple):
        return [_round(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class RunConfig:
    command: str
    inputs: list[str]
    window: tuple[float, float] | None = None
    options: ScanOptions = field(default_factory=ScanOptions)
    pole_guard: float = 1e-6
    output: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.window is not None and not (0 < self.window[0] < self.window[1]):
            raise GraphError(f"window must satisfy 0 < a < b, got {self.window}")
        if not self.pole_guard > 0:
            raise GraphError("pole guard must be positive")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}")


def _add_common(p: argparse.ArgumentParser, formats=("csv", "json")) -> None:
    p.add_argument("-o", "--output", help="write results here instead of stdout")
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--tol-root", type=float, default=1e-8)
    p.add_argument("--tol-rank", type=float, default=1e-7)
    p.add_argument("--k-tol", type=float, default=1e-11)
    p.add_argument("--grid-factor", type=float, default=1.0, help="grid density multiplier")
    p.add_argument("--trigger", type=float, default=0.5)
    p.add_argument("--no-count-check", action="store_true", help="skip the counting-function completeness check")
    p.add_argument("--pole-guard", type=float, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qgraph", description="Spectra of metric graphs and decorated graphs")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a graph file")
    p.add_argument("graph")
    _add_common(p, ("json",))

    p = sub.add_parser("spectrum", help="eigenvalues of a finite graph in a window")
    p.add_argument("graph")
    p.add_argument("--window", type=_pair, required=True)
    _add_common(p)

    p = sub.add_parser("dtn", help="Dirichlet-to-Neumann matrix of a decoration")
    p.add_argument("decoration")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    _add_common(p, ("json",))

    p = sub.add_parser("dirichlet-spectrum", help="spectrum of a decoration with Dirichlet boundary")
    p.add_argument("decoration")
    p.add_argument("--max", dest="lambda_max", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("pole-scan", help="growth of sigma_min(Lambda) near lambda0")
    p.add_argument("decoration")
    p.add_argument("--lambda0", type=float, required=True)
    p.add_argument("--decades", type=_pair, default=(2.0, 6.0), help="j:k gives deltas 1e-j .. 1e-k")
    p.add_argument("--per-decade", type=int, default=2)
    _add_common(p)

    p = sub.add_parser("solvable", help="boundary data admitting a solution at lambda0")
    p.add_argument("decoration")
    p.add_argument("--lambda0", type=float, required=True)
    _add_common(p, ("json",))

    p = sub.add_parser("decorate", help="replace every vertex by a decoration")
    p.add_argument("graph")
    p.add_argument("decoration")
    p.add_argument("--attach", help="attachment override file")
    _add_common(p, ("json",))

    p = sub.add_parser("bands", help="Bloch band samples of a periodic graph")
    p.add_argument("graph")
    p.add_argument("--window", type=_pair, required=True)
    p.add_argument("--grid", type=int, default=17)
    _add_common(p)

    p = sub.add_parser("certify-gap", help="measure the gap around (n pi / l0)^2")
    p.add_argument("graph")
    p.add_argument("decoration")
    p.add_argument("--l0", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--grid", type=int, default=17)
    p.add_argument("--attach")
    p.add_argument("--refine", action="store_true")
    _add_common(p, ("json",))

    p = sub.add_parser("reduced-check", help="compare reduced and direct spectra")
    p.add_argument("graph")
    p.add_argument("decoration")
    p.add_argument("--window", type=_pair, required=True)
    p.add_argument("--exclusion", type=float, default=1e-4)
    p.add_argument("--attach")
    _add_common(p, ("json",))
    return parser


def _config(args) -> RunConfig:
    opts = ScanOptions(
        tol_root=args.tol_root, tol_rank=args.tol_rank, k_tol=args.k_tol,
        grid_factor=args.grid_factor, trigger=args.trigger, verify_count=not args.no_count_check,
    )
    inputs = [getattr(args, n) for n in ("graph", "decoration") if getattr(args, n, None)]
    return RunConfig(args.command, inputs, getattr(args, "window", None), opts, args.pole_guard,
                     args.output, args.format)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, float | np.floating) else x for x in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(_round(obj), indent=2) + "\n"


def _spectrum_text(result, cfg: RunConfig) -> str:
    if cfg.fmt == "json":
        return _json({
            "window": list(result.window),
            "complete": result.complete,
            "zero_mode": result.zero_mode,
            "entries": [
                {"lambda": e.lam, "multiplicity": e.multiplicity, "residual": e.residual,
                 "near_dirichlet": bool(e.near_dirichlet)}
                for e in result.entries
            ],
        })
    return _csv(["lambda", "multiplicity", "residual"],
                [(float(e.lam), e.multiplicity, float(e.residual)) for e in result.entries])


def _attach(path):
    return qio.load_attachment(path) if path else "sorted"


def run_command(args) -> str:
    cfg = _config(args)
    cmd = cfg.command
    if cmd == "validate":
        return _json(validate(qio.load_graph(args.graph)).to_dict())
    if cmd == "spectrum":
        g = qio.load_graph(args.graph)
        res = scan_spectrum(g, *cfg.window, cfg.options)
        w = weyl_check(res, g)
        if w.flagged:
            print(f"# warning: Weyl deviation {w.max_deviation:.3g} exceeds {w.bound}", file=sys.stderr)
        return _spectrum_text(res, cfg)
    if cmd == "dtn":
        m = dtn_matrix(qio.load_decoration(args.decoration), args.lam, cfg.pole_guard)
        return _json({"lambda": m.lam, "matrix": m.entries.tolist(), "condition_estimate": m.condition_estimate})
    if cmd == "dirichlet-spectrum":
        res = dirichlet_spectrum_G(qio.load_decoration(args.decoration), args.lambda_max, cfg.options)
        return _spectrum_text(res, cfg)
    if cmd == "pole-scan":
        j, k = args.decades
        if not 0 <= j < k:
            raise GraphError("--decades j:k needs 0 <= j < k")
        deltas = np.logspace(-j, -k, int(round((k - j) * args.per_decade)) + 1)
        rep = pole_scaling(qio.load_decoration(args.decoration), args.lambda0, deltas)
        print(f"# slope={fmt(rep.fitted_slope)} C={fmt(rep.fitted_C)}", file=sys.stderr)
        if cfg.fmt == "json":
            return _json({"lambda0": rep.lambda0, "fitted_slope": rep.fitted_slope, "fitted_C": rep.fitted_C,
                          "samples": [list(s) for s in rep.samples], "skipped": [d for d, _ in rep.skipped]})
        return _csv(["delta", "sigma_min"], [(float(d), float(s)) for d, s in rep.samples])
    if cmd == "solvable":
        basis = solvable_at(qio.load_decoration(args.decoration), args.lambda0)
        return _json({"lambda0": args.lambda0, "dimension": int(basis.shape[1]),
                      "basis": np.real_if_close(basis.T).tolist()})
    if cmd == "decorate":
        g = qio.load_graph(args.graph)
        dec = qio.load_decoration(args.decoration)
        fn = decorate_periodic if g.period_rank > 0 else decorate
        # graph files keep full precision so the result reproduces bit-for-bit
        return json.dumps(qio.graph_to_dict(fn(g, dec, _attach(args.attach))), indent=2) + "\n"
    if cmd == "bands":
        g = qio.load_graph(args.graph)
        sweep = band_sweep(g, *cfg.window, args.grid, cfg.options)
        header = [f"theta_{i + 1}" for i in range(g.period_rank)] + ["lambda"]
        if cfg.fmt == "json":
            return _json({"header": header, "rows": [list(r) for r in sweep.rows()]})
        return _csv(header, [tuple(float(x) for x in r) for r in sweep.rows()])
    if cmd == "certify-gap":
        rep = certify_gap_near(qio.load_graph(args.graph), qio.load_decoration(args.decoration),
                               _attach(args.attach), args.l0, args.n, args.grid, cfg.options, refine=args.refine)
        return _json(rep.to_dict())
    if cmd == "reduced-check":
        rep = reduced_spectrum_check(qio.load_graph(args.graph), qio.load_decoration(args.decoration),
                                     _attach(args.attach), *cfg.window, args.exclusion, cfg.options)
        return _json(rep.to_dict())
    raise GraphError(f"unknown command {cmd}")  # pragma: no cover


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = run_command(args)
    except (GraphError, FileNotFoundError) as exc:
        print(f"qgraph: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"qgraph: numerical failure: {exc}", file=sys.stderr)
        return 3
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def run(argv=None) -> int:
    """Entry point returning the exit code; argparse usage errors map to 1."""
    try:
        return main(argv)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
