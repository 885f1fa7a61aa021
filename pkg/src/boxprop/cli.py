"""Command-line front end.

    boxprop eval    system.csp
    boxprop consist system.csp [--bc-mode functional|relational]
    boxprop solve   system.csp --epsilon 0.05 [--format json]

Exit codes: 0 success, 1 proven infeasible, 2 unreadable input or parse
error, 3 budget exceeded, 4 bad flags.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Optional, Sequence, TextIO

from .compile import compile_expression
from .consistency import BcConfig, RelationalContext, functional_bc, relational_bc
from .dsl import load_system
from .expression import ParseError, SystemSpec, eval_natural, render, rewrite_single_occurrence
from .interval import format_float
from .paving import PavingBudgetExceeded, pave
from .propagation import PropagationBudgetExceeded, PropagationStats, psi_evaluate
from .serialize import bounds, box_record, box_row, dumps

__all__ = ["run", "main", "build_parser", "EXIT_OK", "EXIT_INFEASIBLE", "EXIT_PARSE", "EXIT_BUDGET", "EXIT_USAGE"]

EXIT_OK, EXIT_INFEASIBLE, EXIT_PARSE, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError("budget must be positive")
    return n


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError("epsilon must be a positive finite number")
    return x


def _env_budget() -> Optional[int]:
    raw = os.environ.get("BOXPROP_BUDGET")
    if raw is None or raw == "":
        return None
    try:
        return _positive_int(raw)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"BOXPROP_BUDGET: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("file", help="system file")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--stats", action="store_true", help="append propagation statistics")
    common.add_argument("--hex-floats", action="store_true", help="print bounds as C99 hex floats")
    common.add_argument(
        "--no-rewrite",
        action="store_true",
        help="compile repeated variables as-is instead of splitting them into copies",
    )
    common.add_argument(
        "--budget",
        type=_positive_int,
        default=None,
        help="max activations per propagation run, and max boxes when solving "
        "(default: $BOXPROP_BUDGET)",
    )

    parser = _Parser(prog="boxprop", description="Interval propagation for nonlinear inequality systems.")
    sub = parser.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    sub.add_parser("eval", parents=[common], help="natural interval value and propagation count per inequality")
    p = sub.add_parser("consist", parents=[common], help="box-consistent domains")
    p.add_argument("--bc-mode", choices=("functional", "relational"), default="relational")
    p = sub.add_parser("solve", parents=[common], help="pave the solution set")
    p.add_argument("--bc-mode", choices=("functional", "relational"), default="relational")
    p.add_argument("--epsilon", type=_positive_float, required=True, help="boundary box width")
    return parser


# ---------------------------------------------------------------------------


class _Out:
    def __init__(self, stream: TextIO, style: str):
        self.stream = stream
        self.style = style

    def line(self, text: str = "") -> None:
        self.stream.write(text + "\n")

    def iv(self, d) -> str:
        return d.to_text(self.style)

    def num(self, x: float) -> str:
        return format_float(x, self.style)


def _stats_lines(out: _Out, stats: PropagationStats) -> None:
    out.line("[stats]")
    out.line(stats.to_text())


def _gpa_kwargs(args) -> dict:
    return {} if args.budget is None else {"max_activations": args.budget}


def _run_eval(s: SystemSpec, args, out: _Out) -> int:
    stats = PropagationStats.empty()
    rs = s if args.no_rewrite else rewrite_single_occurrence(s)
    rows = []
    infeasible = False
    for j, (g, rg) in enumerate(zip(s.inequalities, rs.inequalities)):
        natural = eval_natural(g, s.variables)
        csp = compile_expression(rg, None, dict(rs.variables), allow_repeats=args.no_rewrite)
        box, st = psi_evaluate(csp, **_gpa_kwargs(args))
        stats.merge(st)
        psi = None if box is None else box[csp.roots[0]]
        if natural.is_empty or natural.lo > 0.0:
            infeasible = True
        rows.append((j, g, natural, psi, st.total_activations, len(csp.constraints)))

    if args.format == "json":
        doc = {
            "mode": "eval",
            "domains": {n: bounds(d, out.style) for n, d in s.variables.items()},
            "expressions": [
                {
                    "index": j,
                    "expression": render(g),
                    "natural": bounds(nat, out.style),
                    "psi": None if psi is None else bounds(psi, out.style),
                    "activations": acts,
                    "constraints": ncons,
                }
                for j, g, nat, psi, acts, ncons in rows
            ],
        }
        if args.stats:
            doc["stats"] = stats.to_record()
        out.line(dumps(doc))
    else:
        for j, g, nat, psi, acts, ncons in rows:
            out.line(f"g{j}: {render(g)} <= 0")
            out.line(f"  natural     {out.iv(nat)}")
            out.line(f"  propagated  {'empty' if psi is None else out.iv(psi)}")
            out.line(f"  activations {acts} of {ncons} constraints")
        if args.stats:
            _stats_lines(out, stats)
    return EXIT_INFEASIBLE if infeasible else EXIT_OK


def _table(out: _Out, header: list[str], rows: list[list[str]]) -> None:
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    for r in [header] + rows:
        out.line("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())


def _run_consist(s: SystemSpec, args, out: _Out) -> int:
    stats = PropagationStats.empty()
    functional = functional_bc(s, s.variables, BcConfig(mode="functional"))
    ctx = RelationalContext(s, rewrite=not args.no_rewrite)
    relational = relational_bc(s, s.variables, BcConfig(), context=ctx, stats=stats, **_gpa_kwargs(args))
    chosen = relational if args.bc_mode == "relational" else functional

    def doms(box):
        return None if box is None else {n: bounds(d, out.style) for n, d in box.items()}

    if args.format == "json":
        doc = {
            "mode": "consist",
            "bc_mode": args.bc_mode,
            "feasible": chosen is not None,
            "domains": doms(chosen),
            "comparison": {"functional": doms(functional), "relational": doms(relational)},
        }
        if args.stats:
            doc["stats"] = stats.to_record()
        out.line(dumps(doc))
    else:
        out.line(f"consist ({args.bc_mode})")
        if chosen is None:
            out.line("infeasible")
        else:
            _table(out, ["variable", "domain"], [[n, out.iv(d)] for n, d in chosen.items()])
        out.line()
        cell = lambda box, n: "infeasible" if box is None else out.iv(box[n])  # noqa: E731
        _table(
            out,
            ["variable", "functional", "relational"],
            [[n, cell(functional, n), cell(relational, n)] for n in s.variables],
        )
        if args.stats:
            _stats_lines(out, stats)
    return EXIT_OK if chosen is not None else EXIT_INFEASIBLE


def _run_solve(s: SystemSpec, args, out: _Out) -> int:
    stats = PropagationStats.empty()
    cfg = BcConfig(mode=args.bc_mode, precision=args.epsilon / 16)
    records: list[dict] = []
    as_json = args.format == "json"

    def emit(status, box):
        if as_json:
            records.append(box_record(status, box, out.style))
        else:
            out.line(box_row(status, box, out.style))

    if not as_json:
        out.line(f"solve epsilon={out.num(args.epsilon)} bc={args.bc_mode}")
    kw = {} if args.budget is None else {"max_boxes": args.budget}
    complete = True
    try:
        paving = pave(s, s.variables, args.epsilon, cfg, stats=stats, on_box=emit, rewrite=not args.no_rewrite, **kw)
    except PavingBudgetExceeded as exc:
        paving, complete = exc.paving, False
    summary = {
        "inner": len(paving.inner),
        "boundary": len(paving.boundary),
        "failed": paving.failed,
        "processed": paving.processed,
        "inner_area": format_float(paving.volume("inner"), out.style),
        "boundary_area": format_float(paving.volume("boundary"), out.style),
        "complete": complete,
    }
    if as_json:
        doc = {
            "mode": "solve",
            "bc_mode": args.bc_mode,
            "epsilon": out.num(args.epsilon),
            "variables": list(paving.variables),
            "boxes": records,
            "summary": summary,
        }
        if args.stats:
            doc["stats"] = stats.to_record()
        out.line(dumps(doc))
    else:
        out.line("summary " + " ".join(f"{k}={str(v).lower() if isinstance(v, bool) else v}" for k, v in summary.items()))
        if args.stats:
            _stats_lines(out, stats)
    if not complete:
        return EXIT_BUDGET
    return EXIT_INFEASIBLE if paving.is_empty else EXIT_OK


_MODES = {"eval": _run_eval, "consist": _run_consist, "solve": _run_solve}


def run(argv: Optional[Sequence[str]] = None, stdout: TextIO = None, stderr: TextIO = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.budget is None:
            args.budget = _env_budget()
    except UsageError as exc:
        stderr.write(parser.format_usage() + str(exc) + "\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        system = load_system(args.file)
    except OSError as exc:
        stderr.write(f"boxprop: cannot read {args.file}: {exc.strerror or exc}\n")
        return EXIT_PARSE
    except ParseError as exc:
        stderr.write(f"{args.file}:{exc.line}:{exc.column}: {exc.message}\n")
        return EXIT_PARSE

    out = _Out(stdout, "hex" if args.hex_floats else "repr")
    try:
        return _MODES[args.mode](system, args, out)
    except PropagationBudgetExceeded as exc:
        stderr.write(f"boxprop: {exc}\n")
        return EXIT_BUDGET
    except ValueError as exc:
        # e.g. paving an unbounded domain
        stderr.write(f"boxprop: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
