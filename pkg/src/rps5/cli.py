"""Command-line interface.

Every command writes CSV (or a text report) whose first line is a comment
recording the package version, the parsed flags and the seed, so repeated
runs with identical flags are byte-identical.  Exit codes: 0 success,
1 usage or validation problem, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import io
import sys

import numpy as np

from . import __version__
from .errors import Rps5Error
from .integrate import IntegratorOptions, default_start, integrate, to_log, write_trajectory_csv
from .itinerary import detect_root, extract_itinerary, word_of, write_itinerary_csv
from .model import Params, axis_equilibrium, derived_quantities, sufficient_condition, xi_q, xi_q_eigenvalues, xi_q_stability, xi_t
from .errors import NoInteriorEquilibrium
from .stability import sequence_stability, write_report_csv
from .sweep import (
    GridSpec,
    TongueFamily,
    classify_by_simulation,
    enumerate_tongues,
    grid_sweep,
    trace_boundary,
    write_boundary_csv,
    write_classification_csv,
    write_grid_csv,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def expand_sequence(text: str) -> str:
    """Expand block shorthand (T=AAB, D=BB, Q=ABBB, with repeat counts) to letters.

    Plain A/B strings pass through: ``T2D`` -> AABAABBB, ``AABBB`` -> itself.
    """
    blocks = {"A": "A", "B": "B", "T": "AAB", "D": "BB", "Q": "ABBB"}
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch not in blocks:
            raise ValueError(f"cannot parse sequence {text!r}: unknown symbol {ch!r}")
        i += 1
        count = 0
        while i < len(text) and text[i].isdigit():
            count = 10 * count + int(text[i])
            i += 1
        out.append(blocks[ch] * max(count, 1))
    return "".join(out)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ca", type=float, default=1.2, help="competition rate c_A")
    p.add_argument("--cb", type=float, default=1.0, help="competition rate c_B")
    p.add_argument("--ea", type=float, default=1.0, help="expansion rate e_A")
    p.add_argument("--eb", type=float, default=0.8, help="expansion rate e_B")
    p.add_argument("--seed", type=int, default=42, help="seed for any pseudo-random choice")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rps5", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rps5 {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("equilibria", help="equilibria, eigenvalues and closed-form quantities")
    _add_common(p)

    p = sub.add_parser("simulate", help="integrate and write a trajectory CSV")
    _add_common(p)
    p.add_argument("--tmax", type=float, default=1000.0)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--coords", choices=("linear", "log"), default="log")
    p.add_argument("--floor", type=float, default=-700.0, help="log-coordinate clamp")
    p.add_argument("--stride", type=int, default=1, help="record every n-th accepted step")

    p = sub.add_parser("itinerary", help="simulate, extract epochs and detect the root")
    _add_common(p)
    p.add_argument("--tmax", type=float, default=5000.0)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--floor", type=float, default=-500.0)
    p.add_argument("--h", type=float, default=0.3, help="proximity radius for visits")

    p = sub.add_parser("fas", help="stability report for one root sequence")
    _add_common(p)
    p.add_argument("--seq", required=True, help="letters (AABBB) or blocks (T2D)")

    p = sub.add_parser("sweep", help="stability scalar over a parameter grid")
    _add_common(p)
    p.add_argument("--seq", required=True, nargs="+", help="sequences to sweep")
    p.add_argument(
        "--grid",
        default="0.25:2.5:100,0.25:2.5:100",
        help="cA_min:cA_max:n,cB_min:cB_max:n",
    )
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("trace", help="trace one stability boundary")
    _add_common(p)
    p.add_argument("--seq", required=True)
    p.add_argument("--start", required=True, help="cA,cB near the boundary")
    p.add_argument("--step", type=float, default=0.005)
    p.add_argument(
        "--grid",
        default="0.05:3.0:0,0.05:3.0:0",
        help="tracing domain cA_lo:cA_hi:_,cB_lo:cB_hi:_ (counts ignored)",
    )

    p = sub.add_parser("tongues", help="enumerate candidate tongue sequences")
    _add_common(p)
    p.add_argument("--components", default="TDQ", help="subset of T, D, Q")
    p.add_argument("--max-length", type=int, default=9)

    p = sub.add_parser("classify", help="classify behaviour by direct simulation")
    _add_common(p)
    p.add_argument("--budget", type=int, default=200, help="itinerary letter budget")
    p.add_argument("--h", type=float, default=0.3)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--floor", type=float, default=-500.0)
    return parser


def _header(args: argparse.Namespace) -> str:
    skip = {"out", "command", "func"}
    flags = " ".join(
        f"{k}={v}" for k, v in sorted(vars(args).items()) if k not in skip and v is not None
    )
    return f"# rps5 v{__version__} cmd={args.command} {flags}\n"


def _params(args: argparse.Namespace) -> Params:
    return Params(args.ca, args.cb, args.ea, args.eb)


def _run_equilibria(args, out: io.TextIOBase) -> None:
    p = _params(args)
    out.write("single-species equilibria (eigenvalue in each species direction):\n")
    eq = axis_equilibrium(p, 1)
    vals = ", ".join(f"{v.real:.6g}" for v in eq.eigenvalues)
    out.write(f"  species 1 at density 1: eigenvalues ({vals}); copies 2..5 by symmetry\n")
    try:
        q = xi_q(p)
        spec = xi_q_eigenvalues(p)
        out.write(f"interior equilibrium: x = {q.coords[0]:.12g} (all species)\n")
        for j, mu in enumerate(spec.mu, start=1):
            tag = "  (radial)" if j - 1 == spec.radial_index else ""
            out.write(f"  mu_{j} = {mu.real:.9g} {mu.imag:+.9g}i{tag}\n")
        out.write(f"  verdict: {xi_q_stability(p)}\n")
    except NoInteriorEquilibrium as exc:
        out.write(f"interior equilibrium: none ({exc})\n")
    dq = derived_quantities(p)
    try:
        xt = xi_t(p)
        coords = ", ".join(f"{v:.9g}" for v in xt.coords[:3])
        out.write(f"three-species equilibrium: ({coords}, 0, 0)\n")
        dtq = "undefined (lambda_5 = 0)" if dq.delta_tq is None else f"{dq.delta_tq:.9g}"
        out.write(
            f"  lambda_4 = {dq.lambda_4:.9g}, lambda_5 = {dq.lambda_5:.9g}, "
            f"delta_TQ = {dtq}\n"
        )
    except NoInteriorEquilibrium as exc:
        out.write(f"three-species equilibrium: none ({exc})\n")
    note = " (boundary)" if abs(dq.delta_t - 1.0) <= 1e-12 else ""
    out.write(f"delta_T = {dq.delta_t:.9g}{note}\n")
    out.write(f"nu_4 = {dq.nu_4:.9g}, nu_5 = {dq.nu_5:.9g}\n")
    out.write(f"network sufficient condition min(c)>max(e): {sufficient_condition(p)}\n")


def _run_simulate(args, out: io.TextIOBase) -> None:
    p = _params(args)
    opts = IntegratorOptions(
        rel_tol=args.rtol,
        abs_tol=args.atol,
        t_max=args.tmax,
        coords=args.coords,
        log_floor=args.floor,
        record_stride=args.stride,
    )
    x0 = default_start(p, args.seed)
    state0 = to_log(x0, args.floor) if args.coords == "log" else x0
    traj = integrate(p, state0, opts)
    write_trajectory_csv(traj, out)
    if traj.truncated:
        sys.stderr.write(f"warning: trajectory truncated: {traj.truncation_reason}\n")


def _run_itinerary(args, out: io.TextIOBase) -> None:
    p = _params(args)
    opts = IntegratorOptions(
        rel_tol=args.rtol,
        abs_tol=args.atol,
        t_max=args.tmax,
        coords="log",
        log_floor=args.floor,
    )
    traj = integrate(p, to_log(default_start(p, args.seed), args.floor), opts)
    record = extract_itinerary(traj, args.h)
    word = word_of(record) if len(record.epochs) >= 2 else None
    write_itinerary_csv(record, word, out)
    if word is not None:
        detection = detect_root(word)
        root = detection.root or ""
        out.write(
            f"# root={root} status={detection.status} period={detection.period} "
            f"defects={len(word.defects)}\n"
        )
    else:
        out.write("# root= status=insufficient period=0 defects=0\n")


def _run_fas(args, out: io.TextIOBase) -> None:
    seq = expand_sequence(args.seq)
    report = sequence_stability(seq, _params(args))
    write_report_csv([report], out)


def _run_sweep(args, out: io.TextIOBase) -> None:
    try:
        ca_part, cb_part = args.grid.split(",")
        ca_lo, ca_hi, n_ca = ca_part.split(":")
        cb_lo, cb_hi, n_cb = cb_part.split(":")
        spec = GridSpec(
            ca_range=(float(ca_lo), float(ca_hi)),
            cb_range=(float(cb_lo), float(cb_hi)),
            n_ca=int(n_ca),
            n_cb=int(n_cb),
            e_a=args.ea,
            e_b=args.eb,
            sequences=tuple(expand_sequence(s) for s in args.seq),
        )
    except ValueError as exc:
        raise ValueError(f"bad --grid specification {args.grid!r}: {exc}") from exc
    write_grid_csv(grid_sweep(spec, threads=args.threads), out)


def _run_trace(args, out: io.TextIOBase) -> None:
    try:
        ca, cb = (float(v) for v in args.start.split(","))
        ca_part, cb_part = args.grid.split(",")
        ca_lo, ca_hi = (float(v) for v in ca_part.split(":")[:2])
        cb_lo, cb_hi = (float(v) for v in cb_part.split(":")[:2])
    except ValueError as exc:
        raise ValueError(f"bad --start/--grid specification: {exc}") from exc
    poly = trace_boundary(
        expand_sequence(args.seq),
        (ca, cb),
        step=args.step,
        e_a=args.ea,
        e_b=args.eb,
        domain=((ca_lo, ca_hi), (cb_lo, cb_hi)),
    )
    write_boundary_csv(poly, out)
    if poly.truncated:
        sys.stderr.write(f"warning: trace truncated: {poly.diagnostic}\n")


def _run_tongues(args, out: io.TextIOBase) -> None:
    family = TongueFamily(components=tuple(args.components), max_length=args.max_length)
    out.write("label,letters,length\n")
    for entry in enumerate_tongues(family):
        out.write(f"{entry.label},{entry.letters},{len(entry.letters)}\n")


def _run_classify(args, out: io.TextIOBase) -> None:
    cls = classify_by_simulation(
        _params(args),
        budget=args.budget,
        seed=args.seed,
        radius=args.h,
        rel_tol=args.rtol,
        log_floor=args.floor,
    )
    write_classification_csv(cls, out)


_RUNNERS = {
    "equilibria": _run_equilibria,
    "simulate": _run_simulate,
    "itinerary": _run_itinerary,
    "fas": _run_fas,
    "sweep": _run_sweep,
    "trace": _run_trace,
    "tongues": _run_tongues,
    "classify": _run_classify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    buffer = io.StringIO()
    buffer.write(_header(args))
    try:
        _RUNNERS[args.command](args, buffer)
    except (ValueError, Rps5Error) as exc:
        sys.stderr.write(f"rps5 {args.command}: {exc}\n")
        return 1
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:  # type: ignore[name-defined]
        sys.stderr.write(f"rps5 {args.command}: numerical failure: {exc}\n")
        return 2
    text = buffer.getvalue()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
