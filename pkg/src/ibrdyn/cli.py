"""Command-line front end.

Exit status is 0 on success, 2 for bad input (unreadable game file, unknown
preset, malformed flags) and 3 when a numerical routine fails.
"""
from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

import numpy as np

from . import presets
from .analysis import (
    classify_two_strategy,
    iterated_elimination,
    search_rest_points,
    strictly_dominated_pairs,
    weakly_dominated_pairs,
)
from .dynamics import FieldKind, velocity
from .flow import DEFAULT_SAMPLES, StepUnderflowError, integrate, orbit_classify, poincare_returns
from .game import GameParseError, PayoffMatrix, PopulationState, barycenter, parse_game
from .ioutil import atomic_write, g17
from .reports import TARGETS, render
from .stochastic import SimConfig, deviation_report, replicate_gaps, simulate, summary_csv
from .svg import PhaseOptions, emit_phase_svg

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


def _parse_x0(text: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"--x0 expects comma-separated numbers, got {text!r}") from None
    try:
        return PopulationState(vals).x
    except ValueError as exc:
        raise InputError(f"--x0 {text!r}: {exc}") from None


def _load_game(args) -> PayoffMatrix:
    if args.game:
        try:
            text = Path(args.game).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read game file {args.game}: {exc.strerror}") from None
        try:
            return parse_game(text)
        except GameParseError as exc:
            raise InputError(f"{args.game}: {exc}") from None
    if args.preset:
        try:
            return presets.get_preset(args.preset)
        except (KeyError, ValueError) as exc:
            raise InputError(exc.args[0] if exc.args else str(exc)) from None
    raise InputError("a game source is required: --game PATH or --preset NAME")


def _starts(args, game: PayoffMatrix) -> list[np.ndarray]:
    pts = [_parse_x0(s) for s in (args.x0 or [])]
    for p in pts:
        if p.size != game.n:
            raise InputError(f"--x0 has {p.size} shares but the game has {game.n} strategies")
    return pts


def _one_start(args, game) -> np.ndarray:
    pts = _starts(args, game)
    if len(pts) > 1:
        raise InputError("this command takes a single --x0")
    return pts[0] if pts else barycenter(game.n).x


def _table(columns, rows) -> str:
    import csv

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _require_format(args, allowed):
    fmt = args.format or allowed[0]
    if fmt not in allowed:
        raise InputError(f"{args.command} does not support --format {fmt}; use {' or '.join(allowed)}")
    return fmt


def cmd_field(args) -> str:
    game = _load_game(args)
    fmt = _require_format(args, ("txt", "csv"))
    rows = []
    for x in _starts(args, game) or [barycenter(game.n).x]:
        v = velocity(x, game, args.kind)
        rows.append([g17(s) for s in x] + [g17(s) for s in v])
    n = game.n
    if fmt == "csv":
        return _table([f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)], rows)
    return "".join(f"x = ({', '.join(r[:n])})\nxdot = ({', '.join(r[n:])})\n" for r in rows)


def _eig_text(eigs) -> str:
    return " ".join(f"{complex(e).real:.17g}{complex(e).imag:+.17g}i" for e in eigs)


def cmd_rest_points(args) -> str:
    game = _load_game(args)
    fmt = _require_format(args, ("txt", "csv"))
    search = search_rest_points(game, args.kind, seed=args.seed)
    n = game.n
    if fmt == "csv":
        rows = [[*(g17(v) for v in p.location), " ".join(str(s + 1) for s in p.support), p.stability,
                 p.simplex_stability, _eig_text(p.eigenvalues), g17(p.residual)] for p in search.points]
        cols = [f"x{i + 1}" for i in range(n)] + ["support", "stability", "simplex_stability", "eigenvalues",
                                                 "residual"]
        return _table(cols, rows)
    lines = [f"{len(search.points)} rest points ({len(search.interior())} interior), kind={FieldKind.parse(args.kind).value}"]
    for p in search.points:
        loc = ", ".join(f"{v:.10g}" for v in p.location)
        lines.append(f"  ({loc})  support {{{', '.join(str(s + 1) for s in p.support)}}}  {p.stability}"
                     + (f"  eigenvalues {_eig_text(p.eigenvalues)}" if p.eigenvalues else ""))
    for face in search.empty_faces:
        lines.append(f"  face {{{', '.join(str(s + 1) for s in face)}}}: no interior rest point found (heuristic)")
    return "\n".join(lines) + "\n"


def cmd_classify2(args) -> str:
    game = _load_game(args)
    if game.n != 2:
        raise InputError(f"classify2 needs a 2x2 game, got {game.n} strategies")
    fmt = _require_format(args, ("txt", "csv"))
    c = classify_two_strategy(game, args.kind)
    roots = ";".join(g17(r) for r in c.interior_rest_points)
    if fmt == "csv":
        return _table(["label", "relabeled", "interior_rest_points", "stability", "dynamics"],
                      [[c.label, str(c.relabeled).lower(), roots, ";".join(c.interior_stability),
                        c.dynamics_id or ""]])
    lines = [f"label: {c.label}" + (" (after swapping the strategies)" if c.relabeled else ""),
             f"interior rest points: {', '.join(g17(r) for r in c.interior_rest_points) or 'none'}"]
    if c.interior_stability:
        lines.append(f"stability: {', '.join(c.interior_stability)}")
    if c.dynamics_id:
        lines.append(f"closed form: {c.dynamics_id} {presets.closed_form_for(c.label).expression}")
    return "\n".join(lines) + "\n"


def cmd_dominance(args) -> str:
    game = _load_game(args)
    fmt = _require_format(args, ("txt", "csv"))
    strict = strictly_dominated_pairs(game)
    trace = iterated_elimination(game)
    weak = weakly_dominated_pairs(game)
    if fmt == "csv":
        rows = [["strict", "", d.dominator + 1, d.dominated + 1] for d in strict]
        rows += [["elimination", r, d.dominator + 1, d.dominated + 1] for r, d in enumerate(trace.rounds, 1)]
        rows += [["weak", "", d.dominator + 1, d.dominated + 1] for d in weak]
        return _table(["relation", "round", "dominator", "dominated"], rows)
    fmt_pairs = lambda ps: ", ".join(f"{d.dominated + 1} by {d.dominator + 1}" for d in ps) or "none"
    return (f"strictly dominated: {fmt_pairs(strict)}\n"
            f"elimination order: {fmt_pairs(trace.rounds)}\n"
            f"survivors: {{{', '.join(str(s + 1) for s in trace.survivors)}}}\n"
            f"weakly dominated (advisory, not eliminated): {fmt_pairs(weak)}\n")


def cmd_integrate(args) -> str:
    game = _load_game(args)
    _require_format(args, ("csv",))
    x0 = _one_start(args, game)
    return integrate(game, args.kind, x0, args.horizon, samples=args.samples).to_csv()


def cmd_orbit(args) -> str:
    game = _load_game(args)
    if game.n != 3:
        raise InputError("orbit classification needs a three-strategy game")
    fmt = _require_format(args, ("txt", "csv"))
    x0 = _one_start(args, game)
    rets = poincare_returns(game, args.kind, x0, horizon=args.horizon)
    verdict = orbit_classify(rets)
    if fmt == "csv":
        rows = [[i, g17(c.t), *(g17(v) for v in c.state), "" if c.distance is None else g17(c.distance)]
                for i, c in enumerate(rets.crossings, 1)]
        return _table(["return", "t", "x1", "x2", "x3", "distance"], rows)
    lines = [f"verdict: {verdict.tag}"]
    if verdict.period is not None and verdict.tag in ("closed_orbit", "inward_spiral", "outward_spiral"):
        lines.append(f"return time: {verdict.period:.10g}")
    if verdict.rest_point is not None:
        lines.append(f"rest point: ({', '.join(f'{v:.10g}' for v in verdict.rest_point)})")
    if verdict.face is not None:
        lines.append(f"face: {{{', '.join(str(s + 1) for s in verdict.face)}}}")
    lines.append(f"section: x{rets.section[0] + 1} vs x{rets.section[1] + 1}, {len(rets.crossings)} returns"
                 + (" (partial)" if rets.partial else ""))
    if verdict.evidence:
        lines.append("return distances: " + " ".join(f"{d:.6e}" for d in verdict.evidence))
    if verdict.diagnostics:
        lines.append(f"diagnostics: {verdict.diagnostics}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> str:
    game = _load_game(args)
    fmt = _require_format(args, ("csv", "txt"))
    x0 = _one_start(args, game)
    if args.agents < 2:
        raise InputError("--agents must be at least 2")
    if args.replicates > 1:
        rows = replicate_gaps(game, x0, args.agents, range(args.seed, args.seed + args.replicates),
                              args.horizon, args.samples)
        return summary_csv(rows)
    cfg = SimConfig(args.seed, args.agents, args.horizon, args.samples)
    traj = simulate(cfg, game, x0)
    if fmt == "csv":
        return traj.to_csv()
    ref = integrate(game, FieldKind.IBR, traj.states[0], args.horizon, samples=args.samples)
    rep = deviation_report(traj, ref)
    return (f"N={args.agents} seed={args.seed} horizon={args.horizon:g}\n"
            f"final state: ({', '.join(f'{v:.6g}' for v in traj.final)})\n"
            f"sup gap to mean dynamics: {rep.sup_gap:.6g} at t={rep.t_at_sup:.6g}\n")


def cmd_phase(args) -> str:
    game = _load_game(args)
    _require_format(args, ("svg",))
    if game.n not in (2, 3):
        raise InputError(f"phase portraits support 2 or 3 strategies, got {game.n}")
    return emit_phase_svg(game, args.kind, _starts(args, game), PhaseOptions(horizon=args.horizon))


def cmd_reproduce(args) -> str | None:
    if args.target not in TARGETS:
        raise InputError(f"unknown reproduce target {args.target!r}; choose from {', '.join(TARGETS)}")
    csv_text, summary = render(args.target)
    if args.out:
        out = Path(args.out)
        atomic_write(out / f"{args.target}.csv", csv_text)
        atomic_write(out / f"{args.target}.txt", summary)
        return summary
    return csv_text if (args.format or "txt") == "csv" else summary


COMMANDS = {
    "field": (cmd_field, "mean-field velocity at one or more states"),
    "rest-points": (cmd_rest_points, "rest points with stability classes"),
    "classify2": (cmd_classify2, "ordinal type and rest points of a 2x2 game"),
    "dominance": (cmd_dominance, "dominated strategies and iterated elimination"),
    "integrate": (cmd_integrate, "integrate the mean dynamics, trajectory CSV"),
    "orbit": (cmd_orbit, "classify the orbit through a start by section returns"),
    "simulate": (cmd_simulate, "finite-population simulation"),
    "phase": (cmd_phase, "SVG phase portrait"),
    "reproduce": (cmd_reproduce, "regenerate a table or worked example"),
}

_DEFAULT_HORIZON = {"integrate": 50.0, "orbit": 200.0, "simulate": 10.0, "phase": 30.0}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ibrdyn", description="Imitate-the-better-realization dynamics toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        if name == "reproduce":
            p.add_argument("target", help=f"one of: {', '.join(TARGETS)}")
        else:
            src = p.add_mutually_exclusive_group()
            src.add_argument("--game", metavar="PATH", help="game file")
            src.add_argument("--preset", metavar="NAME", help="named game, e.g. table5-C2")
            p.add_argument("--kind", type=FieldKind.parse, default=FieldKind.IBR, metavar="ibr|replicator")
            p.add_argument("--x0", action="append", metavar="a,b,...",
                           help="start state (repeat for several starts where supported)")
            p.add_argument("--horizon", type=float, default=_DEFAULT_HORIZON.get(name, 50.0), metavar="T")
            p.add_argument("--seed", type=int, default=0, metavar="S")
            p.add_argument("--agents", type=int, default=1000, metavar="N")
            p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="output grid size")
            p.add_argument("--replicates", type=int, default=1, help="simulate: seeds S..S+R-1, summary CSV")
        p.add_argument("--out", metavar="PATH", help="output file (directory for reproduce)")
        p.add_argument("--format", choices=("csv", "svg", "txt"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        if getattr(args, "horizon", 1.0) <= 0:
            raise InputError("--horizon must be positive")
        text = handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StepUnderflowError, FloatingPointError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.out and args.command != "reproduce":
        atomic_write(args.out, text)
    elif text:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
