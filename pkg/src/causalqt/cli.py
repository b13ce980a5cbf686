"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 enumeration budget exceeded,
4 annihilated local state (ZeroNormState; the diagnostic chain goes to
stderr, and in exact mode the partial result is still printed).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from .bell import SWEEP_COLUMNS, chsh, sweep
from .engines import ENGINES, distribution, resolve_threads, sample_counts
from .errors import BudgetError, ParamError, ScenarioError, ZeroNormState
from .fileio import ResultRecord, load_document, parse_bell_config, parse_grid, parse_scenario, write_table

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_ZERO_NORM = 0, 2, 3, 4


def _seed(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _angles(text):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"angles must be comma-separated numbers: {text!r}")
    if len(values) != 4:
        raise argparse.ArgumentTypeError("expected four angles a,a',b,b'")
    return values


def _chain_text(chain):
    return " -> ".join(f"{eid}:{out}" for eid, out in chain)


def _add_common(p):
    p.add_argument("--seed", type=_seed, help="unsigned 64-bit seed (overrides the file)")
    p.add_argument("--csv", metavar="PATH", help="also write a CSV table to PATH")
    p.add_argument("--threads", type=int, default=1, help="worker processes, 0 = one per CPU")


def _add_bell_flags(p):
    p.add_argument("--config", metavar="FILE", help="Bell/sweep config JSON; flags override it")
    p.add_argument("--L", dest="L", type=float, help="wing separation in light-seconds")
    p.add_argument("--eps", type=float, help="singlet perturbation")
    p.add_argument("--eta", type=float, help="projector softening (0 = projective)")
    p.add_argument("--angles", type=_angles, help="a,a',b,b' in radians")
    p.add_argument("--arrival-time", dest="arrival_time", type=float)
    p.add_argument("--delay-model", dest="delay_model", choices=("deterministic", "exponential"))
    p.add_argument("--rate", type=float, help="exponential collapse rate (1/s)")
    p.add_argument("--delta0", type=float, help="deterministic collapse delay (s)")
    p.add_argument("--engine", choices=ENGINES)
    p.add_argument("--trials", type=int)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="exact", action="store_true", default=None)
    mode.add_argument("--sample", dest="exact", action="store_false")


def build_parser():
    parser = argparse.ArgumentParser(prog="causalqt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"causalqt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="compute or sample the outcome distribution of a scenario file")
    run.add_argument("scenario")
    run.add_argument("--engine", choices=ENGINES)
    mode = run.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact")
    mode.add_argument("--sample", dest="mode", action="store_const", const="sample")
    run.add_argument("--trials", type=int)
    _add_common(run)

    val = sub.add_parser("validate", help="check a scenario file and report problems")
    val.add_argument("scenario")

    bell = sub.add_parser("bell", help="CHSH experiment for one wing geometry / delay model")
    _add_bell_flags(bell)
    _add_common(bell)

    sw = sub.add_parser("sweep", help="CHSH value across separations or collapse rates (CSV)")
    _add_bell_flags(sw)
    sw.add_argument("--param", choices=("L", "lambda"))
    sw.add_argument("--grid", help="start:stop:steps[:log|lin]")
    _add_common(sw)
    return parser


def cmd_validate(args, out, err):
    spec = parse_scenario(args.scenario)
    sc = spec.scenario
    print(f"ok: {len(sc.dims)} sites, {len(sc.events)} events, {len(sc.components)} initial component(s), "
          f"engine={spec.engine}, mode={spec.mode}", file=out)
    return EXIT_OK


def cmd_run(args, out, err):
    spec = parse_scenario(args.scenario)
    engine = args.engine or spec.engine
    seed = spec.seed if args.seed is None else args.seed
    mode = args.mode or spec.mode
    trials = spec.trials if args.trials is None else args.trials
    if trials <= 0:
        raise ParamError("trials must be positive")
    start = time.perf_counter()
    if mode == "exact":
        dist = distribution(spec.scenario, engine)
        record = ResultRecord.from_distribution(dist, seed)
    else:
        counts = sample_counts(spec.scenario, engine, trials, seed, threads=args.threads)
        record = ResultRecord.from_counts(counts, [e.id for e in spec.scenario.events], engine, seed, trials)
    record.timing_s = time.perf_counter() - start
    print(record.to_json(), file=out)
    if args.csv:
        record.write_csv(args.csv)
    if record.truncated_mass > 0:
        print(f"zero-norm local state: truncated_mass={record.truncated_mass!r}", file=err)
        for chain in record.zero_norm_chains:
            print(f"  chain: {_chain_text(chain)}", file=err)
        return EXIT_ZERO_NORM
    return EXIT_OK


def _bell_overrides(args):
    overrides = {k: getattr(args, k) for k in ("L", "eps", "eta", "arrival_time", "engine", "trials", "exact", "seed")}
    overrides["angles"] = args.angles
    return overrides


def _bell_config(args):
    doc = load_document(args.config) if args.config else {}
    if args.delay_model or args.rate is not None or args.delta0 is not None:
        delay = dict(doc.get("delay", {}))
        if args.delay_model:
            delay["model"] = args.delay_model
        if args.rate is not None:
            delay["rate"] = args.rate
        if args.delta0 is not None:
            delay["delta0"] = args.delta0
        delay.setdefault("model", "exponential" if "rate" in delay else "deterministic")
        doc = {**doc, "delay": delay}
    return parse_bell_config(doc, _bell_overrides(args))


def cmd_bell(args, out, err):
    config, _ = _bell_config(args)
    start = time.perf_counter()
    result = chsh(config)
    payload = {"tool": "causalqt", "version": __version__, "seed": config.seed,
               "result": result.to_dict(), "timing_s": time.perf_counter() - start}
    print(json.dumps(payload, indent=2), file=out)
    if args.csv:
        rows = [(f"E_{name}", result.correlations[name], result.stderr[name]) for name in result.correlations]
        rows += [("S", result.S, result.S_stderr), ("p_spacelike", result.p_spacelike, result.p_spacelike_stderr)]
        with open(args.csv, "w", newline="") as fh:
            write_table(rows, ("quantity", "value", "stderr"), fh)
    return EXIT_OK


def cmd_sweep(args, out, err):
    config, block = _bell_config(args)
    block = block or {}
    param = args.param or block.get("param")
    grid_text = args.grid or block.get("grid")
    if not param or not grid_text:
        raise ScenarioError("a sweep needs --param and --grid (or a 'sweep' block in --config)", "sweep")
    rows = sweep(config, param, parse_grid(grid_text), threads=args.threads)
    write_table([r.as_tuple() for r in rows], SWEEP_COLUMNS, out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            write_table([r.as_tuple() for r in rows], SWEEP_COLUMNS, fh)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "bell": cmd_bell, "sweep": cmd_sweep}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        resolve_threads(getattr(args, "threads", 1))
        return COMMANDS[args.command](args, out, err)
    except (ScenarioError, ParamError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    except BudgetError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_BUDGET
    except ZeroNormState as exc:
        print(f"zero-norm local state: {exc}", file=err)
        print(f"  chain: {_chain_text(exc.chain)}", file=err)
        return EXIT_ZERO_NORM

