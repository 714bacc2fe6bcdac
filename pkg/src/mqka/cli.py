"""Command-line front end.

Exit codes: 0 ran and every requested verification passed, 1 a
verification failed (or a run hit a transport error), 2 usage or
configuration error. A detection abort inside a session is a reported
outcome, never a nonzero exit.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from collections import Counter

import numpy as np

from mqka import report as reportmod
from mqka.adversary import check_usd_feasible, random_ancilla_family
from mqka.errors import ConfigError, TransportError
from mqka.example import format_trace, replay
from mqka.protocol import efficiency_accounting
from mqka.scenario import load_scenario

log = logging.getLogger("mqka")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    from mqka.simulate import run_batch

    cfg, trials = load_scenario(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.trials is not None:
        trials = args.trials
    if trials < 0:
        raise ConfigError("--trials must be >= 0")
    workers = args.workers or 1
    log.info("running %d trial(s) with %d worker(s), seed %d", trials, workers, cfg.seed)
    doc = run_batch(cfg, trials, workers=workers, per_trial=args.per_trial)
    _emit(reportmod.dumps(doc), args.out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(reportmod.summary_csv(doc))
    return EXIT_OK


def cmd_replay_example(args) -> int:
    result = replay()
    print(format_trace(result))
    if args.out:
        doc = {"trace": result["trace"], "verified": result["verified"],
               "mismatches": result["mismatches"], "report": result["report"]}
        _emit(reportmod.dumps(doc), args.out)
    return EXIT_OK if result["verified"] else EXIT_FAILED


def cmd_usd_check(args) -> int:
    if args.dim < 1:
        raise ConfigError("--dim must be >= 1")
    if args.families < 0:
        raise ConfigError("--families must be >= 0")
    if args.families == 0:
        log.warning("no families requested; check passes vacuously")
        print("families: 0 (vacuous pass)")
        return EXIT_OK
    rng = np.random.default_rng(args.seed)
    ranks: Counter = Counter()
    max_residual = 0.0
    feasible = 0
    for _ in range(args.families):
        res = check_usd_feasible(random_ancilla_family(args.dim, rng))
        ranks[res.rank] += 1
        feasible += res.feasible
        max_residual = max(max_residual, *res.residuals)
    print(f"dim {args.dim}, families {args.families}, seed {args.seed}")
    print("rank histogram: " + ", ".join(f"{r}: {c}" for r, c in sorted(ranks.items())))
    print(f"max linear-relation residual: {max_residual:.3e}")
    print(f"feasible (rank 8): {feasible}")
    ok = feasible == 0 and max_residual < 1e-10
    print("PASS: no family admits unambiguous discrimination" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_efficiency(args) -> int:
    if args.parties < 2:
        raise ConfigError("--parties must be >= 2")
    if not 0 <= args.delta < 1:
        raise ConfigError("--delta must be in [0, 1)")
    if args.states < 1:
        raise ConfigError("--states must be >= 1")
    acc = efficiency_accounting(args.parties, args.states, args.delta)
    print(f"eta = {acc['eta']:.4f}")
    print(f"n = {args.states}: c = {acc['c']:g} key bits, q = {acc['q']:g} qubits,"
          f" b = {acc['b']:g} classical bits")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mqka", description="Authenticated ring key-agreement simulator")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run sessions from a scenario file")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=_u64)
    run.add_argument("--trials", type=int)
    run.add_argument("--out")
    run.add_argument("--per-trial", action="store_true")
    run.add_argument("--csv", help="also write a one-row summary CSV here")
    run.add_argument("--workers", type=int, default=1,
                     help="worker processes (0 = all cores); output does not depend on it")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("replay-example", help="replay and verify the three-party worked example")
    rep.add_argument("--out")
    rep.set_defaults(func=cmd_replay_example)

    usd = sub.add_parser("usd-check", help="rank check of entangle-measure state families")
    usd.add_argument("--dim", type=int, required=True)
    usd.add_argument("--families", type=int, required=True)
    usd.add_argument("--seed", type=_u64, default=0)
    usd.set_defaults(func=cmd_usd_check)

    eff = sub.add_parser("efficiency", help="print the particle efficiency")
    eff.add_argument("--parties", type=int, required=True)
    eff.add_argument("--delta", type=float, default=0.0)
    eff.add_argument("--states", type=int, default=1, help="two-qubit states per sequence (n)")
    eff.set_defaults(func=cmd_efficiency)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    if getattr(args, "workers", 1) == 0:
        args.workers = os.cpu_count() or 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"mqka: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        print(f"mqka: transport error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
