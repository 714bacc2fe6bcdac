"""Detection rate of forged-tag attacks as a function of the detection fraction.

Every delta reuses the same trial seeds, so the curve compares identical
sessions that differ only in how many key bits are sampled.

    python3 scripts/impersonation_sweep.py --trials 500 --out impersonation.csv
"""

import argparse
import csv
import sys

from mqka.adversary import AttackKind, AttackScenario, FakeTagMode
from mqka.protocol import SessionConfig
from mqka.simulate import run_batch


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--parties", type=int, default=3)
    ap.add_argument("--deltas", default="0.05,0.1,0.25,0.5,0.75")
    ap.add_argument("--mode", default="random", choices=[m.value for m in FakeTagMode])
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(fh)
    writer.writerow(["attack", "delta", "samples_per_user", "detection_rate", "ci_lo", "ci_hi",
                     "mean_error_rate"])
    for kind in (AttackKind.IMPERSONATE_USER, AttackKind.FORGED_TP_TAG):
        sc = AttackScenario(kind=kind, target=2, fake_tag_mode=FakeTagMode(args.mode))
        for delta in (float(d) for d in args.deltas.split(",")):
            cfg = SessionConfig(N=args.parties, M=args.parties, n=args.n, delta=delta,
                                seed=args.seed, adversary=sc)
            s = run_batch(cfg, args.trials, workers=args.workers)["summary"]
            lo, hi = s["abort_rate_ci95"]
            writer.writerow([kind.value, delta, cfg.samples_per_user, f"{s['abort_rate']:.4f}",
                             f"{lo:.4f}", f"{hi:.4f}", f"{s['mean_error_rate']:.4f}"])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
