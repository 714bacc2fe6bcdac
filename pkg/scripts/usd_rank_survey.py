"""Rank survey of the entangle-measure composite states.

For random ancilla families at several dimensions, and for a few
structured families, report the rank histogram of the eight composites
and the largest residual of the three linear relations among them.

    python3 scripts/usd_rank_survey.py --families 1000
"""

import argparse
from collections import Counter

import numpy as np

from mqka.adversary import build_entangled_family, check_usd_feasible, random_ancilla_family


def survey(dims, families, seed):
    rng = np.random.default_rng(seed)
    for d in dims:
        ranks = Counter()
        worst = 0.0
        for _ in range(families):
            res = check_usd_feasible(random_ancilla_family(d, rng))
            ranks[res.rank] += 1
            worst = max(worst, *res.residuals)
        hist = ", ".join(f"rank {r}: {c}" for r, c in sorted(ranks.items()))
        print(f"d={d:<3d} {hist}   max residual {worst:.2e}")


def structured():
    cases = {
        "equal scalars": (1, 1, 1, 1),
        "orthonormal d=4": tuple(np.eye(4)),
        "two zero slots": ([1, 0], [0, 0], [0, 1], [0, 0]),
        "identical vectors d=3": tuple([np.array([1, 2, 2]) / 3] * 4),
    }
    for name, anc in cases.items():
        res = check_usd_feasible(build_entangled_family(*anc))
        print(f"{name:<24s} rank {res.rank}, feasible {res.feasible}, "
              f"max residual {max(res.residuals):.1e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="1,2,4,8,16")
    ap.add_argument("--families", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    survey([int(d) for d in args.dims.split(",")], args.families, args.seed)
    structured()


if __name__ == "__main__":
    main()
