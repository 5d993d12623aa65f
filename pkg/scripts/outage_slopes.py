"""Fit outage slopes for the scalar, parallel and NAF channels on an SNR ladder.

    python3 scripts/outage_slopes.py [--trials N] [--seed S] [--ladder 10,15,...]
"""

import argparse
import sys

from dmtlab.montecarlo import ImportanceSampling, estimate_diversity, whiteness_check
from dmtlab.network import chain_network
from dmtlab.poly import PolyMatrix
from dmtlab.protocols import InducedChannel, Schedule, build_induced_channel, naf_single


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--ladder", default="10,15,20,25,30,35")
    a = ap.parse_args(argv)
    ladder = [float(v) for v in a.ladder.split(",")]
    scalar = build_induced_channel(chain_network(1), Schedule(({0},)))
    parallel = InducedChannel(PolyMatrix.from_rows([["a", 0], [0, "b"]]), (), 1, 1)
    est = estimate_diversity(scalar, 0.2, ladder, a.trials, a.seed)
    print(f"scalar   r=0.20  slope {est.slope:.3f} +/- {est.ci:.3f}")
    est = estimate_diversity(parallel, 0.05, ladder, a.trials, a.seed,
                             importance=ImportanceSampling(1.0))
    print(f"parallel r=0.05  slope {est.slope:.3f} +/- {est.ci:.3f}  (IS)")
    rep = whiteness_check(naf_single()[0], 0.05, ladder, a.trials, a.seed,
                          importance=ImportanceSampling(1.0))
    print(f"naf      r=0.05  white {rep.white.slope:.3f} +/- {rep.white.ci:.3f}  "
          f"colored {rep.colored.slope:.3f} +/- {rep.colored.ci:.3f}  (IS)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
