"""Relative RD-cost loss and branch savings of the departure point versus K and phi.

Blocks are i.i.d. Laplacian with sigma set as a multiple of the step size, so
each row isolates the sigma/q ratio.  Writes CSV to stdout.

    python scripts/k_sweep.py --blocks 200 > k_sweep.csv
"""

import argparse
import csv
import sys

from lctcq.experiments import block_seed
from lctcq.low_complexity import BOUND, DepartureConfig, accelerated_search
from lctcq.quant_kernel import QuantConfig
from lctcq.source_model import sample_block
from lctcq.trellis import tcq_search


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qp", type=int, default=32)
    ap.add_argument("--blocks", type=int, default=200)
    ap.add_argument("--size", type=int, default=8)
    ap.add_argument("--k", type=float, nargs="+", default=[0.0, 1.0, 1.5, 2.0, 2.5, 3.0])
    ap.add_argument("--phi", type=float, nargs="+", default=[0.0897, 0.15, 0.285, 0.5, 1.0])
    ap.add_argument("--ratio", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0, 8.0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["phi", "sigma_over_q", "k", "rel_cost_delta", "savings_branches"])
    n = args.size
    for phi in args.phi:
        cfg = QuantConfig.from_qp(args.qp, phi=phi)
        for ratio in args.ratio:
            blocks = [sample_block(ratio * cfg.q_step, n, n, block_seed(args.seed, 7, b))
                      for b in range(args.blocks)]
            full = [tcq_search(b, cfg) for b in blocks]
            cost_full = sum(r.total_cost for r in full)
            br_full = sum(r.counters.branches for r in full)
            for k in args.k:
                fast = [accelerated_search(b, cfg, None, DepartureConfig(BOUND, k)) for b in blocks]
                cost = sum(r.total_cost for r in fast)
                br = sum(r.counters.branches for r in fast)
                out.writerow([phi, ratio, k, (cost - cost_full) / cost_full,
                              0.0 if br_full == 0 else 1 - br / br_full])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
