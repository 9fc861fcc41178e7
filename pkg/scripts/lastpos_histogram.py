"""Last non-zero scan index histogram for HDQ and the full trellis.

Plot data only: one CSV row per scan index (-1 means an all-zero block).

    python scripts/lastpos_histogram.py --qp 37 --size 16 --blocks 1000 > lastpos.csv
"""

import argparse
import csv
import statistics
import sys

from lctcq.experiments import block_seed
from lctcq.quant_kernel import QuantConfig
from lctcq.source_model import sample_block
from lctcq.trellis import hdq_quantize, tcq_search


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qp", type=int, default=37)
    ap.add_argument("--size", type=int, default=16)
    ap.add_argument("--sigma", type=float, default=32.0)
    ap.add_argument("--blocks", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cfg = QuantConfig.from_qp(args.qp)
    n = args.size
    hdq, tcq = [], []
    for b in range(args.blocks):
        blk = sample_block(args.sigma, n, n, block_seed(args.seed, 8, b))
        h, t = hdq_quantize(blk, cfg).last_pos, tcq_search(blk, cfg).last_pos
        hdq.append(-1 if h is None else h)
        tcq.append(-1 if t is None else t)

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["last_pos", "hdq_count", "tcq_count"])
    for pos in range(-1, n * n):
        out.writerow([pos, hdq.count(pos), tcq.count(pos)])
    print(f"median hdq {statistics.median(hdq)}, median tcq {statistics.median(tcq)}", file=sys.stderr)


if __name__ == "__main__":
    main()
