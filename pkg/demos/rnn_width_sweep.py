"""Smallest recurrent width that reaches 95% fidelity, for a target whose middle-cut
information does not grow (adjacent Bell pairs) and one that does (checkerboard crosses).

Run: python3 demos/rnn_width_sweep.py [--family bell|checkerboard] [--sizes ...]
"""

import argparse
import logging

from vbscale import arnn
from vbscale import families as fam

ap = argparse.ArgumentParser()
ap.add_argument("--family", choices=["bell", "checkerboard"], default="bell")
ap.add_argument("--sizes", type=int, nargs="+")
ap.add_argument("--widths", type=int, nargs="+", default=[1, 2, 4, 8])
ap.add_argument("--max-epochs", type=int, default=3000)
args = ap.parse_args()
logging.basicConfig(level=logging.INFO, format="%(message)s")

if args.family == "bell":
    make, sizes = arnn.bell_chain_target, args.sizes or [4, 8, 12]
else:
    def make(l):
        return arnn.StabilizerTarget(fam.checkerboard_zsystem(fam.build_checkerboard(l, 1.0)))
    sizes = args.sizes or [4]

cfg = arnn.TrainConfig(lr=1e-2, max_epochs=args.max_epochs, eval_every=100)
for res in arnn.sweep_min_width(make, sizes, args.widths, cfg):
    curve = ", ".join(f"{w}: {f:.3f}" for w, f in res.best_fidelity.items())
    print(f"size {res.size}: n_d_min = {res.n_d_min}   best fidelity by width {{{curve}}}")
