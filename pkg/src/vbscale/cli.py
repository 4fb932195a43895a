"""Command line entry point: ``vbscale <subcommand> ...``.

Every subcommand writes a CSV table (``--out`` or stdout) and a JSON manifest
(``<out>.manifest.json``, or one line on stderr when writing to stdout).

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 a sweep found
no width that reaches the fidelity target.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, asdict
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .gf2 import InfeasibleError

log = logging.getLogger("vbscale")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_NO_WIDTH = 0, 2, 3, 4
THREADS_ENV = "VBSCALE_THREADS"
BRUTE_MAX_DIM = 20


class NoWidthFound(RuntimeError):
    pass


@dataclass
class RunManifest:
    subcommand: str
    params: dict
    seed: int | None
    version: str
    timestamp: str
    results: dict

    @classmethod
    def create(cls, args: argparse.Namespace, results: dict | None = None) -> "RunManifest":
        params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
        return cls(args.command, params, getattr(args, "seed", None), __version__,
                   datetime.now(timezone.utc).isoformat(timespec="seconds"), results or {})

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=str)


def _emit(args, header: list[str], rows: list[list], results: dict | None = None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    manifest = RunManifest.create(args, results)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
        with open(f"{args.out}.manifest.json", "w") as fh:
            fh.write(manifest.to_json() + "\n")
    else:
        sys.stdout.write(buf.getvalue())
        sys.stderr.write("manifest: " + json.dumps(asdict(manifest), sort_keys=True, default=str) + "\n")


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def _parse_cut(text: str | None, n: int):
    from .stabilizer import Bipartition

    if text in (None, "mid"):
        return Bipartition.middle(n)
    return Bipartition.from_side(n, [int(t) for t in text.split(",") if t.strip()])


# ---------------------------------------------------------------- subcommands


def cmd_cmi_stabilizer(args) -> int:
    from . import families as fam
    from .stabilizer import ZCheckSystem, cmi_brute_force, cmi_rank_formula

    chosen = [args.file is not None, args.toric is not None, args.checkerboard is not None]
    if sum(chosen) != 1:
        raise ValueError("give exactly one of FILE, --toric L or --checkerboard L")
    if args.file is not None:
        with open(args.file) as fh:
            sys_ = ZCheckSystem.from_json(fh.read())
        cut = _parse_cut(args.cut, sys_.n)
        name = os.path.basename(args.file)
    elif args.toric is not None:
        lat = fam.build_toric(args.toric)
        sys_, cut, name = lat.zsystem(), lat.cut(), f"toric_L{args.toric}"
    else:
        f = fam.build_checkerboard(args.checkerboard, args.gamma)
        sys_ = fam.checkerboard_zsystem(f)
        cut = fam.grid_cut(args.checkerboard, args.grid_cut)
        name = f"checkerboard_L{args.checkerboard}_g{args.gamma}"
    sol = sys_.solution()  # raises InfeasibleError for an inconsistent syndrome
    rows = [[name, sys_.n, sys_.m.rows, "rank_formula", _fmt(cmi_rank_formula(sys_.m, cut).value_bits)]]
    if not args.no_brute and sol.dimension <= BRUTE_MAX_DIM:
        rows.append([name, sys_.n, sys_.m.rows, "brute_force", _fmt(cmi_brute_force(sys_, cut).value_bits)])
    _emit(args, ["system", "n", "checks", "method", "cmi_bits"], rows)
    return EXIT_OK


def cmd_scaling_curve(args) -> int:
    from . import families as fam
    from .stabilizer import cmi_rank_formula

    sizes = list(args.sizes)
    if len(sizes) < 3:
        raise ValueError("a scaling curve needs at least 3 sizes")
    rows, values = [], []
    for l in sizes:
        if args.family == "checkerboard":
            m = fam.checkerboard_zsystem(fam.build_checkerboard(l, args.gamma)).m
            cut = fam.grid_cut(l, args.grid_cut)
        elif args.family == "toric":
            lat = fam.build_toric(l)
            m, cut = lat.plaquettes, lat.cut()
        else:
            s, cut = fam.single_check_system(l)
            m = s.m
        v = cmi_rank_formula(m, cut).value_bits
        values.append(v)
        gamma = _fmt(args.gamma) if args.family == "checkerboard" else ""
        rows.append([l, gamma, _fmt(v), m.rows, _crossing_rows(m, cut)])
    slope, se = fam.loglog_slope(sizes, values)
    print(f"slope={slope:.6f} stderr={se:.6f}", file=sys.stderr)
    _emit(args, ["L", "gamma", "cmi_bits", "n_checks", "n_crossing"], rows,
          {"slope": slope, "slope_stderr": se})
    return EXIT_OK


def _crossing_rows(m, cut) -> int:
    """Checks with support on both sides of the cut."""
    d = m.to_dense()
    return int((d[:, list(cut.a)].any(axis=1) & d[:, list(cut.b)].any(axis=1)).sum())


def cmd_tfd_cmi(args) -> int:
    from .fermion_tfd import BcsChain, Ordering, build_tfd, tfd_cmi

    t = build_tfd(BcsChain(args.n, args.j, args.h), args.beta)
    o = Ordering.named(args.ordering, args.n)
    cut = None if args.cut == "mid" else int(args.cut)
    rng = np.random.default_rng(args.seed)
    r = tfd_cmi(t, o, cut, args.samples, rng)
    cut_val = t.n_modes // 2 if cut is None else cut
    _emit(args, ["n", "beta", "ordering", "cmi_bits", "stderr", "cut", "method"],
          [[args.n, _fmt(args.beta), args.ordering, _fmt(r.value_bits), _fmt(r.stderr_bits), cut_val, r.method]])
    return EXIT_OK


def cmd_tfim_cmi(args) -> int:
    from .tfim_tfd import TfimModel, cmi_exact, cmi_mcmc, partition_function, small_beta_formula

    m = TfimModel(args.n, args.j, args.h)
    log_z = partition_function(m, args.beta).log_abs
    if args.method == "exact":
        r = cmi_exact(m, args.beta)
        val, se = r.value_bits, 0.0
    elif args.method == "mcmc":
        tr = cmi_mcmc(m, args.beta, n_steps=args.steps, rng=np.random.default_rng(args.seed))
        val, se = tr.estimate.value_bits, tr.estimate.stderr_bits
    else:
        val, se = small_beta_formula(args.n, args.beta, args.j, args.h), 0.0
    _emit(args, ["n", "beta", "j", "h", "method", "cmi_bits", "stderr", "log_z"],
          [[args.n, _fmt(args.beta), _fmt(args.j), _fmt(args.h), args.method, _fmt(val), _fmt(se), _fmt(log_z)]])
    return EXIT_OK


def _parse_params(items: list[str]) -> dict:
    out = {}
    for it in items:
        if "=" not in it:
            raise ValueError(f"--params entries look like key=value, got {it!r}")
        k, v = it.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def sweep_target_factory(family: str, params: dict):
    """Map a size to a training target for the sweep subcommand."""
    from . import arnn
    from . import families as fam
    from .fermion_tfd import BcsChain, Ordering, build_tfd

    if family == "checkerboard":
        gamma = float(params.get("gamma", 1.0))
        return lambda l: arnn.StabilizerTarget(fam.checkerboard_zsystem(fam.build_checkerboard(l, gamma)), "checkerboard")
    if family == "toric":
        return lambda l: arnn.StabilizerTarget(fam.build_toric(l).zsystem(), "toric")
    if family == "tfd":
        beta = float(params.get("beta", 0.1))
        j, h = float(params.get("j", 1.0)), float(params.get("h", 0.6))
        order = params.get("ordering", "separate")
        return lambda n: arnn.TfdTarget(build_tfd(BcsChain(n, j, h), beta), Ordering.named(order, n))
    if family == "bell":
        return arnn.bell_chain_target
    if family == "delta":
        return arnn.delta_target
    raise ValueError(f"unknown family {family!r}")


def cmd_sweep(args) -> int:
    from . import arnn

    cfg = arnn.TrainConfig(lr=args.lr, batch_size=args.batch_size, max_epochs=args.max_epochs,
                           seeds=args.seeds, target_fidelity=args.target_fid, eval_every=args.eval_every,
                           eval_method=args.eval)
    make = sweep_target_factory(args.family, _parse_params(args.params))
    results = arnn.sweep_min_width(make, args.sizes, args.widths, cfg, base_seed=args.seed)
    rows = [[r.size, r.width, r.seed, _fmt(r.final_fidelity), r.epochs, int(r.success)]
            for res in results for r in res.runs]
    summary = {str(res.size): res.n_d_min for res in results}
    for res in results:
        print(f"size={res.size} n_d_min={res.n_d_min if res.n_d_min is not None else 'none'}", file=sys.stderr)
    _emit(args, ["size", "width", "seed", "final_fidelity", "epochs", "success"], rows, {"n_d_min": summary})
    if any(res.n_d_min is None for res in results):
        raise NoWidthFound("no tested width reached the fidelity target for some size")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vbscale", description="Amplitude mutual information and RNN width experiments.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out", help="CSV path; the manifest goes next to it")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("cmi-stabilizer", help="middle-cut CMI of a Z-check system")
    s.add_argument("file", nargs="?", help='JSON {"n", "z_checks", "syndrome"}')
    s.add_argument("--toric", type=int, metavar="L")
    s.add_argument("--checkerboard", type=int, metavar="L")
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--grid-cut", choices=["vertical", "horizontal"], default="vertical")
    s.add_argument("--cut", help="'mid' or comma-separated indices of side A (file input)")
    s.add_argument("--no-brute", action="store_true", help="skip the enumeration cross-check")
    common(s, seed=False)
    s.set_defaults(func=cmd_cmi_stabilizer)

    s = sub.add_parser("scaling-curve", help="CMI against system size with a log-log fit")
    s.add_argument("--family", choices=["checkerboard", "toric", "single-check"], required=True)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--grid-cut", choices=["vertical", "horizontal"], default="vertical")
    s.add_argument("--sizes", type=int, nargs="+", required=True)
    common(s, seed=False)
    s.set_defaults(func=cmd_scaling_curve)

    s = sub.add_parser("tfd-cmi", help="cross-cut MI of the p-wave chain thermofield double")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--j", type=float, default=1.0)
    s.add_argument("--h", type=float, default=0.6)
    s.add_argument("--ordering", choices=["separate", "alternate"], default="separate")
    s.add_argument("--cut", default="mid")
    s.add_argument("--samples", type=int, help="sample count; omit for exact enumeration")
    common(s)
    s.set_defaults(func=cmd_tfd_cmi)

    s = sub.add_parser("tfim-cmi", help="copy-copy MI of the Ising-chain thermofield double")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--j", type=float, default=1.0)
    s.add_argument("--h", type=float, default=0.6)
    s.add_argument("--method", choices=["exact", "mcmc", "smallbeta"], default="exact")
    s.add_argument("--steps", type=int, default=20000)
    common(s)
    s.set_defaults(func=cmd_tfim_cmi)

    s = sub.add_parser("sweep", help="minimal RNN width reaching a fidelity target")
    s.add_argument("--family", choices=["checkerboard", "toric", "tfd", "bell", "delta"], required=True)
    s.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE")
    s.add_argument("--sizes", type=int, nargs="+", required=True)
    s.add_argument("--widths", type=int, nargs="+", default=[1, 2, 4, 6, 8, 12, 16, 24, 32, 48, 64])
    s.add_argument("--target-fid", type=float, default=0.95)
    s.add_argument("--seeds", type=int, default=3)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--batch-size", type=int, default=256)
    s.add_argument("--max-epochs", type=int, default=5000)
    s.add_argument("--eval-every", type=int, default=100)
    s.add_argument("--eval", choices=["auto", "exact", "sampled"], default="auto")
    s.add_argument("--threads", type=int, default=_default_threads(),
                   help=f"torch intra-op threads (default from ${THREADS_ENV}, else 1)")
    common(s)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if hasattr(args, "threads"):
        import torch

        torch.set_num_threads(args.threads)
    try:
        return args.func(args)
    except NoWidthFound as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NO_WIDTH
    except (FloatingPointError, np.linalg.LinAlgError, OverflowError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, InfeasibleError, KeyError, OSError, json.JSONDecodeError, IndexError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
