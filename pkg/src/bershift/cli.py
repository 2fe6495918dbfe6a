"""Command-line entry point.

Each subcommand writes ``<command>.csv`` (header row, one row per record,
``#``-prefixed footer with provenance and summary) and
``<command>_summary.txt`` (``key=value`` lines) to the output directory.
Exit codes: 0 success, 2 usage, 3 configuration, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .config import load_config
from .dependence import holder_theta_bound, theta_coefficient, variance_kernel_theta_bound
from .errors import ConfigurationError, DegenerateVarianceError, NumericError
from .hoeffding import REMAINDER_NAMES, LevelSystem, decompose_path, path_margin
from .limits import REMAINDER_COLUMNS, clt_experiment, lil_statistic, lln_experiment, remainder_decay
from .processes import generate_path
from .rng import Stream
from .ustat import u_statistic

COMMANDS = ("simulate", "decompose", "theta", "clt", "lln", "lil", "remainders")
OUT_DIR_ENV = "BERSHIFT_OUT_DIR"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class Output:
    def __init__(self, out_dir, command, config, seed):
        self.dir = out_dir
        self.command = command
        self.config = config
        self.seed = seed

    def provenance(self):
        return [f"command={self.command}", f"config_sha256={self.config.sha256}", f"seed={self.seed}"]

    def write_csv(self, name, columns, rows, summary=None):
        lines = [",".join(columns)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        lines += [f"# {p}" for p in self.provenance()]
        lines += [f"# config {e}" for e in self.config.echo()]
        for k, v in (summary or {}).items():
            lines.append(f"# summary {k}={_fmt(v)}")
        self._write(f"{name}.csv", lines)

    def write_summary(self, summary):
        lines = self.provenance() + [f"config.{e}" for e in self.config.echo()]
        lines += [f"{k}={_fmt(v)}" for k, v in summary.items()]
        self._write(f"{self.command}_summary.txt", lines)

    def _write(self, fname, lines):
        os.makedirs(self.dir, exist_ok=True)
        with open(os.path.join(self.dir, fname), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _simulate(cfg, stream, out, workers):
    e = cfg.experiment
    path = generate_path(cfg.process, e["n"], stream.child("path"))
    x = path.values
    xc = x - x.mean()
    summary = {"n": e["n"], "mean": float(x.mean()), "variance": float(x.var()),
               "lag1_autocovariance": float(np.dot(xc[:-1], xc[1:]) / x.size),
               "u_statistic": u_statistic(cfg.kernel, x)}
    out.write_csv("simulate", ["j", "x"], [(j + 1, v) for j, v in enumerate(x)], summary)
    return summary


def _decompose(cfg, stream, out, workers):
    e = cfg.experiment
    proc = cfg.process
    L = proc.halfwidth if e["L_max"] is None else e["L_max"]
    system = LevelSystem(cfg.kernel, proc, e["tail_samples"], e["M"], e["center_samples"],
                         stream.child("levels"))
    path = generate_path(proc, e["n"], stream.child("path"), margin=path_margin(proc, L))
    dec = decompose_path(system, path, L)
    cols = ["level", "linear", "degenerate_sum"] + list(REMAINDER_NAMES) + ["R7", "direct", "residual",
                                                                             "relative_residual"]
    rows = [[d.ell, d.linear, d.degenerate_sum] + [d.remainders[k] for k in REMAINDER_NAMES]
            + [d.r7, d.direct, d.residual, d.relative_residual] for d in dec.levels]
    summary = {"n": e["n"], "L_max": L, "u_n": dec.u_n, "expected_u": dec.expected_u,
               "total_residual": dec.residual, "total_relative_residual": dec.relative_residual}
    out.write_csv("decompose", cols, rows, summary)
    return summary


def _theta(cfg, stream, out, workers):
    e = cfg.experiment
    proc, kern = cfg.process, cfg.kernel
    L = proc.halfwidth + 1 if e["L_max"] is None else e["L_max"]
    cols = ["level", "p", "theta_hat", "SE", "j_star", "holder_bound", "holder_bound_se",
            "variance_bound_printed", "variance_bound_printed_se", "variance_bound_derived",
            "variance_bound_derived_se"]
    rows = []
    nan = float("nan")
    for p in e["ps"]:
        for ell in range(L + 1):
            # estimate and bounds share one truncation map, their outer draws are independent
            t = theta_coefficient(kern, proc, ell, p, e["theta_R"], e["tail_samples"], stream.child("theta", ell))
            hb = (nan, nan)
            vb = (nan, nan, nan, nan)
            if ell >= 1 and kern.holder is not None:
                hb = holder_theta_bound(kern, proc, ell, p, e["theta_R"], stream.child("theta", ell),
                                        e["tail_samples"])
            if ell >= 1 and kern.name == "variance":
                vb = variance_kernel_theta_bound(proc, ell, p, e["theta_R"], stream.child("theta", ell),
                                                 e["tail_samples"])
            rows.append([ell, p, t.theta, t.se, t.j_star, *hb, *vb])
    summary = {"levels": L + 1, "ps": " ".join(_fmt(p) for p in e["ps"])}
    out.write_csv("theta", cols, rows, summary)
    return summary


TABLE_COLUMNS = {
    ("clt", "quantiles"): ["q", "empirical", "normal"],
    ("clt", "covariances"): ["k", "cov"],
    ("remainders", "means"): ["n", *REMAINDER_COLUMNS],
    ("remainders", "ses"): ["n", *REMAINDER_COLUMNS],
    ("remainders", "r7_bound"): ["n", "R7_mean", "R7_se", "bound", "bound_se"],
}


def _report_out(out, rep, name):
    out.write_csv(name, rep.columns, rep.statistics.tolist(), rep.summary)
    for tname, table in rep.tables.items():
        table = np.asarray(table)
        if table.ndim == 1:
            # a bare vector is indexed by its position
            table = np.column_stack([np.arange(table.shape[0]), table])
        cols = TABLE_COLUMNS.get((name, tname), [f"c{k}" for k in range(table.shape[1])])
        rows = [[int(v) if k == 0 and cols[0] in ("n", "k") else v for k, v in enumerate(r)] for r in table.tolist()]
        out.write_csv(f"{name}_{tname}", cols, rows)
    return rep.summary


def _clt(cfg, stream, out, workers):
    e = cfg.experiment
    rep = clt_experiment(cfg.kernel, cfg.process, e["n"], e["R"], e["K_max"], stream, e["sigma_path"],
                         e["center_R"], e["M"], workers)
    return _report_out(out, rep, "clt")


def _lln(cfg, stream, out, workers):
    e = cfg.experiment
    rep = lln_experiment(cfg.kernel, cfg.process, e["p"], e["n_max"], e["checkpoints"], e["R"], stream,
                         e["center_R"], workers)
    return _report_out(out, rep, "lln")


def _lil(cfg, stream, out, workers):
    e = cfg.experiment
    rep = lil_statistic(cfg.kernel, cfg.process, e["n_max"], e["R"], stream, e["checkpoints"],
                        e["center_R"], workers)
    return _report_out(out, rep, "lil")


def _remainders(cfg, stream, out, workers):
    e = cfg.experiment
    rep = remainder_decay(cfg.kernel, cfg.process, e["n_grid"], e["L_max"], e["R"], stream, e["M"],
                          e["tail_samples"], e["center_samples"], e["theta_R"], workers)
    return _report_out(out, rep, "remainders")


HANDLERS = {"simulate": _simulate, "decompose": _decompose, "theta": _theta, "clt": _clt, "lln": _lln,
            "lil": _lil, "remainders": _remainders}


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="bershift", description="U-statistics of functionals of i.i.d. data")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--seed", type=_seed, default=None, help="overrides experiment.seed")
        p.add_argument("--out", default=None, metavar="DIR",
                       help=f"output directory (default ${OUT_DIR_ENV} or the current directory)")
        p.add_argument("--workers", type=int, default=1, metavar="N")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        cfg = load_config(args.config, args.command)
    except ConfigurationError as exc:
        print(f"bershift: configuration error [{exc.key}]: {exc}", file=sys.stderr)
        return 3
    seed = cfg.experiment["seed"] if args.seed is None else args.seed
    out_dir = args.out or os.environ.get(OUT_DIR_ENV) or "."
    out = Output(out_dir, args.command, cfg, seed)
    start = time.perf_counter()
    try:
        summary = HANDLERS[args.command](cfg, Stream(seed), out, max(1, args.workers))
        out.write_summary(summary)
    except ConfigurationError as exc:
        print(f"bershift: configuration error [{exc.key}]: {exc}", file=sys.stderr)
        return 3
    except DegenerateVarianceError as exc:
        print(f"bershift: {exc}", file=sys.stderr)
        return 4
    except (NumericError, FloatingPointError, ValueError) as exc:
        print(f"bershift: numeric failure: {exc}", file=sys.stderr)
        return 4
    print(f"bershift {args.command}: done in {time.perf_counter() - start:.2f}s, outputs in {out_dir}",
          file=sys.stderr)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
