"""Command-line experiment driver.

    risbeam generate  [--config F] [--seed S] [--snr-db X] [--out DIR]
    risbeam train     [--config F] [--tau T] [--dataset F] [--out DIR]
    risbeam eval      [--config F] [--tau T] [--methods a,b] [--budget K] [--out DIR]
    risbeam sweep     --n-dataset 250,500,1000,2000 [--tau T] [--out DIR]
    risbeam plot      CSV [CSV ...] [--out FILE]

Artifacts live in the output directory: ``codebook.txt``, ``dataset.txt``,
``qtable_tau<T>.txt``, ``training_curve_tau<T>.csv``, ``eval.csv`` and the
matching SVG plots.  ``sweep`` repeats generate/train/eval for several
dataset sizes and writes ``sweep.csv``.  Exit codes: 0 ok, 2 config error, 3 incompatible
artifacts, 4 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import svgplot
from .belief import (
    TrainingDataset,
    dataset_channels,
    generate_dataset,
    load_dataset,
    resolve_eps_floor,
    save_dataset,
)
from .chansim import channel_rng, sample_channel
from .codebook import Codebook, build_codebook, load_codebook, save_codebook
from .config import ConfigError, ExperimentConfig, dump_config, load_config
from .errors import FormatError, IncompatibleArtifactError
from .mdp import build_state_space
from .protocol import AcquisitionStrategy, narrow_strengths, run_episode
from .qlearner import QTable, extract_policy, load_qtable, save_qtable, train

log = logging.getLogger("risbeam")

EXIT_OK, EXIT_CONFIG, EXIT_INCOMPATIBLE, EXIT_IO = 0, 2, 3, 4

TRAIN_HEADER = ["epoch", "mean_length", "terminal_fraction"]
EVAL_HEADER = ["method", "k", "mean_rho", "stderr"]
SWEEP_HEADER = ["n_dataset", "method", "k", "mean_rho", "stderr"]
METHOD_TAGS = {"exhaustive": 1, "hierarchical": 2, "random": 3, "qlearning": 4}


def _g(x) -> str:
    return format(float(x), ".17g")


def _tau_tag(tau: float) -> str:
    return format(tau, "g")


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(buf.getvalue())


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="ascii", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise FormatError("empty CSV", path)
    header, body = rows[0], rows[1:]
    if not body:
        raise FormatError("CSV has a header but no data rows", path)
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise FormatError(f"expected {len(header)} columns, found {len(r)}", path, i)
    return header, body


# -- artifact helpers ------------------------------------------------------------


def _codebook_for(cfg: ExperimentConfig, out: Path) -> Codebook:
    path = out / "codebook.txt"
    if path.exists():
        cb = load_codebook(path)
        if cb.N != cfg.N or cb.layers != cfg.L:
            raise IncompatibleArtifactError(
                f"{path} is for N={cb.N}, L={cb.layers}; config says N={cfg.N}, L={cfg.L}"
            )
        return cb
    return build_codebook(cfg.system(), cfg.L, cfg.resolved_deact_seed())


def _load_ds(cfg: ExperimentConfig, out: Path, path=None) -> tuple[TrainingDataset, Codebook]:
    ds = load_dataset(path or out / "dataset.txt")
    cb = _codebook_for(cfg, out)
    ds.check_codebook(cb)
    if ds.meta.N != cfg.N or ds.meta.M != cfg.M:
        raise IncompatibleArtifactError(
            f"dataset is for M={ds.meta.M}, N={ds.meta.N}; config says M={cfg.M}, N={cfg.N}"
        )
    return ds, cb


def _eps_floor(cfg: ExperimentConfig, ds: TrainingDataset) -> float:
    return resolve_eps_floor(ds, cfg.eps_floor, cfg.eps_floor_scale)


# -- commands --------------------------------------------------------------------


def cmd_generate(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    sysc = cfg.system()
    cb = build_codebook(sysc, cfg.L, cfg.resolved_deact_seed())
    rng = np.random.default_rng([cfg.seed, 1])
    ds = generate_dataset(sysc, cb, cfg.n_dataset, rng, noiseless=cfg.noiseless_dataset, seed=cfg.seed)
    save_codebook(cb, out / "codebook.txt")
    save_dataset(ds, out / "dataset.txt")
    (out / "config_used.txt").write_text(dump_config(cfg), encoding="ascii")
    counts = ds.class_counts()
    print(f"dataset: n={ds.n} Np={ds.Np} Nc={ds.Nc} snr_db={sysc.snr_db:g} -> {out / 'dataset.txt'}")
    print("class counts: " + " ".join(f"{c + 1}:{n}" for c, n in enumerate(counts)))
    return out / "dataset.txt"


def cmd_train(cfg: ExperimentConfig, dataset_path=None, taus=None) -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ds, cb = _load_ds(cfg, out, dataset_path)
    eps = _eps_floor(cfg, ds)
    hyper = replace(cfg.hyper(), eps_floor=eps)
    written = []
    curves = {}
    for tau in taus or cfg.train_taus:
        ss = build_state_space(ds.Nc, cfg.q_grid, tau)
        table, _, curve = train(ds, ss, cb, hyper)
        tag = _tau_tag(tau)
        save_qtable(table, out / f"qtable_tau{tag}.txt")
        rows = [
            [e + 1, _g(m), _g(f)]
            for e, (m, f) in enumerate(zip(curve.mean_length, curve.terminal_fraction))
        ]
        csv_path = out / f"training_curve_tau{tag}.csv"
        write_csv(csv_path, TRAIN_HEADER, rows)
        written.append(csv_path)
        curves[f"tau={tag}"] = (list(range(1, len(rows) + 1)), list(curve.mean_length))
        print(
            f"tau={tag}: states={ss.n_states} mean length epoch 1 = {curve.mean_length[0]:.3f}, "
            f"final = {curve.mean_length[-1]:.3f} -> {out / f'qtable_tau{tag}.txt'}"
        )
    svg = svgplot.line_plot(
        curves, "Average pilots to confidence during training", "epoch", "mean episode length",
        caption=f"n_dataset={ds.n}, alpha={hyper.alpha:g}, epsilon={hyper.epsilon:g}",
    )
    (out / "training_curve.svg").write_text(svg, encoding="ascii")
    return written


def evaluate(cfg: ExperimentConfig, ds: TrainingDataset, cb: Codebook, table: QTable | None, snr_db=None):
    """Mean relative strength per (method, pilot budget); returns EvalTable rows."""
    sysc = cfg.system(snr_db)
    ss = build_state_space(ds.Nc, cfg.q_grid, cfg.tau)
    eps = _eps_floor(cfg, ds)
    budget = cfg.resolved_budget()
    policy = extract_policy(table, ss) if table is not None else None
    eval_seed = cfg.resolved_eval_seed()
    n = cfg.n_eval_channels
    if cfg.eval_in_dataset:
        pool = dataset_channels(ds)
        channels = [pool[i % len(pool)] for i in range(n)]
    else:
        channels = [sample_channel(channel_rng(eval_seed, i)) for i in range(n)]
    strengths = [narrow_strengths(sysc, ch, cb) for ch in channels]

    rows = []
    for method in cfg.methods:
        if method == "qlearning" and policy is None:
            raise IncompatibleArtifactError("the qlearning method needs a trained Q-table")
        strat = AcquisitionStrategy(method, policy if method == "qlearning" else None)
        rho = np.empty((n, budget))
        for i, ch in enumerate(channels):
            rng = channel_rng(eval_seed, i, METHOD_TAGS[method])
            res = run_episode(sysc, ch, cb, ds, ss, strat, budget, rng, eps)
            s = strengths[i]
            trace = res.declared_trace
            # the run with budget k is the k-pilot prefix of this run
            rho[i] = [s[trace[min(k, len(trace)) - 1]] / s.max() for k in range(1, budget + 1)]
        mean = rho.mean(axis=0)
        se = rho.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(budget)
        for k in range(budget):
            rows.append([method, k + 1, float(mean[k]), float(se[k])])
        log.info("%s: mean rho %s", method, np.round(mean, 3))
    return rows


def cmd_eval(cfg: ExperimentConfig, dataset_path=None, qtable_path=None) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ds, cb = _load_ds(cfg, out, dataset_path)
    table = None
    if "qlearning" in cfg.methods:
        ss = build_state_space(ds.Nc, cfg.q_grid, cfg.tau)
        table = load_qtable(qtable_path or out / f"qtable_tau{_tau_tag(cfg.tau)}.txt", ss, ds)
    first = None
    for j, snr in enumerate(cfg.snr_db):
        rows = evaluate(cfg, ds, cb, table, snr)
        name = "eval" if j == 0 else f"eval_snr{snr:g}dB"
        path = out / f"{name}.csv"
        write_csv(path, EVAL_HEADER, [[m, k, _g(r), _g(s)] for m, k, r, s in rows])
        _plot_file(path, out / f"{name}.svg")
        print(f"snr_db={snr:g}: {len(rows)} rows -> {path}")
        for method in cfg.methods:
            vals = [r for m, _, r, _ in rows if m == method]
            print(f"  {method:>12}: " + " ".join(f"{v:.3f}" for v in vals))
        first = first or path
    return first


def cmd_sweep(cfg: ExperimentConfig, sizes) -> Path:
    """Dataset-size sensitivity: fresh dataset and Q-table per size, evaluated at ``cfg.tau``."""
    out = Path(cfg.out)
    rows = []
    for n in sizes:
        sub = replace(cfg, n_dataset=n, out=str(out / f"n{n}"), train_taus=(cfg.tau,))
        cmd_generate(sub)
        cmd_train(sub)
        ds, cb = _load_ds(sub, Path(sub.out))
        table = None
        if "qlearning" in sub.methods:
            ss = build_state_space(ds.Nc, sub.q_grid, sub.tau)
            table = load_qtable(Path(sub.out) / f"qtable_tau{_tau_tag(sub.tau)}.txt", ss, ds)
        for m, k, r, se in evaluate(sub, ds, cb, table):
            rows.append([n, m, k, _g(r), _g(se)])
    path = out / "sweep.csv"
    write_csv(path, SWEEP_HEADER, rows)
    print(f"sweep over n_dataset={','.join(map(str, sizes))} -> {path}")
    return path


def _series_from_csv(path):
    header, body = read_csv(path)
    if header == EVAL_HEADER:
        series = {}
        for method, k, rho, _ in body:
            xs, ys = series.setdefault(method, ([], []))
            xs.append(int(k))
            ys.append(float(rho))
        return series, "eval"
    if header == TRAIN_HEADER:
        xs = [int(r[0]) for r in body]
        ys = [float(r[1]) for r in body]
        label = Path(path).stem.replace("training_curve_", "")
        return {label: (xs, ys)}, "train"
    if header == SWEEP_HEADER:
        series = {}
        for n, method, k, rho, _ in body:
            xs, ys = series.setdefault(f"{method} n={n}", ([], []))
            xs.append(int(k))
            ys.append(float(rho))
        return series, "eval"
    raise FormatError(f"unrecognised CSV header {header}", path, 1)


def _plot_file(csv_paths, svg_path) -> Path:
    if isinstance(csv_paths, (str, os.PathLike)):
        csv_paths = [csv_paths]
    series, kind = {}, None
    for p in csv_paths:
        try:
            s, k = _series_from_csv(p)
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"malformed CSV: {exc}", p) from None
        if kind is not None and k != kind:
            raise FormatError("cannot mix evaluation and training CSVs in one plot", p)
        kind = k
        series.update(s)
    if kind == "eval":
        svg = svgplot.line_plot(
            series, "Relative channel strength vs. pilots", "pilots L_p",
            "mean relative strength", caption="exhaustive / hierarchical / random / Q-learning acquisition",
            ylim=(0.0, 1.0),
        )
    else:
        svg = svgplot.line_plot(series, "Average pilots to confidence during training", "epoch",
                                "mean episode length")
    Path(svg_path).write_text(svg, encoding="ascii")
    return Path(svg_path)


def cmd_plot(csv_paths, svg_path=None) -> Path:
    if isinstance(csv_paths, (str, os.PathLike)):
        csv_paths = [csv_paths]
    svg_path = svg_path or Path(csv_paths[0]).with_suffix(".svg")
    return _plot_file(csv_paths, svg_path)


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--snr-db", type=float, dest="snr_db")
    common.add_argument("--tau", type=float)
    common.add_argument("--out", help="output directory")
    common.add_argument("--methods", help="comma-separated subset of exhaustive,hierarchical,random,qlearning")
    common.add_argument("--budget", type=int, help="largest pilot budget to evaluate")
    common.add_argument("--n-dataset", dest="n_dataset", help="dataset size (sweep: comma list)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="risbeam", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="simulate the training dataset")
    t = sub.add_parser("train", parents=[common], help="Q-learn the pilot policy (one table per tau)")
    t.add_argument("--dataset")
    e = sub.add_parser("eval", parents=[common], help="compare acquisition methods on fresh channels")
    e.add_argument("--dataset")
    e.add_argument("--qtable")
    sub.add_parser("sweep", parents=[common], help="dataset-size sensitivity sweep")
    pl = sub.add_parser("plot", help="render CSV output as SVG")
    pl.add_argument("csv", nargs="+")
    pl.add_argument("--out", dest="svg")
    return p


def _config_from_args(args) -> ExperimentConfig:
    overrides = {"seed": args.seed, "out": args.out, "budget": args.budget}
    sizes = _sizes(args.n_dataset)
    if sizes:
        overrides["n_dataset"] = sizes[0]
    if args.snr_db is not None:
        overrides["snr_db"] = (args.snr_db,)
    if args.tau is not None:
        overrides["tau"] = args.tau
        overrides["train_taus"] = (args.tau,)
    if args.methods:
        overrides["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    return load_config(args.config, overrides)


def _sizes(text):
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--n-dataset expects integers, got {text!r}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "plot":
            path = cmd_plot(args.csv, args.svg)
            print(f"wrote {path}")
            return EXIT_OK
        cfg = _config_from_args(args)
        if args.command == "generate":
            cmd_generate(cfg)
        elif args.command == "train":
            cmd_train(cfg, args.dataset)
        elif args.command == "eval":
            cmd_eval(cfg, args.dataset, args.qtable)
        elif args.command == "sweep":
            sizes = _sizes(args.n_dataset) or [cfg.n_dataset]
            for n in sizes:
                replace(cfg, n_dataset=n)  # validates each size up front
            cmd_sweep(cfg, sizes)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IncompatibleArtifactError as exc:
        print(f"incompatible artifacts: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (OSError, FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
