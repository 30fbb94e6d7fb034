"""Command-line interface.

    wavemvsvm train        fit a model and write it as JSON
    wavemvsvm predict      label new samples with a saved model
    wavemvsvm eval         70:30 split, fit, test-set report
    wavemvsvm tune         k-fold grid search
    wavemvsvm noise-sweep  eval with flipped training labels at several rates
    wavemvsvm stats        Friedman / Nemenyi over an accuracy matrix
    wavemvsvm trace        write the solver's convergence trace

Precedence of settings: command-line flags, then ``--config`` file
(``key = value`` lines, keys spelled like the long flags without dashes
prefix, e.g. ``gamma = 2`` or ``synthesize-view2 = 0.95``), then defaults.
Exit status: 0 success, 1 runtime or numerical error, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
import time
from dataclasses import fields

import numpy as np

from . import __version__
from .data import (ZERO_ONE, PCAProjection, Standardizer, TwoViewDataset, inject_label_noise,
                   load_csv, train_test_split)
from .errors import InputError, WaveMvSVMError
from .evaluation import Q_ALPHA, evaluate, friedman_from_ranks, kfold_grid_search, nemenyi_cd, rank_table
from .model import decision_function, fit, load, save, sign_with_ties
from .solver import Hyperparams

DEFAULT_SEED = 42
DEFAULT_NOISE_RATES = (0.05, 0.10, 0.15, 0.20)

# flag name -> Hyperparams keyword (wave parameters go through Hyperparams.replace)
HP_FLAGS = {
    "gamma": float, "c1": float, "c2": float, "d": float,
    "lam1": float, "a1": float, "lam2": float, "a2": float,
    "kappa1": float, "kappa2": float, "kappa3": float, "kappa4": float,
    "tau1": float, "tau2": float, "gd-rate": float, "t1-max": int, "t2-max": int,
    "tol-obj": float, "tol-res": float, "tol-grad": float, "sigma": float, "sigma2": float,
}
GRID_FLAGS = ("sigma", "c1", "c2", "d", "gamma", "lam", "a")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _power_list(text):
    """Comma list of numbers; ``2^k`` allowed, and ``2^a:2^b`` expands integer powers."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = part.split(":")
            if not (lo.startswith("2^") and hi.startswith("2^")):
                raise argparse.ArgumentTypeError(f"ranges must be powers of two, got {part!r}")
            out.extend(2.0**k for k in range(int(lo[2:]), int(hi[2:]) + 1))
        elif part.startswith("2^"):
            out.append(2.0 ** float(part[2:]))
        else:
            out.append(float(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _add_data_args(p, labels=True):
    p.add_argument("--view1", required=True, help="view-1 CSV")
    p.add_argument("--view2", help="view-2 CSV (rows aligned with view 1)")
    p.add_argument("--synthesize-view2", type=float, metavar="THRESH",
                   help="build view 2 from PCA scores of view 1 at this explained-variance fraction")
    p.add_argument("--has-header", action="store_true", help="input CSVs start with a header row")
    if labels:
        p.add_argument("--labels-in-view1", action="store_true",
                       help="view-1 CSV carries the label as its last column (view-2 CSV then does too)")
        p.add_argument("--labels", help="separate one-column label CSV")
        p.add_argument("--zero-one-labels", action="store_true", help="map labels 0/1 to -1/+1")


def _add_hp_args(p):
    g = p.add_argument_group("hyperparameters")
    for name, typ in HP_FLAGS.items():
        g.add_argument(f"--{name}", type=typ)


def _add_common(p):
    p.add_argument("--config", help="key = value file with defaults for any flag")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)


def build_parser():
    parser = _Parser(prog="wavemvsvm", description="Two-view kernel classifier with the wave loss.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a model")
    _add_data_args(p)
    _add_hp_args(p)
    _add_common(p)
    p.add_argument("--standardize", action="store_true", help="z-score features (stats stored in the model)")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--trace-out", help="also write the convergence trace CSV")

    p = sub.add_parser("predict", help="predict labels with a saved model")
    _add_data_args(p, labels=False)
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="predictions CSV, one label per row")
    p.add_argument("--with-scores", action="store_true", help="add the decision value as a second column")

    for name, helptext in (("eval", "hold-out evaluation"), ("noise-sweep", "hold-out evaluation under label noise"),
                           ("trace", "convergence trace on the full data")):
        p = sub.add_parser(name, help=helptext)
        _add_data_args(p)
        _add_hp_args(p)
        _add_common(p)
        p.add_argument("--out-dir", required=True)
        if name != "trace":
            p.add_argument("--train-fraction", type=float, default=0.7)
            p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)
        else:
            p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=False)
        if name == "noise-sweep":
            p.add_argument("--rates", type=_power_list, default=list(DEFAULT_NOISE_RATES))

    p = sub.add_parser("tune", help="k-fold grid search")
    _add_data_args(p)
    _add_hp_args(p)
    _add_common(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)
    for name in GRID_FLAGS:
        p.add_argument(f"--grid-{name}", type=_power_list, metavar="LIST",
                       help="comma list, 2^k terms and 2^a:2^b ranges allowed")

    p = sub.add_parser("stats", help="Friedman and Nemenyi statistics")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--acc", help="CSV: one row per model, first column = name, then one accuracy per dataset")
    src.add_argument("--avg-ranks", type=_power_list, help="comma list of average ranks (needs --n-datasets)")
    p.add_argument("--n-datasets", type=int)
    p.add_argument("--names", help="comma list of model names for --avg-ranks")
    p.add_argument("--alpha", type=float, default=0.05, choices=sorted(Q_ALPHA))
    p.add_argument("--q-alpha", type=float, help="override the tabulated critical value")
    p.add_argument("--out-dir", required=True)
    _add_common(p)
    return parser


def _read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser, argv):
    """Install config-file values as sub-command defaults, then parse."""
    path = _config_path(argv)
    command = argv[0] if argv else None
    subparsers = parser._subparsers._group_actions[0].choices
    if path is None or command not in subparsers:
        return parser.parse_args(argv)
    try:
        config = _read_config(path)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    subparser = subparsers[command]
    actions = {a.dest: a for a in subparser._actions}
    unknown = set(config) - set(actions) - {"config"}
    if unknown:
        raise UsageError(f"{path}: unknown keys {sorted(unknown)}")
    defaults = {}
    for key, raw in config.items():
        if key == "config":
            continue
        action = actions[key]
        if action.nargs == 0:  # boolean flags
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{path}: bad value for {key}: {exc}") from None
        else:
            defaults[key] = raw
        action.required = False
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _hyperparams(args, **overrides) -> Hyperparams:
    changes = {}
    for name in HP_FLAGS:
        value = getattr(args, name.replace("-", "_"), None)
        if value is not None:
            changes[name.replace("-", "_")] = value
    changes.update(overrides)
    return Hyperparams().replace(**changes)


def _load_dataset(args):
    """Dataset plus the PCA projection used to build view 2 (or None)."""
    label_map = ZERO_ONE if args.zero_one_labels else None
    if args.labels_in_view1:
        X1, y = load_csv(args.view1, args.has_header, -1, label_map)
    elif args.labels:
        X1, _ = load_csv(args.view1, args.has_header, None)
        y_raw, _ = load_csv(args.labels, args.has_header, None)
        if y_raw.shape[1] != 1:
            raise InputError(f"{args.labels}: expected a single label column")
        mapping = label_map or {-1.0: -1, 1.0: 1}
        try:
            y = np.array([mapping[v] for v in y_raw[:, 0]], dtype=float)
        except KeyError as exc:
            raise InputError(f"{args.labels}: unknown label {exc.args[0]:g}") from None
    else:
        raise UsageError("labels required: pass --labels-in-view1 or --labels")
    X2, projection = _second_view(args, X1, fit_projection=True)
    return TwoViewDataset(X1, X2, y), projection


def _second_view(args, X1, fit_projection, projection=None):
    if args.view2 and args.synthesize_view2 is not None:
        raise UsageError("--view2 and --synthesize-view2 are mutually exclusive")
    if args.view2:
        labelled = getattr(args, "labels_in_view1", False)
        X2, _ = load_csv(args.view2, args.has_header, -1 if labelled else None, None if not labelled
                         else (ZERO_ONE if args.zero_one_labels else None))
        return X2, None
    if fit_projection:
        if args.synthesize_view2 is None:
            raise UsageError("view 2 required: pass --view2 or --synthesize-view2")
        projection = PCAProjection.fit(X1, args.synthesize_view2)
    if projection is None:
        raise UsageError("model has no stored view-2 projection; pass --view2")
    return projection.transform(X1), projection


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _write_manifest(path, args, started, extra=None):
    config = {k: v for k, v in sorted(vars(args).items())}
    manifest = {
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": f"v{__version__}",
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
        "wall_clock_seconds": time.time() - started,
    }
    if any(hasattr(args, name.replace("-", "_")) for name in HP_FLAGS):
        manifest["hyperparams"] = _hyperparams(args).to_dict()
    if extra:
        manifest.update(extra)
    _write_json(path, manifest)


def _seeds(seed, count):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def _holdout(dataset, args, hp, noise_rate, seeds):
    split_seed, noise_seed = seeds
    train, test = train_test_split(dataset, args.train_fraction, split_seed)
    if noise_rate > 0:
        train = train.with_labels(inject_label_noise(train.labels, noise_rate, noise_seed))
    if args.standardize:
        stats = Standardizer.fit(train)
        train, test = stats.transform(train), stats.transform(test)
    model, trace = fit(train, hp)
    scores = decision_function(model, test.view1, test.view2)
    return evaluate(scores, test.labels), trace


def cmd_train(args):
    dataset, projection = _load_dataset(args)
    hp = _hyperparams(args)
    prep = {}
    if projection is not None:
        prep["view2_pca"] = projection.to_dict()
    if args.standardize:
        stats = Standardizer.fit(dataset)
        dataset = stats.transform(dataset)
        prep["standardize"] = stats.to_dict()
    model, trace = fit(dataset, hp)
    model = type(model)(**{f.name: getattr(model, f.name) for f in fields(model)} | {"preprocessing": prep})
    save(model, args.out)
    if args.trace_out:
        trace.to_csv(args.trace_out)
    return args.out, {"iterations": len(trace), "converged": trace.converged}


def cmd_predict(args):
    model = load(args.model)
    X1, _ = load_csv(args.view1, args.has_header, None)
    prep = model.preprocessing
    projection = PCAProjection.from_dict(prep["view2_pca"]) if "view2_pca" in prep else None
    X2, _ = _second_view(args, X1, fit_projection=False, projection=projection)
    if "standardize" in prep:
        stats = Standardizer.from_dict(prep["standardize"])
        X1, X2 = stats.transform_view(1, X1), stats.transform_view(2, X2)
    scores = np.atleast_1d(decision_function(model, X1, X2))
    labels = sign_with_ties(scores)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for lab, s in zip(labels, scores):
            writer.writerow([int(lab), repr(float(s))] if args.with_scores else [int(lab)])
    return args.out, {"rows": int(labels.size)}


def _eval_outputs(out_dir, report, prefix=""):
    report.write_roc_csv(os.path.join(out_dir, f"{prefix}roc.csv"))
    _write_json(os.path.join(out_dir, f"{prefix}summary.json"), report.to_dict())


def cmd_eval(args):
    dataset, _ = _load_dataset(args)
    os.makedirs(args.out_dir, exist_ok=True)
    report, _ = _holdout(dataset, args, _hyperparams(args), 0.0, _seeds(args.seed, 2))
    _eval_outputs(args.out_dir, report)
    return args.out_dir, report.to_dict()


def cmd_noise_sweep(args):
    dataset, _ = _load_dataset(args)
    os.makedirs(args.out_dir, exist_ok=True)
    hp = _hyperparams(args)
    seeds = _seeds(args.seed, 2)
    rows = []
    for rate in args.rates:
        report, _ = _holdout(dataset, args, hp, rate, seeds)
        _eval_outputs(args.out_dir, report, prefix=f"rate_{rate:g}_")
        rows.append((rate, report.accuracy, report.auc))
    with open(os.path.join(args.out_dir, "noise.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rate", "accuracy", "auc"])
        for r in rows:
            writer.writerow([repr(float(v)) for v in r])
    return args.out_dir, {"rates": [r[0] for r in rows], "accuracy": [r[1] for r in rows]}


def cmd_tune(args):
    dataset, _ = _load_dataset(args)
    if args.standardize:
        dataset = Standardizer.fit(dataset).transform(dataset)
    os.makedirs(args.out_dir, exist_ok=True)
    base = _hyperparams(args)
    axes = []
    for name in GRID_FLAGS:
        values = getattr(args, f"grid_{name}")
        if values is None:
            continue
        if name == "lam":
            axes.append([{"lam1": v, "lam2": v} for v in values])
        elif name == "a":
            axes.append([{"a1": v, "a2": v} for v in values])
        else:
            axes.append([{name: v} for v in values])
    grid = [base.replace(**{k: v for part in combo for k, v in part.items()}) for combo in itertools.product(*axes)]
    best, means = kfold_grid_search(dataset, grid, args.folds, _seeds(args.seed, 1)[0], n_jobs=args.jobs)
    with open(os.path.join(args.out_dir, "grid.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sigma", "c1", "c2", "d", "gamma", "lam1", "a1", "lam2", "a2", "mean_accuracy"])
        for hp, m in zip(grid, means):
            writer.writerow([repr(float(v)) for v in (hp.sigma, hp.c1, hp.c2, hp.d, hp.gamma, hp.wave1.lam,
                                                      hp.wave1.a, hp.wave2.lam, hp.wave2.a, m)])
    _write_json(os.path.join(args.out_dir, "best.json"), best.to_dict())
    return args.out_dir, {"best_mean_accuracy": float(np.max(means)), "n_configs": len(grid)}


def cmd_trace(args):
    dataset, _ = _load_dataset(args)
    if args.standardize:
        dataset = Standardizer.fit(dataset).transform(dataset)
    os.makedirs(args.out_dir, exist_ok=True)
    _, trace = fit(dataset, _hyperparams(args))
    trace.to_csv(os.path.join(args.out_dir, "trace.csv"))
    return args.out_dir, {"iterations": len(trace), "converged": trace.converged}


def _read_accuracy_matrix(path):
    names, rows = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row:
                continue
            try:
                values = [float(v) for v in row[1:]]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise InputError(f"{path}: line {lineno}: non-numeric accuracy") from None
            names.append(row[0])
            rows.append(values)
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: rows have different numbers of datasets")
    return names, np.array(rows)


def cmd_stats(args):
    os.makedirs(args.out_dir, exist_ok=True)
    if args.acc:
        names, acc = _read_accuracy_matrix(args.acc)
        table = rank_table(acc, names, q_alpha=args.q_alpha, alpha=args.alpha)
        avg, chi2, ff, cd, n_data = table.avg_ranks, table.chi2_f, table.f_f, table.cd, acc.shape[1]
    else:
        if args.n_datasets is None:
            raise UsageError("--avg-ranks needs --n-datasets")
        avg = np.asarray(args.avg_ranks)
        p = avg.size
        names = args.names.split(",") if args.names else [f"model{i + 1}" for i in range(p)]
        if len(names) != p:
            raise UsageError("--names must list one name per rank")
        chi2, ff = friedman_from_ranks(avg, args.n_datasets)
        q = args.q_alpha if args.q_alpha is not None else Q_ALPHA[args.alpha].get(p)
        if q is None:
            raise UsageError(f"no tabulated q_alpha for p={p}; pass --q-alpha")
        cd, n_data = nemenyi_cd(p, args.n_datasets, q), args.n_datasets
    with open(os.path.join(args.out_dir, "ranks.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "avg_rank"])
        for name, r in zip(names, avg):
            writer.writerow([name, repr(float(r))])
    with open(os.path.join(args.out_dir, "stats.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["chi2_f", "f_f", "cd"])
        writer.writerow([repr(float(chi2)), repr(float(ff)), repr(float(cd))])
    summary = {"chi2_f": chi2, "f_f": ff, "cd": cd, "n_datasets": n_data,
               "avg_ranks": dict(zip(names, map(float, avg)))}
    _write_json(os.path.join(args.out_dir, "summary.json"), summary)
    return args.out_dir, summary


COMMANDS = {
    "train": cmd_train, "predict": cmd_predict, "eval": cmd_eval, "tune": cmd_tune,
    "noise-sweep": cmd_noise_sweep, "stats": cmd_stats, "trace": cmd_trace,
}


def _manifest_path(target):
    if os.path.isdir(target):
        return os.path.join(target, "manifest.json")
    return f"{target}.manifest.json"


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    started = time.time()
    try:
        args = _apply_config(parser, argv)
        target, extra = COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (WaveMvSVMError, OSError, ArithmeticError) as exc:
        print(f"wavemvsvm {argv[0] if argv else ''}: error: {exc}", file=sys.stderr)
        return 1
    _write_manifest(_manifest_path(target), args, started, {"result": extra})
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
