"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 fit/estimation error,
3 acceptance failure (``reproduce --check``).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, experiments, neural, stochastic, svm
from .datasets import DATASET_NAMES, descriptor, load_dataset, load_file
from .errors import (DegenerateSeriesError, DomainError, EstimationError, FactorizationError,
                     IntegrityError, RankDeficiencyError, SearchError, StateError, TrainingError)
from .metrics import FIELDS, evaluate
from .series import (BoxCox, Difference, Log10, NaturalLog, RangeRescale, ScaleDivide,
                     TransformPipeline, parse_values)

EXIT_OK, EXIT_USAGE, EXIT_FIT, EXIT_ACCEPTANCE = 0, 1, 2, 3
FIT_ERRORS = (EstimationError, TrainingError, FactorizationError, RankDeficiencyError,
              SearchError, DegenerateSeriesError, DomainError, IntegrityError, StateError)
GLOBAL_KEYS = ("data", "seed", "out")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ----------------------------------------------------------------------------
# argument types


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).replace(" ", "").split(",") if v]


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).replace(" ", "").split(",") if v]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def parse_transform(spec: str | None) -> TransformPipeline:
    """Comma-separated steps: log10, log, div:K, boxcox:L, rescale:LO:HI, diff:LAG."""
    steps = []
    for tok in (spec or "").replace(" ", "").split(","):
        if not tok:
            continue
        name, *args = tok.split(":")
        try:
            if name == "log10" and not args:
                steps.append(Log10())
            elif name in ("log", "ln") and not args:
                steps.append(NaturalLog())
            elif name == "div" and len(args) == 1:
                steps.append(ScaleDivide(float(args[0])))
            elif name == "boxcox" and len(args) == 1:
                steps.append(BoxCox(float(args[0])))
            elif name == "rescale" and len(args) == 2:
                steps.append(RangeRescale(float(args[0]), float(args[1])))
            elif name == "diff" and len(args) <= 1:
                steps.append(Difference(int(args[0]) if args else 1))
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"bad transform step {tok!r}") from None
    return TransformPipeline(steps)


def read_config(path) -> dict:
    """Plain-text key=value lines; '#' starts a comment. Keys use dashes or underscores."""
    out = {}
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{i}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


# ----------------------------------------------------------------------------
# parser


def _data_opts(p):
    p.add_argument("--dataset", choices=DATASET_NAMES, help="embedded dataset")
    p.add_argument("--period", type=int, help="seasonal period for --data files")
    p.add_argument("--n-train", type=int, help="training length (default: dataset split, or whole file)")


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand's copy of these flags from resetting a value
    # given before the subcommand name
    glob = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    glob.add_argument("--data", help="one-value-per-line series file (overrides --dataset)")
    glob.add_argument("--seed", type=int, help="base random seed (default 0)")
    glob.add_argument("--out", choices=("json", "csv"), help="output format")
    glob.add_argument("--config", help="key=value configuration file")

    parser = _Parser(prog="tsforecast", description="Time series forecasting toolkit.", parents=[glob])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def cmd(name, help_):
        return sub.add_parser(name, help=help_, parents=[glob])

    for name in ("acf", "pacf"):
        p = cmd(name, f"sample {name.upper()} with 95% bands")
        _data_opts(p)
        p.add_argument("--transform", help="e.g. log10 or log,diff:1,diff:12")
        p.add_argument("--max-lag", type=int)
        p.add_argument("--output", help="write here instead of stdout")

    p = cmd("stationarity", "Dickey-Fuller unit-root check")
    _data_opts(p)
    p.add_argument("--transform")

    p = cmd("fit", "fit a model and write its JSON")
    _data_opts(p)
    p.add_argument("--model", choices=("ar", "sarima", "fnn", "tlnn", "sann", "svm"))
    p.add_argument("--transform", help="model transform (differencing for SARIMA comes from --order)")
    p.add_argument("--p", type=int, help="AR order (ar) or input count (fnn)")
    p.add_argument("--order", type=_ints, help="p,d,q")
    p.add_argument("--seasonal", type=_ints, help="P,D,Q,s")
    p.add_argument("--lags", type=_ints, help="tlnn lags, e.g. 1,2,12")
    p.add_argument("--hidden", type=int, default=2)
    p.add_argument("--learning-rate", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=5000)
    p.add_argument("--sigma", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--n", type=int, help="svm input dimension")
    p.add_argument("--N", type=int, help="svm window size (default n_train - n)")
    p.add_argument("--output", help="model JSON path (default stdout)")

    p = cmd("forecast", "forecast from a fitted model")
    _data_opts(p)
    p.add_argument("--model-file")
    p.add_argument("--horizon", type=int, help="default: dataset test length")
    p.add_argument("--output")

    p = cmd("evaluate", "score forecasts against actuals")
    p.add_argument("--actual", help="file, one value per line")
    p.add_argument("--forecast", help="file, one value per line")
    p.add_argument("--theil-u1", type=_bool, nargs="?", const=True, default=False,
                   help="also report the sum-denominator Theil U")

    p = cmd("grid-search", "LS-SVM hyper-parameter search by rolling-origin validation")
    _data_opts(p)
    p.add_argument("--transform")
    p.add_argument("--sigma-grid", type=_floats)
    p.add_argument("--gamma-grid", type=_floats)
    p.add_argument("--n-grid", type=_ints)
    p.add_argument("--holdout", type=float, default=0.2)
    p.add_argument("--workers", type=int, default=1)

    p = cmd("reproduce", "rerun the benchmark tables and compare to published values")
    p.add_argument("table", nargs="?", default="all",
                   help=f"one of {', '.join(experiments.TABLE_IDS)}, a dataset name, or all")
    p.add_argument("--check", type=_bool, nargs="?", const=True, default=False,
                   help="exit 3 if any acceptance rule fails")
    p.add_argument("--seeds", type=int, default=len(experiments.NEURAL_SEEDS), help="neural seeds per row")
    p.add_argument("--svm-protocol", choices=("recursive", "one-step"), default="recursive")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output")
    p.add_argument("--diagrams", help="directory for per-row index,actual,forecast CSVs")

    p = cmd("emit-diagram", "write index,actual,forecast for one benchmark row")
    p.add_argument("--table")
    p.add_argument("--row", help="row label (default: first row)")
    p.add_argument("--seeds", type=int, default=len(experiments.NEURAL_SEEDS))
    p.add_argument("--svm-protocol", choices=("recursive", "one-step"), default="recursive")
    p.add_argument("--output")
    return parser


# checked after config defaults are merged, so a config file can supply them
_REQUIRED = {
    "fit": ("model",),
    "forecast": ("model_file",),
    "evaluate": ("actual", "forecast"),
    "grid-search": ("sigma_grid", "gamma_grid", "n_grid"),
    "emit-diagram": ("table", "output"),
}


def _fill_globals(args):
    for k in (*GLOBAL_KEYS, "config"):
        if not hasattr(args, k):
            setattr(args, k, None)
    return args


def parse_args(argv):
    parser = build_parser()
    args = _fill_globals(parser.parse_args(argv))
    if args.config:
        cfg = read_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = set(cfg) - known
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {', '.join(sorted(unknown))}")
        # config values act as defaults; explicit flags still win
        subparser.set_defaults(**cfg)
        args = _fill_globals(parser.parse_args(argv))
        for k in GLOBAL_KEYS:
            if getattr(args, k) is None and k in cfg:
                setattr(args, k, int(cfg[k]) if k == "seed" else cfg[k])
    for k in ("check", "theil_u1"):
        if hasattr(args, k):
            setattr(args, k, _bool(getattr(args, k)))
    if args.seed is None:
        args.seed = 0
    missing = [k for k in _REQUIRED.get(args.command, ()) if getattr(args, k) is None]
    if missing:
        raise UsageError(f"{args.command} needs " + ", ".join("--" + k.replace("_", "-") for k in missing))
    return args


# ----------------------------------------------------------------------------
# helpers


def _series(args):
    """(full series, n_train) from --data or --dataset."""
    if args.data:
        s = load_file(args.data, args.period)
        n_train = args.n_train if args.n_train is not None else len(s)
    elif args.dataset:
        d = descriptor(args.dataset)
        s = load_dataset(args.dataset)
        n_train = args.n_train if args.n_train is not None else d.n_train
    else:
        raise UsageError("give --data PATH or --dataset NAME")
    if not 1 <= n_train <= len(s):
        raise UsageError(f"--n-train must be in [1, {len(s)}]")
    return s, n_train


def _emit(text: str, path=None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def _csv_text(header, rows) -> str:
    import io
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_numbers(path) -> np.ndarray:
    return np.asarray(parse_values(Path(path).read_text().splitlines()))


# ----------------------------------------------------------------------------
# commands


def cmd_correlogram(args):
    s, n_train = _series(args)
    x = parse_transform(args.transform).apply(s.values[:n_train])
    res = (diagnostics.acf if args.command == "acf" else diagnostics.pacf)(x, args.max_lag)
    if args.out == "json":
        _emit(json.dumps({"lags": res.lags.tolist(), "values": res.values.tolist(),
                          "band": res.band}) + "\n", args.output)
    else:
        rows = [[int(k), _fmt(v), _fmt(-res.band), _fmt(res.band)] for k, v in zip(res.lags, res.values)]
        _emit(_csv_text(["lag", "value", "band_low", "band_high"], rows), args.output)


def cmd_stationarity(args):
    s, n_train = _series(args)
    v = diagnostics.dickey_fuller(parse_transform(args.transform).apply(s.values[:n_train]))
    if args.out == "csv":
        _emit(_csv_text(["test_statistic", "critical_value", "stationary"],
                        [[_fmt(v.test_statistic), _fmt(v.critical_value), str(v.stationary).lower()]]))
    else:
        _emit(json.dumps({"test_statistic": v.test_statistic, "critical_value": v.critical_value,
                          "stationary": v.stationary}) + "\n")


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--model {args.model} needs " + ", ".join("--" + m.replace("_", "-") for m in missing))


def cmd_fit(args):
    s, n_train = _series(args)
    train = s.values[:n_train]
    pipe = parse_transform(args.transform)
    doc = {"family": None, "model": None, "transform": None, "n_train": n_train, "version": __version__}
    if args.model in ("ar", "sarima"):
        if args.model == "ar":
            _need(args, "p")
            m = stochastic.fit_ar_yule_walker(train, args.p, pipe)
        else:
            _need(args, "order")
            if len(args.order) != 3 or (args.seasonal is not None and len(args.seasonal) != 4):
                raise UsageError("--order takes p,d,q and --seasonal takes P,D,Q,s")
            P, D, Q, sp = args.seasonal if args.seasonal else (0, 0, 0, s.period or 1)
            m = stochastic.fit_css(train, stochastic.SarimaOrder(*args.order, P, D, Q, sp), pipe)
        stat, inv, _ = stochastic.check_roots(m)
        sc = stochastic.score(m)
        doc.update(family="stochastic", model=m.to_dict(), transform=m.pipeline.to_list(),
                   fit={"sse": m.sse, "aic": sc.aic, "bic": sc.bic, "stationary": stat, "invertible": inv})
    elif args.model in ("fnn", "tlnn", "sann"):
        T = neural.NetworkTopology
        if args.model == "fnn":
            _need(args, "p")
            topo = T.fnn(args.p, args.hidden)
        elif args.model == "tlnn":
            _need(args, "lags")
            topo = T.tlnn(args.lags, args.hidden)
        else:
            period = args.period or s.period
            if period is None:
                raise UsageError("--model sann needs a seasonal --period")
            topo = T.sann(period, args.hidden)
        z = pipe.apply(train)
        net = neural.train(topo, z, neural.TrainingConfig(args.learning_rate, args.epochs, args.seed))
        doc.update(family="neural", model=net.to_dict(), transform=pipe.to_list(),
                   fit={"final_loss": float(net.loss_trace[-1]) if net.loss_trace.size else None})
    else:
        _need(args, "sigma", "gamma", "n")
        z = pipe.apply(train)
        N = args.N if args.N is not None else z.size - args.n
        X, t = svm.embed(z, svm.WindowConfig(args.n, N))
        m = svm.fit_lssvm(X, t, args.gamma, svm.RbfKernel(args.sigma))
        doc.update(family="svm", model=m.to_dict(), transform=pipe.to_list(),
                   fit={"system_residual": m.system_residual()})
    _emit(json.dumps(doc, indent=2) + "\n", args.output)


def cmd_forecast(args):
    doc = json.loads(Path(args.model_file).read_text())
    s, n_train = _series(args)
    train = s.values[:n_train]
    horizon = args.horizon if args.horizon is not None else len(s) - n_train
    if horizon < 1:
        raise UsageError("--horizon must be >= 1 (no test span to default to)")
    fam = doc.get("family")
    if fam == "stochastic":
        fc = stochastic.forecast(stochastic.SarimaModel.from_dict(doc["model"]), train, horizon)
    elif fam == "neural":
        pipe = TransformPipeline.from_list(doc["transform"])
        z = pipe.apply(train)
        fc = pipe.invert(neural.forecast(neural.TrainedNetwork.from_dict(doc["model"]), z, horizon))
    elif fam == "svm":
        pipe = TransformPipeline.from_list(doc["transform"])
        z = pipe.apply(train)
        fc = pipe.invert(svm.continue_forecast(svm.LssvmModel.from_dict(doc["model"]), z, horizon))
    else:
        raise UsageError(f"{args.model_file}: unknown model family {fam!r}")
    actual = s.values[n_train: n_train + horizon]
    if args.out == "json":
        _emit(json.dumps({"start": n_train + 1, "forecast": fc.tolist(),
                          "actual": actual.tolist()}) + "\n", args.output)
    else:
        rows = [[n_train + 1 + i, _fmt(actual[i]) if i < actual.size else "", _fmt(f)] for i, f in enumerate(fc)]
        _emit(_csv_text(["index", "actual", "forecast"], rows), args.output)


def cmd_evaluate(args):
    ev = evaluate(_read_numbers(args.actual), _read_numbers(args.forecast))
    d = ev.to_dict()
    if args.theil_u1:
        from .metrics import theil_u1
        d["theil_u1"] = theil_u1(_read_numbers(args.actual), _read_numbers(args.forecast))
    if args.out == "csv":
        keys = list(FIELDS) + (["theil_u1"] if args.theil_u1 else []) + ["n"]
        _emit(_csv_text(["measure", "value"], [[k, "" if d[k] is None else repr(d[k])] for k in keys]))
    else:
        _emit(json.dumps(d) + "\n")


def cmd_grid(args):
    s, n_train = _series(args)
    z = parse_transform(args.transform).apply(s.values[:n_train])
    r = svm.grid_search(z, args.sigma_grid, args.gamma_grid, args.n_grid, args.holdout, workers=args.workers)
    if args.out == "csv":
        rows = [[_fmt(sg), _fmt(g), n, _fmt(sc) if np.isfinite(sc) else "inf"] for (sg, g, n), sc in r.table]
        _emit(_csv_text(["sigma", "gamma", "n", "mse"], rows))
    else:
        _emit(json.dumps({"sigma": r.sigma, "gamma": r.gamma, "n": r.n, "N": r.N, "mse": r.score}) + "\n")


def _seed_range(args) -> tuple[int, ...]:
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    return tuple(range(args.seed, args.seed + args.seeds))


def _safe(label: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in label).strip("_")


def cmd_reproduce(args):
    try:
        experiments.resolve_tables(args.table)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    comp = experiments.reproduce(args.table, args.check, _seed_range(args), args.svm_protocol, args.workers)
    if args.diagrams:
        out = Path(args.diagrams)
        out.mkdir(parents=True, exist_ok=True)
        for rep in comp.reports:
            c = rep.config
            experiments.emit_diagram_data(rep, out / f"{c.dataset.name}_{_safe(c.label)}.csv")
    if args.out == "json":
        _emit(json.dumps(comp.to_dict(), indent=1) + "\n", args.output)
    else:
        import io
        buf = io.StringIO()
        comp.to_csv(buf)
        _emit(buf.getvalue(), args.output)
    fails = comp.failures
    print(f"{len(comp.rows)} comparisons, {sum(r.passed is True for r in comp.rows)} pass, "
          f"{len(fails)} fail, {comp.wall_clock:.1f}s", file=sys.stderr)
    if args.check and fails:
        for r in fails:
            print(f"FAIL {r.table} {r.row} {r.measure}: reproduced {r.reproduced} (published {r.paper})",
                  file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


def cmd_diagram(args):
    try:
        rows = experiments.table_rows(args.table, _seed_range(args), args.svm_protocol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.row is not None:
        rows = [r for r in rows if r.config.label == args.row]
        if not rows:
            labels = ", ".join(r.config.label for r in experiments.table_rows(args.table, (0,)))
            raise UsageError(f"no row {args.row!r}; available: {labels}")
    rep = experiments.run_experiment(rows[0].config)
    experiments.emit_diagram_data(rep, args.output)
    if args.out == "json":
        _emit(rep.to_json() + "\n")


COMMANDS = {
    "acf": cmd_correlogram, "pacf": cmd_correlogram, "stationarity": cmd_stationarity,
    "fit": cmd_fit, "forecast": cmd_forecast, "evaluate": cmd_evaluate,
    "grid-search": cmd_grid, "reproduce": cmd_reproduce, "emit-diagram": cmd_diagram,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args) or EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FIT_ERRORS as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (OSError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
