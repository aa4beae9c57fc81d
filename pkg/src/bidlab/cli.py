"""Command-line entry point: ``bidlab {generate,fit,evaluate,sweep,inspect-curve}``.

Settings resolve in this order, later winning: built-in defaults, the JSON
document given by ``--config``, then explicit flags. Outputs go to
``--out-dir``, else ``$BIDLAB_OUT_DIR``, else ``./bidlab-out``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import synthdata as sd
from .estimators import METHODS, UnsupportedOperation, fit_method, load_model, save_model
from .evaluation import BidGrid, InapplicableMetricError, MetricsReport, evaluate
from .experiment import ExperimentConfig, cell_data, derive_seed, run_sweep, write_outputs

OUT_DIR_ENV = "BIDLAB_OUT_DIR"
DEFAULT_OUT_DIR = "bidlab-out"

log = logging.getLogger("bidlab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _methods(text: str) -> list[str]:
    return [m.strip() for m in text.split(",") if m.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bidlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out=True):
        p.add_argument("--config", help="JSON experiment config; flags override its keys")
        p.add_argument("--seed", type=int)
        if out:
            p.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or ./{DEFAULT_OUT_DIR})")
        p.add_argument("-v", "--verbose", action="store_true")

    g = sub.add_parser("generate", help="write a synthetic dataset CSV and its spec document")
    common(g)
    g.add_argument("--family", choices=sd.FAMILIES, default=sd.RICHARDS)
    g.add_argument("--theta", type=float, default=0.0, help="bid selection bias strength")
    g.add_argument("--repetition", type=int, default=0)

    f = sub.add_parser("fit", help="tune and train one method on a generated dataset")
    common(f)
    f.add_argument("data", help="dataset directory written by `generate`")
    f.add_argument("--method", choices=METHODS, required=True)

    e = sub.add_parser("evaluate", help="score a serialized model on the dataset's test split")
    common(e, out=False)
    e.add_argument("data")
    e.add_argument("model")
    e.add_argument("--metric", choices=MetricsReport.FIELDS, help="report only this metric")
    e.add_argument("--format", choices=("csv", "markdown"), default="csv")

    s = sub.add_parser("sweep", help="run the bias sweep and emit result tables")
    common(s)
    s.add_argument("--family", choices=sd.FAMILIES)
    s.add_argument("--theta", type=float, help="restrict the sweep to one bias strength")
    s.add_argument("--method", type=_methods, help="comma-separated subset of methods")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--format", choices=("csv", "markdown"), default="markdown")

    c = sub.add_parser("inspect-curve", help="print (b, mu, mu_hat) triples for one row")
    common(c, out=False)
    c.add_argument("data")
    c.add_argument("model")
    c.add_argument("--row", type=int, default=0, help="row of the test split")
    return parser


# --------------------------------------------------------------------------


def _config(args, **overrides) -> ExperimentConfig:
    try:
        doc = json.loads(Path(args.config).read_text()) if args.config else {}
        if args.seed is not None:
            doc["seed"] = args.seed
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig.from_dict(doc)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"bad config: {exc}") from exc


def _out_dir(args) -> Path:
    return Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def _split(dataset: sd.PricingDataset) -> sd.SplitDataset:
    return sd.split(dataset, derive_seed(dataset.seed, "split"))


def cmd_generate(args) -> int:
    cfg = _config(args)
    dataset, _ = cell_data(cfg, args.family, args.theta, args.repetition)
    out = _out_dir(args)
    dataset.save(out)
    print(out / "dataset.csv")
    return 0


def cmd_fit(args) -> int:
    cfg = _config(args)
    parts = _split(sd.PricingDataset.load(args.data))
    model = fit_method(args.method, parts.train, parts.validation, cfg.grid_for(args.method),
                       derive_seed(cfg.seed, args.method))
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"model_{args.method}.pkl"
    save_model(model, path)
    log.info("chosen hyperparameters: %s", model.chosen_hyperparameters)
    print(path)
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    parts = _split(sd.PricingDataset.load(args.data))
    model = load_model(args.model)
    report = evaluate(model, parts.test, parts.test.truth,
                      BidGrid.from_bids(parts.train.bids, cfg.grid_points))
    metrics = [args.metric] if args.metric else list(MetricsReport.FIELDS)
    for m in metrics:
        if report.get(m) is None and args.metric:
            raise InapplicableMetricError(f"metric not applicable to {model.method}: {m}")
    values = ["n.a." if report.get(m) is None else f"{report.get(m):.6f}" for m in metrics]
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["method", *metrics])
        w.writerow([model.method, *values])
    else:
        print("| method | " + " | ".join(metrics) + " |")
        print("|" + "---|" * (len(metrics) + 1))
        print(f"| {model.method} | " + " | ".join(values) + " |")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args,
                  families=[args.family] if args.family else None,
                  bias_levels=[args.theta] if args.theta is not None else None,
                  methods=args.method)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    handler.setLevel(logging.INFO)
    logger = logging.getLogger("bidlab")
    logger.addHandler(handler)
    logger.setLevel(logging.INFO)
    try:
        (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
        results = run_sweep(cfg, workers=args.workers)
        for path in write_outputs(results, out, args.format):
            print(path)
    finally:
        logger.removeHandler(handler)
        handler.close()
    if results.failed:
        for r in results.failed:
            print(f"failed cell {r.family} theta={r.theta} rep={r.repetition} {r.method}: {r.error}",
                  file=sys.stderr)
        return 2
    return 0


def cmd_inspect_curve(args) -> int:
    cfg = _config(args)
    parts = _split(sd.PricingDataset.load(args.data))
    if not 0 <= args.row < parts.test.n:
        raise UsageError(f"--row must lie in 0..{parts.test.n - 1}")
    model = load_model(args.model)
    grid = BidGrid.from_bids(parts.train.bids, cfg.grid_points).values
    x = parts.test.x[args.row:args.row + 1]
    mu = parts.test.truth.curves(grid, x)[0]
    try:
        mu_hat = model.predict_curves(grid, x)[0]
    except UnsupportedOperation:  # naive pricing has no curve
        mu_hat = [None] * len(grid)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["b", "mu", "mu_hat"])
    for b, m, h in zip(grid, mu, mu_hat):
        w.writerow([repr(float(b)), repr(float(m)), "n.a." if h is None else repr(float(h))])
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "inspect-curve": cmd_inspect_curve,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", force=True)
    for h in logging.getLogger().handlers:
        h.setLevel(logging.INFO if args.verbose else logging.WARNING)
    logging.getLogger("bidlab").setLevel(logging.INFO)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InapplicableMetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error during {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
