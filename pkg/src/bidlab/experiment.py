"""Bias-sweep protocol: families x bias strengths x repetitions x methods."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from . import synthdata as sd
from .estimators import DEFAULT_GRIDS, METHODS, OracleModel, fit_method
from .evaluation import BidGrid, MetricsReport, evaluate

log = logging.getLogger(__name__)

BIAS_LEVELS = (0.0, 2.5, 5.0, 7.5, 10.0, 15.0, 20.0)
METRICS = MetricsReport.FIELDS
METHOD_LABELS = {
    "naive": "Naive pricing",
    "logistic": "Logistic Regression",
    "random_forest": "Random Forest",
    "mlp": "MLP",
    "hie": "HIE",
    "drnet": "DRNets",
    "vcnet": "VCNets",
    "oracle": "Oracle",
}


@dataclass
class ExperimentConfig:
    n: int = 2000
    d: int = 13
    n_dummy: int = 4
    families: tuple[str, ...] = sd.FAMILIES
    bias_levels: tuple[float, ...] = BIAS_LEVELS
    repetitions: int = 10
    methods: tuple[str, ...] = METHODS
    seed: int = 0
    grids: dict = field(default_factory=dict)
    grid_points: int = 65
    noise_sd: float = 0.1
    covariates_path: str | None = None
    column_kinds: tuple[str, ...] | None = None

    def __post_init__(self):
        self.families = tuple(self.families)
        self.bias_levels = tuple(float(t) for t in self.bias_levels)
        self.methods = tuple(self.methods)
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(t < 0 for t in self.bias_levels) or len(set(self.bias_levels)) != len(self.bias_levels):
            raise ValueError("bias levels must be distinct and >= 0")
        for fam in self.families:
            if fam not in sd.FAMILIES:
                raise ValueError(f"unknown family {fam!r}")
        for m in self.methods:
            if m not in METHODS and m != "oracle":
                raise ValueError(f"unknown method {m!r}")

    def grid_for(self, method: str):
        return self.grids.get(method, DEFAULT_GRIDS.get(method))

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        doc = asdict(self)
        for k in ("families", "bias_levels", "methods"):
            doc[k] = list(doc[k])
        return doc


def derive_seed(root: int, *coords) -> int:
    """Stable 63-bit seed from a root seed and cell coordinates."""
    text = json.dumps([int(root)] + [repr(c) for c in coords])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1


def load_or_synthesize_covariates(config: ExperimentConfig) -> sd.CovariateMatrix:
    if config.covariates_path:
        kinds = config.column_kinds
        if kinds is None:
            with open(config.covariates_path, encoding="utf-8") as fh:
                kinds = (sd.CONTINUOUS,) * len(fh.readline().split(","))
        return sd.load_covariates(config.covariates_path, kinds)
    return sd.synthesize_covariates(config.n, config.d, config.n_dummy, derive_seed(config.seed, "covariates"))


@dataclass
class CellResult:
    family: str
    method: str
    theta: float
    repetition: int
    report: MetricsReport | None
    hyperparameters: dict
    wall_time: float
    error: str | None = None
    notes: list[str] = field(default_factory=list)


def cell_data(config: ExperimentConfig, family: str, theta: float, repetition: int,
              covariates: sd.CovariateMatrix | None = None):
    """Dataset and split for one cell; coefficient vectors depend on (family, repetition) only."""
    covariates = covariates if covariates is not None else load_or_synthesize_covariates(config)
    truth = sd.draw_ground_truth(family, covariates, config.noise_sd,
                                 derive_seed(config.seed, family, repetition, "truth"))
    bias = sd.draw_bias(theta, covariates, derive_seed(config.seed, family, repetition, "bias"))
    cell_seed = derive_seed(config.seed, family, theta, repetition)
    dataset = sd.generate_dataset(covariates, truth, bias, derive_seed(cell_seed, "data"))
    return dataset, sd.split(dataset, derive_seed(cell_seed, "split"))


def run_cell(config: ExperimentConfig, family: str, theta: float, repetition: int,
             covariates: sd.CovariateMatrix | None = None) -> list[CellResult]:
    """Generate one dataset and evaluate every configured method on the same split."""
    dataset, parts = cell_data(config, family, theta, repetition, covariates)
    grid = BidGrid.from_bids(parts.train.bids, config.grid_points)
    cell_seed = derive_seed(config.seed, family, theta, repetition)
    results = []
    for method in config.methods:
        start = time.perf_counter()
        try:
            if method == "oracle":
                model = OracleModel(dataset.truth)
            else:
                model = fit_method(method, parts.train, parts.validation, config.grid_for(method),
                                   derive_seed(cell_seed, method))
            report = evaluate(model, parts.test, dataset.truth, grid)
            results.append(CellResult(family, method, theta, repetition, report,
                                      model.chosen_hyperparameters, time.perf_counter() - start,
                                      notes=list(getattr(model, "merge_events", []))))
        except Exception as exc:  # recorded per cell; the sweep carries on
            log.error("cell %s/%s/%s/%s failed: %s", family, theta, repetition, method, exc)
            log.debug("%s", traceback.format_exc())
            results.append(CellResult(family, method, theta, repetition, None, {},
                                      time.perf_counter() - start, error=f"{type(exc).__name__}: {exc}"))
    return results


def _run_cell_args(args):
    return run_cell(*args)


@dataclass
class ResultsTable:
    records: list[CellResult]

    @property
    def failed(self) -> list[CellResult]:
        return [r for r in self.records if r.error]

    def aggregate(self) -> dict:
        """(family, method, theta) -> {metric: (mean, sd, count)} over successful records."""
        groups: dict = {}
        for r in self.records:
            if r.report is None:
                continue
            groups.setdefault((r.family, r.method, r.theta), []).append(r.report)
        out = {}
        for key, reports in groups.items():
            stats = {}
            for metric in METRICS:
                vals = [rep.get(metric) for rep in reports if rep.get(metric) is not None]
                if vals:
                    stats[metric] = (float(np.mean(vals)), float(np.std(vals)), len(vals))
            out[key] = stats
        return out

    def to_csv(self, include_timing: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["family", "method", "theta", "repetition", *METRICS, "hyperparameters", "error"]
        if include_timing:
            header.append("wall_time")
        w.writerow(header)
        for r in self.records:
            metrics = [("n.a." if r.report is None or r.report.get(m) is None else repr(r.report.get(m)))
                       for m in METRICS]
            row = [r.family, r.method, repr(r.theta), r.repetition, *metrics,
                   json.dumps(r.hyperparameters, sort_keys=True), r.error or ""]
            if include_timing:
                row.append(f"{r.wall_time:.3f}")
            w.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ResultsTable":
        records = []
        for row in csv.DictReader(io.StringIO(text)):
            report = None if row["error"] else MetricsReport.from_record(row)
            records.append(CellResult(row["family"], row["method"], float(row["theta"]),
                                      int(row["repetition"]), report, json.loads(row["hyperparameters"]),
                                      float(row.get("wall_time") or 0.0), row["error"] or None))
        return cls(records)


def run_sweep(config: ExperimentConfig, workers: int = 1) -> ResultsTable:
    covariates = load_or_synthesize_covariates(config)
    cells = [(config, fam, theta, rep, covariates)
             for fam in config.families for theta in config.bias_levels
             for rep in range(config.repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_run_cell_args, cells))
    else:
        batches = [run_cell(*cell) for cell in cells]
    records = [r for batch in batches for r in batch]
    order = {m: i for i, m in enumerate(config.methods)}
    records.sort(key=lambda r: (r.family, r.theta, r.repetition, order[r.method]))
    for r in records:
        log.info("cell %s theta=%s rep=%d %s: %.2fs%s", r.family, r.theta, r.repetition, r.method,
                 r.wall_time, f" FAILED {r.error}" if r.error else "")
        for note in r.notes:
            log.info("cell %s theta=%s rep=%d %s: %s", r.family, r.theta, r.repetition, r.method, note)
    return ResultsTable(records)


def emit_table(results: ResultsTable, metric: str, fmt: str = "markdown",
               family: str | None = None) -> str:
    """Methods x bias strengths of mean metric values; best (lowest) per column flagged."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if fmt not in ("markdown", "csv"):
        raise ValueError(f"unknown format {fmt!r}")
    if not results.records:
        raise ValueError("no results to tabulate")
    families = sorted({r.family for r in results.records})
    if family is None:
        if len(families) != 1:
            raise ValueError(f"results hold several families {families}; pick one")
        family = families[0]
    agg = results.aggregate()
    methods = list(dict.fromkeys(r.method for r in results.records if r.family == family))
    thetas = sorted({r.theta for r in results.records if r.family == family})

    cells: dict = {}
    for m in methods:
        for t in thetas:
            stat = agg.get((family, m, t), {}).get(metric)
            cells[m, t] = None if stat is None else round(stat[0], 3)
    best = {}
    for t in thetas:
        vals = [cells[m, t] for m in methods if cells[m, t] is not None]
        best[t] = min(vals) if vals else None

    def text(m, t, mark):
        v = cells[m, t]
        if v is None:
            return "n.a."
        s = f"{v:.3f}"
        return mark(s) if v == best[t] else s

    header = ["Model"] + [f"{t:.1f}" for t in thetas]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for m in methods:
            w.writerow([METHOD_LABELS.get(m, m)] + [text(m, t, lambda s: s + "*") for t in thetas])
        return buf.getvalue()
    lines = [f"**{metric.upper()}** ({family}; best per column in bold)", "",
             "| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for m in methods:
        lines.append("| " + " | ".join([METHOD_LABELS.get(m, m)]
                                        + [text(m, t, lambda s: f"**{s}**") for t in thetas]) + " |")
    return "\n".join(lines) + "\n"


def write_outputs(results: ResultsTable, out_dir, fmt: str = "markdown") -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "results.csv"]
    written[0].write_text(results.to_csv())
    ext = "md" if fmt == "markdown" else "csv"
    for family in sorted({r.family for r in results.records}):
        for metric in METRICS:
            path = out_dir / f"{family}_{metric}.{ext}"
            path.write_text(emit_table(results, metric, fmt, family))
            written.append(path)
    return written


def rank_correlation(a, b) -> float:
    """Spearman correlation of two score vectors (average ranks for ties)."""
    rho = spearmanr(a, b).statistic
    return float(rho) if not math.isnan(rho) else 0.0
