"""Experiment runner: repeated solver races with median aggregation.

The protocol mirrors the synthetic benchmarks this library exists to run:
generate a fresh problem instance per repetition, run the single-coordinate
baseline and every configured (method, tau) cell from the zero vector until
the objective gap drops below epsilon, then aggregate medians and compare the
measured acceleration against the spectral prediction.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .linalg import CsrSymmetricUpper, eigendecompose
from .problems import ProblemSpec, generate, load_libsvm, reference_min
from .solvers import SolverConfig, run
from .spectral import acceleration_ratio

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "emit_table",
    "run_experiment",
]


@dataclass
class ExperimentConfig:
    """A full experiment: problem source, method grid, stopping, seeding."""

    problem: ProblemSpec | None = None
    dataset: str | None = None
    gamma: float = 1.0
    methods: list[tuple[str, int]] = field(default_factory=lambda: [("rcdvs", 2)])
    epsilon: float = 0.01
    repetitions: int = 10
    max_updates: int = 10**8  # single-coordinate-equivalent iteration cap
    seed: int = 0
    output: str = "markdown"

    def validate(self) -> None:
        if (self.problem is None) == (self.dataset is None):
            raise ConfigError("configure exactly one of problem or dataset")
        if self.problem is not None:
            self.problem.validate()
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if not self.methods:
            raise ConfigError("need at least one (method, tau) cell")


@dataclass
class ResultRow:
    """One aggregated table row.

    ``acc`` is the median over repetitions of It(baseline) / It(method);
    ``pct`` expresses it as a percentage of the spectral prediction for the
    same subset size.  Capped repetitions are excluded from the medians.
    """

    method: str
    tau: int
    median_it: float
    median_time: float
    acc: float
    pct: float
    capped: int = 0


@dataclass
class ResultTable:
    rows: list[ResultRow]
    meta: dict
    raw: list[dict]

    def to_json(self) -> str:
        payload = {
            "meta": self.meta,
            "rows": [vars(r) for r in self.rows],
            "raw": self.raw,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        payload = json.loads(text)
        rows = [ResultRow(**r) for r in payload["rows"]]
        return cls(rows=rows, meta=payload["meta"], raw=payload["raw"])


def _problem_eigenvalues(config: ExperimentConfig, b) -> np.ndarray:
    """Spectrum of the curvature matrix for the theory columns.

    Generator problems have an exactly known constructed spectrum; dataset
    problems get a dense eigendecomposition (feature counts are small).
    """
    if config.problem is not None:
        spec = config.problem
        if spec.kind == "logistic":
            raise ConfigError("logistic problems need a dataset")
        k = spec.n if spec.kind == "quadratic" else min(spec.m, spec.n)
        lam = np.ones(spec.n)
        lam[k:] = 0.0
        lam[0] = spec.lam1
        if k > 1:
            lam[1] = spec.lam2
        return np.sort(lam)[::-1]
    dense = b.to_dense() if isinstance(b, CsrSymmetricUpper) else b
    return eigendecompose(dense).eigenvalues


def _cached_reference_min(config: ExperimentConfig, obj) -> float:
    """Reference optimum for a dataset problem, cached next to the file.

    The sidecar is keyed by the dataset content hash and the ridge weight so
    repetitions (and repeat runs) share one reference solve.
    """
    import os

    digest = hashlib.sha256()
    with open(config.dataset, "rb") as fh:
        digest.update(fh.read())
    key = f"{digest.hexdigest()}:{config.gamma!r}"
    sidecar = config.dataset + ".fstar.json"
    if os.path.exists(sidecar):
        try:
            with open(sidecar, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
            if payload.get("key") == key:
                return float(payload["f_star"])
        except (ValueError, KeyError):
            pass
    f_star = reference_min(obj)
    try:
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump({"key": key, "f_star": f_star}, fh)
    except OSError:
        pass  # read-only dataset directory; recompute next time
    return f_star


def run_experiment(config: ExperimentConfig) -> ResultTable:
    """Execute the full repetition protocol and aggregate medians."""
    config.validate()
    root = np.random.SeedSequence(config.seed)
    rep_seqs = root.spawn(config.repetitions)

    dataset_obj = None
    dataset_fstar = None
    if config.dataset is not None:
        dataset_obj = load_libsvm(config.dataset, gamma=config.gamma)
        dataset_fstar = _cached_reference_min(config, dataset_obj)

    cells = [("rcd", 1)] + [
        (m, t) for (m, t) in config.methods if (m, t) != ("rcd", 1)
    ]
    raw: list[dict] = []
    eigenvalues = None

    for rep, seq in enumerate(rep_seqs):
        prob_seq, solver_seq = seq.spawn(2)
        if dataset_obj is not None:
            obj, f_star = dataset_obj, dataset_fstar
            b = obj.curvature_matrix()
        else:
            spec = replace(config.problem, seed=int(prob_seq.generate_state(1)[0]))
            obj, _, f_star = generate(spec)
            b = obj.curvature_matrix()
        if eigenvalues is None:
            eigenvalues = _problem_eigenvalues(config, b)

        solver_seeds = solver_seq.spawn(len(cells))
        rep_out: dict = {"rep": rep}
        baseline_it = None
        for (method, tau), child in zip(cells, solver_seeds):
            cfg = SolverConfig(
                method=method,
                tau=tau,
                target_gap=config.epsilon,
                f_star=f_star,
                max_iters=max(1, config.max_updates // tau),
                seed=int(child.generate_state(1)[0]),
                trace_every=2**62,
            )
            report = run(obj, b, cfg)
            cell = {
                "method": method,
                "tau": tau,
                "it": report.iterations,
                "time": report.wall_time,
                "capped": report.capped,
            }
            if method == "rcd":
                baseline_it = report.iterations
            cell["acc"] = (
                baseline_it / report.iterations
                if report.iterations
                else float("nan")
            )
            rep_out[f"{method}:{tau}"] = cell
        raw.append(rep_out)

    rows = []
    for method, tau in cells:
        key = f"{method}:{tau}"
        good = [r[key] for r in raw if not r[key]["capped"]]
        capped = sum(1 for r in raw if r[key]["capped"])
        if capped:
            warnings.warn(
                f"{key}: {capped}/{len(raw)} repetitions hit the iteration cap "
                "and are excluded from the medians"
            )
        ratio = acceleration_ratio(eigenvalues, 1, tau)
        if good:
            med_it = float(np.median([c["it"] for c in good]))
            med_t = float(np.median([c["time"] for c in good]))
            acc = float(np.median([c["acc"] for c in good]))
            pct = 100.0 * acc / ratio
        else:
            med_it = med_t = acc = pct = float("nan")
        rows.append(
            ResultRow(
                method=method,
                tau=tau,
                median_it=med_it,
                median_time=med_t,
                acc=acc,
                pct=pct,
                capped=capped,
            )
        )

    meta = {
        "epsilon": config.epsilon,
        "repetitions": config.repetitions,
        "seed": config.seed,
        "source": config.dataset or vars(config.problem),
        "top_eigenvalues": [float(v) for v in eigenvalues[:4]],
        "theory_ratios": {
            str(t): acceleration_ratio(eigenvalues, 1, t)
            for t in sorted({t for _, t in cells})
        },
    }
    return ResultTable(rows=rows, meta=meta, raw=raw)


# ---------------------------------------------------------------------------
# Table emission


_COLUMNS = ("method", "tau", "median_it", "median_time", "acc", "pct", "capped")


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def emit_table(table: ResultTable, fmt: str = "markdown") -> str:
    """Render a :class:`ResultTable` as csv, json, or aligned markdown."""
    if fmt == "json":
        return table.to_json()
    if fmt == "csv":
        lines = [",".join(_COLUMNS)]
        for row in table.rows:
            lines.append(",".join(_cell(getattr(row, c)) for c in _COLUMNS))
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        header = list(_COLUMNS)
        body = [[_cell(getattr(row, c)) for c in header] for row in table.rows]
        widths = [
            max(len(header[i]), *(len(r[i]) for r in body)) if body else len(header[i])
            for i in range(len(header))
        ]
        def fmt_row(cells):
            return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
        lines = [fmt_row(header)]
        lines.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
        lines.extend(fmt_row(r) for r in body)
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown output format {fmt!r}")
