"""Monte Carlo campaigns over grids of ``(n, lambda)`` cells.

Trial ``t`` of cell ``c`` always uses the graph seed
``derive_seed(master_seed, c, t)``, and records are written in
``(cell, trial)`` order whatever the number of worker processes, so the
JSONL output depends only on the configuration.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from importlib import resources
from itertools import groupby
from typing import Iterable, Iterator

import numpy as np

from .bp_numerics import DomainError, WindowError, predict_diameter
from .core import kernel, two_core
from .diameter import graph_diameter
from .graph import components, sample_gnp
from .rng import derive_seed

CHECKS = ("diameter", "giant", "core", "kernel", "residual_dist")


def load_defaults() -> dict:
    """Versioned thresholds used by the Monte Carlo tests."""
    text = resources.files("rgdiam").joinpath("data/defaults.json").read_text()
    return json.loads(text)


def threshold(name: str):
    return load_defaults()["thresholds"][name]["value"]


@dataclass(frozen=True)
class Cell:
    n: int
    lam: float
    trials: int
    regime: str = "auto"
    descriptive: bool = False

    def prediction(self):
        """``PredictionRecord`` for the cell, or ``None`` in descriptive mode."""
        if self.descriptive:
            return None
        return predict_diameter(self.n, self.lam, self.regime)


@dataclass
class ExperimentConfig:
    cells: list[Cell]
    seed: int = 0
    checks: tuple[str, ...] = ("diameter", "giant")
    threads: int | None = None
    out: str | None = None
    record_time: bool = False

    def __post_init__(self):
        bad = [c for c in self.checks if c not in CHECKS]
        if bad:
            raise ValueError(f"unknown checks {bad}; choose from {CHECKS}")
        for i, c in enumerate(self.cells):
            if c.trials < 0 or c.n < 1:
                raise ValueError(f"cell {i}: need n >= 1 and trials >= 0")
            try:
                c.prediction()
            except (WindowError, DomainError) as exc:
                raise ValueError(f"cell {i} (n={c.n}, lambda={c.lam}) has no prediction: "
                                 f"{exc}; mark it descriptive") from exc

    @classmethod
    def from_dict(cls, d: dict, **override) -> ExperimentConfig:
        cells = [Cell(int(c["n"]), float(c["lambda"]), int(c["trials"]),
                      c.get("regime", "auto"), bool(c.get("descriptive", False)))
                 for c in d.get("cells", [])]
        kw = dict(seed=int(d.get("seed", 0)), checks=tuple(d.get("checks", ("diameter", "giant"))),
                  threads=d.get("threads"), out=d.get("out"),
                  record_time=bool(d.get("record_time", False)))
        kw.update({k: v for k, v in override.items() if v is not None})
        return cls(cells, **kw)

    @classmethod
    def from_file(cls, path, **override) -> ExperimentConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), **override)

    def worker_count(self) -> int:
        if self.threads:
            return max(1, int(self.threads))
        env = os.environ.get("RGDIAM_THREADS")
        return max(1, int(env)) if env else 1


@dataclass
class TrialRecord:
    cell: int
    trial: int
    seed: int
    n: int
    lam: float
    regime: str | None
    diameter: int | None = None
    witness: list[int] | None = None
    C1: int | None = None
    C2: int | None = None
    core_n: int | None = None
    kernel_n: int | None = None
    isolated_cycles: int | None = None
    d0: float | None = None
    residual: float | None = None
    scaled_residual: float | None = None
    wall_time: float | None = None
    rest: int | None = None

    def to_json(self) -> str:
        d = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(d, separators=(",", ":"))


def run_trial(config_checks: tuple[str, ...], cell: Cell, cell_idx: int, trial: int,
              master_seed: int, record_time: bool = False) -> TrialRecord:
    t0 = time.perf_counter()
    seed = derive_seed(master_seed, cell_idx, trial)
    g = sample_gnp(cell.n, cell.lam, seed)
    pred = cell.prediction()
    rec = TrialRecord(cell_idx, trial, seed, cell.n, cell.lam, pred.regime if pred else None)
    if "diameter" in config_checks or "residual_dist" in config_checks:
        rep = graph_diameter(g)
        rec.diameter = rep.diameter
        rec.witness = list(rep.witness)
        if pred is not None:
            rec.d0 = pred.normal_form if pred.normal_form is not None else pred.d0
            rec.residual = rec.diameter - rec.d0
            if pred.regime in ("near_critical", "subcritical"):
                rec.scaled_residual = abs(cell.lam - 1) * rec.residual
    if "giant" in config_checks:
        sizes = components(g).sorted_sizes()
        rec.C1 = int(sizes[0]) if sizes.size else 0
        rec.C2 = int(sizes[1]) if sizes.size > 1 else 0
        rec.rest = cell.n - rec.C1 - rec.C2
    if "core" in config_checks or "kernel" in config_checks:
        core = two_core(g)
        rec.core_n = core.n
        if "kernel" in config_checks:
            k = kernel(core)
            rec.kernel_n = k.n
            rec.isolated_cycles = k.isolated_cycles
    if record_time:
        rec.wall_time = time.perf_counter() - t0
    return rec


def _task(args):
    checks, cell, ci, t, seed, rt = args
    try:
        return run_trial(checks, cell, ci, t, seed, rt)
    except (OSError, MemoryError) as exc:  # a marker record, not a crashed pool
        return {"cell": ci, "trial": t, "partial": True, "error": repr(exc)}


def run_experiment(config: ExperimentConfig) -> Iterator[TrialRecord | dict]:
    """Yield one record per trial in ``(cell, trial)`` order and append them
    to ``config.out`` when set.  A failed trial ends its cell with a
    ``{"partial": true}`` marker record."""
    tasks = [(tuple(config.checks), c, ci, t, config.seed, config.record_time)
             for ci, c in enumerate(config.cells) for t in range(c.trials)]
    workers = config.worker_count()
    fh = open(config.out, "w", encoding="utf-8") if config.out else None
    try:
        if workers == 1 or len(tasks) <= 1:
            results = map(_task, tasks)
            pool = None
        else:
            pool = ProcessPoolExecutor(max_workers=workers)
            # map() hands results back in submission order: the reorder buffer
            results = pool.map(_task, tasks, chunksize=1)
        broken: set[int] = set()
        for rec in results:
            ci = rec["cell"] if isinstance(rec, dict) else rec.cell
            if ci in broken:
                continue
            if isinstance(rec, dict):
                broken.add(ci)
            if fh is not None:
                fh.write((json.dumps(rec) if isinstance(rec, dict) else rec.to_json()) + "\n")
            yield rec
        if pool is not None:
            pool.shutdown()
    finally:
        if fh is not None:
            fh.close()


def read_records(path) -> list[TrialRecord | dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            d = json.loads(line)
            out.append(d if d.get("partial") else TrialRecord(**d))
    return out


@dataclass(frozen=True)
class CellSummary:
    cell: int
    n: int
    lam: float
    count: int
    mean: float
    stdev: float
    min: float
    max: float
    scaled: bool


def _stats(vals):
    a = np.asarray(vals, dtype=np.float64)
    sd = float(a.std(ddof=1)) if a.size > 1 else 0.0
    return float(a.mean()), sd, float(a.min()), float(a.max())


def _by_cell(records: Iterable) -> dict[int, list[TrialRecord]]:
    recs = [r for r in records if isinstance(r, TrialRecord)]
    recs.sort(key=lambda r: (r.cell, r.trial))
    return {k: list(v) for k, v in groupby(recs, key=lambda r: r.cell)}


def residual_summary(records) -> tuple[list[CellSummary], list[dict]]:
    """Residual statistics per cell (epsilon-scaled for near-critical
    cells), plus the change in mean residual between consecutive ``n`` at
    equal ``lambda``."""
    out = []
    for ci, rs in _by_cell(records).items():
        rs = [r for r in rs if r.residual is not None]
        if len(rs) < 2:
            continue
        scaled = rs[0].regime == "near_critical"
        vals = [r.scaled_residual if scaled else r.residual for r in rs]
        out.append(CellSummary(ci, rs[0].n, rs[0].lam, len(rs), *_stats(vals), scaled))
    drift = []
    by_lam = sorted(out, key=lambda s: (s.lam, s.n))
    for lam, grp in groupby(by_lam, key=lambda s: s.lam):
        grp = list(grp)
        for a, b in zip(grp, grp[1:]):
            drift.append({"lam": lam, "n_from": a.n, "n_to": b.n,
                          "drift": b.mean - a.mean, "scaled": a.scaled})
    return out, drift


def second_component_check(records) -> list[dict]:
    """Mean ``C2`` per cell against ``(log L - 2.5 log log L) / delta`` with
    ``L = eps**3 n`` and ``delta = lam - 1 - log lam``."""
    out = []
    for ci, rs in _by_cell(records).items():
        rs = [r for r in rs if r.C2 is not None]
        if not rs:
            continue
        n, lam = rs[0].n, rs[0].lam
        big = (lam - 1) ** 3 * n
        if lam <= 1 or big <= math.e:
            out.append({"cell": ci, "n": n, "lam": lam, "skipped": True,
                        "reason": "Lambda <= e or lambda <= 1"})
            continue
        delta = lam - 1 - math.log(lam)
        pred = (math.log(big) - 2.5 * math.log(math.log(big))) / delta
        mean = float(np.mean([r.C2 for r in rs]))
        out.append({"cell": ci, "n": n, "lam": lam, "skipped": False, "Lambda": big,
                    "predicted": pred, "mean_C2": mean, "ratio": mean / pred,
                    "trials": len(rs)})
    return out
