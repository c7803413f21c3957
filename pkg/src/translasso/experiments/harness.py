"""Seeding, parallel execution and tabular output shared by all studies."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ..datagen import ROLES, stream

STUDY_IDS = {"convergence": 1, "phase_diagram": 2, "comparison": 3, "inconsistent_source": 4}
JOBS_ENV = "TRANSLASSO_JOBS"


def task_stream(seed: int, study: str, cell: Sequence[int], n: int, replicate: int,
                role: str) -> np.random.SeedSequence:
    """Seed sequence owned by one (study, cell, n, replicate, role) task."""
    return stream(seed, STUDY_IDS[study], *cell, n, replicate, ROLES[role])


def delta_key(delta: float) -> int:
    """Nonnegative integer key for an exponent, stable across sub-grids."""
    return int(round(delta * 1000)) + 1_000_000


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def run_tasks(fn: Callable, tasks: Sequence, jobs: int | None = None) -> list:
    """Apply ``fn`` to every task, in order, on up to ``jobs`` processes."""
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    if jobs == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (8 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


@dataclass
class SweepResult:
    """Long-format table: one row per (study coordinates, method, metric)."""

    study: str
    coordinates: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    replicates: int = 0

    COMMON = ("study", "method")
    TAIL = ("metric", "mean", "stderr", "replicates", "nonconverged")

    @property
    def columns(self) -> tuple[str, ...]:
        return self.COMMON + self.coordinates + self.TAIL

    def add(self, method: str, coords: dict, metric: str, mean: float, stderr: float,
            replicates: int, nonconverged: int = 0) -> None:
        row = {"study": self.study, "method": method, **coords, "metric": metric,
               "mean": mean, "stderr": stderr, "replicates": replicates,
               "nonconverged": nonconverged}
        self.rows.append(row)

    def select(self, **match) -> list[dict]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in match.items())]

    def value(self, **match) -> float:
        rows = self.select(**match)
        if len(rows) != 1:
            raise KeyError(f"{len(rows)} rows match {match}")
        return rows[0]["mean"]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(row.get(c)) for c in self.columns])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def finite_mean(values: Iterable[float]) -> float:
    v = np.asarray(list(values), dtype=float)
    v = v[~np.isnan(v)]
    return float(v.mean()) if v.size else float("nan")
