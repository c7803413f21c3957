"""Experiment configuration and its flat ``key = value`` text form."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..datagen import PRESET_KEYS, ParameterError, TrueModel, default_truth, truth_from_config

STUDIES = ("convergence", "phase_diagram", "comparison", "inconsistent_source", "contours", "priors")

# Smallest positive floor: avoids division by zero without touching any
# estimate a Gaussian OLS anchor can produce.
NO_CLIP = float(np.finfo(float).tiny)


@dataclass(frozen=True)
class Schedule:
    """Power-law strengths ``lam = n**delta_lambda`` and ``eta = n**delta_eta``."""

    family: str
    region: str
    delta_lambda: float
    delta_eta: float | None = None
    gamma: float = 1.0
    gamma1: float = 1.0
    gamma2: float = 1.0


CONVERGENCE_SCHEDULES = (
    Schedule("lasso", "i", 0.25),
    Schedule("lasso", "ii", 0.75),
    Schedule("adaptive_lasso", "i", -1.0),
    Schedule("adaptive_lasso", "ii", 0.25),
    Schedule("adaptive_lasso", "iii", 0.75),
    Schedule("transfer_lasso", "i", 0.5, 0.75),
    Schedule("transfer_lasso", "ii", 0.25, 0.25),
    Schedule("transfer_lasso", "iii", 0.75, 0.5),
    Schedule("adaptive_transfer_lasso", "i", -0.5, 2.0),
    Schedule("adaptive_transfer_lasso", "ii", 0.5, 1.5),
    Schedule("adaptive_transfer_lasso", "iii", -1.0, 0.25),
    Schedule("adaptive_transfer_lasso", "iv", -1.0, 1.0),
    Schedule("adaptive_transfer_lasso", "v", 0.0, 0.25),
    Schedule("adaptive_transfer_lasso", "vi", 0.75, 0.5),
)

PHASE_DELTAS = tuple(np.round(np.arange(-2.0, 2.0001, 0.25), 2).tolist())
CONVERGENCE_N = (20, 50, 100, 200, 500, 1000, 2000, 5000)
COMPARISON_N = (10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one study run.

    ``m_rule`` is ``"square"`` (m = n**2), ``"equal"`` (m = n) or
    ``"fixed"`` (m = ``m_fixed``).
    """

    study: str
    truth: TrueModel = field(default_factory=default_truth)
    n_grid: tuple[int, ...] = CONVERGENCE_N
    m_rule: str = "square"
    m_fixed: int = 10000
    replicates: int = 10
    seed: int = 0
    schedules: tuple[Schedule, ...] = CONVERGENCE_SCHEDULES
    sigmas: tuple[float, ...] = (1.0,)
    ps: tuple[int, ...] = (10,)
    methods: tuple[str, ...] = ("lasso", "adaptive_lasso", "transfer_lasso", "adaptive_transfer_lasso")
    deltas: tuple[float, ...] = PHASE_DELTAS
    cells: tuple[tuple[float, float], ...] | None = None
    phase_n: tuple[int, int] = (1000, 5000)
    slope_min_n: int = 500
    initial: str = "lasso"
    folds: int = 10
    grid_size: int = 100
    grid_ratio: float = 1e-6
    clip: float = 1e-3
    case: str = "A"
    test_size: int = 1000

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ParameterError(f"unknown study {self.study!r}; choose from {', '.join(STUDIES)}")
        if self.replicates < 1:
            raise ParameterError("replicates must be >= 1")
        n_grid = tuple(int(n) for n in self.n_grid)
        if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
            raise ParameterError(f"n_grid must be strictly increasing, got {n_grid}")
        if self.m_rule not in ("square", "equal", "fixed"):
            raise ParameterError(f"m_rule must be square, equal or fixed, got {self.m_rule!r}")
        object.__setattr__(self, "n_grid", n_grid)

    def source_size(self, n: int) -> int:
        if self.m_rule == "square":
            return n * n
        if self.m_rule == "equal":
            return n
        return self.m_fixed

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, TrueModel):
                value = {"beta": value.beta_star.tolist(), "sigma": value.sigma,
                         "rho": value.covariance_rho}
            elif f.name == "schedules":
                value = [vars(s) for s in value]
            out[f.name] = value
        return out


def default_config(study: str, **overrides) -> ExperimentConfig:
    """Full-scale defaults for each study."""
    study = study.replace("-", "_")
    base: dict = {}
    if study == "phase_diagram":
        base = dict(n_grid=(1000, 5000), methods=("transfer_lasso", "adaptive_transfer_lasso"),
                    clip=NO_CLIP)
    elif study == "convergence":
        base = dict(clip=NO_CLIP)
    elif study in ("comparison", "inconsistent_source"):
        base = dict(n_grid=COMPARISON_N, m_rule="fixed", sigmas=(1.0, 3.0, 6.0, 10.0),
                    ps=(10, 20, 50, 100))
    base.update(overrides)
    return ExperimentConfig(study=study, **base)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(float(x)) for x in text.split(",") if x.strip())


def _strings(text: str) -> tuple[str, ...]:
    return tuple(x.strip().replace("-", "_") for x in text.split(",") if x.strip())


def _cells(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in text.split(";"):
        if item.strip():
            a, b = _floats(item.replace(":", ","))
            out.append((a, b))
    return tuple(out)


def _m_rule(text: str) -> dict:
    text = text.strip()
    if text in ("square", "equal"):
        return {"m_rule": text}
    if text.startswith("fixed"):
        _, _, num = text.partition(":")
        return {"m_rule": "fixed", **({"m_fixed": int(num)} if num else {})}
    return {"m_rule": "fixed", "m_fixed": int(text)}


STUDY_KEYS = {
    "n": ("n_grid", _ints),
    "m": (None, _m_rule),
    "m_fixed": ("m_fixed", int),
    "sigma": ("sigmas", _floats),
    "p": ("ps", _ints),
    "methods": ("methods", _strings),
    "deltas": ("deltas", _floats),
    "cells": ("cells", _cells),
    "phase_n": ("phase_n", _ints),
    "slope_min_n": ("slope_min_n", int),
    "initial": ("initial", str),
    "folds": ("folds", int),
    "grid_size": ("grid_size", int),
    "grid_ratio": ("grid_ratio", float),
    "clip": ("clip", float),
    "case": ("case", str),
    "test_size": ("test_size", int),
    "replicates": ("replicates", int),
}


def valid_keys() -> list[str]:
    keys = ["seed", "replicates"] + [f"truth.{k}" for k in PRESET_KEYS]
    keys += [f"study.<name>.{k}" for k in STUDY_KEYS]
    return keys


def parse_config_text(text: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def config_from_values(study: str, values: dict[str, str], **overrides) -> ExperimentConfig:
    """Resolve flat dotted keys into an :class:`ExperimentConfig` for ``study``.

    Keys for other studies are accepted and ignored, so one file can carry
    settings for several studies.
    """
    study = study.replace("-", "_")
    if study not in STUDIES:
        raise ParameterError(f"unknown study {study!r}; choose from {', '.join(STUDIES)}")
    kwargs: dict = {}
    truth_values = {}
    bad = []
    for key, value in values.items():
        parts = key.split(".")
        if key == "seed":
            kwargs["seed"] = int(value)
        elif key == "replicates":
            kwargs["replicates"] = int(value)
        elif parts[0] == "truth" and len(parts) == 2 and parts[1] in PRESET_KEYS:
            truth_values[parts[1]] = value
        elif parts[0] == "study" and len(parts) == 3 and parts[2] in STUDY_KEYS:
            name = parts[1].replace("-", "_")
            if name not in STUDIES:
                bad.append(key)
                continue
            if name != study:
                continue
            target, conv = STUDY_KEYS[parts[2]]
            try:
                parsed = conv(value)
            except ValueError as exc:
                raise ParameterError(f"bad value for {key}: {value!r} ({exc})") from exc
            if target is None:
                kwargs.update(parsed)
            else:
                kwargs[target] = parsed
        else:
            bad.append(key)
    if bad:
        raise ParameterError(
            f"invalid config key(s) {', '.join(sorted(bad))}; valid keys: {', '.join(valid_keys())}"
        )
    if truth_values:
        kwargs["truth"] = truth_from_config(truth_values)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return default_config(study, **kwargs)


def with_replicates(config: ExperimentConfig, replicates: int) -> ExperimentConfig:
    return replace(config, replicates=replicates)
