"""Simulation studies and their long-format outputs."""

from __future__ import annotations

from .analysis import contour_value, log_normalizer, prior_density, run_contours, run_priors
from .config import (
    CONVERGENCE_SCHEDULES,
    NO_CLIP,
    STUDIES,
    ExperimentConfig,
    Schedule,
    config_from_values,
    default_config,
    parse_config_text,
    valid_keys,
)
from .harness import SweepResult, task_stream
from .studies import (
    run_comparison,
    run_convergence,
    run_inconsistent_source,
    run_phase_diagram,
    scheduled_penalty,
)


def run_study(config: ExperimentConfig, jobs: int | None = None) -> SweepResult:
    """Dispatch ``config`` to the matching study runner."""
    if config.study == "convergence":
        return run_convergence(config, jobs)
    if config.study == "phase_diagram":
        return run_phase_diagram(config, jobs)
    if config.study == "comparison":
        return run_comparison(config, jobs)
    if config.study == "inconsistent_source":
        return run_inconsistent_source(config, jobs)
    if config.study == "contours":
        return run_contours()
    return run_priors()


__all__ = [
    "CONVERGENCE_SCHEDULES", "NO_CLIP", "STUDIES", "ExperimentConfig", "Schedule", "SweepResult",
    "config_from_values", "contour_value", "default_config", "log_normalizer", "parse_config_text",
    "prior_density", "run_comparison", "run_contours", "run_convergence",
    "run_inconsistent_source", "run_phase_diagram", "run_priors", "run_study",
    "scheduled_penalty", "task_stream", "valid_keys",
]
