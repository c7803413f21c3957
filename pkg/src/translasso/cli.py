"""Command-line interface: ``translasso fit`` and ``translasso study``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .datagen import ParameterError, RegressionProblem
from .initial import CLIP_FLOOR, InitialEstimatorError
from .selection import MethodConfig, build_penalty
from .solver import PenaltySpec, fit, lambda_max

METHOD_ALIASES = {
    "lasso": "lasso",
    "adaptive": "adaptive_lasso",
    "adaptive_lasso": "adaptive_lasso",
    "transfer": "transfer_lasso",
    "transfer_lasso": "transfer_lasso",
    "adaptive_transfer": "adaptive_transfer_lasso",
    "adaptive_transfer_lasso": "adaptive_transfer_lasso",
}
MANIFEST = "run_manifest.json"


class UsageError(Exception):
    """Bad input from the user; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _family(name: str) -> str:
    key = name.strip().replace("-", "_")
    if key not in METHOD_ALIASES:
        raise UsageError(f"unknown method {name!r}; choose from lasso, adaptive, transfer, adaptive-transfer")
    return METHOD_ALIASES[key]


# -- data files -------------------------------------------------------------

def read_data(path, header: bool = False) -> RegressionProblem:
    """Read ``response, feature_1, ..., feature_p`` rows from a CSV file."""
    rows = []
    width = None
    try:
        with open(path, newline="") as fh:
            for lineno, record in enumerate(csv.reader(fh), 1):
                if header and lineno == 1:
                    continue
                if not record or all(not f.strip() for f in record):
                    continue
                if width is None:
                    width = len(record)
                    if width < 2:
                        raise UsageError(f"{path}: row {lineno}: need a response and at least one feature")
                elif len(record) != width:
                    raise UsageError(f"{path}: row {lineno}: expected {width} columns, found {len(record)}")
                values = []
                for col, field in enumerate(record, 1):
                    try:
                        values.append(float(field))
                    except ValueError:
                        raise UsageError(
                            f"{path}: row {lineno}, column {col}: cannot parse {field.strip()!r} as a number"
                        ) from None
                rows.append(values)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise UsageError(f"{path}: no data rows")
    data = np.array(rows)
    if not np.all(np.isfinite(data)):
        r, c = np.argwhere(~np.isfinite(data))[0]
        raise UsageError(f"{path}: row {r + 1 + int(header)}, column {c + 1}: non-finite value")
    return RegressionProblem(data[:, 1:], data[:, 0])


def read_vector(path) -> np.ndarray:
    """Read numbers separated by commas, whitespace or newlines."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read initial estimate {path}: {exc.strerror}") from None
    try:
        return np.array([float(t) for t in text.replace(",", " ").split()])
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


# -- fit --------------------------------------------------------------------

def _fit_penalty(args, problem: RegressionProblem) -> PenaltySpec:
    family = _family(args.method)
    cfg = MethodConfig(family, gamma=args.gamma, gamma1=args.gamma1, gamma2=args.gamma2,
                       alpha=args.alpha if family in ("transfer_lasso", "adaptive_transfer_lasso") else 1.0)
    beta_tilde = None
    if cfg.uses_initial:
        if args.initial is None:
            raise UsageError(f"--method {args.method} needs --initial FILE with the initial estimate")
        beta_tilde = read_vector(args.initial)
        if beta_tilde.size != problem.p:
            raise UsageError(f"initial estimate has {beta_tilde.size} entries, data has {problem.p} features")
    if args.kappa is None:
        shape = build_penalty(cfg, beta_tilde, args.clip, 1.0, p=problem.p)
        lam = args.lam
        eta = args.eta if cfg.mixing < 1 else 0.0
        return PenaltySpec(lam, eta, shape.v, shape.w, shape.anchor)
    if args.kappa == "auto":
        shape = build_penalty(cfg, beta_tilde, args.clip, 1.0, p=problem.p)
        kappa = lambda_max(problem, shape.v, shape.w, shape.anchor, cfg.mixing)
    else:
        try:
            kappa = float(args.kappa)
        except ValueError:
            raise UsageError(f"--kappa must be 'auto' or a number, got {args.kappa!r}") from None
    return build_penalty(cfg, beta_tilde, args.clip, kappa, p=problem.p)


def cmd_fit(args) -> int:
    problem = read_data(args.data, header=args.header)
    penalty = _fit_penalty(args, problem)
    res = fit(problem, penalty)
    print(f"lambda: {penalty.lam:.17g}")
    print(f"eta: {penalty.eta:.17g}")
    print("beta_hat: " + " ".join(f"{b:.17g}" for b in res.beta_hat))
    print("active_set: " + (" ".join(map(str, res.active_set.tolist())) or "(empty)"))
    anchored = res.anchored_set.tolist() if penalty.eta > 0 else []
    print("anchored_set: " + (" ".join(map(str, anchored)) or "(empty)"))
    print(f"kkt_residual: {res.kkt_residual:.3e}")
    print(f"iterations: {res.iterations}")
    print(f"converged: {str(res.converged).lower()}")
    if args.out:
        np.savetxt(args.out, res.beta_hat, fmt="%.17g")
    return 0 if res.converged else 2


# -- study ------------------------------------------------------------------

def _write_json_atomic(path: Path, payload: dict) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest-", suffix=".json")
    with os.fdopen(fd, "w") as fh:
        json.dump(payload, fh, indent=2, default=str)
        fh.write("\n")
    os.replace(tmp, path)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def cmd_study(args) -> int:
    from .experiments import STUDIES, config_from_values, parse_config_text, run_study

    study = args.name.replace("-", "_")
    if study not in STUDIES:
        raise UsageError(f"unknown study {args.name!r}; choose from "
                         + ", ".join(s.replace("_", "-") for s in STUDIES))
    values = {}
    if args.config:
        try:
            values = parse_config_text(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
    overrides = {"seed": args.seed, "replicates": args.replicates}
    if args.method:
        overrides["methods"] = tuple(_family(m) for m in args.method.split(","))
    config = config_from_values(study, values, **overrides)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{study}.csv"
    manifest = {
        "tool": "translasso",
        "version": __version__,
        "study": study,
        "seed": config.seed,
        "config": config.as_dict(),
        "config_file": args.config,
        "jobs": args.jobs,
        "started": _now(),
        "finished": None,
        "outputs": [],
    }
    _write_json_atomic(out / MANIFEST, manifest)
    result = run_study(config, args.jobs)
    result.to_csv(csv_path)
    manifest["finished"] = _now()
    manifest["outputs"] = [str(csv_path)]
    _write_json_atomic(out / MANIFEST, manifest)
    print(f"wrote {len(result.rows)} rows to {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="translasso", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="fit one problem from a CSV file")
    f.add_argument("data", help="CSV file: response in the first column, features after it")
    f.add_argument("--header", action="store_true", help="skip the first line of the CSV")
    f.add_argument("--method", default="lasso",
                   help="lasso, adaptive, transfer or adaptive-transfer")
    f.add_argument("--lambda", dest="lam", type=float, default=1.0, help="sparsity strength")
    f.add_argument("--eta", type=float, default=0.0, help="anchor strength")
    f.add_argument("--alpha", type=float, default=0.5, help="lam/(lam+eta) when --kappa is given")
    f.add_argument("--kappa", default=None, help="total strength, or 'auto' for the smallest saturating one")
    f.add_argument("--gamma", type=float, default=1.0)
    f.add_argument("--gamma1", type=float, default=1.0)
    f.add_argument("--gamma2", type=float, default=1.0)
    f.add_argument("--initial", default=None, help="file holding the initial estimate")
    f.add_argument("--clip", type=float, default=CLIP_FLOOR, help="floor on |initial| in the weights")
    f.add_argument("--out", default=None, help="write the coefficients here, one per line")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("study", help="run a simulation study and write CSV output")
    s.add_argument("name", help="convergence, phase-diagram, comparison, inconsistent-source, contours or priors")
    s.add_argument("--config", default=None, help="key = value configuration file")
    s.add_argument("--out", default=".", help="output directory")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--replicates", type=int, default=None)
    s.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: $TRANSLASSO_JOBS or 1)")
    s.add_argument("--method", default=None, help="comma-separated methods to run")
    s.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParameterError, InitialEstimatorError) as exc:
        print(f"translasso: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
