"""Plan, counts and experiment-config files, and deterministic result documents."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .estimators import LinearConstraint
from .model import ModelParams, StressPlan
from .simulation import ContaminationSpec, ExperimentConfig


def _read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object at top level")
    return doc


def plan_from_dict(doc: dict, source: str = "plan") -> StressPlan:
    keys = ("stress_levels", "change_times", "inspection_times")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise InputError(f"{source}: missing field(s) {', '.join(missing)}")
    try:
        return StressPlan(*(doc[k] for k in keys))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise InputError(f"{source}: {exc}") from None
        raise InputError(f"{source}: arrays must hold numbers ({exc})") from None


def load_plan(path) -> StressPlan:
    """Read a JSON plan with arrays ``stress_levels``, ``change_times``, ``inspection_times``."""
    return plan_from_dict(_read_json(path), str(path))


def parse_counts(text: str, source: str = "counts") -> np.ndarray:
    """Parse ``cell,count`` CSV text; cells must be exactly 1..L+1 (any order)."""
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader]
    if not rows:
        raise InputError(f"{source}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    if header != ["cell", "count"]:
        raise InputError(f"{source}: line 1: header must be 'cell,count', got {rows[0]}")
    seen: dict[int, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise InputError(f"{source}: line {lineno}: expected 2 columns, got {len(row)}")
        cell_s, count_s = (c.strip() for c in row)
        try:
            cell = int(cell_s)
        except ValueError:
            raise InputError(
                f"{source}: line {lineno}, column 1: cell {cell_s!r} is not an integer"
            ) from None
        try:
            value = float(count_s)
        except ValueError:
            raise InputError(
                f"{source}: line {lineno}, column 2: count {count_s!r} is not a number"
            ) from None
        if value < 0:
            raise InputError(f"{source}: line {lineno}, column 2: negative count {count_s}")
        if value != int(value):
            raise InputError(
                f"{source}: line {lineno}, column 2: count {count_s} is not an integer")
        if cell in seen:
            raise InputError(f"{source}: line {lineno}: duplicate cell {cell}")
        seen[cell] = int(value)
    if not seen:
        raise InputError(f"{source}: no data rows")
    n_cells = max(seen)
    gaps = [c for c in range(1, n_cells + 1) if c not in seen]
    if gaps or min(seen) < 1:
        bad = gaps[0] if gaps else min(seen)
        raise InputError(f"{source}: cells must run 1..{n_cells}; cell {bad} is missing"
                         if gaps else f"{source}: invalid cell {bad}")
    counts = np.array([seen[c] for c in range(1, n_cells + 1)], dtype=np.int64)
    if counts.sum() == 0:
        raise InputError(f"{source}: all counts are zero")
    return counts


def load_counts(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_counts(text, str(path))


def counts_to_csv(counts) -> str:
    lines = ["cell,count"] + [f"{j},{int(c)}" for j, c in enumerate(counts, start=1)]
    return "\n".join(lines) + "\n"


def params_from_dict(doc: dict) -> ModelParams:
    try:
        return ModelParams(float(doc["theta0"]), float(doc["theta1"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"parameters need theta0 and theta1 ({exc})") from None


def constraint_from_dict(doc: dict) -> LinearConstraint:
    try:
        return LinearConstraint(tuple(doc["m"]), float(doc["d"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"constraint needs m (two numbers) and d ({exc})") from None


def contamination_from_dict(doc: dict | None) -> ContaminationSpec | None:
    if doc is None:
        return None
    try:
        return ContaminationSpec(int(doc["cell"]), float(doc["epsilon"]),
                                 str(doc.get("target", "theta0")))
    except (KeyError, TypeError) as exc:
        raise InputError(f"contamination needs cell and epsilon ({exc})") from None


def config_from_dict(doc: dict, workers: int | None = None) -> tuple[ExperimentConfig, dict]:
    """Build an :class:`ExperimentConfig`; returns it with the optional extras.

    Extras are ``sample_sizes``, ``epsilons`` and ``alternative`` when present.
    """
    plan = doc.get("plan")
    if plan is None:
        raise InputError("config: missing plan")
    try:
        cfg = ExperimentConfig(
            plan=plan_from_dict(plan, "config plan"),
            true_params=params_from_dict(doc["true_params"]),
            N=int(doc["N"]),
            R=int(doc["R"]),
            betas=tuple(doc["betas"]),
            constraint=constraint_from_dict(doc["constraint"]),
            contamination=contamination_from_dict(doc.get("contamination")),
            seed=int(doc.get("seed", 0)),
            alpha=float(doc.get("alpha", 0.05)),
            workers=int(workers if workers is not None else doc.get("workers", 1)),
        )
    except KeyError as exc:
        raise InputError(f"config: missing field {exc}") from None
    extras = {}
    if "sample_sizes" in doc:
        extras["sample_sizes"] = [int(n) for n in doc["sample_sizes"]]
    if "epsilons" in doc:
        extras["epsilons"] = [float(e) for e in doc["epsilons"]]
    if doc.get("alternative") is not None:
        extras["alternative"] = params_from_dict(doc["alternative"])
    return cfg, extras


def load_config(path, workers: int | None = None):
    return config_from_dict(_read_json(path), workers)


def dumps(doc) -> str:
    """Stable JSON: sorted keys, fixed indentation, round-trip float repr."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    return buf.getvalue()
