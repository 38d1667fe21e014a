"""JSON spec parsing for the CLI.

Measure files follow
``{"manifold": {...}, "points": [[...], ...], "weights": [...]}`` with
points in chart coordinates; density specs are
``{"kind": "uniform_ball", "center": [...], "radius": r}`` or
``{"kind": "atoms", "points": ..., "weights": ...}``.  All files are
UTF-8 JSON with IEEE-754 doubles in decimal.
"""

import json
import os

import numpy as np

from .cost import cosh_profile, counterexample_profile, power_profile
from .diagnostics import AtomSpec, UniformBallSpec
from .errors import SpecError
from .geometry import make_chart
from .transport import DiscreteMeasure


def load_json(path):
    if not os.path.exists(path):
        raise SpecError(f"spec file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"malformed JSON in {path}: {exc}") from exc


def parse_chart(d):
    if not isinstance(d, dict) or "kind" not in d:
        raise SpecError("manifold spec needs a 'kind'")
    try:
        return make_chart(d["kind"], dim=int(d.get("dim", 2)), curvature=d.get("curvature"))
    except Exception as exc:
        raise SpecError(f"bad manifold spec {d!r}: {exc}") from exc


def parse_profile(d, *, allow_counterexample=False):
    if not isinstance(d, dict) or "kind" not in d:
        raise SpecError("profile spec needs a 'kind'")
    kind = d["kind"]
    if kind == "power":
        try:
            return power_profile(float(d["p"]))
        except KeyError as exc:
            raise SpecError("power profile needs 'p'") from exc
    if kind == "counterexample":
        profile = counterexample_profile()
        if not allow_counterexample:
            raise SpecError(
                "counterexample profile violates the structural assumptions; "
                "pass --allow-counterexample to use it"
            )
        return profile
    if kind == "cosh":
        return cosh_profile()
    raise SpecError(f"unknown profile kind {kind!r}")


def parse_measure(d, chart, base_dir="."):
    if "file" in d:
        sub = load_json(os.path.join(base_dir, d["file"]))
        sub_chart = parse_chart(sub["manifold"]) if "manifold" in sub else chart
        if sub_chart != chart:
            raise SpecError("referenced measure lives on a different manifold")
        return parse_measure(sub, chart, base_dir)
    try:
        return DiscreteMeasure(
            chart=chart,
            points=np.asarray(d["points"], dtype=float),
            weights=np.asarray(d["weights"], dtype=float),
        )
    except KeyError as exc:
        raise SpecError(f"measure spec needs points and weights: {d!r}") from exc
    except Exception as exc:
        raise SpecError(f"invalid measure: {exc}") from exc


def parse_density_spec(d):
    kind = d.get("kind")
    if kind == "uniform_ball":
        return UniformBallSpec(
            center=np.asarray(d["center"], dtype=float), radius=float(d["radius"])
        )
    if kind == "atoms":
        return AtomSpec(
            points=np.asarray(d["points"], dtype=float),
            weights=np.asarray(d["weights"], dtype=float),
        )
    raise SpecError(f"unknown density spec kind {kind!r}")


def dump_json(obj, path=None):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def write_csv(rows, header, path=None):
    """Deterministic CSV writer (floats via repr, stable row order)."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for key in header:
            val = row[key] if isinstance(row, dict) else getattr(row, key)
            if isinstance(val, float):
                cells.append(repr(val))
            else:
                cells.append(str(val))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
