"""Report serialisation: JSONL step stream, CSV metrics and SVG snapshots.

JSONL floats use Python's shortest round-trip ``repr``, so a fixed config and
seed give byte-identical files. Wall-clock timings only go to the CSV.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import InvalidInputError
from ..setops import ConstrainedZonotope, interval_hull, support_polygon_2d

# Key order of one JSONL record; bump SCHEMA when it changes.
RECORD_SCHEMA = 1
RECORD_KEYS = (
    "schema", "k", "u", "x_true", "y", "attacked", "member_count", "members", "predicted",
    "consistent", "candidate_empty", "detected", "bound_center", "bound_radius", "inclusion",
    "safe_candidate_inclusion",
)
CSV_COLUMNS = ("k", "members", "radius", "detected_count", "inclusion", "millis")


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def set_to_json(s) -> dict:
    c = s.to_constrained()
    return {
        "center": _floats(c.center),
        "generators": _floats(c.generators),
        "A": _floats(c.constraint_lhs),
        "b": _floats(c.constraint_rhs),
    }


def set_from_json(d: dict) -> ConstrainedZonotope:
    n = len(d["center"])
    g = np.array(d["generators"], dtype=float).reshape(n, -1)
    a = np.array(d.get("A", []), dtype=float)
    b = np.array(d.get("b", []), dtype=float)
    return ConstrainedZonotope(d["center"], g, a.reshape(len(b), g.shape[1]), b)


def record_to_json(r) -> dict:
    return {
        "schema": RECORD_SCHEMA,
        "k": r.k,
        "u": _floats(r.u),
        "x_true": _floats(r.x_true),
        "y": [_floats(y) for y in r.y],
        "attacked": list(r.attacked),
        "member_count": r.member_count,
        "members": [set_to_json(m) for m in r.members],
        "predicted": [set_to_json(m) for m in r.predicted],
        "consistent": [set_to_json(m) for m in r.consistent],
        "candidate_empty": list(r.candidate_empty),
        "detected": list(r.detected),
        "bound_center": _floats(r.bound_center),
        "bound_radius": float(r.bound_radius),
        "inclusion": bool(r.inclusion),
        "safe_candidate_inclusion": bool(r.safe_candidate_inclusion),
    }


def emit_jsonl(report, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r in report.records:
            fh.write(json.dumps(record_to_json(r), separators=(",", ":"), allow_nan=False))
            fh.write("\n")


def load_jsonl(path) -> list:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def emit_csv_metrics(report, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.records:
            w.writerow([r.k, r.member_count, repr(float(r.bound_radius)), len(r.detected),
                        int(r.inclusion), f"{r.millis:.3f}"])


# ---------------------------------------------------------------- SVG

_STYLE = {
    "predicted": ("#2ca02c", "none", "1.5"),
    "safe": ("#1f77b4", "#1f77b4", "1"),
    "attacked": ("#d62728", "#d62728", "1"),
    "members": ("#000000", "none", "2"),
}
_SIZE = 480


def _polygon(points: np.ndarray, to_px) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in (to_px(p) for p in points))


def emit_svg_snapshot(records, k: int, path, dims: Sequence[int] = (0, 1), directions: int = 64) -> None:
    """Render step ``k``: predicted sets, consistent sets (safe blue / attacked red),
    estimate members and the true state.

    ``records`` is a :class:`RunReport` or the list of dicts from :func:`load_jsonl`.
    """
    if hasattr(records, "records"):
        records = [record_to_json(r) for r in records.records]
    rec = next((r for r in records if r["k"] == k), None)
    if rec is None:
        raise InvalidInputError(f"no record for k={k}")
    n = len(rec["x_true"])
    proj = np.zeros((2, n))
    proj[0, dims[0]] = 1.0
    proj[1, dims[1]] = 1.0

    predicted = [set_from_json(d) for d in rec["predicted"]]
    members = [set_from_json(d) for d in rec["members"]]
    consistent = [set_from_json(d) for d in rec["consistent"]]
    x = proj @ np.array(rec["x_true"])

    lo, hi = x.copy(), x.copy()
    for s in predicted + members:
        box = interval_hull(s)
        lo = np.minimum(lo, proj @ box.lower)
        hi = np.maximum(hi, proj @ box.upper)
    span = np.maximum(hi - lo, 1e-6)
    lo, hi = lo - 0.3 * span, hi + 0.3 * span
    scale = _SIZE / float(np.max(hi - lo))

    def to_px(p):
        return (p[0] - lo[0]) * scale, _SIZE - (p[1] - lo[1]) * scale

    layers = []
    for i, s in enumerate(consistent):
        kind = "attacked" if rec["attacked"][i] else "safe"
        stroke, fill, width = _STYLE[kind]
        pts = support_polygon_2d(s, proj, directions)
        layers.append(
            f'<polygon class="{kind}" points="{_polygon(pts, to_px)}" stroke="{stroke}" fill="{fill}" '
            f'fill-opacity="0.15" stroke-width="{width}"/>'
        )
    for name, sets in (("predicted", predicted), ("members", members)):
        stroke, fill, width = _STYLE[name]
        for s in sets:
            pts = support_polygon_2d(s, proj, directions)
            layers.append(
                f'<polygon class="{name}" points="{_polygon(pts, to_px)}" stroke="{stroke}" '
                f'fill="{fill}" stroke-width="{width}"/>'
            )
    px, py = to_px(x)
    layers.append(f'<circle class="true-state" cx="{px:.2f}" cy="{py:.2f}" r="4" fill="#ff7f0e"/>')

    svg = "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE + 24}" '
        f'viewBox="0 0 {_SIZE} {_SIZE + 24}">',
        f'<defs><clipPath id="view"><rect x="0" y="0" width="{_SIZE}" height="{_SIZE}"/></clipPath></defs>',
        f'<rect x="0" y="0" width="{_SIZE}" height="{_SIZE}" fill="white" stroke="#999"/>',
        '<g clip-path="url(#view)">',
        *layers,
        "</g>",
        f'<text x="4" y="{_SIZE + 17}" font-family="sans-serif" font-size="13">k = {k}, '
        f'members = {rec["member_count"]}, detected = {rec["detected"]}, '
        f'x{dims[0] + 1} in [{lo[0]:.3g}, {hi[0]:.3g}], x{dims[1] + 1} in [{lo[1]:.3g}, {hi[1]:.3g}]</text>',
        "</svg>",
        "",
    ])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg, encoding="utf-8")


def emit_all(report, out_dir, snapshot_steps: Iterable[int] = (), dims: Sequence[int] = (0, 1)) -> dict:
    out = Path(out_dir)
    paths = {"jsonl": out / "steps.jsonl", "csv": out / "metrics.csv", "summary": out / "summary.json"}
    emit_jsonl(report, paths["jsonl"])
    emit_csv_metrics(report, paths["csv"])
    paths["summary"].write_text(json.dumps(report.summary(), indent=2) + "\n", encoding="utf-8")
    for k in snapshot_steps:
        p = out / f"snapshot_k{k:03d}.svg"
        emit_svg_snapshot(report, k, p, dims=dims)
        paths[f"svg_{k}"] = p
    return paths
