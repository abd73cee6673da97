"""File formats: account JSONL, edge CSV, GraphML, density CSV/SVG, summary table."""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from boostnet.graph import (
    AccountRecord,
    CommunityAssignment,
    DirectedEdge,
    NetworkSnapshot,
    ScoreTriple,
    build_network,
    intersect_snapshots,
)
from boostnet.kde import KdeGrid, ThresholdModel

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


class SnapshotFormatError(ValueError):
    pass


# -- accounts / edges ---------------------------------------------------------

def account_to_dict(rec: AccountRecord) -> dict:
    return {
        "id": rec.id,
        "is_seed": rec.is_seed,
        "scores": rec.scores.to_dict() if rec.scores else None,
        "label": rec.label,
        "fetch_status": rec.fetch_status,
    }


def account_from_dict(d: dict) -> AccountRecord:
    s = d.get("scores")
    scores = ScoreTriple(s["temporal"], s["network"], s["friend"]) if s is not None else None
    return AccountRecord(d["id"], bool(d["is_seed"]), scores, d["label"], d["fetch_status"])


def accounts_jsonl(snapshot: NetworkSnapshot) -> str:
    return "".join(json.dumps(account_to_dict(snapshot.accounts[k])) + "\n" for k in sorted(snapshot.accounts))


def export_accounts_jsonl(snapshot: NetworkSnapshot, path) -> Path:
    path = Path(path)
    path.write_text(accounts_jsonl(snapshot), encoding="utf-8")
    return path


def read_accounts_jsonl(path) -> list[AccountRecord]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(account_from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise SnapshotFormatError(f"{path}:{lineno}: {exc}") from exc
    return out


def edges_csv(snapshot: NetworkSnapshot) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["follower_id", "followee_id"])
    for e in sorted(snapshot.edges):
        w.writerow([e.follower, e.followee])
    return buf.getvalue()


def export_edges_csv(snapshot: NetworkSnapshot, path) -> Path:
    path = Path(path)
    path.write_text(edges_csv(snapshot), encoding="utf-8")
    return path


def read_edges_csv(path) -> set[DirectedEdge]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["follower_id", "followee_id"]:
            raise SnapshotFormatError(f"{path}: unexpected header {header}")
        try:
            return {DirectedEdge(f, g) for f, g in reader}
        except ValueError as exc:
            raise SnapshotFormatError(f"{path}: {exc}") from exc


def save_snapshot(snapshot: NetworkSnapshot, out_dir, provenance: dict | None = None) -> Path:
    """Write ``accounts.jsonl``, ``edges.csv`` and ``meta.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_accounts_jsonl(snapshot, out / "accounts.jsonl")
    export_edges_csv(snapshot, out / "edges.csv")
    meta = {
        "seeds": list(snapshot.seeds),
        "created_at": snapshot.created_at.isoformat(),
        "expansion_depth": snapshot.expansion_depth,
        "provenance": provenance or {},
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return out


def load_snapshot(in_dir) -> NetworkSnapshot:
    src = Path(in_dir)
    try:
        meta = json.loads((src / "meta.json").read_text(encoding="utf-8"))
        return build_network(
            read_accounts_jsonl(src / "accounts.jsonl"),
            read_edges_csv(src / "edges.csv"),
            meta["seeds"],
            meta["expansion_depth"],
            created_at=datetime.fromisoformat(meta["created_at"]),
        )
    except SnapshotFormatError:
        raise
    except (OSError, ValueError, KeyError) as exc:
        raise SnapshotFormatError(f"cannot load snapshot from {src}: {exc}") from exc


# -- GraphML ------------------------------------------------------------------

_NODE_KEYS = [
    ("label", "string"),
    ("is_seed", "boolean"),
    ("fetch_status", "string"),
    ("temporal", "double"),
    ("network", "double"),
    ("friend", "double"),
    ("community", "int"),
]


def graphml_document(snapshot: NetworkSnapshot, community: CommunityAssignment | None = None) -> str:
    root = ET.Element("graphml", {"xmlns": GRAPHML_NS})
    for name, typ in _NODE_KEYS:
        if name == "community" and community is None:
            continue
        ET.SubElement(root, "key", {"id": name, "for": "node", "attr.name": name, "attr.type": typ})
    graph = ET.SubElement(root, "graph", {"id": "G", "edgedefault": "directed"})
    for aid in sorted(snapshot.accounts):
        rec = snapshot.accounts[aid]
        node = ET.SubElement(graph, "node", {"id": aid})
        values = {"label": rec.label, "is_seed": "true" if rec.is_seed else "false", "fetch_status": rec.fetch_status}
        if rec.scores is not None:
            values.update({k: repr(v) for k, v in rec.scores.to_dict().items()})
        if community is not None:
            values["community"] = str(community.mapping[aid])
        for name, _ in _NODE_KEYS:
            if name in values:
                ET.SubElement(node, "data", {"key": name}).text = values[name]
    for k, e in enumerate(sorted(snapshot.edges)):
        ET.SubElement(graph, "edge", {"id": f"e{k}", "source": e.follower, "target": e.followee})
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def export_graphml(snapshot: NetworkSnapshot, path, community: CommunityAssignment | None = None) -> Path:
    path = Path(path)
    path.write_text(graphml_document(snapshot, community), encoding="utf-8")
    return path


# -- density artifacts ----------------------------------------------------------

RAMP_LIGHT = (255, 255, 255)
RAMP_DARK = (8, 48, 107)
RAMP_LEVELS = 64


def density_csv(grid: KdeGrid, provenance: dict | None = None) -> str:
    ax = [str(a) for a in grid.axes]
    (x0, x1), (y0, y1) = grid.ranges
    lines = [
        f"# axes: {ax[0]},{ax[1]}",
        f"# rows: {ax[0]} from {x0!r} to {x1!r} ({grid.resolution} points)",
        f"# columns: {ax[1]} from {y0!r} to {y1!r} ({grid.resolution} points)",
        f"# bandwidths: {grid.bandwidths[0]!r},{grid.bandwidths[1]!r}",
    ]
    if provenance:
        lines.append(f"# provenance: {json.dumps(provenance, sort_keys=True)}")
    for row in grid.density:
        lines.append(",".join(f"{v:.12g}" for v in row))
    return "\n".join(lines) + "\n"


def read_density_csv(text: str) -> tuple[dict[str, str], np.ndarray]:
    meta, rows = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif line:
            rows.append([float(v) for v in line.split(",")])
    return meta, np.asarray(rows)


def _ramp(level: int) -> str:
    t = level / (RAMP_LEVELS - 1)
    r, g, b = (round(a + (z - a) * t) for a, z in zip(RAMP_LIGHT, RAMP_DARK))
    return f"#{r:02x}{g:02x}{b:02x}"


def density_svg(grid: KdeGrid, model: ThresholdModel | None = None, cell: int = 2,
                provenance: dict | None = None) -> str:
    """Heatmap with the first axis horizontal and the second vertical (upwards)."""
    n = grid.resolution
    margin = 50
    side = n * cell
    width = height = side + 2 * margin
    peak = float(grid.density.max())
    levels = (np.rint(grid.density / peak * (RAMP_LEVELS - 1)).astype(int)
              if peak > 0 else np.zeros_like(grid.density, dtype=int))
    ax_x, ax_y = (str(a) for a in grid.axes)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{margin}" y="{margin}" width="{side}" height="{side}" fill="{_ramp(0)}" stroke="#000000"/>',
        '<g shape-rendering="crispEdges">',
    ]
    if provenance:
        out.insert(1, f"<desc>{escape(json.dumps(provenance, sort_keys=True))}</desc>")
    for j in range(n):
        y = margin + (n - 1 - j) * cell
        row = levels[:, j]
        i = 0
        while i < n:
            k = i
            while k + 1 < n and row[k + 1] == row[i]:
                k += 1
            if row[i] > 0:
                out.append(f'<rect x="{margin + i * cell}" y="{y}" width="{(k - i + 1) * cell}" '
                           f'height="{cell}" fill="{_ramp(int(row[i]))}"/>')
            i = k + 1
    out.append("</g>")
    if model is not None:
        (x0, x1), (y0, y1) = grid.ranges
        tx = margin + (model.threshold(ax_x) - x0) / (x1 - x0) * side
        ty = margin + side - (model.threshold(ax_y) - y0) / (y1 - y0) * side
        style = 'stroke="#d62728" stroke-width="1.5" stroke-dasharray="6,4"'
        out.append(f'<line class="threshold" x1="{tx:.2f}" y1="{margin}" x2="{tx:.2f}" y2="{margin + side}" {style}/>')
        out.append(f'<line class="threshold" x1="{margin}" y1="{ty:.2f}" x2="{margin + side}" y2="{ty:.2f}" {style}/>')
    out.append(f'<text x="{margin + side / 2}" y="{height - 15}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="14">{ax_x} score</text>')
    out.append(f'<text x="15" y="{margin + side / 2}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="14" transform="rotate(-90 15 {margin + side / 2})">{ax_y} score</text>')
    out.append(f'<text x="{margin + side / 2}" y="30" text-anchor="middle" font-family="sans-serif" '
               f'font-size="14">density: {ax_x} vs {ax_y}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_density_artifacts(grids, out_dir, model: ThresholdModel | None = None,
                           provenance: dict | None = None) -> list[Path]:
    """Write ``density_<a>_<b>.csv`` and ``.svg`` for each pairwise grid."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items = grids.values() if isinstance(grids, dict) else grids
    written = []
    for grid in items:
        stem = "density_" + "_".join(str(a) for a in grid.axes)
        csv_path, svg_path = out / f"{stem}.csv", out / f"{stem}.svg"
        csv_path.write_text(density_csv(grid, provenance), encoding="utf-8")
        svg_path.write_text(density_svg(grid, model, provenance=provenance), encoding="utf-8")
        written += [csv_path, svg_path]
    return written


# -- summary table --------------------------------------------------------------

@dataclass(frozen=True)
class SummaryReport:
    rows: tuple[tuple[str, int, int], ...]
    intersection: tuple[int, int] | None = None

    def __post_init__(self):
        for name, total, bots in self.rows:
            if not 0 <= bots <= total:
                raise ValueError(f"{name}: bot count {bots} exceeds total {total}")
        if self.intersection is not None:
            shared, shared_bots = self.intersection
            if not 0 <= shared_bots <= shared:
                raise ValueError("shared bots exceed shared accounts")

    def render(self) -> str:
        names = [r[0] for r in self.rows] + ["Dataset", "Shared"]
        w = max(12, max(len(n) for n in names) + 2)
        rule = "-" * (w + 20)
        lines = ["Accounts in Network", rule, f"{'Dataset':<{w}}{'Total':>10}{'Bots':>10}", rule]
        for name, total, bots in self.rows:
            lines.append(f"{name:<{w}}{total:>10}{bots:>10}")
        lines.append(rule)
        if self.intersection is not None:
            lines.append(f"{'Shared':<{w}}{self.intersection[0]:>10}{self.intersection[1]:>10}")
            lines.append(rule)
        return "\n".join(lines) + "\n"


def summary_report(datasets: Sequence[tuple[str, NetworkSnapshot]]) -> SummaryReport:
    if not 1 <= len(datasets) <= 2:
        raise ValueError("summary_report takes one or two datasets")
    rows = tuple(
        (name, len(snap.accounts), sum(r.label == "socialbot" for r in snap.accounts.values()))
        for name, snap in datasets
    )
    inter = None
    if len(datasets) == 2:
        both = intersect_snapshots(datasets[0][1], datasets[1][1])
        inter = (len(both["shared_ids"]), len(both["shared_bot_ids"]))
    return SummaryReport(rows, inter)
