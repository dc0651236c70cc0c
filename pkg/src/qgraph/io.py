"""JSON reading and writing of graphs, decorations and attachment maps."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .graph import AttachmentMap, Condition, Decoration, GraphError, MetricEdge, MetricGraph


def graph_to_dict(graph: MetricGraph) -> dict[str, Any]:
    out: dict[str, Any] = {
        "vertices": [{"id": v, "condition": c.value} for v, c in graph.vertices],
        "edges": [
            {"id": e.id, "start": e.start, "end": e.end, "length": e.length, "shift": list(e.shift)}
            for e in graph.edges
        ],
        "period_rank": graph.period_rank,
    }
    if graph.uniformity is not None:
        out["uniformity"] = graph.uniformity
    return out


def graph_from_dict(data: dict[str, Any]) -> MetricGraph:
    try:
        p = int(data.get("period_rank", 0))
        vertices = tuple(
            (str(v["id"]), Condition(str(v.get("condition", "kirchhoff")).lower())) for v in data["vertices"]
        )
        edges = tuple(
            MetricEdge(
                str(e["id"]),
                str(e["start"]),
                str(e["end"]),
                float(e["length"]),
                tuple(int(s) for s in e.get("shift", ())),
            )
            for e in data["edges"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError(f"malformed graph file: {exc}") from exc
    uniformity = data.get("uniformity")
    return MetricGraph(vertices, edges, p, None if uniformity is None else float(uniformity))


def decoration_to_dict(dec: Decoration) -> dict[str, Any]:
    out = graph_to_dict(dec.graph)
    out["boundary"] = list(dec.boundary)
    return out


def decoration_from_dict(data: dict[str, Any]) -> Decoration:
    if "boundary" not in data:
        raise GraphError("decoration file needs a 'boundary' list")
    return Decoration(graph_from_dict(data), tuple(str(b) for b in data["boundary"]))


def attachment_from_dict(data: dict[str, Any]) -> AttachmentMap:
    attach: AttachmentMap = {}
    try:
        for v, items in data.items():
            attach[str(v)] = {(str(it["edge"]), str(it["end"])): str(it["boundary_vertex"]) for it in items}
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed attachment file: {exc}") from exc
    return attach


def attachment_to_dict(attach: AttachmentMap) -> dict[str, Any]:
    return {
        v: [{"edge": e, "end": role, "boundary_vertex": b} for (e, role), b in sorted(m.items())]
        for v, m in attach.items()
    }


def _load(path: str | Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: invalid JSON ({exc})") from exc


def load_graph(path: str | Path) -> MetricGraph:
    return graph_from_dict(_load(path))


def load_decoration(path: str | Path) -> Decoration:
    return decoration_from_dict(_load(path))


def load_attachment(path: str | Path) -> AttachmentMap:
    return attachment_from_dict(_load(path))


def save_graph(graph: MetricGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(graph), indent=2))


def save_decoration(dec: Decoration, path: str | Path) -> None:
    Path(path).write_text(json.dumps(decoration_to_dict(dec), indent=2))
