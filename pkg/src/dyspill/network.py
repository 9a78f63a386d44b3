"""Spillover tables as directed weighted graphs, with DOT/GraphML/JSON export."""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, replace
from typing import Mapping
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .errors import DataError
from .spillover import SpilloverTable

__all__ = [
    "Node",
    "Edge",
    "SpilloverGraph",
    "ThresholdSpec",
    "to_graph",
    "apply_threshold",
    "export",
    "graph_from_json",
    "load_coordinates",
]

GRAPH_SCHEMA = "dyspill.spillover-graph"
GRAPH_VERSION = 1
FORMATS = ("dot", "graphml", "json")


@dataclass(frozen=True)
class Node:
    label: str
    net: float
    to_others: float
    from_others: float
    role: str
    size: float
    strong_transmitter: bool = False
    weak_receiver: bool = False
    lat: float | None = None
    lon: float | None = None


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    weight: float
    emphasis: bool = False


@dataclass(frozen=True)
class SpilloverGraph:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    retain_above: float | None = None
    highlight_above: float | None = None


@dataclass(frozen=True)
class ThresholdSpec:
    """Drop edges with weight <= ``retain_above``; flag those > ``highlight_above``."""

    retain_above: float = 0.0
    highlight_above: float = 0.0

    def __post_init__(self):
        if not 0 <= self.retain_above <= self.highlight_above:
            raise ValueError("threshold spec needs 0 <= retain_above <= highlight_above")


def _role(net: float) -> str:
    return "transmitter" if net > 0 else "receiver"


def to_graph(table: SpilloverTable, coords: Mapping[str, tuple[float, float]] | None = None) -> SpilloverGraph:
    """One node per location and one edge per ordered pair of distinct locations.

    Node ``size`` is ``log(1 + to_others)``. ``strong_transmitter`` and
    ``weak_receiver`` mark nodes whose outward (resp. inward) spillover lies
    above the within-graph 75th percentile.
    """
    out_q = float(np.quantile(table.to_others, 0.75))
    in_q = float(np.quantile(table.from_others, 0.75))
    if coords is not None:
        missing = [loc for loc in table.locations if loc not in coords]
        if missing:
            warnings.warn(f"no coordinates for {missing}; emitted without geo attributes", stacklevel=2)
    nodes = []
    for i, loc in enumerate(table.locations):
        lat, lon = (coords or {}).get(loc, (None, None))
        net = float(table.net[i])
        nodes.append(
            Node(
                label=loc,
                net=net,
                to_others=float(table.to_others[i]),
                from_others=float(table.from_others[i]),
                role=_role(net),
                size=math.log1p(max(float(table.to_others[i]), 0.0)),
                strong_transmitter=bool(table.to_others[i] > out_q),
                weak_receiver=bool(table.from_others[i] > in_q),
                lat=lat,
                lon=lon,
            )
        )
    edges = [
        Edge(src, dst, float(table.fevd[i, j]))
        for i, src in enumerate(table.locations)
        for j, dst in enumerate(table.locations)
        if i != j
    ]
    return SpilloverGraph(tuple(nodes), tuple(edges))


def apply_threshold(graph: SpilloverGraph, spec: ThresholdSpec, *, recompute_nodes: bool = False) -> SpilloverGraph:
    """Keep edges with weight > ``spec.retain_above``.

    Node attributes describe the full table unless ``recompute_nodes`` is set,
    in which case net/to/from/size are rebuilt from the surviving edges only.
    """
    edges = tuple(
        replace(e, emphasis=e.weight > spec.highlight_above)
        for e in graph.edges
        if e.weight > spec.retain_above
    )
    nodes = graph.nodes
    if recompute_nodes:
        out = {n.label: 0.0 for n in nodes}
        inc = {n.label: 0.0 for n in nodes}
        for e in edges:
            out[e.source] += e.weight
            inc[e.target] += e.weight
        nodes = tuple(
            replace(
                n,
                to_others=out[n.label],
                from_others=inc[n.label],
                net=out[n.label] - inc[n.label],
                role=_role(out[n.label] - inc[n.label]),
                size=math.log1p(out[n.label]),
            )
            for n in nodes
        )
    return SpilloverGraph(nodes, edges, spec.retain_above, spec.highlight_above)


def _sorted(graph: SpilloverGraph):
    nodes = sorted(graph.nodes, key=lambda n: n.label)
    edges = sorted(graph.edges, key=lambda e: (e.source, e.target))
    return nodes, edges


def _num(x: float) -> str:
    return repr(float(x))


def _to_dot(graph: SpilloverGraph) -> str:
    nodes, edges = _sorted(graph)
    q = lambda s: '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'  # noqa: E731
    lines = ["digraph spillover {"]
    for n in nodes:
        attrs = [
            f"net={_num(n.net)}",
            f"role={q(n.role)}",
            f"size={_num(n.size)}",
            f'color={q("blue" if n.role == "transmitter" else "red")}',
        ]
        if n.lat is not None:
            attrs.append(f'pos={q(f"{_num(n.lon)},{_num(n.lat)}!")}')
        lines.append(f"  {q(n.label)} [{', '.join(attrs)}];")
    for e in edges:
        attrs = [f"weight={_num(e.weight)}"]
        if e.emphasis:
            attrs.append('emphasis="true"')
        lines.append(f"  {q(e.source)} -> {q(e.target)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


_GML_NODE_KEYS = (
    ("net", "double"),
    ("to_others", "double"),
    ("from_others", "double"),
    ("role", "string"),
    ("size", "double"),
    ("strong_transmitter", "boolean"),
    ("weak_receiver", "boolean"),
    ("lat", "double"),
    ("lon", "double"),
)
_GML_EDGE_KEYS = (("weight", "double"), ("emphasis", "boolean"))


def _gml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _num(v)
    return escape(str(v))


def _to_graphml(graph: SpilloverGraph) -> str:
    nodes, edges = _sorted(graph)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
    ]
    for name, typ in _GML_NODE_KEYS:
        out.append(f'  <key id="n_{name}" for="node" attr.name="{name}" attr.type="{typ}"/>')
    for name, typ in _GML_EDGE_KEYS:
        out.append(f'  <key id="e_{name}" for="edge" attr.name="{name}" attr.type="{typ}"/>')
    out.append('  <graph id="spillover" edgedefault="directed">')
    for n in nodes:
        out.append(f"    <node id={quoteattr(n.label)}>")
        for name, _ in _GML_NODE_KEYS:
            v = getattr(n, name)
            if v is not None:
                out.append(f'      <data key="n_{name}">{_gml_value(v)}</data>')
        out.append("    </node>")
    for k, e in enumerate(edges):
        out.append(f'    <edge id="e{k}" source={quoteattr(e.source)} target={quoteattr(e.target)}>')
        out.append(f'      <data key="e_weight">{_num(e.weight)}</data>')
        out.append(f'      <data key="e_emphasis">{_gml_value(e.emphasis)}</data>')
        out.append("    </edge>")
    out.append("  </graph>")
    out.append("</graphml>")
    return "\n".join(out) + "\n"


def _to_json(graph: SpilloverGraph) -> str:
    nodes, edges = _sorted(graph)
    doc = {
        "schema": GRAPH_SCHEMA,
        "version": GRAPH_VERSION,
        "retain_above": graph.retain_above,
        "highlight_above": graph.highlight_above,
        "nodes": [n.__dict__ for n in nodes],
        "edges": [e.__dict__ for e in edges],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def export(graph: SpilloverGraph, format: str = "json") -> bytes:
    """Serialise with nodes sorted by label and edges by (source, target)."""
    fmt = format.lower()
    if fmt == "dot":
        text = _to_dot(graph)
    elif fmt == "graphml":
        text = _to_graphml(graph)
    elif fmt in ("json", "structured-json"):
        text = _to_json(graph)
    else:
        raise ValueError(f"unsupported export format {format!r}; choose from {FORMATS}")
    return text.encode("utf-8")


def graph_from_json(data: bytes | str) -> SpilloverGraph:
    doc = json.loads(data)
    if doc.get("schema") != GRAPH_SCHEMA:
        raise DataError("not a spillover-graph document")
    if doc.get("version") != GRAPH_VERSION:
        raise DataError(f"unsupported graph schema version {doc.get('version')}")
    return SpilloverGraph(
        tuple(Node(**n) for n in doc["nodes"]),
        tuple(Edge(**e) for e in doc["edges"]),
        doc.get("retain_above"),
        doc.get("highlight_above"),
    )


def load_coordinates(source, delimiter: str = ",") -> dict[str, tuple[float, float]]:
    """Read ``label, lat, lon`` rows (header row required)."""
    close = isinstance(source, (str, os.PathLike))
    fh = open(source, newline="", encoding="utf-8") if close else source
    try:
        reader = csv.DictReader(fh, delimiter=delimiter)
        out = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                out[row["label"].strip()] = (float(row["lat"]), float(row["lon"]))
            except (KeyError, TypeError, ValueError, AttributeError):
                raise DataError(f"coordinates row {lineno}: expected label, lat, lon") from None
        return out
    finally:
        if close:
            fh.close()
