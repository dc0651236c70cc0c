"""Metric graph data types, decorations and the Dirichlet edge spectrum.

A metric graph is stored as plain immutable data: a tuple of
``(vertex_id, condition)`` pairs and a tuple of :class:`MetricEdge`.
Construction is deliberately lenient so that :func:`validate` can report
every problem at once; solvers call :func:`require_valid` instead.
"""
from __future__ import annotations

import bisect
import math
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

REL_TOL = 1e-12


class GraphError(ValueError):
    """Invalid graph, decoration or attachment (a precondition failure)."""


class Condition(str, Enum):
    KIRCHHOFF = "kirchhoff"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class MetricEdge:
    id: str
    start: str
    end: str
    length: float
    shift: tuple[int, ...] = ()

    @property
    def is_loop(self) -> bool:
        return self.start == self.end


@dataclass(frozen=True)
class MetricGraph:
    """Finite (``period_rank == 0``) or periodic metric graph.

    For a periodic graph the data describe the fundamental domain: an edge
    with shift ``s`` runs from ``start`` in cell 0 to ``end`` in cell ``s``.
    """

    vertices: tuple[tuple[str, Condition], ...]
    edges: tuple[MetricEdge, ...]
    period_rank: int = 0
    uniformity: float | None = None

    def __post_init__(self) -> None:
        verts = self.vertices
        if isinstance(verts, Mapping):
            verts = verts.items()
        verts = tuple((str(v), Condition(c)) for v, c in verts)
        edges = []
        for e in self.edges:
            shift = tuple(int(s) for s in e.shift)
            if not shift:
                shift = (0,) * self.period_rank
            edges.append(MetricEdge(str(e.id), str(e.start), str(e.end), float(e.length), shift))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(edges))

    @property
    def vertex_ids(self) -> list[str]:
        return [v for v, _ in self.vertices]

    @property
    def conditions(self) -> dict[str, Condition]:
        return dict(self.vertices)

    @property
    def total_length(self) -> float:
        return sum(e.length for e in self.edges)

    @property
    def is_periodic(self) -> bool:
        return self.period_rank > 0

    def degree(self) -> dict[str, int]:
        deg = {v: 0 for v in self.vertex_ids}
        for e in self.edges:
            deg[e.start] = deg.get(e.start, 0) + 1
            deg[e.end] = deg.get(e.end, 0) + 1
        return deg

    def incident_ends(self) -> dict[str, list[tuple[int, int]]]:
        """Map vertex id to its incident ``(edge index, role)`` pairs; role 0 = start, 1 = end."""
        ends: dict[str, list[tuple[int, int]]] = {v: [] for v in self.vertex_ids}
        for i, e in enumerate(self.edges):
            ends.setdefault(e.start, []).append((i, 0))
            ends.setdefault(e.end, []).append((i, 1))
        return ends

    def with_conditions(self, conditions: Mapping[str, Condition]) -> "MetricGraph":
        cond = self.conditions
        cond.update({v: Condition(c) for v, c in conditions.items()})
        return MetricGraph(tuple(cond.items()), self.edges, self.period_rank, self.uniformity)

    def is_connected(self) -> bool:
        ids = self.vertex_ids
        if not ids:
            return True
        adj: dict[str, set[str]] = defaultdict(set)
        for e in self.edges:
            adj[e.start].add(e.end)
            adj[e.end].add(e.start)
        seen = {ids[0]}
        queue = deque([ids[0]])
        while queue:
            v = queue.popleft()
            for w in adj[v] - seen:
                seen.add(w)
                queue.append(w)
        return seen >= set(ids)


PeriodicMetricGraph = MetricGraph


def make_graph(
    vertices: Mapping[str, str | Condition] | Iterable[str],
    edges: Iterable[tuple],
    period_rank: int = 0,
    uniformity: float | None = None,
) -> MetricGraph:
    """Convenience constructor.

    ``edges`` items are ``(id, start, end, length)`` or
    ``(id, start, end, length, shift)``. Bare vertex ids default to Kirchhoff.
    """
    if not isinstance(vertices, Mapping):
        vertices = {v: Condition.KIRCHHOFF for v in vertices}
    es = []
    for item in edges:
        eid, a, b, length, *rest = item
        shift = tuple(rest[0]) if rest else ()
        es.append(MetricEdge(str(eid), str(a), str(b), float(length), shift))
    return MetricGraph(tuple(vertices.items()), tuple(es), period_rank, uniformity)


# -- validation ---------------------------------------------------------------


@dataclass
class ValidationReport:
    degree_histogram: dict[int, int]
    connected: bool
    lengths_ok: bool
    regular_degree: int | None
    n_vertices: int
    n_edges: int
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "n_vertices": self.n_vertices,
            "n_edges": self.n_edges,
            "degree_histogram": {str(k): v for k, v in sorted(self.degree_histogram.items())},
            "connected": self.connected,
            "lengths_ok": self.lengths_ok,
            "regular_degree": self.regular_degree,
            "violations": list(self.violations),
        }


def validate(graph: MetricGraph) -> ValidationReport:
    violations = []
    ids = graph.vertex_ids
    if len(set(ids)) != len(ids):
        violations.append("duplicate vertex ids")
    eids = [e.id for e in graph.edges]
    if len(set(eids)) != len(eids):
        violations.append("duplicate edge ids")
    known = set(ids)
    for e in graph.edges:
        for v in (e.start, e.end):
            if v not in known:
                violations.append(f"edge {e.id}: unknown vertex {v!r}")
    lengths_ok = True
    for e in graph.edges:
        if not (e.length > 0 and math.isfinite(e.length)):
            lengths_ok = False
            violations.append(f"edge {e.id}: length {e.length} is not positive")
        elif graph.uniformity is not None:
            l = graph.uniformity
            if not (l <= e.length <= 1.0 / l):
                lengths_ok = False
                violations.append(f"edge {e.id}: length {e.length} outside [{l}, {1.0 / l}]")
    if graph.uniformity is not None and not graph.uniformity > 0:
        violations.append("uniformity parameter must be positive")
    if graph.period_rank < 0:
        violations.append("period_rank must be >= 0")
    for e in graph.edges:
        if len(e.shift) != graph.period_rank:
            violations.append(f"edge {e.id}: shift has dimension {len(e.shift)}, expected {graph.period_rank}")
        elif graph.period_rank == 0 and any(e.shift):
            violations.append(f"edge {e.id}: nonzero shift in a finite graph")
    deg = graph.degree()
    hist = Counter(deg[v] for v in ids)
    connected = graph.is_connected()
    regular = next(iter(hist)) if len(hist) == 1 else None
    return ValidationReport(dict(hist), connected, lengths_ok, regular, len(ids), len(graph.edges), violations)


def require_valid(graph: MetricGraph) -> MetricGraph:
    report = validate(graph)
    if not report.ok:
        raise GraphError("; ".join(report.violations))
    return graph


# -- decorations --------------------------------------------------------------


@dataclass(frozen=True)
class Decoration:
    """A finite metric graph with an ordered boundary list."""

    graph: MetricGraph
    boundary: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "boundary", tuple(str(b) for b in self.boundary))
        if self.graph.period_rank != 0:
            raise GraphError("decoration graph must be finite")
        require_valid(self.graph)
        if not self.boundary:
            raise GraphError("decoration boundary must be nonempty")
        if len(set(self.boundary)) != len(self.boundary):
            raise GraphError("decoration boundary vertices must be distinct")
        missing = set(self.boundary) - set(self.graph.vertex_ids)
        if missing:
            raise GraphError(f"boundary vertices not in graph: {sorted(missing)}")
        if not self.graph.is_connected():
            raise GraphError("decoration graph must be connected")

    @property
    def d(self) -> int:
        return len(self.boundary)

    def dirichlet_graph(self) -> MetricGraph:
        """The decoration graph with Dirichlet conditions on the boundary."""
        return self.graph.with_conditions({b: Condition.DIRICHLET for b in self.boundary})


# vertex id -> {(edge id, role): boundary vertex}; role is "start" or "end"
AttachmentMap = dict[str, dict[tuple[str, str], str]]

_ROLE_NAMES = ("start", "end")


def sorted_attachment(base: MetricGraph, dec: Decoration) -> AttachmentMap:
    """Default policy: incident edge-ends sorted by (edge id, role) paired with the boundary in order."""
    ends: dict[str, list[tuple[str, int]]] = {v: [] for v in base.vertex_ids}
    for e in base.edges:
        ends[e.start].append((e.id, 0))
        ends[e.end].append((e.id, 1))
    attach: AttachmentMap = {}
    for v, lst in ends.items():
        lst.sort()
        if len(lst) != dec.d:
            raise GraphError(f"vertex {v} has degree {len(lst)}, decoration boundary has size {dec.d}")
        attach[v] = {(eid, _ROLE_NAMES[r]): b for (eid, r), b in zip(lst, dec.boundary)}
    return attach


def check_attachment(base: MetricGraph, dec: Decoration, attach: AttachmentMap) -> None:
    expected: dict[str, set[tuple[str, str]]] = {v: set() for v in base.vertex_ids}
    for e in base.edges:
        expected[e.start].add((e.id, "start"))
        expected[e.end].add((e.id, "end"))
    for v, ends in expected.items():
        m = attach.get(v)
        if m is None:
            raise GraphError(f"attachment map has no entry for vertex {v}")
        if set(m) != ends:
            raise GraphError(f"attachment at vertex {v} does not cover exactly its incident edge-ends")
        targets = list(m.values())
        if sorted(targets) != sorted(dec.boundary):
            raise GraphError(f"attachment at vertex {v} is not a bijection onto the boundary")
    extra = set(attach) - set(expected)
    if extra:
        raise GraphError(f"attachment map names unknown vertices {sorted(extra)}")


def _check_regular(base: MetricGraph, d: int) -> None:
    require_valid(base)
    deg = base.degree()
    bad = {v: k for v, k in deg.items() if k != d}
    if bad:
        raise GraphError(f"base graph is not {d}-regular: degrees {bad}")


def _decorate(base: MetricGraph, dec: Decoration, attach: AttachmentMap | str | None) -> MetricGraph:
    _check_regular(base, dec.d)
    if attach is None or attach == "sorted":
        attach = sorted_attachment(base, dec)
    elif isinstance(attach, str):
        raise GraphError(f"unknown attachment policy {attach!r}")
    check_attachment(base, dec, attach)
    p = base.period_rank
    zero = (0,) * p
    vertices = []
    edges = []
    for v in base.vertex_ids:
        for w in dec.graph.vertex_ids:
            vertices.append((f"{v}/{w}", Condition.KIRCHHOFF))
        for e in dec.graph.edges:
            edges.append(MetricEdge(f"{v}/{e.id}", f"{v}/{e.start}", f"{v}/{e.end}", e.length, zero))
    for e in base.edges:
        a = attach[e.start][(e.id, "start")]
        b = attach[e.end][(e.id, "end")]
        edges.append(MetricEdge(e.id, f"{e.start}/{a}", f"{e.end}/{b}", e.length, e.shift))
    return MetricGraph(tuple(vertices), tuple(edges), p, None)


def decorate(base: MetricGraph, dec: Decoration, attach: AttachmentMap | str | None = "sorted") -> MetricGraph:
    """Replace every vertex of a finite d-regular graph by a copy of the decoration.

    New vertex ids are ``"<v>/<w>"`` and decoration edge ids ``"<v>/<e>"``;
    base edges keep their ids. All vertices of the result are Kirchhoff.
    """
    if base.period_rank != 0:
        raise GraphError("decorate expects a finite graph; use decorate_periodic")
    return _decorate(base, dec, attach)


def decorate_periodic(base: MetricGraph, dec: Decoration, attach: AttachmentMap | str | None = "sorted") -> MetricGraph:
    """Decorate the fundamental domain of a periodic graph; base edges keep their shifts."""
    if base.period_rank < 1:
        raise GraphError("decorate_periodic expects a periodic graph")
    return _decorate(base, dec, attach)


def make_spider(d: int, l0: float, cycle_size: int = 3) -> Decoration:
    """Odd cycle through the first ``cycle_size`` boundary vertices plus pendant edges.

    Boundary vertices are ``b1..bd``; every boundary vertex off the cycle is
    joined to ``b1`` by a single edge of length ``l0``.
    """
    if d < 3:
        raise GraphError("spider needs d >= 3")
    if cycle_size % 2 == 0:
        raise GraphError("cycle_size must be odd (even cycles do not force a pole)")
    if not 3 <= cycle_size <= d:
        raise GraphError("need 3 <= cycle_size <= d")
    if not l0 > 0:
        raise GraphError("l0 must be positive")
    names = [f"b{i}" for i in range(1, d + 1)]
    edges = []
    for i in range(cycle_size):
        edges.append((f"e{i + 1}", names[i], names[(i + 1) % cycle_size], l0))
    for j in range(cycle_size, d):
        edges.append((f"e{j + 1}", names[0], names[j], l0))
    return Decoration(make_graph(names, edges), tuple(names))


def _l0_subgraph(graph: MetricGraph, l0: float) -> list[MetricEdge]:
    return [e for e in graph.edges if abs(e.length - l0) <= REL_TOL * l0]


def check_spider_conditions(dec: Decoration, l0: float) -> bool:
    """Whether some odd cycle of length-``l0`` edges reaches every boundary vertex by ``l0``-paths.

    Every boundary vertex must lie in the component (of the subgraph of
    ``l0``-edges) of an odd cycle, and such a component has an odd cycle
    exactly when it is not bipartite; a loop counts as a cycle of one edge.
    """
    edges = _l0_subgraph(dec.graph, l0)
    adj: dict[str, list[str]] = defaultdict(list)
    for e in edges:
        adj[e.start].append(e.end)
        adj[e.end].append(e.start)
    start = dec.boundary[0]
    colour = {start: 0}
    queue = deque([start])
    odd = False
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in colour:
                colour[w] = 1 - colour[v]
                queue.append(w)
            elif colour[w] == colour[v]:
                odd = True
    return odd and all(b in colour for b in dec.boundary)


# -- Dirichlet edge spectrum --------------------------------------------------


@dataclass(frozen=True)
class DirichletEdgeSpectrum:
    """Values ``(n pi / l_e)^2`` up to ``lambda_max`` with multiplicity."""

    values: tuple[tuple[float, int], ...]
    lengths: tuple[float, ...]
    lambda_max: float

    def distance_to(self, lam: float) -> float:
        """Distance from ``lam`` to the full (unbounded) set of edge Dirichlet values."""
        best = math.inf
        for l in self.lengths:
            n = lam ** 0.5 * l / math.pi if lam > 0 else 0.0
            for m in (math.floor(n), math.ceil(n)):
                if m >= 1:
                    best = min(best, abs(lam - (m * math.pi / l) ** 2))
            if n < 1:
                best = min(best, abs(lam - (math.pi / l) ** 2))
        return best

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)


def dirichlet_edge_spectrum(graph: MetricGraph, lambda_max: float) -> DirichletEdgeSpectrum:
    if not lambda_max > 0:
        raise GraphError("lambda_max must be positive")
    raw = []
    for e in graph.edges:
        n = 1
        while True:
            v = (n * math.pi / e.length) ** 2
            if v > lambda_max * (1 + REL_TOL):
                break
            raw.append(v)
            n += 1
    raw.sort()
    merged: list[list] = []
    for v in raw:
        if merged and abs(v - merged[-1][0]) <= REL_TOL * v:
            merged[-1][1] += 1
        else:
            merged.append([v, 1])
    lengths = tuple(sorted({e.length for e in graph.edges}))
    return DirichletEdgeSpectrum(tuple((v, m) for v, m in merged), lengths, float(lambda_max))


def nearest_value(sorted_values: Sequence[float], x: float) -> float:
    """Distance from ``x`` to the nearest entry of a sorted sequence (``inf`` if empty)."""
    if not sorted_values:
        return math.inf
    i = bisect.bisect_left(sorted_values, x)
    best = math.inf
    for j in (i - 1, i):
        if 0 <= j < len(sorted_values):
            best = min(best, abs(sorted_values[j] - x))
    return best
