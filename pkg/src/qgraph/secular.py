"""Secular matrices of finite and periodic metric graphs.

On edge ``e`` (coordinate ``x`` from its start vertex) a solution of
``-u'' = k^2 u`` is ``u_e = a_e cos(kx) + b_e sin(kx)``. The unknowns are
the pairs ``(a_e, b_e)``; each vertex contributes one row per incident
edge-end:

* Kirchhoff vertex of degree m: m-1 continuity rows and one row with the
  sum of outgoing derivatives (divided by k),
* Dirichlet vertex: one "value = 0" row per incident end,
* boundary vertex of a decoration: one "value = phi_b" row per end.

``lambda = k^2`` is an eigenvalue exactly when the square matrix is
singular, and the nullity is the multiplicity.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import Condition, GraphError, MetricGraph, require_valid


@dataclass(frozen=True)
class Layout:
    """Row/term structure of a secular matrix; independent of k."""

    n: int
    lengths: np.ndarray
    rows: np.ndarray
    edges: np.ndarray
    roles: np.ndarray
    kinds: np.ndarray
    coefs: np.ndarray
    shifts: np.ndarray
    row_labels: tuple[str, ...]
    boundary_rows: tuple[tuple[int, int], ...]  # (row, boundary slot)
    boundary_deriv_terms: tuple[tuple[int, int, int], ...]  # (slot, edge, role)

    def coefs_at(self, theta=None) -> np.ndarray:
        if theta is None or self.shifts.shape[1] == 0:
            return self.coefs
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.shifts.shape[1],):
            raise GraphError(f"theta must have dimension {self.shifts.shape[1]}")
        phase = np.exp(-1j * (self.shifts @ theta))
        return (self.coefs * phase).astype(complex)

    def kernel_args(self, theta=None):
        return (self.lengths, self.rows, self.edges, self.roles, self.kinds, self.coefs_at(theta), self.n)


@functools.lru_cache(maxsize=256)
def layout(graph: MetricGraph, boundary: tuple[str, ...] = ()) -> Layout:
    require_valid(graph)
    if not graph.edges:
        raise GraphError("graph has no edges")
    cond = graph.conditions
    p = graph.period_rank
    slot_of = {b: j for j, b in enumerate(boundary)}
    rows, edges, roles, kinds, coefs, shifts = [], [], [], [], [], []
    labels: list[str] = []
    brows: list[tuple[int, int]] = []
    bderiv: list[tuple[int, int, int]] = []
    zero = (0,) * p

    def term(r, e, role, kind, c):
        rows.append(r)
        edges.append(e)
        roles.append(role)
        kinds.append(kind)
        coefs.append(c)
        shifts.append(graph.edges[e].shift if role == 1 else zero)

    r = 0
    for v, ends in graph.incident_ends().items():
        if not ends:
            continue
        if v in slot_of:
            for e, role in ends:
                term(r, e, role, 0, 1.0)
                labels.append(f"boundary:{v}")
                brows.append((r, slot_of[v]))
                bderiv.append((slot_of[v], e, role))
                r += 1
        elif cond[v] == Condition.DIRICHLET:
            for e, role in ends:
                term(r, e, role, 0, 1.0)
                labels.append(f"dirichlet:{v}")
                r += 1
        else:
            for (e1, r1), (e2, r2) in zip(ends, ends[1:]):
                term(r, e1, r1, 0, 1.0)
                term(r, e2, r2, 0, -1.0)
                labels.append(f"continuity:{v}")
                r += 1
            for e, role in ends:
                term(r, e, role, 1, 1.0)
            labels.append(f"kirchhoff:{v}")
            r += 1
    n = 2 * len(graph.edges)
    assert r == n
    # static row weights: a k-dependent unit-norm scaling would blow up rows
    # that vanish identically at a root (e.g. the continuity row of a loop)
    rows_arr = np.array(rows, dtype=np.int64)
    coef_arr = np.array(coefs, dtype=float)
    weight = np.zeros(n)
    np.add.at(weight, rows_arr, coef_arr**2)
    coef_arr = coef_arr / np.sqrt(weight[rows_arr])
    return Layout(
        n=n,
        lengths=np.array([e.length for e in graph.edges], dtype=float),
        rows=rows_arr,
        edges=np.array(edges, dtype=np.int64),
        roles=np.array(roles, dtype=np.int64),
        kinds=np.array(kinds, dtype=np.int64),
        coefs=coef_arr,
        shifts=np.array(shifts, dtype=float).reshape(len(rows), p),
        row_labels=tuple(labels),
        boundary_rows=tuple(brows),
        boundary_deriv_terms=tuple(bderiv),
    )


@dataclass(frozen=True)
class SecularMatrix:
    entries: np.ndarray
    k: float
    theta: tuple[float, ...] | None
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    @property
    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)

    @property
    def sigma_min(self) -> float:
        return float(self.singular_values[-1])


def _col_labels(graph: MetricGraph) -> tuple[str, ...]:
    return tuple(f"{c}:{e.id}" for e in graph.edges for c in ("a", "b"))


def _check_k(k: float) -> float:
    k = float(k)
    if not k > 0:
        raise GraphError("wavenumber k must be positive")
    return k


def build_secular(graph: MetricGraph, k: float, normalize: bool = False) -> SecularMatrix:
    if graph.period_rank != 0:
        raise GraphError("build_secular expects a finite graph; use build_bloch_secular")
    k = _check_k(k)
    lay = layout(graph)
    m = _kernels.assemble([k], *lay.kernel_args(), normalize=normalize)[0]
    return SecularMatrix(m, k, None, lay.row_labels, _col_labels(graph))


def build_bloch_secular(graph: MetricGraph, k: float, theta, normalize: bool = False) -> SecularMatrix:
    """Secular matrix at quasimomentum ``theta``.

    End contributions of an edge with shift ``s`` are multiplied by
    ``exp(-i theta.s)``, i.e. ``u(x + s) = exp(i theta.s) u(x)``.
    """
    k = _check_k(k)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (graph.period_rank,):
        raise GraphError(f"theta has dimension {theta.size}, graph has period rank {graph.period_rank}")
    lay = layout(graph)
    m = _kernels.assemble([k], *lay.kernel_args(theta), normalize=normalize)[0]
    return SecularMatrix(m, k, tuple(theta), lay.row_labels, _col_labels(graph))


def null_space(matrix: np.ndarray, rtol: float = 1e-7) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical null space."""
    _, s, vh = np.linalg.svd(matrix)
    if s.size == 0:
        return np.zeros((matrix.shape[1], 0))
    mask = s < rtol * s[0]
    return vh[mask].conj().T


@dataclass(frozen=True)
class EdgeSolution:
    """Edge coefficients ``(a_e, b_e)`` of a solution at wavenumber ``k``."""

    graph: MetricGraph
    k: float
    coefficients: np.ndarray  # shape (|E|, 2)

    def _index(self, edge) -> int:
        if isinstance(edge, (int, np.integer)):
            return int(edge)
        for i, e in enumerate(self.graph.edges):
            if e.id == edge:
                return i
        raise KeyError(edge)

    def value(self, edge, x: float):
        a, b = self.coefficients[self._index(edge)]
        return a * np.cos(self.k * x) + b * np.sin(self.k * x)

    def derivative(self, edge, x: float):
        a, b = self.coefficients[self._index(edge)]
        return self.k * (-a * np.sin(self.k * x) + b * np.cos(self.k * x))

    def end_value(self, edge, role: int):
        i = self._index(edge)
        return self.value(i, 0.0 if role == 0 else self.graph.edges[i].length)

    def continuity_residual(self, theta=None) -> float:
        """Largest value mismatch between edge-ends meeting at a Kirchhoff vertex."""
        cond = self.graph.conditions
        worst = 0.0
        for v, ends in self.graph.incident_ends().items():
            if cond[v] != Condition.KIRCHHOFF or len(ends) < 2:
                continue
            vals = []
            for e, role in ends:
                val = self.end_value(e, role)
                if role == 1 and theta is not None:
                    val = val * np.exp(-1j * np.dot(theta, self.graph.edges[e].shift))
                vals.append(val)
            worst = max(worst, max(abs(x - vals[0]) for x in vals))
        return float(worst)


def solution_from_nullvector(graph: MetricGraph, k: float, nullvector) -> EdgeSolution:
    vec = np.asarray(nullvector)
    if vec.shape != (2 * len(graph.edges),):
        raise GraphError(f"null vector has length {vec.size}, expected {2 * len(graph.edges)}")
    return EdgeSolution(graph, _check_k(k), vec.reshape(-1, 2))
