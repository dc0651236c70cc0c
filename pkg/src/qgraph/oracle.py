"""Piecewise-linear finite elements for the graph Laplacian (verification oracle).

Each edge is cut into ``ceil(l_e / h)`` equal elements. Kirchhoff vertices
are shared unknowns, which builds in continuity; the Kirchhoff condition
is natural in the weak form. Dirichlet vertices are removed.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh

from .graph import Condition, GraphError, MetricGraph, require_valid


class MeshTooCoarse(GraphError):
    pass


def fem_matrices(graph: MetricGraph, h: float = 1e-3):
    """Stiffness and consistent mass matrices (CSR) over the free nodes."""
    require_valid(graph)
    if graph.period_rank != 0:
        raise GraphError("the FEM oracle handles finite graphs only")
    lmin = min(e.length for e in graph.edges)
    if h > lmin / 4:
        raise MeshTooCoarse(f"h = {h} exceeds min edge length / 4 = {lmin / 4}")
    cond = graph.conditions
    node: dict[str, int] = {}
    for v in graph.vertex_ids:
        if cond[v] != Condition.DIRICHLET:
            node[v] = len(node)
    n = len(node)
    ii, jj, kk, mm = [], [], [], []
    for e in graph.edges:
        m = math.ceil(e.length / h - 1e-9)
        he = e.length / m
        ids = np.empty(m + 1, dtype=np.int64)
        ids[0] = node.get(e.start, -1)
        ids[-1] = node.get(e.end, -1)
        ids[1:-1] = np.arange(n, n + m - 1)
        n += m - 1
        a, b = ids[:-1], ids[1:]
        for p, q, kval, mval in ((a, a, 1.0, 2.0), (b, b, 1.0, 2.0), (a, b, -1.0, 1.0), (b, a, -1.0, 1.0)):
            keep = (p >= 0) & (q >= 0)
            ii.append(p[keep])
            jj.append(q[keep])
            kk.append(np.full(keep.sum(), kval / he))
            mm.append(np.full(keep.sum(), mval * he / 6.0))
    ii, jj = np.concatenate(ii), np.concatenate(jj)
    K = sp.csr_matrix((np.concatenate(kk), (ii, jj)), shape=(n, n))
    M = sp.csr_matrix((np.concatenate(mm), (ii, jj)), shape=(n, n))
    return K, M


def fem_spectrum(graph: MetricGraph, h: float = 1e-3, count: int = 5) -> np.ndarray:
    """The ``count`` smallest generalized eigenvalues of the FEM pencil, sorted."""
    K, M = fem_matrices(graph, h)
    n = K.shape[0]
    if count >= n - 1:
        return eigh(K.toarray(), M.toarray(), eigvals_only=True)[:count]
    vals = eigsh(K, k=count, M=M, sigma=-1.0, which="LM", return_eigenvectors=False)
    return np.sort(vals)
