"""Eigenvalue enumeration by scanning the smallest singular value of the secular matrix.

The scan runs on a uniform grid in ``k = sqrt(lambda)`` whose step is a
quarter of the mean root spacing ``pi / L`` (``L`` = total length). Every
grid local minimum of ``sigma_min`` below a trigger is refined by golden
section search and accepted as a root when the refined ``sigma_min`` is
below ``tol_root``.

Completeness is checked cell by cell against the exact counting function

    N(lambda) = #{edge Dirichlet values < lambda} + n_+(Lambda_V(lambda)),

where ``Lambda_V`` is the vertex Dirichlet-to-Neumann matrix of the whole
graph (free vertices only). Cells whose root count disagrees are rescanned
on a finer grid.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .graph import Condition, GraphError, MetricGraph, dirichlet_edge_spectrum, nearest_value
from .secular import layout

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ScanError(GraphError):
    """Unusable scan window or parameters."""


@dataclass(frozen=True)
class ScanOptions:
    tol_root: float = 1e-8
    tol_rank: float = 1e-7
    k_tol: float = 1e-11
    grid_factor: float = 1.0  # grid step = pi / (4 L grid_factor)
    trigger: float = 0.5
    verify_count: bool = True
    max_depth: int = 4
    max_points: int = 10**7

    def __post_init__(self):
        for name in ("tol_root", "tol_rank", "k_tol", "grid_factor", "trigger"):
            if not getattr(self, name) > 0:
                raise ScanError(f"{name} must be positive")


@dataclass(frozen=True)
class SpectrumEntry:
    lam: float
    multiplicity: int
    residual: float
    near_dirichlet: bool = False


@dataclass
class SpectrumResult:
    entries: list[SpectrumEntry]
    window: tuple[float, float]
    options: ScanOptions
    theta: tuple[float, ...] | None = None
    complete: bool = True
    zero_mode: bool | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def values(self) -> list[float]:
        return [e.lam for e in self.entries]

    def expanded(self) -> list[float]:
        """Eigenvalues repeated according to multiplicity."""
        return [e.lam for e in self.entries for _ in range(e.multiplicity)]

    def count(self) -> int:
        return sum(e.multiplicity for e in self.entries)


# -- counting function --------------------------------------------------------------


def _vertex_dtn_batch(graph: MetricGraph, ks: np.ndarray, theta=None):
    """Vertex DtN matrices over free vertices at each k, plus edge sines."""
    cond = graph.conditions
    deg = graph.degree()
    free = [v for v in graph.vertex_ids if cond[v] != Condition.DIRICHLET and deg[v] > 0]
    idx = {v: i for i, v in enumerate(free)}
    nf = len(free)
    complex_ = theta is not None and graph.period_rank > 0
    lam = np.zeros((ks.size, nf, nf), dtype=complex if complex_ else float)
    sines = np.empty((ks.size, len(graph.edges)))
    for j, e in enumerate(graph.edges):
        kl = ks * e.length
        s, c = np.sin(kl), np.cos(kl)
        sines[:, j] = s
        with np.errstate(divide="ignore", invalid="ignore"):
            kcot, kcsc = ks * c / s, ks / s
        phase = np.exp(1j * np.dot(theta, e.shift)) if complex_ else 1.0
        v, w = idx.get(e.start), idx.get(e.end)
        if v is not None:
            lam[:, v, v] -= kcot
        if w is not None:
            lam[:, w, w] -= kcot
        if v is not None and w is not None:
            lam[:, v, w] += kcsc * phase
            lam[:, w, v] += kcsc * np.conj(phase)
    return lam, sines


def count_below(graph: MetricGraph, ks, theta=None):
    """Number of eigenvalues ``< k^2`` at each k, and a flag marking trustworthy points.

    A point is untrustworthy when k l_e is (nearly) a multiple of pi or
    when the vertex DtN matrix is (nearly) singular, i.e. k^2 sits on an
    edge Dirichlet value or on an eigenvalue.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    lengths = np.array([e.length for e in graph.edges])
    n_dir = np.floor(np.outer(ks, lengths) / math.pi).sum(axis=1).astype(int)
    lam, sines = _vertex_dtn_batch(graph, ks, theta)
    clean = np.min(np.abs(sines), axis=1) > 1e-7
    if lam.shape[1] == 0:
        return n_dir, clean
    safe = np.where(np.isfinite(lam), lam, 0.0)
    ev = np.linalg.eigvalsh(safe)
    scale = np.max(np.abs(ev), axis=1) + 1.0
    clean &= np.min(np.abs(ev), axis=1) > 1e-9 * scale
    return n_dir + (ev > 0).sum(axis=1), clean


def eigenvalue_count(graph: MetricGraph, lam: float, theta=None) -> int:
    """Number of eigenvalues (with multiplicity, including 0) strictly below ``lam``."""
    if lam <= 0:
        return 0
    return int(count_below(graph, [math.sqrt(lam)], theta)[0][0])


# -- scanning ---------------------------------------------------------------------


def golden_section(f, a: float, b: float, tol: float) -> tuple[float, float]:
    """Minimise a unimodal function on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    fa, fb = f(a), f(b)
    best = min((fa, a), (fb, b), (fc, c), (fd, d))
    return best[1], best[0]


class _Scanner:
    def __init__(self, graph: MetricGraph, theta, opts: ScanOptions):
        self.graph = graph
        self.theta = theta
        self.opts = opts
        self.args = layout(graph).kernel_args(theta)

    def svals(self, k: float) -> np.ndarray:
        return _kernels.singular_values(k, *self.args)

    def sigma_min(self, k: float) -> float:
        return float(self.svals(k)[-1])

    def refine(self, grid, s, klo, khi):
        """Refine grid local minima; returns list of (k, multiplicity, residual)."""
        o = self.opts
        n = len(grid)
        roots = []
        for i in range(n):
            left = s[i - 1] if i > 0 else np.inf
            right = s[i + 1] if i < n - 1 else np.inf
            if not (s[i] <= left and s[i] <= right and s[i] < o.trigger):
                continue
            a = grid[max(i - 1, 0)]
            b = grid[min(i + 1, n - 1)]
            k, val = golden_section(self.sigma_min, a, b, o.k_tol)
            if val >= o.tol_root:
                continue
            sv = self.svals(k)
            mult = max(1, int(np.sum(sv < o.tol_rank * max(sv[0], 1.0))))
            roots.append((k, mult, float(sv[-1])))
        return _dedupe(roots)

    def scan(self, klo: float, khi: float, step: float, depth: int = 0, count_lo=None):
        o = self.opts
        npts = int(math.ceil((khi - klo) / step)) + 1
        if npts > o.max_points:
            raise ScanError(f"scan needs {npts} grid points (> {o.max_points}); narrow the window")
        npts = max(npts, 3)
        grid = np.linspace(klo, khi, npts)
        s = _kernels.sigma_min_grid(grid, *self.args)
        roots = self.refine(grid, s, klo, khi)
        if not o.verify_count:
            return roots, True
        cuts = self._cuts(grid, roots)
        counts, clean = count_below(self.graph, cuts, self.theta)
        complete = True
        out = []
        for i in range(len(cuts) - 1):
            a, b = cuts[i], cuts[i + 1]
            cell = [r for r in roots if a <= r[0] < b]
            expected = int(counts[i + 1] - counts[i])
            if sum(r[1] for r in cell) != expected:
                if depth < o.max_depth:
                    sub, ok = self.scan(a, b, step / 8.0, depth + 1)
                    if sum(r[1] for r in sub) == expected or len(sub) > len(cell):
                        cell = sub
                    complete &= ok
                elif clean[i] and clean[i + 1] and expected >= 0:
                    cell = self.isolate(a, b, int(counts[i]), int(counts[i + 1]))
                else:
                    complete = False
            out.extend(cell)
        return _dedupe(out), complete

    def isolate(self, a: float, b: float, na: int, nb: int):
        """Locate the jumps of the counting function on ``[a, b)`` by bisection.

        Used when roots are too close for the singular-value dips to
        separate. Bisection stops once the midpoint is an untrustworthy
        count point (within ~1e-9 of a root or edge Dirichlet value);
        the remaining bracket is then polished by golden section.
        """
        if nb == na:
            return []
        o = self.opts
        mid = None
        if b - a > o.k_tol:
            for j in range(8):
                c = 0.5 * (a + b) + (b - a) * 0.01 * j * (-1) ** j
                nc, ok = count_below(self.graph, [c], self.theta)
                if ok[0]:
                    mid = (c, int(nc[0]))
                    break
        if mid is None:
            k, val = golden_section(self.sigma_min, a, b, o.k_tol)
            return [(k, nb - na, val)]
        c, nc = mid
        return self.isolate(a, c, na, nc) + self.isolate(c, b, nc, nb)

    def _cuts(self, grid, roots) -> np.ndarray:
        """Grid nodes moved off roots, edge Dirichlet values and DtN singularities."""
        rk = np.array(sorted(r[0] for r in roots)) if roots else np.empty(0)
        spacing = (grid[-1] - grid[0]) / max(len(grid) - 1, 1)
        cuts = grid.copy()
        _, clean = count_below(self.graph, cuts, self.theta)
        last = len(grid) - 1
        for i in range(len(grid)):
            near = rk.size and np.min(np.abs(rk - cuts[i])) < 1e-8 * max(1.0, cuts[i])
            if clean[i] and not near:
                continue
            direction = -1.0 if i in (0, last) else 1.0
            for j in range(1, 40):
                c = grid[i] + direction * spacing * 1e-4 * j * 1.37
                near = rk.size and np.min(np.abs(rk - c)) < 1e-8 * max(1.0, c)
                if not near and count_below(self.graph, [c], self.theta)[1][0]:
                    cuts[i] = c
                    break
        if cuts[0] <= 0:
            cuts[0] = grid[0]
        return cuts


def _dedupe(roots):
    roots = sorted(roots)
    out = []
    for r in roots:
        if out and abs(r[0] - out[-1][0]) < 1e-8 * max(1.0, r[0]):
            prev = out[-1]
            best = r if r[2] < prev[2] else prev
            out[-1] = (best[0], max(r[1], prev[1]), best[2])
        else:
            out.append(r)
    return out


def _spectrum(graph: MetricGraph, lambda_lo: float, lambda_hi: float, theta, opts: ScanOptions | None):
    opts = opts or ScanOptions()
    if not (0 < lambda_lo < lambda_hi):
        raise ScanError(f"need 0 < lambda_lo < lambda_hi, got ({lambda_lo}, {lambda_hi})")
    scanner = _Scanner(graph, theta, opts)
    klo, khi = math.sqrt(lambda_lo), math.sqrt(lambda_hi)
    step = math.pi / (4.0 * graph.total_length * opts.grid_factor)
    roots, complete = scanner.scan(klo, khi, step)
    tol_end = 1e-9 * khi
    dspec = sorted(v for v, _ in dirichlet_edge_spectrum(graph, lambda_hi * 1.01 + 1.0))
    entries = []
    for k, mult, res in roots:
        if k >= khi - tol_end and k > klo + tol_end:
            continue
        lam = max(k * k, lambda_lo)
        near = nearest_value(dspec, lam) < 1e-9 * max(1.0, lam)
        entries.append(SpectrumEntry(lam, mult, res, near))
    if not complete:
        log.warning("root count could not be reconciled with the counting function in (%g, %g)", lambda_lo, lambda_hi)
    has_dirichlet = any(c == Condition.DIRICHLET for _, c in graph.vertices)
    zero_theta = theta is None or np.allclose(np.mod(np.asarray(theta) + 1e-14, 2 * np.pi), 0.0, atol=1e-12)
    zero_mode = (not has_dirichlet) if zero_theta else None
    return SpectrumResult(entries, (lambda_lo, lambda_hi), opts, None if theta is None else tuple(theta),
                          complete, zero_mode)


def scan_spectrum(graph: MetricGraph, lambda_lo: float, lambda_hi: float, opts: ScanOptions | None = None) -> SpectrumResult:
    """Eigenvalues of the Kirchhoff/Dirichlet Laplacian in ``[lambda_lo, lambda_hi)``."""
    if graph.period_rank != 0:
        raise GraphError("scan_spectrum expects a finite graph; use bloch_spectrum")
    return _spectrum(graph, lambda_lo, lambda_hi, None, opts)


def bloch_spectrum(graph: MetricGraph, theta, lambda_lo: float, lambda_hi: float,
                   opts: ScanOptions | None = None) -> SpectrumResult:
    """Eigenvalues of the Bloch operator at quasimomentum ``theta`` in ``[lambda_lo, lambda_hi)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if graph.period_rank < 1 or theta.shape != (graph.period_rank,):
        raise GraphError(f"theta must have dimension period_rank={graph.period_rank}")
    return _spectrum(graph, lambda_lo, lambda_hi, theta, opts)


# -- Weyl law -------------------------------------------------------------------------


@dataclass(frozen=True)
class WeylReport:
    max_deviation: float
    at_lambda: float
    bound: int
    flagged: bool


def weyl_check(result: SpectrumResult, graph: MetricGraph) -> WeylReport:
    """Largest deviation of the counting function from ``L sqrt(lambda) / pi`` over the window.

    The count at the lower window edge comes from the exact counting function.
    """
    L = graph.total_length
    lo, hi = result.window

    def weyl(x):
        return L * math.sqrt(x) / math.pi

    # eigenvalues below the window (including a zero mode) still count
    n = eigenvalue_count(graph, lo, result.theta)
    worst, where = abs(n - weyl(lo)), lo
    for e in result.entries:
        before = abs(n - weyl(e.lam))
        n += e.multiplicity
        after = abs(n - weyl(e.lam))
        for dev in (before, after):
            if dev > worst:
                worst, where = dev, e.lam
    if abs(n - weyl(hi)) > worst:
        worst, where = abs(n - weyl(hi)), hi
    bound = len(graph.vertices) + len(graph.edges)
    return WeylReport(worst, where, bound, worst > bound)


def with_options(opts: ScanOptions | None, **changes) -> ScanOptions:
    return replace(opts or ScanOptions(), **changes)
