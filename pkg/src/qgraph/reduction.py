"""Reduced problem on the base edges with the lambda-dependent vertex condition.

Removing every decoration leaves the base edges as a disjoint union. At the
``d`` loose ends of a former vertex ``v`` the condition reads
``phi'_v + Lambda(lambda) phi_v = 0`` where ``phi_v`` collects end values
(ordered by boundary slot) and ``phi'_v`` outgoing derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dtn import DEFAULT_POLE_GUARD, NumericalError, dirichlet_poles, dtn_matrix
from .eigensolve import ScanOptions, golden_section, scan_spectrum
from .graph import (
    AttachmentMap,
    Decoration,
    GraphError,
    MetricGraph,
    check_attachment,
    decorate,
    dirichlet_edge_spectrum,
    nearest_value,
    require_valid,
    sorted_attachment,
)

_ROLE = {"start": 0, "end": 1}


@dataclass(frozen=True)
class ReducedSecularMatrix:
    entries: np.ndarray
    lam: float

    @property
    def sigma_min(self) -> float:
        return float(np.linalg.svd(self.entries, compute_uv=False)[-1])


def _slots(gamma0: MetricGraph, dec: Decoration, attach) -> list[list[tuple[int, int]]]:
    """Per base vertex, the (edge index, role) attached to each boundary slot."""
    if gamma0.period_rank != 0:
        raise GraphError("the reduced problem is implemented for finite base graphs")
    require_valid(gamma0)
    if attach is None or attach == "sorted":
        attach = sorted_attachment(gamma0, dec)
    check_attachment(gamma0, dec, attach)
    index = {e.id: i for i, e in enumerate(gamma0.edges)}
    slot_of = {b: j for j, b in enumerate(dec.boundary)}
    out = []
    for v in gamma0.vertex_ids:
        slots: list[tuple[int, int] | None] = [None] * dec.d
        for (eid, role), b in attach[v].items():
            slots[slot_of[b]] = (index[eid], _ROLE[role])
        out.append(slots)
    return out


def _assemble(gamma0: MetricGraph, slots, lam_matrix: np.ndarray, k: float) -> np.ndarray:
    n = 2 * len(gamma0.edges)
    M = np.zeros((n, n))
    r = 0
    for per_vertex in slots:
        vals = []
        for e, role in per_vertex:
            kl = k * gamma0.edges[e].length
            if role == 0:
                vals.append(((2 * e, 1.0), (2 * e + 1, 0.0)))
            else:
                vals.append(((2 * e, math.cos(kl)), (2 * e + 1, math.sin(kl))))
        for j, (e, role) in enumerate(per_vertex):
            kl = k * gamma0.edges[e].length
            # outgoing derivative divided by k
            if role == 0:
                M[r, 2 * e + 1] += 1.0
            else:
                M[r, 2 * e] += math.sin(kl)
                M[r, 2 * e + 1] += -math.cos(kl)
            for m, terms in enumerate(vals):
                for col, c in terms:
                    M[r, col] += lam_matrix[j, m] / k * c
            r += 1
    return M


def build_reduced(gamma0: MetricGraph, dec: Decoration, attach: AttachmentMap | str | None, lam: float,
                  pole_guard: float = DEFAULT_POLE_GUARD) -> ReducedSecularMatrix:
    """Reduced secular matrix at ``lam`` (rows scaled by 1/k)."""
    if not lam > 0:
        raise GraphError("lambda must be positive")
    slots = _slots(gamma0, dec, attach)
    lam_matrix = dtn_matrix(dec, lam, pole_guard).entries
    return ReducedSecularMatrix(_assemble(gamma0, slots, lam_matrix, math.sqrt(lam)), float(lam))


def _reduced_roots(gamma0, dec, attach, lo, hi, opts: ScanOptions, n_grid: int = 2000):
    slots = _slots(gamma0, dec, attach)

    def svals(lam):
        try:
            L = dtn_matrix(dec, lam).entries
        except NumericalError:
            return None
        return np.linalg.svd(_assemble(gamma0, slots, L, math.sqrt(lam)), compute_uv=False)

    def smin(lam):
        s = svals(lam)
        return math.inf if s is None else float(s[-1])

    grid = np.linspace(lo, hi, n_grid + 1)
    s = np.array([smin(x) for x in grid])
    roots = []
    for i in range(len(grid)):
        left = s[i - 1] if i > 0 else math.inf
        right = s[i + 1] if i < len(grid) - 1 else math.inf
        if not (np.isfinite(s[i]) and s[i] <= left and s[i] <= right):
            continue
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        x, val = golden_section(smin, a, b, opts.k_tol * max(1.0, x_scale(a)))
        if val >= opts.tol_root:
            continue
        sv = svals(x)
        mult = max(1, int(np.sum(sv < opts.tol_rank * max(sv[0], 1.0))))
        roots.append((x, mult, float(sv[-1])))
    roots.sort()
    out = []
    for r in roots:
        if out and abs(r[0] - out[-1][0]) < 1e-8 * max(1.0, r[0]):
            if r[2] < out[-1][2]:
                out[-1] = (r[0], max(r[1], out[-1][1]), r[2])
        else:
            out.append(r)
    return [r for r in out if lo <= r[0] < hi]


def x_scale(x: float) -> float:
    return math.sqrt(abs(x))


@dataclass
class ReductionReport:
    window: tuple[float, float]
    direct: list[float]
    reduced: list[float]
    excluded_centres: list[float]
    pairs: list[tuple[float, float]]
    unmatched_direct: list[float] = field(default_factory=list)
    unmatched_reduced: list[float] = field(default_factory=list)

    @property
    def max_mismatch(self) -> float:
        return max((abs(a - b) for a, b in self.pairs), default=0.0)

    @property
    def counts_match(self) -> bool:
        return len(self.direct) == len(self.reduced)

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "direct": self.direct,
            "reduced": self.reduced,
            "excluded_centres": self.excluded_centres,
            "max_mismatch": self.max_mismatch,
            "counts_match": self.counts_match,
            "unmatched_direct": self.unmatched_direct,
            "unmatched_reduced": self.unmatched_reduced,
        }


def reduced_spectrum_check(gamma0: MetricGraph, dec: Decoration, attach: AttachmentMap | str | None,
                           lambda_lo: float, lambda_hi: float, exclusion_radius: float = 1e-4,
                           opts: ScanOptions | None = None) -> ReductionReport:
    """Compare the reduced-problem roots with the spectrum of the decorated graph."""
    opts = opts or ScanOptions()
    if not 0 < lambda_lo < lambda_hi:
        raise GraphError("need 0 < lambda_lo < lambda_hi")
    decorated = decorate(gamma0, dec, attach)
    direct = scan_spectrum(decorated, lambda_lo, lambda_hi, opts).expanded()
    reduced_roots = _reduced_roots(gamma0, dec, attach, lambda_lo, lambda_hi, opts)
    reduced = [x for x, m, _ in reduced_roots for _ in range(m)]
    centres = sorted(
        [p for p in dirichlet_poles(dec, lambda_hi + 1.0) if p <= lambda_hi + exclusion_radius]
        + [v for v, _ in dirichlet_edge_spectrum(gamma0, lambda_hi + exclusion_radius)]
    )

    def keep(x):
        return nearest_value(centres, x) > exclusion_radius

    direct = [x for x in direct if keep(x)]
    reduced = [x for x in reduced if keep(x)]
    pairs, ud, ur = _match(direct, reduced)
    return ReductionReport((lambda_lo, lambda_hi), direct, reduced, centres, pairs, ud, ur)


def _match(a: list[float], b: list[float], tol: float = 1e-3):
    """Greedy nearest matching of two sorted multisets."""
    if len(a) == len(b):
        return list(zip(a, b)), [], []
    pairs, left = [], list(b)
    ua = []
    for x in a:
        if left:
            j = int(np.argmin([abs(x - y) for y in left]))
            if abs(x - left[j]) < tol:
                pairs.append((x, left.pop(j)))
                continue
        ua.append(x)
    return pairs, ua, left
