"""Quasimomentum sweeps, gap extraction and gap certification near a resonance."""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .eigensolve import ScanOptions, SpectrumResult, bloch_spectrum
from .graph import (
    AttachmentMap,
    Decoration,
    GraphError,
    MetricGraph,
    check_spider_conditions,
    decorate_periodic,
    dirichlet_edge_spectrum,
)

FLAT_TOL = 1e-6


class ConditionViolated(GraphError):
    pass


def worker_count() -> int:
    env = os.environ.get("QGRAPH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class BandSweep:
    theta_grid: list[tuple[float, ...]]
    samples: list[SpectrumResult]
    window: tuple[float, float]
    n_theta: int

    def all_values(self) -> np.ndarray:
        return np.sort(np.concatenate([np.asarray(s.expanded(), dtype=float) for s in self.samples] or [np.empty(0)]))

    def rows(self):
        """(theta..., lambda) rows with multiplicity expanded, in sweep order."""
        for th, res in zip(self.theta_grid, self.samples):
            for lam in res.expanded():
                yield (*th, lam)


def theta_grid(p: int, n_theta: int) -> list[tuple[float, ...]]:
    axis = [2 * math.pi * j / n_theta for j in range(n_theta)]
    return list(itertools.product(axis, repeat=p))


def band_sweep(graph: MetricGraph, lambda_lo: float, lambda_hi: float, n_theta: int,
               opts: ScanOptions | None = None) -> BandSweep:
    if graph.period_rank not in (1, 2):
        raise GraphError("band sweeps support period rank 1 or 2")
    if n_theta < 1:
        raise GraphError("n_theta must be positive")
    if not 0 < lambda_lo < lambda_hi:
        raise GraphError("need 0 < lambda_lo < lambda_hi")
    grid = theta_grid(graph.period_rank, n_theta)

    def one(th):
        return bloch_spectrum(graph, th, lambda_lo, lambda_hi, opts)

    workers = min(worker_count(), len(grid))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            samples = list(pool.map(one, grid))
    else:
        samples = [one(th) for th in grid]
    return BandSweep(grid, samples, (lambda_lo, lambda_hi), n_theta)


def grid_resolution_caveat(sweep: BandSweep) -> float:
    """Largest change of a band function between adjacent grid quasimomenta.

    Band functions are the sorted sample lists; neighbours with a different
    number of samples in the window (a band crossing the window edge) are
    not compared.
    """
    n = sweep.n_theta
    p = len(sweep.theta_grid[0]) if sweep.theta_grid else 0
    index = {tuple(round(t / (2 * math.pi) * n) % n for t in th): i for i, th in enumerate(sweep.theta_grid)}
    worst = 0.0
    for key, i in index.items():
        here = np.asarray(sweep.samples[i].expanded())
        for axis in range(p):
            nb = list(key)
            nb[axis] = (nb[axis] + 1) % n
            there = np.asarray(sweep.samples[index[tuple(nb)]].expanded())
            if here.size and here.size == there.size:
                worst = max(worst, float(np.max(np.abs(here - there))))
    return worst


@dataclass(frozen=True)
class Gap:
    lo: float
    hi: float
    caveat: float

    @property
    def width(self) -> float:
        return self.hi - self.lo


def find_gaps(sweep: BandSweep, min_width: float, caveat: float | None = None) -> list[Gap]:
    """Maximal open subintervals of the window free of band samples and wider than ``min_width``."""
    if not sweep.samples:
        raise GraphError("empty sweep")
    if caveat is None:
        caveat = grid_resolution_caveat(sweep)
    lo, hi = sweep.window
    pts = [lo, *np.unique(sweep.all_values()), hi]
    return [Gap(float(a), float(b), caveat) for a, b in zip(pts, pts[1:]) if b - a > min_width]


@dataclass
class GapReport:
    lambda0: float
    r: float
    window: tuple[float, float]
    flat_band_at_lambda0: bool
    flat_band_multiplicity: int
    eps_below: float
    eps_above: float
    grid_resolution_caveat: float
    n_theta: int
    nearest_below: float | None = None
    nearest_above: float | None = None
    refined: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def gap_report(sweep: BandSweep, lambda0: float, r: float = math.nan, flat_tol: float = FLAT_TOL) -> GapReport:
    """Distances from ``lambda0`` to the nearest band samples, ignoring the flat band at ``lambda0``."""
    lo, hi = sweep.window
    below, above = [], []
    flat_mults = []
    for res in sweep.samples:
        m = 0
        for e in res.entries:
            if abs(e.lam - lambda0) <= flat_tol:
                m += e.multiplicity
            elif e.lam < lambda0:
                below.append(e.lam)
            else:
                above.append(e.lam)
        flat_mults.append(m)
    flat = bool(flat_mults) and min(flat_mults) > 0
    nb = max(below) if below else None
    na = min(above) if above else None
    eps_below = lambda0 - nb if nb is not None else lambda0 - lo
    eps_above = na - lambda0 if na is not None else hi - lambda0
    return GapReport(
        float(lambda0), float(r), (lo, hi), flat, min(flat_mults) if flat else 0,
        float(eps_below), float(eps_above), grid_resolution_caveat(sweep), sweep.n_theta,
        None if nb is None else float(nb), None if na is None else float(na),
    )


def _refine_side(graph, lambda0, window, theta0, side, flat_tol, opts):
    """Locally minimise the distance from lambda0 to band values on one side over theta."""
    lo, hi = window

    def dist(th):
        res = bloch_spectrum(graph, np.mod(th, 2 * math.pi), lo, hi, opts)
        vals = [e.lam for e in res.entries if abs(e.lam - lambda0) > flat_tol and (e.lam < lambda0) == (side < 0)]
        if not vals:
            return (lambda0 - lo) if side < 0 else (hi - lambda0)
        return min(abs(v - lambda0) for v in vals)

    out = minimize(dist, np.asarray(theta0, dtype=float), method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 200})
    return float(out.fun)


def certify_gap_near(gamma0: MetricGraph, dec: Decoration, attach: AttachmentMap | str | None, l0: float, n: int,
                     n_theta: int = 17, opts: ScanOptions | None = None, flat_tol: float = FLAT_TOL,
                     refine: bool = False) -> GapReport:
    """Sweep the decorated periodic graph around the resonance ``lambda0 = (n pi / l0)^2``.

    The window is ``lambda0 -+ r/2`` with ``r`` the distance from
    ``lambda0`` to the Dirichlet values of the base edges.
    """
    if int(n) != n or n < 1 or n % 2 == 0:
        raise ConditionViolated(
            f"n = {n}: n must be an odd natural number; for even n (or even cycles) the resonance "
            "need not force a pole in every direction and a gap is not guaranteed"
        )
    if not l0 > 0:
        raise ConditionViolated("l0 must be positive")
    if not check_spider_conditions(dec, l0):
        raise ConditionViolated(
            "decoration has no odd cycle of length-l0 edges reaching every boundary vertex by length-l0 paths"
        )
    lambda0 = (n * math.pi / l0) ** 2
    r = dirichlet_edge_spectrum(gamma0, lambda0 * 2 + 10).distance_to(lambda0)
    if r <= 1e-12 * lambda0:
        raise ConditionViolated(f"lambda0 = {lambda0} is a Dirichlet eigenvalue of a base edge")
    window = (lambda0 - r / 2, lambda0 + r / 2)
    graph = decorate_periodic(gamma0, dec, attach)
    sweep = band_sweep(graph, *window, n_theta, opts)
    report = gap_report(sweep, lambda0, r, flat_tol)
    if refine:
        for side in (-1, 1):
            target = report.nearest_below if side < 0 else report.nearest_above
            if target is None:
                continue
            i = min(range(len(sweep.samples)),
                    key=lambda j: min((abs(v - target) for v in sweep.samples[j].values), default=math.inf))
            eps = _refine_side(graph, lambda0, window, sweep.theta_grid[i], side, flat_tol, opts)
            if side < 0:
                report.eps_below = min(report.eps_below, eps)
            else:
                report.eps_above = min(report.eps_above, eps)
        report.refined = True
    return report
