"""Dirichlet-to-Neumann matrices of decorations and their behaviour at resonances.

For boundary data ``phi`` the solution of ``-u'' = lambda u`` on the
decoration, continuous and Kirchhoff at interior vertices with
``u = phi`` on the boundary, is found from the secular system with value
rows at the boundary. ``Lambda(lambda) phi`` is the vector of sums of
outgoing derivatives (pointing from each boundary vertex into the
decoration).
"""
from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .eigensolve import ScanOptions, SpectrumResult, scan_spectrum
from .graph import Decoration, GraphError
from .secular import layout


class NumericalError(ArithmeticError):
    """Base class of numerical failures (CLI exit code 3)."""


class PoleProximity(NumericalError):
    pass


class SingularSolve(NumericalError):
    pass


DEFAULT_POLE_GUARD = 1e-6
RCOND_MIN = 1e-13


@dataclass(frozen=True)
class DtnMatrix:
    lam: float
    entries: np.ndarray
    condition_estimate: float

    @property
    def asymmetry(self) -> float:
        nrm = np.linalg.norm(self.entries)
        return float(np.linalg.norm(self.entries - self.entries.T) / nrm) if nrm else 0.0

    @property
    def sigma_min(self) -> float:
        return float(np.linalg.svd(self.entries, compute_uv=False)[-1])


def dirichlet_spectrum_G(dec: Decoration, lambda_max: float, opts: ScanOptions | None = None) -> SpectrumResult:
    """Spectrum of the decoration with Dirichlet conditions on its boundary, in ``(0, lambda_max]``."""
    lo = min(1e-6, lambda_max / 2)
    return scan_spectrum(dec.dirichlet_graph(), lo, lambda_max * (1 + 1e-12), opts)


_pole_cache: dict[Decoration, tuple[float, list[float]]] = {}
_pole_lock = threading.Lock()


def dirichlet_poles(dec: Decoration, upto: float) -> list[float]:
    """Sorted eigenvalues of the Dirichlet decoration problem up to at least ``upto`` (cached)."""
    with _pole_lock:
        hit = _pole_cache.get(dec)
    if hit is not None and hit[0] >= upto:
        return hit[1]
    top = max(upto * 1.5 + 10.0, 2 * hit[0] if hit else 0.0)
    vals = dirichlet_spectrum_G(dec, top).values
    with _pole_lock:
        _pole_cache[dec] = (top, vals)
    return vals


def distance_to_poles(dec: Decoration, lam: float, exclude: float | None = None) -> float:
    poles = dirichlet_poles(dec, lam + 1.0)
    if exclude is not None:
        poles = [p for p in poles if abs(p - exclude) > 1e-9 * max(1.0, exclude)]
    i = bisect.bisect_left(poles, lam)
    near = [abs(poles[j] - lam) for j in (i - 1, i) if 0 <= j < len(poles)]
    return min(near, default=math.inf)


def _interior_system(dec: Decoration, k: float):
    lay = layout(dec.graph, dec.boundary)
    A = _kernels.assemble([k], *lay.kernel_args())[0]
    R = np.zeros((lay.n, dec.d))
    for r, slot in lay.boundary_rows:
        R[r, slot] = 1.0
    return lay, A, R


def _neumann(dec: Decoration, lay, k: float, coeffs: np.ndarray) -> np.ndarray:
    """Sums of outgoing derivatives at the boundary for edge coefficients ``coeffs`` (2|E| x m)."""
    out = np.zeros((dec.d, coeffs.shape[1]), dtype=coeffs.dtype)
    for slot, e, role in lay.boundary_deriv_terms:
        a, b = coeffs[2 * e], coeffs[2 * e + 1]
        if role == 0:
            out[slot] += k * b
        else:
            kl = k * lay.lengths[e]
            out[slot] += k * (a * math.sin(kl) - b * math.cos(kl))
    return out


def dtn_matrix(dec: Decoration, lam: float, pole_guard: float = DEFAULT_POLE_GUARD) -> DtnMatrix:
    if not lam > 0:
        raise GraphError("lambda must be positive")
    dist = distance_to_poles(dec, lam)
    if dist <= pole_guard:
        raise PoleProximity(f"lambda = {lam} is within {dist:.3g} of the Dirichlet spectrum of the decoration")
    k = math.sqrt(lam)
    lay, A, R = _interior_system(dec, k)
    s = np.linalg.svd(A, compute_uv=False)
    rcond = float(s[-1] / s[0])
    if rcond < RCOND_MIN:
        raise SingularSolve(f"interior system is singular at lambda = {lam} (rcond {rcond:.2e})")
    coeffs = np.linalg.solve(A, R)
    return DtnMatrix(float(lam), _neumann(dec, lay, k, coeffs), rcond)


def solvable_at(dec: Decoration, lambda0: float, rtol: float = 1e-7) -> np.ndarray:
    """Orthonormal basis (columns) of the boundary data for which the boundary problem is solvable.

    An empty ``(d, 0)`` array means only ``phi = 0`` is admissible.
    """
    if not lambda0 > 0:
        raise GraphError("lambda0 must be positive")
    k = math.sqrt(lambda0)
    _, A, R = _interior_system(dec, k)
    U, s, _ = np.linalg.svd(A)
    left_null = U[:, s < rtol * max(s[0], 1.0)]
    if left_null.shape[1] == 0:
        return np.eye(dec.d)
    constraints = left_null.conj().T @ R
    _, cs, cvh = np.linalg.svd(constraints)
    rank = int(np.sum(cs > rtol * max(cs[0] if cs.size else 0.0, 1.0)))
    basis = cvh[rank:].conj().T
    if np.allclose(basis.imag, 0.0):
        basis = basis.real
    return basis


@dataclass
class PoleScalingReport:
    lambda0: float
    samples: list[tuple[float, float]]  # (delta, sigma_min), delta decreasing
    fitted_slope: float
    fitted_C: float
    skipped: list[tuple[float, str]] = field(default_factory=list)
    sides: list[tuple[float, float, float]] = field(default_factory=list)  # (delta, below, above)


def pole_scaling(dec: Decoration, lambda0: float, deltas, pole_guard: float | None = None) -> PoleScalingReport:
    """Measure the growth of the smallest singular value of ``Lambda`` near ``lambda0``.

    For each delta the sample is ``min(sigma_min(Lambda(lambda0 - delta)),
    sigma_min(Lambda(lambda0 + delta)))``; the slope of ``log sigma_min``
    against ``log delta`` is fitted by least squares and
    ``C = exp(mean(log sigma_min + log delta))``.
    """
    deltas = sorted({float(d) for d in deltas}, reverse=True)
    if not deltas or deltas[-1] <= 0:
        raise GraphError("deltas must be positive")
    other = distance_to_poles(dec, lambda0, exclude=lambda0)
    if other <= 10 * deltas[0]:
        raise GraphError(
            f"lambda0 is not isolated: another Dirichlet eigenvalue lies within {other:.3g} (<= 10 * max delta)"
        )
    guard = pole_guard if pole_guard is not None else min(DEFAULT_POLE_GUARD, 0.1 * deltas[-1])
    samples, skipped, sides = [], [], []
    for d in deltas:
        vals = []
        for lam in (lambda0 - d, lambda0 + d):
            try:
                vals.append(dtn_matrix(dec, lam, guard).sigma_min)
            except NumericalError as exc:
                skipped.append((d, str(exc)))
                vals.append(math.nan)
        sides.append((d, vals[0], vals[1]))
        finite = [v for v in vals if math.isfinite(v)]
        if finite:
            samples.append((d, min(finite)))
    if len(samples) >= 2:
        x = np.log([s[0] for s in samples])
        y = np.log([max(s[1], 1e-300) for s in samples])
        slope = float(np.polyfit(x, y, 1)[0])
        C = float(np.exp(np.mean(x + y)))
    else:
        slope, C = math.nan, math.nan
    return PoleScalingReport(float(lambda0), samples, slope, C, skipped, sides)
