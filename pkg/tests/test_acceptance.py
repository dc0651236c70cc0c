"""Acceptance criteria, each run at its stated tolerance and time budget.

One PASS/FAIL line per criterion is printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from qgraph import decorate, decorate_periodic, make_spider, scan_spectrum, weyl_check
from qgraph.bands import band_sweep, certify_gap_near, gap_report
from qgraph.dtn import distance_to_poles, dtn_matrix, pole_scaling, solvable_at
from qgraph.oracle import fem_spectrum
from qgraph.reduction import reduced_spectrum_check

from conftest import record
from corpus import c4_decoration, closed_form_edge_dtn, complete_graph, edge_decoration, interval, loop
from corpus import random_corpus, square_lattice

PI2 = math.pi**2
LAMBDA0 = 9 * PI2 / 4
CORPUS = random_corpus(20, seed=2024)


def _check(crit, clause, ok, detail=""):
    record(crit, clause, ok, detail)
    return ok


def test_ac1_analytic_spectra():
    t0 = time.perf_counter()
    ok = True
    for name, g, expect in [
        ("dirichlet interval", interval(), [(PI2, 1), (4 * PI2, 1)]),
        ("kirchhoff interval", interval(left="kirchhoff", right="kirchhoff"), [(PI2, 1), (4 * PI2, 1)]),
        ("loop", loop(), [(4 * PI2, 2)]),
    ]:
        res = scan_spectrum(g, 0.5, 50)
        got = [(float(e.lam), e.multiplicity) for e in res.entries]
        match = len(got) == len(expect) and all(
            abs(a - b) <= 1e-8 * b and m == n for (a, m), (b, n) in zip(got, expect)
        )
        ok &= _check("AC-1", name, match, f"{[(round(a, 10), m) for a, m in got]}")
    elapsed = time.perf_counter() - t0
    ok &= _check("AC-1", "runtime < 5 s", elapsed < 5, f"{elapsed:.2f} s")
    assert ok


def test_ac2_fem_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for g in CORPUS:
        assert len(g.edges) <= 6
        fem = fem_spectrum(g, h=1e-3, count=5)
        vals = scan_spectrum(g, 1e-3, 1.05 * fem[-1] + 0.5).expanded()[:5]
        assert len(vals) == 5
        worst = max(worst, float(np.max(np.abs(np.array(vals) - fem) / fem)))
    elapsed = time.perf_counter() - t0
    ok = _check("AC-2", "relative error <= 1e-4", worst <= 1e-4, f"worst {worst:.2e}")
    ok &= _check("AC-2", "runtime < 3 min", elapsed < 180, f"{elapsed:.1f} s")
    assert ok


def test_ac3_dtn_closed_form():
    dec = edge_decoration(1.0)
    lams = []
    x = 0.5
    while len(lams) < 200:
        if distance_to_poles(dec, x) > 0.1:
            lams.append(x)
        x += 0.73
    worst = 0.0
    for lam in lams:
        got = dtn_matrix(dec, lam).entries
        ref = np.array(closed_form_edge_dtn(math.sqrt(lam), 1.0))
        worst = max(worst, float(np.max(np.abs(got - ref)) / np.max(np.abs(ref))))
    assert _check("AC-3", "200 points within 1e-10 relative", worst <= 1e-10, f"worst {worst:.2e}")


def test_ac4_pole_dichotomy():
    t0 = time.perf_counter()
    deltas = np.logspace(-2, -6, 9)
    spider = make_spider(4, 1.0)
    ok = _check("AC-4", "spider solvable subspace zero", solvable_at(spider, PI2).shape == (4, 0))
    slope = pole_scaling(spider, PI2, deltas).fitted_slope
    ok &= _check("AC-4", "spider slope in [-1.1, -0.9]", -1.1 <= slope <= -0.9, f"slope {slope:.5f}")
    c4 = c4_decoration(1.0)
    basis = solvable_at(c4, PI2)
    span_ok = basis.shape == (4, 1) and np.allclose(basis[:, 0] / basis[0, 0], [1, -1, 1, -1], atol=1e-9)
    ok &= _check("AC-4", "C4 solvable span (1,-1,1,-1)", span_ok)
    smin = min(s for d, s in pole_scaling(c4, PI2, [1e-6]).samples)
    ok &= _check("AC-4", "C4 sigma_min at 1e-6 < 1e3", smin < 1e3, f"sigma_min {smin:.3e}")
    elapsed = time.perf_counter() - t0
    ok &= _check("AC-4", "runtime < 30 s", elapsed < 30, f"{elapsed:.2f} s")
    assert ok


@pytest.fixture(scope="module")
def ac5_report():
    t0 = time.perf_counter()
    rep = certify_gap_near(square_lattice(), make_spider(4, 2 / 3), None, 2 / 3, 1, n_theta=17)
    control = band_sweep(square_lattice(), *rep.window, 17)
    nearest = float(np.min(np.abs(control.all_values() - rep.lambda0)))
    return rep, nearest, time.perf_counter() - t0


def test_ac5_gap_opening(ac5_report):
    rep, nearest, elapsed = ac5_report
    ok = _check("AC-5", "lambda0 and r", abs(rep.lambda0 - 22.2066) < 1e-4 and abs(rep.r - 12.337) < 1e-3,
                f"lambda0 {rep.lambda0:.6f}, r {rep.r:.4f}")
    ok &= _check("AC-5", "eps_below >= 0.05", rep.eps_below >= 0.05, f"{rep.eps_below:.4f}")
    ok &= _check("AC-5", "eps_above >= 0.05", rep.eps_above >= 0.05, f"{rep.eps_above:.4f}")
    ok &= _check("AC-5", "negative control within 0.5", nearest < 0.5, f"nearest {nearest:.4f}")
    ok &= _check("AC-5", "runtime < 5 min", elapsed < 300, f"{elapsed:.1f} s")
    assert ok


def test_ac5_flat_band_flag(ac5_report):
    rep, _, _ = ac5_report
    flag = rep.flat_band_at_lambda0
    assert _check("AC-5", "flat-band flag set", flag, f"flat_band_at_lambda0={flag}")


def test_ac6_even_cycle_counterexample():
    t0 = time.perf_counter()
    r = 1.25 * PI2
    g = decorate_periodic(square_lattice(), c4_decoration(2 / 3))
    rep = gap_report(band_sweep(g, LAMBDA0 - r / 2, LAMBDA0 + r / 2, 17), LAMBDA0)
    closest = min(rep.eps_below, rep.eps_above)
    ok = _check("AC-6", "sample within 0.05 off the flat band", closest < 0.05, f"distance {closest:.4f}")
    elapsed = time.perf_counter() - t0
    ok &= _check("AC-6", "runtime < 5 min", elapsed < 300, f"{elapsed:.1f} s")
    assert ok


def test_ac7_reduction_equivalence():
    t0 = time.perf_counter()
    rep = reduced_spectrum_check(complete_graph(5), make_spider(4, 2 / 3), None, 15, 21, exclusion_radius=1e-4)
    ok = _check("AC-7", "identical counts", rep.counts_match and not rep.unmatched_direct and not rep.unmatched_reduced,
                f"{len(rep.direct)} direct, {len(rep.reduced)} reduced")
    ok &= _check("AC-7", "max mismatch <= 1e-6", rep.max_mismatch <= 1e-6, f"{rep.max_mismatch:.2e}")
    elapsed = time.perf_counter() - t0
    ok &= _check("AC-7", "runtime < 2 min", elapsed < 120, f"{elapsed:.1f} s")
    assert ok


def test_ac8_weyl_sanity():
    worst_ratio = 0.0
    for g in CORPUS:
        w = weyl_check(scan_spectrum(g, 0.5, 60), g)
        worst_ratio = max(worst_ratio, w.max_deviation / w.bound)
    big = decorate(complete_graph(5), make_spider(4, 2 / 3))
    wb = weyl_check(scan_spectrum(big, 0.5, 60), big)
    ok = _check("AC-8", "corpus deviation <= |V| + |E|", worst_ratio <= 1.0, f"worst deviation/bound {worst_ratio:.3f}")
    ok &= _check("AC-8", "decorated K5 deviation <= |V| + |E|", not wb.flagged, f"{wb.max_deviation:.2f} <= {wb.bound}")
    assert ok
