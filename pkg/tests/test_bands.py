import math

import numpy as np
import pytest

from qgraph import bloch_spectrum, decorate_periodic, make_graph, make_spider
from qgraph.bands import (
    BandSweep,
    ConditionViolated,
    band_sweep,
    certify_gap_near,
    find_gaps,
    gap_report,
    grid_resolution_caveat,
    theta_grid,
)
from qgraph.eigensolve import SpectrumEntry, SpectrumResult, ScanOptions

from corpus import c4_decoration, chain_lattice, square_lattice

LAMBDA0 = 9 * math.pi**2 / 4


def _fake_sweep(values, window=(20.0, 25.0)):
    res = SpectrumResult([SpectrumEntry(v, 1, 0.0) for v in values], window, ScanOptions())
    return BandSweep([(0.0,)], [res], window, 1)


def test_find_gaps_example():
    gaps = find_gaps(_fake_sweep([21.0, 23.0]), 0.5)
    assert [(g.lo, g.hi) for g in gaps] == [(20.0, 21.0), (21.0, 23.0), (23.0, 25.0)]


def test_find_gaps_dense_is_empty():
    assert find_gaps(_fake_sweep(list(np.arange(20.1, 25.0, 0.1))), 0.5) == []


def test_theta_grid_uniform():
    g = theta_grid(2, 4)
    assert len(g) == 16
    assert {t[0] for t in g} == {0.0, math.pi / 2, math.pi, 3 * math.pi / 2}


def test_undecorated_lattice_sweep_matches_dispersion():
    sweep = band_sweep(square_lattice(), 20, 25, 17)
    expected = set()
    for t1, t2 in sweep.theta_grid:
        base = math.acos(0.5 * (math.cos(t1) + math.cos(t2)))
        for k in (2 * math.pi - base, 2 * math.pi + base, math.pi):
            if 20 <= k * k < 25:
                expected.add(round(k * k, 8))
    got = {round(v, 8) for v in sweep.all_values()}
    assert got == expected


@pytest.mark.parametrize("target", np.arange(20.25, 25, 0.5))
def test_undecorated_lattice_spectrum_fills_window(target):
    # the diagonal quasimomentum with cos t = cos k puts a band value exactly at k^2
    t = math.acos(math.cos(math.sqrt(target)))
    res = bloch_spectrum(square_lattice(), [t, t], target - 0.25, target + 0.25)
    assert any(abs(v - target) < 1e-8 for v in res.values)


@pytest.mark.parametrize("n_theta", [8, 9])
def test_chain_sweep_follows_dispersion(n_theta):
    sweep = band_sweep(chain_lattice(), 2, 3, n_theta)
    for (t,), res in zip(sweep.theta_grid, sweep.samples):
        expected = [x for x in [math.acos(math.cos(t)) ** 2] if 2 <= x < 3]
        np.testing.assert_allclose(res.values, expected, rtol=1e-10)
    if n_theta == 8:
        assert sweep.all_values() == pytest.approx([math.pi**2 / 4] * 2)


def test_no_crossing_edges_gives_identical_samples():
    g = make_graph(["a", "b"], [("e", "a", "b", 0.8), ("f", "b", "a", 1.1)], period_rank=1)
    sweep = band_sweep(g, 1, 40, 6)
    for res in sweep.samples[1:]:
        np.testing.assert_allclose(res.expanded(), sweep.samples[0].expanded(), atol=1e-9)


@pytest.fixture(scope="module")
def spider_lattice():
    return decorate_periodic(square_lattice(), make_spider(4, 2 / 3))


@pytest.fixture(scope="module")
def spider_sweep(spider_lattice):
    r = 1.25 * math.pi**2
    return band_sweep(spider_lattice, LAMBDA0 - r / 2, LAMBDA0 + r / 2, 9)


def test_theta_symmetry(spider_sweep):
    index = {tuple(round(x, 12) for x in th): i for i, th in enumerate(spider_sweep.theta_grid)}
    for th, res in zip(spider_sweep.theta_grid, spider_sweep.samples):
        mirror = tuple(round((2 * math.pi - x) % (2 * math.pi), 12) for x in th)
        mirror = tuple(0.0 if abs(x - 2 * math.pi) < 1e-9 else x for x in mirror)
        other = spider_sweep.samples[index[mirror]]
        np.testing.assert_allclose(res.expanded(), other.expanded(), atol=1e-9)


def test_spider_lattice_has_gap_around_resonance(spider_sweep):
    rep = gap_report(spider_sweep, LAMBDA0)
    assert rep.eps_below > 0.05 and rep.eps_above > 0.05
    gaps = find_gaps(spider_sweep, 0.05)
    assert any(g.lo < LAMBDA0 < g.hi for g in gaps)


def test_odd_spider_gives_no_flat_band_at_resonance(spider_sweep):
    """Kirchhoff balance around the odd cycle forces vertex values and sine amplitudes to vanish."""
    rep = gap_report(spider_sweep, LAMBDA0)
    assert not rep.flat_band_at_lambda0
    assert rep.flat_band_multiplicity == 0


def test_even_cycle_decoration_has_flat_band_and_no_gap():
    g = decorate_periodic(square_lattice(), c4_decoration(2 / 3))
    r = 1.25 * math.pi**2
    coarse = gap_report(band_sweep(g, LAMBDA0 - r / 2, LAMBDA0 + r / 2, 5), LAMBDA0)
    fine = gap_report(band_sweep(g, LAMBDA0 - r / 2, LAMBDA0 + r / 2, 9), LAMBDA0)
    assert fine.flat_band_at_lambda0 and fine.flat_band_multiplicity >= 1
    # a band reaches the resonance, so finer grids get closer to it
    assert min(fine.eps_below, fine.eps_above) < min(coarse.eps_below, coarse.eps_above)


def test_refinement_monotone(spider_lattice):
    r = 1.25 * math.pi**2
    window = (LAMBDA0 - r / 2, LAMBDA0 + r / 2)
    coarse = gap_report(band_sweep(spider_lattice, *window, 6), LAMBDA0)
    fine = gap_report(band_sweep(spider_lattice, *window, 12), LAMBDA0)
    assert fine.eps_below <= coarse.eps_below + fine.grid_resolution_caveat
    assert fine.eps_above <= coarse.eps_above + fine.grid_resolution_caveat


def test_caveat_positive_for_dispersive_bands(spider_sweep):
    assert grid_resolution_caveat(spider_sweep) > 0


def test_certify_rejects_even_n_and_even_cycle():
    with pytest.raises(ConditionViolated, match="odd"):
        certify_gap_near(square_lattice(), make_spider(4, 2 / 3), None, 2 / 3, 2)
    with pytest.raises(ConditionViolated, match="odd cycle"):
        certify_gap_near(square_lattice(), c4_decoration(2 / 3), None, 2 / 3, 1)


def test_certify_rejects_resonance_on_dirichlet_value():
    with pytest.raises(ConditionViolated, match="Dirichlet"):
        certify_gap_near(square_lattice(), make_spider(4, 1.0), None, 1.0, 1)


def test_certify_report_fields():
    rep = certify_gap_near(square_lattice(), make_spider(4, 2 / 3), None, 2 / 3, 1, n_theta=5)
    assert rep.lambda0 == pytest.approx(LAMBDA0)
    assert rep.r == pytest.approx(1.25 * math.pi**2)
    assert rep.window == pytest.approx((LAMBDA0 - rep.r / 2, LAMBDA0 + rep.r / 2))
    assert rep.eps_below > 0 and rep.eps_above > 0
    d = rep.to_dict()
    assert set(d) >= {"lambda0", "flat_band_at_lambda0", "eps_below", "eps_above", "grid_resolution_caveat"}


def test_refined_certificate_not_larger():
    plain = certify_gap_near(square_lattice(), make_spider(4, 2 / 3), None, 2 / 3, 1, n_theta=5)
    refined = certify_gap_near(square_lattice(), make_spider(4, 2 / 3), None, 2 / 3, 1, n_theta=5, refine=True)
    assert refined.refined
    assert refined.eps_below <= plain.eps_below + 1e-12
    assert refined.eps_above <= plain.eps_above + 1e-12
    assert refined.eps_below > 0 and refined.eps_above > 0
