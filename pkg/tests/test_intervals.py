import math

import numpy as np
import pytest

from dynlab.errors import RootFindingError
from dynlab.geometry import JordanDisk
from dynlab.intervals import (
    IntervalMap,
    check_bc_interval,
    check_ld_interval,
    interval_pullback,
    lap_count,
    real_schwarz_probe,
    tilde_interval,
)
from dynlab.polynomials import Polynomial
from dynlab.pullback import enumerate_pullbacks

L4 = IntervalMap.logistic(4.0)
CHEB = IntervalMap.quadratic(-2.0)
FEIG = IntervalMap.quadratic(-1.4011551890)


# ---------------------------------------------------------------- IntervalMap

def test_family_logistic():
    assert L4.domain == (0.0, 1.0)
    assert L4.critical == ((0.5, 2),)
    xs = np.array([0.0, 0.25, 0.5, 1.0])
    assert np.allclose(L4.f(xs), [0.0, 0.75, 1.0, 0.0])
    assert np.allclose(L4.df(xs), [4.0, 2.0, 0.0, -4.0])


def test_family_quadratic_invariant_interval():
    beta = 2.0
    assert CHEB.domain == (-beta, beta)
    assert np.allclose(CHEB.f(np.array([beta, -beta, 0.0])), [2.0, 2.0, -2.0])


def test_family_cubic_two_critical_points():
    cub = IntervalMap.cubic(1.5)
    assert [c for c, _ in cub.critical] == [-1.0, 1.0]
    assert len(cub.branches) == 3
    assert [inc for _, _, inc in cub.branches] == [True, False, True]


def test_branches_partition_logistic():
    (l0, h0, i0), (l1, h1, i1) = L4.branches
    assert (l0, h0, h1) == (0.0, 0.5, 1.0)
    assert i0 and not i1


def test_from_callables_checks_derivative():
    f = lambda x: 4 * x * (1 - x)
    with pytest.raises(ValueError):
        IntervalMap.from_callables(f, lambda x: 4 - 7.9 * x, (0, 1),
                                   [(0.5, 2)])
    good = IntervalMap.from_callables(f, lambda x: 4 - 8 * x, (0, 1),
                                      [(0.5, 2)])
    assert lap_count(good, 3) == lap_count(L4, 3)


def test_rejects_non_invariant_domain():
    with pytest.raises(ValueError):
        IntervalMap.from_callables(lambda x: 4.2 * x * (1 - x),
                                   lambda x: 4.2 - 8.4 * x, (0, 1),
                                   [(0.5, 2)])


def test_rejects_boundary_critical_point():
    with pytest.raises(ValueError):
        IntervalMap(domain=(0, 1), critical=((0.0, 2),),
                    coefficients=(0, 4, -4))


# ----------------------------------------------------------- interval_pullback

def test_pullback_quadratic_formula_endpoints():
    # 4x(1-x) = 0.9 has roots (1 +- sqrt(0.1)) / 2
    tree = interval_pullback(L4, (0.9, 1.0), 1)
    lo = (1 - math.sqrt(0.1)) / 2
    hi = (1 + math.sqrt(0.1)) / 2
    nodes = tree.at_depth(1)
    assert len(nodes) == 2                      # one per monotone lap
    assert nodes[0].lo == pytest.approx(lo, abs=1e-12)
    assert nodes[0].hi == 0.5 and nodes[1].lo == 0.5
    assert nodes[1].hi == pytest.approx(hi, abs=1e-12)
    assert all(v.contains_critical for v in nodes)
    # the laps glue at the critical point into a single component
    assert tree.components(1) == [(nodes[0].lo, nodes[1].hi)]


def test_pullback_full_interval_one_component():
    tree = interval_pullback(L4, (0.0, 1.0), 1)
    assert tree.components(1) == [(0.0, 1.0)]
    assert len(tree.at_depth(1)) == 2


def test_pullback_forward_audit():
    # f^n maps every depth-n node endpoint onto a root endpoint (or a
    # critical-gluing point interior to the root)
    tree = interval_pullback(L4, (0.2, 0.8), 6)
    for v in tree.nodes:
        w = np.array([v.lo, v.hi])
        for _ in range(v.depth):
            w = L4.f(w)
        lo, hi = min(w), max(w)
        assert lo >= 0.2 - 1e-8 and hi <= 0.8 + 1e-8
        assert min(abs(lo - 0.2), abs(hi - 0.8)) < 1e-8 or \
            v.contains_critical


def test_pullback_siblings_disjoint():
    tree = interval_pullback(L4, (0.2, 0.8), 6)
    for n in range(1, 7):
        level = sorted(tree.at_depth(n), key=lambda v: v.lo)
        for a, b in zip(level, level[1:]):
            assert a.hi <= b.lo + 1e-10


def test_pullback_collapses_narrow_intervals():
    tree = interval_pullback(L4, (0.5, 0.5 + 2e-13), 4)
    assert tree.collapsed > 0


def test_pullback_bad_inputs():
    with pytest.raises(ValueError):
        interval_pullback(L4, (0.2, 1.5), 1)
    with pytest.raises(ValueError):
        interval_pullback(L4, (0.8, 0.2), 1)
    with pytest.raises(ValueError):
        interval_pullback(L4, (0.2, 0.8), -1)


def test_pullback_json():
    obj = interval_pullback(L4, (0.9, 1.0), 1).to_json()
    assert obj["root"] == [0.9, 1.0]
    assert obj["complete"] is True
    assert len(obj["nodes"]) == 3


# ----------------------------------------------------------------- lap counts

def test_lap_count_matches_node_count_logistic():
    for n in range(1, 13):
        tree = interval_pullback(L4, L4.domain, n)
        assert lap_count(L4, n) == len(tree.at_depth(n)) == 2 ** n


def test_lap_count_matches_node_count_partial_window():
    # laps of f^10 meeting a sub-target: count nodes directly
    tree = interval_pullback(L4, (0.9, 1.0), 10)
    full = interval_pullback(L4, L4.domain, 10)
    assert 0 < len(tree.at_depth(10)) <= len(full.at_depth(10))


def test_lap_count_cubic():
    cub = IntervalMap.cubic(1.5)
    for n in (1, 2, 3, 4):
        assert lap_count(cub, n) == len(
            interval_pullback(cub, cub.domain, n).at_depth(n))


def test_lap_count_bad_n():
    with pytest.raises(ValueError):
        lap_count(L4, 0)


def test_complex_real_cross_check():
    # pullbacks of a disk centered on [-2, 2] under z^2-2: every complex
    # component meets the real line, and the count at each depth matches the
    # real merged-component count for the matching interval
    poly = Polynomial((-2, 0, 1))
    disk = JordanDisk.circle(0.6, 0.3)
    enum = enumerate_pullbacks(poly, disk, 5)
    tree = interval_pullback(CHEB, (0.3, 0.9), 5)
    for n in range(1, 6):
        complex_real = 0
        for ch in enum.at_depth(n):
            b = ch.final.component.boundary
            if b.imag.min() <= 0.0 <= b.imag.max():
                complex_real += 1
        assert complex_real == len(tree.components(n))


# -------------------------------------------------------------- real checkers

def test_ld_cocycle_is_4_to_n():
    # orbit of the critical value: 1 -> 0 -> 0, |Df(0)| = 4
    for imap, c in ((L4, 0.5), (CHEB, 0.0)):
        x = imap.f(np.array([c]))[0]
        prod = 1.0
        for n in range(1, 21):
            prod *= abs(imap.df(np.array([x]))[0])
            assert abs(prod - 4.0 ** n) / 4.0 ** n < 1e-9
            x = imap.f(np.array([x]))[0]


def test_ld_logistic_passes():
    rep = check_ld_interval(L4, K=100.0, radius=0.1, N=200)
    assert rep.passed and rep.condition == "LD"


def test_ld_feigenbaum_violated_and_returns_verified():
    rep = check_ld_interval(FEIG, K=100.0, radius=0.05, N=1000)
    assert rep.verdict == "violated"
    for w in rep.witnesses:
        assert w.derivative < 100.0
        x = 0.0
        for _ in range(w.depth):
            x = FEIG.f(np.array([x]))[0]
        assert abs(x) < 0.05      # the recorded return really returns


def test_ld_crit_optout():
    rep = check_ld_interval(FEIG, K=100.0, radius=0.05, N=1000, crit=[])
    assert rep.passed     # vacuous with no audited critical points


def test_ld_bad_budget():
    with pytest.raises(ValueError):
        check_ld_interval(L4, 10.0, 0.1, 0)
    with pytest.raises(ValueError):
        check_ld_interval(L4, -1.0, 0.1, 10)


def test_tilde_interval_contains_critical_point():
    lo, hi = tilde_interval(L4, 0.5, 0.05)
    assert lo < 0.5 < hi
    img = L4.f(np.linspace(lo, hi, 200))
    assert img.min() >= 1.0 - 0.05 - 1e-9 and img.max() <= 1.0


def test_bc_chebyshev_passes():
    rep = check_bc_interval(CHEB, r=2.0, delta0=0.05, grid=3, depth=10)
    assert rep.verdict == "no-violation-within-budget"


def test_bc_feigenbaum_violated_with_forward_confirmation():
    rep = check_bc_interval(FEIG, r=4.0, delta0=0.02, grid=1, depth=12)
    assert rep.verdict == "violated"
    fc = FEIG.f(np.array([0.0]))[0]
    for w in rep.witnesses:
        assert w.diam >= w.delta and w.dist_cv <= w.delta
        lo, hi = w.interval
        img = np.array([lo, hi])
        for _ in range(w.depth + 1):
            img = FEIG.f(img)
        assert np.max(np.abs(img - fc)) <= 4.0 * w.delta * (1 + 1e-6)


def test_bc_witnesses_monotone_in_r():
    small = check_bc_interval(FEIG, 2.0, 0.02, 1, 12)
    large = check_bc_interval(FEIG, 4.0, 0.02, 1, 12)
    keys_small = {(w.critical_point, w.depth) for w in small.witnesses}
    keys_large = {(w.critical_point, w.depth) for w in large.witnesses}
    assert keys_small <= keys_large


def test_bc_bad_parameters():
    with pytest.raises(ValueError):
        check_bc_interval(L4, 1.0, 0.05, 2, 4)
    with pytest.raises(ValueError):
        check_bc_interval(L4, 2.0, 0.05, 0, 4)


# ---------------------------------------------------------------- real probe

def test_probe_identity_depth():
    pr = real_schwarz_probe(L4, eta=0.05, trials=10, max_depth=0, seed=0)
    assert pr.ratios == (1.0,) * 10


def test_probe_min_positive_and_stable():
    base = real_schwarz_probe(L4, eta=0.05, trials=200, max_depth=12, seed=0)
    assert base.empirical_min > 0
    doubled = real_schwarz_probe(L4, eta=0.05, trials=400, max_depth=12,
                                 seed=0)
    assert abs(doubled.empirical_min - base.empirical_min) \
        <= 0.2 * base.empirical_min


def test_probe_halving_eta_never_decreases_min():
    for seed in (0, 1, 2):
        wide = real_schwarz_probe(L4, eta=0.05, trials=100, max_depth=8,
                                  seed=seed)
        narrow = real_schwarz_probe(L4, eta=0.025, trials=100, max_depth=8,
                                    seed=seed)
        assert narrow.empirical_min >= wide.empirical_min - 1e-12


def test_probe_histogram():
    pr = real_schwarz_probe(L4, eta=0.05, trials=50, max_depth=6, seed=0)
    counts, edges = pr.histogram(bins=10)
    assert counts.sum() == len(pr.ratios)
    assert len(edges) == 11


def test_probe_bad_parameters():
    with pytest.raises(ValueError):
        real_schwarz_probe(L4, 0.0, 10, 3)
    with pytest.raises(ValueError):
        real_schwarz_probe(L4, 0.05, 0, 3)
