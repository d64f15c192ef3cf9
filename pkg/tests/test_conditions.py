import math

import numpy as np
import pytest

from dynlab import _kernels
from dynlab.errors import GeometryError
from dynlab.geometry import JordanDisk
from dynlab.polynomials import Polynomial, orbit
from dynlab.pullback import tilde_ball
from dynlab.conditions import (
    ConditionReport,
    ScaleStructure,
    build_scale_structure,
    check_bc,
    check_ld,
    check_univalent_pullback,
    estimate_kappa0,
    julia_critical_points,
    koebe_variation_probe,
    return_decomposition,
)

Z2 = Polynomial((0, 0, 1))
CHEB = Polynomial((-2, 0, 1))
FEIG = Polynomial((-1.4011551890, 0, 1))       # near the period-doubling limit
NEAR_NEUTRAL = Polynomial((-0.75 - 1e-4, 0, 1))


def test_julia_critical_points():
    assert julia_critical_points(Z2) == []           # 0 attracts to itself
    assert julia_critical_points(CHEB) == [(0j, 2)]


# ------------------------------------------------------------------ check_ld

def test_ld_chebyshev_passes():
    rep = check_ld(CHEB, K=10, neighborhood_radius=0.1, N=50)
    assert rep.verdict == "no-violation-within-budget"
    assert rep.passed and rep.witnesses == ()


def test_ld_vacuous_for_escaping_critical_point():
    rep = check_ld(Z2, K=1e9, neighborhood_radius=10.0, N=50)
    assert rep.passed


def test_ld_feigenbaum_violated():
    rep = check_ld(FEIG, K=100, neighborhood_radius=0.05, N=1000)
    assert rep.verdict == "violated"
    assert rep.witnesses
    for w in rep.witnesses:
        assert w.derivative < 100
        # the recorded return really is a return: f^n(c) within the radius
        fn, _ = _kernels.iterate_eval(FEIG.coeff_array, 0j, w.depth)
        assert abs(fn) < 0.05


def test_ld_bad_budget():
    with pytest.raises(ValueError):
        check_ld(CHEB, 10, 0.1, 0)


# ------------------------------------------------------------------ check_bc

def test_bc_chebyshev_passes():
    rep = check_bc(CHEB, r=2, delta0=0.05, delta_grid=2, depth=6)
    assert rep.verdict == "no-violation-within-budget"


def test_bc_vacuous():
    assert check_bc(Z2, 2, 0.05, 2, 4).passed


def test_bc_near_neutral_violated():
    rep = check_bc(NEAR_NEUTRAL, r=2, delta0=0.05, delta_grid=1, depth=9)
    assert rep.verdict == "violated"
    coeffs = NEAR_NEUTRAL.coeff_array
    fc = NEAR_NEUTRAL(0j)
    for w in rep.witnesses:
        assert w.diam >= w.delta and w.dist_cv <= w.delta
        # forward consistency: f^depth maps the witness into the target
        # tilde-ball, so one more iterate lands in B(f(c), r delta)
        img, _ = _kernels.iterate_eval(coeffs, w.component.basepoint,
                                       w.depth + 1)
        assert abs(img - fc) <= 2 * w.delta * (1 + 1e-6)


def test_bc_witness_monotone_in_r():
    small = check_bc(NEAR_NEUTRAL, 2, 0.05, 1, 9)
    large = check_bc(NEAR_NEUTRAL, 4, 0.05, 1, 9)
    keys_small = {(w.critical_point, w.depth): w for w in small.witnesses}
    keys_large = {(w.critical_point, w.depth): w for w in large.witnesses}
    assert set(keys_small) <= set(keys_large)
    for k, w in keys_small.items():
        assert keys_large[k].diam >= w.diam - 1e-9


def test_bc_bad_parameters():
    with pytest.raises(ValueError):
        check_bc(CHEB, 1.0, 0.05, 2, 4)
    with pytest.raises(ValueError):
        check_bc(CHEB, 2.0, -0.05, 2, 4)


# ----------------------------------------------------------------- check_upb

def test_upb_chebyshev_passes():
    rep = check_univalent_pullback(CHEB, 0.02, 0.08, depth=6)
    assert rep.verdict == "no-violation-within-budget"
    assert rep.condition == "UPB"


def test_upb_precondition():
    with pytest.raises(ValueError):
        check_univalent_pullback(CHEB, 0.08, 0.02, depth=4)


def test_upb_vacuous():
    assert check_univalent_pullback(Z2, 0.02, 0.08, depth=4).passed


def test_report_invariant():
    with pytest.raises(ValueError):
        ConditionReport(condition="BC", parameter=2.0, verdict="violated",
                        witnesses=(), budget={})


# ------------------------------------------------------------ ScaleStructure

def test_scale_structure_dyadic_and_nested():
    scale = build_scale_structure(CHEB, 0.05, 5)
    for n in range(6):
        assert scale.delta(n) == 0.05 * 2.0 ** (-n)   # exact dyadic halving
    assert scale.level_of(0j) == 5
    assert scale.level_of(10 + 0j) == -1
    d = [scale.disk(0j, n).diameter for n in range(6)]
    assert all(a > b for a, b in zip(d, d[1:]))


def test_scale_structure_requires_julia_critical():
    with pytest.raises(GeometryError):
        build_scale_structure(Z2, 0.05, 3)


# ----------------------------------------------------------- estimate_kappa0

def test_kappa0_pure_square_parts():
    # formal run treating 0 as if it were a Julia critical point: the
    # tilde-balls are perfectly round, so the power-law part is exactly 1
    # and the derivative part sits at its structural ceiling 1/2
    scale = build_scale_structure(Z2, 0.05, 6, crit=[(0j, 2)])
    deriv, power = estimate_kappa0(Z2, scale, 200, return_parts=True)
    assert power == pytest.approx(1.0, abs=1e-3)
    assert deriv == pytest.approx(0.5, abs=5e-3)
    assert estimate_kappa0(Z2, scale, 200) == min(deriv, power)


def test_kappa0_chebyshev_stable_under_doubling():
    scale = build_scale_structure(CHEB, 0.05, 6)
    k1 = estimate_kappa0(CHEB, scale, 200)
    k2 = estimate_kappa0(CHEB, scale, 400)
    assert 0 < k2 <= k1 <= 1
    assert abs(k1 - k2) <= 0.1 * k1


def test_kappa0_power_law_regression_cubic():
    # diam B~(1, delta) for z^3 - 3z follows delta^(1/2): log-log slope
    deltas = np.array([0.002 * 2.0 ** (-k) for k in range(6)])
    diams = np.array([tilde_ball(Polynomial((0, -3, 0, 1)), 1, d).diameter
                      for d in deltas])
    slope = np.polyfit(np.log(deltas), np.log(diams), 1)[0]
    assert slope == pytest.approx(0.5, rel=0.05)


def test_kappa0_degenerate_disk():
    dot = JordanDisk(np.array([1 + 0j, 1 + 0j, 1 + 0j]), 1)
    scale = ScaleStructure(delta0=0.1, levels=2, critical=((1 + 0j, 2),),
                           disks={1 + 0j: (dot, dot, dot)})
    with pytest.raises(GeometryError):
        estimate_kappa0(Polynomial((0, -3, 0, 1)), scale, 10)


# ------------------------------------------------------ return_decomposition

def test_return_decomposition_first_entry():
    poly = Polynomial((-1.9, 0, 1))
    scale = build_scale_structure(poly, 0.2, 4)
    rec = orbit(poly, 0j, 40)
    levels = [scale.level_of(z) for z in rec.points]
    S = next(s for s in range(1, 41) if levels[s] >= 0)
    dec = return_decomposition(poly, 0j, S, scale)
    assert len(dec.blocks) == 1
    assert dec.blocks[0][1] == S


def test_return_decomposition_two_levels():
    # the critical orbit converges to the period-3 cycle, giving returns at
    # alternating depths; a deep S splits into decreasing-level blocks
    poly = Polynomial((-1.77, 0, 1))
    scale = build_scale_structure(poly, 0.2, 6, crit=[(0j, 2)])
    dec = return_decomposition(poly, 0j, 39, scale)
    assert len(dec.blocks) >= 2
    ns = [n for n, _ in dec.blocks]
    ss = [s for _, s in dec.blocks]
    assert ns == sorted(ns, reverse=True) and len(set(ns)) == len(ns)
    assert ss == sorted(ss) and ss[-1] == 39
    prod = math.prod(dec.block_derivatives)
    assert prod == pytest.approx(dec.total_derivative, rel=1e-8)


def test_return_decomposition_precondition():
    poly = Polynomial((-1.9, 0, 1))
    scale = build_scale_structure(poly, 0.2, 4)
    rec = orbit(poly, 0j, 40)
    levels = [scale.level_of(z) for z in rec.points]
    S_bad = next(s for s in range(1, 41) if levels[s] < 0)
    with pytest.raises(ValueError):
        return_decomposition(poly, 0j, S_bad, scale)


# ----------------------------------------------------- koebe_variation_probe

def test_probe_identity_depth():
    pr = koebe_variation_probe(Z2, trials=5, rho=0.5, max_depth=0)
    assert pr.ratios == (1.0,) * 5


def test_probe_square_finite():
    pr = koebe_variation_probe(Z2, trials=60, rho=0.5, max_depth=6)
    assert pr.ratios and all(np.isfinite(pr.ratios))
    assert pr.skipped + len(pr.ratios) == 60
    assert pr.empirical_max > 0


def test_probe_monotone_in_rho_paired_seeds():
    lo = koebe_variation_probe(Z2, trials=60, rho=0.5, max_depth=6, seed=3)
    hi = koebe_variation_probe(Z2, trials=60, rho=1.0, max_depth=6, seed=3)
    assert hi.empirical_max <= lo.empirical_max + 1e-12


def test_probe_bad_rho():
    with pytest.raises(ValueError):
        koebe_variation_probe(Z2, 5, 0.0, 3)
