"""Quadrature oracle, brute-force best response, and iteration solver."""

from __future__ import annotations

import warnings
from dataclasses import replace

import pytest

from gridstore import (
    ProspectParams,
    SolverSettings,
    StrategyProfile,
    best_response_cgt,
    grid_best_response,
    iterate_best_response,
    quadrature_expected_utility,
)
from gridstore.errors import CycleDetected
from gridstore.solver import _iterate

from helpers import BENCH_PROSPECT, benchmark_scenario, framed_benchmark

INTERIOR_BR = 0.7614942528735631
BNE4_ALPHA = 0.8748114630467568


def test_quadrature_uncontested_zero_storage():
    s = benchmark_scenario()
    u = quadrature_expected_utility(0, StrategyProfile.of(0.0, 0.7), s)
    assert u == pytest.approx(12.0, rel=1e-10)


def test_quadrature_contested_matches_closed_form_value():
    s = benchmark_scenario()
    u = quadrature_expected_utility(0, StrategyProfile.of(INTERIOR_BR, 1.0), s)
    assert u == pytest.approx(13.13103448275844, rel=1e-9)


def test_quadrature_neutral_framing_is_a_shift():
    neutral = ProspectParams(r=3.0, lam=1.0, beta_plus=1.0, beta_minus=1.0)
    s = benchmark_scenario(prospect=(neutral, None))
    profile = StrategyProfile.of(0.8, 0.9)
    framed = quadrature_expected_utility(0, profile, s, framed=True)
    plain = quadrature_expected_utility(0, profile, s, framed=False)
    assert framed == pytest.approx(plain - 3.0, rel=1e-9)


def test_grid_best_response_refines_to_interior_optimum():
    s = benchmark_scenario()
    br = grid_best_response(0, 1.0, s)
    # Ternary refinement inside the winning bracket resolves far below
    # the grid step; comparison noise on the flat quadratic top caps the
    # attainable accuracy near sqrt(eps).
    assert br == pytest.approx(INTERIOR_BR, abs=1e-6)


def test_grid_best_response_store_all_branch():
    s = benchmark_scenario()
    assert grid_best_response(0, 0.5, s) == 1.0


def test_grid_best_response_neutral_framing_matches_rational():
    neutral = ProspectParams(r=1.0, lam=1.0, beta_plus=1.0, beta_minus=1.0)
    s = benchmark_scenario(prospect=(neutral, None))
    for tenths in range(11):
        opp = tenths / 10.0
        framed = grid_best_response(0, opp, s, framed=True)
        plain = grid_best_response(0, opp, s, framed=False)
        assert framed == pytest.approx(plain, abs=1e-6)


def test_iteration_rational_players_reach_interior_equilibrium():
    s = benchmark_scenario()
    res = iterate_best_response(s)
    assert res.converged
    assert res.classification == "BNE4"
    assert res.profile[0] == pytest.approx(BNE4_ALPHA, abs=2e-5)
    assert res.profile[1] == pytest.approx(BNE4_ALPHA, abs=2e-5)
    assert res.residual <= 1e-6


def test_iteration_framed_pair_benchmark_reference():
    s = framed_benchmark()
    res = iterate_best_response(s)
    assert res.converged
    assert res.classification == "PT-Iterated"
    assert res.iterations == 2
    assert res.profile[0] == pytest.approx(0.700822, abs=1e-6)
    assert res.profile[1] == 1.0


def test_iteration_framed_pair_high_reference():
    # A reference far above attainable utility puts both players deep in
    # the loss region, where hedging pulls storage toward 0.88.
    s = framed_benchmark(reference=25.0)
    res = iterate_best_response(s)
    assert res.converged
    for p in (0, 1):
        assert abs(res.profile[p] - 0.88) <= 0.01


def test_iteration_one_framed_one_rational():
    p0 = replace(BENCH_PROSPECT, r=13.0)
    s = benchmark_scenario(prospect=(p0, None))
    res = iterate_best_response(s)
    assert res.converged
    assert res.profile[0] == pytest.approx(0.6231968815715443, abs=1e-4)
    assert res.profile[1] == 1.0


def test_iteration_result_is_a_fixed_point():
    p0 = replace(BENCH_PROSPECT, r=13.0)
    s = benchmark_scenario(prospect=(p0, None))
    res = iterate_best_response(s)
    settings = SolverSettings()
    again0 = grid_best_response(0, res.profile[1], s, framed=True, settings=settings)
    again1, _ = best_response_cgt(1, res.profile[0], s)
    assert abs(again0 - res.profile[0]) <= 1e-9
    assert again1 == res.profile[1]


def test_iteration_is_deterministic():
    s = framed_benchmark()
    a = iterate_best_response(s)
    b = iterate_best_response(s)
    assert tuple(a.profile) == tuple(b.profile)
    assert a.expected_utilities == b.expected_utilities
    assert a.iterations == b.iterations


def test_iteration_reports_two_cycle():
    # Antagonistic responders that flip between two profiles forever.
    responders = (lambda a2: a2, lambda a1: 1.0 - a1)
    with pytest.raises(CycleDetected) as exc_info:
        _iterate(responders, (0.2, 0.9), SolverSettings())
    exc = exc_info.value
    assert exc.first == pytest.approx((0.1, 0.9), abs=1e-12)
    assert exc.second == pytest.approx((0.9, 0.1), abs=1e-12)
    assert exc.iterations == 3


def test_iteration_round_cap_reported_as_non_convergence():
    s = benchmark_scenario()
    res = iterate_best_response(s, settings=SolverSettings(max_iters=3))
    assert not res.converged
    assert res.iterations == 3
    assert res.residual > 1e-6


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(grid_step=0.0)
    with pytest.raises(ValueError):
        SolverSettings(grid_step=0.5)
    with pytest.raises(ValueError):
        SolverSettings(tol=0.0)
    with pytest.raises(ValueError):
        SolverSettings(max_iters=0)
    with pytest.raises(ValueError):
        SolverSettings(quad_rel_tol=0.0)


def test_settings_warn_when_tolerance_outruns_grid():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        SolverSettings()
    with pytest.warns(UserWarning, match="resolution-limited"):
        SolverSettings(tol=1e-7)
