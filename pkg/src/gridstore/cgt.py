"""Closed-form expected utilities and equilibria for two rational players.

With uniform beliefs the expected utility of a player has two regimes:
an uncontested one where the pair can never exceed the critical load,
and a contested one where the opponent's surplus decides whether the
purchase gets trimmed.  Both admit closed forms, and so do the best
response and the four Bayesian Nash equilibrium candidates built from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import NotTwoPlayer
from .model import Scenario, StrategyProfile

__all__ = [
    "BestResponseCase",
    "EquilibriumResult",
    "expected_utility_cgt",
    "best_response_cgt",
    "enumerate_bne",
    "verify_bne",
]

CaseId = Literal["BelowLoadStoreAll", "InteriorOptimum", "PriceDominatedStoreAll"]

# Snap tolerance for best responses that float error pushes out of [0, 1].
_SNAP = 1e-12


@dataclass(frozen=True)
class BestResponseCase:
    """Which branch of the best response fired, with its diagnostics.

    ``threshold_t`` is the opponent storage fraction below which the pair
    can never exceed the critical load.  ``slack`` is the margin of the
    interior-optimum condition: positive means the interior optimum is
    feasible and beats storing everything.
    """

    case_id: CaseId
    threshold_t: float
    slack: float


@dataclass(frozen=True)
class EquilibriumResult:
    """One equilibrium: the profile plus how it was found and checked."""

    profile: StrategyProfile
    classification: str
    conditions: tuple[str, ...]
    expected_utilities: tuple[float, ...]
    converged: bool
    iterations: int
    residual: float = 0.0


def _require_two_player(s: Scenario) -> None:
    if s.n != 2 or s.grid.n_players != 2:
        raise NotTwoPlayer(f"need exactly 2 players, scenario has {s.n}")


def _duel(player: int, s: Scenario) -> tuple[float, float, float, float, float]:
    """Constants of the two-player game seen from ``player``'s side."""
    opp = 1 - player
    g = s.grid
    return (
        s.microgrids[player].q,
        s.microgrids[opp].q_max,
        g.rho,
        g.emergency_value,
        g.l_c,
    )


def expected_utility_grid_cgt(
    own_alpha: np.ndarray | float,
    opp_alpha: float,
    q1: float,
    q2max: float,
    rho: float,
    k: float,
    lc: float,
) -> np.ndarray:
    """Expected utility over a vector of own storage fractions.

    ``k`` is the expected emergency value theta*rho_c.  Vectorized in the
    own fraction only; the opponent's fraction is a fixed scalar.
    """
    a1 = np.atleast_1d(np.asarray(own_alpha, dtype=float))
    out = rho * q1 * (1.0 - a1) + k * q1 * a1
    if opp_alpha > 0.0:
        # Contested only when the largest opponent surplus can push the
        # pair past the critical load; ties stay uncontested.
        contested = a1 * q1 + opp_alpha * q2max > lc
        if np.any(contested):
            ac = a1[contested]
            split = (lc - ac * q1) / opp_alpha
            trimmed = (
                k * ac * q1 * split
                + 0.5
                * k
                * (
                    (ac * q1 + lc) * (q2max - split)
                    - 0.5 * opp_alpha * (q2max**2 - split**2)
                )
            ) / q2max
            out[contested] = rho * q1 * (1.0 - ac) + trimmed
    return out


def expected_utility_cgt(player: int, profile: StrategyProfile, s: Scenario) -> float:
    """Expected utility of a rational player against a uniform opponent type."""
    _require_two_player(s)
    q1, q2max, rho, k, lc = _duel(player, s)
    a = profile
    return float(
        expected_utility_grid_cgt(a[player], a[1 - player], q1, q2max, rho, k, lc)[0]
    )


def _snap_unit(x: float) -> float:
    if -_SNAP <= x < 0.0:
        return 0.0
    if 1.0 < x <= 1.0 + _SNAP:
        return 1.0
    return x


def best_response_cgt(
    player: int, opponent_alpha: float, s: Scenario
) -> tuple[float, BestResponseCase]:
    """Closed-form best response of ``player`` to a fixed opponent fraction.

    Three branches:
      * BelowLoadStoreAll: the opponent stores so little that trimming is
        impossible, so storing everything is optimal.
      * InteriorOptimum: trimming risk justifies holding back; the unique
        stationary point of the contested expected utility is optimal.
      * PriceDominatedStoreAll: the emergency premium is large enough that
        storing everything beats the interior candidate.
    """
    _require_two_player(s)
    q1, q2max, rho, k, lc = _duel(player, s)
    t = (lc - q1) / q2max
    gap = 2.0 * rho / k - 1.0
    slack = gap * opponent_alpha - t
    if opponent_alpha <= t:
        return 1.0, BestResponseCase("BelowLoadStoreAll", t, slack)
    if slack > 0.0:
        interior = (lc * k + (k - 2.0 * rho) * opponent_alpha * q2max) / (q1 * k)
        return _snap_unit(interior), BestResponseCase("InteriorOptimum", t, slack)
    return 1.0, BestResponseCase("PriceDominatedStoreAll", t, slack)


def verify_bne(profile: StrategyProfile, s: Scenario, tol: float = 1e-9) -> bool:
    """Check mutual best responses within ``tol``."""
    _require_two_player(s)
    for p in (0, 1):
        br, _ = best_response_cgt(p, profile[1 - p], s)
        if abs(profile[p] - br) > tol:
            return False
    return True


def _interior_coefficients(player: int, s: Scenario) -> tuple[float, float]:
    """Interior best response written as own = intercept + slope * opponent."""
    q1, q2max, rho, k, lc = _duel(player, s)
    return lc / q1, (k - 2.0 * rho) * q2max / (q1 * k)


def _candidate_profiles(s: Scenario) -> list[tuple[str, tuple[float, float]]]:
    """The four closed-form equilibrium candidates, possibly out of range."""
    d1, c1 = _interior_coefficients(0, s)
    d2, c2 = _interior_coefficients(1, s)
    out = [
        ("BNE1", (1.0, 1.0)),
        ("BNE2", (1.0, _snap_unit(d2 + c2))),
        ("BNE3", (_snap_unit(d1 + c1), 1.0)),
    ]
    denom = 1.0 - c1 * c2
    if denom != 0.0:
        a1 = (d1 + c1 * d2) / denom
        a2 = (d2 + c2 * d1) / denom
        out.append(("BNE4", (_snap_unit(a1), _snap_unit(a2))))
    return out


def _conditions(classification: str, profile: tuple[float, float], s: Scenario) -> tuple[str, ...]:
    """Labels of the sufficient existence conditions the candidate satisfies."""
    g = s.grid
    k = g.emergency_value
    lc = g.l_c
    q = s.surpluses
    qmax = (s.microgrids[0].q_max, s.microgrids[1].q_max)
    gap = 2.0 * g.rho / k - 1.0
    t1 = (lc - q[0]) / qmax[1]
    t2 = (lc - q[1]) / qmax[0]
    labels: list[str] = []
    if classification == "BNE1":
        if t1 >= 1.0 and t2 >= 1.0:
            labels.append("1a")
        if t1 >= 1.0 and gap <= t2 < 1.0:
            labels.append("1b")
        if gap <= t1 < 1.0 and t2 >= 1.0:
            labels.append("1c")
        if gap <= t1 < 1.0 and gap <= t2 < 1.0:
            labels.append("1d")
    elif classification == "BNE2":
        a2 = profile[1]
        if lc >= a2 * qmax[1] + q[0] and gap > t2:
            labels.append("2a")
        if gap * a2 <= t1 < a2 and gap > t2:
            labels.append("2b")
    elif classification == "BNE3":
        a1 = profile[0]
        if lc >= a1 * qmax[0] + q[1] and gap > t1:
            labels.append("3a")
        if gap * a1 <= t2 < a1 and gap > t1:
            labels.append("3b")
    elif classification == "BNE4":
        if gap * profile[1] > t1 and gap * profile[0] > t2:
            labels.append("4a")
    return tuple(labels)


def enumerate_bne(s: Scenario, tol: float = 1e-9) -> list[EquilibriumResult]:
    """Every closed-form candidate that verifies as a mutual best response.

    Candidates whose fractions leave [0, 1] are discarded; the rest are
    verified directly against the best response rather than trusting the
    condition algebra.  Condition labels are reported for the survivors.
    """
    _require_two_player(s)
    results: list[EquilibriumResult] = []
    seen: list[tuple[float, float]] = []
    for classification, cand in _candidate_profiles(s):
        if not all(0.0 <= a <= 1.0 for a in cand):
            continue
        profile = StrategyProfile.of(*cand)
        if not verify_bne(profile, s, tol=tol):
            continue
        if any(abs(cand[0] - p0) <= _SNAP and abs(cand[1] - p1) <= _SNAP for p0, p1 in seen):
            continue
        seen.append(cand)
        gaps = []
        for p in (0, 1):
            br, _ = best_response_cgt(p, profile[1 - p], s)
            gaps.append(abs(profile[p] - br))
        results.append(
            EquilibriumResult(
                profile=profile,
                classification=classification,
                conditions=_conditions(classification, cand, s),
                expected_utilities=(
                    expected_utility_cgt(0, profile, s),
                    expected_utility_cgt(1, profile, s),
                ),
                converged=True,
                iterations=0,
                residual=max(gaps),
            )
        )
    return results
