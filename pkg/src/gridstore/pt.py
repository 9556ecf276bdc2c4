"""Framed (prospect-theoretic) valuation of the storage game.

A framed player measures realized utility against a reference point:
gains are compressed by a power ``beta_plus``, losses by ``beta_minus``
and additionally scaled by the loss-aversion multiplier ``lam``.  The
expected framed utility against a uniform opponent type still splits
into an uncontested part (a point mass in utility space) and a contested
integral whose gain/loss decomposition depends on where the opponent
surplus pushes the realized utility through the reference point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegenerateOpponentStrategy, MissingProspectParams, NotTwoPlayer
from .model import ProspectParams, Scenario, StrategyProfile

__all__ = [
    "ProspectParams",
    "PtBranchTerms",
    "pt_value",
    "pt_branch_terms",
    "expected_pt_utility",
]

Branch = Literal["AllLoss", "Mixed", "AllGain"]


def pt_value(u: float, p: ProspectParams) -> float:
    """Framed value of a realized utility: 0 at the reference point."""
    d = u - p.r
    if d > 0.0:
        return d**p.beta_plus
    if d < 0.0:
        return -p.lam * (-d) ** p.beta_minus
    return 0.0


def _pt_value_vec(u: np.ndarray, p: ProspectParams) -> np.ndarray:
    d = u - p.r
    out = np.zeros_like(d)
    gain = d > 0.0
    loss = d < 0.0
    out[gain] = d[gain] ** p.beta_plus
    out[loss] = -p.lam * (-d[loss]) ** p.beta_minus
    return out


@dataclass(frozen=True)
class PtBranchTerms:
    """Geometry of the contested framed integral at one profile.

    ``a`` is the opponent surplus beyond which trimming starts, ``q2r``
    the (unclamped) surplus at which the trimmed utility crosses the
    reference point, and ``b`` the own fraction at which the untrimmed
    utility crosses it.  ``m_g``/``m_l`` are the antiderivative
    coefficients of the gain and loss segments, already carrying the
    uniform belief density.  ``u_i1`` is the untrimmed utility, ``u_a2``
    and ``u_max2`` the trimmed utility at the split point and at the
    largest opponent surplus, and ``u_r2`` the trimmed utility at the
    crossing, meaningful only for the Mixed branch where it equals the
    reference by construction.
    """

    a: float
    b: float
    q2r: float
    m_g: float
    m_l: float
    u_i1: float
    u_max2: float
    u_a2: float
    u_r2: float
    branch: Branch


def _require_framed(player: int, s: Scenario) -> ProspectParams:
    if s.n != 2 or s.grid.n_players != 2:
        raise NotTwoPlayer(f"need exactly 2 players, scenario has {s.n}")
    p = s.prospect[player]
    if p is None:
        raise MissingProspectParams(f"player {player} has no prospect parameters")
    return p


def pt_branch_terms(player: int, profile: StrategyProfile, s: Scenario) -> PtBranchTerms:
    """Classify the contested integral and expose its building blocks."""
    pp = _require_framed(player, s)
    opp = 1 - player
    a1, a2 = profile[player], profile[opp]
    if a2 == 0.0:
        raise DegenerateOpponentStrategy(
            "opponent stores nothing, contested split point is undefined"
        )
    q1 = s.microgrids[player].q
    q2max = s.microgrids[opp].q_max
    g = s.grid
    rho, k, lc = g.rho, g.emergency_value, g.l_c

    u_i1 = rho * q1 * (1.0 - a1) + k * q1 * a1
    a = (lc - a1 * q1) / a2
    # Trimmed utility is linear and decreasing in the opponent surplus;
    # evaluate it at the split point and the support end, and solve for
    # the reference crossing.
    u_a2 = u_i1
    u_max2 = rho * q1 * (1.0 - a1) + 0.5 * k * (a1 * q1 + lc - a2 * q2max)
    q2r = (2.0 / (k * a2)) * (rho * q1 * (1.0 - a1) + 0.5 * k * (a1 * q1 + lc) - pp.r)
    if q1 > 0.0:
        b = (pp.r - rho * q1) / (q1 * (k - rho))
    else:
        # Zero surplus pins the untrimmed utility at 0, so the crossing
        # degenerates to whichever side the reference sits on.
        b = np.inf if pp.r >= 0.0 else -np.inf
    m_g = -2.0 / ((pp.beta_plus + 1.0) * k * a2 * q2max)
    m_l = -2.0 * pp.lam / ((pp.beta_minus + 1.0) * k * a2 * q2max)
    if q2r > q2max:
        branch: Branch = "AllGain"
    elif q2r < a:
        branch = "AllLoss"
    else:
        branch = "Mixed"
    return PtBranchTerms(
        a=a,
        b=b,
        q2r=q2r,
        m_g=m_g,
        m_l=m_l,
        u_i1=u_i1,
        u_max2=u_max2,
        u_a2=u_a2,
        u_r2=pp.r if branch == "Mixed" else float("nan"),
        branch=branch,
    )


def expected_pt_utility_grid(
    own_alpha: np.ndarray | float,
    opp_alpha: float,
    q1: float,
    q2max: float,
    rho: float,
    k: float,
    lc: float,
    pp: ProspectParams,
) -> np.ndarray:
    """Expected framed utility over a vector of own storage fractions."""
    a1 = np.atleast_1d(np.asarray(own_alpha, dtype=float))
    u_lin = rho * q1 * (1.0 - a1) + k * q1 * a1
    out = _pt_value_vec(u_lin, pp)
    if opp_alpha > 0.0:
        contested = a1 * q1 + opp_alpha * q2max > lc
        if np.any(contested):
            ac = a1[contested]
            u1 = u_lin[contested]
            split = (lc - ac * q1) / opp_alpha
            i1 = (split / q2max) * _pt_value_vec(u1, pp)

            u_hi = rho * q1 * (1.0 - ac) + 0.5 * k * (ac * q1 + lc - opp_alpha * q2max)
            q2r = (2.0 / (k * opp_alpha)) * (
                rho * q1 * (1.0 - ac) + 0.5 * k * (ac * q1 + lc) - pp.r
            )
            bp1 = pp.beta_plus + 1.0
            bm1 = pp.beta_minus + 1.0
            m_g = -2.0 / (bp1 * k * opp_alpha * q2max)
            m_l = -2.0 * pp.lam / (bm1 * k * opp_alpha * q2max)
            # Clamp bracket bases at zero: each branch keeps them
            # nonnegative exactly, the clamp only absorbs float dust.
            gain_hi = np.maximum(u_hi - pp.r, 0.0)
            gain_lo = np.maximum(u1 - pp.r, 0.0)
            loss_hi = np.maximum(pp.r - u_hi, 0.0)
            loss_lo = np.maximum(pp.r - u1, 0.0)

            i2 = np.empty_like(ac)
            all_gain = q2r > q2max
            all_loss = q2r < split
            mixed = ~(all_gain | all_loss)
            i2[all_gain] = m_g * (gain_hi[all_gain] ** bp1 - gain_lo[all_gain] ** bp1)
            i2[all_loss] = m_l * (loss_hi[all_loss] ** bm1 - loss_lo[all_loss] ** bm1)
            # At the crossing the framed value is exactly zero, so the
            # mixed branch keeps only the outer endpoint of each segment.
            i2[mixed] = -m_g * gain_lo[mixed] ** bp1 + m_l * loss_hi[mixed] ** bm1
            out[contested] = i1 + i2
    return out


def expected_pt_utility_scalar(
    a1: float,
    a2: float,
    q1: float,
    q2max: float,
    rho: float,
    k: float,
    lc: float,
    pp: ProspectParams,
) -> float:
    """Plain-float twin of the grid evaluator, for tight refinement loops."""
    u1 = rho * q1 * (1.0 - a1) + k * q1 * a1
    if a2 <= 0.0 or a1 * q1 + a2 * q2max <= lc:
        return pt_value(u1, pp)
    split = (lc - a1 * q1) / a2
    i1 = (split / q2max) * pt_value(u1, pp)
    u_hi = rho * q1 * (1.0 - a1) + 0.5 * k * (a1 * q1 + lc - a2 * q2max)
    q2r = (2.0 / (k * a2)) * (rho * q1 * (1.0 - a1) + 0.5 * k * (a1 * q1 + lc) - pp.r)
    bp1 = pp.beta_plus + 1.0
    bm1 = pp.beta_minus + 1.0
    m_g = -2.0 / (bp1 * k * a2 * q2max)
    m_l = -2.0 * pp.lam / (bm1 * k * a2 * q2max)
    gain_hi = max(u_hi - pp.r, 0.0)
    gain_lo = max(u1 - pp.r, 0.0)
    loss_hi = max(pp.r - u_hi, 0.0)
    loss_lo = max(pp.r - u1, 0.0)
    if q2r > q2max:
        i2 = m_g * (gain_hi**bp1 - gain_lo**bp1)
    elif q2r < split:
        i2 = m_l * (loss_hi**bm1 - loss_lo**bm1)
    else:
        i2 = -m_g * gain_lo**bp1 + m_l * loss_hi**bm1
    return i1 + i2


def expected_pt_utility(player: int, profile: StrategyProfile, s: Scenario) -> float:
    """Closed-form expected framed utility of ``player``.

    Uncontested profiles collapse to the framed value of a deterministic
    utility; contested ones add the trimmed-region integral, split into
    gain and loss segments at the reference crossing.
    """
    pp = _require_framed(player, s)
    opp = 1 - player
    q1 = s.microgrids[player].q
    q2max = s.microgrids[opp].q_max
    g = s.grid
    return float(
        expected_pt_utility_grid(
            profile[player],
            profile[opp],
            q1,
            q2max,
            g.rho,
            g.emergency_value,
            g.l_c,
            pp,
        )[0]
    )
