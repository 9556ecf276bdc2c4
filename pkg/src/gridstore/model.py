"""Domain types, validation, and the ex-post payoff rules of the storage game.

Each microgrid operator holds a private energy surplus and commits a
fraction of it to storage.  Stored energy is bought back at the emergency
price if an emergency occurs (probability ``theta``); unstored energy is
sold immediately at the market price.  When total stored energy exceeds
the critical load, the utility trims every purchase by an equal share of
the excess.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidScenario

__all__ = [
    "GridParams",
    "MicrogridConfig",
    "Belief",
    "ProspectParams",
    "StrategyProfile",
    "Scenario",
    "Check",
    "scenario_checks",
    "violations",
    "validate_scenario",
    "scenario_from_dict",
    "load_scenario",
    "purchased_energy",
    "realized_utility",
]


# ---------------------------------------------------------------------------
# configuration dataclasses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridParams:
    """Market environment shared by every player.

    Attributes:
        rho: immediate sale price in $/kWh.
        rho_c: emergency buyback price in $/kWh.
        theta: probability that an emergency occurs.
        l_c: critical load in kWh that the utility covers during an emergency.
        n_players: number of competing operators.
    """

    rho: float
    rho_c: float
    theta: float
    l_c: float
    n_players: int = 2

    @property
    def emergency_value(self) -> float:
        """Expected revenue per stored kWh when purchases are untrimmed."""
        return self.theta * self.rho_c


@dataclass(frozen=True)
class MicrogridConfig:
    """One operator: realized surplus ``q`` and surplus capacity ``q_max``."""

    q: float
    q_max: float


@dataclass(frozen=True)
class Belief:
    """Uniform belief over an opponent's surplus on ``[0, upper]``."""

    upper: float

    def density(self, x: float) -> float:
        return 1.0 / self.upper if 0.0 <= x <= self.upper else 0.0


@dataclass(frozen=True)
class ProspectParams:
    """Framing parameters of one player.

    ``lam`` is the loss-aversion multiplier (written ``lambda`` in config
    files), ``beta_plus``/``beta_minus`` are the diminishing-sensitivity
    exponents for gains and losses, and ``r`` is the reference utility in $.
    """

    r: float
    lam: float
    beta_plus: float
    beta_minus: float


@dataclass(frozen=True)
class StrategyProfile:
    """Storage fractions, one per player, each in [0, 1]."""

    alpha: tuple[float, ...]

    @classmethod
    def of(cls, *alphas: float) -> "StrategyProfile":
        return cls(tuple(float(a) for a in alphas))

    def __getitem__(self, i: int) -> float:
        return self.alpha[i]

    def __len__(self) -> int:
        return len(self.alpha)

    def __iter__(self):
        return iter(self.alpha)


@dataclass(frozen=True)
class Scenario:
    """Full game description: environment, players, optional framing."""

    grid: GridParams
    microgrids: tuple[MicrogridConfig, ...]
    prospect: tuple[ProspectParams | None, ...] | None = ()

    def __post_init__(self):
        object.__setattr__(self, "microgrids", tuple(self.microgrids))
        prospect = tuple(self.prospect) if self.prospect is not None else ()
        if not prospect:
            prospect = (None,) * len(self.microgrids)
        object.__setattr__(self, "prospect", prospect)

    @property
    def n(self) -> int:
        return len(self.microgrids)

    @property
    def surpluses(self) -> tuple[float, ...]:
        return tuple(m.q for m in self.microgrids)

    def belief_about(self, m: int) -> Belief:
        """Common-knowledge belief over player ``m``'s surplus."""
        return Belief(upper=self.microgrids[m].q_max)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    """One validation check: a stable code, outcome, and human detail."""

    code: str
    ok: bool
    detail: str


def scenario_checks(s: Scenario) -> list[Check]:
    """Evaluate every construction invariant, passing or not."""
    g = s.grid
    out = [
        Check("BadPrice", g.rho > 0, f"rho = {g.rho:g} must be > 0"),
        Check("BadPrice", g.rho_c > 0, f"rho_c = {g.rho_c:g} must be > 0"),
        Check("BadCriticalLoad", g.l_c > 0, f"l_c = {g.l_c:g} must be > 0"),
        Check(
            "BadProbability",
            0.0 <= g.theta <= 1.0,
            f"theta = {g.theta:g} must lie in [0, 1]",
        ),
        Check(
            "IncentiveViolation",
            g.emergency_value > g.rho,
            f"theta*rho_c = {g.emergency_value:g} must exceed rho = {g.rho:g}",
        ),
        Check(
            "BadPlayerCount",
            g.n_players >= 2,
            f"n_players = {g.n_players} must be >= 2",
        ),
        Check(
            "BadPlayerCount",
            len(s.microgrids) == g.n_players,
            f"{len(s.microgrids)} microgrids configured for "
            f"n_players = {g.n_players}",
        ),
        Check(
            "BadPlayerCount",
            len(s.prospect) == len(s.microgrids),
            f"{len(s.prospect)} prospect entries for "
            f"{len(s.microgrids)} microgrids",
        ),
    ]
    for i, m in enumerate(s.microgrids):
        out.append(
            Check("BadCapacity", m.q_max > 0, f"microgrids[{i}].q_max = {m.q_max:g} must be > 0")
        )
        out.append(
            Check(
                "SurplusOutOfRange",
                0.0 <= m.q <= m.q_max,
                f"microgrids[{i}].q = {m.q:g} must lie in [0, q_max = {m.q_max:g}]",
            )
        )
        out.append(
            Check(
                "CapacityExceedsCriticalLoad",
                m.q_max < g.l_c,
                f"microgrids[{i}].q_max = {m.q_max:g} must be < l_c = {g.l_c:g}",
            )
        )
    for i, p in enumerate(s.prospect):
        if p is None:
            continue
        out.append(
            Check(
                "BadProspectParams",
                p.lam >= 1.0,
                f"prospect[{i}].lambda = {p.lam:g} must be >= 1",
            )
        )
        out.append(
            Check(
                "BadProspectParams",
                0.0 < p.beta_plus <= 1.0,
                f"prospect[{i}].beta_plus = {p.beta_plus:g} must lie in (0, 1]",
            )
        )
        out.append(
            Check(
                "BadProspectParams",
                0.0 < p.beta_minus <= 1.0,
                f"prospect[{i}].beta_minus = {p.beta_minus:g} must lie in (0, 1]",
            )
        )
        out.append(
            Check(
                "BadProspectParams",
                math.isfinite(p.r),
                f"prospect[{i}].r = {p.r:g} must be finite",
            )
        )
    return out


def violations(s: Scenario) -> list[Check]:
    """Only the failed checks."""
    return [c for c in scenario_checks(s) if not c.ok]


def validate_scenario(s: Scenario) -> Scenario:
    """Return ``s`` unchanged, or raise ``InvalidScenario`` listing every failure."""
    bad = violations(s)
    if bad:
        raise InvalidScenario(bad)
    return s


# ---------------------------------------------------------------------------
# configuration files
# ---------------------------------------------------------------------------


def _prospect_from_dict(d: dict | None) -> ProspectParams | None:
    if d is None:
        return None
    return ProspectParams(
        r=float(d["r"]),
        lam=float(d["lambda"]),
        beta_plus=float(d["beta_plus"]),
        beta_minus=float(d["beta_minus"]),
    )


def scenario_from_dict(data: dict) -> Scenario:
    """Build a scenario from parsed JSON.

    Expected shape::

        {"grid": {"rho": .., "rho_c": .., "theta": .., "l_c": ..},
         "microgrids": [{"q": .., "q_max": ..}, ...],
         "prospect": [{...} | null, ...]}        # optional key

    ``n_players`` is the length of the microgrid list.
    """
    g = data["grid"]
    microgrids = tuple(
        MicrogridConfig(q=float(m["q"]), q_max=float(m["q_max"]))
        for m in data["microgrids"]
    )
    grid = GridParams(
        rho=float(g["rho"]),
        rho_c=float(g["rho_c"]),
        theta=float(g["theta"]),
        l_c=float(g["l_c"]),
        n_players=len(microgrids),
    )
    prospect = tuple(_prospect_from_dict(p) for p in data.get("prospect", []))
    return Scenario(grid=grid, microgrids=microgrids, prospect=prospect)


def load_scenario(path: str | Path) -> Scenario:
    with open(path) as f:
        return scenario_from_dict(json.load(f))


# ---------------------------------------------------------------------------
# ex-post payoffs
# ---------------------------------------------------------------------------


def _alphas(profile) -> tuple[float, ...]:
    if isinstance(profile, StrategyProfile):
        return profile.alpha
    return tuple(float(a) for a in profile)


def purchased_energy(
    profile: StrategyProfile, surpluses: Sequence[float], grid: GridParams
) -> np.ndarray:
    """Energy the utility buys back from each player in an emergency.

    If total stored energy fits under the critical load everyone sells
    all of their stored energy; otherwise each purchase is reduced by an
    equal 1/N share of the excess and floored at zero.
    """
    alpha = np.asarray(_alphas(profile), dtype=float)
    q = np.asarray(surpluses, dtype=float)
    if alpha.shape != q.shape:
        raise ValueError(
            f"profile has {alpha.size} entries but {q.size} surpluses given"
        )
    stored = alpha * q
    total = stored.sum()
    if total <= grid.l_c:
        return stored
    return np.maximum(stored - (total - grid.l_c) / grid.n_players, 0.0)


def realized_utility(
    player: int,
    profile: StrategyProfile,
    surpluses: Sequence[float],
    grid: GridParams,
) -> float:
    """Ex-post revenue of ``player``: immediate sales plus emergency buyback."""
    alpha = _alphas(profile)
    q = float(surpluses[player])
    sold = grid.rho * q * (1.0 - alpha[player])
    bought = float(purchased_energy(profile, surpluses, grid)[player])
    return sold + grid.theta * grid.rho_c * bought
