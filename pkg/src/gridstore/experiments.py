"""Parameter sweeps over families of storage-game scenarios.

Four experiment families:

* ``sweep_reference_point``: total stored energy as a shared reference
  point moves, against the rational-game baseline.
* ``sweep_emergency_price``: how strongly that curve reacts to the
  reference point at different emergency prices.
* ``required_emergency_price``: the minimal emergency price whose
  equilibrium covers the critical load, as loss aversion grows.
* ``asymmetric_equilibrium``: one framed and one rational player.

Each row solves an independent scenario, so rows are evaluated in
parallel (capped by the GRIDSTORE_THREADS environment variable) and
written in sweep order.  The solver is deterministic, so repeated runs
produce byte-identical CSV files.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .cgt import enumerate_bne, expected_utility_cgt
from .errors import CycleDetected, GridStoreError, MissingProspectParams, NoCoveragePrice
from .model import (
    GridParams,
    MicrogridConfig,
    ProspectParams,
    Scenario,
    StrategyProfile,
    validate_scenario,
)
from .pt import expected_pt_utility
from .solver import SolverSettings, iterate_best_response

__all__ = [
    "CSV_COLUMNS",
    "SWEPT_PARAMETERS",
    "SweepSpec",
    "SweepRow",
    "EmergencyPriceRow",
    "RequiredPriceRow",
    "default_scenario",
    "sweep_reference_point",
    "sweep_emergency_price",
    "max_deviation_by_price",
    "required_emergency_price",
    "asymmetric_equilibrium",
    "run_sweep",
    "write_sweep_csv",
    "write_required_price_csv",
]

CSV_COLUMNS = (
    "sweep_param",
    "value",
    "alpha_1",
    "alpha_2",
    "total_stored_kwh",
    "expected_utility_1",
    "expected_utility_2",
    "classification",
    "converged",
    "iterations",
)

SWEPT_PARAMETERS = (
    "reference_point",
    "emergency_price",
    "lambda",
    "reference_point_asymmetric",
)


def default_scenario(
    reference: float = 11.5,
    lam: float = 2.25,
    beta: float = 0.88,
    framed: bool = True,
) -> Scenario:
    """Two identical microgrids on the benchmark grid parameters.

    With ``framed`` both players carry prospect parameters; otherwise
    the scenario is purely rational.
    """
    p = ProspectParams(r=reference, lam=lam, beta_plus=beta, beta_minus=beta)
    return Scenario(
        grid=GridParams(rho=0.1, rho_c=11.6, theta=0.01, l_c=200.0),
        microgrids=(
            MicrogridConfig(q=120.0, q_max=150.0),
            MicrogridConfig(q=120.0, q_max=150.0),
        ),
        prospect=(p, p) if framed else None,
    )


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a base scenario plus the parameter grid to walk."""

    base: Scenario
    swept_parameter: str
    values: tuple[float, ...]
    solver: SolverSettings = field(default_factory=SolverSettings)
    output_path: str | Path | None = None
    # Second axis for the emergency-price sweep: the reference points
    # evaluated at each swept price.
    reference_values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.swept_parameter not in SWEPT_PARAMETERS:
            raise ValueError(
                f"swept_parameter must be one of {SWEPT_PARAMETERS}, "
                f"got {self.swept_parameter!r}"
            )
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        _require_increasing("values", self.values)
        if self.reference_values is not None:
            object.__setattr__(
                self, "reference_values", tuple(float(v) for v in self.reference_values)
            )
            _require_increasing("reference_values", self.reference_values)


def _require_increasing(name: str, values: tuple[float, ...]) -> None:
    if not values:
        raise ValueError(f"{name} must be nonempty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class SweepRow:
    """One solved scenario, flattened to the canonical CSV columns."""

    sweep_param: str
    value: float | None
    alpha_1: float
    alpha_2: float
    total_stored_kwh: float
    expected_utility_1: float
    expected_utility_2: float
    classification: str
    converged: bool
    iterations: int


@dataclass(frozen=True)
class EmergencyPriceRow:
    """Stored total at one (emergency price, reference point) pair.

    ``pct_deviation_from_r_min`` is the signed percent change of the
    stored total relative to the same price's total at the smallest
    reference point in the grid.
    """

    rho_c: float
    reference: float
    alpha_1: float
    alpha_2: float
    total_stored_kwh: float
    expected_utility_1: float
    expected_utility_2: float
    pct_deviation_from_r_min: float
    classification: str
    converged: bool
    iterations: int

    def to_sweep_row(self) -> SweepRow:
        return SweepRow(
            sweep_param=f"emergency_price:rho_c={self.rho_c:g}",
            value=self.reference,
            alpha_1=self.alpha_1,
            alpha_2=self.alpha_2,
            total_stored_kwh=self.total_stored_kwh,
            expected_utility_1=self.expected_utility_1,
            expected_utility_2=self.expected_utility_2,
            classification=self.classification,
            converged=self.converged,
            iterations=self.iterations,
        )


@dataclass(frozen=True)
class RequiredPriceRow:
    """Minimal covering emergency price for one loss-aversion level."""

    reference: float
    lam: float
    rho_c_star: float
    alpha_1: float
    alpha_2: float
    total_stored_kwh: float
    expected_utility_1: float
    expected_utility_2: float
    classification: str
    converged: bool
    iterations: int


# --- solving helpers -------------------------------------------------


def _solve_point(
    scenario: Scenario, settings: SolverSettings
) -> tuple[StrategyProfile, tuple[float, float], str, bool, int]:
    """Solve one scenario, downgrading a best-response cycle to a flagged row."""
    try:
        res = iterate_best_response(scenario, settings=settings)
        u1, u2 = res.expected_utilities
        return res.profile, (u1, u2), res.classification, res.converged, res.iterations
    except CycleDetected as exc:
        profile = StrategyProfile.of(*exc.second)
        utilities = tuple(
            expected_pt_utility(p, profile, scenario)
            if scenario.prospect[p] is not None
            else expected_utility_cgt(p, profile, scenario)
            for p in (0, 1)
        )
        return profile, (utilities[0], utilities[1]), "Cycle", False, exc.iterations


def _total_stored(profile: StrategyProfile, scenario: Scenario) -> float:
    return sum(profile[p] * scenario.surpluses[p] for p in range(scenario.n))


def _max_workers() -> int:
    raw = os.environ.get("GRIDSTORE_THREADS")
    if raw is None or not raw.strip():
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise GridStoreError(
            f"GRIDSTORE_THREADS must be an integer, got {raw!r}"
        ) from exc
    return max(1, n)


def _parallel_map(fn: Callable, items: Sequence) -> list:
    """Map preserving input order; threads only when they can help."""
    items = list(items)
    workers = min(_max_workers(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _with_reference(base: Scenario, r: float) -> Scenario:
    """Every framed player gets reference r; all players must be framed."""
    for p, params in enumerate(base.prospect):
        if params is None:
            raise MissingProspectParams(p)
    prospect = tuple(replace(p, r=float(r)) for p in base.prospect)
    return replace(base, prospect=prospect)


def _expect_kind(spec: SweepSpec, kind: str) -> None:
    if spec.swept_parameter != kind:
        raise ValueError(
            f"spec sweeps {spec.swept_parameter!r}, expected {kind!r}"
        )


# --- experiment families ---------------------------------------------


def sweep_reference_point(spec: SweepSpec) -> list[SweepRow]:
    """Equilibrium per reference point, preceded by the rational baseline.

    The baseline row repeats the first closed-form equilibrium of the
    unframed game; it does not depend on the swept reference.
    """
    _expect_kind(spec, "reference_point")
    base = validate_scenario(spec.base)

    closed = enumerate_bne(base)
    if not closed:
        raise GridStoreError("base scenario has no closed-form equilibrium")
    ref = closed[0]
    rows = [
        SweepRow(
            sweep_param="cgt_baseline",
            value=None,
            alpha_1=ref.profile[0],
            alpha_2=ref.profile[1],
            total_stored_kwh=_total_stored(ref.profile, base),
            expected_utility_1=ref.expected_utilities[0],
            expected_utility_2=ref.expected_utilities[1],
            classification=ref.classification,
            converged=True,
            iterations=0,
        )
    ]

    def solve(r: float) -> SweepRow:
        scenario = _with_reference(base, r)
        profile, (u1, u2), label, converged, iters = _solve_point(scenario, spec.solver)
        return SweepRow(
            sweep_param="reference_point",
            value=r,
            alpha_1=profile[0],
            alpha_2=profile[1],
            total_stored_kwh=_total_stored(profile, scenario),
            expected_utility_1=u1,
            expected_utility_2=u2,
            classification=label,
            converged=converged,
            iterations=iters,
        )

    rows.extend(_parallel_map(solve, spec.values))
    if spec.output_path is not None:
        write_sweep_csv(rows, spec.output_path)
    return rows


def sweep_emergency_price(spec: SweepSpec) -> list[EmergencyPriceRow]:
    """Stored totals on the (emergency price, reference point) grid.

    ``spec.values`` holds the prices, ``spec.reference_values`` the
    reference grid applied to both framed players at each price.
    """
    _expect_kind(spec, "emergency_price")
    if spec.reference_values is None:
        raise ValueError("emergency_price sweep needs reference_values")
    references = spec.reference_values

    # Every swept price must leave a valid scenario (incentive
    # condition included) before any solve starts.
    scenarios = {}
    for rho_c in spec.values:
        with_price = replace(spec.base, grid=replace(spec.base.grid, rho_c=rho_c))
        scenarios[rho_c] = validate_scenario(with_price)

    tasks = [(rho_c, r) for rho_c in spec.values for r in references]

    def solve(task: tuple[float, float]):
        rho_c, r = task
        scenario = _with_reference(scenarios[rho_c], r)
        profile, (u1, u2), label, converged, iters = _solve_point(scenario, spec.solver)
        return (
            rho_c,
            r,
            profile,
            _total_stored(profile, scenario),
            u1,
            u2,
            label,
            converged,
            iters,
        )

    solved = _parallel_map(solve, tasks)

    # Deviation is measured against the same price's total at the
    # first (smallest) reference point.
    base_total = {
        rho_c: total
        for rho_c, r, _, total, *_ in solved
        if r == references[0]
    }
    rows = []
    for rho_c, r, profile, total, u1, u2, label, converged, iters in solved:
        anchor = base_total[rho_c]
        pct = 100.0 * (total - anchor) / anchor if anchor else math.nan
        rows.append(
            EmergencyPriceRow(
                rho_c=rho_c,
                reference=r,
                alpha_1=profile[0],
                alpha_2=profile[1],
                total_stored_kwh=total,
                expected_utility_1=u1,
                expected_utility_2=u2,
                pct_deviation_from_r_min=pct,
                classification=label,
                converged=converged,
                iterations=iters,
            )
        )
    if spec.output_path is not None:
        write_sweep_csv([row.to_sweep_row() for row in rows], spec.output_path)
    return rows


def max_deviation_by_price(rows: Iterable[EmergencyPriceRow]) -> dict[float, float]:
    """Largest absolute reference-point deviation (percent) per price."""
    out: dict[float, float] = {}
    for row in rows:
        dev = abs(row.pct_deviation_from_r_min)
        if not math.isnan(dev):
            out[row.rho_c] = max(out.get(row.rho_c, 0.0), dev)
    return out


def required_emergency_price(
    base: Scenario,
    lambda_values: Sequence[float],
    reference: float | None = None,
    coverage_target: float | None = None,
    settings: SolverSettings | None = None,
    price_hi: float = 30.0,
    resolution: float = 0.01,
) -> list[RequiredPriceRow]:
    """Minimal emergency price whose equilibrium covers the target.

    For each loss-aversion level the price axis is scanned upward in
    coarse steps from just above rho/theta (the smallest price
    respecting the incentive condition); the first covering bracket is
    then bisected down to ``resolution``.  If the stored total is not
    monotone across the scanned prefix the bracket is resolved by a
    fine ascending scan instead, so the reported price is the first
    crossing either way.  Raises NoCoveragePrice when even ``price_hi``
    leaves the target uncovered.
    """
    base = validate_scenario(base)
    settings = settings or SolverSettings()
    lams = tuple(float(v) for v in lambda_values)
    _require_increasing("lambda_values", lams)
    if reference is None:
        framed = [p for p in base.prospect if p is not None]
        if not framed:
            raise MissingProspectParams(0)
        reference = framed[0].r
    target = base.grid.l_c if coverage_target is None else float(coverage_target)
    lo_floor = base.grid.rho / base.grid.theta * (1.0 + 1e-6)
    if price_hi <= lo_floor:
        raise ValueError("price_hi must exceed rho/theta")

    def with_price(lam: float, rho_c: float) -> Scenario:
        prospect = tuple(
            replace(p, r=float(reference), lam=lam) if p is not None else None
            for p in base.prospect
        )
        if all(p is None for p in prospect):
            raise MissingProspectParams(0)
        return replace(
            base,
            grid=replace(base.grid, rho_c=rho_c),
            prospect=prospect,
        )

    def search(lam: float) -> RequiredPriceRow:
        def stored(rho_c: float) -> float:
            scenario = with_price(lam, rho_c)
            profile, *_ = _solve_point(scenario, settings)
            return _total_stored(profile, scenario)

        if stored(price_hi) < target:
            raise NoCoveragePrice(lam, price_hi)

        # Coarse ascending scan; stop at the first covering price.
        coarse = 0.5
        points = [lo_floor]
        while points[-1] + coarse < price_hi:
            points.append(points[-1] + coarse)
        points.append(price_hi)
        totals: list[float] = []
        first_covered = len(points) - 1
        for i, p in enumerate(points):
            totals.append(stored(p))
            if totals[-1] >= target:
                first_covered = i
                break

        def snap_up(p: float) -> float:
            return round(math.ceil(p / resolution - 1e-9) * resolution, 2)

        if first_covered == 0:
            star = snap_up(points[0])
        else:
            lo, hi = points[first_covered - 1], points[first_covered]
            monotone = all(
                b >= a - 1e-9 for a, b in zip(totals, totals[1:])
            )
            if monotone:
                # Narrow by bisection, then pick the first grid price
                # inside the bracket that still covers.
                while hi - lo > resolution:
                    mid = 0.5 * (lo + hi)
                    if stored(mid) >= target:
                        hi = mid
                    else:
                        lo = mid
            # Non-monotone prefix: keep the whole coarse cell and let
            # the ascending walk report the first crossing.
            star = snap_up(hi)
            p = snap_up(lo)
            if p <= lo:
                p = round(p + resolution, 2)
            while p < star:
                if stored(p) >= target:
                    star = p
                    break
                p = round(p + resolution, 2)
        scenario = with_price(lam, star)
        profile, (u1, u2), label, converged, iters = _solve_point(scenario, settings)
        return RequiredPriceRow(
            reference=float(reference),
            lam=lam,
            rho_c_star=star,
            alpha_1=profile[0],
            alpha_2=profile[1],
            total_stored_kwh=_total_stored(profile, scenario),
            expected_utility_1=u1,
            expected_utility_2=u2,
            classification=label,
            converged=converged,
            iterations=iters,
        )

    return _parallel_map(search, lams)


def asymmetric_equilibrium(
    base: Scenario,
    r_values: Sequence[float],
    settings: SolverSettings | None = None,
) -> list[SweepRow]:
    """Mixed game: player 1 frames outcomes at each reference, player 2 stays rational."""
    base = validate_scenario(base)
    settings = settings or SolverSettings()
    if base.prospect[0] is None:
        raise MissingProspectParams(0)
    values = tuple(float(v) for v in r_values)
    _require_increasing("r_values", values)

    def solve(r: float) -> SweepRow:
        scenario = replace(
            base, prospect=(replace(base.prospect[0], r=r), None)
        )
        profile, (u1, u2), label, converged, iters = _solve_point(scenario, settings)
        return SweepRow(
            sweep_param="reference_point_asymmetric",
            value=r,
            alpha_1=profile[0],
            alpha_2=profile[1],
            total_stored_kwh=_total_stored(profile, scenario),
            expected_utility_1=u1,
            expected_utility_2=u2,
            classification=label,
            converged=converged,
            iterations=iters,
        )

    return _parallel_map(solve, values)


def run_sweep(spec: SweepSpec):
    """Dispatch a sweep by its swept parameter and write its CSV.

    Returns the row list of the matching experiment family.  The
    ``lambda`` kind searches the covering price per loss-aversion value
    and writes the extended CSV carrying rho_c_star.
    """
    if spec.swept_parameter == "reference_point":
        return sweep_reference_point(spec)
    if spec.swept_parameter == "emergency_price":
        return sweep_emergency_price(spec)
    if spec.swept_parameter == "reference_point_asymmetric":
        rows = asymmetric_equilibrium(spec.base, spec.values, spec.solver)
        if spec.output_path is not None:
            write_sweep_csv(rows, spec.output_path)
        return rows
    rows = required_emergency_price(
        spec.base, spec.values, settings=spec.solver
    )
    if spec.output_path is not None:
        write_required_price_csv(rows, spec.output_path)
    return rows


# --- CSV serialization ------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def write_sweep_csv(rows: Iterable[SweepRow], path: str | Path) -> Path:
    """Canonical sweep table; column order is part of the contract."""
    path = Path(path)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.sweep_param,
                    _fmt(row.value),
                    _fmt(row.alpha_1),
                    _fmt(row.alpha_2),
                    _fmt(row.total_stored_kwh),
                    _fmt(row.expected_utility_1),
                    _fmt(row.expected_utility_2),
                    row.classification,
                    _fmt(row.converged),
                    _fmt(row.iterations),
                ]
            )
    return path


def write_required_price_csv(
    rows: Iterable[RequiredPriceRow], path: str | Path
) -> Path:
    """Covering-price table: canonical columns plus rho_c_star after value."""
    path = Path(path)
    header = CSV_COLUMNS[:2] + ("rho_c_star",) + CSV_COLUMNS[2:]
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    f"required_emergency_price:R={row.reference:g}",
                    _fmt(row.lam),
                    _fmt(row.rho_c_star),
                    _fmt(row.alpha_1),
                    _fmt(row.alpha_2),
                    _fmt(row.total_stored_kwh),
                    _fmt(row.expected_utility_1),
                    _fmt(row.expected_utility_2),
                    row.classification,
                    _fmt(row.converged),
                    _fmt(row.iterations),
                ]
            )
    return path
