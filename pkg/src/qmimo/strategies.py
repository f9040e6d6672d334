"""Transmission strategies for the 2x2 link under the four CSI regimes.

Each regime offers three strategies: single-channel selection, cloning, and
cloning followed by purification. Streams are numbered 1 and 2 here, matching
the usual channel labels; channel 1 is the better one (lambda1 < lambda2).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .cloner import SYMMETRIC_A, params_from_a
from .haar import QROperators, analytic_qr_2x2, noise_processed
from .sdp.purification import (
    DEFAULT_P_GRID,
    F_MM,
    PurificationSolution,
    effective_fidelity,
    evaluate_purifier,
    tradeoff_curve,
)

CASE_IDS = ("1.1", "1.2", "1.3", "2.1", "2.2", "2.3", "3.1", "3.2", "3.3", "4.1", "4.2", "4.3")
CASES = {c: tuple(k for k in CASE_IDS if k.startswith(f"{c}.")) for c in (1, 2, 3, 4)}
OPTIMIZED_CASES = ("3.2", "3.3", "4.2", "4.3")
PURIFICATION_CASES = ("1.3", "2.3", "3.3", "4.3")

A_GRID = np.round(np.arange(1, 101) * 0.01, 10)
A_XTOL = 1e-4
ARGMAX_TOL = 1e-12
# strategies within solver accuracy of each other count as tied
TIE_TOL = 1e-8


@dataclass(frozen=True)
class ChannelParams2x2:
    eta: float
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 0.5:
            raise ValueError(f"eta = {self.eta} outside [0, 0.5]")
        for name in ("lambda1", "lambda2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")
        if self.lambda1 > self.lambda2:
            raise ValueError(f"need lambda1 <= lambda2, got {self.lambda1} > {self.lambda2}")

    @property
    def lambdas(self) -> tuple[float, float]:
        return self.lambda1, self.lambda2

    def qr(self, a: float) -> QROperators:
        return analytic_qr_2x2(params_from_a(a), self.eta, self.lambda1, self.lambda2)


@dataclass(frozen=True)
class StrategyResult:
    case_id: str
    F: float
    details: dict = field(default_factory=dict)
    status: str = "optimal"


def _check_stream(s: int) -> int:
    if s not in (1, 2):
        raise ValueError(f"stream {s} not in (1, 2)")
    return s


def direct_fidelity(params: ChannelParams2x2, send: int = 1, receive: int = 1) -> float:
    """Average fidelity of an uncloned state sent on one stream and read on another.

    The receiver sees the state with probability 1-eta (same stream) or eta
    (crossed stream) and the maximally mixed filler otherwise, then the
    output stream's depolarizer acts.
    """
    _check_stream(send)
    _check_stream(receive)
    hit = 1 - params.eta if send == receive else params.eta
    lam = params.lambdas[receive - 1]
    return 0.5 * (1 + hit * (1 - lam))


def clone_fidelity(params: ChannelParams2x2, a: float, receive: int) -> float:
    """Fidelity of the clone found on output stream ``receive``."""
    npc = noise_processed(params_from_a(a), params.eta, params.lambda1, params.lambda2)
    g = npc.gamma1p if _check_stream(receive) == 1 else npc.gamma2p
    return 0.5 * (1 + g)


# --- purification operating points ------------------------------------------------


@dataclass(frozen=True)
class OperatingPoint:
    F_P: float
    p: float
    status: str
    gap: float

    @property
    def effective(self) -> float:
        return effective_fidelity(min(max(self.F_P, 0.0), 1.0), min(max(self.p, 0.0), 1.0))


def matched_point(qr: QROperators, p_grid=DEFAULT_P_GRID) -> OperatingPoint:
    curve = tradeoff_curve(qr, p_grid)
    k = curve.knee_index
    return OperatingPoint(float(curve.F[k]), float(curve.p[k]), curve.statuses[k], float(curve.gaps[k]))


@dataclass(frozen=True, eq=False)
class DesignPurifier:
    """Decoder designed on the noiseless cloner output, used blind to the channel."""

    a: float
    point: OperatingPoint
    solution: PurificationSolution


@lru_cache(maxsize=512)
def _design_cached(a: float, p_grid: tuple) -> DesignPurifier:
    curve = tradeoff_curve(analytic_qr_2x2(params_from_a(a), 0.0, 0.0, 0.0), p_grid)
    k = curve.knee_index
    sol = curve.operating_point()
    point = OperatingPoint(float(curve.F[k]), float(curve.p[k]), sol.status, sol.duality_gap)
    return DesignPurifier(a, point, sol)


def design_purifier(a: float, p_grid=DEFAULT_P_GRID) -> DesignPurifier:
    return _design_cached(float(a), tuple(float(p) for p in p_grid))


def mismatched_point(params: ChannelParams2x2, a: float, p_grid=DEFAULT_P_GRID) -> tuple[OperatingPoint, DesignPurifier]:
    design = design_purifier(a, p_grid)
    F_real, p_real = evaluate_purifier(design.solution.J, params.qr(a))
    return OperatingPoint(F_real, p_real, design.point.status, design.point.gap), design


# --- asymmetry line search -------------------------------------------------------


def line_search(objective: Callable[[float], float], grid: Sequence[float] = A_GRID, xtol: float = A_XTOL) -> float:
    """Maximize over a in (0, 1]: coarse grid, then a bounded refinement around the best node.

    Returns the better of the grid winner and the refined point, so the result
    never scores below the grid maximum.
    """
    grid = np.asarray(grid, dtype=float)
    vals = np.array([objective(a) for a in grid])
    i = int(np.flatnonzero(vals >= vals.max() - ARGMAX_TOL)[0])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    best_a, best_v = float(grid[i]), float(vals[i])
    if hi > lo:
        res = minimize_scalar(lambda a: -objective(a), bounds=(lo, hi), method="bounded", options={"xatol": xtol})
        if -res.fun > best_v + ARGMAX_TOL:
            best_a, best_v = float(res.x), float(-res.fun)
    return best_a


def asymmetry_objective(case_id: str, params: ChannelParams2x2, p_grid=DEFAULT_P_GRID) -> Callable[[float], float]:
    if case_id == "3.2":
        return lambda a: 0.5 * (clone_fidelity(params, a, 1) + clone_fidelity(params, a, 2))
    if case_id == "4.2":
        return lambda a: clone_fidelity(params, a, 1)
    if case_id == "3.3":
        return lambda a: mismatched_point(params, a, p_grid)[0].effective
    if case_id == "4.3":
        return lambda a: matched_point(params.qr(a), p_grid).effective
    raise ValueError(f"case {case_id!r} has no asymmetry parameter; choose from {OPTIMIZED_CASES}")


def optimize_asymmetry(params: ChannelParams2x2, case_id: str = "4.3", p_grid=DEFAULT_P_GRID) -> float:
    """a* maximizing the given strategy's own figure of merit."""
    return line_search(asymmetry_objective(case_id, params, p_grid))


# --- strategy fidelities ----------------------------------------------------------


def _purified(case_id: str, point: OperatingPoint, a: float, **extra) -> StrategyResult:
    details = {"a_used": a, "p_used": point.p, "F_P": point.F_P, "p": point.p, "gap": point.gap, **extra}
    return StrategyResult(case_id, point.effective, details, point.status)


def case_fidelity(case_id: str, params: ChannelParams2x2, p_grid=DEFAULT_P_GRID, a_star: float | None = None) -> StrategyResult:
    """Fidelity of one strategy; ``a_star`` skips the line search when already known."""
    F1 = direct_fidelity(params, 1, 1)
    F2 = direct_fidelity(params, 2, 2)
    sym = SYMMETRIC_A
    base = {"F1": F1, "F2": F2}
    if case_id == "1.1":
        return StrategyResult(case_id, 0.5 * F_MM + 0.25 * (F1 + F2), base)
    if case_id == "2.1":
        return StrategyResult(case_id, 0.5 * (F1 + F2), base)
    if case_id == "3.1":
        return StrategyResult(case_id, 0.5 * (F1 + F_MM), base)
    if case_id == "4.1":
        return StrategyResult(case_id, F1, base)
    if case_id in ("1.2", "2.2", "3.2", "4.2"):
        a = sym if case_id in ("1.2", "2.2") else (a_star if a_star is not None else optimize_asymmetry(params, case_id, p_grid))
        fc1, fc2 = clone_fidelity(params, a, 1), clone_fidelity(params, a, 2)
        F = {"1.2": 0.5 * (fc1 + fc2), "2.2": fc1, "3.2": 0.5 * (fc1 + fc2), "4.2": fc1}[case_id]
        return StrategyResult(case_id, F, {"a_used": a, "F_c1": fc1, "F_c2": fc2})
    if case_id in ("1.3", "3.3"):
        a = sym if case_id == "1.3" else (a_star if a_star is not None else optimize_asymmetry(params, case_id, p_grid))
        point, design = mismatched_point(params, a, p_grid)
        return _purified(
            case_id,
            point,
            a,
            p_used=design.point.p,
            F_P_design=design.point.F_P,
            F_design=design.point.effective,
        )
    if case_id in ("2.3", "4.3"):
        a = sym if case_id == "2.3" else (a_star if a_star is not None else optimize_asymmetry(params, case_id, p_grid))
        return _purified(case_id, matched_point(params.qr(a), p_grid), a)
    raise ValueError(f"unknown case {case_id!r}; expected one of {CASE_IDS}")


def strategy_fidelities(csi_case: int, params: ChannelParams2x2, p_grid=DEFAULT_P_GRID) -> list[StrategyResult]:
    if csi_case not in CASES:
        raise ValueError(f"CSI case {csi_case} not in 1..4")
    return [case_fidelity(c, params, p_grid) for c in CASES[csi_case]]


def argmax_strategy(values: Sequence[float], tol: float = TIE_TOL) -> int:
    """Index of the best value; near-ties go to the lower index."""
    v = np.asarray(values, dtype=float)
    return int(np.flatnonzero(v >= v.max() - tol)[0])


# --- scans -------------------------------------------------------------------------


def lambda_cells(n: int) -> list[tuple[float, float]]:
    """Midpoints of an n x n grid over (0, 1)^2 restricted to lambda1 < lambda2."""
    mids = (np.arange(n) + 0.5) / n
    return [(float(l1), float(l2)) for l1 in mids for l2 in mids if l1 < l2]


@dataclass(frozen=True)
class RegionCell:
    lambda1: float
    lambda2: float
    results: tuple

    @property
    def fidelities(self) -> tuple[float, ...]:
        return tuple(r.F for r in self.results)

    @property
    def argmax(self) -> int:
        return argmax_strategy(self.fidelities)

    @property
    def status(self) -> str:
        bad = [r.status for r in self.results if r.status != "optimal"]
        return bad[0] if bad else "optimal"


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def best_strategy_region(
    eta: float,
    lambda_grid: Sequence[tuple[float, float]] | int,
    csi_case: int,
    p_grid=DEFAULT_P_GRID,
    threads: int = 1,
) -> list[RegionCell]:
    """Per-cell fidelities of the case's three strategies, in grid order."""
    cells = lambda_cells(lambda_grid) if isinstance(lambda_grid, int) else list(lambda_grid)

    def run(cell):
        l1, l2 = cell
        params = ChannelParams2x2(eta, l1, l2)
        return RegionCell(l1, l2, tuple(strategy_fidelities(csi_case, params, p_grid)))

    return _map(run, cells, threads)


@dataclass(frozen=True)
class GainPoint:
    """Ensemble-averaged gains over direct transmission on stream 1.

    ``cloning_gain`` is <F_c1 - F1> for the case's cloning strategy and
    ``purification_gain`` is <F_P - F1> with F_P the post-selected fidelity of
    its purification strategy. The ``*_effective`` fields use the strategy
    fidelities themselves (failures replaced by the maximally mixed state).
    """

    eta: float
    csi_case: int
    cloning_gain: float
    purification_gain: float
    cloning_gain_effective: float
    purification_gain_effective: float
    max_relative_purification_gain: float
    max_relative_effective_gain: float
    n_cells: int
    failures: int


def fidelity_gain_scan(
    eta_grid: Sequence[float],
    lambda_ensemble: Sequence[tuple[float, float]] | int,
    cases: Sequence[int] = (1, 2, 3, 4),
    p_grid=DEFAULT_P_GRID,
    threads: int = 1,
) -> list[GainPoint]:
    """Gains per case and eta; relative gains are (F - F1) / F1 per cell."""
    cells = lambda_cells(lambda_ensemble) if isinstance(lambda_ensemble, int) else list(lambda_ensemble)
    out = []
    for eta in eta_grid:
        for case in cases:
            region = best_strategy_region(float(eta), cells, case, p_grid, threads)
            F1 = np.array([direct_fidelity(ChannelParams2x2(eta, c.lambda1, c.lambda2)) for c in region])
            fc1 = np.array([c.results[1].details["F_c1"] for c in region])
            fp = np.array([c.results[2].details["F_P"] for c in region])
            clo = np.array([c.results[1].F for c in region])
            pur = np.array([c.results[2].F for c in region])
            out.append(
                GainPoint(
                    eta=float(eta),
                    csi_case=case,
                    cloning_gain=float(np.mean(fc1 - F1)),
                    purification_gain=float(np.mean(fp - F1)),
                    cloning_gain_effective=float(np.mean(clo - F1)),
                    purification_gain_effective=float(np.mean(pur - F1)),
                    max_relative_purification_gain=float(np.max((fp - F1) / F1)),
                    max_relative_effective_gain=float(np.max((pur - F1) / F1)),
                    n_cells=len(region),
                    failures=sum(c.status != "optimal" for c in region),
                )
            )
    return out
