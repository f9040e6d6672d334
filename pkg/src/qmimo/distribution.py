"""How many clones to spread over a uniform 4-stream link.

The qubit is either sent alone (M=1), cloned symmetrically onto streams 0 and 1
(M=2), or broadcast to all four streams (M=4). Every configuration sees the
same two crosstalk layers and the same depolarizing strength, and the receiver
purifies the streams that carried clones.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .channel import MimoChannelSpec
from .haar import QROperators, identity_encoder, numeric_qr, symmetric_encoder
from .sdp.purification import DEFAULT_P_GRID, effective_fidelity, tradeoff_curve

CLONE_COUNTS = (1, 2, 4)
KEEP = {1: (0,), 2: (0, 1), 4: (0, 1, 2, 3)}


def link_4x4(eta: float, lam: float) -> MimoChannelSpec:
    return MimoChannelSpec.uniform(2, eta, lam)


def distribution_qr(n_clones: int, eta: float, lam: float) -> QROperators:
    if n_clones not in CLONE_COUNTS:
        raise ValueError(f"M = {n_clones} not in {CLONE_COUNTS}")
    enc = identity_encoder() if n_clones == 1 else symmetric_encoder(n_clones)
    return numeric_qr(enc, link_4x4(eta, lam), keep=KEEP[n_clones])


@dataclass(frozen=True)
class DistributionPoint:
    n_clones: int
    eta: float
    lam: float
    p_star: float
    F_P: float
    F_max: float
    status: str
    gap: float

    @property
    def effective(self) -> float:
        return effective_fidelity(min(self.F_P, 1.0), min(self.p_star, 1.0))


def distribution_point(n_clones: int, eta: float, lam: float, p_grid=DEFAULT_P_GRID) -> DistributionPoint:
    """Knee operating point of the purified M-clone link.

    ``F_max`` is the best post-selected fidelity anywhere on the curve.
    """
    curve = tradeoff_curve(distribution_qr(n_clones, eta, lam), p_grid)
    k = curve.knee_index
    bad = [s for s in curve.statuses if s != "optimal"]
    return DistributionPoint(
        n_clones=n_clones,
        eta=float(eta),
        lam=float(lam),
        p_star=float(curve.p[k]),
        F_P=float(curve.F[k]),
        F_max=float(np.max(curve.F)),
        status=bad[0] if bad else "optimal",
        gap=float(np.max(curve.gaps)),
    )


def direct_fidelity_4x4(eta: float, lam: float) -> float:
    """Uncloned qubit read on its own stream: it stays put with probability (1-eta)^2."""
    return 0.5 * (1 + (1 - eta) ** 2 * (1 - lam))


@lru_cache(maxsize=None)
def _cell(eta: float, lam: float, p_grid: tuple) -> tuple[DistributionPoint, ...]:
    return tuple(distribution_point(m, eta, lam, p_grid) for m in CLONE_COUNTS)


def distribution_scan(
    lambda_grid: Sequence[float], eta_grid: Sequence[float], p_grid=DEFAULT_P_GRID, threads: int = 1
) -> list[tuple[DistributionPoint, ...]]:
    """One (M=1, M=2, M=4) triple per (lambda, eta) cell, lambda-major."""
    cells = [(float(e), float(l)) for l in lambda_grid for e in eta_grid]
    pg = tuple(float(p) for p in p_grid)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda c: _cell(c[0], c[1], pg), cells))
    return [_cell(e, l, pg) for e, l in cells]


def midpoints(n: int, upper: float = 1.0) -> np.ndarray:
    return (np.arange(n) + 0.5) / n * upper
