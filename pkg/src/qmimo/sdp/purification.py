"""Optimal probabilistic purification of clone registers.

For a decoder with Choi operator J on (clone registers, output qubit):

    maximize   Tr[J Q~] / p
    subject to Tr[J R~] = p,  J >= 0,  Tr_out J <= I

where ~ is the partial transpose over the clone registers. The inequality is
carried by a PSD slack S with Tr_out J + S = I. By default the problem is
block-reduced with the Schur-Weyl decomposition, which is exact for
unitarily covariant (Q, R).
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from ..haar import QROperators
from ..linalg import hermitian_basis, partial_trace_array, partial_transpose_array
from .kernel import DEFAULT_MAX_ITER, DEFAULT_TOL, STATUS_NAMES, BlockSDP, kernel_function, solve_block_sdp
from .symmetry import (
    COMMUTATION_TOL,
    commutant_basis,
    commutation_residual,
    conjugation_frame,
    expand_blocks,
    reduce_block,
    schur_blocks,
)

F_MM = 0.5
P_TOL = 1e-12
DEFAULT_P_GRID = tuple(round(0.02 * k, 12) for k in range(1, 51))
CHOI_TOL = 1e-9
P_MATCH_TOL = 1e-8
FLAT_TOL = 1e-7
TIE_TOL = 1e-10


class SolveLog:
    """Tally of every purification solve made while the log is active."""

    def __init__(self):
        self.solves = 0
        self.statuses: dict[str, int] = {}
        self.max_gap = 0.0
        self.curves = 0
        self.max_rise = 0.0

    def record_curve(self, F: np.ndarray):
        """Largest increase of F_P between neighbouring grid points."""
        self.curves += 1
        rise = float(np.max(np.diff(F), initial=0.0))
        if np.isfinite(rise):
            self.max_rise = max(self.max_rise, rise)

    def record(self, status: str, gap: float):
        self.solves += 1
        self.statuses[status] = self.statuses.get(status, 0) + 1
        if np.isfinite(gap):
            self.max_gap = max(self.max_gap, float(gap))

    @property
    def non_optimal(self) -> int:
        return self.solves - self.statuses.get("optimal", 0)


_LOGS: list[SolveLog] = []
_LOG_LOCK = threading.Lock()


def _record(status: str, gap: float):
    if _LOGS:
        with _LOG_LOCK:
            for log in _LOGS:
                log.record(status, gap)


def _record_curve(F: np.ndarray):
    if _LOGS:
        with _LOG_LOCK:
            for log in _LOGS:
                log.record_curve(F)


@contextmanager
def solve_log():
    log = SolveLog()
    with _LOG_LOCK:
        _LOGS.append(log)
    try:
        yield log
    finally:
        with _LOG_LOCK:
            _LOGS.remove(log)


@dataclass(frozen=True)
class PurificationProblem:
    qr: QROperators
    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"success probability p = {self.p} must be positive")

    @property
    def K(self) -> int:
        return self.qr.K


@dataclass(frozen=True, eq=False)
class PurificationSolution:
    J: np.ndarray | None
    F_P: float
    p: float
    p_achieved: float
    objective: float
    dual_objective: float
    iterations: int
    status: str
    K: int
    method: str = "reduced"
    backend: str = ""

    @property
    def duality_gap(self) -> float:
        return abs(self.dual_objective - self.objective)

    @property
    def fidelity_bounds(self) -> tuple[float, float]:
        """Objective bracket divided by p; meaningful when status is max-iter."""
        return self.objective / self.p, self.dual_objective / self.p

    def choi_report(self) -> dict:
        if self.J is None:
            return {}
        K = self.K
        min_eig = float(np.linalg.eigvalsh(self.J)[0])
        tr_b = partial_trace_array(self.J, (2**K, 2), [0])
        excess = float(np.linalg.eigvalsh(tr_b)[-1] - 1.0)
        return {"min_eigenvalue": min_eig, "trace_out_excess": excess}


def clone_transpose(M: np.ndarray, K: int) -> np.ndarray:
    return partial_transpose_array(M, (2,) * (K + 1), list(range(K)))


def identity_choi() -> np.ndarray:
    """Choi operator of the identity map on one qubit (input first)."""
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1.0
    return np.outer(phi, phi)


# --- problem assembly ----------------------------------------------------------


@lru_cache(maxsize=None)
def _reduced_constraints(K: int):
    """Rows of Tr_out J + S = I projected on the commutant: (J parts, slack parts, rhs)."""
    jb = schur_blocks(K + 1)
    sb = schur_blocks(K)
    j_rows, s_rows, rhs = [], [], []
    for bi, B in commutant_basis(K):
        blk = sb[bi]
        d = blk.degeneracy
        F = blk.W @ np.kron(B, np.eye(d)) @ blk.W.conj().T
        FJ = np.kron(F, np.eye(2))
        j_rows.append([reduce_block(FJ, b) for b in jb])
        s_rows.append([d * B if i == bi else np.zeros((b.multiplicity,) * 2) for i, b in enumerate(sb)])
        rhs.append(float(d * np.trace(B).real))
    return j_rows, s_rows, rhs


@lru_cache(maxsize=None)
def _full_constraints(K: int):
    j_rows, s_rows, rhs = [], [], []
    for B in hermitian_basis(2**K):
        j_rows.append([np.kron(B, np.eye(2))])
        s_rows.append([B])
        rhs.append(float(np.trace(B).real))
    return j_rows, s_rows, rhs


def _kernel_basis(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    scale = max(1.0, float(np.abs(w).max()))
    return v[:, w <= tol * scale]


class PurificationModel:
    """Purification problem for one (Q, R), prepared once and re-solved for any p.

    At p = 1 the constraint Tr[J R~] = 1 forces the slack onto the kernel of
    the averaged clone state, so there the slack is restricted to that kernel
    and the p-row is dropped (it then holds identically). This keeps a
    strictly feasible interior.
    """

    def __init__(
        self,
        qr: QROperators,
        method: str = "reduced",
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        backend: str | None = None,
    ):
        self.qr = qr
        self.method = method
        self.tol = tol
        self.max_iter = max_iter
        self.backend = backend
        K = qr.K
        self.K = K
        self._Rt = clone_transpose(qr.R, K)
        Qt = clone_transpose(qr.Q, K)
        rho_t = qr.rho_bar.T
        if method == "reduced":
            T = conjugation_frame(K, 1)
            TK = conjugation_frame(K, 0)
            Cp = T @ Qt @ T
            Rp = T @ self._Rt @ T
            scale = max(1.0, float(np.max(np.abs(Cp))))
            resid = max(commutation_residual(Cp, K + 1), commutation_residual(Rp, K + 1)) / scale
            if resid > COMMUTATION_TOL:
                raise ValueError(
                    f"(Q, R) are not unitarily covariant (residual {resid:.2e}); use method='full'"
                )
            jb = schur_blocks(K + 1)
            self._c = [reduce_block(Cp, blk) for blk in jb]
            self._p_row = [reduce_block(Rp, blk) for blk in jb]
            self._rows = _reduced_constraints(K)
            rho_p = TK @ rho_t @ TK
            self._slack_mats = [reduce_block(rho_p, blk) / blk.degeneracy for blk in schur_blocks(K)]
        elif method == "full":
            self._c = [Qt]
            self._p_row = [self._Rt]
            self._rows = _full_constraints(K)
            self._slack_mats = [rho_t]
        else:
            raise ValueError(f"unknown method {method!r}")
        self._templates: dict[bool, BlockSDP] = {}
        self._size_cache: dict[tuple, np.ndarray] = {}

    def problem(self, p: float) -> BlockSDP:
        at_one = abs(p - 1.0) <= P_TOL
        if at_one not in self._templates:
            self._templates[at_one] = self._assemble(at_one)
        sdp = self._templates[at_one]
        if at_one:
            return sdp
        b = sdp.b.copy()
        b[0] = p
        return BlockSDP(sdp.sizes, sdp.C, sdp.A, b)

    def _assemble(self, at_one: bool) -> BlockSDP:
        j_rows, s_rows, rhs = self._rows
        if at_one:
            bases = [_kernel_basis(m) for m in self._slack_mats]
        else:
            bases = [np.eye(m.shape[0]) for m in self._slack_mats]
        keep = [i for i, v in enumerate(bases) if v.shape[1] > 0]
        zeros = [np.zeros((bases[i].shape[1],) * 2) for i in keep]
        c_blocks = self._c + zeros
        a_rows = [list(jr) + [bases[i].conj().T @ sr[i] @ bases[i] for i in keep] for jr, sr in zip(j_rows, s_rows)]
        b = list(rhs)
        if not at_one:
            a_rows.insert(0, self._p_row + zeros)
            b.insert(0, 0.0)
        return BlockSDP.from_blocks(c_blocks, a_rows, b)

    def choi(self, X: list) -> np.ndarray:
        if self.method == "full":
            J = X[0]
        else:
            T = conjugation_frame(self.K, 1)
            J = T @ expand_blocks(X[: len(self._c)], schur_blocks(self.K + 1)) @ T
        return 0.5 * (J + J.conj().T)

    def objective_only(self, p: float) -> tuple[float, str, float, int]:
        """(F_P, status, duality gap, iterations) without forming the Choi operator."""
        sdp = self.problem(p)
        kernel = kernel_function(self.backend)
        _, _, _, info = kernel(sdp.C, sdp.A, sdp.b, self._sizes(sdp), self.tol, self.max_iter)
        status, iters, pobj, dobj = info[:4]
        name, gap = STATUS_NAMES[int(status)], abs(dobj - pobj)
        _record(name, gap)
        return pobj / p, name, gap, int(iters)

    def _sizes(self, sdp: BlockSDP) -> np.ndarray:
        key = sdp.sizes
        if key not in self._size_cache:
            self._size_cache[key] = np.asarray(key, dtype=np.int64)
        return self._size_cache[key]

    def solve(self, p: float) -> PurificationSolution:
        p = float(p)
        K = self.K
        if not p > 0:
            raise ValueError(f"success probability p = {p} must be positive")
        if p > 1.0 + P_TOL:
            # Tr[J R~] = Tr[Tr_out(J) rho_bar^T] <= 1 whenever Tr_out J <= I
            nan = float("nan")
            return PurificationSolution(None, nan, p, nan, nan, nan, 0, "infeasible", K, self.method)
        res = solve_block_sdp(self.problem(p), tol=self.tol, max_iter=self.max_iter, backend=self.backend)
        J = self.choi(res.X)
        obj = res.primal_objective
        _record(res.status, res.duality_gap)
        return PurificationSolution(
            J=J,
            F_P=obj / p,
            p=p,
            p_achieved=float(np.real(np.vdot(self._Rt, J))),
            objective=obj,
            dual_objective=res.dual_objective,
            iterations=res.iterations,
            status=res.status,
            K=K,
            method=self.method,
            backend=res.backend,
        )


def build_problem(qr: QROperators, p: float, method: str = "reduced") -> BlockSDP:
    return PurificationModel(qr, method).problem(p)


def solve_purification(problem: PurificationProblem, **kwargs) -> PurificationSolution:
    return PurificationModel(problem.qr, **kwargs).solve(problem.p)


def purify(qr: QROperators, p: float, **kwargs) -> PurificationSolution:
    return PurificationModel(qr, **kwargs).solve(p)


# --- trade-off curves and operating points ---------------------------------------


@dataclass(frozen=True, eq=False)
class TradeoffCurve:
    """Solved (p, F_P) points; full solutions are recomputed on request."""

    p: np.ndarray
    F: np.ndarray
    statuses: list
    gaps: np.ndarray
    iterations: np.ndarray
    model: PurificationModel = field(repr=False)

    @property
    def knee_index(self) -> int:
        return knee_index(self.p, self.F)

    @property
    def p_star(self) -> float:
        return float(self.p[self.knee_index])

    @property
    def all_optimal(self) -> bool:
        return all(s == "optimal" for s in self.statuses)

    def solution(self, index: int) -> PurificationSolution:
        return self.model.solve(float(self.p[index]))

    def operating_point(self) -> PurificationSolution:
        return self.solution(self.knee_index)

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.p.tolist(), self.F.tolist()))


def _check_grid(p_grid) -> np.ndarray:
    p = np.asarray(p_grid, dtype=float)
    if p.ndim != 1 or len(p) == 0:
        raise ValueError("p grid must be a non-empty 1-d sequence")
    if np.any(np.diff(p) <= 0):
        raise ValueError("p grid must be strictly increasing")
    if p[0] <= 0 or p[-1] > 1.0 + P_TOL:
        raise ValueError("p grid must lie in (0, 1]")
    return p


def tradeoff_curve(
    qr: QROperators, p_grid: Sequence[float] = DEFAULT_P_GRID, threads: int = 1, **kwargs
) -> TradeoffCurve:
    """Re-solve the purification problem at every grid point."""
    p = _check_grid(p_grid)
    model = PurificationModel(qr, **kwargs)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pts = list(pool.map(model.objective_only, p))
    else:
        pts = [model.objective_only(pk) for pk in p]
    F, statuses, gaps, iters = zip(*pts)
    _record_curve(np.array(F))
    return TradeoffCurve(p, np.array(F), list(statuses), np.array(gaps), np.array(iters), model)


def knee_index(p: Sequence[float], F: Sequence[float]) -> int:
    """Point of largest distance from the chord joining the curve end points.

    Ties go to the larger p; a curve that never leaves its chord returns the
    last point.
    """
    p = np.asarray(p, dtype=float)
    F = np.asarray(F, dtype=float)
    if len(p) < 3 or len(p) != len(F):
        raise ValueError("knee detection needs at least 3 matching (p, F) points")
    slope = (F[-1] - F[0]) / (p[-1] - p[0])
    dist = np.abs(F - (F[0] + slope * (p - p[0]))) / np.hypot(1.0, slope)
    best = float(dist.max())
    if best <= FLAT_TOL:
        return len(p) - 1
    return int(np.flatnonzero(dist >= best - TIE_TOL)[-1])


def knee_point(p: Sequence[float], F: Sequence[float]) -> float:
    return float(np.asarray(p, dtype=float)[knee_index(p, F)])


def evaluate_purifier(J: np.ndarray, qr_true: QROperators) -> tuple[float, float]:
    """(F_real, p_real) of a fixed decoder on the actual (Q, R)."""
    K = qr_true.K
    if J.shape != qr_true.Q.shape:
        raise ValueError(f"Choi operator {J.shape} does not match Q {qr_true.Q.shape}")
    p_real = float(np.real(np.trace(J @ clone_transpose(qr_true.R, K))))
    if p_real <= 1e-12:
        raise ValueError(f"success probability {p_real:.3e} too small to define a fidelity")
    f_real = float(np.real(np.trace(J @ clone_transpose(qr_true.Q, K)))) / p_real
    return f_real, p_real


def effective_fidelity(F_P: float, p: float) -> float:
    for name, v in (("F_P", F_P), ("p", p)):
        if not -1e-12 <= v <= 1 + 1e-12:
            raise ValueError(f"{name} = {v} outside [0, 1]")
    return p * F_P + (1 - p) * F_MM
