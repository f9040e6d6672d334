"""Block SDP container and backend dispatch for the interior-point kernel.

The compiled kernel is used when it was built; setting QMIMO_PURE_PYTHON=1
forces the numpy implementation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _ipm_py

STATUS_NAMES = {
    _ipm_py.STATUS_OPTIMAL: "optimal",
    _ipm_py.STATUS_MAX_ITER: "max-iter",
    _ipm_py.STATUS_NUMERICAL: "numerical",
}

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 200

_KERNELS = {"python": _ipm_py.ipm_solve}
try:
    from . import _ipm_c  # type: ignore[attr-defined]

    _KERNELS["compiled"] = _ipm_c.ipm_solve
except ImportError:  # pragma: no cover - depends on the build
    pass

if os.environ.get("QMIMO_PURE_PYTHON", "") not in ("", "0") or "compiled" not in _KERNELS:
    BACKEND = "python"
else:
    BACKEND = "compiled"


def available_backends() -> list[str]:
    return sorted(_KERNELS)


@dataclass(frozen=True, eq=False)
class BlockSDP:
    """max Re<C, X> s.t. Re<A_i, X> = b_i, X = diag(X_1, ..., X_B) >= 0."""

    sizes: tuple[int, ...]
    C: np.ndarray  # (L,)
    A: np.ndarray  # (m, L)
    b: np.ndarray  # (m,)

    @classmethod
    def from_blocks(cls, c_blocks: Sequence[np.ndarray], a_rows: Sequence[Sequence[np.ndarray]], b):
        sizes = tuple(int(c.shape[0]) for c in c_blocks)
        C = pack(c_blocks)
        A = np.array([pack(row) for row in a_rows]) if len(a_rows) else np.zeros((0, C.size), complex)
        return cls(sizes, C, A, np.asarray(b, dtype=float))

    @property
    def offsets(self) -> list[int]:
        return [0] + list(np.cumsum([n * n for n in self.sizes])[:-1])

    def unpack(self, flat: np.ndarray) -> list[np.ndarray]:
        return [flat[o:o + n * n].reshape(n, n) for n, o in zip(self.sizes, self.offsets)]


def pack(blocks: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.asarray(m, dtype=complex).ravel() for m in blocks])


@dataclass(frozen=True, eq=False)
class SDPResult:
    X: list
    y: np.ndarray
    Z: list
    status: str
    iterations: int
    primal_objective: float
    dual_objective: float
    primal_infeasibility: float
    dual_infeasibility: float
    backend: str

    @property
    def duality_gap(self) -> float:
        return abs(self.dual_objective - self.primal_objective)


def kernel_function(backend: str | None = None):
    """Raw kernel callable (C, A, b, sizes, tol, max_iter) -> (x, y, z, info)."""
    name = backend or BACKEND
    if name not in _KERNELS:
        raise ValueError(f"backend {name!r} unavailable, have {available_backends()}")
    return _KERNELS[name]


def solve_block_sdp(
    problem: BlockSDP, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, backend: str | None = None
) -> SDPResult:
    name = backend or BACKEND
    x, y, z, info = kernel_function(name)(
        problem.C, problem.A, problem.b, np.asarray(problem.sizes, dtype=np.int64), tol, max_iter
    )
    status, iters, pobj, dobj, pinf, dinf = info
    return SDPResult(
        X=problem.unpack(np.asarray(x)),
        y=np.asarray(y),
        Z=problem.unpack(np.asarray(z)),
        status=STATUS_NAMES[int(status)],
        iterations=int(iters),
        primal_objective=float(pobj),
        dual_objective=float(dobj),
        primal_infeasibility=float(pinf),
        dual_infeasibility=float(dinf),
        backend=name,
    )
