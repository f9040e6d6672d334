"""Schur-Weyl block reduction for operators commuting with U^{x n} on qubits.

An operator in the commutant decomposes as sum_j W_j (X_j x I_{2j+1}) W_j^H,
where the columns of W_j run over (multiplicity index, magnetic number).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from ..linalg import PAULI_X, PAULI_Y, PAULI_Z, embed_operator, hermitian_basis

COMMUTATION_TOL = 1e-9


@lru_cache(maxsize=None)
def total_spin(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ops = []
    for p in (PAULI_X, PAULI_Y, PAULI_Z):
        op = sum(embed_operator(p, [q], n) for q in range(n)) / 2
        op.setflags(write=False)
        ops.append(op)
    return tuple(ops)


@dataclass(frozen=True, eq=False)
class SpinBlock:
    j: float
    multiplicity: int
    W: np.ndarray  # (2**n, multiplicity * (2j + 1)), columns ordered (alpha, m)

    @property
    def degeneracy(self) -> int:
        return int(round(2 * self.j + 1))


@lru_cache(maxsize=None)
def schur_blocks(n: int) -> tuple[SpinBlock, ...]:
    """Orthonormal Schur basis of n qubits, largest spin first."""
    sx, sy, sz = total_spin(n)
    splus = sx + 1j * sy
    sminus = sx - 1j * sy
    weights = np.real(np.diag(sz))
    blocks = []
    j = n / 2
    while j >= 0:
        idx = np.flatnonzero(np.isclose(weights, j))
        # highest-weight vectors: S+ v = 0 inside the S_z = j subspace
        null = sla.null_space(splus[:, idx], rcond=1e-10)
        mult = null.shape[1]
        if mult:
            d = int(round(2 * j + 1))
            W = np.zeros((2**n, mult * d), dtype=complex)
            for a in range(mult):
                v = np.zeros(2**n, dtype=complex)
                v[idx] = null[:, a]
                m = j
                for k in range(d):
                    W[:, a * d + k] = v
                    if k < d - 1:
                        v = sminus @ v / np.sqrt(j * (j + 1) - m * (m - 1))
                        m -= 1
            W.setflags(write=False)
            blocks.append(SpinBlock(j, mult, W))
        j -= 1
    return tuple(blocks)


def reduce_block(M: np.ndarray, block: SpinBlock) -> np.ndarray:
    """Partial trace over the magnetic index of W^H M W."""
    d, mu = block.degeneracy, block.multiplicity
    t = (block.W.conj().T @ M @ block.W).reshape(mu, d, mu, d)
    return np.einsum("ambm->ab", t)


def expand_blocks(xs, blocks) -> np.ndarray:
    W0 = blocks[0].W
    out = np.zeros((W0.shape[0], W0.shape[0]), dtype=complex)
    for x, blk in zip(xs, blocks):
        out += blk.W @ np.kron(x, np.eye(blk.degeneracy)) @ blk.W.conj().T
    return out


def commutation_residual(M: np.ndarray, n: int) -> float:
    return max(float(np.max(np.abs(s @ M - M @ s))) for s in total_spin(n))


@lru_cache(maxsize=None)
def conjugation_frame(n_conj: int, n_plain: int) -> np.ndarray:
    """Y on the first n_conj qubits: maps Ubar x ... x U covariance to U x ... x U."""
    t = np.eye(1)
    for _ in range(n_conj):
        t = np.kron(t, PAULI_Y)
    t = np.kron(t, np.eye(2**n_plain))
    t.setflags(write=False)
    return t


@lru_cache(maxsize=None)
def commutant_basis(n: int) -> tuple[tuple[int, np.ndarray], ...]:
    """Hermitian basis of the commutant of U^{x n}, one (block index, B_t) pair per element."""
    out = []
    for bi, blk in enumerate(schur_blocks(n)):
        for B in hermitian_basis(blk.multiplicity):
            out.append((bi, B))
    return tuple(out)
