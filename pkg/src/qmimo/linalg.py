"""Dense operators on few-qubit registers.

Subsystems are ordered big-endian: the first entry of ``dims`` is the
leftmost tensor factor, so ``kron(A, B)`` lives on ``dims = (dA, dB)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-9
MAX_DIM = 2**6

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class InvalidStateError(ValueError):
    pass


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of square operators, leftmost factor first."""
    if not ops:
        raise ValueError("tensor_product needs at least one operand")
    for op in ops:
        op = np.asarray(op)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError(f"operand of shape {op.shape} is not square")
    return reduce(np.kron, (np.asarray(op) for op in ops))


def _check_dims(matrix: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    total = int(np.prod(dims))
    if matrix.shape != (total, total):
        raise ValueError(f"matrix shape {matrix.shape} does not match dims {dims}")
    return dims


def _as_index_set(idx, n: int) -> list[int]:
    if isinstance(idx, (int, np.integer)):
        idx = [int(idx)]
    idx = sorted({int(i) for i in idx})
    for i in idx:
        if not 0 <= i < n:
            raise IndexError(f"subsystem index {i} out of range for {n} subsystems")
    return idx


def partial_trace_array(matrix: np.ndarray, dims: Sequence[int], keep) -> np.ndarray:
    matrix = np.asarray(matrix)
    dims = _check_dims(matrix, dims)
    n = len(dims)
    keep = _as_index_set(keep, n)
    t = matrix.reshape(dims + dims)
    rows = list(range(n))
    cols = [i if i not in keep else n + i for i in range(n)]
    out = keep + [n + i for i in keep]
    kept = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.einsum(t, rows + cols, out).reshape(kept, kept)


def partial_transpose_array(matrix: np.ndarray, dims: Sequence[int], subsystem) -> np.ndarray:
    matrix = np.asarray(matrix)
    dims = _check_dims(matrix, dims)
    n = len(dims)
    sub = _as_index_set(subsystem, n)
    axes = list(range(2 * n))
    for i in sub:
        axes[i], axes[n + i] = n + i, i
    total = matrix.shape[0]
    return matrix.reshape(dims + dims).transpose(axes).reshape(total, total)


def permute_subsystems(matrix: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new factor ``k`` is old factor ``order[k]``."""
    matrix = np.asarray(matrix)
    dims = _check_dims(matrix, dims)
    n = len(dims)
    order = [int(i) for i in order]
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of {n} subsystems")
    total = matrix.shape[0]
    return matrix.reshape(dims + dims).transpose(order + [n + i for i in order]).reshape(total, total)


def validity_report(matrix: np.ndarray) -> dict:
    """Hermiticity, trace and positivity diagnostics for a candidate state."""
    matrix = np.asarray(matrix)
    herm = float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0
    trace_err = float(abs(np.trace(matrix) - 1.0))
    hermitized = 0.5 * (matrix + matrix.conj().T)
    min_eig = float(np.linalg.eigvalsh(hermitized)[0])
    return {
        "hermiticity": herm,
        "trace_error": trace_err,
        "min_eigenvalue": min_eig,
        "valid": herm <= HERMITIAN_TOL and trace_err <= TRACE_TOL and min_eig >= PSD_TOL,
    }


def is_valid_state(matrix: np.ndarray) -> bool:
    return validity_report(matrix)["valid"]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density operator on a register with the given subsystem dims."""

    data: np.ndarray
    dims: tuple[int, ...]
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        _check_dims(data, dims)
        if data.shape[0] > MAX_DIM:
            raise ValueError(f"dimension {data.shape[0]} exceeds the dense cap {MAX_DIM}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", dims)
        if self.check:
            report = validity_report(data)
            if not report["valid"]:
                raise InvalidStateError(f"not a density matrix: {report}")

    @classmethod
    def maximally_mixed(cls, n_qubits: int = 1) -> "DensityMatrix":
        d = 2**n_qubits
        return cls(np.eye(d) / d, (2,) * n_qubits)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def ptrace(self, keep) -> "DensityMatrix":
        return partial_trace(self, keep)

    def fidelity(self, psi: "PureQubit") -> float:
        return fidelity_with_pure(self, psi)

    def __matmul__(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(np.kron(self.data, other.data), self.dims + other.dims, check=False)


@dataclass(frozen=True)
class PureQubit:
    """alpha|0> + beta|1>."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise InvalidStateError(f"|alpha|^2 + |beta|^2 = {norm}, expected 1")

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "PureQubit":
        return cls(complex(np.cos(theta / 2)), complex(np.exp(1j * phi) * np.sin(theta / 2)))

    @classmethod
    def from_bloch(cls, r: Sequence[float]) -> "PureQubit":
        r = np.asarray(r, dtype=float)
        norm = np.linalg.norm(r)
        if abs(norm - 1.0) > 1e-10:
            raise InvalidStateError(f"Bloch vector norm {norm} is not 1")
        theta = np.arccos(np.clip(r[2] / norm, -1.0, 1.0))
        phi = np.arctan2(r[1], r[0])
        return cls.from_angles(theta, phi)

    @property
    def ket(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    @property
    def orthogonal(self) -> "PureQubit":
        return PureQubit(-np.conj(self.beta), np.conj(self.alpha))

    @property
    def bloch(self) -> np.ndarray:
        ab = np.conj(self.alpha) * self.beta
        return np.array([2 * ab.real, 2 * ab.imag, abs(self.alpha) ** 2 - abs(self.beta) ** 2])

    @property
    def projector(self) -> np.ndarray:
        k = self.ket
        return np.outer(k, k.conj())

    def density(self) -> DensityMatrix:
        return DensityMatrix(self.projector, (2,))


def bloch_to_density(r: np.ndarray) -> np.ndarray:
    """Batch map Bloch vectors of shape (..., 3) to 2x2 operators."""
    r = np.asarray(r, dtype=float)
    return 0.5 * (I2 + np.einsum("...k,kij->...ij", r, np.array(PAULIS)))


def partial_trace(rho, keep, dims: Sequence[int] | None = None):
    """Trace out every subsystem not listed in ``keep``.

    Accepts a :class:`DensityMatrix` (dims taken from it, result wrapped) or a
    bare array together with ``dims``.
    """
    if isinstance(rho, DensityMatrix):
        keep_idx = _as_index_set(keep, rho.n_subsystems)
        data = partial_trace_array(rho.data, rho.dims, keep_idx)
        return DensityMatrix(data, tuple(rho.dims[i] for i in keep_idx), check=False)
    if dims is None:
        raise ValueError("dims are required for a bare array")
    return partial_trace_array(rho, dims, keep)


def partial_transpose(matrix, dims: Sequence[int] | None = None, subsystem=0):
    if isinstance(matrix, DensityMatrix):
        return partial_transpose_array(matrix.data, matrix.dims, subsystem)
    if dims is None:
        raise ValueError("dims are required for a bare array")
    return partial_transpose_array(matrix, dims, subsystem)


def fidelity_with_pure(rho, psi: PureQubit) -> float:
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if data.shape != (2, 2):
        raise ValueError(f"expected a single-qubit state, got shape {data.shape}")
    k = psi.ket
    return float(np.real(k.conj() @ data @ k))


def embed_operator(op: np.ndarray, targets: Iterable[int], n_qubits: int) -> np.ndarray:
    """Lift an operator on ``targets`` (in the given order) to ``n_qubits`` qubits."""
    targets = [int(t) for t in targets]
    k = len(targets)
    rest = [q for q in range(n_qubits) if q not in targets]
    full = np.kron(op, np.eye(2 ** (n_qubits - k)))
    # full acts on (targets..., rest...); move factors back into register order
    current = targets + rest
    order = [current.index(q) for q in range(n_qubits)]
    return permute_subsystems(full, (2,) * n_qubits, order)


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal basis (under Re Tr(A B)) of d x d Hermitian matrices, shape (d*d, d, d)."""
    out = []
    for j in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[j, j] = 1.0
        out.append(e)
    s = 1 / np.sqrt(2)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = s
            out.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = 1j * s
            e[k, j] = -1j * s
            out.append(e)
    return np.array(out)
