"""Universal qubit cloners: asymmetric 1->2 and symmetric 1->M."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import (
    I2,
    PAULIS,
    DensityMatrix,
    PureQubit,
    partial_trace_array,
)

SYMMETRIC_A = 1 / math.sqrt(3)
PARAM_TOL = 1e-12


def b_from_a(a: float) -> float:
    return (-a + math.sqrt(4 - 3 * a * a)) / 2


@dataclass(frozen=True)
class CloneParams:
    """Asymmetric 1->2 cloner, fixed by the amplitude ``a`` in (0, 1]."""

    a: float
    b: float
    gamma1: float
    gamma2: float
    kappa: float

    def __post_init__(self):
        a, b = self.a, self.b
        if not 0 < a <= 1:
            raise ValueError(f"a = {a} outside (0, 1]")
        checks = {
            "normalization": a * a + a * b + b * b - 1,
            "positive root": b - b_from_a(a),
            "gamma1": self.gamma1 - a * (a + b),
            "gamma2": self.gamma2 - b * (a + b),
            "kappa": self.kappa - a * b,
        }
        bad = {k: v for k, v in checks.items() if abs(v) > PARAM_TOL}
        if bad:
            raise ValueError(f"inconsistent clone parameters: {bad}")
        if not -PARAM_TOL <= self.kappa <= 1 / 3 + PARAM_TOL:
            raise ValueError(f"kappa = {self.kappa} outside [0, 1/3]")

    @property
    def fidelities(self) -> tuple[float, float]:
        return 0.5 * (1 + self.gamma1), 0.5 * (1 + self.gamma2)

    @property
    def is_symmetric(self) -> bool:
        return abs(self.gamma1 - self.gamma2) <= PARAM_TOL


def params_from_a(a: float) -> CloneParams:
    a = float(a)
    if not 0 < a <= 1:
        raise ValueError(f"a = {a} outside (0, 1]")
    b = b_from_a(a)
    return CloneParams(a=a, b=b, gamma1=a * (a + b), gamma2=b * (a + b), kappa=a * b)


def symmetric_params() -> CloneParams:
    return params_from_a(SYMMETRIC_A)


def _pauli_basis_terms(params: CloneParams):
    g1, g2, k = params.gamma1, params.gamma2, params.kappa
    rho0 = 0.25 * (np.eye(4) + k * sum(np.kron(s, s) for s in PAULIS))
    amps = np.array([0.25 * (g1 * np.kron(s, I2) + g2 * np.kron(I2, s)) for s in PAULIS])
    return rho0, amps


def two_clone_batch(r: np.ndarray, params: CloneParams) -> np.ndarray:
    """Joint clone state for a batch of Bloch vectors, shape (P, 3) -> (P, 4, 4)."""
    rho0, amps = _pauli_basis_terms(params)
    r = np.atleast_2d(np.asarray(r, dtype=float))
    return rho0 + np.einsum("pk,kij->pij", r, amps)


def two_clone_state(r, params: CloneParams) -> DensityMatrix:
    """Correlated two-clone state written in the Pauli basis.

    Both single-qubit marginals are ``(I + gamma_j r.sigma)/2`` and the
    inter-clone correlation ``kappa sum_k sigma_k x sigma_k`` is kept.
    """
    if isinstance(r, PureQubit):
        r = r.bloch
    r = np.asarray(r, dtype=float)
    if abs(np.linalg.norm(r) - 1.0) > 1e-10:
        raise ValueError(f"Bloch vector norm {np.linalg.norm(r)} is not 1")
    return DensityMatrix(two_clone_batch(r, params)[0], (2, 2))


def cloner_output(psi: PureQubit, params: CloneParams) -> np.ndarray:
    """Three-qubit pure state A:B:C from the asymmetric cloning isometry.

    a|psi>_A|Phi+>_BC + b|psi>_B|Phi+>_AC; tracing C leaves the two clones.
    """
    phi = np.array([1, 0, 0, 1], dtype=complex).reshape(2, 2) / math.sqrt(2)
    v = psi.ket
    first = np.einsum("a,bc->abc", v, phi)
    second = np.einsum("b,ac->abc", v, phi)
    return (params.a * first + params.b * second).reshape(8)


def two_clone_state_from_isometry(psi: PureQubit, params: CloneParams) -> DensityMatrix:
    w = cloner_output(psi, params)
    rho_abc = np.outer(w, w.conj())
    return DensityMatrix(partial_trace_array(rho_abc, (2, 2, 2), [0, 1]), (2, 2))


@lru_cache(maxsize=None)
def symmetric_projector(n_qubits: int) -> np.ndarray:
    """Projector onto the symmetric subspace of ``n_qubits`` qubits."""
    d = 2**n_qubits
    proj = np.zeros((d, d))
    basis = np.arange(d)
    bits = (basis[:, None] >> np.arange(n_qubits - 1, -1, -1)) & 1
    for perm in itertools.permutations(range(n_qubits)):
        permuted = bits[:, list(perm)]
        target = permuted @ (1 << np.arange(n_qubits - 1, -1, -1))
        proj[target, basis] += 1.0
    proj /= math.factorial(n_qubits)
    proj.setflags(write=False)
    return proj


SUPPORTED_M = (1, 2, 3, 4)


def symmetric_clone_batch(r: np.ndarray, n_clones: int) -> np.ndarray:
    """Optimal universal 1->M clone states for a batch of Bloch vectors."""
    if n_clones not in SUPPORTED_M:
        raise ValueError(f"M = {n_clones} not supported, expected one of {SUPPORTED_M}")
    r = np.atleast_2d(np.asarray(r, dtype=float))
    rho = 0.5 * (I2 + np.einsum("pk,kij->pij", r, np.array(PAULIS)))
    if n_clones == 1:
        return rho
    proj = symmetric_projector(n_clones)
    rest = np.eye(2 ** (n_clones - 1))
    padded = np.einsum("pij,kl->pikjl", rho, rest).reshape(len(r), 2**n_clones, 2**n_clones)
    return (2 / (n_clones + 1)) * proj @ padded @ proj


def symmetric_clone_state(psi: PureQubit, n_clones: int) -> DensityMatrix:
    data = symmetric_clone_batch(psi.bloch, n_clones)[0]
    return DensityMatrix(data, (2,) * n_clones)


def symmetric_fidelity(k: int, m: int) -> float:
    """Single-clone fidelity of the optimal symmetric K -> M cloner."""
    k, m = int(k), int(m)
    if k < 1 or m < 1:
        raise ValueError("K and M must be positive")
    if k > m:
        raise ValueError(f"K = {k} exceeds M = {m}")
    return (k * m + k + m) / (m * (k + 2))


def in_cloning_region(fa: float, fb: float, tol: float = 1e-12) -> bool:
    """Whether the clone fidelity pair is reachable by a 1->2 cloner."""
    for f in (fa, fb):
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"fidelity {f} outside [0, 1]")
    da, db = 1.0 - fa, 1.0 - fb
    return math.sqrt(da * db) >= 0.5 - da - db - tol
