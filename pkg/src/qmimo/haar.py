"""Haar averages over pure qubit inputs and the (Q, R) operators of the purifier.

Q = E[rho_x(psi) x |psi><psi|] and R = E[rho_x(psi)] x I_2, with the
reference qubit as the last tensor factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import MimoChannelSpec, apply_superoperator_batch, channel_superoperator
from .cloner import CloneParams, symmetric_clone_batch, two_clone_batch
from .linalg import I2, PAULIS, bloch_to_density, partial_trace_array, permute_subsystems

QR_TOL = 1e-10
DEFAULT_ORDER = (20, 40)
MC_CHUNK = 4096

Encoder = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class QROperators:
    Q: np.ndarray
    R: np.ndarray
    K: int
    Q_stderr: np.ndarray | None = None

    def __post_init__(self):
        q = np.asarray(self.Q, dtype=complex)
        r = np.asarray(self.R, dtype=complex)
        d = 2 ** (self.K + 1)
        if q.shape != (d, d) or r.shape != (d, d):
            raise ValueError(f"Q {q.shape} and R {r.shape} must both be {d}x{d} for K = {self.K}")
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "R", r)
        problems = self.violations()
        if problems:
            raise ValueError(f"invalid (Q, R): {problems}")

    def violations(self, tol: float = QR_TOL) -> dict:
        out = {}
        for name, m in (("Q", self.Q), ("R", self.R)):
            h = float(np.max(np.abs(m - m.conj().T)))
            if h > tol:
                out[f"{name} hermiticity"] = h
        if abs(np.trace(self.Q) - 1) > tol:
            out["Tr Q"] = complex(np.trace(self.Q))
        if abs(np.trace(self.R) - 2) > tol:
            out["Tr R"] = complex(np.trace(self.R))
        fact = float(np.max(np.abs(self.R - np.kron(self.rho_bar, I2))))
        if fact > tol:
            out["R factorization"] = fact
        return out

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    @property
    def rho_bar(self) -> np.ndarray:
        """Haar-averaged clone-register state (R = rho_bar x I)."""
        d = 2**self.K
        return partial_trace_array(self.R, (d, 2), [0]) / 2

    def reference_first(self) -> tuple[np.ndarray, np.ndarray]:
        """Q and R with the reference qubit moved to the leftmost factor."""
        dims = (2,) * (self.K + 1)
        order = [self.K] + list(range(self.K))
        return permute_subsystems(self.Q, dims, order), permute_subsystems(self.R, dims, order)

    def tabulated_layout(self) -> tuple[np.ndarray, np.ndarray]:
        """Q with the reference first and R with the clones first.

        This mixed layout is how the closed-form noiseless matrices are usually
        tabulated; the solver itself only ever uses clones-first operators.
        """
        return self.reference_first()[0], self.R


@dataclass(frozen=True)
class NoiseProcessedCloner:
    gamma1p: float
    gamma2p: float
    kappap: float


def noise_processed(params: CloneParams, eta: float, lam1: float, lam2: float) -> NoiseProcessedCloner:
    g1, g2 = params.gamma1, params.gamma2
    return NoiseProcessedCloner(
        gamma1p=(1 - lam1) * ((1 - eta) * g1 + eta * g2),
        gamma2p=(1 - lam2) * ((1 - eta) * g2 + eta * g1),
        kappap=params.kappa * (1 - lam1) * (1 - lam2),
    )


def gamma_matrices(npc: NoiseProcessedCloner) -> np.ndarray:
    """Gamma_0 .. Gamma_3 with rho_o(r) = Gamma_0 + sum_k r_k Gamma_k, shape (4, 4, 4)."""
    g0 = 0.25 * (np.eye(4) + npc.kappap * sum(np.kron(s, s) for s in PAULIS))
    gk = [0.25 * (npc.gamma1p * np.kron(s, I2) + npc.gamma2p * np.kron(I2, s)) for s in PAULIS]
    return np.array([g0, *gk])


def qr_from_moments(mean: np.ndarray, first: np.ndarray, K: int) -> QROperators:
    """Assemble (Q, R) from E[rho_o] and E[r_k rho_o] (k = x, y, z).

    Uses |psi><psi| = (I + r.sigma)/2, so every Q integrand is linear in these moments.
    """
    q = 0.5 * np.kron(mean, I2) + 0.5 * sum(np.kron(first[k], PAULIS[k]) for k in range(3))
    r = np.kron(mean, I2)
    return QROperators(_herm(q), _herm(r), K)


def _herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def analytic_qr_2x2(params: CloneParams, eta: float, lam1: float, lam2: float) -> QROperators:
    """Closed form: R = Gamma_0 x I and Q = Gamma_0 x I/2 + (1/6) sum_k Gamma_k x sigma_k."""
    for name, v, hi in (("eta", eta, 0.5), ("lambda1", lam1, 1.0), ("lambda2", lam2, 1.0)):
        if not 0.0 <= v <= hi:
            raise ValueError(f"{name} = {v} outside [0, {hi}]")
    g = gamma_matrices(noise_processed(params, eta, lam1, lam2))
    # E[r_k r_m] = delta_km / 3
    return qr_from_moments(g[0], g[1:] / 3.0, K=2)


# --- quadrature and sampling -------------------------------------------------


def quadrature_rule(n_theta: int = DEFAULT_ORDER[0], n_phi: int = DEFAULT_ORDER[1]):
    """Bloch points (P, 3) and weights summing to 1 for the uniform sphere measure.

    Gauss-Legendre in cos(theta), trapezoid in phi.
    """
    if n_theta < 1 or n_phi < 1:
        raise ValueError("quadrature orders must be positive")
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    cz, ph = np.meshgrid(x, phi, indexing="ij")
    sz = np.sqrt(1 - cz**2)
    pts = np.stack([sz * np.cos(ph), sz * np.sin(ph), cz], axis=-1).reshape(-1, 3)
    weights = np.repeat(w / 2, n_phi) / n_phi
    return pts, weights


def sample_haar(n: int, rng: np.random.Generator) -> np.ndarray:
    """n Haar-random pure qubits as Bloch vectors, shape (n, 3)."""
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class HaarEstimate:
    value: float
    stderr: float
    n_points: int
    method: str


def haar_average(
    f: Callable[[np.ndarray], np.ndarray],
    method: str = "quadrature",
    order: tuple[int, int] = DEFAULT_ORDER,
    samples: int = 100_000,
    seed: int | None = None,
) -> HaarEstimate:
    """Average of ``f`` over Haar-random pure qubits.

    ``f`` maps a batch of Bloch vectors (P, 3) to values (P,). Quadrature reports a
    zero standard error; MC needs an explicit seed.
    """
    if method == "quadrature":
        pts, w = quadrature_rule(*order)
        vals = np.asarray(f(pts), dtype=float)
        return HaarEstimate(float(w @ vals), 0.0, len(w), method)
    if method == "mc":
        if seed is None:
            raise ValueError("Monte-Carlo averaging requires a seed")
        rng = np.random.default_rng(seed)
        pts = sample_haar(samples, rng)
        vals = np.asarray(f(pts), dtype=float)
        return HaarEstimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples)), samples, method)
    raise ValueError(f"unknown method {method!r}")


# --- encoders and numeric (Q, R) ---------------------------------------------


def two_clone_encoder(params: CloneParams) -> Encoder:
    return lambda r: two_clone_batch(r, params)


def symmetric_encoder(n_clones: int) -> Encoder:
    return lambda r: symmetric_clone_batch(r, n_clones)


def identity_encoder() -> Encoder:
    return bloch_to_density


def _pad_mixed(states: np.ndarray, n_streams: int) -> np.ndarray:
    n_in = int(round(np.log2(states.shape[-1])))
    if n_in > n_streams:
        raise ValueError(f"encoder emits {n_in} qubits but the channel has {n_streams} streams")
    if n_in == n_streams:
        return states
    pad = np.eye(2 ** (n_streams - n_in)) / 2 ** (n_streams - n_in)
    p, d, _ = states.shape
    dp = pad.shape[0]
    return np.einsum("pij,kl->pikjl", states, pad).reshape(p, d * dp, d * dp)


def received_states(
    encode: Encoder, r: np.ndarray, channel: MimoChannelSpec | None, keep: Sequence[int] | None
) -> np.ndarray:
    """Encoded, transmitted and reduced states for a batch of Bloch vectors."""
    states = np.asarray(encode(r), dtype=complex)
    if states.ndim == 2:
        states = states[None]
    if channel is not None:
        states = _pad_mixed(states, channel.n_streams)
        states = apply_superoperator_batch(states, channel_superoperator(channel))
    n = int(round(np.log2(states.shape[-1])))
    if keep is None:
        return states
    keep = [int(k) for k in keep]
    if sorted(set(keep)) != sorted(keep) or any(not 0 <= k < n for k in keep):
        raise ValueError(f"invalid keep set {keep} for {n} streams")
    if keep == list(range(n)):
        return states
    dims = (2,) * n
    return np.array([partial_trace_array(s, dims, keep) for s in states])


def numeric_qr(
    encode: Encoder,
    channel: MimoChannelSpec | None = None,
    keep: Sequence[int] | None = None,
    method: str = "quadrature",
    order: tuple[int, int] = DEFAULT_ORDER,
    samples: int = 100_000,
    seed: int | None = None,
) -> QROperators:
    """(Q, R) by quadrature or Monte-Carlo over the Haar measure.

    Unused channel inputs carry I/2; outputs outside ``keep`` are traced out.
    Monte-Carlo results carry per-entry standard errors of Q (real and
    imaginary parts packed as a complex array).
    """
    if method == "quadrature":
        pts, w = quadrature_rule(*order)
        rho = received_states(encode, pts, channel, keep)
        mean = np.einsum("p,pij->ij", w, rho)
        first = np.einsum("p,pk,pij->kij", w, pts, rho)
        K = int(round(np.log2(mean.shape[0])))
        return qr_from_moments(mean, first, K)
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    if seed is None:
        raise ValueError("Monte-Carlo averaging requires a seed")
    rng = np.random.default_rng(seed)
    pts = sample_haar(samples, rng)
    sums = None
    for start in range(0, samples, MC_CHUNK):
        r = pts[start:start + MC_CHUNK]
        rho = received_states(encode, r, channel, keep)
        ref = bloch_to_density(r)
        qs = np.einsum("pij,pkl->pikjl", rho, ref).reshape(len(r), 2 * rho.shape[1], 2 * rho.shape[1])
        chunk = (rho.sum(0), qs.sum(0), (qs.real**2).sum(0), (qs.imag**2).sum(0))
        sums = chunk if sums is None else tuple(a + b for a, b in zip(sums, chunk))
    rho_sum, q_sum, q_re2, q_im2 = sums
    n = samples
    mean_q = q_sum / n
    var_re = np.maximum(q_re2 / n - mean_q.real**2, 0.0) * n / (n - 1)
    var_im = np.maximum(q_im2 / n - mean_q.imag**2, 0.0) * n / (n - 1)
    stderr = np.sqrt(var_re / n) + 1j * np.sqrt(var_im / n)
    mean_rho = rho_sum / n
    K = int(round(np.log2(mean_rho.shape[0])))
    return QROperators(_herm(mean_q), np.kron(_herm(mean_rho), I2), K, Q_stderr=stderr)
