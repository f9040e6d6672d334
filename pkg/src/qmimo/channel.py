"""Crosstalk-plus-depolarization channel on N = 2**m qubit streams.

Each crosstalk layer is a set of boxes; a box exchanges two (possibly
multi-qubit) blocks of streams with probability eta, independently of the
other boxes in the same layer. Layer ``l`` (1-based) pairs the streams whose
indices differ only in bit ``l - 1``, which makes the path probabilities a
product over the bits of ``j XOR k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .linalg import DensityMatrix, I2, embed_operator, partial_trace_array

SUPPORTED_LAYERS = (1, 2)

Box = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True)
class MimoChannelSpec:
    etas: tuple[float, ...]
    lambdas: tuple[float, ...]

    def __post_init__(self):
        etas = tuple(float(e) for e in self.etas)
        lambdas = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "etas", etas)
        object.__setattr__(self, "lambdas", lambdas)
        m = len(etas)
        if m not in SUPPORTED_LAYERS:
            raise ValueError(f"{m} crosstalk layers given, supported: {SUPPORTED_LAYERS}")
        if len(lambdas) != 2**m:
            raise ValueError(f"expected {2**m} depolarizing strengths, got {len(lambdas)}")
        for e in etas:
            if not 0.0 <= e <= 0.5:
                raise ValueError(f"crosstalk strength eta = {e} outside [0, 0.5]")
        for lam in lambdas:
            if not 0.0 <= lam <= 1.0:
                raise ValueError(f"depolarizing strength lambda = {lam} outside [0, 1]")

    @property
    def m(self) -> int:
        return len(self.etas)

    @property
    def n_streams(self) -> int:
        return 2**self.m

    @classmethod
    def uniform(cls, m: int, eta: float, lam: float) -> "MimoChannelSpec":
        return cls((eta,) * m, (lam,) * 2**m)

    @classmethod
    def two_by_two(cls, eta: float, lam1: float, lam2: float) -> "MimoChannelSpec":
        return cls((eta,), (lam1, lam2))

    @classmethod
    def identity(cls, m: int = 1) -> "MimoChannelSpec":
        return cls((0.0,) * m, (0.0,) * 2**m)


def layer_boxes(m: int) -> list[list[Box]]:
    """Boxes of every crosstalk layer for a 2**m stream link."""
    layers = []
    n = 2**m
    for level in range(m):
        half = 2**level
        boxes = []
        for start in range(0, n, 2 * half):
            boxes.append((tuple(range(start, start + half)), tuple(range(start + half, start + 2 * half))))
        layers.append(boxes)
    return layers


def _check_pairing(pairing: Sequence[Box], n_streams: int) -> None:
    seen = set()
    for first, second in pairing:
        if len(first) != len(second):
            raise ValueError(f"box {first} <-> {second} exchanges blocks of different size")
        for q in (*first, *second):
            if not 0 <= q < n_streams:
                raise ValueError(f"stream {q} out of range")
            if q in seen:
                raise ValueError(f"stream {q} appears in more than one box")
            seen.add(q)


def block_swap_permutation(box: Box, n_streams: int) -> list[int]:
    """Stream relabelling of a single box: position q receives stream perm[q]."""
    perm = list(range(n_streams))
    for a, b in zip(*box):
        perm[a], perm[b] = b, a
    return perm


def permutation_unitary(perm: Sequence[int]) -> np.ndarray:
    """Unitary that moves the qubit on stream perm[q] to stream q."""
    n = len(perm)
    d = 2**n
    idx = np.arange(d)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
    # output bit q comes from input bit perm[q]
    out_bits = bits[:, list(perm)]
    target = out_bits @ (1 << np.arange(n - 1, -1, -1))
    u = np.zeros((d, d))
    u[target, idx] = 1.0
    return u


def _data(rho):
    if isinstance(rho, DensityMatrix):
        return rho.data, rho.dims
    rho = np.asarray(rho)
    n = int(round(np.log2(rho.shape[-1])))
    return rho, (2,) * n


def _wrap(like, data):
    if isinstance(like, DensityMatrix):
        return DensityMatrix(data, like.dims, check=False)
    return data


def depolarize(rho, stream: int, lam: float):
    """(1 - lam) rho + lam (I/2 on ``stream``) x Tr_stream rho."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda = {lam} outside [0, 1]")
    data, dims = _data(rho)
    n = len(dims)
    if not 0 <= stream < n:
        raise IndexError(f"stream {stream} out of range for {n} qubits")
    if lam == 0.0:
        return _wrap(rho, data.copy())
    rest = [q for q in range(n) if q != stream]
    reduced = partial_trace_array(data, dims, rest) if rest else np.array([[np.trace(data)]])
    mixed = np.kron(I2 / 2, reduced)
    mixed = embed_operator(mixed, [stream] + rest, n) if rest else mixed * 1.0
    return _wrap(rho, (1 - lam) * data + lam * mixed)


def cswap_layer(rho, pairing: Sequence[Box], eta: float):
    """Apply each box of ``pairing`` as (1 - eta) rho + eta S rho S^T."""
    if not 0.0 <= eta <= 0.5:
        raise ValueError(f"eta = {eta} outside [0, 0.5]")
    data, dims = _data(rho)
    n = len(dims)
    _check_pairing(pairing, n)
    out = data
    for box in pairing:
        s = permutation_unitary(block_swap_permutation(box, n))
        out = (1 - eta) * out + eta * s @ out @ s.T
    return _wrap(rho, out)


def apply_mimo_channel(rho, spec: MimoChannelSpec):
    """Crosstalk layers in order, then independent depolarization per stream."""
    data, dims = _data(rho)
    if len(dims) != spec.n_streams:
        raise ValueError(f"state has {len(dims)} streams, channel expects {spec.n_streams}")
    out = data
    for eta, boxes in zip(spec.etas, layer_boxes(spec.m)):
        out = cswap_layer(out, boxes, eta)
    for q, lam in enumerate(spec.lambdas):
        out = depolarize(out, q, lam)
    return _wrap(rho, out)


@lru_cache(maxsize=256)
def channel_superoperator(spec: MimoChannelSpec) -> np.ndarray:
    """Matrix S with vec(H(rho)) = S vec(rho) for row-major vec."""
    d = 2**spec.n_streams
    cols = []
    for k in range(d * d):
        e = np.zeros(d * d, dtype=complex)
        e[k] = 1.0
        cols.append(apply_mimo_channel(e.reshape(d, d), spec).reshape(-1))
    sup = np.array(cols).T
    sup.setflags(write=False)
    return sup


def apply_superoperator_batch(states: np.ndarray, sup: np.ndarray) -> np.ndarray:
    p, d, _ = states.shape
    return (states.reshape(p, d * d) @ sup.T).reshape(p, d, d)


def crossing_probability(j: int, k: int, etas: Sequence[float]) -> float:
    """Probability that the qubit injected on stream j leaves on stream k."""
    etas = [float(e) for e in etas]
    n = 2 ** len(etas)
    for s in (j, k):
        if not 0 <= s < n:
            raise IndexError(f"stream {s} out of range for {n} streams")
    diff = j ^ k
    prob = 1.0
    for level, eta in enumerate(etas):
        prob *= eta if (diff >> level) & 1 else 1.0 - eta
    return prob


def crossing_matrix(etas: Sequence[float]) -> np.ndarray:
    n = 2 ** len(etas)
    return np.array([[crossing_probability(j, k, etas) for k in range(n)] for j in range(n)])


def sample_crossing_matrix(etas: Sequence[float], n_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Monte-Carlo estimate of the crossing matrix by simulating the layered swaps.

    Every draw flips one coin per box and tracks where each input lands.
    """
    m = len(etas)
    n = 2**m
    # position[d, j] = current stream of input j in draw d
    content = np.tile(np.arange(n), (n_draws, 1))  # content[d, q] = input sitting on stream q
    for eta, boxes in zip(etas, layer_boxes(m)):
        for box in boxes:
            flip = rng.random(n_draws) < eta
            perm = np.array(block_swap_permutation(box, n))
            content[flip] = content[flip][:, perm]
    counts = np.zeros((n, n))
    for q in range(n):
        np.add.at(counts, (content[:, q], q), 1.0)
    return counts / n_draws


@dataclass(frozen=True)
class CPTPReport:
    min_eigenvalue: float
    tp_error: float
    psd_tol: float = -1e-9
    tp_tol: float = 1e-10

    @property
    def completely_positive(self) -> bool:
        return self.min_eigenvalue >= self.psd_tol

    @property
    def trace_preserving(self) -> bool:
        return self.tp_error <= self.tp_tol

    @property
    def passed(self) -> bool:
        return self.completely_positive and self.trace_preserving


def choi_matrix(channel: Callable[[np.ndarray], np.ndarray], d_in: int) -> np.ndarray:
    """sum_ij |i><j| x channel(|i><j|), input factor first."""
    blocks = None
    for i in range(d_in):
        for j in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[i, j] = 1.0
            out = np.asarray(channel(e))
            if blocks is None:
                d_out = out.shape[0]
                blocks = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
            blocks[i * d_out:(i + 1) * d_out, j * d_out:(j + 1) * d_out] = out
    return blocks


def cptp_check(channel: Callable[[np.ndarray], np.ndarray], n_qubits: int) -> CPTPReport:
    d = 2**n_qubits
    choi = choi_matrix(channel, d)
    d_out = choi.shape[0] // d
    herm = 0.5 * (choi + choi.conj().T)
    min_eig = float(np.linalg.eigvalsh(herm)[0])
    tr_out = partial_trace_array(choi, (d, d_out), [0])
    return CPTPReport(min_eigenvalue=min_eig, tp_error=float(np.max(np.abs(tr_out - np.eye(d)))))


def stream_marginal(rho, stream: int) -> np.ndarray:
    data, dims = _data(rho)
    return partial_trace_array(data, dims, [stream])
