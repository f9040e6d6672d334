"""Oracle suite behind ``qmimo validate``: every check reports a magnitude and a tolerance."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channel import (
    MimoChannelSpec,
    apply_mimo_channel,
    crossing_matrix,
    cptp_check,
    sample_crossing_matrix,
)
from .cloner import SYMMETRIC_A, params_from_a, symmetric_params
from .haar import analytic_qr_2x2, numeric_qr, two_clone_encoder
from .sdp.purification import tradeoff_curve

_R36 = [
    [12, 0, 0, 0, 0, 0, 0, 0],
    [0, 12, 0, 0, 0, 0, 0, 0],
    [0, 0, 6, 0, 6, 0, 0, 0],
    [0, 0, 0, 6, 0, 6, 0, 0],
    [0, 0, 6, 0, 6, 0, 0, 0],
    [0, 0, 0, 6, 0, 6, 0, 0],
    [0, 0, 0, 0, 0, 0, 12, 0],
    [0, 0, 0, 0, 0, 0, 0, 12],
]
_Q36 = [
    [8, 0, 0, 0, 0, 0, 0, 0],
    [0, 3, 3, 0, 2, 0, 0, 0],
    [0, 3, 3, 0, 2, 0, 0, 0],
    [0, 0, 0, 4, 0, 2, 2, 0],
    [0, 2, 2, 0, 4, 0, 0, 0],
    [0, 0, 0, 2, 0, 3, 3, 0],
    [0, 0, 0, 2, 0, 3, 3, 0],
    [0, 0, 0, 0, 0, 0, 0, 8],
]
# noiseless symmetric cloner as tabulated: Q reference-first, R clones-first
GOLDEN_R = np.array(_R36, dtype=float) / 36
GOLDEN_Q = np.array(_Q36, dtype=float) / 36
GOLDEN_ENTRIES = {
    "R": sorted({Fraction(v, 36) for row in _R36 for v in row} - {0}),
    "Q": sorted({Fraction(v, 36) for row in _Q36 for v in row} - {0}),
}

FAULTS = ("eta-sign",)


@dataclass(frozen=True)
class Check:
    section: str
    name: str
    value: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark} [{self.section}] {self.name}: {self.value:.3e} (tol {self.tolerance:.1e})"


def _le(section, name, value, tol) -> Check:
    value = float(value)
    return Check(section, name, value, tol, bool(value <= tol))


def check_golden() -> list[Check]:
    qr = analytic_qr_2x2(symmetric_params(), 0.0, 0.0, 0.0)
    Q, R = qr.tabulated_layout()
    return [
        _le("golden", "R vs tabulated", np.max(np.abs(R - GOLDEN_R)), 1e-12),
        _le("golden", "Q vs tabulated", np.max(np.abs(Q - GOLDEN_Q)), 1e-12),
    ]


def check_haar(seed: int, samples: int = 20_000) -> list[Check]:
    out = []
    for a, eta, l1, l2 in ((SYMMETRIC_A, 0.245, 0.1, 0.2), (0.8, 0.1, 0.3, 0.05)):
        params = params_from_a(a)
        ref = analytic_qr_2x2(params, eta, l1, l2)
        spec = MimoChannelSpec.two_by_two(eta, l1, l2)
        quad = numeric_qr(two_clone_encoder(params), spec)
        dev = max(np.max(np.abs(quad.Q - ref.Q)), np.max(np.abs(quad.R - ref.R)))
        out.append(_le("haar", f"quadrature vs analytic a={a:.4f}", dev, 1e-8))
        mc = numeric_qr(two_clone_encoder(params), spec, method="mc", samples=samples, seed=seed)
        se = mc.Q_stderr
        z = max(
            np.max(np.abs(mc.Q.real - ref.Q.real) / np.maximum(se.real, 1e-12)),
            np.max(np.abs(mc.Q.imag - ref.Q.imag) / np.maximum(se.imag, 1e-12)),
        )
        out.append(_le("haar", f"MC max z-score a={a:.4f} (seed {seed})", z, 5.0))
    return out


def check_cptp() -> list[Check]:
    out = []
    for spec in (
        MimoChannelSpec.two_by_two(0.245, 0.1, 0.2),
        MimoChannelSpec.uniform(2, 0.245, 0.1),
        MimoChannelSpec((0.3, 0.2), (0.1, 0.4, 0.0, 0.7)),
    ):
        rep = cptp_check(lambda rho: apply_mimo_channel(rho, spec), spec.n_streams)
        label = f"etas={spec.etas} lambdas={spec.lambdas}"
        out.append(Check("cptp", f"Choi min eigenvalue {label}", rep.min_eigenvalue, rep.psd_tol, rep.completely_positive))
        out.append(_le("cptp", f"trace preservation {label}", rep.tp_error, rep.tp_tol))
    return out


def check_crossing(seed: int, draws: int = 100_000, fault: str | None = None) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for etas in ((0.245,), (0.3, 0.2), (0.1, 0.45)):
        used = tuple(-e for e in etas) if fault == "eta-sign" else etas
        P = crossing_matrix(used)
        out.append(_le("crossing", f"row sums etas={etas}", np.max(np.abs(P.sum(1) - 1)), 1e-12))
        out.append(_le("crossing", f"entries outside [0, 1] etas={etas}", max(0.0, -P.min(), P.max() - 1), 0.0))
        mc = sample_crossing_matrix(etas, draws, rng)
        out.append(_le("crossing", f"MC permutation oracle etas={etas} (seed {seed})", np.max(np.abs(mc - P)), 1e-2))
    return out


def check_sdp() -> list[Check]:
    out = []
    for a, eta, l1, l2 in ((SYMMETRIC_A, 0.0, 0.0, 0.0), (SYMMETRIC_A, 0.245, 0.2, 0.2), (0.7, 0.245, 0.1, 0.3)):
        curve = tradeoff_curve(analytic_qr_2x2(params_from_a(a), eta, l1, l2))
        label = f"a={a:.4f} eta={eta} lambdas=({l1}, {l2})"
        out.append(_le("sdp", f"max duality gap {label}", np.max(curve.gaps), 1e-6))
        out.append(_le("sdp", f"non-optimal points {label}", sum(s != "optimal" for s in curve.statuses), 0))
        rise = float(np.max(np.diff(curve.F), initial=0.0))
        out.append(_le("sdp", f"largest F_P increase along p {label}", max(rise, 0.0), 2e-6))
    return out


def run_validation(seed: int = 0, fault: str | None = None) -> list[Check]:
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; known: {FAULTS}")
    return check_golden() + check_haar(seed) + check_cptp() + check_crossing(seed, fault=fault) + check_sdp()
