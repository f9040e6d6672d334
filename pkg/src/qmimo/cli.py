"""Command-line experiment runner.

    qmimo <experiment> [--config run.toml] [--out DIR] [--seed N] [--threads N]

Each run writes plot-ready CSV tables (floats at 12 significant digits) and a
``summary.json`` with the resolved configuration and solver statistics. The
same configuration and seed always produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .cloner import SYMMETRIC_A, params_from_a
from .distribution import CLONE_COUNTS, direct_fidelity_4x4, distribution_scan, midpoints
from .haar import analytic_qr_2x2
from .sdp import kernel
from .sdp.matrixio import dump_matrices
from .sdp.purification import DEFAULT_TOL, purify, tradeoff_curve
from .strategies import (
    CASES,
    ChannelParams2x2,
    argmax_strategy,
    best_strategy_region,
    fidelity_gain_scan,
    optimize_asymmetry,
)
from .validate import FAULTS, run_validation

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("scan2x2", "scan4x4", "tradeoff", "gains", "qr-dump", "validate")
A_MODES = ("symmetric", "optimized")
LAYOUTS = ("tabulated", "clones-first")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    eta: float = 0.245
    lambda1: float = 0.0
    lambda2: float = 0.0
    lambdas: list = field(default_factory=lambda: [0.1, 0.2, 0.3])
    grid: int = 100
    lambda_points: int = 20
    eta_points: int = 20
    gain_eta_points: int = 11
    gain_grid: int = 25
    cases: list = field(default_factory=lambda: [1, 2, 3, 4])
    gain_cases: list = field(default_factory=lambda: [1, 3])
    a: float = SYMMETRIC_A
    a_modes: list = field(default_factory=lambda: list(A_MODES))
    p_points: int = 50
    p: float = 0.0
    layout: str = "tabulated"
    fault: str = ""
    seed: int = 0
    threads: int = 1
    out: str = "results"

    @property
    def p_grid(self) -> np.ndarray:
        return np.arange(1, self.p_points + 1) / self.p_points

    def check(self) -> "ExperimentConfig":
        def bad(name, why):
            raise ConfigError(f"config field '{name}': {why} (got {getattr(self, name)!r})")

        if self.kind not in KINDS:
            bad("kind", f"must be one of {KINDS}")
        if not 0.0 <= self.eta <= 0.5:
            bad("eta", "must lie in [0, 0.5]")
        for name in ("lambda1", "lambda2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                bad(name, "must lie in [0, 1]")
        if self.lambda1 > self.lambda2 and self.kind == "qr-dump":
            bad("lambda1", "must not exceed lambda2")
        if not self.lambdas or any(not 0.0 <= x <= 1.0 for x in self.lambdas):
            bad("lambdas", "must be a non-empty list in [0, 1]")
        for name in ("grid", "lambda_points", "eta_points", "gain_eta_points", "gain_grid", "threads"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 1:
                bad(name, "must be a positive integer")
        if not isinstance(self.p_points, int) or self.p_points < 3:
            bad("p_points", "must be an integer >= 3")
        for name in ("cases", "gain_cases"):
            v = getattr(self, name)
            if not v or any(c not in CASES for c in v):
                bad(name, "entries must be CSI cases 1..4")
        if not 0.0 < self.a <= 1.0:
            bad("a", "must lie in (0, 1]")
        if not self.a_modes or any(m not in A_MODES for m in self.a_modes):
            bad("a_modes", f"entries must be in {A_MODES}")
        if not 0.0 <= self.p <= 1.0:
            bad("p", "must lie in [0, 1]; 0 skips the Choi dump")
        if self.layout not in LAYOUTS:
            bad("layout", f"must be one of {LAYOUTS}")
        if self.fault and self.fault not in FAULTS:
            bad("fault", f"must be empty or one of {FAULTS}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            bad("seed", "must be an unsigned 64-bit integer")
        return self


def load_config(kind: str, path: str | None, overrides: dict) -> ExperimentConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if data.get("kind", kind) != kind:
        raise ConfigError(f"config field 'kind': file says {data['kind']!r} but command is {kind!r}")
    data["kind"] = kind
    known = {f.name: f for f in fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(f"config field '{key}': unknown key")
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(**data)
    for name, f in known.items():
        v = getattr(cfg, name)
        if f.type == "float" and isinstance(v, int) and not isinstance(v, bool):
            setattr(cfg, name, float(v))
        elif f.type == "float" and not isinstance(v, float):
            raise ConfigError(f"config field '{name}': expected a number (got {v!r})")
    return cfg.check()


# --- output helpers ---------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


class Stats:
    """Solver bookkeeping for the provenance summary."""

    def __init__(self):
        self.cells = 0
        self.non_optimal = 0
        self.max_gap = 0.0

    def add(self, status: str, gap: float | None = None):
        self.cells += 1
        self.non_optimal += status != "optimal"
        if gap is not None and np.isfinite(gap):
            self.max_gap = max(self.max_gap, float(gap))

    def as_dict(self):
        return {"cells": self.cells, "non_optimal": self.non_optimal, "max_duality_gap": fmt(self.max_gap)}


# --- experiments ------------------------------------------------------------------


def run_scan2x2(cfg: ExperimentConfig, out: Path, stats: Stats) -> list[Path]:
    files = []
    header = [
        "lambda1", "lambda2", "F_strategy1", "F_strategy2", "F_strategy3", "argmax", "status",
        "a_strategy2", "a_strategy3", "p_strategy3", "F_P_strategy3", "F_strategy3_design",
    ]
    for case in cfg.cases:
        rows = []
        for cell in best_strategy_region(cfg.eta, cfg.grid, case, cfg.p_grid, cfg.threads):
            r1, r2, r3 = cell.results
            stats.add(cell.status, r3.details.get("gap"))
            rows.append([
                cell.lambda1, cell.lambda2, r1.F, r2.F, r3.F, cell.argmax + 1, cell.status,
                r2.details["a_used"], r3.details["a_used"], r3.details["p"], r3.details["F_P"],
                r3.details.get("F_design", r3.F),
            ])
        files.append(write_csv(out / f"scan2x2_case{case}.csv", header, rows))
    return files


def run_scan4x4(cfg: ExperimentConfig, out: Path, stats: Stats) -> list[Path]:
    lams = midpoints(cfg.lambda_points)
    etas = midpoints(cfg.eta_points, 0.5)
    header = ["lambda", "eta", "F_direct"]
    for m in CLONE_COUNTS:
        header += [f"p_M{m}", f"F_P_M{m}", f"F_M{m}", f"status_M{m}"]
    header += ["gain_M2_vs_M1", "gain_M2_vs_M4"]
    rows = []
    for triple in distribution_scan(lams, etas, cfg.p_grid, cfg.threads):
        lam, eta = triple[0].lam, triple[0].eta
        row = [lam, eta, direct_fidelity_4x4(eta, lam)]
        for pt in triple:
            stats.add(pt.status, pt.gap)
            row += [pt.p_star, pt.F_P, pt.effective, pt.status]
        eff = {pt.n_clones: pt.effective for pt in triple}
        row += [eff[2] - eff[1], eff[2] - eff[4]]
        rows.append(row)
    return [write_csv(out / "scan4x4.csv", header, rows)]


def run_tradeoff(cfg: ExperimentConfig, out: Path, stats: Stats) -> list[Path]:
    rows = []
    for lam in cfg.lambdas:
        params = ChannelParams2x2(cfg.eta, lam, lam)
        for mode in cfg.a_modes:
            a = SYMMETRIC_A if mode == "symmetric" else optimize_asymmetry(params, "4.3", cfg.p_grid)
            curve = tradeoff_curve(params.qr(a), cfg.p_grid, threads=cfg.threads)
            k = curve.knee_index
            for i, (p, F) in enumerate(zip(curve.p, curve.F)):
                stats.add(curve.statuses[i], curve.gaps[i])
                rows.append([lam, mode, a, p, F, int(i == k), curve.statuses[i]])
    header = ["lambda", "a_mode", "a", "p", "F_P", "knee", "status"]
    return [write_csv(out / "tradeoff.csv", header, rows)]


def run_gains(cfg: ExperimentConfig, out: Path, stats: Stats) -> list[Path]:
    etas = np.linspace(0.0, 0.5, cfg.gain_eta_points) if cfg.gain_eta_points > 1 else np.array([cfg.eta])
    rows = []
    for g in fidelity_gain_scan(etas, cfg.gain_grid, cfg.gain_cases, cfg.p_grid, cfg.threads):
        for _ in range(g.n_cells):
            stats.add("optimal")
        stats.non_optimal += g.failures
        rows.append([
            g.eta, g.csi_case, g.cloning_gain, g.purification_gain,
            g.cloning_gain_effective, g.purification_gain_effective,
            g.max_relative_purification_gain, g.max_relative_effective_gain, g.n_cells, g.failures,
        ])
    header = [
        "eta", "csi_case", "mean_cloning_gain", "mean_purification_gain",
        "mean_cloning_gain_effective", "mean_purification_gain_effective",
        "max_relative_purification_gain", "max_relative_effective_gain", "cells", "failures",
    ]
    return [write_csv(out / "gains.csv", header, rows)]


def run_qr_dump(cfg: ExperimentConfig, out: Path, stats: Stats) -> list[Path]:
    qr = analytic_qr_2x2(params_from_a(cfg.a), cfg.eta, cfg.lambda1, cfg.lambda2)
    if cfg.layout == "tabulated":
        Q, R = qr.tabulated_layout()
        order = {"Q": "reference, clone1, clone2", "R": "clone1, clone2, reference"}
    else:
        Q, R = qr.Q, qr.R
        order = {"Q": "clone1, clone2, reference", "R": "clone1, clone2, reference"}
    mats = {"Q": Q, "R": R}
    comments = [
        f"a={cfg.a!r} eta={cfg.eta!r} lambda1={cfg.lambda1!r} lambda2={cfg.lambda2!r}",
        *(f"{k} qubit order: {v}" for k, v in order.items()),
    ]
    if cfg.p > 0:
        sol = purify(qr, cfg.p)
        stats.add(sol.status, sol.duality_gap)
        mats["J"] = sol.J
        comments.append(f"J: Choi operator at p={cfg.p!r}, qubit order clone1, clone2, output; F_P={fmt(sol.F_P)}")
    return [dump_matrices(out / "qr.txt", mats, tuple(comments))]


def run_validate(cfg: ExperimentConfig, out: Path, stats: Stats) -> list[Path]:
    checks = run_validation(seed=cfg.seed, fault=cfg.fault or None)
    lines = [c.line() for c in checks]
    failed = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - failed}/{len(checks)} checks passed")
    path = out / "validate.txt"
    path.write_text("\n".join(lines) + "\n")
    for c in checks:
        stats.add("optimal" if c.passed else "failed")
    return [path]


RUNNERS = {
    "scan2x2": run_scan2x2,
    "scan4x4": run_scan4x4,
    "tradeoff": run_tradeoff,
    "gains": run_gains,
    "qr-dump": run_qr_dump,
    "validate": run_validate,
}


def run(cfg: ExperimentConfig) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stats = Stats()
    files = RUNNERS[cfg.kind](cfg, out, stats)
    summary = {
        "experiment": cfg.kind,
        "version": __version__,
        "config": {k: v for k, v in asdict(cfg).items() if k != "out"},
        "solver": {"backend": kernel.BACKEND, "tolerance": DEFAULT_TOL, "max_iter": kernel.DEFAULT_MAX_ITER},
        "stats": stats.as_dict(),
        "outputs": [f.name for f in files],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=fmt) + "\n")
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmimo", description="Quantum MIMO cloning and purification experiments")
    sub = ap.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", help="TOML file with experiment settings")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="seed for every Monte-Carlo path")
        sp.add_argument("--threads", type=int, help="worker threads for independent solves")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.kind, args.config, {"out": args.out, "seed": args.seed, "threads": args.threads})
    except (ConfigError, TypeError) as exc:
        print(f"qmimo: {exc}", file=sys.stderr)
        return 2
    summary = run(cfg)
    st = summary["stats"]
    print(f"{cfg.kind}: {len(summary['outputs'])} file(s) in {cfg.out}; "
          f"{st['cells']} cells, {st['non_optimal']} not optimal, max gap {st['max_duality_gap']}")
    if cfg.kind == "validate":
        print((Path(cfg.out) / "validate.txt").read_text(), end="")
    return 1 if st["non_optimal"] and cfg.kind == "validate" else 0


if __name__ == "__main__":
    sys.exit(main())
