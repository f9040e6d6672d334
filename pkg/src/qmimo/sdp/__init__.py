from .kernel import BACKEND, BlockSDP, SDPResult, available_backends, solve_block_sdp
from .purification import (
    DEFAULT_P_GRID,
    PurificationProblem,
    PurificationModel,
    PurificationSolution,
    SolveLog,
    TradeoffCurve,
    effective_fidelity,
    evaluate_purifier,
    identity_choi,
    knee_index,
    knee_point,
    purify,
    solve_log,
    solve_purification,
    tradeoff_curve,
)

__all__ = [
    "BACKEND",
    "BlockSDP",
    "SDPResult",
    "available_backends",
    "solve_block_sdp",
    "DEFAULT_P_GRID",
    "PurificationProblem",
    "PurificationModel",
    "PurificationSolution",
    "SolveLog",
    "TradeoffCurve",
    "effective_fidelity",
    "evaluate_purifier",
    "identity_choi",
    "knee_index",
    "knee_point",
    "purify",
    "solve_log",
    "solve_purification",
    "tradeoff_curve",
]
