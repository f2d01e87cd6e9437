"""Constant-product AMM with lock-swaps for guaranteed multi-hop swaps across shards."""
from .amm import (
    AmmError,
    Decision,
    Direction,
    FeePolicy,
    InsufficientLiquidity,
    InvalidAmount,
    LockAlreadyResolved,
    LockRecord,
    LockStatus,
    Pool,
    PoolSnapshot,
    QuoteBranch,
    SwapOutcome,
    UnknownLock,
    quote,
)
from .coordinator import Coordinator, Hop, MultiSwapPlan, MultiSwapRequest, MultiSwapResult, drive, plan
from .fixed import SCALE, fmt, to_units
from .sim import BackgroundSwap, Latency, PoolSpec, SimConfig, Simulation, Trace, run

__all__ = [
    "AmmError", "BackgroundSwap", "Coordinator", "Decision", "Direction", "FeePolicy", "Hop",
    "InsufficientLiquidity", "InvalidAmount", "Latency", "LockAlreadyResolved", "LockRecord",
    "LockStatus", "MultiSwapPlan", "MultiSwapRequest", "MultiSwapResult", "Pool", "PoolSnapshot",
    "PoolSpec", "QuoteBranch", "SCALE", "SimConfig", "Simulation", "SwapOutcome", "Trace",
    "UnknownLock", "drive", "fmt", "plan", "quote", "run", "to_units",
]
