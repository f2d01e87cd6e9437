"""Constant-product pool with lock-swaps.

A pool keeps two curves. The *actual* reserves move only when value really
changes hands (instant swaps, executed locks, fees). The *virtual* reserves
additionally carry every pending lock as if it had already executed. While any
lock is pending, swaps are priced on both curves and pay the smaller output, so
a lock holder's quote can never be undercut by later traders.

Locked inputs sit in ``escrow``; locked outputs stay inside the actual reserves
but are earmarked in ``reserved`` so that no later swap can spend them.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterator

from .fixed import SCALE, Amount, fmt, to_units

DEFAULT_DUST_FLOOR: Amount = to_units("0.000001")


class AmmError(ValueError):
    """Base class for rejected pool operations. State is never mutated when raised."""


class InvalidAmount(AmmError):
    pass


class InsufficientLiquidity(AmmError):
    pass


class UnknownLock(AmmError):
    pass


class LockAlreadyResolved(AmmError):
    pass


class Direction(str, enum.Enum):
    X_TO_Y = "x->y"
    Y_TO_X = "y->x"

    @property
    def sides(self) -> tuple[int, int]:
        """(input index, output index) into a reserve pair."""
        return (0, 1) if self is Direction.X_TO_Y else (1, 0)

    @property
    def reverse(self) -> "Direction":
        return Direction.Y_TO_X if self is Direction.X_TO_Y else Direction.X_TO_Y

    @classmethod
    def paying(cls, pair: tuple[str, str], asset: str) -> "Direction":
        """Direction of a swap that pays ``asset`` into ``pair``."""
        if asset == pair[0]:
            return cls.X_TO_Y
        if asset == pair[1]:
            return cls.Y_TO_X
        raise ValueError(f"asset {asset!r} not in pair {pair}")


class Decision(str, enum.Enum):
    EXECUTE = "execute"
    CANCEL = "cancel"


class LockStatus(str, enum.Enum):
    PENDING = "pending"
    EXECUTED = "executed"
    CANCELLED = "cancelled"


class QuoteBranch(str, enum.Enum):
    UNLOCKED = "unlocked"
    MIN_OF_ACTUAL = "min-of-actual"
    MIN_OF_VIRTUAL = "min-of-virtual"


@dataclass(frozen=True)
class FeePolicy:
    """``gamma`` is the retained fraction of every input, in units of 1e-12 (SCALE == no fee)."""

    gamma: int = SCALE

    def __post_init__(self):
        if not 0 < self.gamma <= SCALE:
            raise ValueError(f"gamma must be in (0, 1], got {fmt(self.gamma)}")

    @classmethod
    def from_str(cls, gamma: str) -> "FeePolicy":
        return cls(to_units(gamma))

    def net(self, amount: Amount) -> Amount:
        """Portion of ``amount`` that actually trades (rounded toward zero)."""
        return amount * self.gamma // SCALE


def quote(reserve_in: Amount, reserve_out: Amount, delta_in: Amount, gamma: int = SCALE) -> Amount:
    """Constant-product output for ``delta_in``, with a fraction ``gamma`` of it traded.

    Evaluates ``R_out - R_in*R_out / (R_in + gamma*delta_in)`` exactly and rounds
    the result toward zero, which always favours the pool.
    """
    if reserve_in <= 0 or reserve_out <= 0:
        raise InvalidAmount("reserves must be positive")
    if delta_in < 0:
        raise InvalidAmount("input must be non-negative")
    if not 0 < gamma <= SCALE:
        raise InvalidAmount("gamma must be in (0, 1]")
    traded = gamma * delta_in  # scaled by SCALE
    return reserve_out * traded // (reserve_in * SCALE + traded)


@dataclass(frozen=True)
class LockRecord:
    lock_id: str
    direction: Direction
    input: Amount
    quoted_output: Amount
    status: LockStatus = LockStatus.PENDING
    created_at: int = 0
    # Downstream hops of a multi-swap are funded by an upstream claim; if that
    # claim is cancelled there is nothing to charge a fee on.
    fee_on_cancel: bool = True


@dataclass(frozen=True)
class PoolSnapshot:
    shard: str
    pair: tuple[str, str]
    actual: tuple[Amount, Amount]
    virtual: tuple[Amount, Amount]
    escrow: tuple[Amount, Amount]
    reserved: tuple[Amount, Amount]
    pending: tuple[str, ...]

    def to_json(self) -> dict:
        x, y = self.pair
        return {
            "shard": self.shard,
            "pair": [x, y],
            "actual": [fmt(v) for v in self.actual],
            "virtual": [fmt(v) for v in self.virtual],
            "escrow": {x: fmt(self.escrow[0]), y: fmt(self.escrow[1])},
            "reserved": {x: fmt(self.reserved[0]), y: fmt(self.reserved[1])},
            "pending": list(self.pending),
        }


@dataclass(frozen=True)
class SwapOutcome:
    output: Amount
    quote_branch: QuoteBranch
    pool_after: PoolSnapshot


@dataclass(frozen=True)
class Resolution:
    """Asset movements caused by resolving one lock.

    ``payout`` (output asset) goes to whoever the lock pays; ``refund`` (input
    asset) goes back to whoever funded it; ``fee`` stays in the pool.
    """

    lock: LockRecord
    payout: Amount
    refund: Amount
    fee: Amount
    pool_after: PoolSnapshot


class Pool:
    """One asset pair on one shard. Single writer; every method validates before it mutates."""

    def __init__(
        self,
        pair: tuple[str, str],
        reserves: tuple[Amount, Amount],
        shard: str = "",
        fee: FeePolicy | None = None,
        dust_floor: Amount = DEFAULT_DUST_FLOOR,
    ):
        if pair[0] == pair[1]:
            raise ValueError(f"degenerate pair {pair}")
        if reserves[0] <= 0 or reserves[1] <= 0:
            raise InvalidAmount("reserves must be positive")
        self.pair = (pair[0], pair[1])
        self.shard = shard
        self.fee = fee or FeePolicy()
        self.dust_floor = dust_floor
        self.actual = [reserves[0], reserves[1]]
        self.virtual = [reserves[0], reserves[1]]
        self.escrow = [0, 0]
        self.reserved = [0, 0]
        self.locks: dict[str, LockRecord] = {}  # pending only, in creation order
        self.resolved: dict[str, LockRecord] = {}
        self._next_lock = 0

    def __repr__(self):
        return (
            f"Pool({self.shard}:{self.pair[0]}/{self.pair[1]} actual=<{fmt(self.actual[0])}, "
            f"{fmt(self.actual[1])}> virtual=<{fmt(self.virtual[0])}, {fmt(self.virtual[1])}> "
            f"locks={len(self.locks)})"
        )

    @property
    def partially_locked(self) -> bool:
        return bool(self.locks)

    def snapshot(self) -> PoolSnapshot:
        return PoolSnapshot(
            shard=self.shard,
            pair=self.pair,
            actual=(self.actual[0], self.actual[1]),
            virtual=(self.virtual[0], self.virtual[1]),
            escrow=(self.escrow[0], self.escrow[1]),
            reserved=(self.reserved[0], self.reserved[1]),
            pending=tuple(self.locks),
        )

    def asset(self, side: int) -> str:
        return self.pair[side]

    def free(self, side: int) -> Amount:
        """Actual reserve on ``side`` not earmarked for pending lock payouts."""
        return self.actual[side] - self.reserved[side]

    # -- pricing ---------------------------------------------------------------

    def preview(self, direction: Direction, delta_in: Amount) -> tuple[Amount, QuoteBranch]:
        """Output a swap would receive right now, without mutating anything."""
        i, o = direction.sides
        g = self.fee.gamma
        on_actual = quote(self.actual[i], self.actual[o], delta_in, g)
        if not self.locks:
            return on_actual, QuoteBranch.UNLOCKED
        on_virtual = quote(self.virtual[i], self.virtual[o], delta_in, g)
        if on_actual <= on_virtual:
            return on_actual, QuoteBranch.MIN_OF_ACTUAL
        return on_virtual, QuoteBranch.MIN_OF_VIRTUAL

    # -- transitions -----------------------------------------------------------

    def instant_swap(self, direction: Direction, delta_in: Amount) -> SwapOutcome:
        if delta_in <= 0:
            raise InvalidAmount("instant swap needs a positive input")
        out, branch = self.preview(direction, delta_in)
        i, o = direction.sides
        if out >= self.free(o) or out >= self.virtual[o]:
            raise InsufficientLiquidity(
                f"output {fmt(out)} {self.asset(o)} would drain the pool"
            )
        self.actual[i] += delta_in
        self.actual[o] -= out
        self.virtual[i] += delta_in
        self.virtual[o] -= out
        return SwapOutcome(out, branch, self.snapshot())

    def lock_swap(
        self,
        direction: Direction,
        delta_in: Amount,
        *,
        now: int = 0,
        fee_on_cancel: bool = True,
    ) -> LockRecord:
        if delta_in <= 0:
            raise InvalidAmount("lock swap needs a positive input")
        out, _ = self.preview(direction, delta_in)
        i, o = direction.sides
        if out <= 0:
            raise InsufficientLiquidity("input too small to quote any output")
        if self.free(o) - out < self.dust_floor or self.virtual[o] - out < self.dust_floor:
            raise InsufficientLiquidity(
                f"locking {fmt(out)} {self.asset(o)} would leave the pool below the dust floor"
            )
        lock = LockRecord(
            lock_id=f"{self.shard}:{self.pair[0]}{self.pair[1]}:{self._next_lock}",
            direction=direction,
            input=delta_in,
            quoted_output=out,
            created_at=now,
            fee_on_cancel=fee_on_cancel,
        )
        self._next_lock += 1
        self.virtual[i] += delta_in
        self.virtual[o] -= out
        self.escrow[i] += delta_in
        self.reserved[o] += out
        self.locks[lock.lock_id] = lock
        return lock

    def resolve_lock(self, lock_id: str, decision: Decision | str) -> Resolution:
        decision = Decision(decision)
        lock = self.locks.get(lock_id)
        if lock is None:
            if lock_id in self.resolved:
                raise LockAlreadyResolved(f"lock {lock_id} is already {self.resolved[lock_id].status.value}")
            raise UnknownLock(f"no lock {lock_id} on {self.shard}:{self.pair}")
        i, o = lock.direction.sides
        if decision is Decision.EXECUTE:
            payout, refund, fee = lock.quoted_output, 0, 0
            self.actual[i] += lock.input
            self.actual[o] -= lock.quoted_output
            status = LockStatus.EXECUTED
        else:
            payout = 0
            refund = self.fee.net(lock.input) if lock.fee_on_cancel else lock.input
            fee = lock.input - refund
            # the fee stays in the virtual pool and is credited to the actual
            # pool too, so both curves coincide once every lock is resolved
            self.virtual[i] -= refund
            self.virtual[o] += lock.quoted_output
            self.actual[i] += fee
            status = LockStatus.CANCELLED
        self.escrow[i] -= lock.input
        self.reserved[o] -= lock.quoted_output
        del self.locks[lock_id]
        done = replace(lock, status=status)
        self.resolved[lock_id] = done
        return Resolution(done, payout, refund, fee, self.snapshot())

    # -- auditing --------------------------------------------------------------

    def ledger_errors(self) -> Iterator[str]:
        """Yield a message for every broken bookkeeping invariant (none when healthy)."""
        for side in (0, 1):
            a = self.asset(side)
            if self.actual[side] <= 0 or self.virtual[side] <= 0:
                yield f"non-positive reserve of {a}"
            if self.free(side) <= 0:
                yield f"reserved {a} exceeds actual reserve"
            locked_in = sum(lk.input for lk in self.locks.values() if lk.direction.sides[0] == side)
            locked_out = sum(lk.quoted_output for lk in self.locks.values() if lk.direction.sides[1] == side)
            if self.escrow[side] != locked_in:
                yield f"escrow {a} {fmt(self.escrow[side])} != pending inputs {fmt(locked_in)}"
            if self.reserved[side] != locked_out:
                yield f"reserved {a} {fmt(self.reserved[side])} != pending outputs {fmt(locked_out)}"
            if self.virtual[side] != self.actual[side] + locked_in - locked_out:
                yield f"virtual {a} out of step with actual + pending deltas"

    def check(self) -> None:
        errors = list(self.ledger_errors())
        if errors:
            raise AssertionError(f"{self!r}: " + "; ".join(errors))
