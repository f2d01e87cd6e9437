"""Applying protocol messages to the pools a shard hosts.

Shared by the discrete-event simulator and the synchronous ``drive`` helper so
both go through exactly the same state transitions.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .amm import AmmError, Decision, Pool, PoolSnapshot
from .fixed import Amount, fmt
from .messages import (
    Ack,
    LockRequest,
    LockResult,
    Payload,
    ResolveCommand,
    SwapRequest,
    SwapResult,
    UserInstantSwap,
)

PoolKey = tuple[str, tuple[str, str]]

# Route accounts carry the intermediate assets of a multi-swap. They go
# negative while a downstream hop escrows an amount an upstream lock will pay.
ROUTE_PREFIX = "route:"


class InsufficientBalance(Exception):
    pass


class Ledger:
    """Off-pool balances per (account, asset)."""

    def __init__(self, balances: dict[str, dict[str, Amount]] | None = None):
        self._bal: dict[str, dict[str, Amount]] = defaultdict(dict)
        for account, assets in (balances or {}).items():
            for asset, amount in assets.items():
                self.credit(account, asset, amount)

    def balance(self, account: str, asset: str) -> Amount:
        return self._bal.get(account, {}).get(asset, 0)

    def credit(self, account: str, asset: str, amount: Amount) -> None:
        held = self._bal[account]
        held[asset] = held.get(asset, 0) + amount

    def debit(self, account: str, asset: str, amount: Amount) -> None:
        have = self.balance(account, asset)
        if have < amount and not account.startswith(ROUTE_PREFIX):
            raise InsufficientBalance(f"{account} holds {fmt(have)} {asset}, needs {fmt(amount)}")
        self.credit(account, asset, -amount)

    def totals(self) -> dict[str, Amount]:
        out: dict[str, Amount] = defaultdict(int)
        for assets in self._bal.values():
            for asset, amount in assets.items():
                out[asset] += amount
        return dict(out)

    def to_json(self) -> dict:
        return {
            account: {asset: fmt(v) for asset, v in sorted(assets.items())}
            for account, assets in sorted(self._bal.items())
        }


@dataclass
class Applied:
    kind: str
    pool: PoolSnapshot | None = None
    replies: list[Payload] = field(default_factory=list)


def asset_totals(pools, ledger: Ledger) -> dict[str, Amount]:
    """Each asset summed over actual reserves, escrows and all balances."""
    out = defaultdict(int, ledger.totals())
    for pool in pools:
        for side in (0, 1):
            out[pool.asset(side)] += pool.actual[side] + pool.escrow[side]
    return dict(out)


class ShardHost:
    """Pools hosted by one shard (or, for synchronous driving, by all of them).

    Remembers who funded and who is owed each lock so resolve commands only need
    the lock id.
    """

    def __init__(self, pools: dict[PoolKey, Pool], ledger: Ledger | None = None):
        self.pools = pools
        self.ledger = ledger
        self.parties: dict[str, tuple[str, str]] = {}

    def apply(self, msg: Payload, now: int = 0) -> Applied:
        """Apply one shard-bound message; return what happened and the replies to send."""
        pool = self.pools[(msg.shard, tuple(msg.pair))]
        if isinstance(msg, LockRequest):
            return self._lock(pool, msg, now)
        if isinstance(msg, ResolveCommand):
            return self._resolve(pool, msg)
        if isinstance(msg, (SwapRequest, UserInstantSwap)):
            return self._swap(pool, msg)
        raise TypeError(f"not a shard message: {msg!r}")

    def _lock(self, pool: Pool, msg: LockRequest, now: int) -> Applied:
        asset_in = pool.asset(msg.direction.sides[0])
        try:
            self._debit(msg.payer, asset_in, msg.amount)
        except InsufficientBalance as exc:
            return Applied("lock_rejected", pool.snapshot(), [_lock_fail(msg, exc)])
        try:
            lock = pool.lock_swap(msg.direction, msg.amount, now=now, fee_on_cancel=msg.fee_on_cancel)
        except AmmError as exc:
            self._credit(msg.payer, asset_in, msg.amount)
            return Applied("lock_rejected", pool.snapshot(), [_lock_fail(msg, exc)])
        self.parties[lock.lock_id] = (msg.payer, msg.payee)
        reply = LockResult(msg.request_id, msg.hop, msg.shard, lock.lock_id, lock.quoted_output)
        return Applied("lock", pool.snapshot(), [reply])

    def _resolve(self, pool: Pool, msg: ResolveCommand) -> Applied:
        try:
            res = pool.resolve_lock(msg.lock_id, msg.decision)
        except AmmError:
            return Applied("resolve_rejected", pool.snapshot())
        i, o = res.lock.direction.sides
        payer, payee = self.parties.pop(msg.lock_id)
        if res.payout:
            self._credit(payee, pool.asset(o), res.payout)
        if res.refund:
            self._credit(payer, pool.asset(i), res.refund)
        ack = Ack(msg.request_id, msg.hop, msg.shard, msg.lock_id, msg.decision, res.payout, res.refund)
        kind = "execute" if msg.decision is Decision.EXECUTE else "cancel"
        return Applied(kind, res.pool_after, [ack])

    def _swap(self, pool: Pool, msg: SwapRequest | UserInstantSwap) -> Applied:
        naive_hop = isinstance(msg, SwapRequest)
        payer = msg.payer if naive_hop else msg.user
        payee = msg.payee if naive_hop else msg.user
        i, o = msg.direction.sides
        try:
            self._debit(payer, pool.asset(i), msg.amount)
        except InsufficientBalance as exc:
            return self._swap_fail(pool, msg, exc)
        try:
            outcome = pool.instant_swap(msg.direction, msg.amount)
        except AmmError as exc:
            self._credit(payer, pool.asset(i), msg.amount)
            return self._swap_fail(pool, msg, exc)
        self._credit(payee, pool.asset(o), outcome.output)
        replies = [SwapResult(msg.request_id, msg.hop, msg.shard, outcome.output)] if naive_hop else []
        return Applied("swap", outcome.pool_after, replies)

    def _swap_fail(self, pool, msg, exc) -> Applied:
        replies = []
        if isinstance(msg, SwapRequest):
            replies.append(SwapResult(msg.request_id, msg.hop, msg.shard, 0, str(exc)))
        return Applied("swap_rejected", pool.snapshot(), replies)

    def _debit(self, account: str, asset: str, amount: Amount) -> None:
        if self.ledger is not None:
            self.ledger.debit(account, asset, amount)

    def _credit(self, account: str, asset: str, amount: Amount) -> None:
        if self.ledger is not None:
            self.ledger.credit(account, asset, amount)


def _lock_fail(msg: LockRequest, exc: Exception) -> LockResult:
    return LockResult(msg.request_id, msg.hop, msg.shard, None, 0, str(exc))
