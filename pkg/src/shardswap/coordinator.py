"""Multi-swap coordination across shards.

A multi-swap is decomposed into one lock-swap per hop. Hops are locked in
order, each hop's locked quote becoming the next hop's input. Once the final
quote is known the coordinator resolves every lock the same way: execute when
the final quote meets the user's minimum, cancel otherwise (or on any hop
rejection / timeout).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from .amm import Decision, Direction, Pool, QuoteBranch
from .fixed import Amount, fmt
from .messages import (
    Ack,
    LockRequest,
    LockResult,
    Payload,
    ResolveCommand,
    SwapRequest,
    SwapResult,
    Timeout,
)
from .shard import ROUTE_PREFIX, Ledger, PoolKey, ShardHost

LOCK = "lock"
NAIVE = "naive"


class RouteError(ValueError):
    pass


@dataclass(frozen=True)
class Hop:
    shard: str
    pair: tuple[str, str]
    direction: Direction

    def __post_init__(self):
        object.__setattr__(self, "pair", tuple(self.pair))
        object.__setattr__(self, "direction", Direction(self.direction))

    @classmethod
    def paying(cls, shard: str, pair: tuple[str, str], asset_in: str) -> "Hop":
        return cls(shard, tuple(pair), Direction.paying(tuple(pair), asset_in))

    @property
    def key(self) -> PoolKey:
        return (self.shard, self.pair)

    @property
    def asset_in(self) -> str:
        return self.pair[self.direction.sides[0]]

    @property
    def asset_out(self) -> str:
        return self.pair[self.direction.sides[1]]


@dataclass(frozen=True)
class MultiSwapRequest:
    request_id: str
    user: str
    input_asset: str
    output_asset: str
    input_amount: Amount
    min_output: Amount
    route: tuple[Hop, ...]
    timeout_ticks: int | None = None
    mode: str = LOCK
    at: int = 0

    def __post_init__(self):
        object.__setattr__(self, "route", tuple(self.route))
        if not self.route:
            raise RouteError(f"{self.request_id}: empty route")
        if self.mode not in (LOCK, NAIVE):
            raise RouteError(f"{self.request_id}: unknown mode {self.mode!r}")
        if self.input_amount <= 0:
            raise RouteError(f"{self.request_id}: input amount must be positive")
        if self.min_output < 0:
            raise RouteError(f"{self.request_id}: negative minimum output")
        if self.route[0].asset_in != self.input_asset:
            raise RouteError(f"{self.request_id}: route starts with {self.route[0].asset_in}, not {self.input_asset}")
        if self.route[-1].asset_out != self.output_asset:
            raise RouteError(f"{self.request_id}: route ends with {self.route[-1].asset_out}, not {self.output_asset}")
        for a, b in zip(self.route, self.route[1:]):
            if a.asset_out != b.asset_in:
                raise RouteError(f"{self.request_id}: hop {a.asset_out} does not feed {b.asset_in}")

    @property
    def route_account(self) -> str:
        return ROUTE_PREFIX + self.request_id


@dataclass(frozen=True)
class PlannedHop:
    hop: Hop
    amount_in: Amount
    projected_out: Amount
    branch: QuoteBranch


@dataclass(frozen=True)
class MultiSwapPlan:
    request: MultiSwapRequest
    hops: tuple[PlannedHop, ...]

    @property
    def projected_output(self) -> Amount:
        return self.hops[-1].projected_out

    def to_json(self) -> dict:
        return {
            "request_id": self.request.request_id,
            "hops": [
                {"shard": h.hop.shard, "pair": list(h.hop.pair), "direction": h.hop.direction.value,
                 "amount_in": fmt(h.amount_in), "projected_out": fmt(h.projected_out)}
                for h in self.hops
            ],
        }


def plan(request: MultiSwapRequest, pools: Mapping[PoolKey, Pool]) -> MultiSwapPlan:
    """Project each hop's quote against current pool state. Nothing is mutated.

    The projection is advisory: authoritative quotes come from the locks themselves.
    """
    hops = []
    amount = request.input_amount
    for hop in request.route:
        pool = pools.get(hop.key)
        if pool is None:
            raise RouteError(f"{request.request_id}: no pool {hop.pair} on shard {hop.shard}")
        out, branch = pool.preview(hop.direction, amount)
        hops.append(PlannedHop(hop, amount, out, branch))
        amount = out
    return MultiSwapPlan(request, tuple(hops))


EXECUTED = "executed"
CANCELLED = "cancelled"
REALIZED = "realized"  # naive mode: whatever the hops produced
FAILED = "failed"  # naive mode: a hop was rejected midway


@dataclass(frozen=True)
class MultiSwapResult:
    request_id: str
    status: str
    output: Amount = 0
    refund: Amount = 0
    reason: str | None = None
    hop_outputs: tuple[Amount, ...] = ()
    lock_ids: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "status": self.status,
            "output": fmt(self.output),
            "refund": fmt(self.refund),
            "reason": self.reason,
            "hop_outputs": [fmt(v) for v in self.hop_outputs],
            "lock_ids": list(self.lock_ids),
        }


@dataclass
class Coordinator:
    """Per-request state machine. Feed it replies; it returns the messages to send."""

    request: MultiSwapRequest
    decision: Decision | None = None
    reason: str | None = None
    result: MultiSwapResult | None = None
    held: dict[int, tuple[str, Amount]] = field(default_factory=dict)  # hop -> (lock_id, quoted)
    in_flight: int | None = None
    awaiting: set[int] = field(default_factory=set)
    acks: dict[int, Ack] = field(default_factory=dict)
    outputs: list[Amount] = field(default_factory=list)

    @property
    def done(self) -> bool:
        return self.result is not None

    @property
    def last_hop(self) -> int:
        return len(self.request.route) - 1

    def start(self) -> list[Payload]:
        if self.request.mode == NAIVE:
            return [self._swap_request(0, self.request.input_amount)]
        return [self._lock_request(0, self.request.input_amount)]

    def handle(self, msg: Payload) -> list[Payload]:
        if self.done:
            return []
        if isinstance(msg, LockResult):
            return self._on_lock_result(msg)
        if isinstance(msg, Ack):
            return self._on_ack(msg)
        if isinstance(msg, SwapResult):
            return self._on_swap_result(msg)
        if isinstance(msg, Timeout):
            if self.decision is None and self.request.mode == LOCK:
                return self._decide(Decision.CANCEL, "timeout")
            return []
        raise TypeError(f"coordinator cannot handle {msg!r}")

    # -- lock protocol ---------------------------------------------------------

    def _party(self, hop: int) -> tuple[str, str]:
        req = self.request
        payer = req.user if hop == 0 else req.route_account
        payee = req.user if hop == self.last_hop else req.route_account
        return payer, payee

    def _lock_request(self, hop: int, amount: Amount) -> LockRequest:
        h = self.request.route[hop]
        payer, payee = self._party(hop)
        self.in_flight = hop
        return LockRequest(
            self.request.request_id, hop, h.shard, h.pair, h.direction, amount,
            payer=payer, payee=payee, fee_on_cancel=hop == 0,
        )

    def _resolve(self, hop: int, decision: Decision) -> ResolveCommand:
        h = self.request.route[hop]
        self.awaiting.add(hop)
        return ResolveCommand(self.request.request_id, hop, h.shard, h.pair, self.held[hop][0], decision)

    def _on_lock_result(self, msg: LockResult) -> list[Payload]:
        self.in_flight = None
        if msg.lock_id is not None:
            self.held[msg.hop] = (msg.lock_id, msg.quoted)
        if self.decision is not None:
            # late result after a timeout: release it straight away
            out = [self._resolve(msg.hop, Decision.CANCEL)] if msg.lock_id is not None else []
            self._maybe_finish()
            return out
        if msg.lock_id is None:
            return self._decide(Decision.CANCEL, f"hop {msg.hop} rejected: {msg.reason}")
        if msg.hop < self.last_hop:
            return [self._lock_request(msg.hop + 1, msg.quoted)]
        if msg.quoted >= self.request.min_output:
            return self._decide(Decision.EXECUTE, None)
        return self._decide(
            Decision.CANCEL,
            f"final quote {fmt(msg.quoted)} below minimum {fmt(self.request.min_output)}",
        )

    def _decide(self, decision: Decision, reason: str | None) -> list[Payload]:
        self.decision = decision
        self.reason = reason
        out = [self._resolve(hop, decision) for hop in sorted(self.held)]
        self._maybe_finish()
        return out

    def _on_ack(self, msg: Ack) -> list[Payload]:
        self.awaiting.discard(msg.hop)
        self.acks[msg.hop] = msg
        self._maybe_finish()
        return []

    def _maybe_finish(self) -> None:
        if self.decision is None or self.awaiting or self.in_flight is not None:
            return
        req = self.request
        quotes = tuple(self.held[h][1] for h in sorted(self.held))
        lock_ids = tuple(self.held[h][0] for h in sorted(self.held))
        if self.decision is Decision.EXECUTE:
            output = self.acks[self.last_hop].payout
            self.result = MultiSwapResult(req.request_id, EXECUTED, output=output,
                                          hop_outputs=quotes, lock_ids=lock_ids)
        else:
            # nothing was ever taken from the user if the first hop never locked
            refund = self.acks[0].refund if 0 in self.acks else req.input_amount
            self.result = MultiSwapResult(req.request_id, CANCELLED, refund=refund, reason=self.reason,
                                          hop_outputs=quotes, lock_ids=lock_ids)

    # -- naive protocol --------------------------------------------------------

    def _swap_request(self, hop: int, amount: Amount) -> SwapRequest:
        h = self.request.route[hop]
        user = self.request.user
        return SwapRequest(self.request.request_id, hop, h.shard, h.pair, h.direction, amount, user, user)

    def _on_swap_result(self, msg: SwapResult) -> list[Payload]:
        req = self.request
        if msg.reason is not None:
            held = self.outputs[-1] if self.outputs else req.input_amount
            self.result = MultiSwapResult(req.request_id, FAILED, refund=held, reason=msg.reason,
                                          hop_outputs=tuple(self.outputs))
            return []
        self.outputs.append(msg.output)
        if msg.hop < self.last_hop:
            return [self._swap_request(msg.hop + 1, msg.output)]
        self.result = MultiSwapResult(req.request_id, REALIZED, output=msg.output,
                                      hop_outputs=tuple(self.outputs))
        return []


def drive(
    request: MultiSwapRequest,
    pools: Mapping[PoolKey, Pool],
    ledger: Ledger | None = None,
    host: ShardHost | None = None,
) -> MultiSwapResult:
    """Run one request to completion with instant message delivery and no other traffic."""
    plan(request, pools)  # validates every hop has a pool
    host = host or ShardHost(dict(pools), ledger)
    coord = Coordinator(request)
    queue: deque[Payload] = deque(coord.start())
    while queue:
        msg = queue.popleft()
        if msg.to_shard:
            queue.extend(host.apply(msg).replies)
        else:
            queue.extend(coord.handle(msg))
    assert coord.result is not None, "coordinator stalled"
    return coord.result

