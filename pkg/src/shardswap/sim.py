"""Deterministic discrete-event simulation of shards, coordinators and background traffic.

Time is an integer tick. Every message takes a latency drawn from a keyed hash
of (seed, link, per-link message count), so identical inputs replay
identically on any platform. Events at the same tick fire in enqueue order.
"""
from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .amm import DEFAULT_DUST_FLOOR, Direction, FeePolicy, Pool
from .coordinator import Coordinator, MultiSwapRequest, MultiSwapResult, RouteError, plan
from .fixed import SCALE, Amount
from .messages import COORDINATOR, Payload, Submit, Timeout, UserInstantSwap
from .shard import Ledger, PoolKey, ShardHost, asset_totals


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Latency:
    min: int = 1
    max: int = 1

    def __post_init__(self):
        if not 0 <= self.min <= self.max:
            raise ConfigError(f"bad latency range [{self.min}, {self.max}]")


@dataclass(frozen=True)
class PoolSpec:
    shard: str
    pair: tuple[str, str]
    reserves: tuple[Amount, Amount]
    gamma: int | None = None


@dataclass(frozen=True)
class BackgroundSwap:
    at: int
    user: str
    shard: str
    pair: tuple[str, str]
    direction: Direction
    amount: Amount


@dataclass(frozen=True)
class SimConfig:
    pools: tuple[PoolSpec, ...]
    seed: int = 0
    latency: Latency = Latency()
    gamma: int = SCALE
    dust_floor: Amount = DEFAULT_DUST_FLOOR
    background: tuple[BackgroundSwap, ...] = ()
    # None: every user is funded with exactly what their swaps spend
    balances: dict[str, dict[str, Amount]] | None = None

    @property
    def shards(self) -> list[str]:
        return list(dict.fromkeys(p.shard for p in self.pools))


@dataclass(order=True)
class ShardEvent:
    at: int
    seq: int
    target: str = field(compare=False)
    payload: Payload = field(compare=False)


@dataclass
class Trace:
    records: list[dict]
    results: dict[str, MultiSwapResult]
    pools: dict[PoolKey, Pool]
    ledger: Ledger

    def lines(self) -> list[str]:
        return [json.dumps(r, sort_keys=True, separators=(",", ":")) for r in self.records]

    def write(self, path: str | Path) -> None:
        text = "".join(line + "\n" for line in self.lines())
        Path(path).write_text(text)

    def pool(self, shard: str, pair: Iterable[str]) -> Pool:
        return self.pools[(shard, tuple(pair))]


class Simulation:
    def __init__(self, config: SimConfig, requests: Iterable[MultiSwapRequest] = ()):
        self.config = config
        self.requests = list(requests)
        self.now = 0
        self._queue: list[ShardEvent] = []
        self._seq = 0
        self._link_counts: dict[tuple[str, str], int] = {}
        self.records: list[dict] = []
        self.results: dict[str, MultiSwapResult] = {}
        self.coordinators: dict[str, Coordinator] = {}

        self.pools: dict[PoolKey, Pool] = {}
        for spec in config.pools:
            key = (spec.shard, tuple(spec.pair))
            if key in self.pools:
                raise ConfigError(f"duplicate pool {spec.pair} on shard {spec.shard}")
            gamma = spec.gamma if spec.gamma is not None else config.gamma
            try:
                self.pools[key] = Pool(spec.pair, spec.reserves, shard=spec.shard,
                                       fee=FeePolicy(gamma), dust_floor=config.dust_floor)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        self.ledger = Ledger(config.balances if config.balances is not None else self._auto_fund())
        self.hosts = {
            shard: ShardHost({k: p for k, p in self.pools.items() if k[0] == shard}, self.ledger)
            for shard in config.shards
        }

        seen = set()
        for req in self.requests:
            if req.request_id in seen:
                raise ConfigError(f"duplicate request id {req.request_id}")
            seen.add(req.request_id)
            plan(req, self.pools)  # raises RouteError on an unroutable request
            self.coordinators[req.request_id] = Coordinator(req)
            self._push(req.at, COORDINATOR, Submit(req.request_id))
            if req.timeout_ticks is not None:
                self._push(req.at + req.timeout_ticks, COORDINATOR, Timeout(req.request_id))
        for bg in config.background:
            if (bg.shard, tuple(bg.pair)) not in self.pools:
                raise RouteError(f"background swap targets missing pool {bg.pair} on {bg.shard}")
            self._push(bg.at, bg.shard, UserInstantSwap(bg.user, bg.shard, tuple(bg.pair), bg.direction, bg.amount))

    def _auto_fund(self) -> dict[str, dict[str, Amount]]:
        funds: dict[str, dict[str, Amount]] = {}
        for req in self.requests:
            held = funds.setdefault(req.user, {})
            held[req.input_asset] = held.get(req.input_asset, 0) + req.input_amount
        for bg in self.config.background:
            asset = bg.pair[bg.direction.sides[0]]
            held = funds.setdefault(bg.user, {})
            held[asset] = held.get(asset, 0) + bg.amount
        return funds

    # -- queue -----------------------------------------------------------------

    def _push(self, at: int, target: str, payload: Payload) -> None:
        heapq.heappush(self._queue, ShardEvent(at, self._seq, target, payload))
        self._seq += 1

    def latency(self, src: str, dst: str) -> int:
        lo, hi = self.config.latency.min, self.config.latency.max
        n = self._link_counts.get((src, dst), 0)
        self._link_counts[(src, dst)] = n + 1
        if lo == hi:
            return lo
        digest = hashlib.blake2b(f"{self.config.seed}|{src}|{dst}|{n}".encode(), digest_size=8).digest()
        return lo + int.from_bytes(digest, "big") % (hi - lo + 1)

    def _send(self, src: str, msgs: Iterable[Payload]) -> None:
        for msg in msgs:
            dst = msg.target
            self._push(self.now + self.latency(src, dst), dst, msg)

    @property
    def quiescent(self) -> bool:
        return not self._queue

    def step(self) -> ShardEvent | None:
        """Pop and apply the next event; None once nothing is left."""
        if not self._queue:
            return None
        ev = heapq.heappop(self._queue)
        self.now = ev.at
        if ev.target == COORDINATOR:
            self._coordinate(ev)
        else:
            applied = self.hosts[ev.target].apply(ev.payload, now=self.now)
            self._record(ev, applied.kind, applied.pool.to_json() if applied.pool else None)
            self._send(ev.target, applied.replies)
        return ev

    def _coordinate(self, ev: ShardEvent) -> None:
        msg = ev.payload
        coord = self.coordinators[msg.request_id]
        was_decided = coord.decision
        if isinstance(msg, Submit):
            self._record(ev, "submit", None, plan=plan(coord.request, self.pools).to_json())
            out = coord.start()
        else:
            out = coord.handle(msg)
            self._record(ev, _kind(msg), None)
        if coord.decision is not None and was_decided is None:
            self._record(ev, "decision", None, decision=coord.decision.value, reason=coord.reason)
        if coord.done and msg.request_id not in self.results:
            self.results[msg.request_id] = coord.result
            self._record(ev, "result", None, result=coord.result.to_json())
        self._send(COORDINATOR, out)

    def _record(self, ev: ShardEvent, kind: str, pool: dict | None, **extra) -> None:
        rec = {
            "tick": ev.at,
            "seq": ev.seq,
            "shard": ev.target,
            "kind": kind,
            "payload": ev.payload.to_json(),
            "pool_after": pool,
        }
        rec.update(extra)
        self.records.append(rec)

    def run(self) -> Trace:
        while self.step() is not None:
            pass
        return self.trace()

    def trace(self) -> Trace:
        return Trace(self.records, self.results, self.pools, self.ledger)

    def totals(self) -> dict[str, Amount]:
        return asset_totals(self.pools.values(), self.ledger)


def _kind(msg: Payload) -> str:
    name = type(msg).__name__
    return "".join("_" + c.lower() if c.isupper() else c for c in name).lstrip("_")


def run(config: SimConfig, requests: Iterable[MultiSwapRequest] = ()) -> Trace:
    return Simulation(config, requests).run()
