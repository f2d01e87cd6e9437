"""Protocol payloads exchanged between coordinators and shards."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .amm import Decision, Direction
from .fixed import fmt

COORDINATOR = "coordinator"

_AMOUNT = {"amount": True}


def _amount():
    return field(metadata=_AMOUNT)


class Payload:
    """Mixin: JSON form with amounts as canonical decimal strings."""

    to_shard = False

    @property
    def target(self) -> str:
        return self.shard if self.to_shard else COORDINATOR

    def to_json(self) -> dict:
        out = {"type": type(self).__name__}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.metadata.get("amount"):
                v = fmt(v)
            elif isinstance(v, (Direction, Decision)):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


@dataclass(frozen=True)
class Submit(Payload):
    request_id: str


@dataclass(frozen=True)
class Timeout(Payload):
    request_id: str


@dataclass(frozen=True)
class LockRequest(Payload):
    request_id: str
    hop: int
    shard: str
    pair: tuple[str, str]
    direction: Direction
    amount: int = _amount()
    payer: str = ""
    payee: str = ""
    fee_on_cancel: bool = True
    to_shard = True


@dataclass(frozen=True)
class LockResult(Payload):
    request_id: str
    hop: int
    shard: str
    lock_id: str | None
    quoted: int = _amount()
    reason: str | None = None


@dataclass(frozen=True)
class ResolveCommand(Payload):
    request_id: str
    hop: int
    shard: str
    pair: tuple[str, str]
    lock_id: str
    decision: Decision
    to_shard = True


@dataclass(frozen=True)
class Ack(Payload):
    request_id: str
    hop: int
    shard: str
    lock_id: str
    decision: Decision
    payout: int = _amount()
    refund: int = _amount()
    ok: bool = True


@dataclass(frozen=True)
class SwapRequest(Payload):
    """One hop of a naive (unlocked, hop-by-hop) multi-swap."""

    request_id: str
    hop: int
    shard: str
    pair: tuple[str, str]
    direction: Direction
    amount: int = _amount()
    payer: str = ""
    payee: str = ""
    to_shard = True


@dataclass(frozen=True)
class SwapResult(Payload):
    request_id: str
    hop: int
    shard: str
    output: int = _amount()
    reason: str | None = None


@dataclass(frozen=True)
class UserInstantSwap(Payload):
    """Background traffic: a plain instant swap injected on a shard."""

    user: str
    shard: str
    pair: tuple[str, str]
    direction: Direction
    amount: int = _amount()
    to_shard = True
