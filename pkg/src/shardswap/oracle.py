"""Ground-truth executors used to check the lock protocol.

``atomic_execute`` is the sequential baseline: every hop applied back to back on
one global state with nobody else trading. ``naive_execute`` runs the hops as
independent instant swaps with arbitrary interference between them, which is
how a user gets stranded without locks.

``rational_quote`` / ``chain_quote`` evaluate the pricing formula with
``fractions.Fraction`` and never touch the integer kernel, so they can pin
expected values independently of it.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Mapping, Sequence

from .amm import Direction, Pool
from .coordinator import Hop, MultiSwapRequest
from .fixed import SCALE, Amount
from .shard import PoolKey

Number = Fraction | Decimal | int | str


def rational_quote(reserve_in: Number, reserve_out: Number, delta_in: Number, gamma: Number = 1) -> Fraction:
    r_in, r_out, d, g = (Fraction(v) for v in (reserve_in, reserve_out, delta_in, gamma))
    return r_out - (r_in * r_out) / (r_in + g * d)


def floor_units(value: Fraction) -> Amount:
    """Real quantity -> integer units, rounded toward zero."""
    scaled = value * SCALE
    return int(scaled)  # int() on Fraction truncates toward zero


def chain_quote(reserves: Sequence[tuple[Number, Number]], delta_in: Number, gamma: Number = 1,
                round_each_hop: bool = True) -> list[Fraction]:
    """Outputs of each hop when feeding one hop's output into the next.

    ``reserves`` lists (input-side, output-side) reserves per hop. With
    ``round_each_hop`` each output is truncated to 12 digits before it feeds the
    next hop, the way amounts physically move between shards.
    """
    outs = []
    amount = Fraction(delta_in)
    for r_in, r_out in reserves:
        out = rational_quote(r_in, r_out, amount, gamma)
        if round_each_hop:
            out = Fraction(floor_units(out), SCALE)
        outs.append(out)
        amount = out
    return outs


def _copy_pools(pools: Mapping[PoolKey, Pool]) -> dict[PoolKey, Pool]:
    return {
        key: Pool(p.pair, (p.actual[0], p.actual[1]), shard=p.shard, fee=p.fee, dust_floor=p.dust_floor)
        for key, p in pools.items()
    }


@dataclass(frozen=True)
class AtomicOutcome:
    output: Amount
    hop_outputs: tuple[Amount, ...]
    pools: dict[PoolKey, tuple[Amount, Amount]]


def atomic_execute(request: MultiSwapRequest, pools: Mapping[PoolKey, Pool]) -> AtomicOutcome:
    """Apply every hop as an instant swap on private copies of the actual reserves."""
    state = _copy_pools(pools)
    amount = request.input_amount
    outs = []
    for hop in request.route:
        amount = state[hop.key].instant_swap(hop.direction, amount).output
        outs.append(amount)
    return AtomicOutcome(amount, tuple(outs), {k: tuple(p.actual) for k, p in state.items()})


@dataclass(frozen=True)
class SetReserves:
    """Interference that overwrites a pool's reserves outright."""

    shard: str
    pair: tuple[str, str]
    reserves: tuple[Amount, Amount]


@dataclass(frozen=True)
class ForeignSwap:
    """Interference by another trader: an instant swap."""

    shard: str
    pair: tuple[str, str]
    direction: Direction
    amount: Amount


Interference = SetReserves | ForeignSwap


@dataclass(frozen=True)
class NaiveOutcome:
    output: Amount
    hop_outputs: tuple[Amount, ...]
    # what the user would recover by swapping the last intermediate holding back
    # along the route instead of taking the final hop (None for one-hop routes)
    unwind: Amount | None
    pools: dict[PoolKey, tuple[Amount, Amount]]


def naive_execute(
    request: MultiSwapRequest,
    pools: Mapping[PoolKey, Pool],
    interference: Mapping[int, Sequence[Interference]] | None = None,
) -> NaiveOutcome:
    """Run hops one by one as instant swaps, applying ``interference[k]`` after k hops."""
    state = _copy_pools(pools)
    interference = interference or {}
    amount = request.input_amount
    outs: list[Amount] = []
    unwind = None
    for k, hop in enumerate(request.route):
        for item in interference.get(k, ()):
            _interfere(state, item)
        if k == len(request.route) - 1 and k > 0:
            unwind = _swap_back(state, request.route[:k], amount)
        amount = state[hop.key].instant_swap(hop.direction, amount).output
        outs.append(amount)
    for item in interference.get(len(request.route), ()):
        _interfere(state, item)
    return NaiveOutcome(amount, tuple(outs), unwind, {k: tuple(p.actual) for k, p in state.items()})


def _interfere(state: dict[PoolKey, Pool], item: Interference) -> None:
    key = (item.shard, tuple(item.pair))
    if isinstance(item, SetReserves):
        old = state[key]
        state[key] = Pool(old.pair, item.reserves, shard=old.shard, fee=old.fee, dust_floor=old.dust_floor)
    else:
        state[key].instant_swap(item.direction, item.amount)


def _swap_back(state: dict[PoolKey, Pool], hops: Sequence[Hop], amount: Amount) -> Amount:
    # quoted on copies: the user only weighs this alternative
    scratch = _copy_pools({h.key: state[h.key] for h in hops})
    for hop in reversed(hops):
        amount = scratch[hop.key].instant_swap(hop.direction.reverse, amount).output
    return amount
