import pytest

from shardswap.amm import Decision, Direction, QuoteBranch
from shardswap.coordinator import (
    CANCELLED,
    EXECUTED,
    Coordinator,
    Hop,
    MultiSwapRequest,
    RouteError,
    drive,
    plan,
)
from shardswap.fixed import fmt2
from shardswap.messages import LockResult, ResolveCommand, Timeout
from shardswap.oracle import chain_quote, floor_units
from shardswap.shard import Ledger

from conftest import make_pool, u

R1 = Hop.paying("1", ("A", "B"), "A")
R2 = Hop.paying("2", ("B", "C"), "B")
R3 = Hop.paying("3", ("C", "D"), "C")


def world(gamma="1"):
    return {
        ("1", ("A", "B")): make_pool("100", "10", ("A", "B"), "1", gamma),
        ("2", ("B", "C")): make_pool("200", "20", ("B", "C"), "2", gamma),
        ("3", ("C", "D")): make_pool("50", "5", ("C", "D"), "3", gamma),
    }


def request(min_out="0", route=(R1, R2), out_asset="C", amount="20", **kw):
    return MultiSwapRequest("r1", "alice", "A", out_asset, u(amount), u(min_out), route, **kw)


def test_request_validates_route():
    with pytest.raises(RouteError):
        request(route=())
    with pytest.raises(RouteError):
        request(route=(R2, R1))
    with pytest.raises(RouteError):
        request(route=(R1, R3), out_asset="D")
    with pytest.raises(RouteError):
        request(amount="0")


def test_plan_two_hops():
    p = plan(request(), world())
    assert [fmt2(h.projected_out, 3) for h in p.hops] == ["1.667", "0.165"]
    assert p.hops[1].amount_in == p.hops[0].projected_out


def test_plan_single_hop_is_quote():
    pools = world()
    req = MultiSwapRequest("r", "u", "A", "B", u(20), 0, (R1,))
    p = plan(req, pools)
    assert p.projected_output == pools[R1.key].preview(Direction.X_TO_Y, u(20))[0]
    assert p.hops[0].branch is QuoteBranch.UNLOCKED


def test_plan_three_hops_matches_chain_oracle():
    p = plan(request(route=(R1, R2, R3), out_asset="D"), world())
    want = [floor_units(v) for v in chain_quote([(100, 10), (200, 20), (50, 5)], 20)]
    assert [h.projected_out for h in p.hops] == want


def test_plan_unknown_pool():
    with pytest.raises(RouteError):
        plan(request(route=(R1, Hop.paying("9", ("B", "C"), "B"))), world())


def test_drive_executes():
    pools, ledger = world(), Ledger({"alice": {"A": u(20)}})
    res = drive(request("0.16"), pools, ledger)
    assert res.status == EXECUTED
    assert fmt2(res.output, 3) == "0.165"
    p1, p2 = pools[R1.key], pools[R2.key]
    assert (fmt2(p1.actual[0]), fmt2(p1.actual[1])) == ("120.00", "8.33")
    assert (fmt2(p2.actual[0]), fmt2(p2.actual[1], 3)) == ("201.67", "19.835")
    assert ledger.balance("alice", "C") == res.output
    assert ledger.balance("alice", "A") == 0
    assert ledger.balance("route:r1", "B") == 0


def test_drive_cancels_below_minimum():
    pools, ledger = world(), Ledger({"alice": {"A": u(20)}})
    res = drive(request("0.2"), pools, ledger)
    assert res.status == CANCELLED and res.refund == u(20)
    assert ledger.balance("alice", "A") == u(20)
    for pool in pools.values():
        assert pool.actual == pool.virtual and not pool.locks
    assert pools[R1.key].actual == [u(100), u(10)]


def test_drive_zero_minimum_always_executes():
    res = drive(request("0", route=(R1, R2, R3), out_asset="D"), world())
    assert res.status == EXECUTED and res.output > 0


def test_drive_cancel_with_fees_keeps_first_hop_fee_only():
    pools, ledger = world("0.997"), Ledger({"alice": {"A": u(20)}})
    res = drive(request("1"), pools, ledger)
    assert res.status == CANCELLED
    assert res.refund == u("19.94")
    assert pools[R1.key].actual == [u("100.06"), u(10)]
    assert pools[R2.key].actual == [u(200), u(20)]  # intermediate hop charged nothing
    assert ledger.balance("route:r1", "B") == 0


def test_hop_rejection_cancels_held_locks():
    pools = world()
    pools[R2.key].dust_floor = u(20)  # hop 2 cannot lock anything
    res = drive(request(), pools)
    assert res.status == CANCELLED and "hop 1 rejected" in res.reason
    assert res.refund == u(20)
    assert not pools[R1.key].locks and pools[R1.key].actual == pools[R1.key].virtual


def test_first_hop_rejection_refunds_untouched_input():
    res = drive(request(amount="20"), world(), Ledger({}))  # alice has no A
    assert res.status == CANCELLED and res.refund == u(20) and res.lock_ids == ()


def test_timeout_cancels_and_releases_late_lock():
    coord = Coordinator(request(timeout_ticks=5))
    first = coord.start()[0]
    assert first.hop == 0
    assert coord.handle(Timeout("r1")) == []  # lock still in flight
    assert coord.decision is Decision.CANCEL and not coord.done
    out = coord.handle(LockResult("r1", 0, "1", "1:AB:0", u("1.67")))
    assert [type(m) for m in out] == [ResolveCommand] and out[0].decision is Decision.CANCEL
    assert not coord.done
