"""Scenario files: JSON documents holding a simulation config, requests and expected outcomes."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .amm import Direction
from .coordinator import LOCK, NAIVE, Hop, MultiSwapRequest, RouteError
from .fixed import Amount, fmt, to_units
from .sim import BackgroundSwap, Latency, PoolSpec, SimConfig, Trace

AMOUNT = {"type": "string", "pattern": r"^[0-9]+(\.[0-9]+)?$"}
PAIR = {"type": "array", "items": {"type": "string", "minLength": 1}, "minItems": 2, "maxItems": 2}
TICK = {"type": "integer", "minimum": 0}
DIRECTION = {"enum": [d.value for d in Direction]}


def _obj(props: dict, required: list[str]) -> dict:
    return {"type": "object", "properties": props, "required": required, "additionalProperties": False}


HOP = _obj({"shard": {"type": "string"}, "pair": PAIR, "direction": DIRECTION}, ["shard", "pair"])

SCHEMA = _obj(
    {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "seed": {"type": "integer"},
        "gamma": AMOUNT,
        "dust_floor": AMOUNT,
        "latency": _obj({"min": TICK, "max": TICK}, ["min", "max"]),
        "shards": {
            "type": "array",
            "items": _obj(
                {
                    "id": {"type": "string", "minLength": 1},
                    "pools": {
                        "type": "array",
                        "items": _obj(
                            {"pair": PAIR, "reserves": {"type": "array", "items": AMOUNT, "minItems": 2, "maxItems": 2},
                             "gamma": AMOUNT},
                            ["pair", "reserves"],
                        ),
                    },
                },
                ["id", "pools"],
            ),
        },
        "balances": {
            "type": "object",
            "additionalProperties": {"type": "object", "additionalProperties": AMOUNT},
        },
        "background": {
            "type": "array",
            "items": _obj(
                {"at": TICK, "user": {"type": "string"}, "shard": {"type": "string"}, "pair": PAIR,
                 "direction": DIRECTION, "amount": AMOUNT},
                ["at", "user", "shard", "pair", "direction", "amount"],
            ),
        },
        "requests": {
            "type": "array",
            "items": _obj(
                {
                    "id": {"type": "string", "minLength": 1},
                    "user": {"type": "string", "minLength": 1},
                    "at": TICK,
                    "input_asset": {"type": "string"},
                    "output_asset": {"type": "string"},
                    "input_amount": AMOUNT,
                    "min_output": AMOUNT,
                    "route": {"type": "array", "items": HOP, "minItems": 1},
                    "timeout_ticks": {"type": ["integer", "null"], "minimum": 0},
                    "mode": {"enum": [LOCK, NAIVE]},
                },
                ["id", "user", "input_asset", "output_asset", "input_amount", "route"],
            ),
        },
        "expect": _obj(
            {
                "results": {
                    "type": "object",
                    "additionalProperties": _obj(
                        {"status": {"type": "string"}, "output": AMOUNT, "refund": AMOUNT, "tol": AMOUNT}, []
                    ),
                },
                "pools": {
                    "type": "array",
                    "items": _obj(
                        {"shard": {"type": "string"}, "pair": PAIR,
                         "actual": {"type": "array", "items": AMOUNT, "minItems": 2, "maxItems": 2},
                         "virtual": {"type": "array", "items": AMOUNT, "minItems": 2, "maxItems": 2},
                         "tol": AMOUNT},
                        ["shard", "pair"],
                    ),
                },
                "balances": {
                    "type": "array",
                    "items": _obj(
                        {"account": {"type": "string"}, "asset": {"type": "string"}, "amount": AMOUNT, "tol": AMOUNT},
                        ["account", "asset", "amount"],
                    ),
                },
                "curves_converged": {"type": "boolean"},
            },
            [],
        ),
    },
    ["shards"],
)


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    config: SimConfig
    requests: list[MultiSwapRequest]
    expect: dict[str, Any] = field(default_factory=dict)

    def with_seed(self, seed: int | None) -> "Scenario":
        if seed is None:
            return self
        return replace(self, config=replace(self.config, seed=seed))


def bundled() -> dict[str, Path]:
    root = resources.files("shardswap") / "scenarios"
    return {Path(str(p)).stem: Path(str(p)) for p in root.iterdir() if str(p).endswith(".json")}


def resolve_path(ref: str | Path) -> Path:
    """A filesystem path, or the name of a bundled scenario."""
    path = Path(ref)
    if path.exists():
        return path
    found = bundled().get(Path(str(ref)).stem)
    if found is None:
        raise ScenarioError(f"no such scenario file or bundled scenario: {ref}")
    return found


def load(ref: str | Path) -> Scenario:
    path = resolve_path(ref)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    return parse(doc, default_name=path.stem)


def parse(doc: dict, default_name: str = "scenario") -> Scenario:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"schema violation at {where}: {exc.message}") from exc
    try:
        return _build(doc, default_name)
    except (RouteError, ValueError, TypeError) as exc:
        raise ScenarioError(str(exc)) from exc


def _build(doc: dict, default_name: str) -> Scenario:
    pools = []
    for shard in doc["shards"]:
        for p in shard["pools"]:
            gamma = to_units(p["gamma"]) if "gamma" in p else None
            pools.append(PoolSpec(shard["id"], tuple(p["pair"]), tuple(to_units(r) for r in p["reserves"]), gamma))
    latency = doc.get("latency", {"min": 1, "max": 1})
    balances = doc.get("balances")
    if balances is not None:
        balances = {acct: {a: to_units(v) for a, v in assets.items()} for acct, assets in balances.items()}
    config = SimConfig(
        pools=tuple(pools),
        seed=doc.get("seed", 0),
        latency=Latency(latency["min"], latency["max"]),
        gamma=to_units(doc.get("gamma", "1")),
        dust_floor=to_units(doc.get("dust_floor", "0.000001")),
        background=tuple(
            BackgroundSwap(b["at"], b["user"], b["shard"], tuple(b["pair"]), Direction(b["direction"]),
                           to_units(b["amount"]))
            for b in doc.get("background", [])
        ),
        balances=balances,
    )
    requests = []
    for r in doc.get("requests", []):
        route = []
        asset = r["input_asset"]
        for h in r["route"]:
            if "direction" in h:
                hop = Hop(h["shard"], tuple(h["pair"]), Direction(h["direction"]))
            else:
                hop = Hop.paying(h["shard"], tuple(h["pair"]), asset)
            route.append(hop)
            asset = hop.asset_out
        requests.append(
            MultiSwapRequest(
                request_id=r["id"],
                user=r["user"],
                input_asset=r["input_asset"],
                output_asset=r["output_asset"],
                input_amount=to_units(r["input_amount"]),
                min_output=to_units(r.get("min_output", "0")),
                route=tuple(route),
                timeout_ticks=r.get("timeout_ticks"),
                mode=r.get("mode", LOCK),
                at=r.get("at", 0),
            )
        )
    return Scenario(doc.get("name", default_name), config, requests, doc.get("expect", {}))


def check(scenario: Scenario, trace: Trace) -> list[str]:
    """Compare a finished run against the scenario's embedded expectations."""
    failures = []
    exp = scenario.expect

    def near(label: str, got: Amount, want: str, tol: str) -> None:
        if abs(got - to_units(want)) > to_units(tol):
            failures.append(f"{label}: got {fmt(got)}, want {want} ± {tol}")

    for rid, want in exp.get("results", {}).items():
        res = trace.results.get(rid)
        if res is None:
            failures.append(f"request {rid}: no result")
            continue
        tol = want.get("tol", "0")
        if "status" in want and res.status != want["status"]:
            failures.append(f"request {rid}: status {res.status}, want {want['status']}")
        if "output" in want:
            near(f"request {rid} output", res.output, want["output"], tol)
        if "refund" in want:
            near(f"request {rid} refund", res.refund, want["refund"], tol)

    for want in exp.get("pools", []):
        key = (want["shard"], tuple(want["pair"]))
        pool = trace.pools.get(key)
        if pool is None:
            failures.append(f"pool {key}: not found")
            continue
        tol = want.get("tol", "0")
        for curve in ("actual", "virtual"):
            if curve in want:
                got = getattr(pool, curve)
                for side in (0, 1):
                    near(f"pool {want['shard']}:{'/'.join(pool.pair)} {curve}[{pool.asset(side)}]",
                         got[side], want[curve][side], tol)

    for want in exp.get("balances", []):
        got = trace.ledger.balance(want["account"], want["asset"])
        near(f"balance {want['account']}:{want['asset']}", got, want["amount"], want.get("tol", "0"))

    if exp.get("curves_converged"):
        for pool in trace.pools.values():
            if pool.actual != pool.virtual or pool.locks:
                failures.append(f"{pool!r}: curves not converged")
    return failures
