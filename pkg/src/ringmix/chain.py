"""Coins, ring signatures, ordered RS sets and the on-disk chain trace."""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import TraceIntegrityError, TraceParseError

__all__ = [
    "Coin",
    "RingSignature",
    "RelatedRsSet",
    "Block",
    "ChainTrace",
    "load_trace",
    "save_trace",
    "trace_from_dict",
    "trace_to_dict",
    "related_rs_set",
]


@dataclass(frozen=True)
class Coin:
    coin_id: str
    tx_id: str

    def __post_init__(self):
        if not self.coin_id:
            raise TraceIntegrityError("empty coin_id")
        if not self.tx_id:
            raise TraceIntegrityError(f"coin {self.coin_id} has an empty tx_id")


@dataclass(frozen=True)
class RingSignature:
    rs_id: str
    members: frozenset
    order_index: int

    def __post_init__(self):
        if not isinstance(self.members, frozenset):
            object.__setattr__(self, "members", frozenset(self.members))
        if not self.members:
            raise TraceIntegrityError(f"ring {self.rs_id} has no members")
        if self.order_index < 0:
            raise TraceIntegrityError(f"ring {self.rs_id} has a negative order_index")

    def __len__(self):
        return len(self.members)

    def sorted_members(self) -> list[str]:
        return sorted(self.members)


@dataclass(frozen=True)
class RelatedRsSet:
    """Ring signatures in timestamp order, indexed 1..m."""

    rs_list: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rs_list", tuple(self.rs_list))
        for expected, rs in enumerate(self.rs_list, start=1):
            if rs.order_index != expected:
                raise TraceIntegrityError(
                    f"order_index must run 1..m without gaps; got {rs.order_index} at position {expected}"
                )

    @classmethod
    def from_members(cls, member_lists: Iterable[Iterable[str]], prefix: str = "r") -> "RelatedRsSet":
        return cls(tuple(
            RingSignature(f"{prefix}{k}", frozenset(members), k)
            for k, members in enumerate(member_lists, start=1)
        ))

    def __len__(self):
        return len(self.rs_list)

    def __iter__(self) -> Iterator[RingSignature]:
        return iter(self.rs_list)

    def __getitem__(self, order: int) -> RingSignature:
        """Look up by 1-based order index."""
        if not 1 <= order <= len(self.rs_list):
            raise IndexError(f"no ring with order {order}")
        return self.rs_list[order - 1]

    def prefix(self, count: int) -> "RelatedRsSet":
        return RelatedRsSet(self.rs_list[:count])

    def append(self, members: Iterable[str], rs_id: str | None = None) -> "RelatedRsSet":
        order = len(self.rs_list) + 1
        rs = RingSignature(rs_id or f"r{order}", frozenset(members), order)
        return RelatedRsSet(self.rs_list + (rs,))

    def coins(self) -> frozenset:
        out = set()
        for rs in self.rs_list:
            out |= rs.members
        return frozenset(out)

    def by_id(self, rs_id: str) -> RingSignature:
        for rs in self.rs_list:
            if rs.rs_id == rs_id:
                return rs
        raise KeyError(rs_id)


@dataclass(frozen=True)
class Block:
    height: int
    tx_outputs: tuple = ()
    ring_signatures: tuple = ()

    def coin_ids(self) -> list[str]:
        return [c for tx in self.tx_outputs for c in tx]


@dataclass(frozen=True)
class ChainTrace:
    coins: tuple
    blocks: tuple
    _coin_tx: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coins", tuple(self.coins))
        object.__setattr__(self, "blocks", tuple(self.blocks))
        coin_tx = {}
        for coin in self.coins:
            if coin.coin_id in coin_tx:
                raise TraceIntegrityError(f"duplicate coin_id {coin.coin_id}")
            coin_tx[coin.coin_id] = coin.tx_id
        object.__setattr__(self, "_coin_tx", coin_tx)

        placed = set()
        last_height = None
        rs_ids, orders = set(), set()
        for block in self.blocks:
            if last_height is not None and block.height <= last_height:
                raise TraceIntegrityError(f"block heights not strictly increasing at {block.height}")
            last_height = block.height
            for outputs in block.tx_outputs:
                txs = set()
                for cid in outputs:
                    if cid not in coin_tx:
                        raise TraceIntegrityError(f"block {block.height} outputs unknown coin {cid}")
                    if cid in placed:
                        raise TraceIntegrityError(f"coin {cid} is output more than once")
                    placed.add(cid)
                    txs.add(coin_tx[cid])
                if len(txs) > 1:
                    raise TraceIntegrityError(f"one tx output list mixes tx ids {sorted(txs)}")
            for rs in block.ring_signatures:
                if rs.rs_id in rs_ids:
                    raise TraceIntegrityError(f"duplicate rs_id {rs.rs_id}")
                if rs.order_index in orders:
                    raise TraceIntegrityError(f"duplicate order_index {rs.order_index}")
                rs_ids.add(rs.rs_id)
                orders.add(rs.order_index)
                missing = sorted(rs.members - coin_tx.keys())
                if missing:
                    raise TraceIntegrityError(f"ring {rs.rs_id} references unknown coin {missing[0]}")
        unplaced = sorted(coin_tx.keys() - placed)
        if unplaced:
            raise TraceIntegrityError(f"coin {unplaced[0]} is not output by any block")

    @property
    def coin_tx(self) -> Mapping[str, str]:
        return self._coin_tx

    def ring_signatures(self) -> list[RingSignature]:
        """All rings of the trace sorted by timestamp order."""
        rings = [rs for b in self.blocks for rs in b.ring_signatures]
        return sorted(rings, key=lambda rs: rs.order_index)

    def tx_ids(self) -> set[str]:
        return set(self._coin_tx.values())


def related_rs_set(trace: ChainTrace, universe: Iterable[str]) -> RelatedRsSet:
    """Rings touching `universe`, re-indexed 1..m in timestamp order."""
    universe = frozenset(universe)
    unknown = universe - trace.coin_tx.keys()
    if unknown:
        raise TraceIntegrityError(f"universe contains unknown coin {sorted(unknown)[0]}")
    picked = [rs for rs in trace.ring_signatures() if rs.members & universe]
    return RelatedRsSet(tuple(
        RingSignature(rs.rs_id, rs.members, k) for k, rs in enumerate(picked, start=1)
    ))


def _require(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise TraceParseError(f"missing key '{key}' in {where}")
    value = obj[key]
    if not isinstance(value, kind):
        raise TraceParseError(f"'{key}' in {where} has the wrong type")
    return value


def trace_from_dict(doc) -> ChainTrace:
    coins = []
    for i, c in enumerate(_require(doc, "coins", list, "document")):
        coins.append(Coin(_require(c, "coin_id", str, f"coins[{i}]"), _require(c, "tx_id", str, f"coins[{i}]")))
    blocks = []
    for i, b in enumerate(_require(doc, "blocks", list, "document")):
        where = f"blocks[{i}]"
        height = _require(b, "height", int, where)
        outputs = []
        for tx in _require(b, "tx_outputs", list, where):
            if not isinstance(tx, list) or not all(isinstance(c, str) for c in tx):
                raise TraceParseError(f"tx_outputs in {where} must be lists of coin ids")
            outputs.append(tuple(tx))
        rings = []
        for j, r in enumerate(b.get("ring_signatures", []) or []):
            rw = f"{where}.ring_signatures[{j}]"
            members = _require(r, "members", list, rw)
            if len(set(members)) != len(members):
                raise TraceIntegrityError(f"ring {r.get('rs_id')} lists a coin twice")
            if not all(isinstance(m, str) for m in members):
                raise TraceParseError(f"members in {rw} must be strings")
            rings.append(RingSignature(
                _require(r, "rs_id", str, rw), frozenset(members), _require(r, "order_index", int, rw)
            ))
        blocks.append(Block(height, tuple(outputs), tuple(rings)))
    return ChainTrace(tuple(coins), tuple(blocks))


def trace_to_dict(trace: ChainTrace) -> dict:
    return {
        "coins": [{"coin_id": c.coin_id, "tx_id": c.tx_id} for c in trace.coins],
        "blocks": [
            {
                "height": b.height,
                "tx_outputs": [list(tx) for tx in b.tx_outputs],
                "ring_signatures": [
                    {"rs_id": rs.rs_id, "members": rs.sorted_members(), "order_index": rs.order_index}
                    for rs in b.ring_signatures
                ],
            }
            for b in trace.blocks
        ],
    }


def load_trace(path) -> ChainTrace:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TraceParseError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix in (".yaml", ".yml"):
            import yaml
            doc = yaml.safe_load(text)
        else:
            doc = json.loads(text)
    except Exception as exc:  # json and yaml raise different types
        raise TraceParseError(f"{path}: {exc}") from exc
    return trace_from_dict(doc)


def write_atomic(path, text: str):
    """Write via a temp file so that a failure never leaves a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_trace(trace: ChainTrace, path):
    write_atomic(path, json.dumps(trace_to_dict(trace), indent=1) + "\n")
