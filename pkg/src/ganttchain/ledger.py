"""Hash-chained block store and versioned key-value world state.

A peer simulates contract calls against a snapshot (endorsement), producing
signed transactions with read/write sets. An ordering service batches those
into blocks; `Peer.validate_and_commit` then applies each block with a
multi-version concurrency check: a transaction is valid only if every key it
read still carries the version it observed. Invalid transactions stay in the
block (flagged) but never touch state, so replaying the chain on a fresh
peer always reproduces the same state.
"""

import secrets
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional, Sequence

from .encoding import ZERO_HASH, canonical_dumps, digest_obj, sha256_hex
from .errors import ContractError, PermissionDenied, ValidationError

# A state version is the (block number, tx index) of the committing write;
# None stands for "key absent".
Version = Optional[tuple[int, int]]

GENESIS_TIMESTAMP = 0


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class Transaction:
    tx_id: str
    creator: dict  # {"userName": ..., "org": ...}
    function: str
    args: list[str]
    read_set: list[tuple[str, Version]]
    write_set: list[tuple[str, Optional[str]]]  # value None is a delete marker
    signature: str
    timestamp: int

    def signing_payload(self) -> bytes:
        doc = self.to_dict()
        doc.pop("signature")
        return canonical_dumps(doc).encode("utf-8")

    def to_dict(self) -> dict:
        return {
            "txId": self.tx_id,
            "creator": dict(self.creator),
            "function": self.function,
            "args": list(self.args),
            "readSet": [[k, list(v) if v is not None else None] for k, v in self.read_set],
            "writeSet": [[k, v] for k, v in self.write_set],
            "signature": self.signature,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Transaction":
        return cls(
            tx_id=doc["txId"],
            creator=dict(doc["creator"]),
            function=doc["function"],
            args=list(doc["args"]),
            read_set=[(k, tuple(v) if v is not None else None) for k, v in doc["readSet"]],
            write_set=[(k, v) for k, v in doc["writeSet"]],
            signature=doc["signature"],
            timestamp=doc["timestamp"],
        )


def compute_data_hash(transactions: Sequence[Transaction]) -> str:
    return digest_obj([tx.to_dict() for tx in transactions])


@dataclass
class Block:
    number: int
    prev_hash: str
    data_hash: str
    transactions: list[Transaction]
    timestamp: int
    nonce: int = 0
    header_hash: str = ""

    def seal(self) -> "Block":
        """Recompute and store the header digest for the current fields."""
        self.header_hash = compute_header_hash(self)
        return self

    def to_dict(self) -> dict:
        return {
            "number": self.number,
            "prevHash": self.prev_hash,
            "dataHash": self.data_hash,
            "transactions": [tx.to_dict() for tx in self.transactions],
            "timestamp": self.timestamp,
            "nonce": self.nonce,
            "headerHash": self.header_hash,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Block":
        return cls(
            number=doc["number"],
            prev_hash=doc["prevHash"],
            data_hash=doc["dataHash"],
            transactions=[Transaction.from_dict(t) for t in doc["transactions"]],
            timestamp=doc["timestamp"],
            nonce=doc.get("nonce", 0),
            header_hash=doc.get("headerHash", ""),
        )


def header_preimage(number: int, prev_hash: str, data_hash: str, timestamp: int, nonce: int) -> str:
    return canonical_dumps(
        {
            "dataHash": data_hash,
            "nonce": nonce,
            "number": number,
            "prevHash": prev_hash,
            "timestamp": timestamp,
        }
    )


def header_preimage_parts(number: int, prev_hash: str, data_hash: str, timestamp: int) -> tuple[str, str]:
    """Prefix/suffix around the nonce digits, for tight mining loops.

    prefix + str(nonce) + suffix must equal `header_preimage` for any nonce.
    """
    prefix = f'{{"dataHash":"{data_hash}","nonce":'
    suffix = f',"number":{number},"prevHash":"{prev_hash}","timestamp":{timestamp}}}'
    return prefix, suffix


def compute_header_hash(block: Block) -> str:
    """Digest over (number, prevHash, dataHash, timestamp, nonce); any
    transaction change propagates through dataHash."""
    return sha256_hex(
        header_preimage(block.number, block.prev_hash, block.data_hash, block.timestamp, block.nonce)
    )


def build_block(number: int, prev_hash: str, transactions: Sequence[Transaction], timestamp: Optional[int] = None) -> Block:
    block = Block(
        number=number,
        prev_hash=prev_hash,
        data_hash=compute_data_hash(transactions),
        transactions=list(transactions),
        timestamp=now_ms() if timestamp is None else timestamp,
    )
    return block.seal()


def make_genesis() -> Block:
    """Block 0: all-zero prevHash, no transactions, fixed timestamp so every
    channel starts from the same digest."""
    return build_block(0, ZERO_HASH, [], timestamp=GENESIS_TIMESTAMP)


class WorldState:
    """Current key-value view: key -> (serialized record, version)."""

    def __init__(self) -> None:
        self.entries: dict[str, tuple[str, tuple[int, int]]] = {}

    def get(self, key: str) -> Optional[str]:
        entry = self.entries.get(key)
        return entry[0] if entry else None

    def version(self, key: str) -> Version:
        entry = self.entries.get(key)
        return entry[1] if entry else None

    def apply(self, key: str, value: Optional[str], version: tuple[int, int]) -> None:
        if value is None:
            self.entries.pop(key, None)
        else:
            self.entries[key] = (value, version)

    def snapshot(self) -> dict[str, tuple[str, tuple[int, int]]]:
        return dict(self.entries)

    def state_hash(self) -> str:
        return digest_obj(
            {k: [v, list(ver)] for k, (v, ver) in self.entries.items()}
        )


class SimulationContext:
    """get/put/delState surface handed to contract code during endorsement.

    Reads hit a frozen snapshot and are recorded with the version observed;
    writes go to a buffer (read-your-writes, last write per key wins) and
    never touch the live state.
    """

    def __init__(self, snapshot: Mapping[str, tuple[str, tuple[int, int]]]):
        self._snapshot = snapshot
        self.reads: list[tuple[str, Version]] = []
        self._read_keys: set[str] = set()
        self._writes: dict[str, Optional[str]] = {}

    def get_state(self, key: str) -> Optional[str]:
        if key in self._writes:
            return self._writes[key]
        entry = self._snapshot.get(key)
        if key not in self._read_keys:
            self._read_keys.add(key)
            self.reads.append((key, entry[1] if entry else None))
        return entry[0] if entry else None

    def put_state(self, key: str, value: str) -> None:
        if not isinstance(value, str):
            raise ContractError("validation", "world-state values must be serialized strings")
        self._writes[key] = value

    def del_state(self, key: str) -> None:
        self._writes[key] = None

    @property
    def writes(self) -> list[tuple[str, Optional[str]]]:
        return list(self._writes.items())


class ChainMismatch(ValidationError):
    """Delivered block does not extend this peer's chain."""


# Resolves a creator {"userName","org"} to a verifier object exposing
# verify(signature_bytes, payload_bytes) that raises on mismatch.
KeyResolver = Callable[[Mapping], Any]


class Peer:
    """One organization's node: full block store plus derived world state."""

    def __init__(
        self,
        org: str,
        contract,
        authenticator: Optional[Callable[[Any], bool]] = None,
        clock: Callable[[], int] = now_ms,
    ):
        self.org = org
        self.contract = contract
        self.authenticator = authenticator
        self.clock = clock
        self.blocks: list[Block] = []
        self.state = WorldState()
        self.valid_flags: dict[int, list[bool]] = {}
        self._lock = threading.RLock()

    # -- endorsement ---------------------------------------------------

    def simulate(self, function: str, args: Sequence[str], creator) -> tuple[Transaction, Any]:
        """Run a contract function against a snapshot and return the signed
        transaction plus the function's return value. State is not changed."""
        if self.authenticator is not None and not self.authenticator(creator):
            raise PermissionDenied(f"creator {creator.user_name!r} is not an enrolled identity")
        with self._lock:
            snapshot = self.state.snapshot()
        ctx = SimulationContext(snapshot)
        result = self.contract.invoke(ctx, function, list(args))
        tx = Transaction(
            tx_id=secrets.token_hex(16),
            creator={"userName": creator.user_name, "org": creator.org},
            function=function,
            args=[str(a) for a in args],
            read_set=ctx.reads,
            write_set=ctx.writes,
            signature="",
            timestamp=self.clock(),
        )
        tx.signature = creator.sign(tx.signing_payload())
        return tx, result

    # -- commit --------------------------------------------------------

    def commit_genesis(self, genesis: Block) -> None:
        with self._lock:
            if self.blocks:
                raise ChainMismatch("genesis on a non-empty ledger")
            if genesis.number != 0 or genesis.prev_hash != ZERO_HASH:
                raise ChainMismatch("malformed genesis block")
            self.blocks.append(genesis)
            self.valid_flags[0] = [True] * len(genesis.transactions)

    def validate_and_commit(self, block: Block, key_resolver: Optional[KeyResolver] = None) -> list[bool]:
        """MVCC-validate and apply a delivered block.

        Transactions validate in order against state-including earlier valid
        transactions of the same block, so two writers of one key can never
        both commit. Returns the per-transaction validity flags.
        """
        with self._lock:
            if not self.blocks:
                raise ChainMismatch("commit before genesis")
            tip = self.blocks[-1]
            if block.number != tip.number + 1 or block.prev_hash != tip.header_hash:
                raise ChainMismatch(
                    f"block {block.number} does not extend chain at {tip.number}"
                )
            if compute_data_hash(block.transactions) != block.data_hash:
                raise ChainMismatch(f"block {block.number} dataHash mismatch")

            flags: list[bool] = []
            for index, tx in enumerate(block.transactions):
                flags.append(self._validate_tx(tx, key_resolver))
                if flags[-1]:
                    for key, value in tx.write_set:
                        self.state.apply(key, value, (block.number, index))
            self.blocks.append(block)
            self.valid_flags[block.number] = flags
            return flags

    def _validate_tx(self, tx: Transaction, key_resolver: Optional[KeyResolver]) -> bool:
        if key_resolver is not None:
            try:
                verifier = key_resolver(tx.creator)
                verifier.verify(bytes.fromhex(tx.signature), tx.signing_payload())
            except Exception:
                return False
        for key, version in tx.read_set:
            if self.state.version(key) != version:
                return False
        return True

    # -- verification and export ---------------------------------------

    def validate_chain(self) -> bool:
        """True iff every stored digest matches its contents and every block
        links to its predecessor's header hash. A truncated prefix is still a
        valid chain; tampering with any field of any block is not."""
        with self._lock:
            blocks = list(self.blocks)
        for i, block in enumerate(blocks):
            try:
                if compute_data_hash(block.transactions) != block.data_hash:
                    return False
                if compute_header_hash(block) != block.header_hash:
                    return False
            except Exception:
                return False
            if i == 0:
                if block.number != 0 or block.prev_hash != ZERO_HASH:
                    return False
            else:
                prev = blocks[i - 1]
                if block.number != prev.number + 1 or block.prev_hash != prev.header_hash:
                    return False
        return True

    def height(self) -> int:
        with self._lock:
            return len(self.blocks)

    def state_hash(self) -> str:
        with self._lock:
            return self.state.state_hash()

    def export_snapshot(self) -> dict:
        """Single JSON document with the ordered blocks and derived state."""
        with self._lock:
            return {
                "org": self.org,
                "blocks": [b.to_dict() for b in self.blocks],
                "state": {
                    key: {"value": value, "version": list(version)}
                    for key, (value, version) in self.state.entries.items()
                },
                "validFlags": {str(n): flags for n, flags in self.valid_flags.items()},
            }

    @classmethod
    def import_snapshot(cls, doc: Mapping, contract, key_resolver: Optional[KeyResolver] = None) -> "Peer":
        """Rebuild a peer by replaying the snapshot's blocks from genesis;
        raises if the replayed state disagrees with the snapshot's."""
        peer = cls(doc["org"], contract)
        blocks = [Block.from_dict(b) for b in doc["blocks"]]
        if not blocks:
            return peer
        peer.commit_genesis(blocks[0])
        for block in blocks[1:]:
            peer.validate_and_commit(block, key_resolver)
        replayed = {
            key: {"value": value, "version": list(version)}
            for key, (value, version) in peer.state.entries.items()
        }
        if replayed != doc["state"]:
            raise ValidationError("snapshot state does not match replay of its blocks")
        return peer
