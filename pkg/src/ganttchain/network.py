"""The channel: one peer per organization, one ordering service.

Client calls endorse on the creator org's peer, go through ordering, and
are committed by every peer in the same delivery round; `invoke` returns
only after all peers hold the transaction (or raises on conflict/timeout).
Reads with an empty write set never enter ordering: their result comes
straight from the endorsement snapshot, mirroring how real platforms treat
evaluate-only transactions.

Block delivery pays a small configurable transport delay per block,
standing in for the orderer-to-peer network hop of a deployed channel; it
is what makes block count visible in throughput numbers at desk scale.
"""

import threading
import time
from typing import Any, Optional, Sequence

from .consensus import BatchConfig, PowConfig, make_orderer
from .contract import GanttContract
from .errors import ConsensusTimeout, GanttChainError, ValidationError
from .identity import IdentityRegistry
from .ledger import Block, Peer, Transaction, make_genesis, now_ms


class TransactionInvalidated(GanttChainError):
    """Committed but flagged invalid: a key read during endorsement changed
    before the transaction's block was applied (MVCC conflict)."""

    code = "consensusTimeout"


class Network:
    def __init__(
        self,
        orgs: Sequence[str],
        registry: IdentityRegistry,
        contract: Optional[GanttContract] = None,
        consensus: str = "solo",
        batch_cfg: Optional[BatchConfig] = None,
        pow_cfg: Optional[PowConfig] = None,
        raft_nodes: int = 3,
        raft_message_delay_ms: float = 25.0,
        block_delivery_delay_ms: float = 5.0,
        verify_signatures: bool = True,
        seed: Optional[int] = None,
        clock=now_ms,
    ):
        if not orgs:
            raise ValidationError("a channel needs at least one organization")
        self.registry = registry
        self.contract = contract or GanttContract()
        self.consensus = consensus
        self.block_delivery_delay_ms = block_delivery_delay_ms
        self._resolver = registry.resolve if verify_signatures else None
        self.peers = {
            org: Peer(org, self.contract, authenticator=registry.is_enrolled, clock=clock)
            for org in orgs
        }
        self.genesis = make_genesis()
        for peer in self.peers.values():
            peer.commit_genesis(self.genesis)

        self._status_lock = threading.Lock()
        self._tx_events: dict[str, threading.Event] = {}
        self._tx_valid: dict[str, bool] = {}
        self._tx_commit_perf: dict[str, float] = {}
        self.invalid_tx_count = 0

        self.orderer = make_orderer(
            consensus,
            batch_cfg or BatchConfig(),
            self._deliver,
            pow_cfg=pow_cfg,
            raft_nodes=raft_nodes,
            raft_message_delay_ms=raft_message_delay_ms,
            seed=seed,
        )
        self._started = False

    def start(self) -> None:
        if not self._started:
            self.orderer.start(self.genesis)
            self._started = True

    def stop(self) -> None:
        if self._started:
            self.orderer.stop()
            self._started = False

    def __enter__(self) -> "Network":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- delivery ---------------------------------------------------------

    def _deliver(self, block: Block) -> None:
        if self.block_delivery_delay_ms > 0:
            time.sleep(self.block_delivery_delay_ms / 1000.0)
        flags_by_org = {}
        for org, peer in self.peers.items():
            flags_by_org[org] = peer.validate_and_commit(block, self._resolver)
        reference = next(iter(flags_by_org.values()))
        if any(flags != reference for flags in flags_by_org.values()):
            raise GanttChainError(f"peers disagree on block {block.number} validity")
        committed_at = time.perf_counter()
        with self._status_lock:
            for tx, valid in zip(block.transactions, reference):
                if not valid:
                    self.invalid_tx_count += 1
                self._tx_valid[tx.tx_id] = valid
                self._tx_commit_perf[tx.tx_id] = committed_at
                event = self._tx_events.get(tx.tx_id)
                if event is not None:
                    event.set()

    # -- client surface ------------------------------------------------------

    def peer_for(self, org: str) -> Peer:
        peer = self.peers.get(org)
        if peer is None:
            raise ValidationError(f"no peer for organization {org!r}")
        return peer

    def query(self, identity, function: str, args: Sequence[str]) -> Any:
        """Endorse-only execution; must not produce writes."""
        tx, result = self.peer_for(identity.org).simulate(function, args, identity)
        if tx.write_set:
            raise ValidationError(f"{function} writes state and must go through invoke()")
        return result

    def invoke(
        self,
        identity,
        function: str,
        args: Sequence[str],
        timeout_s: float = 120.0,
        force_order: bool = False,
    ) -> Any:
        """Endorse, order and wait until every peer committed the transaction.

        Read-only calls return straight after endorsement unless
        `force_order` pushes them through the orderer anyway (tape-style
        load generation). Raises TransactionInvalidated on an MVCC conflict
        and ConsensusTimeout when the commit does not arrive within
        `timeout_s`.
        """
        tx, result = self.peer_for(identity.org).simulate(function, args, identity)
        if not tx.write_set and not force_order:
            return result
        self.submit_endorsed(tx)
        self.wait_for_tx(tx.tx_id, timeout_s)
        return result

    def submit_endorsed(self, tx: Transaction) -> None:
        event = threading.Event()
        with self._status_lock:
            self._tx_events[tx.tx_id] = event
        try:
            self.orderer.submit(tx)
        except Exception:
            with self._status_lock:
                self._tx_events.pop(tx.tx_id, None)
            raise

    def await_tx(self, tx_id: str, timeout_s: float = 120.0) -> tuple[bool, float]:
        """Block until the transaction is committed everywhere; returns its
        validity flag and the perf-counter instant of the commit round."""
        with self._status_lock:
            event = self._tx_events.get(tx_id)
        if event is None:
            raise ValidationError(f"unknown transaction {tx_id}")
        if not event.wait(timeout=timeout_s):
            raise ConsensusTimeout(f"transaction {tx_id} not committed within {timeout_s}s")
        with self._status_lock:
            valid = self._tx_valid.pop(tx_id)
            committed_at = self._tx_commit_perf.pop(tx_id)
            self._tx_events.pop(tx_id, None)
        return valid, committed_at

    def wait_for_tx(self, tx_id: str, timeout_s: float = 120.0) -> float:
        valid, committed_at = self.await_tx(tx_id, timeout_s)
        if not valid:
            raise TransactionInvalidated(f"transaction {tx_id} was invalidated at commit")
        return committed_at

    # -- inspection -----------------------------------------------------------

    def any_peer(self) -> Peer:
        return next(iter(self.peers.values()))

    def height(self) -> int:
        return self.any_peer().height()

    def committed_block_count(self) -> int:
        return self.height() - 1  # exclude genesis

    def state_hash(self) -> str:
        return self.any_peer().state_hash()

    def peers_in_sync(self) -> bool:
        hashes = {p.state_hash() for p in self.peers.values()}
        heights = {p.height() for p in self.peers.values()}
        return len(hashes) == 1 and len(heights) == 1
