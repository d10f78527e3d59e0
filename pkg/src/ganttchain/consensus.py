"""Ordering service: batches endorsed transactions into blocks.

Three interchangeable mechanisms share one batch cutter. A block is cut when
any rule fires: the transaction count reaches maxTransactions, the encoded
size would exceed maxBytes, or batchTimeout elapses with at least one
pending transaction.

  solo  — single orderer, cut and deliver.
  pow   — cut, then search a nonce until the header digest has the required
          number of leading zero bits (public-chain baseline).
  raft  — cut, then replicate the block through a raft cluster; it is
          delivered only once a majority has acknowledged it.
"""

import hashlib
import math
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

from .encoding import canonical_dumps
from .errors import DuplicateError, GanttChainError
from .ledger import Block, Transaction, build_block, header_preimage_parts
from .raft import RaftCluster, RealScheduler

DeliverFn = Callable[[Block], None]


@dataclass
class BatchConfig:
    max_transactions: int = 100
    max_bytes: int = 100 * 1024 * 1024
    batch_timeout_ms: int = 2000

    def __post_init__(self):
        if self.max_transactions < 1 or self.max_bytes < 1 or self.batch_timeout_ms < 1:
            raise ValueError("batch config fields must be positive")


@dataclass
class PowConfig:
    difficulty: int = 12  # leading zero bits required of the header digest

    def __post_init__(self):
        if self.difficulty < 1:
            raise ValueError("difficulty must be >= 1")


class QueueClosed(GanttChainError):
    code = "consensusTimeout"


def tx_encoded_size(tx: Transaction) -> int:
    return len(canonical_dumps(tx.to_dict()).encode("utf-8"))


def leading_zero_bits_ok(digest: bytes, difficulty: int) -> bool:
    return int.from_bytes(digest, "big") < (1 << (256 - difficulty))


def mine_block(block: Block, difficulty: int) -> Block:
    """Nonce-search until the header digest clears the difficulty. Expected
    work doubles per difficulty bit."""
    prefix, suffix = header_preimage_parts(
        block.number, block.prev_hash, block.data_hash, block.timestamp
    )
    target = 1 << (256 - difficulty)
    nonce = 0
    while True:
        digest = hashlib.sha256(f"{prefix}{nonce}{suffix}".encode("utf-8")).digest()
        if int.from_bytes(digest, "big") < target:
            block.nonce = nonce
            block.header_hash = digest.hex()
            return block
        nonce += 1


def measure_hash_rate(sample: int = 200_000) -> float:
    """Header hashes per second on this machine, for difficulty calibration."""
    prefix, suffix = header_preimage_parts(1, "ab" * 32, "cd" * 32, 1_600_000_000_000)
    start = time.perf_counter()
    for nonce in range(sample):
        hashlib.sha256(f"{prefix}{nonce}{suffix}".encode("utf-8")).digest()
    return sample / (time.perf_counter() - start)


def calibrate_pow_difficulty(
    batch_timeout_ms: int = 2000,
    ratio: float = 4.0,
    margin: float = 2.5,
    solo_overhead_ms: float = 80.0,
    hash_rate: Optional[float] = None,
) -> int:
    """Pick the difficulty that makes PoW write latency at least `ratio`
    times Solo's on this machine.

    Solo latency is about batchTimeout + overhead. PoW pays the same batch
    wait plus mining, so mining must average ratio*solo - batchTimeout. The
    margin absorbs the geometric spread of nonce searches (a 20-block mean
    scatters around expectation) and difficulty is rounded to the nearest
    bit, so the realized mean lands within sqrt(2) of margin*required.
    """
    rate = hash_rate if hash_rate is not None else measure_hash_rate()
    solo_ms = batch_timeout_ms + solo_overhead_ms
    required_ms = ratio * solo_ms - batch_timeout_ms
    target_hashes = rate * (margin * required_ms / 1000.0)
    return max(1, round(math.log2(target_hashes)))


class BatchingOrderer:
    """Shared cut loop. Subclasses decide what happens to a cut block by
    overriding `_emit`; delivery order defines block numbering, which
    continues from the genesis block handed to `start`."""

    mechanism = "base"

    def __init__(self, cfg: BatchConfig, deliver: DeliverFn):
        self.cfg = cfg
        self.deliver = deliver
        self._cond = threading.Condition()
        self._incoming: list[Transaction] = []
        self._seen: set[str] = set()
        self._running = False
        self._thread: Optional[threading.Thread] = None
        self._next_number = 1
        self._prev_hash = ""
        self.pending_at_shutdown = 0

    def start(self, genesis: Block) -> None:
        self._next_number = genesis.number + 1
        self._prev_hash = genesis.header_hash
        self._running = True
        self._thread = threading.Thread(target=self._run, name=f"orderer-{self.mechanism}", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        with self._cond:
            self._running = False
            self._cond.notify_all()
        if self._thread is not None:
            self._thread.join(timeout=10)

    def submit(self, tx: Transaction) -> None:
        """Enqueue an endorsed transaction; it will appear in exactly one
        delivered block (FIFO)."""
        with self._cond:
            if not self._running:
                raise QueueClosed("ordering service is shut down")
            if tx.tx_id in self._seen:
                raise DuplicateError(f"transaction {tx.tx_id} was already submitted")
            self._seen.add(tx.tx_id)
            self._incoming.append(tx)
            self._cond.notify_all()

    # -- cutter ----------------------------------------------------------

    def _run(self) -> None:
        pending: list[Transaction] = []
        pending_bytes = 0
        deadline: Optional[float] = None

        def cut():
            nonlocal pending, pending_bytes, deadline
            block = build_block(self._next_number, self._prev_hash, pending)
            pending = []
            pending_bytes = 0
            deadline = None
            self._emit(block)
            self._next_number = block.number + 1
            self._prev_hash = block.header_hash

        while True:
            with self._cond:
                while self._running and not self._incoming:
                    if deadline is None:
                        self._cond.wait()
                    else:
                        remaining = deadline - time.monotonic()
                        if remaining <= 0:
                            break
                        self._cond.wait(timeout=remaining)
                arrivals = self._incoming
                self._incoming = []
                running = self._running
            if not running:
                self.pending_at_shutdown = len(pending) + len(arrivals)
                return
            for tx in arrivals:
                size = tx_encoded_size(tx)
                if pending and pending_bytes + size > self.cfg.max_bytes:
                    cut()
                pending.append(tx)
                pending_bytes += size
                if deadline is None:
                    deadline = time.monotonic() + self.cfg.batch_timeout_ms / 1000.0
                if len(pending) >= self.cfg.max_transactions or pending_bytes >= self.cfg.max_bytes:
                    cut()
            if pending and deadline is not None and time.monotonic() >= deadline:
                cut()

    def _emit(self, block: Block) -> None:
        raise NotImplementedError


class SoloOrderer(BatchingOrderer):
    """Single trusted orderer: a cut block is final immediately."""

    mechanism = "solo"

    def _emit(self, block: Block) -> None:
        self.deliver(block)


class PowOrderer(BatchingOrderer):
    """Public-chain baseline: every cut block must be mined before delivery."""

    mechanism = "pow"

    def __init__(self, cfg: BatchConfig, deliver: DeliverFn, pow_cfg: PowConfig):
        super().__init__(cfg, deliver)
        self.pow_cfg = pow_cfg

    def _emit(self, block: Block) -> None:
        self.deliver(mine_block(block, self.pow_cfg.difficulty))


class RaftOrderer(BatchingOrderer):
    """Cut blocks are proposed to a raft cluster and delivered on majority
    commit. The cutter waits for each block before cutting the next, so
    numbering stays sequential across leader changes."""

    mechanism = "raft"

    # Per-hop delay covering transport plus the WAL append each raft node
    # performs before acknowledging; this is what keeps consensus cost
    # visible next to in-process endorsement speeds.
    DEFAULT_MESSAGE_DELAY_MS = 25.0

    def __init__(
        self,
        cfg: BatchConfig,
        deliver: DeliverFn,
        nodes: int = 3,
        message_delay_ms: float = DEFAULT_MESSAGE_DELAY_MS,
        seed: Optional[int] = None,
        propose_timeout_ms: float = 60_000.0,
    ):
        super().__init__(cfg, deliver)
        self.propose_timeout_ms = propose_timeout_ms
        self.scheduler = RealScheduler()
        self._delivered_numbers: set[int] = set()
        self._commit_events: dict[int, threading.Event] = {}
        self._events_lock = threading.Lock()
        # Wall-clock timers share the machine with endorsement work, so the
        # windows are wider than the virtual-time defaults to keep elections
        # from firing under GIL scheduling jitter.
        self.cluster = RaftCluster(
            nodes,
            self.scheduler,
            rng=random.Random(seed),
            message_delay_ms=message_delay_ms,
            election_range_ms=(500.0, 1000.0),
            heartbeat_ms=100.0,
            on_deliver=self._on_raft_deliver,
        )

    def start(self, genesis: Block) -> None:
        deadline = time.monotonic() + 10
        while self.cluster.leader() is None:
            if time.monotonic() > deadline:
                raise GanttChainError("raft cluster failed to elect a leader")
            time.sleep(0.01)
        super().start(genesis)

    def stop(self) -> None:
        super().stop()
        self.scheduler.stop()

    def _on_raft_deliver(self, block: Block) -> None:
        if block.number in self._delivered_numbers:
            return  # re-proposed after a leader change and committed twice
        self._delivered_numbers.add(block.number)
        self.deliver(block)
        with self._events_lock:
            event = self._commit_events.get(block.number)
        if event is not None:
            event.set()

    def _emit(self, block: Block) -> None:
        event = threading.Event()
        with self._events_lock:
            self._commit_events[block.number] = event
        deadline = time.monotonic() + self.propose_timeout_ms / 1000.0
        while not event.is_set():
            if time.monotonic() > deadline:
                raise GanttChainError(f"no quorum: block {block.number} was not committed")
            self.cluster.propose(block)
            event.wait(timeout=0.25)
        with self._events_lock:
            self._commit_events.pop(block.number, None)


def make_orderer(
    mechanism: str,
    cfg: BatchConfig,
    deliver: DeliverFn,
    pow_cfg: Optional[PowConfig] = None,
    raft_nodes: int = 3,
    raft_message_delay_ms: float = RaftOrderer.DEFAULT_MESSAGE_DELAY_MS,
    seed: Optional[int] = None,
) -> BatchingOrderer:
    if mechanism == "solo":
        return SoloOrderer(cfg, deliver)
    if mechanism == "pow":
        return PowOrderer(cfg, deliver, pow_cfg or PowConfig())
    if mechanism == "raft":
        return RaftOrderer(cfg, deliver, nodes=raft_nodes, message_delay_ms=raft_message_delay_ms, seed=seed)
    raise ValueError(f"unknown consensus mechanism {mechanism!r}")


def measure_commit_latency(invoke: Callable[[], object]) -> float:
    """Wall-clock milliseconds for one operation from client submit until it
    is committed on every peer (`invoke` must block until then)."""
    start = time.perf_counter()
    invoke()
    return (time.perf_counter() - start) * 1000.0
