"""Raft log replication over an in-process simulated network.

Nodes exchange messages through a transport that applies a configurable
delay and honors partitions and crashes, driven by a scheduler that runs
either on virtual time (deterministic tests) or wall-clock time (the
benchmark harness). Entries are opaque payloads; the ordering service
stores whole blocks in them.
"""

import heapq
import itertools
import random
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Optional

FOLLOWER = "follower"
CANDIDATE = "candidate"
LEADER = "leader"


class Scheduler:
    """call_later/cancel surface shared by the virtual and wall-clock modes."""

    def call_later(self, delay_ms: float, fn: Callable[[], None]):
        raise NotImplementedError

    def cancel(self, handle) -> None:
        raise NotImplementedError

    def now_ms(self) -> float:
        raise NotImplementedError


class SimScheduler(Scheduler):
    """Virtual-time event queue; `run_for`/`run_until` pump events serially,
    so tests are deterministic given a seeded RNG."""

    def __init__(self):
        self._queue: list = []
        self._seq = itertools.count()
        self._now = 0.0

    def call_later(self, delay_ms, fn):
        entry = [self._now + delay_ms, next(self._seq), fn, False]
        heapq.heappush(self._queue, entry)
        return entry

    def cancel(self, handle):
        if handle is not None:
            handle[3] = True

    def now_ms(self):
        return self._now

    def run_until(self, t_ms: float):
        while self._queue and self._queue[0][0] <= t_ms:
            when, _, fn, cancelled = heapq.heappop(self._queue)
            self._now = when
            if not cancelled:
                fn()
        self._now = t_ms

    def run_for(self, duration_ms: float):
        self.run_until(self._now + duration_ms)


class RealScheduler(Scheduler):
    """Wall-clock scheduler on one background thread."""

    def __init__(self):
        self._queue: list = []
        self._seq = itertools.count()
        self._cond = threading.Condition()
        self._stopped = False
        self._thread = threading.Thread(target=self._run, name="raft-scheduler", daemon=True)
        self._thread.start()

    def call_later(self, delay_ms, fn):
        entry = [time.monotonic() + delay_ms / 1000.0, next(self._seq), fn, False]
        with self._cond:
            heapq.heappush(self._queue, entry)
            self._cond.notify()
        return entry

    def cancel(self, handle):
        if handle is not None:
            handle[3] = True

    def now_ms(self):
        return time.monotonic() * 1000.0

    def stop(self):
        with self._cond:
            self._stopped = True
            self._cond.notify()
        self._thread.join(timeout=2)

    def _run(self):
        while True:
            with self._cond:
                if self._stopped:
                    return
                if not self._queue:
                    self._cond.wait(timeout=0.5)
                    continue
                delay = self._queue[0][0] - time.monotonic()
                if delay > 0:
                    self._cond.wait(timeout=delay)
                    continue
                _, _, fn, cancelled = heapq.heappop(self._queue)
            if not cancelled:
                try:
                    fn()
                except Exception:  # pragma: no cover - keep the clock alive
                    pass


class SimTransport:
    """Message fabric between nodes; drops traffic across partitions and to
    crashed nodes."""

    def __init__(self, scheduler: Scheduler, delay_ms: float = 5.0):
        self.scheduler = scheduler
        self.delay_ms = delay_ms
        self.nodes: dict[int, "RaftNode"] = {}
        self._blocked: set[frozenset] = set()
        self._down: set[int] = set()

    def register(self, node: "RaftNode") -> None:
        self.nodes[node.node_id] = node

    def send(self, src: int, dst: int, message: dict) -> None:
        if src in self._down or dst in self._down:
            return
        if frozenset((src, dst)) in self._blocked:
            return
        node = self.nodes.get(dst)
        if node is None:
            return
        self.scheduler.call_later(self.delay_ms, lambda: node.receive(message))

    def partition(self, group_a, group_b) -> None:
        for a in group_a:
            for b in group_b:
                self._blocked.add(frozenset((a, b)))

    def heal(self) -> None:
        self._blocked.clear()

    def crash(self, node_id: int) -> None:
        self._down.add(node_id)
        self.nodes[node_id].stop()

    def is_down(self, node_id: int) -> bool:
        return node_id in self._down


@dataclass
class LogEntry:
    term: int
    payload: Any


class RaftNode:
    """One consensus participant. All handlers run on the scheduler thread
    (or inside the virtual-time pump), so no internal locking is needed."""

    def __init__(
        self,
        node_id: int,
        peer_ids: list[int],
        transport: SimTransport,
        scheduler: Scheduler,
        rng: random.Random,
        election_range_ms: tuple[float, float] = (150.0, 300.0),
        heartbeat_ms: float = 50.0,
        on_commit: Optional[Callable[["RaftNode", int, Any], None]] = None,
    ):
        self.node_id = node_id
        self.peer_ids = [p for p in peer_ids if p != node_id]
        self.transport = transport
        self.scheduler = scheduler
        self.rng = rng
        self.election_range_ms = election_range_ms
        self.heartbeat_ms = heartbeat_ms
        self.on_commit = on_commit

        self.role = FOLLOWER
        self.current_term = 0
        self.voted_for: Optional[int] = None
        self.log: list[LogEntry] = []
        self.commit_index = -1
        self.last_applied = -1
        self.next_index: dict[int, int] = {}
        self.match_index: dict[int, int] = {}
        self._votes: set[int] = set()
        self._election_timer = None
        self._heartbeat_timer = None
        self.stopped = False

        transport.register(self)
        self._reset_election_timer()

    # -- timers ----------------------------------------------------------

    def stop(self) -> None:
        self.stopped = True
        self.scheduler.cancel(self._election_timer)
        self.scheduler.cancel(self._heartbeat_timer)

    def _reset_election_timer(self) -> None:
        self.scheduler.cancel(self._election_timer)
        low, high = self.election_range_ms
        delay = self.rng.uniform(low, high)
        self._election_timer = self.scheduler.call_later(delay, self._on_election_timeout)

    def _on_election_timeout(self) -> None:
        if self.stopped or self.role == LEADER:
            return
        self._start_election()

    def _start_election(self) -> None:
        self.role = CANDIDATE
        self.current_term += 1
        self.voted_for = self.node_id
        self._votes = {self.node_id}
        self._reset_election_timer()
        for peer in self.peer_ids:
            self._send(
                peer,
                {
                    "type": "request_vote",
                    "term": self.current_term,
                    "candidate": self.node_id,
                    "last_log_index": len(self.log) - 1,
                    "last_log_term": self.log[-1].term if self.log else 0,
                },
            )
        if self._has_majority(len(self._votes)):  # single-node cluster
            self._become_leader()

    # -- message handling ---------------------------------------------------

    def _send(self, dst: int, message: dict) -> None:
        message["from"] = self.node_id
        self.transport.send(self.node_id, dst, message)

    def receive(self, message: dict) -> None:
        if self.stopped:
            return
        handler = {
            "request_vote": self._on_request_vote,
            "vote": self._on_vote,
            "append": self._on_append,
            "append_ack": self._on_append_ack,
        }[message["type"]]
        handler(message)

    def _step_down(self, term: int) -> None:
        self.current_term = term
        self.role = FOLLOWER
        self.voted_for = None
        self.scheduler.cancel(self._heartbeat_timer)
        self._reset_election_timer()

    def _on_request_vote(self, msg: dict) -> None:
        if msg["term"] > self.current_term:
            self._step_down(msg["term"])
        granted = False
        if msg["term"] == self.current_term and self.voted_for in (None, msg["candidate"]):
            my_last_term = self.log[-1].term if self.log else 0
            up_to_date = msg["last_log_term"] > my_last_term or (
                msg["last_log_term"] == my_last_term
                and msg["last_log_index"] >= len(self.log) - 1
            )
            if up_to_date:
                granted = True
                self.voted_for = msg["candidate"]
                self._reset_election_timer()
        self._send(msg["candidate"], {"type": "vote", "term": self.current_term, "granted": granted})

    def _on_vote(self, msg: dict) -> None:
        if msg["term"] > self.current_term:
            self._step_down(msg["term"])
            return
        if self.role != CANDIDATE or msg["term"] != self.current_term or not msg["granted"]:
            return
        self._votes.add(msg["from"])
        if self._has_majority(len(self._votes)):
            self._become_leader()

    def _has_majority(self, count: int) -> bool:
        return count > (len(self.peer_ids) + 1) // 2

    def _become_leader(self) -> None:
        self.role = LEADER
        self.scheduler.cancel(self._election_timer)
        self.next_index = {p: len(self.log) for p in self.peer_ids}
        self.match_index = {p: -1 for p in self.peer_ids}
        self._broadcast_append()

    def _on_heartbeat(self) -> None:
        if self.stopped or self.role != LEADER:
            return
        self._broadcast_append()

    def _broadcast_append(self) -> None:
        for peer in self.peer_ids:
            self._send_append(peer)
        self.scheduler.cancel(self._heartbeat_timer)
        self._heartbeat_timer = self.scheduler.call_later(self.heartbeat_ms, self._on_heartbeat)

    def _send_append(self, peer: int) -> None:
        nxt = self.next_index[peer]
        prev_index = nxt - 1
        prev_term = self.log[prev_index].term if prev_index >= 0 else 0
        entries = [(e.term, e.payload) for e in self.log[nxt:]]
        self._send(
            peer,
            {
                "type": "append",
                "term": self.current_term,
                "prev_index": prev_index,
                "prev_term": prev_term,
                "entries": entries,
                "leader_commit": self.commit_index,
            },
        )

    def _on_append(self, msg: dict) -> None:
        if msg["term"] > self.current_term or (
            msg["term"] == self.current_term and self.role == CANDIDATE
        ):
            self._step_down(msg["term"])
        if msg["term"] < self.current_term:
            self._send(msg["from"], {"type": "append_ack", "term": self.current_term, "success": False, "match": -1})
            return
        self._reset_election_timer()
        prev_index = msg["prev_index"]
        if prev_index >= 0 and (
            prev_index >= len(self.log) or self.log[prev_index].term != msg["prev_term"]
        ):
            self._send(msg["from"], {"type": "append_ack", "term": self.current_term, "success": False, "match": -1})
            return
        index = prev_index
        for term, payload in msg["entries"]:
            index += 1
            if index < len(self.log):
                if self.log[index].term != term:
                    del self.log[index:]
                    self.log.append(LogEntry(term, payload))
            else:
                self.log.append(LogEntry(term, payload))
        if msg["leader_commit"] > self.commit_index:
            self.commit_index = min(msg["leader_commit"], len(self.log) - 1)
            self._apply_committed()
        self._send(
            msg["from"],
            {"type": "append_ack", "term": self.current_term, "success": True, "match": index},
        )

    def _on_append_ack(self, msg: dict) -> None:
        if msg["term"] > self.current_term:
            self._step_down(msg["term"])
            return
        if self.role != LEADER or msg["term"] != self.current_term:
            return
        peer = msg["from"]
        if msg["success"]:
            self.match_index[peer] = max(self.match_index[peer], msg["match"])
            self.next_index[peer] = self.match_index[peer] + 1
            self._advance_commit()
        else:
            self.next_index[peer] = max(0, self.next_index[peer] - 1)
            self._send_append(peer)

    def _advance_commit(self) -> None:
        for n in range(len(self.log) - 1, self.commit_index, -1):
            if self.log[n].term != self.current_term:
                continue
            votes = 1 + sum(1 for p in self.peer_ids if self.match_index.get(p, -1) >= n)
            if self._has_majority(votes):
                self.commit_index = n
                self._apply_committed()
                break

    def _apply_committed(self) -> None:
        while self.last_applied < self.commit_index:
            self.last_applied += 1
            if self.on_commit is not None:
                self.on_commit(self, self.last_applied, self.log[self.last_applied].payload)

    # -- client surface ----------------------------------------------------

    def propose(self, payload) -> Optional[int]:
        """Append a payload to the leader's log; returns its index, or None
        when this node is not the leader."""
        if self.stopped or self.role != LEADER:
            return None
        self.log.append(LogEntry(self.current_term, payload))
        index = len(self.log) - 1
        self._broadcast_append()
        if self._has_majority(1):  # single-node cluster commits immediately
            self._advance_commit()
        return index


class RaftCluster:
    """A set of nodes plus once-only, in-order delivery of committed payloads."""

    def __init__(
        self,
        size: int,
        scheduler: Scheduler,
        rng: Optional[random.Random] = None,
        message_delay_ms: float = 5.0,
        election_range_ms: tuple[float, float] = (150.0, 300.0),
        heartbeat_ms: float = 50.0,
        on_deliver: Optional[Callable[[Any], None]] = None,
    ):
        if size < 3 or size % 2 == 0:
            raise ValueError("raft cluster needs an odd node count >= 3")
        self.scheduler = scheduler
        self.transport = SimTransport(scheduler, delay_ms=message_delay_ms)
        self.on_deliver = on_deliver
        self._delivered = -1
        self._lock = threading.Lock()
        rng = rng or random.Random()
        ids = list(range(size))
        self.nodes = [
            RaftNode(
                i,
                ids,
                self.transport,
                scheduler,
                random.Random(rng.random()),
                election_range_ms=election_range_ms,
                heartbeat_ms=heartbeat_ms,
                on_commit=self._on_commit,
            )
            for i in ids
        ]

    def _on_commit(self, node: RaftNode, index: int, payload) -> None:
        with self._lock:
            if index <= self._delivered:
                return
            self._delivered = index
        if self.on_deliver is not None:
            self.on_deliver(payload)

    def leader(self) -> Optional[RaftNode]:
        leaders = [
            n for n in self.nodes if n.role == LEADER and not self.transport.is_down(n.node_id)
        ]
        if not leaders:
            return None
        return max(leaders, key=lambda n: n.current_term)

    def propose(self, payload) -> bool:
        leader = self.leader()
        return leader is not None and leader.propose(payload) is not None

    def crash_leader(self) -> Optional[int]:
        leader = self.leader()
        if leader is None:
            return None
        self.transport.crash(leader.node_id)
        return leader.node_id

    def alive_nodes(self) -> list[RaftNode]:
        return [n for n in self.nodes if not self.transport.is_down(n.node_id)]

    def committed_payloads(self, node: RaftNode) -> list:
        return [e.payload for e in node.log[: node.commit_index + 1]]
