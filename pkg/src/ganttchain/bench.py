"""Load generator and report emitter for latency and throughput runs.

Load is open-loop: a bounded worker pool endorses and submits every request
to the orderer without waiting (tape semantics), then the harness collects
the commit events. That way batch size shows up in throughput even for
read-only operations. Passing `ordered=False` instead lets empty-write-set
transactions return straight from endorsement, which is how a deployed
platform treats evaluate-only traffic; that mode measures endorsement
throughput.

Per-request latency is submit until committed on every peer. Reports go
out as a CSV of samples plus a JSON summary with a stable schema.
"""

import argparse
import csv
import json
import shutil
import statistics
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .config import Config
from .consensus import BatchConfig, PowConfig, calibrate_pow_difficulty
from .encoding import canonical_dumps
from .errors import ConsensusTimeout, ValidationError
from .service import GanttService

WARMUP_REQUESTS = 50


@dataclass
class LoadSpec:
    operation: str
    total_requests: int
    concurrency: int
    consensus: str = "solo"
    batch: BatchConfig = field(default_factory=BatchConfig)
    pow: Optional[PowConfig] = None
    raft_nodes: int = 3
    raft_message_delay_ms: float = 25.0
    ordered: bool = True
    warmup: Optional[int] = None  # None: 50 when total_requests >= 100, else 0
    block_delivery_delay_ms: float = 5.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.total_requests < 1:
            raise ValidationError("totalRequests must be >= 1")
        if self.concurrency < 1:
            raise ValidationError("concurrency must be >= 1")

    def effective_warmup(self) -> int:
        if self.warmup is not None:
            return self.warmup
        return WARMUP_REQUESTS if self.total_requests >= 100 else 0


@dataclass
class BenchReport:
    op: str
    mechanism: str
    total_requests: int
    concurrency: int
    samples_ms: list[float]
    committed: int
    invalid: int
    pending: int
    wall_seconds: float
    block_count: int
    max_transactions: int

    @property
    def tps(self) -> float:
        return self.committed / self.wall_seconds if self.wall_seconds > 0 else 0.0

    def percentile(self, q: float) -> float:
        ordered = sorted(self.samples_ms)
        index = max(0, min(len(ordered) - 1, int(round(q * (len(ordered) - 1)))))
        return ordered[index]

    def summary(self) -> dict:
        return {
            "op": self.op,
            "mechanism": self.mechanism,
            "totalRequests": self.total_requests,
            "concurrency": self.concurrency,
            "committed": self.committed,
            "invalid": self.invalid,
            "pending": self.pending,
            "tps": round(self.tps, 3),
            "mean": round(statistics.fmean(self.samples_ms), 3) if self.samples_ms else 0.0,
            "p50": round(self.percentile(0.50), 3) if self.samples_ms else 0.0,
            "p95": round(self.percentile(0.95), 3) if self.samples_ms else 0.0,
            "blockCount": self.block_count,
            "wallSeconds": round(self.wall_seconds, 3),
            "maxTransactions": self.max_transactions,
        }

    def conserved(self) -> bool:
        return self.committed + self.invalid + self.pending == self.total_requests


class _OpDriver:
    """Builds per-request contract calls for one operation, seeding whatever
    fixture records the operation reads."""

    FIXTURE_PROJECT = "bench-project"
    FIXTURE_TASK = "bench-task"
    FIXTURE_WINDOW = ("2030-01-01", "2039-12-31")

    def __init__(self, service: GanttService, operation: str):
        self.service = service
        self.operation = operation
        self.session = None

    def prepare(self) -> None:
        org = self.service.config.orgs[0]
        self.service.register_user("loadgen", org)
        self.session = self.service.session("loadgen", org)
        begin, end = self.FIXTURE_WINDOW
        needs_project = self.operation in ("assignTask", "queryProject", "queryTask")
        if needs_project:
            self.service.create_project(self.session, self.FIXTURE_PROJECT, begin, end, "fixture")
        if self.operation == "queryTask":
            self.service.assign_task(
                self.session,
                project_name=self.FIXTURE_PROJECT,
                task_name=self.FIXTURE_TASK,
                manager="loadgen",
                begin_time=begin,
                end_time="2030-02-01",
            )

    def call_args(self, index: int, tag: str) -> tuple[str, list[str]]:
        number = self.session.user_number
        name = f"bench-{tag}-{index:06d}"
        begin, end = self.FIXTURE_WINDOW
        if self.operation == "createUser":
            return "createUser", [name, f"number-{tag}-{index:06d}"]
        if self.operation == "createProject":
            project = {
                "projectName": name,
                "manager": number,
                "flag": "processing",
                "beginTime": begin,
                "endTime": end,
                "tasks": [],
                "info": "",
            }
            return "createProject", [number, canonical_dumps(project)]
        if self.operation == "assignTask":
            task = {
                "taskName": name,
                "manager": number,
                "projectName": self.FIXTURE_PROJECT,
                "flag": "processing",
                "beginTime": begin,
                "endTime": end,
                "completedTime": None,
                "dependence": [],
                "info": "",
            }
            return "assignTask", [canonical_dumps(task)]
        if self.operation == "queryUser":
            return "queryUser", ["loadgen"]
        if self.operation == "queryProject":
            return "queryProject", [self.FIXTURE_PROJECT]
        if self.operation == "queryTask":
            return "queryTask", [self.FIXTURE_TASK]
        raise ValidationError(f"no fixture recipe for operation {self.operation!r}")


def run_load(spec: LoadSpec, service: Optional[GanttService] = None) -> BenchReport:
    """Issue `total_requests` invocations at the given concurrency and
    collect commit latencies. A fresh service (own wallet, own channel) is
    booted unless one is passed in."""
    own_service = service is None
    wallet_dir = None
    if own_service:
        wallet_dir = tempfile.mkdtemp(prefix="bench-wallet-")
        config = Config(
            orgs=["Org1", "Org2"],
            consensus=spec.consensus,
            batch=spec.batch,
            pow=spec.pow or PowConfig(),
            raft_nodes=spec.raft_nodes,
            raft_message_delay_ms=spec.raft_message_delay_ms,
            block_delivery_delay_ms=spec.block_delivery_delay_ms,
            wallet_dir=wallet_dir,
        )
        service = GanttService(config).start()
    try:
        driver = _OpDriver(service, spec.operation)
        driver.prepare()
        network = service.network
        identity = driver.session.identity
        org = identity.org
        timeout_s = service.config.invoke_timeout_s

        def fire(index: int, tag: str):
            """Endorse and (when ordered) submit without waiting: the load is
            open-loop, the way a dedicated traffic generator drives a chain.
            Returns a finished sample or an in-flight handle."""
            function, args = driver.call_args(index, tag)
            start = time.perf_counter()
            tx, _ = network.peer_for(org).simulate(function, args, identity)
            if spec.ordered or tx.write_set:
                network.submit_endorsed(tx)
                return ("inflight", tx.tx_id, start)
            return ("done", (time.perf_counter() - start) * 1000.0, "committed")

        def collect(results) -> tuple[list[tuple[float, str]], float]:
            """Resolve in-flight handles into (latency, outcome) samples."""
            finished = []
            last_commit = 0.0
            for kind, a, b in results:
                if kind == "done":
                    finished.append((a, b))
                    continue
                tx_id, start = a, b
                try:
                    valid, committed_at = network.await_tx(tx_id, timeout_s)
                    last_commit = max(last_commit, committed_at)
                    finished.append(((committed_at - start) * 1000.0, "committed" if valid else "invalid"))
                except ConsensusTimeout:
                    finished.append((timeout_s * 1000.0, "pending"))
            return finished, last_commit

        warmup = spec.effective_warmup()
        with ThreadPoolExecutor(max_workers=spec.concurrency) as pool:
            if warmup:
                collect(list(pool.map(lambda i: fire(i, "warm"), range(warmup))))
            blocks_before = network.committed_block_count()
            started = time.perf_counter()
            raw = list(pool.map(lambda i: fire(i, "load"), range(spec.total_requests)))
            submit_done = time.perf_counter()
            results, last_commit = collect(raw)
            wall = max(submit_done, last_commit) - started
            blocks_after = network.committed_block_count()

        problems = check_cut_rules(service, spec.batch)
        if problems:
            raise ValidationError("cut-rule violations: " + "; ".join(problems))
        outcomes = [outcome for _, outcome in results]
        return BenchReport(
            op=spec.operation,
            mechanism=spec.consensus,
            total_requests=spec.total_requests,
            concurrency=spec.concurrency,
            samples_ms=[ms for ms, _ in results],
            committed=outcomes.count("committed"),
            invalid=outcomes.count("invalid"),
            pending=outcomes.count("pending"),
            wall_seconds=wall,
            block_count=blocks_after - blocks_before,
            max_transactions=spec.batch.max_transactions,
        )
    finally:
        if own_service:
            service.stop()
            if wallet_dir:
                shutil.rmtree(wallet_dir, ignore_errors=True)


def check_cut_rules(service: GanttService, batch: BatchConfig) -> list[str]:
    """Post-run soundness: no delivered block may exceed the batch limits."""
    problems = []
    peer = service.network.any_peer()
    for block in peer.blocks[1:]:
        if len(block.transactions) > batch.max_transactions:
            problems.append(f"block {block.number} holds {len(block.transactions)} transactions")
        size = sum(len(canonical_dumps(tx.to_dict()).encode()) for tx in block.transactions)
        if size > batch.max_bytes and len(block.transactions) > 1:
            problems.append(f"block {block.number} encodes to {size} bytes")
    return problems


def compare_consensus(operation: str, specs: list[LoadSpec]) -> list[dict]:
    """One row per mechanism for the same operation and load."""
    if any(s.operation != operation for s in specs):
        raise ValidationError("all specs in a comparison must share the operation")
    rows = []
    for spec in specs:
        report = run_load(spec)
        summary = report.summary()
        rows.append(
            {
                "mechanism": summary["mechanism"],
                "op": summary["op"],
                "totalRequests": summary["totalRequests"],
                "meanMs": summary["mean"],
                "p50Ms": summary["p50"],
                "p95Ms": summary["p95"],
                "tps": summary["tps"],
            }
        )
    return rows


COMPARISON_COLUMNS = ["mechanism", "op", "totalRequests", "meanMs", "p50Ms", "p95Ms", "tps"]


def write_comparison_csv(rows: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COMPARISON_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def emit_report(report: BenchReport, out_dir: str | Path) -> dict[str, Path]:
    """CSV of per-request samples plus a JSON summary. Emitting the same
    report twice produces identical bytes."""
    if not report.samples_ms:
        raise ValidationError("refusing to emit an empty report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{report.op}_{report.mechanism}"
    samples_path = out / f"{stem}_samples.csv"
    summary_path = out / f"{stem}_summary.json"
    with open(samples_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "latency_ms"])
        for index, ms in enumerate(report.samples_ms):
            writer.writerow([index, f"{ms:.3f}"])
    summary_path.write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    return {"samples": samples_path, "summary": summary_path}


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Throughput/latency load generator")
    parser.add_argument("--op", required=True, help="contract operation to drive")
    parser.add_argument("--n", type=int, required=True, help="number of requests")
    parser.add_argument("--concurrency", type=int, default=10)
    parser.add_argument("--consensus", default="solo", choices=["solo", "raft", "pow"])
    parser.add_argument("--max-tx", type=int, default=100, help="transactions per block")
    parser.add_argument("--batch-timeout-ms", type=int, default=2000)
    parser.add_argument("--max-bytes", type=int, default=100 * 1024 * 1024)
    parser.add_argument("--difficulty", type=int, default=None, help="PoW difficulty bits (default: calibrated)")
    parser.add_argument("--raft-nodes", type=int, default=3)
    parser.add_argument("--endorse-only", action="store_true", help="let read-only calls skip ordering")
    parser.add_argument("--compare", default=None, help="comma list of mechanisms to compare")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)

    batch = BatchConfig(
        max_transactions=args.max_tx,
        max_bytes=args.max_bytes,
        batch_timeout_ms=args.batch_timeout_ms,
    )

    def spec_for(mechanism: str) -> LoadSpec:
        pow_cfg = None
        if mechanism == "pow":
            difficulty = args.difficulty or calibrate_pow_difficulty(args.batch_timeout_ms)
            pow_cfg = PowConfig(difficulty=difficulty)
        return LoadSpec(
            operation=args.op,
            total_requests=args.n,
            concurrency=args.concurrency,
            consensus=mechanism,
            batch=batch,
            pow=pow_cfg,
            raft_nodes=args.raft_nodes,
            ordered=not args.endorse_only,
        )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    if args.compare:
        mechanisms = [m.strip() for m in args.compare.split(",") if m.strip()]
        rows = compare_consensus(args.op, [spec_for(m) for m in mechanisms])
        path = out / f"{args.op}_comparison.csv"
        write_comparison_csv(rows, path)
        for row in rows:
            print(f"{row['mechanism']:>6}  mean={row['meanMs']:.1f} ms  tps={row['tps']:.1f}")
        print(f"comparison written to {path}")
    else:
        spec = spec_for(args.consensus)
        report = run_load(spec)
        paths = emit_report(report, out)
        summary = report.summary()
        print(json.dumps(summary, indent=2, sort_keys=True))
        print(f"samples: {paths['samples']}")
        if not report.conserved():
            print("invariant violated: committed + invalid + pending != totalRequests", file=sys.stderr)
            ok = False
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
