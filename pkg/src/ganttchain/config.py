"""Runtime configuration for the channel, wallet and server."""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .consensus import BatchConfig, PowConfig


@dataclass
class Config:
    orgs: list[str] = field(default_factory=lambda: ["Org1", "Org2"])
    consensus: str = "solo"  # solo | raft | pow
    batch: BatchConfig = field(default_factory=BatchConfig)
    pow: PowConfig = field(default_factory=PowConfig)
    raft_nodes: int = 3
    raft_message_delay_ms: float = 25.0
    block_delivery_delay_ms: float = 5.0
    wallet_dir: str = "wallet"
    host: str = "127.0.0.1"
    port: int = 8170
    admin_name: str = "admin"
    admin_password: str = "adminpw"
    invoke_timeout_s: float = 300.0

    @classmethod
    def from_dict(cls, doc: dict) -> "Config":
        batch = doc.get("batch", {})
        pow_doc = doc.get("pow", {})
        raft = doc.get("raft", {})
        admin = doc.get("admin", {})
        return cls(
            orgs=list(doc.get("orgs", ["Org1", "Org2"])),
            consensus=doc.get("consensus", "solo"),
            batch=BatchConfig(
                max_transactions=batch.get("maxTransactions", 100),
                max_bytes=batch.get("maxBytes", 100 * 1024 * 1024),
                batch_timeout_ms=batch.get("batchTimeoutMs", 2000),
            ),
            pow=PowConfig(difficulty=pow_doc.get("difficulty", 12)),
            raft_nodes=raft.get("nodes", 3),
            raft_message_delay_ms=raft.get("messageDelayMs", 25.0),
            block_delivery_delay_ms=doc.get("blockDeliveryDelayMs", 5.0),
            wallet_dir=doc.get("walletDir", "wallet"),
            host=doc.get("host", "127.0.0.1"),
            port=doc.get("port", 8170),
            admin_name=admin.get("name", "admin"),
            admin_password=admin.get("password", "adminpw"),
            invoke_timeout_s=doc.get("invokeTimeoutS", 300.0),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "Config":
        return cls.from_dict(json.loads(Path(path).read_text()))
