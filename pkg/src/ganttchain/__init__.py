"""Consortium-ledger engine and coordination service for cross-organization
Gantt-chart project management."""

from .config import Config
from .consensus import BatchConfig, PowConfig
from .contract import GanttContract
from .errors import (
    ConsensusTimeout,
    ContractError,
    DuplicateError,
    GanttChainError,
    NotFoundError,
    PermissionDenied,
    ValidationError,
)
from .identity import CertificateAuthority, Identity, IdentityRegistry, Wallet, compute_user_number
from .ledger import Block, Peer, Transaction, WorldState
from .network import Network, TransactionInvalidated
from .service import GanttService, Session

__version__ = "0.1.0"

__all__ = [
    "BatchConfig",
    "Block",
    "CertificateAuthority",
    "Config",
    "ConsensusTimeout",
    "ContractError",
    "compute_user_number",
    "DuplicateError",
    "GanttChainError",
    "GanttContract",
    "GanttService",
    "Identity",
    "IdentityRegistry",
    "Network",
    "NotFoundError",
    "Peer",
    "PermissionDenied",
    "PowConfig",
    "Session",
    "Transaction",
    "TransactionInvalidated",
    "ValidationError",
    "Wallet",
    "WorldState",
    "__version__",
]
