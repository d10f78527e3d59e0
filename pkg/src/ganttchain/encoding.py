"""Canonical serialization and digests.

Every value that ends up in a hash preimage (world-state records, block
payloads, certificates) goes through `canonical_dumps` so that two peers
producing the same logical content always produce the same bytes.
"""

import hashlib
import json
from typing import Any

ZERO_HASH = "0" * 64


def canonical_dumps(obj: Any) -> str:
    """JSON with sorted keys and no whitespace. Deterministic for equal inputs."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_loads(text: str) -> Any:
    return json.loads(text)


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def digest_obj(obj: Any) -> str:
    """sha256 over the canonical JSON encoding of `obj`."""
    return sha256_hex(canonical_dumps(obj))
