"""Per-organization certificate authorities, wallets and member enrollment.

Each org runs its own CA (an Ed25519 root) that issues member keypairs and
certificates binding (userName, org, publicKey). Identities live in a wallet
directory, one JSON file per member; admins bootstrap an org and are never
written to the ledger. A member's on-chain identifier (userNumber) is the
hex MD5 of the public key and the enrollment timestamp, which keeps it
unique across organizations without leaking the key's role.
"""

import hashlib
import json
import secrets
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional

from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .encoding import canonical_dumps
from .errors import DuplicateError, NotFoundError, PermissionDenied
from .ledger import now_ms


def _private_to_hex(key: Ed25519PrivateKey) -> str:
    return key.private_bytes(
        serialization.Encoding.Raw,
        serialization.PrivateFormat.Raw,
        serialization.NoEncryption(),
    ).hex()


def _public_to_hex(key: Ed25519PublicKey) -> str:
    return key.public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    ).hex()


def public_key_from_hex(hex_key: str) -> Ed25519PublicKey:
    return Ed25519PublicKey.from_public_bytes(bytes.fromhex(hex_key))


def compute_user_number(public_key: str, timestamp: int) -> str:
    """32-hex-char member identifier derived from the public key and the
    enrollment timestamp (milliseconds)."""
    preimage = f"{public_key}:{timestamp}".encode("utf-8")
    return hashlib.md5(preimage).hexdigest()


@dataclass
class Identity:
    """Enrolled member credentials: keypair plus the issuing CA's certificate."""

    user_name: str
    org: str
    sign_id: str
    public_key: str
    private_key: str
    certificate: dict

    def sign(self, data: bytes) -> str:
        key = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(self.private_key))
        return key.sign(data).hex()

    def verifier(self) -> Ed25519PublicKey:
        return public_key_from_hex(self.public_key)

    def wallet_entry(self) -> dict:
        return {
            "signId": self.sign_id,
            "publicKey": self.public_key,
            "privateKey": self.private_key,
            "certificate": self.certificate,
        }

    @classmethod
    def from_wallet_entry(cls, user_name: str, org: str, entry: Mapping) -> "Identity":
        return cls(
            user_name=user_name,
            org=org,
            sign_id=entry["signId"],
            public_key=entry["publicKey"],
            private_key=entry["privateKey"],
            certificate=dict(entry["certificate"]),
        )


class CertificateAuthority:
    """One organization's issuer: holds the org root key and signs member
    certificates. Key generation happens locally; the CA only attests."""

    def __init__(self, org: str):
        self.org = org
        self._root = Ed25519PrivateKey.generate()
        self.root_public_key = _public_to_hex(self._root.public_key())

    def issue(self, user_name: str) -> Identity:
        key = Ed25519PrivateKey.generate()
        public_hex = _public_to_hex(key.public_key())
        payload = {
            "userName": user_name,
            "org": self.org,
            "publicKey": public_hex,
            "signId": secrets.token_hex(8),
        }
        signature = self._root.sign(canonical_dumps(payload).encode("utf-8")).hex()
        certificate = dict(payload, signature=signature, ca=self.org)
        return Identity(
            user_name=user_name,
            org=self.org,
            sign_id=payload["signId"],
            public_key=public_hex,
            private_key=_private_to_hex(key),
            certificate=certificate,
        )

    def verify_certificate(self, certificate: Mapping) -> bool:
        payload = {
            k: certificate.get(k) for k in ("userName", "org", "publicKey", "signId")
        }
        try:
            public_key_from_hex(self.root_public_key).verify(
                bytes.fromhex(certificate["signature"]),
                canonical_dumps(payload).encode("utf-8"),
            )
            return True
        except Exception:
            return False


class Wallet:
    """Disk-backed identity store: <wallet_dir>/<org>/<userName>.json."""

    def __init__(self, directory: Path | str):
        self.directory = Path(directory)

    def _path(self, org: str, user_name: str) -> Path:
        return self.directory / org / f"{user_name}.json"

    def exists(self, org: str, user_name: str) -> bool:
        return self._path(org, user_name).is_file()

    def put(self, identity: Identity) -> None:
        path = self._path(identity.org, identity.user_name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(identity.wallet_entry(), indent=2, sort_keys=True))

    def get(self, org: str, user_name: str) -> Optional[Identity]:
        path = self._path(org, user_name)
        if not path.is_file():
            return None
        entry = json.loads(path.read_text())
        return Identity.from_wallet_entry(user_name, org, entry)

    def remove(self, org: str, user_name: str) -> None:
        self._path(org, user_name).unlink(missing_ok=True)


class IdentityRegistry:
    """Channel-wide view of enrolled public keys, consulted by peers to
    authenticate endorsers and verify transaction signatures."""

    def __init__(self):
        self._cas: dict[str, CertificateAuthority] = {}
        self._keys: dict[tuple[str, str], str] = {}

    def add_ca(self, ca: CertificateAuthority) -> None:
        self._cas[ca.org] = ca

    def ca_for(self, org: str) -> Optional[CertificateAuthority]:
        return self._cas.get(org)

    def enroll(self, identity: Identity) -> None:
        ca = self._cas.get(identity.org)
        if ca is None or not ca.verify_certificate(identity.certificate):
            raise PermissionDenied(
                f"certificate of {identity.user_name!r} does not verify under {identity.org}'s CA"
            )
        self._keys[(identity.org, identity.user_name)] = identity.public_key

    def revoke(self, org: str, user_name: str) -> None:
        self._keys.pop((org, user_name), None)

    def is_enrolled(self, identity) -> bool:
        known = self._keys.get((identity.org, identity.user_name))
        return known is not None and known == identity.public_key

    def resolve(self, creator: Mapping) -> Ed25519PublicKey:
        known = self._keys.get((creator["org"], creator["userName"]))
        if known is None:
            raise PermissionDenied(f"no enrolled key for {creator!r}")
        return public_key_from_hex(known)


@dataclass
class AdminAccount:
    name: str
    password: str
    org: str


class IdentityManager:
    """Admin bootstrap, member registration and login for all orgs.

    `gateway` is the ledger access used to complete registration and login:
    an object with invoke(identity, function, args) for committed writes and
    query(identity, function, args) for reads.
    """

    def __init__(
        self,
        orgs,
        wallet: Wallet,
        registry: IdentityRegistry,
        gateway,
        clock: Callable[[], int] = now_ms,
    ):
        self.wallet = wallet
        self.registry = registry
        self.gateway = gateway
        self.clock = clock
        self.cas: dict[str, CertificateAuthority] = {}
        self.admins: dict[str, AdminAccount] = {}
        for org in orgs:
            ca = CertificateAuthority(org)
            self.cas[org] = ca
            registry.add_ca(ca)

    def _ca(self, org: str) -> CertificateAuthority:
        ca = self.cas.get(org)
        if ca is None:
            raise NotFoundError(f"unknown organization {org!r}")
        return ca

    def register_admin(self, org: str, name: str, password: str) -> Identity:
        ca = self._ca(org)
        if org in self.admins:
            raise DuplicateError(f"an admin is already enrolled for {org}")
        identity = ca.issue(name)
        self.wallet.put(identity)
        self.registry.enroll(identity)
        self.admins[org] = AdminAccount(name=name, password=password, org=org)
        return identity

    def admin_identity(self, org: str) -> Identity:
        account = self.admins.get(org)
        if account is None:
            raise PermissionDenied(f"no admin enrolled for {org}; bootstrap first")
        identity = self.wallet.get(org, account.name)
        if identity is None:
            raise NotFoundError(f"admin wallet entry for {org} is missing")
        return identity

    def register_user(self, user_name: str, org: str) -> dict:
        """Issue credentials via the org's CA, persist them in the wallet and
        commit the member record on the ledger. Returns {userName, userNumber}."""
        ca = self._ca(org)
        admin = self.admin_identity(org)
        if self.wallet.exists(org, user_name):
            raise DuplicateError(f"An identity for {user_name} already exists in the wallet.")
        if self._ledger_has_user(admin, user_name):
            raise DuplicateError(f"An identity for {user_name} already exists in the wallet.")
        identity = ca.issue(user_name)
        user_number = compute_user_number(identity.public_key, self.clock())
        self.wallet.put(identity)
        self.registry.enroll(identity)
        try:
            self.gateway.invoke(identity, "createUser", [user_name, user_number])
        except Exception:
            # registration did not complete; keep the wallet in sync
            self.wallet.remove(org, user_name)
            self.registry.revoke(org, user_name)
            raise
        return {"userName": user_name, "userNumber": user_number}

    def _ledger_has_user(self, admin: Identity, user_name: str) -> bool:
        try:
            self.gateway.query(admin, "queryUser", [user_name])
            return True
        except Exception:
            return False

    def login(self, user_name: str, org: str) -> dict:
        """Connect with the wallet keys and fetch the member record.
        Returns {userName, userNumber}."""
        identity = self.wallet.get(org, user_name)
        if identity is None:
            raise NotFoundError(f"An identity for {user_name} does not exists in the wallet")
        if not self.registry.is_enrolled(identity):
            # wallet reloaded from disk after a restart; re-enroll the keys
            self.registry.enroll(identity)
        record = self.gateway.query(identity, "queryUser", [user_name])
        return {"userName": record["userName"], "userNumber": record["userNumber"]}
