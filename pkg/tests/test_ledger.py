"""Block digests, endorsement, MVCC commit and tamper evidence."""

import copy

import pytest

from ganttchain.contract import GanttContract
from ganttchain.encoding import ZERO_HASH
from ganttchain.errors import ContractError, PermissionDenied
from ganttchain.identity import CertificateAuthority, IdentityRegistry
from ganttchain.ledger import (
    Block,
    ChainMismatch,
    Peer,
    build_block,
    compute_data_hash,
    compute_header_hash,
    header_preimage,
    header_preimage_parts,
    make_genesis,
)


@pytest.fixture
def registry():
    reg = IdentityRegistry()
    reg.add_ca(CertificateAuthority("Org1"))
    reg.add_ca(CertificateAuthority("Org2"))
    return reg


@pytest.fixture
def alice(registry):
    identity = registry.ca_for("Org1").issue("alice")
    registry.enroll(identity)
    return identity


def fresh_peer(registry, org="Org1"):
    peer = Peer(org, GanttContract(), authenticator=registry.is_enrolled, clock=lambda: 1_700_000_000_000)
    peer.commit_genesis(make_genesis())
    return peer


def endorse(peer, identity, function, args):
    tx, _ = peer.simulate(function, args, identity)
    return tx


def commit_block(peers, txs, registry):
    tip = peers[0].blocks[-1]
    block = build_block(tip.number + 1, tip.header_hash, txs, timestamp=1_700_000_000_123)
    return [p.validate_and_commit(block, registry.resolve) for p in peers], block


class TestHeaderHash:
    def test_genesis_digest_is_fixed(self):
        g1, g2 = make_genesis(), make_genesis()
        assert g1.number == 0
        assert g1.prev_hash == ZERO_HASH
        assert g1.transactions == []
        assert g1.header_hash == g2.header_hash

    def test_hashing_is_deterministic(self, registry, alice):
        peer = fresh_peer(registry)
        tx = endorse(peer, alice, "createUser", ["alice", "n1"])
        block = build_block(1, peer.blocks[0].header_hash, [tx], timestamp=5)
        assert compute_header_hash(block) == compute_header_hash(block)

    def test_changing_a_transaction_changes_the_digest(self, registry, alice):
        peer = fresh_peer(registry)
        tx = endorse(peer, alice, "createUser", ["alice", "n1"])
        block = build_block(1, peer.blocks[0].header_hash, [tx], timestamp=5)
        original = compute_header_hash(block)
        mutated = copy.deepcopy(block)
        mutated.transactions[0].args[1] = "n2"
        mutated.data_hash = compute_data_hash(mutated.transactions)
        assert compute_header_hash(mutated) != original

    def test_preimage_parts_match_full_preimage(self):
        for nonce in (0, 7, 123456789):
            prefix, suffix = header_preimage_parts(3, "aa" * 32, "bb" * 32, 42)
            assert prefix + str(nonce) + suffix == header_preimage(3, "aa" * 32, "bb" * 32, 42, nonce)


class TestSimulate:
    def test_create_user_records_existence_check_and_write(self, registry, alice):
        peer = fresh_peer(registry)
        tx, result = peer.simulate("createUser", ["alice", "n1"], alice)
        assert result == {"userName": "alice", "userNumber": "n1"}
        assert [k for k, _ in tx.write_set] == ["u::alice"]
        assert ("u::alice", None) in tx.read_set  # saw the key absent
        assert peer.state.get("u::alice") is None  # no mutation before commit

    def test_queries_never_write(self, registry, alice):
        peer = fresh_peer(registry)
        tx, _ = peer.simulate("queryProIndex", ["nobody"], alice)
        assert tx.write_set == []

    def test_contract_error_emits_no_transaction(self, registry, alice):
        peer = fresh_peer(registry)
        tx = endorse(peer, alice, "createUser", ["alice", "n1"])
        commit_block([peer], [tx], registry)
        with pytest.raises(ContractError) as err:
            peer.simulate("createUser", ["alice", "n2"], alice)
        assert err.value.code == "duplicate"

    def test_unknown_function_rejected(self, registry, alice):
        peer = fresh_peer(registry)
        with pytest.raises(ContractError):
            peer.simulate("dropEverything", [], alice)

    def test_unenrolled_creator_rejected(self, registry):
        ghost = CertificateAuthority("Org1").issue("ghost")  # some other CA's cert
        peer = fresh_peer(registry)
        with pytest.raises(PermissionDenied):
            peer.simulate("queryUser", ["alice"], ghost)

    def test_signature_verifies_against_registered_key(self, registry, alice):
        peer = fresh_peer(registry)
        tx = endorse(peer, alice, "createUser", ["alice", "n1"])
        registry.resolve(tx.creator).verify(bytes.fromhex(tx.signature), tx.signing_payload())

    def test_read_your_writes_within_one_simulation(self, registry, alice):
        peer = fresh_peer(registry)
        # createProject writes the project, then createProIndex (same
        # simulation) reads it back successfully
        project = (
            '{"projectName":"p1","manager":"n1","flag":"processing",'
            '"beginTime":"2020-11-15","endTime":"2020-12-31","tasks":[],"info":""}'
        )
        tx, _ = peer.simulate("createProject", ["n1", project], alice)
        written = dict(tx.write_set)
        assert "p::p1" in written and "pi::n1" in written


class TestValidateAndCommit:
    def test_two_writers_of_one_key_serialize(self, registry, alice):
        peer = fresh_peer(registry)
        tx1 = endorse(peer, alice, "createUser", ["alice", "n1"])
        tx2 = endorse(peer, alice, "createUser", ["alice", "n2"])  # same snapshot
        (flags,), _ = commit_block([peer], [tx1, tx2], registry)
        assert flags == [True, False]
        assert peer.state.get("u::alice") is not None

    def test_disjoint_keys_all_valid(self, registry, alice):
        peer = fresh_peer(registry)
        txs = [endorse(peer, alice, "createUser", [f"user{i}", f"n{i}"]) for i in range(4)]
        (flags,), _ = commit_block([peer], txs, registry)
        assert flags == [True, True, True, True]

    def test_stale_read_in_same_block_is_invalidated(self, registry, alice):
        peer = fresh_peer(registry)
        write = endorse(peer, alice, "createUser", ["alice", "n1"])
        stale_query = endorse(peer, alice, "queryProIndex", ["nobody"])
        stale_query.read_set = [("u::alice", None)]  # force a read the write invalidates
        stale_query.write_set = [("marker", "x")]
        stale_query.signature = alice.sign(stale_query.signing_payload())
        (flags,), _ = commit_block([peer], [write, stale_query], registry)
        assert flags == [True, False]

    def test_fresh_query_after_commit_sees_the_record(self, registry, alice):
        peer = fresh_peer(registry)
        commit_block([peer], [endorse(peer, alice, "createUser", ["alice", "n1"])], registry)
        _, result = peer.simulate("queryUser", ["alice"], alice)
        assert result["userNumber"] == "n1"

    def test_bad_signature_invalidates_transaction(self, registry, alice):
        peer = fresh_peer(registry)
        tx = endorse(peer, alice, "createUser", ["alice", "n1"])
        tx.signature = "00" * 64
        (flags,), _ = commit_block([peer], [tx], registry)
        assert flags == [False]
        assert peer.state.get("u::alice") is None

    def test_chain_mismatch_rejects_block_wholesale(self, registry, alice):
        peer = fresh_peer(registry)
        tx = endorse(peer, alice, "createUser", ["alice", "n1"])
        block = build_block(7, "ff" * 32, [tx], timestamp=1)
        with pytest.raises(ChainMismatch):
            peer.validate_and_commit(block, registry.resolve)
        assert peer.height() == 1

    def test_identical_outcome_on_every_peer(self, registry, alice):
        peers = [fresh_peer(registry, "Org1"), fresh_peer(registry, "Org2")]
        tx1 = endorse(peers[0], alice, "createUser", ["alice", "n1"])
        tx2 = endorse(peers[0], alice, "createUser", ["alice", "n2"])
        flags, _ = commit_block(peers, [tx1, tx2], registry)
        assert flags[0] == flags[1] == [True, False]
        assert peers[0].state_hash() == peers[1].state_hash()

    def test_read_only_transactions_change_no_versions(self, registry, alice):
        peer = fresh_peer(registry)
        commit_block([peer], [endorse(peer, alice, "createUser", ["alice", "n1"])], registry)
        before = peer.state_hash()
        query = endorse(peer, alice, "queryUser", ["alice"])
        (flags,), _ = commit_block([peer], [query], registry)
        assert flags == [True]
        assert peer.state_hash() == before


class TestReplayAndSnapshot:
    def build_ledger(self, registry, alice, n_blocks=5):
        peer = fresh_peer(registry)
        for i in range(n_blocks):
            tx = endorse(peer, alice, "createUser", [f"user{i}", f"n{i}"])
            commit_block([peer], [tx], registry)
        return peer

    def test_replay_on_fresh_peer_reproduces_state(self, registry, alice):
        live = self.build_ledger(registry, alice)
        replayed = Peer("Org1", GanttContract())
        replayed.commit_genesis(live.blocks[0])
        for block in live.blocks[1:]:
            replayed.validate_and_commit(block, registry.resolve)
        assert replayed.state.entries == live.state.entries
        assert replayed.state_hash() == live.state_hash()

    def test_snapshot_round_trip(self, registry, alice):
        live = self.build_ledger(registry, alice)
        doc = live.export_snapshot()
        restored = Peer.import_snapshot(doc, GanttContract(), registry.resolve)
        assert restored.state_hash() == live.state_hash()
        assert restored.export_snapshot() == doc

    def test_deterministic_states_across_peers(self, registry, alice):
        a = self.build_ledger(registry, alice)
        b = Peer("Org2", GanttContract())
        b.commit_genesis(a.blocks[0])
        for block in a.blocks[1:]:
            b.validate_and_commit(block, registry.resolve)
        assert a.state_hash() == b.state_hash()


class TestValidateChain:
    def test_untampered_ledger_is_valid(self, registry, alice):
        peer = TestReplayAndSnapshot().build_ledger(registry, alice)
        assert peer.validate_chain() is True

    def test_mutating_an_argument_invalidate_the_chain(self, registry, alice):
        peer = TestReplayAndSnapshot().build_ledger(registry, alice, n_blocks=6)
        peer.blocks[3].transactions[0].args[0] = "mallory"
        assert peer.validate_chain() is False

    def test_truncated_chain_is_still_valid(self, registry, alice):
        peer = TestReplayAndSnapshot().build_ledger(registry, alice)
        peer.blocks = peer.blocks[:-1]
        assert peer.validate_chain() is True

    def test_tip_block_header_fields_are_covered(self, registry, alice):
        peer = TestReplayAndSnapshot().build_ledger(registry, alice)
        peer.blocks[-1].timestamp += 1
        assert peer.validate_chain() is False
