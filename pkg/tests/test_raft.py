"""Raft safety and liveness on virtual time (deterministic)."""

import random

import pytest

from ganttchain.raft import LEADER, RaftCluster, SimScheduler


def make_cluster(seed=7, size=3, deliveries=None):
    sim = SimScheduler()
    cluster = RaftCluster(
        size,
        sim,
        rng=random.Random(seed),
        message_delay_ms=5,
        election_range_ms=(150, 300),
        heartbeat_ms=50,
        on_deliver=(deliveries.append if deliveries is not None else None),
    )
    return sim, cluster


def settle(sim, ms=1000):
    sim.run_for(ms)


class TestElection:
    def test_exactly_one_leader_emerges(self):
        sim, cluster = make_cluster()
        settle(sim)
        leaders = [n for n in cluster.nodes if n.role == LEADER]
        assert len(leaders) == 1

    def test_terms_match_after_election(self):
        sim, cluster = make_cluster()
        settle(sim)
        terms = {n.current_term for n in cluster.nodes}
        assert len(terms) == 1

    def test_even_or_small_cluster_rejected(self):
        sim = SimScheduler()
        with pytest.raises(ValueError):
            RaftCluster(2, sim)
        with pytest.raises(ValueError):
            RaftCluster(1, sim)


class TestReplication:
    def test_proposals_deliver_in_order_exactly_once(self):
        deliveries = []
        sim, cluster = make_cluster(deliveries=deliveries)
        settle(sim)
        for i in range(5):
            assert cluster.propose(f"payload-{i}")
            settle(sim, 200)
        assert deliveries == [f"payload-{i}" for i in range(5)]

    def test_logs_identical_across_nodes(self):
        sim, cluster = make_cluster()
        settle(sim)
        for i in range(4):
            cluster.propose(i)
            settle(sim, 200)
        logs = [[e.payload for e in n.log] for n in cluster.nodes]
        assert logs[0] == logs[1] == logs[2] == [0, 1, 2, 3]

    def test_propose_to_non_leader_fails(self):
        sim, cluster = make_cluster()
        settle(sim)
        follower = next(n for n in cluster.nodes if n.role != LEADER)
        assert follower.propose("x") is None


class TestLeaderCrash:
    def test_committed_blocks_survive_leader_loss(self):
        deliveries = []
        sim, cluster = make_cluster(deliveries=deliveries)
        settle(sim)
        for i in range(3):
            cluster.propose(f"b{i}")
            settle(sim, 200)
        dead = cluster.crash_leader()
        assert dead is not None
        settle(sim, 2000)  # a survivor takes over
        new_leader = cluster.leader()
        assert new_leader is not None and new_leader.node_id != dead
        survivors = cluster.alive_nodes()
        for node in survivors:
            assert cluster.committed_payloads(node)[: 3] == ["b0", "b1", "b2"]
        # and progress continues
        assert cluster.propose("b3")
        settle(sim, 500)
        assert deliveries[-1] == "b3"

    def test_committed_prefixes_agree_under_repeated_crashes(self):
        sim, cluster = make_cluster(seed=13, size=5)
        settle(sim)
        sent = 0
        for round_no in range(3):
            for _ in range(3):
                if cluster.propose(f"p{sent}"):
                    sent += 1
                settle(sim, 300)
            cluster.crash_leader()
            settle(sim, 2500)
        alive = cluster.alive_nodes()
        assert len(alive) == 2  # 5 nodes, 3 crashed... quorum lost at the end
        prefixes = [cluster.committed_payloads(n) for n in cluster.nodes]
        shortest = min(len(p) for p in prefixes)
        for p in prefixes:
            assert p[:shortest] == prefixes[0][:shortest]


class TestPartitions:
    def test_minority_partition_does_not_stop_progress(self):
        deliveries = []
        sim, cluster = make_cluster(deliveries=deliveries)
        settle(sim)
        leader = cluster.leader()
        bystander = next(n for n in cluster.nodes if n.role != LEADER)
        cluster.transport.partition([bystander.node_id], [n.node_id for n in cluster.nodes if n is not bystander])
        cluster.propose("with-quorum")
        settle(sim, 500)
        assert deliveries == ["with-quorum"]
        assert cluster.leader() is leader

    def test_isolated_leader_cannot_commit(self):
        deliveries = []
        sim, cluster = make_cluster(deliveries=deliveries)
        settle(sim)
        leader = cluster.leader()
        others = [n.node_id for n in cluster.nodes if n is not leader]
        cluster.transport.partition([leader.node_id], others)
        leader.propose("doomed")
        settle(sim, 2000)
        assert "doomed" not in [e.payload for n in cluster.nodes for e in n.log[: n.commit_index + 1]]
        assert leader.commit_index < len(leader.log) - 1

    def test_heal_reconciles_divergent_logs(self):
        deliveries = []
        sim, cluster = make_cluster(deliveries=deliveries)
        settle(sim)
        old_leader = cluster.leader()
        others = [n.node_id for n in cluster.nodes if n is not old_leader]
        cluster.transport.partition([old_leader.node_id], others)
        old_leader.propose("lost")  # uncommitted on a minority leader
        settle(sim, 2000)
        new_leader = next(
            (n for n in cluster.nodes if n.role == LEADER and n is not old_leader), None
        )
        assert new_leader is not None
        new_leader.propose("kept")
        settle(sim, 500)
        cluster.transport.heal()
        settle(sim, 2000)
        # the divergent entry was overwritten by the new leader's log
        committed = [
            [e.payload for e in n.log[: n.commit_index + 1]] for n in cluster.nodes
        ]
        assert all("lost" not in log for log in committed)
        assert all("kept" in log for log in committed)
