"""Contract operations driven directly (no ledger), including the relational
integrity scan."""

import json

import pytest

from conftest import make_project, make_task
from ganttchain.contract import DirectContext, GanttContract, scan_integrity
from ganttchain.encoding import canonical_dumps
from ganttchain.errors import ContractError


@pytest.fixture
def ctx():
    return DirectContext()


@pytest.fixture
def contract():
    return GanttContract()


def call(contract, ctx, fn, *args):
    return contract.invoke(ctx, fn, list(args))


def seed_project(contract, ctx, name="proj", manager="m-1", begin="2020-11-15", end="2020-12-31"):
    call(contract, ctx, "createUser", "owner", manager)
    project = make_project(name=name, manager=manager, begin=begin, end=end)
    return call(contract, ctx, "createProject", manager, canonical_dumps(project))


class TestUsers:
    def test_create_and_query(self, contract, ctx):
        call(contract, ctx, "createUser", "user1", "n1")
        assert call(contract, ctx, "queryUser", "user1") == {
            "userName": "user1",
            "userNumber": "n1",
        }

    def test_duplicate_rejected(self, contract, ctx):
        call(contract, ctx, "createUser", "user1", "n1")
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "createUser", "user1", "n2")
        assert err.value.code == "duplicate"

    def test_empty_name_rejected(self, contract, ctx):
        with pytest.raises(ContractError):
            call(contract, ctx, "createUser", "", "n1")

    def test_unknown_user_not_found(self, contract, ctx):
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "queryUser", "ghost")
        assert err.value.code == "notFound"

    def test_user_and_project_names_do_not_collide(self, contract, ctx):
        seed_project(contract, ctx, name="shared-name", manager="m-1")
        call(contract, ctx, "createUser", "shared-name", "n9")
        assert call(contract, ctx, "queryUser", "shared-name")["userNumber"] == "n9"
        assert call(contract, ctx, "queryProject", "shared-name")["manager"] == "m-1"


class TestProjects:
    def test_create_writes_record_and_index(self, contract, ctx):
        seed_project(contract, ctx, name="project1", manager="m-1")
        assert call(contract, ctx, "queryProject", "project1")["tasks"] == []
        assert call(contract, ctx, "queryProIndex", "m-1") == ["project1"]

    def test_duplicate_rejected(self, contract, ctx):
        seed_project(contract, ctx, name="project1")
        project = make_project(name="project1")
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "createProject", "m-1", canonical_dumps(project))
        assert err.value.code == "duplicate"

    def test_done_flag_at_creation_rejected(self, contract, ctx):
        project = make_project(name="p", flag="done")
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "createProject", "m-1", canonical_dumps(project))
        assert err.value.code == "validation"

    def test_reversed_window_rejected(self, contract, ctx):
        project = make_project(name="p", begin="2020-12-31", end="2020-11-15")
        with pytest.raises(ContractError):
            call(contract, ctx, "createProject", "m-1", canonical_dumps(project))

    def test_nonempty_task_list_at_creation_rejected(self, contract, ctx):
        project = make_project(name="p", tasks=[{"userNumber": "x", "taskName": "t"}])
        with pytest.raises(ContractError):
            call(contract, ctx, "createProject", "m-1", canonical_dumps(project))

    def test_index_is_idempotent_and_duplicate_free(self, contract, ctx):
        seed_project(contract, ctx, name="p1", manager="m-1")
        project2 = make_project(name="p2", manager="m-1")
        call(contract, ctx, "createProject", "m-1", canonical_dumps(project2))
        assert call(contract, ctx, "queryProIndex", "m-1") == ["p1", "p2"]
        call(contract, ctx, "createProIndex", "m-1", "p1")
        assert call(contract, ctx, "queryProIndex", "m-1") == ["p1", "p2"]

    def test_index_requires_existing_project(self, contract, ctx):
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "createProIndex", "m-1", "ghost")
        assert err.value.code == "notFound"

    def test_unknown_user_has_empty_index(self, contract, ctx):
        assert call(contract, ctx, "queryProIndex", "nobody") == []

    def test_unknown_project_not_found(self, contract, ctx):
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "queryProject", "ghost")
        assert err.value.code == "notFound"


class TestChangeProject:
    def test_extend_window(self, contract, ctx):
        seed_project(contract, ctx, name="p", end="2020-12-31")
        updated = dict(call(contract, ctx, "queryProject", "p"), endTime="2021-01-07")
        call(contract, ctx, "changeProject", "p", canonical_dumps(updated))
        assert call(contract, ctx, "queryProject", "p")["endTime"] == "2021-01-07"

    def test_shrink_below_existing_task_rejected(self, contract, ctx):
        seed_project(contract, ctx, name="p")
        task = make_task("t1", manager="m-2", project="p", begin="2020-12-01", end="2020-12-20")
        call(contract, ctx, "assignTask", canonical_dumps(task))
        shrunk = dict(call(contract, ctx, "queryProject", "p"), endTime="2020-12-10")
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "changeProject", "p", canonical_dumps(shrunk))
        assert err.value.code == "validation"

    def test_manager_change_persists(self, contract, ctx):
        seed_project(contract, ctx, name="p", manager="m-1")
        updated = dict(call(contract, ctx, "queryProject", "p"), manager="m-9")
        call(contract, ctx, "changeProject", "p", canonical_dumps(updated))
        assert call(contract, ctx, "queryProject", "p")["manager"] == "m-9"

    def test_rename_rejected(self, contract, ctx):
        seed_project(contract, ctx, name="p")
        renamed = dict(call(contract, ctx, "queryProject", "p"), projectName="p2")
        with pytest.raises(ContractError):
            call(contract, ctx, "changeProject", "p", canonical_dumps(renamed))

    def test_tasks_preserved_when_not_provided(self, contract, ctx):
        seed_project(contract, ctx, name="p")
        task = make_task("t1", manager="m-2", project="p", begin="2020-12-01", end="2020-12-20")
        call(contract, ctx, "assignTask", canonical_dumps(task))
        patch = {"projectName": "p", "info": "updated"}
        call(contract, ctx, "changeProject", "p", canonical_dumps(patch))
        record = call(contract, ctx, "queryProject", "p")
        assert record["info"] == "updated"
        assert [e["taskName"] for e in record["tasks"]] == ["t1"]

    def test_unknown_project_not_found(self, contract, ctx):
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "changeProject", "ghost", canonical_dumps({"info": "x"}))
        assert err.value.code == "notFound"

    def test_flag_must_match_task_set(self, contract, ctx):
        seed_project(contract, ctx, name="p")
        flipped = dict(call(contract, ctx, "queryProject", "p"), flag="done")
        with pytest.raises(ContractError):
            call(contract, ctx, "changeProject", "p", canonical_dumps(flipped))


class TestAssignTask:
    def test_assign_updates_task_index_and_project_index(self, contract, ctx):
        seed_project(contract, ctx, name="project1", manager="m-1")
        task = make_task("task1", manager="m-2", project="project1", begin="2020-11-15", end="2020-11-28")
        call(contract, ctx, "assignTask", canonical_dumps(task))
        project = call(contract, ctx, "queryProject", "project1")
        assert project["tasks"] == [{"userNumber": "m-2", "taskName": "task1"}]
        assert call(contract, ctx, "queryProIndex", "m-2") == ["project1"]

    def test_duplicate_task_name_rejected(self, contract, ctx):
        seed_project(contract, ctx, name="project1")
        task = make_task("task1", manager="m-2", project="project1", begin="2020-11-15", end="2020-11-28")
        call(contract, ctx, "assignTask", canonical_dumps(task))
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "assignTask", canonical_dumps(task))
        assert err.value.code == "duplicate"

    def test_unknown_project_rejected(self, contract, ctx):
        task = make_task("task1", project="ghost", begin="2020-11-15", end="2020-11-28")
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "assignTask", canonical_dumps(task))
        assert err.value.code == "notFound"

    def test_out_of_window_rejected(self, contract, ctx):
        seed_project(contract, ctx, name="project1")
        task = make_task("task1", project="project1", begin="2021-01-01", end="2021-01-05")
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "assignTask", canonical_dumps(task))
        assert err.value.code == "validation"

    def test_done_flag_rejected(self, contract, ctx):
        seed_project(contract, ctx, name="project1")
        task = make_task(
            "task1", project="project1", begin="2020-11-15", end="2020-11-28",
            flag="done", completed="2020-11-28",
        )
        with pytest.raises(ContractError):
            call(contract, ctx, "assignTask", canonical_dumps(task))

    def test_unknown_dependence_rejected(self, contract, ctx):
        seed_project(contract, ctx, name="project1")
        task = make_task(
            "task1", project="project1", begin="2020-11-15", end="2020-11-28", dependence=["ghost"]
        )
        with pytest.raises(ContractError):
            call(contract, ctx, "assignTask", canonical_dumps(task))

    def test_query_task(self, contract, ctx):
        seed_project(contract, ctx, name="project1")
        task = make_task("task2", manager="m-3", project="project1", begin="2020-11-29", end="2020-12-05")
        call(contract, ctx, "assignTask", canonical_dumps(task))
        assert call(contract, ctx, "queryTask", "task2")["manager"] == "m-3"
        with pytest.raises(ContractError):
            call(contract, ctx, "queryTask", "ghost")


class TestChangeTask:
    def seed(self, contract, ctx):
        seed_project(contract, ctx, name="project1", manager="m-1")
        for name, mgr, b, e in [
            ("task1", "m-2", "2020-11-15", "2020-11-28"),
            ("task3", "m-4", "2020-12-06", "2020-12-10"),
        ]:
            call(contract, ctx, "assignTask", canonical_dumps(
                make_task(name, manager=mgr, project="project1", begin=b, end=e)
            ))

    def test_change_info_touches_only_the_task(self, contract, ctx):
        self.seed(contract, ctx)
        task = call(contract, ctx, "queryTask", "task3")
        task["endTime"] = "2020-12-12"
        call(contract, ctx, "changeTask", "task3", "changeInfo", canonical_dumps(task))
        assert call(contract, ctx, "queryTask", "task3")["endTime"] == "2020-12-12"
        project = call(contract, ctx, "queryProject", "project1")
        assert {e["taskName"]: e["userNumber"] for e in project["tasks"]} == {
            "task1": "m-2",
            "task3": "m-4",
        }

    def test_change_manager_rewrites_index_and_project_index(self, contract, ctx):
        self.seed(contract, ctx)
        task = call(contract, ctx, "queryTask", "task3")
        task["manager"] = "m-7"
        call(contract, ctx, "changeTask", "task3", "changeManager", canonical_dumps(task))
        assert call(contract, ctx, "queryTask", "task3")["manager"] == "m-7"
        project = call(contract, ctx, "queryProject", "project1")
        entry = next(e for e in project["tasks"] if e["taskName"] == "task3")
        assert entry["userNumber"] == "m-7"
        assert call(contract, ctx, "queryProIndex", "m-7") == ["project1"]
        # the previous manager's index keeps the project (no cleanup op exists)
        assert call(contract, ctx, "queryProIndex", "m-4") == ["project1"]

    def test_unknown_target_rejected(self, contract, ctx):
        self.seed(contract, ctx)
        task = call(contract, ctx, "queryTask", "task3")
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "changeTask", "task3", "rename", canonical_dumps(task))
        assert err.value.code == "validation"

    def test_unknown_task_not_found(self, contract, ctx):
        with pytest.raises(ContractError) as err:
            call(contract, ctx, "changeTask", "ghost", "changeInfo", canonical_dumps({}))
        assert err.value.code == "notFound"

    def test_completion_flips_flags_through_the_project(self, contract, ctx):
        self.seed(contract, ctx)
        for name in ("task1", "task3"):
            task = call(contract, ctx, "queryTask", name)
            task["completedTime"] = task["endTime"]
            task["flag"] = "done"
            call(contract, ctx, "changeTask", name, "changeInfo", canonical_dumps(task))
        assert call(contract, ctx, "queryProject", "project1")["flag"] == "done"
        # a new processing task flips the project back
        call(contract, ctx, "assignTask", canonical_dumps(
            make_task("task9", manager="m-9", project="project1", begin="2020-12-11", end="2020-12-15")
        ))
        assert call(contract, ctx, "queryProject", "project1")["flag"] == "processing"

    def test_inconsistent_completion_rejected(self, contract, ctx):
        self.seed(contract, ctx)
        task = call(contract, ctx, "queryTask", "task1")
        task["completedTime"] = "2020-11-20"
        task["flag"] = "done"  # done requires completedTime == endTime
        with pytest.raises(ContractError):
            call(contract, ctx, "changeTask", "task1", "changeInfo", canonical_dumps(task))

    def test_rename_and_reparent_rejected(self, contract, ctx):
        self.seed(contract, ctx)
        task = call(contract, ctx, "queryTask", "task1")
        with pytest.raises(ContractError):
            call(contract, ctx, "changeTask", "task1", "changeInfo",
                 canonical_dumps(dict(task, taskName="task1b")))
        with pytest.raises(ContractError):
            call(contract, ctx, "changeTask", "task1", "changeInfo",
                 canonical_dumps(dict(task, projectName="other")))


class TestIntegrityScan:
    def test_clean_state_passes(self, contract, ctx):
        TestChangeTask().seed(contract, ctx)
        assert scan_integrity(ctx.state) == []

    def test_dangling_index_detected(self, contract, ctx):
        TestChangeTask().seed(contract, ctx)
        index = json.loads(ctx.state["pi::m-1"])
        index["projectNames"].append("ghost")
        ctx.state["pi::m-1"] = canonical_dumps(index)
        assert any("missing project" in p for p in scan_integrity(ctx.state))

    def test_flag_disagreement_detected(self, contract, ctx):
        TestChangeTask().seed(contract, ctx)
        project = json.loads(ctx.state["p::project1"])
        project["flag"] = "done"
        ctx.state["p::project1"] = canonical_dumps(project)
        assert any("flag" in p for p in scan_integrity(ctx.state))

    def test_bad_arity_rejected(self, contract, ctx):
        with pytest.raises(ContractError):
            call(contract, ctx, "createUser", "only-one-arg")
