"""The Gantt smart contract: domain records and their data-access operations.

All functions run inside a simulation context (get/put/delState) and are
deterministic. Keys carry a kind prefix ("u::", "p::", "t::", "pi::") so a
user and a project may share a name without clobbering each other. Record
payloads are canonical JSON strings.

The contract owns relational integrity: creating a project or assigning a
task also maintains the creator's/manager's project index, and any task
write recomputes the owning project's flag (a project is done exactly when
it has tasks and all of them are done).
"""

import json
from typing import Mapping, Optional, Sequence

from .encoding import canonical_dumps
from .errors import ContractError
from .schedule import (
    FLAG_DONE,
    FLAG_PROCESSING,
    parse_day,
    validate_task_against_project,
)

USER_PREFIX = "u::"
PROJECT_PREFIX = "p::"
TASK_PREFIX = "t::"
PROJECT_INDEX_PREFIX = "pi::"


def user_key(user_name: str) -> str:
    return USER_PREFIX + user_name


def project_key(project_name: str) -> str:
    return PROJECT_PREFIX + project_name


def task_key(task_name: str) -> str:
    return TASK_PREFIX + task_name


def project_index_key(user_number: str) -> str:
    return PROJECT_INDEX_PREFIX + user_number


def _require_name(value, what: str) -> str:
    if not isinstance(value, str) or not value:
        raise ContractError("validation", f"{what} must be a non-empty string")
    return value


def _get_record(ctx, key: str) -> Optional[dict]:
    raw = ctx.get_state(key)
    return None if raw is None else json.loads(raw)


def _put_record(ctx, key: str, record: Mapping) -> None:
    ctx.put_state(key, canonical_dumps(record))


def _parse_record(arg: str, what: str) -> dict:
    try:
        record = json.loads(arg)
    except (TypeError, ValueError):
        raise ContractError("validation", f"{what} payload is not valid JSON")
    if not isinstance(record, dict):
        raise ContractError("validation", f"{what} payload must be a JSON object")
    return record


def _check_window(record: Mapping, what: str) -> None:
    begin = parse_day(record["beginTime"])
    end = parse_day(record["endTime"])
    if begin >= end:
        raise ContractError(
            "validation", f"{what} beginTime {record['beginTime']} must precede endTime {record['endTime']}"
        )


class GanttContract:
    """Dispatch table for the contract's wire-visible functions."""

    def __init__(self) -> None:
        self._functions = {
            "createUser": (self.create_user, 2),
            "queryUser": (self.query_user, 1),
            "createProject": (self.create_project, 2),
            "createProIndex": (self.create_pro_index, 2),
            "queryProIndex": (self.query_pro_index, 1),
            "queryProject": (self.query_project, 1),
            "changeProject": (self.change_project, 2),
            "assignTask": (self.assign_task, 1),
            "queryTask": (self.query_task, 1),
            "changeTask": (self.change_task, 3),
        }

    def invoke(self, ctx, function: str, args: Sequence[str]):
        entry = self._functions.get(function)
        if entry is None:
            raise ContractError("validation", f"unknown contract function {function!r}")
        handler, arity = entry
        if len(args) != arity:
            raise ContractError(
                "validation", f"{function} expects {arity} argument(s), got {len(args)}"
            )
        return handler(ctx, *args)

    # -- members ---------------------------------------------------------

    def create_user(self, ctx, user_name: str, user_number: str) -> dict:
        _require_name(user_name, "userName")
        _require_name(user_number, "userNumber")
        key = user_key(user_name)
        if ctx.get_state(key) is not None:
            raise ContractError("duplicate", f"user {user_name!r} already exists")
        record = {"userName": user_name, "userNumber": user_number}
        _put_record(ctx, key, record)
        return record

    def query_user(self, ctx, user_name: str) -> dict:
        _require_name(user_name, "userName")
        record = _get_record(ctx, user_key(user_name))
        if record is None:
            raise ContractError("notFound", f"user {user_name!r} not found")
        return record

    # -- projects ---------------------------------------------------------

    def create_project(self, ctx, user_number: str, project_json: str) -> dict:
        _require_name(user_number, "userNumber")
        raw = _parse_record(project_json, "project")
        name = _require_name(raw.get("projectName"), "projectName")
        project = {
            "projectName": name,
            "manager": raw.get("manager", user_number),
            "flag": raw.get("flag", FLAG_PROCESSING),
            "beginTime": raw.get("beginTime"),
            "endTime": raw.get("endTime"),
            "tasks": raw.get("tasks", []),
            "info": raw.get("info", ""),
        }
        if project["manager"] != user_number:
            raise ContractError("validation", "project manager must be the creating member")
        if project["flag"] != FLAG_PROCESSING:
            raise ContractError("validation", "a new project must start with flag 'processing'")
        if project["tasks"]:
            raise ContractError("validation", "a new project must start with an empty task set")
        _check_window(project, "project")
        key = project_key(name)
        if ctx.get_state(key) is not None:
            raise ContractError("duplicate", f"project {name!r} already exists")
        _put_record(ctx, key, project)
        self.create_pro_index(ctx, user_number, name)
        return project

    def create_pro_index(self, ctx, user_number: str, project_name: str) -> dict:
        _require_name(user_number, "userNumber")
        _require_name(project_name, "projectName")
        # an index entry must resolve to a stored project, or scans would
        # find dangling references
        if ctx.get_state(project_key(project_name)) is None:
            raise ContractError("notFound", f"project {project_name!r} not found")
        key = project_index_key(user_number)
        record = _get_record(ctx, key) or {"userNumber": user_number, "projectNames": []}
        if project_name not in record["projectNames"]:
            record["projectNames"].append(project_name)
            _put_record(ctx, key, record)
        return record

    def query_pro_index(self, ctx, user_number: str) -> list[str]:
        _require_name(user_number, "userNumber")
        record = _get_record(ctx, project_index_key(user_number))
        return [] if record is None else list(record["projectNames"])

    def query_project(self, ctx, project_name: str) -> dict:
        _require_name(project_name, "projectName")
        record = _get_record(ctx, project_key(project_name))
        if record is None:
            raise ContractError("notFound", f"project {project_name!r} not found")
        return record

    def change_project(self, ctx, project_name: str, new_data_json: str) -> dict:
        _require_name(project_name, "projectName")
        current = _get_record(ctx, project_key(project_name))
        if current is None:
            raise ContractError("notFound", f"project {project_name!r} not found")
        raw = _parse_record(new_data_json, "project")
        if raw.get("projectName", project_name) != project_name:
            raise ContractError("validation", "a project cannot be renamed")
        updated = {
            "projectName": project_name,
            "manager": raw.get("manager", current["manager"]),
            "flag": raw.get("flag", current["flag"]),
            "beginTime": raw.get("beginTime", current["beginTime"]),
            "endTime": raw.get("endTime", current["endTime"]),
            "tasks": raw["tasks"] if "tasks" in raw else current["tasks"],
            "info": raw.get("info", current["info"]),
        }
        _require_name(updated["manager"], "manager")
        _check_window(updated, "project")
        if "tasks" in raw:
            new_names = [e.get("taskName") for e in updated["tasks"]]
            if sorted(new_names) != sorted(e["taskName"] for e in current["tasks"]):
                raise ContractError(
                    "validation", "the task set can only change through assignTask/changeTask"
                )
        tasks = self._resolve_tasks(ctx, updated)
        for entry, task in zip(updated["tasks"], tasks):
            if task["projectName"] != project_name or entry.get("userNumber") != task["manager"]:
                raise ContractError(
                    "validation", f"task index entry for {task['taskName']!r} is inconsistent"
                )
        for task in tasks:
            violations = validate_task_against_project(
                task, updated, tasks, check_dependence_timing=False
            )
            if violations:
                raise ContractError(
                    "validation",
                    f"task {task['taskName']!r} would violate the new project data: "
                    + "; ".join(v.message for v in violations),
                )
        expected_flag = self._derived_flag(tasks)
        if updated["flag"] != expected_flag:
            raise ContractError(
                "validation",
                f"project flag must be {expected_flag!r} for its current task set",
            )
        _put_record(ctx, project_key(project_name), updated)
        return updated

    # -- tasks -------------------------------------------------------------

    def assign_task(self, ctx, task_json: str) -> dict:
        raw = _parse_record(task_json, "task")
        name = _require_name(raw.get("taskName"), "taskName")
        task = {
            "taskName": name,
            "manager": _require_name(raw.get("manager"), "manager"),
            "projectName": _require_name(raw.get("projectName"), "projectName"),
            "flag": raw.get("flag", FLAG_PROCESSING),
            "beginTime": raw.get("beginTime"),
            "endTime": raw.get("endTime"),
            "completedTime": raw.get("completedTime"),
            "dependence": list(raw.get("dependence", [])),
            "info": raw.get("info", ""),
        }
        if task["flag"] != FLAG_PROCESSING or task["completedTime"] is not None:
            raise ContractError("validation", "a new task must be 'processing' with no completedTime")
        if ctx.get_state(task_key(name)) is not None:
            raise ContractError("duplicate", f"task {name!r} already exists")
        project = _get_record(ctx, project_key(task["projectName"]))
        if project is None:
            raise ContractError("notFound", f"project {task['projectName']!r} not found")
        existing = self._resolve_tasks(ctx, project)
        self._require_valid_task(task, project, existing)
        _put_record(ctx, task_key(name), task)
        project["tasks"] = list(project["tasks"]) + [
            {"userNumber": task["manager"], "taskName": name}
        ]
        self._finalize_project(ctx, project)
        self.create_pro_index(ctx, task["manager"], task["projectName"])
        return task

    def query_task(self, ctx, task_name: str) -> dict:
        _require_name(task_name, "taskName")
        record = _get_record(ctx, task_key(task_name))
        if record is None:
            raise ContractError("notFound", f"task {task_name!r} not found")
        return record

    def change_task(self, ctx, task_name: str, target: str, task_data_json: str) -> dict:
        _require_name(task_name, "taskName")
        current = _get_record(ctx, task_key(task_name))
        if current is None:
            raise ContractError("notFound", f"task {task_name!r} not found")
        if target not in ("changeInfo", "changeManager"):
            raise ContractError("validation", f"unknown changeTask target {target!r}")
        raw = _parse_record(task_data_json, "task")
        task = {
            "taskName": task_name,
            "manager": raw.get("manager", current["manager"]),
            "projectName": current["projectName"],
            "flag": raw.get("flag", current["flag"]),
            "beginTime": raw.get("beginTime", current["beginTime"]),
            "endTime": raw.get("endTime", current["endTime"]),
            "completedTime": raw.get("completedTime", current["completedTime"]),
            "dependence": list(raw.get("dependence", current["dependence"])),
            "info": raw.get("info", current["info"]),
        }
        _require_name(task["manager"], "manager")
        if raw.get("taskName", task_name) != task_name:
            raise ContractError("validation", "a task cannot be renamed")
        if raw.get("projectName", current["projectName"]) != current["projectName"]:
            raise ContractError("validation", "a task cannot move between projects")
        if target == "changeInfo" and task["manager"] != current["manager"]:
            # changeInfo rewrites only the task record; a manager change must
            # also rewrite the project's task index, which is changeManager's job
            raise ContractError("validation", "use changeManager to reassign the person in charge")
        project = _get_record(ctx, project_key(task["projectName"]))
        if project is None:
            raise ContractError("notFound", f"project {task['projectName']!r} not found")
        existing = self._resolve_tasks(ctx, project)
        self._require_valid_task(task, project, existing)

        if target == "changeManager":
            for index_entry in project["tasks"]:
                if index_entry["taskName"] == task_name:
                    index_entry["userNumber"] = task["manager"]
            self.create_pro_index(ctx, task["manager"], task["projectName"])
            ctx.put_state(task_key(task_name), canonical_dumps(task))
        else:
            ctx.del_state(task_key(task_name))
            ctx.put_state(task_key(task_name), canonical_dumps(task))
        self._finalize_project(ctx, project)
        return task

    # -- shared helpers ------------------------------------------------------

    def _resolve_tasks(self, ctx, project: Mapping) -> list[dict]:
        tasks = []
        for entry in project["tasks"]:
            name = entry.get("taskName") if isinstance(entry, Mapping) else None
            if not name:
                raise ContractError("validation", "malformed task index entry")
            record = _get_record(ctx, task_key(name))
            if record is None:
                raise ContractError("validation", f"task index names missing task {name!r}")
            tasks.append(record)
        return tasks

    def _require_valid_task(self, task: Mapping, project: Mapping, existing: Sequence[Mapping]) -> None:
        _check_window(task, "task")
        # Dependence timing is the coordination layer's rule (it can consult
        # the request context); the contract still pins window containment,
        # the overall-span bound, completion rules and dependence existence.
        violations = validate_task_against_project(
            task, project, existing, check_dependence_timing=False
        )
        if violations:
            raise ContractError("validation", "; ".join(v.message for v in violations))

    def _derived_flag(self, tasks: Sequence[Mapping]) -> str:
        if tasks and all(t["flag"] == FLAG_DONE for t in tasks):
            return FLAG_DONE
        return FLAG_PROCESSING

    def _finalize_project(self, ctx, project: dict) -> None:
        """Persist the project with its flag recomputed from current tasks
        (reads see this transaction's own writes, so a task updated earlier
        in the call counts with its new value)."""
        tasks = self._resolve_tasks(ctx, project)
        project["flag"] = self._derived_flag(tasks)
        _put_record(ctx, project_key(project["projectName"]), project)


class DirectContext:
    """Auto-commit context over a plain dict, for contract-level tests and
    dev runs that do not need endorsement or ordering."""

    def __init__(self, state: Optional[dict[str, str]] = None):
        self.state = {} if state is None else state

    def get_state(self, key: str) -> Optional[str]:
        return self.state.get(key)

    def put_state(self, key: str, value: str) -> None:
        self.state[key] = value

    def del_state(self, key: str) -> None:
        self.state.pop(key, None)


def scan_integrity(entries: Mapping[str, str]) -> list[str]:
    """Full-state scan of the relational and scheduling invariants.

    Returns human-readable violation strings; an empty list means the state
    is coherent: indexes resolve both ways, project flags agree with their
    task sets, and every stored task respects its project window.
    """
    problems: list[str] = []
    users: dict[str, dict] = {}
    projects: dict[str, dict] = {}
    tasks: dict[str, dict] = {}
    indexes: dict[str, dict] = {}
    for key, raw in entries.items():
        record = json.loads(raw)
        if key.startswith(USER_PREFIX):
            users[key[len(USER_PREFIX):]] = record
        elif key.startswith(PROJECT_PREFIX):
            projects[key[len(PROJECT_PREFIX):]] = record
        elif key.startswith(TASK_PREFIX):
            tasks[key[len(TASK_PREFIX):]] = record
        elif key.startswith(PROJECT_INDEX_PREFIX):
            indexes[key[len(PROJECT_INDEX_PREFIX):]] = record
        else:
            problems.append(f"key {key!r} has no known prefix")

    for user_number, index in indexes.items():
        names = index["projectNames"]
        if len(set(names)) != len(names):
            problems.append(f"project index of {user_number} holds duplicates: {names}")
        for name in names:
            if name not in projects:
                problems.append(f"project index of {user_number} names missing project {name!r}")

    for name, project in projects.items():
        member_tasks = []
        for entry in project["tasks"]:
            task = tasks.get(entry["taskName"])
            if task is None:
                problems.append(f"project {name!r} indexes missing task {entry['taskName']!r}")
                continue
            member_tasks.append(task)
            if task["projectName"] != name:
                problems.append(
                    f"task {entry['taskName']!r} is indexed by {name!r} but belongs to {task['projectName']!r}"
                )
            if entry["userNumber"] != task["manager"]:
                problems.append(
                    f"task index for {entry['taskName']!r} names manager {entry['userNumber']!r},"
                    f" task says {task['manager']!r}"
                )
        expected = FLAG_DONE if member_tasks and all(
            t["flag"] == FLAG_DONE for t in member_tasks
        ) else FLAG_PROCESSING
        if project["flag"] != expected:
            problems.append(f"project {name!r} flag {project['flag']!r}, task set implies {expected!r}")
        for task in member_tasks:
            violations = validate_task_against_project(
                task, project, member_tasks, check_dependence_timing=False
            )
            for v in violations:
                problems.append(f"task {task['taskName']!r}: {v.message}")

    for name, task in tasks.items():
        project = projects.get(task["projectName"])
        if project is None:
            problems.append(f"task {name!r} names missing project {task['projectName']!r}")
            continue
        if name not in [e["taskName"] for e in project["tasks"]]:
            problems.append(f"task {name!r} is not indexed by its project {task['projectName']!r}")
        index = indexes.get(task["manager"])
        if index is None or task["projectName"] not in index["projectNames"]:
            problems.append(
                f"manager {task['manager']!r} of task {name!r} has no index entry for {task['projectName']!r}"
            )
    return problems
