"""Scheduling math and chart serialization.

Pure functions over plain task/project records (the same JSON shapes the
contract stores). Dates are ISO-8601 day strings; durations are whole days
with an end-exclusive difference (a task from 2020-11-15 to 2020-11-28
lasts 13 days). Nothing here touches the ledger.
"""

from dataclasses import dataclass
from datetime import date
from typing import Iterable, Mapping, Optional, Sequence

from .encoding import canonical_dumps
from .errors import ValidationError

FLAG_PROCESSING = "processing"
FLAG_DONE = "done"


def parse_day(value: str) -> date:
    try:
        return date.fromisoformat(value)
    except (TypeError, ValueError):
        raise ValidationError(f"not an ISO-8601 day string: {value!r}")


def days_between(begin: str, end: str) -> int:
    """End-exclusive day difference between two ISO day strings."""
    return (parse_day(end) - parse_day(begin)).days


def task_duration(task: Mapping) -> int:
    return days_between(task["beginTime"], task["endTime"])


def sequential_duration(tasks: Sequence[Mapping]) -> int:
    """Total duration when tasks run strictly one after another: sum of
    per-task (endTime - beginTime)."""
    if not tasks:
        raise ValidationError("sequential duration of an empty task list")
    for t in tasks:
        if task_duration(t) <= 0:
            raise ValidationError(f"task {t.get('taskName')!r} has beginTime >= endTime")
    return sum(task_duration(t) for t in tasks)


def key_order_duration(tasks: Sequence[Mapping], key_order: Sequence[str]) -> int:
    """Duration contributed by the key execution order: sum of durations of
    the named subset of `tasks`."""
    if not key_order:
        raise ValidationError("empty key order")
    by_name = {t["taskName"]: t for t in tasks}
    missing = [name for name in key_order if name not in by_name]
    if missing:
        raise ValidationError(f"key order names not in task set: {missing}")
    return sum(task_duration(by_name[name]) for name in key_order)


def derive_key_order(tasks: Sequence[Mapping]) -> list[str]:
    """Dependency chain with the largest total duration.

    Edges come from each task's `dependence` list (a dependency must finish
    before its dependent starts), so a chain is a path in that DAG. Ties are
    broken by the lexicographically smallest task-name sequence, which makes
    the result deterministic. Dependence names outside `tasks` are ignored.
    """
    by_name = {t["taskName"]: t for t in tasks}
    if not by_name:
        raise ValidationError("empty task list")

    preds = {
        name: sorted(d for d in t.get("dependence", []) if d in by_name)
        for name, t in by_name.items()
    }

    # best[name] = (duration, name tuple) of the heaviest chain ending there.
    best: dict[str, tuple[int, tuple[str, ...]]] = {}
    visiting: set[str] = set()

    def chain_ending_at(name: str) -> tuple[int, tuple[str, ...]]:
        if name in best:
            return best[name]
        if name in visiting:
            raise ValidationError(f"dependency cycle through task {name!r}")
        visiting.add(name)
        own = task_duration(by_name[name])
        candidate = (own, (name,))
        for pred in preds[name]:
            d, names = chain_ending_at(pred)
            extended = (d + own, names + (name,))
            # prefer larger duration, then the lexicographically smaller path
            if extended[0] > candidate[0] or (
                extended[0] == candidate[0] and extended[1] < candidate[1]
            ):
                candidate = extended
        visiting.discard(name)
        best[name] = candidate
        return candidate

    winner: Optional[tuple[int, tuple[str, ...]]] = None
    for name in sorted(by_name):
        d, names = chain_ending_at(name)
        if winner is None or d > winner[0] or (d == winner[0] and names < winner[1]):
            winner = (d, names)
    assert winner is not None
    return list(winner[1])


@dataclass
class DurationReport:
    """Eq-style duration summary for a task set."""

    delta_t: int
    delta_t_theory: int
    key_order: list[str]


def duration_report(tasks: Sequence[Mapping]) -> DurationReport:
    order = derive_key_order(tasks)
    return DurationReport(
        delta_t=sequential_duration(tasks),
        delta_t_theory=key_order_duration(tasks, order),
        key_order=order,
    )


@dataclass
class Violation:
    code: str
    message: str

    def __str__(self) -> str:  # pragma: no cover - debugging aid
        return f"{self.code}: {self.message}"


def validate_task_against_project(
    task: Mapping,
    project: Mapping,
    existing_tasks: Sequence[Mapping] = (),
    check_dependence_timing: bool = True,
) -> list[Violation]:
    """Report every scheduling rule the task breaks against its project.

    Rules: beginTime < endTime; beginTime in [project begin, project end);
    endTime in (project begin, project end]; the task set's overall span may
    not exceed the project window; completedTime (when present) in
    (beginTime, endTime] with flag done exactly when completedTime hits
    endTime; dependencies must exist in `existing_tasks` and (when timing is
    checked) finish no later than the task starts.

    Violations are returned as data; nothing raises.
    """
    out: list[Violation] = []
    for field in ("beginTime", "endTime"):
        try:
            parse_day(task[field])
        except (ValidationError, KeyError):
            out.append(Violation("date", f"task {field} is not an ISO day string"))
            return out
    b_t, e_t = task["beginTime"], task["endTime"]
    bp_t, ep_t = project["beginTime"], project["endTime"]

    if b_t >= e_t:
        out.append(Violation("order", f"beginTime {b_t} must precede endTime {e_t}"))
    if not (bp_t <= b_t < ep_t):
        out.append(Violation("window", f"beginTime {b_t} outside [{bp_t}, {ep_t})"))
    if not (bp_t < e_t <= ep_t):
        out.append(Violation("window", f"endTime {e_t} outside ({bp_t}, {ep_t}]"))

    others = [t for t in existing_tasks if t["taskName"] != task["taskName"]]
    all_tasks = others + [task]
    span_begin = min(t["beginTime"] for t in all_tasks)
    span_end = max(t["endTime"] for t in all_tasks)
    if days_between(span_begin, span_end) > days_between(bp_t, ep_t):
        out.append(
            Violation(
                "span",
                f"task span {span_begin}..{span_end} exceeds project window {bp_t}..{ep_t}",
            )
        )

    c_t = task.get("completedTime")
    flag = task.get("flag", FLAG_PROCESSING)
    if flag not in (FLAG_PROCESSING, FLAG_DONE):
        out.append(Violation("flag", f"unknown flag {flag!r}"))
    if c_t is not None:
        if not (b_t < c_t <= e_t):
            out.append(Violation("completion", f"completedTime {c_t} outside ({b_t}, {e_t}]"))
        if (c_t == e_t) != (flag == FLAG_DONE):
            out.append(Violation("completion", "flag is done exactly when completedTime equals endTime"))
    elif flag == FLAG_DONE:
        out.append(Violation("completion", "done task must carry completedTime == endTime"))

    known = {t["taskName"]: t for t in others}
    for dep_name in task.get("dependence", []):
        dep = known.get(dep_name)
        if dep is None:
            out.append(Violation("dependence-missing", f"dependency {dep_name!r} is not a task of this project"))
        elif check_dependence_timing and b_t < dep["endTime"]:
            out.append(
                Violation(
                    "dependence-timing",
                    f"task starts {b_t}, before dependency {dep_name!r} ends {dep['endTime']}",
                )
            )
    return out


def document_row_order(task: Mapping) -> tuple[str, str]:
    return (task["beginTime"], task["taskName"])


def build_gantt_document(
    project: Mapping,
    tasks: Sequence[Mapping],
    user_names: Optional[Mapping[str, str]] = None,
) -> dict:
    """Chart payload consumed by clients: one row per task, planned bar over
    (beginTime, endTime) and a completed bar over (beginTime, completedTime)
    when progress has been reported. Rows are ordered by beginTime then
    taskName so equal inputs serialize to identical bytes."""
    names = user_names or {}
    rows = []
    for task in sorted(tasks, key=document_row_order):
        if task["projectName"] != project["projectName"]:
            raise ValidationError(
                f"task {task['taskName']!r} belongs to {task['projectName']!r},"
                f" not {project['projectName']!r}"
            )
        c_t = task.get("completedTime")
        rows.append(
            {
                "taskName": task["taskName"],
                "manager": names.get(task["manager"], task["manager"]),
                "plannedInterval": {"beginTime": task["beginTime"], "endTime": task["endTime"]},
                "completedInterval": None
                if c_t is None
                else {"beginTime": task["beginTime"], "completedTime": c_t},
                "flag": task["flag"],
                "dependence": list(task.get("dependence", [])),
            }
        )
    return {
        "projectName": project["projectName"],
        "window": {"beginTime": project["beginTime"], "endTime": project["endTime"]},
        "rows": rows,
    }


def serialize_document(document: Mapping) -> str:
    return canonical_dumps(document)


def enumerate_chains(tasks: Sequence[Mapping]) -> Iterable[list[str]]:
    """Every dependency chain (path in the dependence DAG), for brute-force
    comparison against derive_key_order in tests."""
    by_name = {t["taskName"]: t for t in tasks}
    successors: dict[str, list[str]] = {name: [] for name in by_name}
    for name, t in by_name.items():
        for dep in t.get("dependence", []):
            if dep in by_name:
                successors[dep].append(name)

    def walk(path: list[str]) -> Iterable[list[str]]:
        yield list(path)
        for nxt in successors[path[-1]]:
            if nxt in path:
                raise ValidationError(f"dependency cycle through task {nxt!r}")
            path.append(nxt)
            yield from walk(path)
            path.pop()

    for name in by_name:
        yield from walk([name])
