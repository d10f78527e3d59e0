import pytest

from ganttchain.config import Config
from ganttchain.consensus import BatchConfig
from ganttchain.service import GanttService


def fast_config(tmp_path, **overrides) -> Config:
    """Short batch timeout and tiny delivery delay so commit-waiting tests
    run in milliseconds."""
    defaults = dict(
        orgs=["Org1", "Org2"],
        consensus="solo",
        batch=BatchConfig(max_transactions=100, batch_timeout_ms=150),
        block_delivery_delay_ms=1.0,
        wallet_dir=str(tmp_path / "wallet"),
        invoke_timeout_s=60.0,
    )
    defaults.update(overrides)
    return Config(**defaults)


@pytest.fixture
def service(tmp_path):
    with GanttService(fast_config(tmp_path)) as svc:
        yield svc


def make_task(
    name,
    manager="m-1",
    project="proj",
    begin="2020-11-15",
    end="2020-11-28",
    flag="processing",
    completed=None,
    dependence=(),
    info="",
):
    return {
        "taskName": name,
        "manager": manager,
        "projectName": project,
        "flag": flag,
        "beginTime": begin,
        "endTime": end,
        "completedTime": completed,
        "dependence": list(dependence),
        "info": info,
    }


def make_project(
    name="proj",
    manager="m-1",
    begin="2020-11-15",
    end="2020-12-31",
    flag="processing",
    tasks=(),
    info="",
):
    return {
        "projectName": name,
        "manager": manager,
        "flag": flag,
        "beginTime": begin,
        "endTime": end,
        "tasks": list(tasks),
        "info": info,
    }
