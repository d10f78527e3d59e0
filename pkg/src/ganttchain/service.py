"""Coordination service: org-aware gateway selection and the task-allocation
workflows.

This is the layer the HTTP endpoints and the benchmark drive. Sessions are
(userName, org) wallet lookups; every contract call made under a session
goes through that org's peer. Mutations return only after the transaction
is committed on all peers, so a chart fetched right after a successful
change always reflects it. A transaction invalidated by a concurrent
conflict is re-simulated once before the failure surfaces as a timeout.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

from .config import Config
from .contract import GanttContract
from .encoding import canonical_dumps
from .errors import GanttChainError, PermissionDenied, ValidationError
from .identity import Identity, IdentityManager, IdentityRegistry, Wallet
from .ledger import now_ms
from .network import Network, TransactionInvalidated
from .schedule import (
    FLAG_PROCESSING,
    build_gantt_document,
    document_row_order,
    validate_task_against_project,
)


@dataclass
class Session:
    user_name: str
    org: str
    user_number: str
    identity: Identity


class _Gateway:
    """Ledger access handed to the identity manager."""

    def __init__(self, service: "GanttService"):
        self._service = service

    def invoke(self, identity, function, args):
        return self._service.invoke(identity, function, args)

    def query(self, identity, function, args):
        return self._service.query(identity, function, args)


class GanttService:
    def __init__(self, config: Optional[Config] = None, clock=now_ms):
        self.config = config or Config()
        self.registry = IdentityRegistry()
        self.contract = GanttContract()
        self.network = Network(
            self.config.orgs,
            self.registry,
            contract=self.contract,
            consensus=self.config.consensus,
            batch_cfg=self.config.batch,
            pow_cfg=self.config.pow,
            raft_nodes=self.config.raft_nodes,
            raft_message_delay_ms=self.config.raft_message_delay_ms,
            block_delivery_delay_ms=self.config.block_delivery_delay_ms,
            clock=clock,
        )
        self.wallet = Wallet(self.config.wallet_dir)
        self.identities = IdentityManager(
            self.config.orgs, self.wallet, self.registry, _Gateway(self), clock=clock
        )
        # userNumber -> userName, for chart rows; filled by register/login
        self.user_directory: dict[str, str] = {}

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "GanttService":
        self.network.start()
        self.bootstrap_admins()
        return self

    def stop(self) -> None:
        self.network.stop()

    def __enter__(self) -> "GanttService":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def bootstrap_admins(self) -> None:
        for org in self.config.orgs:
            if org not in self.identities.admins:
                self.identities.register_admin(org, self.config.admin_name, self.config.admin_password)

    # -- ledger access -------------------------------------------------------

    def query(self, identity, function: str, args: Sequence[str]):
        return self.network.query(identity, function, args)

    def invoke(self, identity, function: str, args: Sequence[str]):
        try:
            return self.network.invoke(identity, function, args, timeout_s=self.config.invoke_timeout_s)
        except TransactionInvalidated:
            # conflicting write landed first; one re-simulation against the
            # new state, then give up
            return self.network.invoke(identity, function, args, timeout_s=self.config.invoke_timeout_s)

    # -- membership ------------------------------------------------------------

    def register_user(self, user_name: str, org: str) -> dict:
        result = self.identities.register_user(user_name, org)
        self.user_directory[result["userNumber"]] = user_name
        return result

    def login(self, user_name: str, org: str) -> dict:
        result = self.identities.login(user_name, org)
        self.user_directory[result["userNumber"]] = user_name
        return result

    def session(self, user_name: str, org: str) -> Session:
        record = self.login(user_name, org)
        identity = self.wallet.get(org, user_name)
        assert identity is not None  # login would have raised
        return Session(
            user_name=user_name,
            org=org,
            user_number=record["userNumber"],
            identity=identity,
        )

    # -- projects ---------------------------------------------------------------

    def create_project(
        self,
        session: Session,
        project_name: str,
        begin_time: str,
        end_time: str,
        info: str = "",
    ) -> dict:
        project = {
            "projectName": project_name,
            "manager": session.user_number,
            "flag": FLAG_PROCESSING,
            "beginTime": begin_time,
            "endTime": end_time,
            "tasks": [],
            "info": info,
        }
        return self.invoke(
            session.identity, "createProject", [session.user_number, canonical_dumps(project)]
        )

    def query_projects(self, session: Session) -> list[dict]:
        names = self.query(session.identity, "queryProIndex", [session.user_number])
        return [self.query(session.identity, "queryProject", [name]) for name in names]

    def _project_tasks(self, session: Session, project: dict) -> list[dict]:
        tasks = [
            self.query(session.identity, "queryTask", [entry["taskName"]])
            for entry in project["tasks"]
        ]
        return sorted(tasks, key=document_row_order)

    def get_tasks(self, session: Session, project_name: str) -> list[dict]:
        project = self.query(session.identity, "queryProject", [project_name])
        return self._project_tasks(session, project)

    def gantt_document(self, session: Session, project_name: str) -> dict:
        project = self.query(session.identity, "queryProject", [project_name])
        tasks = self._project_tasks(session, project)
        return build_gantt_document(project, tasks, self.user_directory)

    # -- task allocation -----------------------------------------------------------

    def assign_task(
        self,
        session: Session,
        project_name: str,
        task_name: str,
        manager: str,
        begin_time: str,
        end_time: str,
        flag: str = FLAG_PROCESSING,
        info: str = "",
        dependence: Optional[Sequence[str]] = None,
    ) -> dict:
        """Allocate a task schedule in a project (the plan flow).

        Only the project manager may assign. The task starts with no
        completion, must sit inside the project window, must not stretch the
        task set beyond the project span, and may only depend on existing
        tasks of the same project that finish before it starts.
        """
        project = self.query(session.identity, "queryProject", [project_name])
        if project["manager"] != session.user_number:
            raise PermissionDenied(
                f"{session.user_name!r} is not the manager of project {project_name!r}"
            )
        if flag != FLAG_PROCESSING:
            raise ValidationError("a new task schedule must have flag 'processing'")
        manager_record = self._resolve_member(session, manager)
        task = {
            "taskName": task_name,
            "manager": manager_record["userNumber"],
            "projectName": project_name,
            "flag": FLAG_PROCESSING,
            "beginTime": begin_time,
            "endTime": end_time,
            "completedTime": None,
            "dependence": list(dependence or []),
            "info": info,
        }
        existing = self._project_tasks(session, project)
        violations = validate_task_against_project(
            task, project, existing, check_dependence_timing=True
        )
        if violations:
            raise ValidationError("; ".join(v.message for v in violations))
        return self.invoke(session.identity, "assignTask", [canonical_dumps(task)])

    def _resolve_member(self, session: Session, user_name: str) -> dict:
        """A task principal named in a request must be a registered member;
        a bad name is a request-validation failure, not a missing resource."""
        try:
            return self.query(session.identity, "queryUser", [user_name])
        except GanttChainError as exc:
            if exc.code == "notFound":
                raise ValidationError(f"{user_name!r} is not a registered member") from exc
            raise

    def set_completed_time(self, session: Session, task_name: str, completed_time: str) -> dict:
        """Report progress on a task (the feedback flow).

        Allowed for the task's own manager or the project's manager. The
        completion date must fall in (beginTime, endTime]; hitting endTime
        marks the task done, and the contract flips the project flag once
        every task is done.
        """
        task = self.query(session.identity, "queryTask", [task_name])
        project = self.query(session.identity, "queryProject", [task["projectName"]])
        if session.user_number not in (task["manager"], project["manager"]):
            raise PermissionDenied(
                f"{session.user_name!r} manages neither task {task_name!r} nor its project"
            )
        if not (task["beginTime"] < completed_time <= task["endTime"]):
            raise ValidationError(
                f"completedTime {completed_time} outside ({task['beginTime']}, {task['endTime']}]"
            )
        task["completedTime"] = completed_time
        if completed_time == task["endTime"]:
            task["flag"] = "done"
        return self.invoke(
            session.identity, "changeTask", [task_name, "changeInfo", canonical_dumps(task)]
        )

    def change_task_manager(self, session: Session, task_name: str, new_manager: str) -> dict:
        """Reassign who is responsible for a task (project manager only)."""
        task = self.query(session.identity, "queryTask", [task_name])
        project = self.query(session.identity, "queryProject", [task["projectName"]])
        if project["manager"] != session.user_number:
            raise PermissionDenied(
                f"{session.user_name!r} is not the manager of project {task['projectName']!r}"
            )
        task["manager"] = self._resolve_member(session, new_manager)["userNumber"]
        return self.invoke(
            session.identity, "changeTask", [task_name, "changeManager", canonical_dumps(task)]
        )
