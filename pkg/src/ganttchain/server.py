"""HTTP JSON API over the coordination service.

Endpoint paths follow the server modules they expose: process_login,
create_project, query_project, process_gantt, assign_task,
setCompletedTime, getTasks (plus register for enrollment and health for
probes). Sessions are stateless (userName, org) lookups carried by each
request; error codes map to statuses 404/409/403/422/504.
"""

import argparse
import logging
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import Config
from .errors import GanttChainError
from .service import GanttService

log = logging.getLogger("ganttchain.server")


class SessionBody(BaseModel):
    userName: str
    org: str


class CreateProjectBody(SessionBody):
    projectName: str
    beginTime: str
    endTime: str
    info: str = ""


class AssignTaskBody(SessionBody):
    projectName: str
    taskName: str
    manager: str
    beginTime: str
    endTime: str
    flag: str = "processing"
    info: str = ""
    dependence: list[str] = Field(default_factory=list)


class SetCompletedTimeBody(SessionBody):
    taskName: str
    completedTime: str


def create_app(service: GanttService, static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="ganttchain")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.service = service

    @app.exception_handler(GanttChainError)
    async def _handle_domain_error(_: Request, exc: GanttChainError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"code": exc.code, "message": exc.message},
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "consensus": service.config.consensus}

    @app.post("/register")
    def register(body: SessionBody):
        return service.register_user(body.userName, body.org)

    @app.post("/process_login")
    def process_login(body: SessionBody):
        return service.login(body.userName, body.org)

    @app.post("/create_project")
    def create_project(body: CreateProjectBody):
        session = service.session(body.userName, body.org)
        project = service.create_project(
            session, body.projectName, body.beginTime, body.endTime, body.info
        )
        return {"ok": True, "project": project}

    @app.get("/query_project")
    def query_project(userName: str, org: str):
        session = service.session(userName, org)
        return service.query_projects(session)

    @app.get("/process_gantt")
    def process_gantt(userName: str, org: str, projectName: str):
        session = service.session(userName, org)
        return service.gantt_document(session, projectName)

    @app.get("/getTasks")
    def get_tasks(userName: str, org: str, projectName: str):
        session = service.session(userName, org)
        return service.get_tasks(session, projectName)

    @app.post("/assign_task")
    def assign_task(body: AssignTaskBody):
        session = service.session(body.userName, body.org)
        task = service.assign_task(
            session,
            project_name=body.projectName,
            task_name=body.taskName,
            manager=body.manager,
            begin_time=body.beginTime,
            end_time=body.endTime,
            flag=body.flag,
            info=body.info,
            dependence=body.dependence,
        )
        return {"ok": True, "task": task}

    @app.post("/setCompletedTime")
    def set_completed_time(body: SetCompletedTimeBody):
        session = service.session(body.userName, body.org)
        task = service.set_completed_time(session, body.taskName, body.completedTime)
        return {"ok": True, "task": task}

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app


def main(argv: Optional[list[str]] = None) -> None:
    parser = argparse.ArgumentParser(description="Run the project-coordination server")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    parser.add_argument("--static", default=None, help="directory with the built web UI")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    config = Config.from_file(args.config) if args.config else Config()
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port

    service = GanttService(config).start()
    app = create_app(service, static_dir=args.static)
    log.info("serving on %s:%s (consensus=%s)", config.host, config.port, config.consensus)
    import uvicorn

    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    finally:
        service.stop()


if __name__ == "__main__":
    main()
