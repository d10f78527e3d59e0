/** Typed client for the coordination server's JSON API. */

import { GanttDocument, ProjectRecord } from "./model.js";

export interface SessionInfo {
  userName: string;
  org: string;
  userNumber: string;
}

export interface TaskRecord {
  taskName: string;
  manager: string;
  projectName: string;
  flag: "processing" | "done";
  beginTime: string;
  endTime: string;
  completedTime: string | null;
  dependence: string[];
  info: string;
}

export interface AssignTaskRequest {
  projectName: string;
  taskName: string;
  manager: string;
  beginTime: string;
  endTime: string;
  info?: string;
  dependence?: string[];
}

export class ServerError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let code = "unknown";
  let message = `request failed with status ${response.status}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON failure body; keep the generic message
  }
  throw new ServerError(response.status, code, message);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async get<T>(path: string, params: Record<string, string>): Promise<T> {
    const query = new URLSearchParams(params).toString();
    const response = await fetch(`${this.baseUrl}${path}?${query}`);
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  async login(userName: string, org: string): Promise<SessionInfo> {
    const record = await this.post<{ userName: string; userNumber: string }>(
      "/process_login",
      { userName, org },
    );
    return { ...record, org };
  }

  register(userName: string, org: string): Promise<{ userName: string; userNumber: string }> {
    return this.post("/register", { userName, org });
  }

  queryProjects(session: SessionInfo): Promise<ProjectRecord[]> {
    return this.get("/query_project", { userName: session.userName, org: session.org });
  }

  processGantt(session: SessionInfo, projectName: string): Promise<GanttDocument> {
    return this.get("/process_gantt", {
      userName: session.userName,
      org: session.org,
      projectName,
    });
  }

  getTasks(session: SessionInfo, projectName: string): Promise<TaskRecord[]> {
    return this.get("/getTasks", {
      userName: session.userName,
      org: session.org,
      projectName,
    });
  }

  assignTask(session: SessionInfo, request: AssignTaskRequest): Promise<unknown> {
    return this.post("/assign_task", {
      userName: session.userName,
      org: session.org,
      flag: "processing",
      info: "",
      dependence: [],
      ...request,
    });
  }

  setCompletedTime(session: SessionInfo, taskName: string, completedTime: string): Promise<unknown> {
    return this.post("/setCompletedTime", {
      userName: session.userName,
      org: session.org,
      taskName,
      completedTime,
    });
  }
}
