/**
 * Single-page client: login, project list, chart view with assignment and
 * completion dialogs. The chart is never updated optimistically: every
 * accepted mutation triggers a fresh document fetch before re-rendering,
 * so what is on screen is always what the ledger committed.
 */

import { ApiClient, ServerError, SessionInfo } from "./api.js";
import { renderGantt } from "./chart.js";
import { GanttDocument, ProjectRecord } from "./model.js";

function errorText(err: unknown): string {
  if (err instanceof ServerError) {
    return err.message;
  }
  return err instanceof Error ? err.message : String(err);
}

export class App {
  session: SessionInfo | null = null;
  projects: ProjectRecord[] = [];
  current: ProjectRecord | null = null;
  chartDocument: GanttDocument | null = null;
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly chartWidth = 960,
  ) {}

  start(): void {
    this.renderLogin();
  }

  private el<T extends HTMLElement>(selector: string): T {
    const found = this.root.querySelector(selector);
    if (found === null) {
      throw new Error(`missing element ${selector}`);
    }
    return found as T;
  }

  // -- login ----------------------------------------------------------------

  renderLogin(message = ""): void {
    this.session = null;
    this.root.innerHTML = `
      <section class="login-view">
        <h1>Project ledger</h1>
        <form data-test="login-form">
          <label>Member name <input name="userName" data-test="login-user" autocomplete="username"/></label>
          <label>Organization <input name="org" data-test="login-org" placeholder="Org1"/></label>
          <button type="submit" data-test="login-submit">Log in</button>
        </form>
        <p class="error-banner" data-test="login-error">${message}</p>
      </section>`;
    this.el<HTMLFormElement>("[data-test=login-form]").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.handleLogin();
    });
  }

  async handleLogin(): Promise<void> {
    const userName = this.el<HTMLInputElement>("[data-test=login-user]").value.trim();
    const org = this.el<HTMLInputElement>("[data-test=login-org]").value.trim();
    if (userName === "" || org === "") {
      // client-side validation: no request leaves the page
      this.el("[data-test=login-error]").textContent = "Enter both a member name and an organization.";
      return;
    }
    try {
      this.session = await this.api.login(userName, org);
    } catch (err) {
      this.el("[data-test=login-error]").textContent = errorText(err);
      return;
    }
    await this.showProjects();
  }

  // -- project list -----------------------------------------------------------

  async showProjects(): Promise<void> {
    if (this.session === null) {
      this.renderLogin();
      return;
    }
    this.projects = await this.api.queryProjects(this.session);
    const items = this.projects
      .map(
        (p) => `
        <li>
          <button class="project-link" data-test="open-${p.projectName}" data-project="${p.projectName}">
            ${p.projectName}
          </button>
          <span class="window">${p.beginTime} to ${p.endTime}</span>
          <span class="flag flag-${p.flag}">${p.flag}</span>
        </li>`,
      )
      .join("");
    this.root.innerHTML = `
      <section class="projects-view">
        <header>
          <h1>Projects of ${this.session.userName} (${this.session.org})</h1>
          <button data-test="logout">Log out</button>
        </header>
        <ul class="project-list" data-test="project-list">${items}</ul>
        <p data-test="project-empty">${this.projects.length === 0 ? "No projects yet." : ""}</p>
      </section>`;
    this.el("[data-test=logout]").addEventListener("click", () => this.renderLogin());
    for (const link of Array.from(this.root.querySelectorAll(".project-link"))) {
      link.addEventListener("click", () => {
        const name = (link as HTMLElement).dataset.project ?? "";
        void this.openProject(name);
      });
    }
  }

  // -- project detail -----------------------------------------------------------

  async openProject(projectName: string): Promise<void> {
    if (this.session === null) {
      return;
    }
    this.current = this.projects.find((p) => p.projectName === projectName) ?? null;
    this.chartDocument = await this.api.processGantt(this.session, projectName);
    this.renderDetail();
  }

  async refreshChart(): Promise<void> {
    if (this.session === null || this.chartDocument === null) {
      return;
    }
    this.chartDocument = await this.api.processGantt(this.session, this.chartDocument.projectName);
    this.renderDetail();
  }

  private projectDone(): boolean {
    const doc = this.chartDocument;
    return doc !== null && doc.rows.length > 0 && doc.rows.every((r) => r.flag === "done");
  }

  renderDetail(): void {
    const doc = this.chartDocument;
    const session = this.session;
    if (doc === null || session === null) {
      return;
    }
    const isManager = this.current !== null && this.current.manager === session.userNumber;
    const doneBanner = this.projectDone()
      ? `<p class="project-done-banner" data-test="project-done">Project complete: every task is done.</p>`
      : "";
    const taskOptions = doc.rows
      .map((r) => `<option value="${r.taskName}">${r.taskName}</option>`)
      .join("");
    this.root.innerHTML = `
      <section class="detail-view">
        <header>
          <button data-test="back">Back to projects</button>
          <h1>${doc.projectName}</h1>
          <span class="window">${doc.window.beginTime} to ${doc.window.endTime}</span>
        </header>
        ${doneBanner}
        <div class="chart-host" data-test="chart">${renderGantt(doc, this.chartWidth)}</div>
        <div class="actions">
          <button data-test="open-assign" ${isManager ? "" : "disabled"} title="${isManager ? "" : "Only the project manager assigns tasks"}">Assign</button>
          <button data-test="open-completed" ${doc.rows.length > 0 ? "" : "disabled"}>Completed</button>
        </div>
        <form class="dialog hidden" data-test="assign-dialog">
          <h2>Assign a task schedule</h2>
          <label>Task name <input name="taskName" data-test="assign-name"/></label>
          <label>Principal <input name="manager" data-test="assign-manager"/></label>
          <label>Begin <input name="beginTime" data-test="assign-begin" placeholder="2020-11-15"/></label>
          <label>End <input name="endTime" data-test="assign-end" placeholder="2020-11-28"/></label>
          <label>Depends on <input name="dependence" data-test="assign-dependence" placeholder="comma separated"/></label>
          <label>Notes <input name="info" data-test="assign-info"/></label>
          <button type="submit" data-test="assign-submit">Assign</button>
          <p class="error-banner" data-test="assign-error"></p>
        </form>
        <form class="dialog hidden" data-test="completed-dialog">
          <h2>Report completion</h2>
          <label>Task <select data-test="completed-task">${taskOptions}</select></label>
          <label>Completed time <input data-test="completed-time" placeholder="2020-12-05"/></label>
          <button type="submit" data-test="completed-submit">Save</button>
          <p class="error-banner" data-test="completed-error"></p>
        </form>
      </section>`;

    this.el("[data-test=back]").addEventListener("click", () => void this.showProjects());
    this.el("[data-test=open-assign]").addEventListener("click", () =>
      this.el("[data-test=assign-dialog]").classList.toggle("hidden"),
    );
    this.el("[data-test=open-completed]").addEventListener("click", () =>
      this.el("[data-test=completed-dialog]").classList.toggle("hidden"),
    );
    this.el<HTMLFormElement>("[data-test=assign-dialog]").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitAssign();
    });
    this.el<HTMLFormElement>("[data-test=completed-dialog]").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitCompleted();
    });
  }

  async submitAssign(): Promise<void> {
    if (this.busy || this.session === null || this.chartDocument === null) {
      return;
    }
    const value = (selector: string) => this.el<HTMLInputElement>(selector).value.trim();
    const dependence = value("[data-test=assign-dependence]")
      .split(",")
      .map((s) => s.trim())
      .filter((s) => s !== "");
    const submit = this.el<HTMLButtonElement>("[data-test=assign-submit]");
    this.busy = true;
    submit.disabled = true;
    try {
      await this.api.assignTask(this.session, {
        projectName: this.chartDocument.projectName,
        taskName: value("[data-test=assign-name]"),
        manager: value("[data-test=assign-manager]"),
        beginTime: value("[data-test=assign-begin]"),
        endTime: value("[data-test=assign-end]"),
        info: value("[data-test=assign-info]"),
        dependence,
      });
    } catch (err) {
      this.el("[data-test=assign-error]").textContent = errorText(err);
      return;
    } finally {
      this.busy = false;
      submit.disabled = false;
    }
    await this.refreshChart();
  }

  async submitCompleted(): Promise<void> {
    if (this.busy || this.session === null) {
      return;
    }
    const taskName = this.el<HTMLSelectElement>("[data-test=completed-task]").value;
    const completedTime = this.el<HTMLInputElement>("[data-test=completed-time]").value.trim();
    const submit = this.el<HTMLButtonElement>("[data-test=completed-submit]");
    this.busy = true;
    submit.disabled = true;
    try {
      await this.api.setCompletedTime(this.session, taskName, completedTime);
    } catch (err) {
      this.el("[data-test=completed-error]").textContent = errorText(err);
      return;
    } finally {
      this.busy = false;
      submit.disabled = false;
    }
    await this.refreshChart();
  }
}
