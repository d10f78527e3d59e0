import { ApiClient } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
// same-origin by default; set window.GANTT_API to point elsewhere
const baseUrl = (window as { GANTT_API?: string }).GANTT_API ?? "";
new App(root, new ApiClient(baseUrl)).start();
