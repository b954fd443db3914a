import { Client } from "./api.js";
import { App } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? window.location.origin;
const root = document.getElementById("app");
if (!root) throw new Error("missing #app root");

const app = new App(root, new Client(base), { pollMs: 2000 });
app.mount();

const sessionId = params.get("session");
if (sessionId) {
  void app.restoreSession(sessionId);
}
