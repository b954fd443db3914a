// End-to-end: the real app driven in a scripted DOM against the real
// Python service. Creates an urn session through the form, posts 50
// observations by clicking the entry buttons, checks the chart point
// counts, then feeds a fixture that crosses the error level and compares
// the stop banner's time with the service's own stop report.

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { Client } from "../src/api.js";
import { App } from "../src/app.js";

let proc: ChildProcess;
let base = "";

function startService(): Promise<string> {
  return new Promise((resolve, reject) => {
    proc = spawn("python3", ["-m", "worcs.cli", "serve", "--port", "0"], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    let buf = "";
    let port: string | null = null;
    proc.stdout!.on("data", (chunk: Buffer) => {
      buf += chunk.toString();
      const m = /listening on http:\/\/[^:]+:(\d+)/.exec(buf);
      if (m) port = m[1]!;
      if (port && buf.includes("READY")) {
        resolve(`http://127.0.0.1:${port}`);
      }
    });
    proc.on("error", reject);
    proc.on("exit", (code) => reject(new Error(`service exited: ${code}`)));
    setTimeout(() => reject(new Error("service start timeout")), 30_000);
  });
}

beforeAll(async () => {
  base = await startService();
  const ok = await new Client(base).healthz();
  expect(ok).toBe(true);
});

afterAll(() => {
  proc?.kill("SIGTERM");
});

async function clickEntry(app: App, root: HTMLElement, label: string,
  expectT: number): Promise<void> {
  const btn = [...root.querySelectorAll<HTMLButtonElement>(".entry-btn")]
    .find((b) => b.textContent === label);
  expect(btn, `entry button ${label}`).toBeTruthy();
  expect(btn!.disabled).toBe(false);
  btn!.click();
  await vi.waitFor(() => {
    if ((app.view?.status.t ?? 0) < expectT) throw new Error("pending");
  }, { timeout: 10_000, interval: 5 });
}

describe("urn session end to end", () => {
  it("posts observations, draws one point each, and stops with the "
    + "service's own stop time", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new App(root, new Client(base), { pollMs: 0 });
    app.mount();

    // the urn preset is preselected; submit the form
    root.querySelector<HTMLFormElement>("#session-form")!
      .dispatchEvent(new Event("submit", { cancelable: true }));
    await vi.waitFor(() => {
      if (!app.view) throw new Error("no session yet");
    }, { timeout: 10_000 });
    const view = app.view!;
    expect(view.config.n).toBe(1000);
    expect(root.querySelector("#banner")!.hasAttribute("hidden")).toBe(true);

    // 50 alternating observations: balanced colors keep the p-value high
    for (let i = 1; i <= 50; i += 1) {
      await clickEntry(app, root, i % 2 === 0 ? "red" : "green", i);
    }
    expect(view.status.t).toBe(50);
    expect(view.bands).toHaveLength(50);
    expect(view.pTrace).toHaveLength(50);
    expect(root.querySelectorAll("#cs-chart .pt.primary-pt")).toHaveLength(50);
    expect(root.querySelectorAll("#cs-chart .pt.mirror-pt")).toHaveLength(50);
    expect(root.querySelectorAll("#trace-chart .pt.p-pt")).toHaveLength(50);
    expect(root.querySelector("#banner")!.hasAttribute("hidden")).toBe(true);

    // now a green-heavy fixture until the p-value for count_leq:550
    // crosses alpha and the reject_null rule fires
    let posts = 50;
    while (!view.banner() && posts < 950) {
      posts += 1;
      await clickEntry(app, root, posts % 5 === 0 ? "red" : "green", posts);
    }
    const banner = view.banner();
    expect(banner?.kind).toBe("stopped");
    const bannerNode = root.querySelector<HTMLElement>("#banner")!;
    expect(bannerNode.hasAttribute("hidden")).toBe(false);
    expect(bannerNode.textContent).toContain("stopped");

    // chart point count still equals the number of posts (no duplicates)
    expect(view.bands).toHaveLength(posts);
    expect(root.querySelectorAll("#cs-chart .pt.primary-pt"))
      .toHaveLength(posts);

    // the service's own report of the stop time must match the banner
    const state = await new Client(base).getState(view.id, 0, null);
    expect(state.payload!.status.state).toBe("stopped");
    expect(Number(bannerNode.dataset.stopT))
      .toBe(state.payload!.status.stop_t);
    expect(view.crossingT()).toBe(state.payload!.status.stop_t);

    // entry is disabled once stopped
    const anyBtn = root.querySelector<HTMLButtonElement>(".entry-btn")!;
    expect(anyBtn.disabled).toBe(true);
  });

  it("restores a session from its id and replays history identically",
    async () => {
    const client = new Client(base);
    const created = await client.createSession({
      method: "ppr", n: 100, alpha: 0.05, nulls: ["count_leq:50"],
      stops: ["reject_null"],
    });
    for (let i = 0; i < 7; i += 1) {
      await client.postObservation(created.id, i % 2, `seed-${i}`);
    }
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new App(root, client, { pollMs: 0 });
    app.mount();
    await app.restoreSession(created.id);
    expect(app.view!.status.t).toBe(7);
    expect(app.view!.bands).toHaveLength(7);
    expect(root.querySelectorAll("#cs-chart .pt.primary-pt")).toHaveLength(7);
  });

  it("shows inline errors without sending for an invalid bounded form",
    async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const fetchSpy = vi.fn(fetch);
    const app = new App(root, new Client(base, fetchSpy), { pollMs: 0 });
    app.mount();
    // switch to a bounded method but leave the bounds empty
    root.querySelector<HTMLSelectElement>("#method")!.value = "eb";
    root.querySelector<HTMLInputElement>("#lower")!.value = "";
    root.querySelector<HTMLInputElement>("#upper")!.value = "";
    root.querySelector<HTMLFormElement>("#session-form")!
      .dispatchEvent(new Event("submit", { cancelable: true }));
    await new Promise((r) => setTimeout(r, 50));
    expect(root.querySelector("#form-error")!.textContent).toMatch(/bounds/);
    expect(fetchSpy).not.toHaveBeenCalled();
    expect(app.view).toBeNull();
  });

  it("flips to the exhausted banner on a 409", async () => {
    const client = new Client(base);
    const created = await client.createSession({ method: "ppr", n: 2 });
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new App(root, client, { pollMs: 0 });
    app.mount();
    await app.restoreSession(created.id);
    await clickEntry(app, root, "green", 1);
    await clickEntry(app, root, "red", 2);
    expect(app.view!.banner()?.kind).toBe("exhausted");
    // a direct post now 409s and the banner stays exhausted
    await app.record(1);
    expect(app.view!.banner()?.kind).toBe("exhausted");
  });
});
