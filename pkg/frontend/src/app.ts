// DOM wiring: one form, one entry panel, two charts, one banner.
// All statistics come from the service; this file only moves them around.

import { ApiError, Client } from "./api.js";
import { renderBandChart, renderTraceChart } from "./chart.js";
import type { SessionConfig } from "./types.js";
import { SessionView, validateConfig } from "./view.js";

export interface Preset {
  label: string;
  config: SessionConfig;
  entry: { label: string; value: number }[] | "numeric";
}

export const PRESETS: Record<string, Preset> = {
  urn: {
    label: "Two-color urn (N=1000)",
    config: {
      method: "ppr",
      n: 1000,
      alpha: 0.05,
      nulls: ["count_leq:550"],
      stops: ["reject_null"],
    },
    entry: [
      { label: "green", value: 1 },
      { label: "red", value: 0 },
    ],
  },
  intervention: {
    label: "Staged rollout (N=3000, scores in [-100, 100])",
    config: {
      method: "eb",
      n: 3000,
      alpha: 0.05,
      lower: -100,
      upper: 100,
      nulls: ["mean_leq:0"],
      stops: ["reject_null"],
    },
    entry: "numeric",
  },
  custom: {
    label: "Custom",
    config: { method: "ppr", n: 100, alpha: 0.05 },
    entry: [
      { label: "1", value: 1 },
      { label: "0", value: 0 },
    ],
  },
};

const APP_HTML = `
  <section id="setup">
    <h2>New session</h2>
    <form id="session-form">
      <label>preset
        <select id="preset">
          ${Object.entries(PRESETS)
            .map(([k, p]) => `<option value="${k}">${p.label}</option>`)
            .join("")}
        </select>
      </label>
      <label>method
        <select id="method">
          <option>ppr</option><option>dm</option><option>hoeffding</option>
          <option>eb</option><option>bm</option>
        </select>
      </label>
      <label>population size <input id="n" type="number" min="1"></label>
      <label>error level <input id="alpha" type="number" step="0.01"></label>
      <label>lower bound <input id="lower" type="number" step="any"></label>
      <label>upper bound <input id="upper" type="number" step="any"></label>
      <label>null hypothesis <input id="null" type="text"
             placeholder="count_leq:550"></label>
      <button id="start-btn" type="submit">start session</button>
      <span id="form-error" class="error" role="alert"></span>
    </form>
    <form id="restore-form">
      <label>session id <input id="restore-id" type="text"></label>
      <button id="restore-btn" type="submit">restore</button>
    </form>
  </section>
  <section id="live" hidden>
    <div id="banner" role="status" hidden></div>
    <div id="status-line"></div>
    <div id="entry"></div>
    <span id="entry-error" class="error" role="alert"></span>
    <label id="raw-toggle-label" hidden>
      <input type="checkbox" id="toggle-raw"> show raw (non-intersected) band
    </label>
    <svg id="cs-chart"></svg>
    <svg id="trace-chart"></svg>
    <table id="dm-marginals" hidden></table>
  </section>
`;

export class App {
  view: SessionView | null = null;
  private etag: string | null = null;
  private entrySpec: Preset["entry"] = "numeric";
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    readonly root: HTMLElement,
    readonly client: Client,
    readonly opts: { pollMs?: number } = {},
  ) {}

  private q<T extends HTMLElement>(sel: string): T {
    const node = this.root.querySelector(sel);
    if (!node) throw new Error(`missing element ${sel}`);
    return node as T;
  }

  mount(): void {
    this.root.innerHTML = APP_HTML;
    const presetSel = this.q<HTMLSelectElement>("#preset");
    presetSel.addEventListener("change", () => this.applyPreset(presetSel.value));
    this.applyPreset("urn");
    this.q<HTMLFormElement>("#session-form").addEventListener(
      "submit",
      (ev) => {
        ev.preventDefault();
        void this.startFromForm();
      },
    );
    this.q<HTMLFormElement>("#restore-form").addEventListener(
      "submit",
      (ev) => {
        ev.preventDefault();
        const id = this.q<HTMLInputElement>("#restore-id").value.trim();
        if (id) void this.restoreSession(id);
      },
    );
    this.q<HTMLInputElement>("#toggle-raw").addEventListener("change", () => {
      if (this.view) {
        this.view.showRaw = this.q<HTMLInputElement>("#toggle-raw").checked;
        this.render();
      }
    });
  }

  applyPreset(name: string): void {
    const preset = PRESETS[name] ?? PRESETS.custom!;
    const cfg = preset.config;
    this.q<HTMLSelectElement>("#method").value = cfg.method;
    this.q<HTMLInputElement>("#n").value = String(cfg.n);
    this.q<HTMLInputElement>("#alpha").value = String(cfg.alpha ?? 0.05);
    this.q<HTMLInputElement>("#lower").value =
      cfg.lower === undefined ? "" : String(cfg.lower);
    this.q<HTMLInputElement>("#upper").value =
      cfg.upper === undefined ? "" : String(cfg.upper);
    this.q<HTMLInputElement>("#null").value = (cfg.nulls ?? [])[0] ?? "";
    this.entrySpec = preset.entry;
  }

  formConfig(): SessionConfig {
    const num = (sel: string): number | undefined => {
      const raw = this.q<HTMLInputElement>(sel).value.trim();
      return raw === "" ? undefined : Number(raw);
    };
    const nullSpec = this.q<HTMLInputElement>("#null").value.trim();
    const presetName = this.q<HTMLSelectElement>("#preset").value;
    const stops = PRESETS[presetName]?.config.stops ?? ["reject_null"];
    const cfg: SessionConfig = {
      method: this.q<HTMLSelectElement>("#method")
        .value as SessionConfig["method"],
      n: num("#n") ?? NaN,
      alpha: num("#alpha"),
      nulls: nullSpec ? [nullSpec] : [],
      stops: nullSpec ? stops : [],
    };
    const lower = num("#lower");
    const upper = num("#upper");
    if (lower !== undefined) cfg.lower = lower;
    if (upper !== undefined) cfg.upper = upper;
    return cfg;
  }

  async startFromForm(): Promise<void> {
    const errNode = this.q<HTMLElement>("#form-error");
    errNode.textContent = "";
    const cfg = this.formConfig();
    const problem = validateConfig(cfg);
    if (problem) {
      errNode.textContent = problem; // invalid form: no request is sent
      return;
    }
    try {
      const created = await this.client.createSession(cfg);
      this.view = new SessionView(created.id, created.config, created.status);
      this.etag = null;
      this.startPolling();
      this.showLive();
    } catch (e) {
      errNode.textContent = e instanceof ApiError
        ? `${e.message}${e.field ? ` (${e.field})` : ""}`
        : String(e);
    }
  }

  async restoreSession(id: string): Promise<void> {
    const res = await this.client.getState(id, 0, null);
    if (!res.payload) return;
    const p = res.payload;
    this.view = new SessionView(p.id, p.config, {
      ...p.status,
      state: "active",
      t: 0,
      exhausted: false,
    });
    for (const snap of p.snapshots) this.view.applySnapshot(snap);
    this.view.applyStatus(p.status);
    this.etag = res.etag;
    this.entrySpec = this.view.isCount
      ? PRESETS.urn!.entry
      : "numeric";
    this.startPolling();
    this.showLive();
  }

  private showLive(): void {
    this.q<HTMLElement>("#live").hidden = false;
    this.buildEntry();
    this.render();
  }

  private buildEntry(): void {
    const entry = this.q<HTMLElement>("#entry");
    entry.innerHTML = "";
    if (!this.view) return;
    if (this.view.config.method === "dm") {
      const k = this.view.config.dm_prior?.length ?? 2;
      for (let cat = 0; cat < k; cat += 1) {
        entry.appendChild(this.entryButton(`category ${cat}`, cat));
      }
    } else if (this.entrySpec === "numeric" || !this.view.isCount) {
      const input = document.createElement("input");
      input.type = "number";
      input.id = "value-input";
      input.step = "any";
      if (this.view.config.lower !== undefined) {
        input.min = String(this.view.config.lower);
      }
      if (this.view.config.upper !== undefined) {
        input.max = String(this.view.config.upper);
      }
      const btn = document.createElement("button");
      btn.id = "record-btn";
      btn.textContent = "record";
      btn.addEventListener("click", () => {
        const v = Number(input.value);
        if (Number.isFinite(v)) void this.record(v);
      });
      entry.append(input, btn);
    } else {
      for (const spec of this.entrySpec) {
        entry.appendChild(this.entryButton(spec.label, spec.value));
      }
    }
  }

  private entryButton(label: string, value: number): HTMLButtonElement {
    const btn = document.createElement("button");
    btn.className = "entry-btn";
    btn.dataset.value = String(value);
    btn.textContent = label;
    btn.addEventListener("click", () => void this.record(value));
    return btn;
  }

  async record(value: number): Promise<void> {
    const view = this.view;
    if (!view || !view.canRecord) return; // disabled or in flight: no send
    const errNode = this.q<HTMLElement>("#entry-error");
    errNode.textContent = "";
    view.inFlight = true;
    this.render();
    const key = view.takeKey();
    try {
      const snap = await this.client.postObservation(view.id, value, key);
      view.applySnapshot(snap);
      view.settleKey();
    } catch (e) {
      if (e instanceof ApiError) {
        view.settleKey(); // the server judged this request: do not replay it
        if (e.status === 409) {
          view.applyStatus({ ...view.status, state: "exhausted",
                             exhausted: true });
        } else {
          errNode.textContent = e.message;
        }
      } else {
        errNode.textContent = `network problem, retry will reuse key ${key}`;
      }
    } finally {
      view.inFlight = false;
      this.render();
    }
  }

  startPolling(): void {
    if (this.timer) clearInterval(this.timer);
    const ms = this.opts.pollMs ?? 0;
    if (ms > 0) {
      this.timer = setInterval(() => void this.poll(), ms);
    }
  }

  async poll(): Promise<void> {
    const view = this.view;
    if (!view || view.inFlight) return;
    const res = await this.client.getState(view.id, view.status.t, this.etag);
    if (res.notModified || !res.payload) return;
    this.etag = res.etag;
    for (const snap of res.payload.snapshots) view.applySnapshot(snap);
    view.applyStatus(res.payload.status);
    this.render();
  }

  render(): void {
    const view = this.view;
    if (!view) return;
    this.q<HTMLElement>("#status-line").textContent =
      `session ${view.id.slice(0, 8)} · t=${view.status.t}/${view.config.n}` +
      ` · state=${view.status.state}`;

    const bannerNode = this.q<HTMLElement>("#banner");
    const banner = view.banner();
    bannerNode.hidden = banner === null;
    bannerNode.textContent = banner?.text ?? "";
    if (banner?.stopT !== undefined) {
      bannerNode.dataset.stopT = String(banner.stopT);
    }
    bannerNode.className = banner ? `banner ${banner.kind}` : "banner";

    const disabled = !view.canRecord;
    for (const b of this.root.querySelectorAll<HTMLButtonElement>(
      ".entry-btn, #record-btn",
    )) {
      b.disabled = disabled;
    }

    this.q<HTMLElement>("#raw-toggle-label").hidden = view.isCount;

    const cs = this.q<SVGSVGElement & HTMLElement>("#cs-chart");
    const bands = view.showRaw && !view.isCount ? view.rawBands : view.bands;
    const domain = view.isCount
      ? { vMin: 0, vMax: view.config.n }
      : { vMin: view.config.lower ?? 0, vMax: view.config.upper ?? 1 };
    renderBandChart(cs as unknown as SVGSVGElement, bands,
      view.mirrorBands(), {
        tMax: view.config.n,
        ...domain,
        nullThreshold: view.isCount ? view.nullThreshold : null,
        crossingT: view.crossingT(),
      });
    const tr = this.q<SVGSVGElement & HTMLElement>("#trace-chart");
    renderTraceChart(tr as unknown as SVGSVGElement, view.pTrace,
      view.eTrace, {
        tMax: view.config.n,
        alpha: view.alpha,
        crossingT: view.crossingT(),
      });
  }
}
