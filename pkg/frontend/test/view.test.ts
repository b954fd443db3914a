import { describe, expect, it } from "vitest";

import type { SessionStatus, Snapshot } from "../src/types.js";
import { checkSchema } from "../src/types.js";
import { SessionView, validateConfig } from "../src/view.js";

const ACTIVE: SessionStatus = { state: "active", exhausted: false, t: 0 };

function urnView(): SessionView {
  return new SessionView("abc123", {
    method: "ppr",
    n: 1000,
    alpha: 0.05,
    nulls: ["count_leq:550"],
  }, { ...ACTIVE });
}

function snap(t: number, extra: Partial<Snapshot> = {}): Snapshot {
  return { v: 1, t, alpha: 0.05, method: "ppr", set_lo: 0, set_hi: 1000,
    p_value: 1, e_value: 1, ...extra };
}

describe("SessionView", () => {
  it("appends exactly one point per series per snapshot", () => {
    const view = urnView();
    view.applySnapshot(snap(1));
    view.applySnapshot(snap(2));
    expect(view.bands).toHaveLength(2);
    expect(view.pTrace).toHaveLength(2);
    expect(view.eTrace).toHaveLength(2);
  });

  it("ignores replayed snapshots (idempotent retries add no point)", () => {
    const view = urnView();
    view.applySnapshot(snap(1));
    view.applySnapshot(snap(1));
    expect(view.bands).toHaveLength(1);
  });

  it("mirrors the count band for the second color", () => {
    const view = urnView();
    view.applySnapshot(snap(1, { set_lo: 200, set_hi: 700 }));
    expect(view.mirrorBands()).toEqual([{ t: 1, lo: 300, hi: 800 }]);
  });

  it("reads the stop banner from the snapshot, with its time", () => {
    const view = urnView();
    view.applySnapshot(snap(1));
    view.applySnapshot(snap(2, { stopped: true, stop_reason: "reject_null",
      stop_t: 2 }));
    const banner = view.banner();
    expect(banner?.kind).toBe("stopped");
    expect(banner?.stopT).toBe(2);
    expect(view.canRecord).toBe(false);
  });

  it("blocks recording while a post is in flight", () => {
    const view = urnView();
    expect(view.canRecord).toBe(true);
    view.inFlight = true;
    expect(view.canRecord).toBe(false);
  });

  it("reuses the pending idempotency key until settled", () => {
    const view = urnView();
    const k1 = view.takeKey();
    expect(view.takeKey()).toBe(k1); // retry path: same key
    view.settleKey();
    expect(view.takeKey()).not.toBe(k1);
  });

  it("derives a single crossing time for both charts", () => {
    const view = urnView();
    view.applySnapshot(snap(1, { p_value: 0.5 }));
    view.applySnapshot(snap(2, { p_value: 0.04 }));
    view.applySnapshot(snap(3, { p_value: 0.01 }));
    expect(view.crossingT()).toBe(2);
  });

  it("parses the null threshold for the duality overlay", () => {
    expect(urnView().nullThreshold).toBe(550);
  });

  it("keeps intersected and raw bounded bands separately", () => {
    const view = new SessionView("x", { method: "eb", n: 10, lower: 0,
      upper: 1 }, { ...ACTIVE });
    view.applySnapshot({ v: 1, t: 1, alpha: 0.05, method: "eb", lo: 0.1,
      hi: 0.9, lo_intersected: 0.2, hi_intersected: 0.8 });
    expect(view.bands[0]).toEqual({ t: 1, lo: 0.2, hi: 0.8 });
    expect(view.rawBands[0]).toEqual({ t: 1, lo: 0.1, hi: 0.9 });
  });

  it("flags exhaustion at the population size", () => {
    const view = new SessionView("x", { method: "ppr", n: 2 },
      { ...ACTIVE });
    view.applySnapshot(snap(1));
    view.applySnapshot(snap(2, { set_lo: 1, set_hi: 1 }));
    expect(view.banner()?.kind).toBe("exhausted");
  });
});

describe("validateConfig", () => {
  it("accepts the urn preset", () => {
    expect(validateConfig({ method: "ppr", n: 1000, alpha: 0.05 })).toBeNull();
  });

  it("rejects bounded configs without bounds", () => {
    expect(validateConfig({ method: "eb", n: 10 })).toMatch(/bounds/);
  });

  it("rejects inverted bounds and silly levels", () => {
    expect(validateConfig({ method: "eb", n: 10, lower: 1, upper: 0 }))
      .toMatch(/lower/);
    expect(validateConfig({ method: "ppr", n: 10, alpha: 1.5 }))
      .toMatch(/level/);
  });
});

describe("schema check", () => {
  it("accepts v1 and rejects anything else", () => {
    expect(() => checkSchema(snap(1))).not.toThrow();
    expect(() => checkSchema({ ...snap(1), v: 2 })).toThrow(/schema/);
  });
});
