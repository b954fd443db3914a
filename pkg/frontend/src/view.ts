// Session view-model: the single place chart series come from. Every point
// is copied verbatim from a server snapshot; the only arithmetic is the
// mirror presentation of a two-color count band (N minus the same bounds).

import type { SessionConfig, SessionStatus, Snapshot } from "./types.js";

export interface BandPoint {
  t: number;
  lo: number;
  hi: number;
}

export interface TracePoint {
  t: number;
  value: number;
}

export interface Banner {
  kind: "stopped" | "exhausted";
  text: string;
  stopT?: number;
}

let keyCounter = 0;

export function freshIdempotencyKey(): string {
  keyCounter += 1;
  return `ui-${Date.now().toString(36)}-${keyCounter}`;
}

export class SessionView {
  readonly bands: BandPoint[] = [];
  readonly rawBands: BandPoint[] = [];
  readonly pTrace: TracePoint[] = [];
  readonly eTrace: TracePoint[] = [];
  private lastT = 0;
  status: SessionStatus;
  /** an observation is on the wire; entry controls must be disabled */
  inFlight = false;
  /** key reused on retry so a resend never duplicates a point */
  pendingKey: string | null = null;
  showRaw = false;
  error: string | null = null;

  constructor(
    readonly id: string,
    readonly config: SessionConfig,
    status: SessionStatus,
  ) {
    this.status = status;
  }

  get alpha(): number {
    return this.config.alpha ?? 0.05;
  }

  get isCount(): boolean {
    return this.config.method === "ppr" || this.config.method === "dm";
  }

  /** Null threshold for the duality overlay, when a count_leq null is set. */
  get nullThreshold(): number | null {
    for (const n of this.config.nulls ?? []) {
      const m = /^count_leq:(\d+)$/.exec(n);
      if (m) return Number(m[1]);
    }
    return null;
  }

  /** Append exactly one point per series from one server snapshot. */
  applySnapshot(snap: Snapshot): void {
    if (snap.t <= this.lastT) {
      return; // replayed or duplicate snapshot: never a second point
    }
    this.lastT = snap.t;
    const band = extractBand(snap, false);
    if (band) this.bands.push(band);
    const raw = extractBand(snap, true);
    if (raw) this.rawBands.push(raw);
    if (snap.p_value !== undefined) {
      this.pTrace.push({ t: snap.t, value: snap.p_value });
    }
    if (snap.e_value !== undefined) {
      this.eTrace.push({ t: snap.t, value: snap.e_value });
    }
    if (snap.stopped && this.status.state === "active") {
      this.status = {
        ...this.status,
        state: "stopped",
        reason: snap.stop_reason,
        stop_t: snap.stop_t,
        t: snap.t,
      };
    } else {
      this.status = { ...this.status, t: snap.t };
    }
    if (snap.t >= this.config.n) {
      this.status = { ...this.status, exhausted: true };
      if (this.status.state === "active") {
        this.status = { ...this.status, state: "exhausted" };
      }
    }
  }

  applyStatus(status: SessionStatus): void {
    this.status = status;
  }

  /** Mirrored band for the complementary color of a binary count session. */
  mirrorBands(): BandPoint[] {
    if (!this.isCount) return [];
    const n = this.config.n;
    return this.bands.map((b) => ({ t: b.t, lo: n - b.hi, hi: n - b.lo }));
  }

  /** First time the p-value trace crossed alpha (single source for both
   * chart markers). */
  crossingT(): number | null {
    for (const p of this.pTrace) {
      if (p.value <= this.alpha) return p.t;
    }
    return null;
  }

  banner(): Banner | null {
    if (this.status.state === "stopped") {
      const at = this.status.stop_t;
      return {
        kind: "stopped",
        text: `stopped: ${this.status.reason ?? "rule fired"} at t=${at}`,
        stopT: at,
      };
    }
    if (this.status.state === "exhausted" || this.status.exhausted) {
      return { kind: "exhausted", text: "population exhausted" };
    }
    return null;
  }

  get canRecord(): boolean {
    return this.status.state === "active" && !this.inFlight &&
      !this.status.exhausted;
  }

  /** Key for the next post: fresh normally, reused while a retry is due. */
  takeKey(): string {
    if (this.pendingKey === null) {
      this.pendingKey = freshIdempotencyKey();
    }
    return this.pendingKey;
  }

  settleKey(): void {
    this.pendingKey = null;
  }
}

function extractBand(snap: Snapshot, raw: boolean): BandPoint | null {
  if (snap.set_lo !== undefined && snap.set_hi !== undefined) {
    return { t: snap.t, lo: snap.set_lo, hi: snap.set_hi };
  }
  const lo = raw ? snap.lo : snap.lo_intersected ?? snap.lo;
  const hi = raw ? snap.hi : snap.hi_intersected ?? snap.hi;
  if (lo === undefined || hi === undefined) return null;
  return { t: snap.t, lo, hi };
}

/** Client-side mirror of the server's config rules, so obviously broken
 * forms never produce a request. */
export function validateConfig(config: SessionConfig): string | null {
  if (!config.method) return "method is required";
  if (!Number.isFinite(config.n) || config.n < 1) {
    return "population size must be at least 1";
  }
  const alpha = config.alpha ?? 0.05;
  if (!(alpha > 0 && alpha < 1)) return "error level must be inside (0, 1)";
  if (["hoeffding", "eb", "bm"].includes(config.method)) {
    if (config.lower === undefined || config.upper === undefined) {
      return "bounded methods need both bounds";
    }
    if (!(config.lower < config.upper)) {
      return "lower bound must be below the upper bound";
    }
  }
  return null;
}
