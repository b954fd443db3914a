// Wire types for the /v1 session API. The UI never derives statistics:
// everything rendered comes straight from these payloads.

export const SCHEMA_VERSION = 1;

export interface Snapshot {
  v: number;
  t: number;
  alpha: number;
  method: string;
  // count-parameter sets
  set_lo?: number;
  set_hi?: number;
  contiguous?: boolean;
  index_set?: number[];
  // bounded-mean bands
  mu_hat_weighted?: number;
  mu_hat_plain?: number;
  lambda_t?: number;
  lo?: number;
  hi?: number;
  lo_intersected?: number;
  hi_intersected?: number;
  m_value?: number;
  exact_mean?: number;
  // testing side-cars
  p_value?: number;
  e_value?: number;
  // stopping
  stopped?: boolean;
  stop_reason?: string;
  stop_t?: number;
  post_stop?: boolean;
  n_pop?: number;
}

export interface SessionStatus {
  state: "active" | "stopped" | "exhausted";
  exhausted: boolean;
  t: number;
  reason?: string;
  stop_t?: number;
}

export interface SessionConfig {
  method: "ppr" | "dm" | "hoeffding" | "eb" | "bm";
  n: number;
  alpha?: number;
  lower?: number;
  upper?: number;
  prior_a?: number;
  prior_b?: number;
  dm_prior?: number[];
  nulls?: string[];
  stops?: string[];
  intersect?: boolean;
}

export interface CreateResponse {
  id: string;
  created_at: number;
  config: SessionConfig;
  status: SessionStatus;
  snapshot: Snapshot;
}

export interface StatePayload {
  id: string;
  created_at: number;
  config: SessionConfig;
  status: SessionStatus;
  initial_snapshot: Snapshot;
  since: number;
  snapshots: Snapshot[];
}

export function checkSchema(snapshot: Snapshot): void {
  if (snapshot.v !== SCHEMA_VERSION) {
    throw new Error(
      `snapshot schema v${snapshot.v} unsupported (expected v${SCHEMA_VERSION})`,
    );
  }
}
