import type {
  CreateResponse,
  SessionConfig,
  Snapshot,
  StatePayload,
} from "./types.js";
import { checkSchema } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly field?: string,
  ) {
    super(message);
  }
}

async function asApiError(res: Response): Promise<ApiError> {
  try {
    const body = await res.json();
    return new ApiError(res.status, body.code ?? "error", body.message ?? res.statusText, body.field);
  } catch {
    return new ApiError(res.status, "error", res.statusText);
  }
}

export interface GetStateResult {
  notModified: boolean;
  etag: string | null;
  payload: StatePayload | null;
}

/** Thin typed client for the /v1 session API. */
export class Client {
  constructor(readonly base: string, private fetchFn: typeof fetch = fetch) {}

  private url(path: string): string {
    return `${this.base.replace(/\/$/, "")}${path}`;
  }

  async healthz(): Promise<boolean> {
    const res = await this.fetchFn(this.url("/v1/healthz"));
    return res.ok;
  }

  async createSession(config: SessionConfig): Promise<CreateResponse> {
    const res = await this.fetchFn(this.url("/v1/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
    if (!res.ok) throw await asApiError(res);
    const body = (await res.json()) as CreateResponse;
    checkSchema(body.snapshot);
    return body;
  }

  async postObservation(
    id: string,
    value: number,
    idempotencyKey: string,
  ): Promise<Snapshot> {
    const res = await this.fetchFn(this.url(`/v1/sessions/${id}/observations`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ value, idempotency_key: idempotencyKey }),
    });
    if (!res.ok) throw await asApiError(res);
    const snap = (await res.json()) as Snapshot;
    checkSchema(snap);
    return snap;
  }

  async getState(
    id: string,
    since = 0,
    etag: string | null = null,
  ): Promise<GetStateResult> {
    const headers: Record<string, string> = {};
    if (etag) headers["If-None-Match"] = etag;
    const res = await this.fetchFn(this.url(`/v1/sessions/${id}?since=${since}`), {
      headers,
    });
    if (res.status === 304) {
      return { notModified: true, etag, payload: null };
    }
    if (!res.ok) throw await asApiError(res);
    return {
      notModified: false,
      etag: res.headers.get("ETag"),
      payload: (await res.json()) as StatePayload,
    };
  }
}
