// Typed client for the session service. All numbers displayed by the UI
// come straight from these payloads; the client never computes statistics.

export interface SessionSummary {
  id: string;
  phase: string;
  k: number;
  pending_run_count: number;
  created_at: number;
}

export interface BatchRow {
  row_id: number;
  levels: number[];
}

export interface ScreeningReport {
  cwess: number[];
  beta_main: number[];
  se_main: number[];
  snr: number;
  interaction_scores: Record<string, number>;
  w_int: number;
  epsilon: number;
}

export interface Classification {
  labels: string[];
  critical_set: number[];
  k_c: number;
  significant_interactions: number[][];
  n_int: number;
  tau_p: number;
  tau_a: number;
  tau_crit: number;
}

export interface Strategy {
  kind: string;
  rationale: string;
}

export interface FinalReport {
  x_star: number[];
  predicted_y: number;
  predicted_sd: number;
  critical_factors: number[];
  significant_interactions: number[][];
  total_runs: number;
  strategy_used: string;
  variance_before: number;
  variance_after_at_old_xstar: number;
}

export interface SessionDetail {
  phase: string;
  config: { k: number; seed: number };
  screening: ScreeningReport | null;
  classification: Classification | null;
  strategy: Strategy | null;
  result: FinalReport | null;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(detail);
  }
}

// status 0 marks a network failure (offline banner, not an inline error)
export const OFFLINE = 0;

type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(private fetchFn: FetchFn, private base = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + path, init);
    } catch {
      throw new ApiError(OFFLINE, "service unreachable");
    }
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        detail = body.detail ?? body.error ?? detail;
      } catch {
        // keep statusText
      }
      throw new ApiError(res.status, String(detail));
    }
    return res.json() as Promise<T>;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createSession(k: number, seed: number): Promise<SessionSummary> {
    return this.post("/api/sessions", { k, seed });
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.request("/api/sessions");
  }

  getSession(id: string): Promise<SessionDetail> {
    return this.request(`/api/sessions/${id}`);
  }

  getBatch(id: string): Promise<BatchRow[]> {
    return this.request(`/api/sessions/${id}/batch`);
  }

  postResponses(
    id: string,
    responses: { row_id: number; y: number }[],
  ): Promise<{ phase: string }> {
    return this.post(`/api/sessions/${id}/responses`, responses);
  }

  getScreening(id: string): Promise<ScreeningReport> {
    return this.request(`/api/sessions/${id}/screening`);
  }

  getReport(id: string): Promise<FinalReport> {
    return this.request(`/api/sessions/${id}/report`);
  }
}
