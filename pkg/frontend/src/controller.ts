// Session flow controller: owns UI state, calls the API, and exposes a
// render callback. All server errors land either inline on the rows
// that caused them or in the offline banner.

import {
  ApiClient,
  ApiError,
  Classification,
  FinalReport,
  OFFLINE,
  ScreeningReport,
  SessionSummary,
  Strategy,
} from "./api.js";
import {
  RunRow,
  collectSubmittable,
  makeRows,
  markSubmitted,
  setRowError,
} from "./runTable.js";

export interface UiState {
  sessionId: string | null;
  phase: string | null;
  k: number;
  rows: RunRow[];
  screening: ScreeningReport | null;
  classification: Classification | null;
  strategy: Strategy | null;
  report: FinalReport | null;
  sessions: SessionSummary[];
  offline: boolean;
  formError: string | null;
  submitting: boolean;
}

export function initialState(): UiState {
  return {
    sessionId: null,
    phase: null,
    k: 0,
    rows: [],
    screening: null,
    classification: null,
    strategy: null,
    report: null,
    sessions: [],
    offline: false,
    formError: null,
    submitting: false,
  };
}

export class SessionController {
  state: UiState = initialState();

  constructor(
    private api: ApiClient,
    private onChange: (state: UiState) => void = () => {},
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  private handleError(err: unknown, rowIds: number[] = []): void {
    if (err instanceof ApiError && err.status === OFFLINE) {
      this.state.offline = true;
    } else if (err instanceof ApiError && rowIds.length > 0) {
      setRowError(this.state.rows, rowIds, err.detail);
    } else if (err instanceof ApiError) {
      this.state.formError = err.detail;
    } else {
      throw err;
    }
  }

  async refreshList(): Promise<void> {
    try {
      this.state.sessions = await this.api.listSessions();
      this.state.offline = false;
    } catch (err) {
      this.handleError(err);
    }
    this.emit();
  }

  async createSession(k: number, seed: number): Promise<void> {
    this.state.formError = null;
    if (!Number.isInteger(k) || k < 2 || !Number.isInteger(seed)) {
      this.state.formError = "factors must be an integer >= 2, seed an integer";
      this.emit();
      return;
    }
    try {
      const summary = await this.api.createSession(k, seed);
      await this.openSession(summary.id);
      return;
    } catch (err) {
      this.handleError(err);
    }
    this.emit();
  }

  async openSession(id: string): Promise<void> {
    try {
      const detail = await this.api.getSession(id);
      this.state.sessionId = id;
      this.state.k = detail.config.k;
      this.state.phase = detail.phase;
      this.state.screening = detail.screening;
      this.state.classification = detail.classification;
      this.state.strategy = detail.strategy;
      this.state.report = detail.result;
      this.state.rows = makeRows(await this.api.getBatch(id));
      this.state.offline = false;
    } catch (err) {
      this.handleError(err);
    }
    this.emit();
  }

  // Submit every valid, unsubmitted entry. Invalid entries get inline
  // errors without any API call; an empty valid set is a no-op.
  async submitBatch(): Promise<void> {
    const id = this.state.sessionId;
    if (id === null || this.state.submitting) return;
    const payload = collectSubmittable(this.state.rows);
    if (payload.length === 0) {
      this.emit();
      return;
    }
    this.state.submitting = true;
    this.emit();
    const ids = payload.map((p) => p.row_id);
    try {
      const { phase } = await this.api.postResponses(id, payload);
      markSubmitted(this.state.rows, ids);
      this.state.offline = false;
      if (phase !== this.state.phase) {
        this.state.submitting = false;
        await this.openSession(id);
        return;
      }
    } catch (err) {
      this.handleError(err, ids);
    }
    this.state.submitting = false;
    this.emit();
  }
}
