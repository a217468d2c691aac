// Typed client for the service's HTTP routes. Everything the UI knows
// about the backend wire format lives in this module.

import type { KeyEvent } from "./capture.js";

export interface Topic {
  topic_id: string;
  category: string;
  prompt_text: string;
}

export interface SessionCreated {
  session_id: string;
  participant_id: string;
  topic: Topic;
  guidelines_text: string;
  duration_ms: number;
}

export interface SessionView {
  session_id: string;
  state: string;
  topic: Topic;
  duration_ms: number;
  consent_acknowledged: boolean;
  last_seq: number | null;
  snapshot_count: number;
}

export interface StateView {
  session_id: string;
  state: string;
}

export interface EventBatchResult {
  accepted: number;
  logs_finalized: number;
}

export interface SnapshotResult {
  index: number;
  t_ms: number;
}

export interface SubmitResult {
  feedback_id: string;
  state: string;
}

export interface RubricSection {
  name: string;
  display: string;
  commentary: string;
}

export interface ProviderMeta {
  provider_id: string;
  generated_at: string;
  attempts: number;
  raw_text: string;
  usage: Record<string, unknown>;
  latency_ms: number;
}

export interface FeedbackReport {
  rubric_feedback: RubricSection[];
  revision_narrative: string;
  timestamp_anchors: number[];
  provider_meta: ProviderMeta;
}

export interface SurveyItem {
  item_id: string;
  text: string;
}

export interface Instrument {
  version: number;
  likert_items: SurveyItem[];
  open_items: SurveyItem[];
}

export interface SurveyResult {
  stored_id: string;
  state: string;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorKind: string,
    readonly detail: string,
  ) {
    super(`${errorKind}: ${detail}`);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  createSession(): Promise<SessionCreated> {
    return this.request("POST", "/sessions");
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  acknowledgeConsent(sessionId: string): Promise<StateView> {
    return this.request("POST", `/sessions/${sessionId}/consent`,
      JSON.stringify({ acknowledged: true }));
  }

  postEvents(sessionId: string, events: readonly KeyEvent[]): Promise<EventBatchResult> {
    const body = events.map((e) => JSON.stringify(e)).join("\n") + "\n";
    return this.request("POST", `/sessions/${sessionId}/events`, body,
      "application/x-ndjson");
  }

  postSnapshot(sessionId: string, index: number, tMs: number, content: string): Promise<SnapshotResult> {
    return this.request("POST", `/sessions/${sessionId}/snapshots`,
      JSON.stringify({ index, t_ms: tMs, content }));
  }

  submit(sessionId: string, finalText: string, tMs: number): Promise<SubmitResult> {
    return this.request("POST", `/sessions/${sessionId}/submit`,
      JSON.stringify({ final_text: finalText, t_ms: tMs }));
  }

  getFeedback(sessionId: string): Promise<FeedbackReport> {
    return this.request("GET", `/sessions/${sessionId}/feedback`);
  }

  getInstrument(): Promise<Instrument> {
    return this.request("GET", "/survey/instrument");
  }

  postSurvey(sessionId: string, likert: number[], open: string[]): Promise<SurveyResult> {
    return this.request("POST", `/sessions/${sessionId}/survey`,
      JSON.stringify({ likert, open }));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: string,
    contentType = "application/json",
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": contentType };
      init.body = body;
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let kind = "HTTPError";
      let detail = `status ${response.status}`;
      try {
        const parsed = (await response.json()) as { error?: string; detail?: string };
        kind = parsed.error ?? kind;
        detail = parsed.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, kind, detail);
    }
    return response.json() as Promise<T>;
  }
}
