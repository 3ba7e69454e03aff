/** Thin fetch client for the session service. */

import type {
  ConfirmResponse,
  CreateSessionResponse,
  FeedbackResponse,
  SessionSnapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class SessionApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail =
        typeof body?.detail === "string" ? body.detail : JSON.stringify(body);
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  createSession(mode: string, seed?: number): Promise<CreateSessionResponse> {
    const payload: Record<string, unknown> = { mode };
    if (seed !== undefined) payload.seed = seed;
    return this.post("/sessions", payload);
  }

  submitFeedback(sessionId: string, relevance: number[]): Promise<FeedbackResponse> {
    return this.post(`/sessions/${sessionId}/feedback`, { relevance });
  }

  confirmMatch(sessionId: string, candidateId: string): Promise<ConfirmResponse> {
    return this.post(`/sessions/${sessionId}/confirm`, {
      candidate_id: candidateId,
    });
  }

  getState(sessionId: string): Promise<SessionSnapshot> {
    return this.request(`/sessions/${sessionId}`);
  }

  async healthy(): Promise<boolean> {
    try {
      await this.request("/healthz");
      return true;
    } catch {
      return false;
    }
  }
}
