/** Session state machine driving one witness dialog.
 *
 * One controller per browser tab/session; all server interaction is
 * sequential. Rendering subscribes to change events and reads the public
 * fields; the controller owns no DOM.
 */

import { ApiError, SessionApi } from "./api.js";
import { RoundSelections } from "./selections.js";
import type { CandidateCard } from "./types.js";

export type Phase = "idle" | "starting" | "active" | "submitting" | "done";

export interface HistoryEntry {
  round: number;
  candidate: CandidateCard;
  disclosed: number;
  relevance: number[];
}

export class SessionController {
  phase: Phase = "idle";
  sessionId: string | null = null;
  round = 0;
  roundsTotal = 0;
  mode = "progressive";
  candidate: CandidateCard | null = null;
  budget = 0;
  succeeded = false;
  history: HistoryEntry[] = [];
  selections: RoundSelections | null = null;
  lastError: string | null = null;

  private listeners: Array<() => void> = [];

  constructor(private readonly api: SessionApi) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  async start(mode: string, seed?: number): Promise<void> {
    this.phase = "starting";
    this.lastError = null;
    this.notify();
    const created = await this.api.createSession(mode, seed);
    this.sessionId = created.session_id;
    this.round = created.round;
    this.roundsTotal = created.rounds_total;
    this.mode = created.mode;
    this.candidate = created.candidate;
    this.budget = created.disclosure_budget;
    this.history = [];
    this.succeeded = false;
    this.selections = new RoundSelections(
      created.candidate.attributes.length,
      created.disclosure_budget,
    );
    this.phase = "active";
    this.notify();
  }

  /** Whether the submit button should be enabled. */
  canSubmit(): boolean {
    return (
      this.phase === "active" &&
      this.selections !== null &&
      this.selections.withinBudget()
    );
  }

  async submit(): Promise<void> {
    if (!this.canSubmit() || !this.sessionId || !this.selections || !this.candidate) {
      return;
    }
    const payload = this.selections.payload();
    this.phase = "submitting";
    this.notify();
    try {
      const reply = await this.api.submitFeedback(this.sessionId, payload);
      this.history.push({
        round: this.round,
        candidate: this.candidate,
        disclosed: payload.filter((v) => v !== 0).length,
        relevance: payload,
      });
      this.round = reply.round;
      this.candidate = reply.candidate;
      if (reply.done) {
        this.phase = "done";
      } else {
        this.budget = reply.disclosure_budget ?? this.candidate.attributes.length;
        this.selections = new RoundSelections(
          this.candidate.attributes.length,
          this.budget,
        );
        this.phase = "active";
      }
      this.lastError = null;
    } catch (error) {
      // a rejected submission keeps the user's selections intact
      this.phase = "active";
      this.lastError =
        error instanceof ApiError ? error.detail : String(error);
    }
    this.notify();
  }

  async confirmMatch(): Promise<void> {
    if (this.phase !== "active" || !this.sessionId || !this.candidate) return;
    try {
      await this.api.confirmMatch(this.sessionId, this.candidate.id);
      this.phase = "done";
      this.succeeded = true;
      this.lastError = null;
    } catch (error) {
      this.lastError =
        error instanceof ApiError ? error.detail : String(error);
    }
    this.notify();
  }

  /** Reload round/history state from the server (page refresh). */
  async refresh(): Promise<void> {
    if (!this.sessionId) return;
    const snapshot = await this.api.getState(this.sessionId);
    this.round = snapshot.round;
    this.roundsTotal = snapshot.rounds_total;
    this.mode = snapshot.mode;
    this.candidate = snapshot.candidate;
    this.succeeded = snapshot.succeeded;
    this.history = snapshot.transcript.map((entry) => ({
      round: entry.round,
      candidate: { id: entry.candidate_id, attributes: [] },
      disclosed: entry.relevance.filter((v) => v !== 0).length,
      relevance: entry.relevance,
    }));
    if (snapshot.done) {
      this.phase = "done";
    } else {
      this.budget = snapshot.disclosure_budget ?? snapshot.candidate.attributes.length;
      this.selections = new RoundSelections(
        snapshot.candidate.attributes.length,
        this.budget,
      );
      this.phase = "active";
    }
    this.notify();
  }
}
