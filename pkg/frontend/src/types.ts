/** Wire types for the session service JSON API. */

export type Relevance = -1 | 0 | 1;

export interface CandidateCard {
  id: string;
  attributes: number[];
  image_url?: string;
}

export interface CreateSessionResponse {
  session_id: string;
  round: number;
  rounds_total: number;
  mode: string;
  candidate: CandidateCard;
  disclosure_budget: number;
}

export interface FeedbackResponse {
  round: number;
  candidate: CandidateCard;
  done: boolean;
  disclosure_budget: number | null;
}

export interface ConfirmResponse {
  done: boolean;
  succeeded: boolean;
}

export interface TranscriptEntry {
  round: number;
  candidate_id: string;
  relevance: number[];
}

export interface SessionSnapshot {
  session_id: string;
  round: number;
  rounds_total: number;
  mode: string;
  done: boolean;
  succeeded: boolean;
  candidate: CandidateCard;
  disclosure_budget: number | null;
  shown_ids: string[];
  transcript: TranscriptEntry[];
}
