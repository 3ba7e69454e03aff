"""HTTP service exposing live retrieval sessions.

A session is the system's half of one dialog: the client (a human witness in
the browser, or a scripted simulator) supplies the relevance vector each
round; the service encodes it, advances the recurrent state, and returns the
next candidate. In progressive mode the service enforces the round's
disclosure budget (how many nonzero entries the witness may reveal); which
positions to reveal is the witness's choice.

Retrieval is always greedy with repeat exclusion (the test-time policy), so a
scripted witness reproduces the in-process evaluator's candidate sequence
exactly for the same checkpoint and seed.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from pydantic import BaseModel

from .config import TrainConfig
from .engine import system_step
from .errors import ConfigError
from .gallery import Gallery
from .model import DialogState, fresh_state
from .retrieval import initial_candidate
from .seeding import EpisodeStreams
from .training import Checkpoint
from .witness import MODES

DEFAULT_TTL_SECONDS = 30 * 60

_ASSET_EXTENSIONS = (".jpg", ".jpeg", ".png")


class CreateSessionRequest(BaseModel):
    mode: str = "progressive"
    schedule: list[float] | None = None
    seed: int | None = None


class FeedbackRequest(BaseModel):
    relevance: list


class ConfirmRequest(BaseModel):
    candidate_id: str


@dataclass
class Session:
    id: str
    cfg: TrainConfig
    state: DialogState
    candidate_index: int
    round_index: int = 0  # rounds of feedback already consumed
    done: bool = False
    succeeded: bool = False
    shown: list = field(default_factory=list)
    transcript: list = field(default_factory=list)
    created_at: float = field(default_factory=time.monotonic)
    touched_at: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionEngine:
    """Shared model + gallery with an in-memory session table."""

    def __init__(
        self,
        checkpoint: Checkpoint,
        gallery: Gallery,
        ttl_seconds: float = DEFAULT_TTL_SECONDS,
        asset_dir: str | None = None,
    ):
        if gallery.n_attrs != checkpoint.dims.n_attrs:
            raise ConfigError("gallery and checkpoint disagree on attribute count")
        if gallery.n_features != checkpoint.dims.n_features:
            raise ConfigError("gallery and checkpoint disagree on feature dimension")
        self.checkpoint = checkpoint
        self.gallery = gallery
        self.ttl_seconds = ttl_seconds
        self.asset_dir = Path(asset_dir) if asset_dir else None
        self._sessions: dict[str, Session] = {}
        self._table_lock = threading.Lock()

    def _session_config(self, req: CreateSessionRequest) -> TrainConfig:
        base = self.checkpoint.config.to_dict()
        base["mode"] = req.mode
        base["exclude_shown"] = True
        if req.schedule is not None:
            base["schedule"] = list(req.schedule)
            base["rounds"] = len(req.schedule)
        return TrainConfig.from_dict(base)

    def _prune(self) -> None:
        now = time.monotonic()
        stale = [
            sid
            for sid, s in self._sessions.items()
            if now - s.touched_at > self.ttl_seconds
        ]
        for sid in stale:
            self._sessions.pop(sid, None)

    def create(self, req: CreateSessionRequest) -> Session:
        if req.mode not in MODES:
            raise ConfigError(f"unknown mode {req.mode!r}")
        cfg = self._session_config(req)
        seed = req.seed if req.seed is not None else uuid.uuid4().int % (2**63)
        first = initial_candidate(len(self.gallery), EpisodeStreams(seed).init())
        session = Session(
            id=uuid.uuid4().hex,
            cfg=cfg,
            state=fresh_state(self.checkpoint.dims),
            candidate_index=first,
            shown=[first],
        )
        with self._table_lock:
            self._prune()
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._table_lock:
            self._prune()
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        session.touched_at = time.monotonic()
        return session

    def budget(self, session: Session) -> int:
        """Max nonzero entries accepted for the session's next feedback."""
        if session.cfg.mode != "progressive":
            return self.gallery.n_attrs
        return session.cfg.disclosure_schedule().budget(
            session.round_index, self.gallery.n_attrs
        )

    def candidate_payload(self, index: int) -> dict:
        rec = self.gallery.record(index)
        payload = {"id": rec.id, "attributes": [int(v) for v in rec.attributes]}
        url = self._asset_url(rec.id)
        if url is not None:
            payload["image_url"] = url
        return payload

    def _asset_url(self, record_id: str) -> str | None:
        if self.asset_dir is None:
            return None
        for ext in _ASSET_EXTENSIONS:
            if (self.asset_dir / f"{record_id}{ext}").exists():
                return f"/assets/{record_id}{ext}"
        return None

    def feedback(self, session: Session, relevance: list) -> dict:
        with session.lock:
            if session.done:
                raise SessionDone()
            values = _validate_relevance(relevance, self.gallery.n_attrs)
            nonzero = int(np.count_nonzero(values))
            budget = self.budget(session)
            if nonzero > budget:
                raise BudgetExceeded(
                    f"{nonzero} disclosed entries exceed the round's budget of {budget}"
                )
            step = system_step(
                self.checkpoint.params,
                self.gallery,
                session.state,
                values,
                session.candidate_index,
                session.cfg,
                session.shown,
            )
            session.transcript.append(
                {
                    "round": session.round_index + 1,
                    "candidate_id": self.gallery.ids[session.candidate_index],
                    "relevance": [int(v) for v in values],
                }
            )
            session.state = step.state
            session.round_index += 1
            if step.next_index is not None:
                session.candidate_index = step.next_index
                session.shown.append(step.next_index)
            if session.round_index >= session.cfg.rounds or step.next_index is None:
                session.done = True
            return {
                "round": session.round_index + 1,
                "candidate": self.candidate_payload(session.candidate_index),
                "done": session.done,
                "disclosure_budget": None if session.done else self.budget(session),
            }

    def confirm(self, session: Session, candidate_id: str) -> None:
        with session.lock:
            if session.done:
                raise SessionDone()
            current = self.gallery.ids[session.candidate_index]
            if candidate_id != current:
                raise StaleCandidate(
                    f"candidate {candidate_id!r} is not the current candidate {current!r}"
                )
            session.done = True
            session.succeeded = True

    def snapshot(self, session: Session) -> dict:
        with session.lock:
            return {
                "session_id": session.id,
                "round": session.round_index + 1,
                "rounds_total": session.cfg.rounds,
                "mode": session.cfg.mode,
                "done": session.done,
                "succeeded": session.succeeded,
                "candidate": self.candidate_payload(session.candidate_index),
                "disclosure_budget": None if session.done else self.budget(session),
                "shown_ids": [self.gallery.ids[i] for i in session.shown],
                "transcript": list(session.transcript),
            }


class SessionDone(Exception):
    pass


class StaleCandidate(Exception):
    pass


class BudgetExceeded(ValueError):
    pass


def _validate_relevance(relevance, n_attrs: int) -> np.ndarray:
    if not isinstance(relevance, (list, tuple)):
        raise ValueError("relevance must be an array")
    if len(relevance) != n_attrs:
        raise ValueError(f"relevance must have length {n_attrs}")
    values = []
    for v in relevance:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v not in (-1, 0, 1):
            raise ValueError("relevance entries must be -1, 0, or 1")
        values.append(int(v))
    return np.asarray(values, dtype=np.int8)


def build_app(engine: SessionEngine | None) -> FastAPI:
    """Assemble the API. ``engine`` None means no model loaded (503s)."""
    app = FastAPI(title="gotcha session service")

    def _engine() -> SessionEngine:
        if engine is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        return engine

    def _session(session_id: str):
        eng = _engine()
        try:
            return eng, eng.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session") from None

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(engine._sessions) if engine else 0}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        eng = _engine()
        try:
            session = eng.create(req)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "session_id": session.id,
            "round": 1,
            "rounds_total": session.cfg.rounds,
            "mode": session.cfg.mode,
            "candidate": eng.candidate_payload(session.candidate_index),
            "disclosure_budget": eng.budget(session),
        }

    @app.post("/sessions/{session_id}/feedback")
    def submit_feedback(session_id: str, req: FeedbackRequest):
        eng, session = _session(session_id)
        try:
            return eng.feedback(session, req.relevance)
        except SessionDone:
            raise HTTPException(status_code=409, detail="session is done") from None
        except (BudgetExceeded, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/sessions/{session_id}/confirm")
    def confirm_match(session_id: str, req: ConfirmRequest):
        eng, session = _session(session_id)
        try:
            eng.confirm(session, req.candidate_id)
        except SessionDone:
            raise HTTPException(status_code=409, detail="session is done") from None
        except StaleCandidate as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"done": True, "succeeded": True}

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        eng, session = _session(session_id)
        return eng.snapshot(session)

    @app.get("/gallery/items/{record_id}")
    def gallery_item(record_id: str):
        eng = _engine()
        try:
            index = eng.gallery.index_of(record_id)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown record") from None
        return eng.candidate_payload(index)

    if engine is not None and engine.asset_dir is not None:

        @app.get("/assets/{filename}")
        def asset(filename: str):
            path = (engine.asset_dir / filename).resolve()
            if engine.asset_dir.resolve() not in path.parents or not path.exists():
                raise HTTPException(status_code=404, detail="unknown asset")
            return FileResponse(path)

    return app
