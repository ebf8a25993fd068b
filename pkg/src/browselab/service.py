"""HTTP facade over the living-lab engine.

Endpoints: GET /health, GET /search, GET /doc/{id}, POST /browse,
POST /event. Responses never disclose the session's experiment arm; a
pretest showed that telling users about the ranking distorts behaviour.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .corpus import DocumentRecord, UnknownDocIdError, ingest_corpus
from .lab import DEFAULT_PAGE_SIZE, LivingLab, stratagem_descriptors
from .ranking import DEFAULT_CONFIG, EMPTY_THESAURUS, RankingConfig, load_thesaurus
from .session import ArmMismatchError, EventStore, ExperimentArm

#: Event types clients may post directly; the rest are logged server-side.
CLIENT_EVENT_TYPES = ("click_result", "signal")

ENV_PREFIX = "BROWSELAB_"


@dataclass(frozen=True)
class ServiceConfig:
    corpus_path: str
    thesaurus_path: str | None = None
    ranking_config_path: str | None = None
    log_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8000
    arm_seed: int = 0
    forced_arm: str | None = None
    page_size: int = DEFAULT_PAGE_SIZE
    ui_dir: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown service config keys: {sorted(unknown)}")
        return cls(**obj)

    def with_env_overrides(self) -> "ServiceConfig":
        """Environment variables BROWSELAB_* override file values."""
        overrides: dict[str, object] = {}
        for name, caster in (
            ("corpus_path", str),
            ("thesaurus_path", str),
            ("ranking_config_path", str),
            ("log_path", str),
            ("host", str),
            ("port", int),
            ("arm_seed", int),
            ("forced_arm", str),
            ("page_size", int),
            ("ui_dir", str),
        ):
            raw = os.environ.get(ENV_PREFIX + name.upper())
            if raw is not None:
                overrides[name] = caster(raw)
        return replace(self, **overrides) if overrides else self


def build_lab(config: ServiceConfig) -> LivingLab:
    ingested = ingest_corpus(config.corpus_path)
    thesaurus = (
        load_thesaurus(config.thesaurus_path)
        if config.thesaurus_path
        else EMPTY_THESAURUS
    )
    ranking = (
        RankingConfig.from_file(config.ranking_config_path)
        if config.ranking_config_path
        else DEFAULT_CONFIG
    )
    forced = ExperimentArm(config.forced_arm) if config.forced_arm else None
    return LivingLab(
        ingested.index,
        thesaurus,
        ranking,
        EventStore(config.log_path),
        arm_seed=config.arm_seed,
        forced_arm=forced,
        page_size=config.page_size,
    )


class BrowseRequest(BaseModel):
    session_id: str
    kind: str
    value: str
    seed_doc_id: str
    page: int = Field(default=1, ge=1)
    page_size: int = Field(default=DEFAULT_PAGE_SIZE, ge=1, le=200)
    year_from: int | None = None
    year_to: int | None = None
    language: str | None = None


class EventRequest(BaseModel):
    session_id: str
    event_type: str
    payload: dict
    timestamp: int | None = None
    event_id: str | None = None


def _summary(doc: DocumentRecord) -> dict:
    snippet = next(iter(doc.abstracts.values()), "")
    return {
        "id": doc.doc_id,
        "title": doc.title,
        "authors": list(doc.authors),
        "year": doc.year,
        "journal": doc.journal,
        "snippet": snippet[:200],
    }


def create_app(lab: LivingLab) -> FastAPI:
    app = FastAPI(title="browselab", docs_url=None, redoc_url=None)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "documents": lab.index.doc_count}

    @app.get("/search")
    def search(q: str = "", session: str = "", page: int = 1, page_size: int | None = None) -> dict:
        if not q.strip():
            raise HTTPException(status_code=400, detail="q must be nonempty")
        if not session:
            raise HTTPException(status_code=400, detail="session must be given")
        try:
            result = lab.search(session, q, page=page, page_size=page_size)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "results": [_summary(lab.index.get(d)) for d in result.doc_ids],
            "total": result.total,
            "page": result.page,
        }

    @app.get("/doc/{doc_id}")
    def doc_detail(doc_id: str, session: str = "") -> dict:
        if not session:
            raise HTTPException(status_code=400, detail="session must be given")
        try:
            doc = lab.view_doc(session, doc_id)
        except UnknownDocIdError as exc:
            raise HTTPException(status_code=404, detail=f"unknown document {doc_id}") from exc
        return {
            "doc": {
                "id": doc.doc_id,
                "title": doc.title,
                "abstracts": dict(doc.abstracts),
                "authors": list(doc.authors),
                "keywords": list(doc.keywords),
                "keywords_free": list(doc.keywords_free),
                "categories": list(doc.categories),
                "journal": doc.journal,
                "year": doc.year,
                "language": doc.language,
            },
            "stratagems": stratagem_descriptors(doc),
            "fulltext_url": None,
        }

    @app.post("/browse")
    def browse(req: BrowseRequest) -> dict:
        try:
            result = lab.browse(
                req.session_id,
                req.kind,
                req.value,
                seed_doc_id=req.seed_doc_id,
                page=req.page,
                page_size=req.page_size,
                year_from=req.year_from,
                year_to=req.year_to,
                language=req.language,
            )
        except UnknownDocIdError as exc:
            raise HTTPException(status_code=404, detail="unknown seed document") from exc
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "results": [_summary(lab.index.get(d)) for d in result.doc_ids],
            "total": result.total,
            "page": result.page,
        }

    @app.post("/event")
    def post_event(req: EventRequest) -> dict:
        if req.event_type not in CLIENT_EVENT_TYPES:
            raise HTTPException(
                status_code=400,
                detail=f"event_type must be one of {CLIENT_EVENT_TYPES}",
            )
        try:
            ack = lab.post_event(
                req.session_id,
                req.event_type,
                req.payload,
                ts=req.timestamp,
                event_id=req.event_id,
            )
        except ArmMismatchError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"stored": ack.stored, "duplicate": ack.duplicate}

    return app


def create_app_from_config(config: ServiceConfig) -> FastAPI:
    lab = build_lab(config)
    app = create_app(lab)
    if config.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")
    return app
