"""HTTP monitor: dated rankings, story details, and verdict feedback.

Read endpoints serve an immutable corpus+model snapshot loaded at
startup; label submissions append to the store's verdict log and update
the snapshot's verdict field only (the model is never retrained
implicitly). Responses carry aggregate counts, never user or group ids.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, JSONResponse

from .corpus import CorpusStore, ImageStory, LabelVerdict, assemble_stories
from .features import FeatureSchema, build_matrix
from .lexicon import LexiconConfig
from . import scoring

__all__ = ["ServiceConfig", "StoryDetail", "create_app", "serve"]

MAX_PAGE_SIZE = 500
THERMOMETER_BANDS = ((0.33, "low"), (0.66, "medium"), (1.01, "high"))


@dataclass
class ServiceConfig:
    corpus_path: str
    model_path: str
    tokens: list[str]
    host: str = "127.0.0.1"
    port: int = 8040
    page_size: int = 50
    images_dir: str | None = None
    lexicon_path: str | None = None

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("at least one access token is required")
        if not 1 <= self.page_size <= MAX_PAGE_SIZE:
            raise ValueError(f"page_size must be in [1, {MAX_PAGE_SIZE}]")


def thermometer_bucket(score: float) -> str:
    """Three-band rendering: [0, 0.33) low, [0.33, 0.66) medium, rest high."""
    for upper, band in THERMOMETER_BANDS:
        if score < upper:
            return band
    return "high"


@dataclass
class StoryDetail:
    story_id: str
    share_count: int
    distinct_users: int
    distinct_groups: int
    fakeness_score: float
    thermometer: str
    first_seen: str
    verdict: str

    @classmethod
    def build(cls, story: ImageStory, score: float) -> "StoryDetail":
        first_day = dt.datetime.fromtimestamp(
            story.first_share.timestamp, tz=dt.timezone.utc).date().isoformat()
        return cls(
            story_id=story.story_id,
            share_count=story.share_count(),
            distinct_users=story.distinct_users(),
            distinct_groups=story.distinct_groups(),
            fakeness_score=round(score, 6),
            thermometer=thermometer_bucket(score),
            first_seen=first_day,
            verdict=story.verdict.verdict if story.verdict else "unchecked",
        )


@dataclass
class _Snapshot:
    stories: dict[str, ImageStory]
    scores: dict[str, float]
    schema: FeatureSchema
    trained_at: float
    by_date: dict[str, list[str]] = field(default_factory=dict)
    event_dates: set = field(default_factory=set)

    def index_dates(self):
        self.by_date = {}
        self.event_dates = set()
        for story in self.stories.values():
            first_day = dt.datetime.fromtimestamp(
                story.first_share.timestamp, tz=dt.timezone.utc).date().isoformat()
            self.by_date.setdefault(first_day, []).append(story.story_id)
            for event in story.share_events:
                self.event_dates.add(dt.datetime.fromtimestamp(
                    event.timestamp, tz=dt.timezone.utc).date().isoformat())


def _load_snapshot(store: CorpusStore, pipeline: scoring.ScoringPipeline,
                   lexicons: LexiconConfig) -> _Snapshot:
    stories = assemble_stories(store).stories
    schema, vectors = build_matrix(stories.values(), lexicons)
    if vectors:
        probs = pipeline.score_vectors(schema, vectors)
        scores = {vec.story_id: float(p) for vec, p in zip(vectors, probs)}
    else:
        scores = {}
    snapshot = _Snapshot(stories=stories, scores=scores, schema=schema,
                         trained_at=pipeline.trained_at)
    snapshot.index_dates()
    return snapshot


def create_app(config: ServiceConfig) -> FastAPI:
    store = CorpusStore(config.corpus_path)
    pipeline = scoring.load_model(config.model_path)
    lexicons = (LexiconConfig.from_toml(config.lexicon_path)
                if config.lexicon_path else LexiconConfig.default())
    schema = FeatureSchema.load()
    if pipeline.manifest_checksum != schema.checksum:
        raise ValueError("model was trained against a different feature manifest")
    snapshot = _load_snapshot(store, pipeline, lexicons)

    app = FastAPI(title="fakerank monitor", version="1.0")
    app.state.snapshot = snapshot
    app.state.store = store

    def auth(request: Request):
        header = request.headers.get("authorization", "")
        if not header.startswith("Bearer ") or header[7:] not in config.tokens:
            raise HTTPException(status_code=401, detail="invalid or missing token")

    @app.exception_handler(HTTPException)
    async def _http_error(_request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code,
                            content={"code": exc.status_code,
                                     "message": str(exc.detail)})

    @app.get("/api/dates")
    def list_dates(_=Depends(auth)):
        snap: _Snapshot = app.state.snapshot
        return {"dates": sorted(snap.event_dates)}

    @app.get("/api/rank")
    def rank(date: str, strategy: str = "fakeness", k: int = 50,
             page: int = 1, _=Depends(auth)):
        snap: _Snapshot = app.state.snapshot
        if strategy not in scoring.STRATEGIES:
            raise HTTPException(status_code=422,
                                detail=f"unknown strategy {strategy!r}")
        if k < 1 or page < 1:
            raise HTTPException(status_code=422, detail="k and page must be >= 1")
        ids = snap.by_date.get(date, [])
        stories = [snap.stories[sid] for sid in ids]
        if strategy == "fakeness":
            keyed = [(sid, snap.scores[sid]) for sid in ids]
            keyed.sort(key=lambda pair: (-pair[1], pair[0]))
        else:
            keyfn = {"shares": ImageStory.share_count,
                     "distinct_users": ImageStory.distinct_users,
                     "distinct_groups": ImageStory.distinct_groups}[strategy]
            keyed = [(s.story_id, float(keyfn(s))) for s in stories]
            keyed.sort(key=lambda pair: (-pair[1], pair[0]))
        top = keyed[:k]
        start = (page - 1) * config.page_size
        page_items = top[start:start + config.page_size]
        items = [StoryDetail.build(snap.stories[sid], snap.scores[sid]).__dict__
                 for sid, _key in page_items]
        return {"date": date, "strategy": strategy, "k": k, "page": page,
                "page_size": config.page_size, "total": len(top),
                "items": items}

    @app.get("/api/stories/{story_id}")
    def story_detail(story_id: str, _=Depends(auth)):
        snap: _Snapshot = app.state.snapshot
        story = snap.stories.get(story_id)
        if story is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown story {story_id!r}")
        return StoryDetail.build(story, snap.scores[story_id]).__dict__

    @app.post("/api/labels")
    def submit_label(payload: dict, _=Depends(auth)):
        snap: _Snapshot = app.state.snapshot
        story_id = str(payload.get("story_id", ""))
        verdict = str(payload.get("verdict", ""))
        if verdict not in ("fake", "unchecked"):
            raise HTTPException(status_code=422,
                                detail="verdict must be 'fake' or 'unchecked'")
        story = snap.stories.get(story_id)
        if story is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown story {story_id!r}")
        app.state.store.append_verdict(LabelVerdict(key=story_id, verdict=verdict))
        stored = app.state.store.existing_verdict(story_id)
        story.verdict = stored or LabelVerdict(key=story_id, verdict=verdict)
        return {"story_id": story_id, "verdict": story.verdict.verdict,
                "status": "ok"}

    @app.get("/api/model")
    def model_info(_=Depends(auth)):
        snap: _Snapshot = app.state.snapshot
        return {"manifest_checksum": snap.schema.checksum,
                "trained_at": snap.trained_at,
                "strategies": list(scoring.STRATEGIES)}

    @app.get("/api/images/{story_id}")
    def image(story_id: str, _=Depends(auth)):
        if not config.images_dir:
            raise HTTPException(status_code=404, detail="no image directory configured")
        base = Path(config.images_dir).resolve()
        for ext in (".png", ".jpg", ".jpeg"):
            candidate = (base / f"{story_id}{ext}").resolve()
            if candidate.is_file() and candidate.is_relative_to(base):
                media = "image/png" if ext == ".png" else "image/jpeg"
                return FileResponse(candidate, media_type=media)
        raise HTTPException(status_code=404,
                            detail=f"no image for story {story_id!r}")

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
