"""Append-only corpus store: share records in, labeled image stories out.

Records arrive as JSON lines, one share event per line. Labels arrive as
JSON lines keyed by perceptual hash or image reference. Stories are
rebuilt from the logs on demand by grouping records on their perceptual
hash, so the on-disk store is just two logs plus a lock file.
"""
from __future__ import annotations

import contextlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator
from urllib.parse import urlparse

from filelock import FileLock

from .phash import PerceptualHash, group_by_hash, phash_file

__all__ = [
    "AnnotationBundle",
    "MessageRecord",
    "LabelVerdict",
    "ShareEvent",
    "ImageStory",
    "IngestSummary",
    "AttachSummary",
    "StoryAssembly",
    "CorpusStore",
    "ingest_messages",
    "attach_labels",
    "assemble_stories",
]

# the store never accepts these, by contract
FORBIDDEN_FIELDS = ("phone", "display_name")

SAFE_SEARCH_KEYS = ("adult", "spoof", "medical", "violence", "racy")

VERDICT_FAKE = "fake"
VERDICT_UNCHECKED = "unchecked"


@dataclass
class AnnotationBundle:
    """Vision/toxicity annotations attached to one shared image copy."""

    face_count: int = 0
    labels: list[tuple[str, float]] = field(default_factory=list)
    objects: list[tuple[str, float]] = field(default_factory=list)
    dominant_colors: list[tuple[int, int, int, float]] = field(default_factory=list)
    safe_search: dict[str, float] = field(default_factory=dict)
    web_matches: list[str] = field(default_factory=list)
    web_matches_accessible: list[bool] = field(default_factory=list)
    toxicity: float | None = None
    web_entities: list[tuple[str, float]] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.face_count or self.labels or self.objects
                    or self.dominant_colors or self.safe_search
                    or self.web_matches or self.toxicity or self.web_entities)


@dataclass
class MessageRecord:
    """One share event of one image in one group by one user."""

    message_id: str
    timestamp: int
    group_id: str
    user_id: str
    image_ref: str | None = None
    ocr_text: str = ""
    annotations: AnnotationBundle | None = None
    phash: int | None = None


@dataclass
class LabelVerdict:
    """Fact-check verdict for one story, keyed by hash or image ref."""

    key: str
    verdict: str = VERDICT_UNCHECKED
    source_url: str | None = None
    checked_at: int | None = None


@dataclass(frozen=True)
class ShareEvent:
    timestamp: int
    group_id: str
    user_id: str
    message_id: str


@dataclass
class ImageStory:
    """A deduplicated image with every share event it appeared in."""

    story_id: str  # canonical 64-bit perceptual hash, 16 hex chars
    share_events: list[ShareEvent]
    ocr_text: str = ""
    annotations: AnnotationBundle = field(default_factory=AnnotationBundle)
    verdict: LabelVerdict | None = None

    @property
    def first_share(self) -> ShareEvent:
        return self.share_events[0]

    @property
    def label(self) -> int:
        return 1 if self.verdict and self.verdict.verdict == VERDICT_FAKE else 0

    def share_count(self) -> int:
        return len(self.share_events)

    def distinct_users(self) -> int:
        return len({e.user_id for e in self.share_events})

    def distinct_groups(self) -> int:
        return len({e.group_id for e in self.share_events})


@dataclass
class IngestSummary:
    accepted: int = 0
    rejected: int = 0
    duplicates: int = 0
    reasons: list[tuple[int, str]] = field(default_factory=list)  # (line#, why)


@dataclass
class AttachSummary:
    matched: int = 0
    unmatched: int = 0
    conflicts: list[str] = field(default_factory=list)  # story ids with contradictory verdicts


@dataclass
class StoryAssembly:
    stories: dict[str, ImageStory]
    excluded: list[tuple[str, str]] = field(default_factory=list)  # (message_id, why)


class RecordValidationError(ValueError):
    pass


def _require_str(obj: dict, key: str, allow_empty: bool = False) -> str:
    value = obj.get(key)
    if value is None or not isinstance(value, str) or (not allow_empty and not value):
        raise RecordValidationError(f"missing {key}")
    return value


def _parse_score(value, what: str) -> float:
    try:
        score = float(value)
    except (TypeError, ValueError):
        raise RecordValidationError(f"non-numeric {what}")
    if not 0.0 <= score <= 1.0:
        raise RecordValidationError(f"{what} out of [0,1]")
    return score


def _valid_url(url: str) -> bool:
    try:
        parts = urlparse(url)
    except ValueError:
        return False
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def parse_annotations(obj: dict) -> AnnotationBundle:
    bundle = AnnotationBundle()
    face_count = obj.get("face_count", 0)
    if not isinstance(face_count, int) or face_count < 0:
        raise RecordValidationError("negative face_count")
    bundle.face_count = face_count
    for key in ("labels", "objects", "web_entities"):
        pairs = []
        for entry in obj.get(key) or []:
            if isinstance(entry, dict):
                tag, conf = entry.get("tag") or entry.get("entity"), entry.get("confidence", entry.get("score"))
            else:
                tag, conf = entry[0], entry[1]
            pairs.append((str(tag), _parse_score(conf, f"{key} score")))
        setattr(bundle, key, pairs)
    for entry in obj.get("dominant_colors") or []:
        r, g, b, frac = entry
        bundle.dominant_colors.append((int(r), int(g), int(b), _parse_score(frac, "color fraction")))
    safe = obj.get("safe_search") or {}
    bundle.safe_search = {k: _parse_score(safe[k], f"safe_search.{k}")
                          for k in SAFE_SEARCH_KEYS if k in safe}
    for entry in obj.get("web_matches") or []:
        if isinstance(entry, dict):
            url, accessible = entry.get("url", ""), bool(entry.get("accessible", True))
        else:
            url, accessible = str(entry), True
        if not _valid_url(url):
            raise RecordValidationError(f"invalid web_match url: {url!r}")
        bundle.web_matches.append(url)
        bundle.web_matches_accessible.append(accessible)
    if obj.get("toxicity") is not None:
        bundle.toxicity = _parse_score(obj["toxicity"], "toxicity")
    return bundle


def parse_record(obj: dict) -> MessageRecord:
    for forbidden in FORBIDDEN_FIELDS:
        if forbidden in obj:
            raise RecordValidationError(f"forbidden field {forbidden!r}")
    message_id = _require_str(obj, "message_id")
    group_id = _require_str(obj, "group_id")
    user_id = _require_str(obj, "user_id")
    timestamp = obj.get("timestamp")
    if not isinstance(timestamp, int) or timestamp <= 0:
        raise RecordValidationError("timestamp must be a positive integer")
    image_ref = obj.get("image_ref") or None
    phash_hex = obj.get("phash")
    phash_bits = None
    if phash_hex is not None:
        try:
            phash_bits = PerceptualHash.from_hex(str(phash_hex)).bits
        except ValueError:
            raise RecordValidationError(f"malformed phash: {phash_hex!r}")
    if image_ref is None and phash_bits is None:
        raise RecordValidationError("record has neither image_ref nor phash")
    ocr_text = obj.get("ocr_text") or ""
    if not isinstance(ocr_text, str):
        raise RecordValidationError("ocr_text must be a string")
    annotations = None
    if obj.get("annotations"):
        annotations = parse_annotations(obj["annotations"])
    return MessageRecord(
        message_id=message_id, timestamp=timestamp, group_id=group_id,
        user_id=user_id, image_ref=image_ref, ocr_text=ocr_text,
        annotations=annotations, phash=phash_bits,
    )


def record_to_json(rec: MessageRecord) -> dict:
    obj: dict = {
        "message_id": rec.message_id,
        "timestamp": rec.timestamp,
        "group_id": rec.group_id,
        "user_id": rec.user_id,
    }
    if rec.image_ref:
        obj["image_ref"] = rec.image_ref
    if rec.ocr_text:
        obj["ocr_text"] = rec.ocr_text
    if rec.phash is not None:
        obj["phash"] = f"{rec.phash:016x}"
    if rec.annotations is not None:
        a = rec.annotations
        ann: dict = {}
        if a.face_count:
            ann["face_count"] = a.face_count
        if a.labels:
            ann["labels"] = [[t, c] for t, c in a.labels]
        if a.objects:
            ann["objects"] = [[t, c] for t, c in a.objects]
        if a.dominant_colors:
            ann["dominant_colors"] = [list(c) for c in a.dominant_colors]
        if a.safe_search:
            ann["safe_search"] = a.safe_search
        if a.web_matches:
            ann["web_matches"] = [
                {"url": u, "accessible": ok}
                for u, ok in zip(a.web_matches, a.web_matches_accessible)
            ]
        if a.toxicity is not None:
            ann["toxicity"] = a.toxicity
        if a.web_entities:
            ann["web_entities"] = [[e, s] for e, s in a.web_entities]
        obj["annotations"] = ann
    return obj


class CorpusStore:
    """Single-writer store backed by append-only JSONL logs.

    Writes (ingest, label attach) serialize through a file lock; reads
    work on an in-memory snapshot rebuilt from the logs.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.records_path = self.root / "records.jsonl"
        self.labels_path = self.root / "labels.jsonl"
        self._lock = FileLock(str(self.root / ".lock"))
        self._mem_lock = threading.Lock()
        self._records: dict[str, MessageRecord] = {}
        self._verdicts: dict[str, LabelVerdict] = {}
        self._hash_cache: dict[str, int | None] = {}
        self._record_handle: IO | None = None
        self._load()

    def _load(self):
        if self.records_path.exists():
            with self.records_path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = parse_record(json.loads(line))
                        self._records[rec.message_id] = rec
        if self.labels_path.exists():
            with self.labels_path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        obj = json.loads(line)
                        verdict = LabelVerdict(
                            key=obj["key"], verdict=obj.get("verdict", VERDICT_UNCHECKED),
                            source_url=obj.get("source_url"), checked_at=obj.get("checked_at"),
                        )
                        self._verdicts[verdict.key] = verdict

    # -- writes ------------------------------------------------------------

    @contextlib.contextmanager
    def batch_writer(self):
        """Hold the record log open across many appends (one lock acquire)."""
        with self._lock:
            with self.records_path.open("a", encoding="utf-8") as fh:
                self._record_handle = fh
                try:
                    yield self
                finally:
                    self._record_handle = None

    def append_record(self, rec: MessageRecord) -> bool:
        """Persist one record; returns False if message_id already present."""
        with self._mem_lock:
            if rec.message_id in self._records:
                return False
            line = json.dumps(record_to_json(rec), ensure_ascii=False) + "\n"
            if self._record_handle is not None:
                self._record_handle.write(line)
            else:
                with self._lock:
                    with self.records_path.open("a", encoding="utf-8") as fh:
                        fh.write(line)
            self._records[rec.message_id] = rec
            return True

    def append_verdict(self, verdict: LabelVerdict) -> bool:
        """Persist one verdict; returns False if identical one already stored.

        A stored fake verdict is sticky: a later unchecked verdict for the
        same key is logged but does not downgrade the story (the conflict
        is surfaced by attach_labels instead).
        """
        with self._mem_lock:
            existing = self._verdicts.get(verdict.key)
            if existing is not None and existing.verdict == verdict.verdict:
                return False
            with self._lock:
                with self.labels_path.open("a", encoding="utf-8") as fh:
                    obj = {"key": verdict.key, "verdict": verdict.verdict}
                    if verdict.source_url:
                        obj["source_url"] = verdict.source_url
                    if verdict.checked_at:
                        obj["checked_at"] = verdict.checked_at
                    fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            if existing is None or existing.verdict != VERDICT_FAKE:
                self._verdicts[verdict.key] = verdict
            return True

    def existing_verdict(self, key: str) -> LabelVerdict | None:
        return self._verdicts.get(key)

    # -- reads -------------------------------------------------------------

    def records(self) -> list[MessageRecord]:
        return list(self._records.values())

    def verdicts(self) -> list[LabelVerdict]:
        return list(self._verdicts.values())

    def __len__(self) -> int:
        return len(self._records)

    def resolve_hash(self, rec: MessageRecord) -> int | None:
        """Perceptual hash of a record: precomputed, or computed from bytes."""
        if rec.phash is not None:
            return rec.phash
        if not rec.image_ref:
            return None
        if rec.image_ref in self._hash_cache:
            return self._hash_cache[rec.image_ref]
        path = Path(rec.image_ref)
        if not path.is_absolute():
            path = self.root / path
        bits: int | None = None
        if path.exists():
            try:
                bits = phash_file(path).bits
            except Exception:
                bits = None
        self._hash_cache[rec.image_ref] = bits
        return bits


def _iter_lines(source) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
    elif hasattr(source, "read"):
        yield from source
    else:
        yield from source


def ingest_messages(source: str | Path | IO | Iterable[str],
                    store: CorpusStore) -> IngestSummary:
    """Ingest a JSONL record stream; idempotent on message_id.

    Invalid lines are rejected with a per-line diagnostic and never abort
    the stream.
    """
    summary = IngestSummary()
    with store.batch_writer():
        for line_no, line in enumerate(_iter_lines(source), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise RecordValidationError("record is not a JSON object")
                rec = parse_record(obj)
            except json.JSONDecodeError:
                summary.rejected += 1
                summary.reasons.append((line_no, "malformed JSON"))
                continue
            except RecordValidationError as exc:
                summary.rejected += 1
                summary.reasons.append((line_no, str(exc)))
                continue
            if store.append_record(rec):
                summary.accepted += 1
            else:
                summary.duplicates += 1
    return summary


def parse_verdict_lines(source) -> list[LabelVerdict]:
    """Parse a label file: JSON lines keyed by phash or image_ref."""
    verdicts = []
    for line in _iter_lines(source):
        if not line.strip():
            continue
        obj = json.loads(line)
        key = obj.get("phash") or obj.get("image_ref") or obj.get("key")
        if not key:
            raise ValueError(f"label line has no phash/image_ref key: {line!r}")
        verdicts.append(LabelVerdict(
            key=str(key), verdict=obj.get("verdict", VERDICT_UNCHECKED),
            source_url=obj.get("source_url"), checked_at=obj.get("checked_at"),
        ))
    return verdicts


def _merge_annotations(members: list[MessageRecord]) -> AnnotationBundle:
    """Field-wise merge, first non-empty value wins in ingestion order."""
    merged = AnnotationBundle()
    for rec in members:
        bundle = rec.annotations
        if bundle is None:
            continue
        if merged.face_count == 0 and bundle.face_count:
            merged.face_count = bundle.face_count
        for key in ("labels", "objects", "dominant_colors", "safe_search",
                    "web_entities"):
            if not getattr(merged, key) and getattr(bundle, key):
                setattr(merged, key, getattr(bundle, key))
        if not merged.web_matches and bundle.web_matches:
            merged.web_matches = bundle.web_matches
            merged.web_matches_accessible = bundle.web_matches_accessible
        if merged.toxicity is None and bundle.toxicity is not None:
            merged.toxicity = bundle.toxicity
    return merged


def assemble_stories(store: CorpusStore, mode: str = "exact",
                     distance: int = 4) -> StoryAssembly:
    """Group records into stories, one per canonical hash, verdicts applied.

    Records without a resolvable hash are excluded and reported, never
    fatal. Share events sort by (timestamp, message_id) so assembly is
    deterministic under re-ingestion order.
    """
    hashes: dict[str, int] = {}
    excluded: list[tuple[str, str]] = []
    records = store.records()
    for rec in records:
        bits = store.resolve_hash(rec)
        if bits is None:
            excluded.append((rec.message_id, "unresolvable perceptual hash"))
        else:
            hashes[rec.message_id] = bits
    by_id = {rec.message_id: rec for rec in records}

    groups = group_by_hash(hashes, mode=mode, distance=distance)
    fake_keys = _fake_keys(store, hashes)

    stories: dict[str, ImageStory] = {}
    for story_id, member_ids in groups.items():
        members = [by_id[mid] for mid in member_ids]
        events = sorted(
            (ShareEvent(m.timestamp, m.group_id, m.user_id, m.message_id)
             for m in members),
            key=lambda e: (e.timestamp, e.message_id),
        )
        ocr_text = max((m.ocr_text for m in members), key=len, default="")
        verdict = fake_keys.get(story_id) or LabelVerdict(key=story_id)
        stories[story_id] = ImageStory(
            story_id=story_id, share_events=events, ocr_text=ocr_text,
            annotations=_merge_annotations(members), verdict=verdict,
        )
    return StoryAssembly(stories=stories, excluded=excluded)


def _fake_keys(store: CorpusStore,
               hashes: dict[str, int]) -> dict[str, LabelVerdict]:
    """Map story ids to their fake verdicts via hash or image_ref keys."""
    ref_to_story: dict[str, str] = {}
    for rec in store.records():
        if rec.image_ref and rec.message_id in hashes:
            ref_to_story.setdefault(rec.image_ref, f"{hashes[rec.message_id]:016x}")
    hash_story_ids = {f"{bits:016x}" for bits in hashes.values()}
    out: dict[str, LabelVerdict] = {}
    for verdict in store.verdicts():
        if verdict.verdict != VERDICT_FAKE:
            continue
        story_id = None
        key = verdict.key.lower()
        if key in hash_story_ids:
            story_id = key
        elif verdict.key in ref_to_story:
            story_id = ref_to_story[verdict.key]
        if story_id:
            out[story_id] = LabelVerdict(key=story_id, verdict=VERDICT_FAKE,
                                         source_url=verdict.source_url,
                                         checked_at=verdict.checked_at)
    return out


def attach_labels(store: CorpusStore,
                  verdicts: list[LabelVerdict]) -> AttachSummary:
    """Persist verdicts and report how many matched an assembled story.

    Contradictory verdicts for the same story (fake then unchecked, or
    vice versa) are surfaced in the summary instead of silently resolved;
    assembly treats any matched fake verdict as fake.
    """
    assembly = assemble_stories(store)
    hash_ids = set(assembly.stories)
    ref_to_story: dict[str, str] = {}
    for rec in store.records():
        bits = store.resolve_hash(rec)
        if rec.image_ref and bits is not None:
            ref_to_story.setdefault(rec.image_ref, f"{bits:016x}")

    summary = AttachSummary()
    for verdict in verdicts:
        key = verdict.key.lower() if verdict.key.lower() in hash_ids else verdict.key
        story_id = key if key in hash_ids else ref_to_story.get(verdict.key)
        if story_id is None:
            summary.unmatched += 1
            continue
        summary.matched += 1
        existing = store.existing_verdict(story_id)
        if existing is not None and existing.verdict != verdict.verdict:
            summary.conflicts.append(story_id)
        store.append_verdict(LabelVerdict(key=story_id, verdict=verdict.verdict,
                                          source_url=verdict.source_url,
                                          checked_at=verdict.checked_at))
    return summary
