"""Synthetic corpus generator for tests, demos, and acceptance runs.

Fake stories are planted with elevated web-match counts, faster early
share cadence, and concentration of first shares among a handful of
users and right-leaning groups; content text leans on urgency/anger
vocabulary. Every differentiated quantity interpolates from the
unchecked baseline through a per-family strength in [0, 1], so strength
zero makes both classes statistically identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import (ImageStory, LabelVerdict, MessageRecord, VERDICT_FAKE,
                     parse_record)
from .phash import group_by_hash

__all__ = ["SyntheticSpec", "generate_synthetic", "write_synthetic",
           "stories_from_synthetic"]

EPOCH_2018_08_01 = 1533081600
DAY = 86400

NEUTRAL_WORDS = (
    "governo brasil eleição campanha cidade povo projeto semana partido "
    "debate proposta foto imagem vídeo grupo presidente candidato votação "
    "urna pesquisa rua praça encontro reunião anúncio").split()
FILLER_WORDS = "a o de que para com não mais uma os na em é do".split()
ALARM_WORDS = ("urgente absurdo escândalo mentira vergonha bandido corrupto "
               "golpe fraude revolta compartilhe atenção").split()
VISION_TAGS = ("person crowd text screenshot protest street flag meeting "
               "poster car banner stage").split()
COMMON_TLDS = ("com", "org", "net", "com.br", "org.br", "gov.br")
UNCOMMON_TLDS = ("xyz", "info", "biz", "click", "top", "site")


@dataclass
class SyntheticSpec:
    stories: int
    fake_fraction: float = 0.03
    content_strength: float = 1.0
    source_strength: float = 1.0
    environment_strength: float = 1.0
    seed: int = 0
    groups: int | None = None
    users: int | None = None

    def __post_init__(self):
        if not 0.0 < self.fake_fraction < 1.0:
            raise ValueError("fake_fraction must be in (0, 1)")
        for name in ("content_strength", "source_strength",
                     "environment_strength"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")

    @classmethod
    def with_strength(cls, stories: int, fake_fraction: float,
                      strength: float, seed: int = 0) -> "SyntheticSpec":
        return cls(stories=stories, fake_fraction=fake_fraction,
                   content_strength=strength, source_strength=strength,
                   environment_strength=strength, seed=seed)


def _story_hash(index: int) -> str:
    # odd multiplier makes this a bijection on 64-bit ints: ids never collide
    return f"{(index * 0x9E3779B97F4A7C15 + 0x51ED2701) & 0xFFFFFFFFFFFFFFFF:016x}"


def _group_pool(n_groups: int) -> list[str]:
    pool = []
    for i in range(n_groups):
        slot = i % 10
        if slot < 3:
            pool.append(f"grp{i:04d}-patriota")      # keyword-mapped: right
        elif slot < 5:
            pool.append(f"grp{i:04d}-companheiro")   # keyword-mapped: left
        else:
            pool.append(f"grp{i:04d}-noticias")      # keyword-mapped: mainstream
    return pool


def _make_text(rng: np.random.Generator, fake: bool, strength: float) -> str:
    n_words = 4 + int(rng.poisson(9))
    p_alarm = 0.03 + 0.15 * strength * fake
    p_upper = 0.04 + 0.08 * strength * fake
    words = []
    for _ in range(n_words):
        roll = rng.random()
        if roll < p_alarm:
            word = ALARM_WORDS[int(rng.integers(len(ALARM_WORDS)))]
        elif roll < p_alarm + 0.35:
            word = FILLER_WORDS[int(rng.integers(len(FILLER_WORDS)))]
        else:
            word = NEUTRAL_WORDS[int(rng.integers(len(NEUTRAL_WORDS)))]
        if rng.random() < p_upper:
            word = word.upper()
        words.append(word)
    text = " ".join(words)
    sentence_end = "!!!" if rng.random() < 0.15 + 0.25 * strength * fake else "."
    return text[0].upper() + text[1:] + sentence_end


def _make_annotations(rng: np.random.Generator, fake: bool,
                      content: float, environment: float) -> dict:
    # web-match count is the strongest planted signal: fake support shifts
    # clear of the unchecked mass at full strength; per-URL traits stay
    # class-independent so derived counts inherit (and dilute) the signal
    n_web = (int(rng.poisson(0.4 + 8.0 * environment * fake))
             + round(4.0 * environment) * fake)
    p_uncommon = 0.25
    p_accessible = 0.70
    web_matches = []
    for j in range(n_web):
        pool = UNCOMMON_TLDS if rng.random() < p_uncommon else COMMON_TLDS
        tld = pool[int(rng.integers(len(pool)))]
        scheme = "https" if rng.random() < 0.7 else "http"
        host = f"site{int(rng.integers(1, 5000)):04d}.{tld}"
        web_matches.append({"url": f"{scheme}://{host}/p/{j}",
                            "accessible": bool(rng.random() < p_accessible)})

    n_labels = int(rng.poisson(3))
    labels = [[VISION_TAGS[int(rng.integers(len(VISION_TAGS)))],
               round(float(rng.uniform(0.5, 1.0)), 4)] for _ in range(n_labels)]
    n_objects = int(rng.poisson(2))
    objects = [[VISION_TAGS[int(rng.integers(len(VISION_TAGS)))],
                round(float(rng.uniform(0.3, 1.0)), 4)] for _ in range(n_objects)]
    n_entities = int(rng.poisson(1.5))
    entities = [[NEUTRAL_WORDS[int(rng.integers(len(NEUTRAL_WORDS)))],
                 round(float(rng.uniform(0.3, 1.0)), 4)] for _ in range(n_entities)]

    toxicity = min(1.0, float(rng.beta(2, 8))
                   + 0.25 * content * fake * float(rng.random()))
    spoof = min(1.0, float(rng.beta(2, 8))
                + 0.20 * content * fake * float(rng.random()))
    return {
        "face_count": int(rng.poisson(0.8)),
        "labels": labels,
        "objects": objects,
        "safe_search": {
            "adult": round(float(rng.beta(2, 12)), 4),
            "spoof": round(spoof, 4),
            "medical": round(float(rng.beta(2, 12)), 4),
            "violence": round(float(rng.beta(2, 12)), 4),
            "racy": round(float(rng.beta(2, 12)), 4),
        },
        "web_matches": web_matches,
        "toxicity": round(toxicity, 4),
        "web_entities": entities,
    }


def generate_synthetic(spec: SyntheticSpec) -> tuple[list[dict], list[dict]]:
    """Record and label objects in the ingestion wire format.

    Deterministic per seed: the same spec always yields the same corpus,
    byte for byte once serialized.
    """
    rng = np.random.default_rng(spec.seed)
    n_fake = round(spec.stories * spec.fake_fraction)
    n_groups = spec.groups or max(12, spec.stories // 12)
    n_users = spec.users or max(30, spec.stories // 20)
    groups = _group_pool(n_groups)
    right_groups = [g for g in groups if g.endswith("patriota")]
    users = [f"u{i:05d}" for i in range(n_users)]
    hot_users = users[:10]

    c, s, e = (spec.content_strength, spec.source_strength,
               spec.environment_strength)
    records: list[dict] = []
    labels: list[dict] = []
    for i in range(spec.stories):
        fake = i < n_fake
        story_hash = _story_hash(i)
        n_shares = 1 + int(rng.poisson(2.2 + 1.2 * e * fake))
        if rng.random() < 0.02:  # viral burst, class-independent
            n_shares += int(rng.poisson(40))

        t0 = EPOCH_2018_08_01 + int(rng.uniform(0, 60 * DAY))
        gap_scale = DAY * (1.0 - 0.85 * e * fake) + 600.0
        offsets = [0]
        for _ in range(n_shares - 1):
            offsets.append(offsets[-1] + 1 + int(rng.exponential(gap_scale)))

        if rng.random() < 0.02 + 0.18 * s * fake:
            first_user = hot_users[int(rng.integers(len(hot_users)))]
        else:
            first_user = users[int(rng.integers(len(users)))]
        if right_groups and rng.random() < 0.10 + 0.45 * s * fake:
            first_group = right_groups[int(rng.integers(len(right_groups)))]
        else:
            first_group = groups[int(rng.integers(len(groups)))]

        text = _make_text(rng, fake, c)
        annotations = _make_annotations(rng, fake, c, e)
        for j in range(n_shares):
            record = {
                "message_id": f"m{i:06d}-{j:03d}",
                "timestamp": t0 + offsets[j],
                "group_id": first_group if j == 0
                else groups[int(rng.integers(len(groups)))],
                "user_id": first_user if j == 0
                else users[int(rng.integers(len(users)))],
                "ocr_text": text,
                "phash": story_hash,
            }
            if j == 0:
                record["annotations"] = annotations
            records.append(record)
        if fake:
            labels.append({
                "phash": story_hash,
                "verdict": VERDICT_FAKE,
                "source_url": f"https://checador.example.org.br/fato/{i}",
            })
    return records, labels


def write_synthetic(spec: SyntheticSpec, records_path: str | Path,
                    labels_path: str | Path) -> tuple[int, int]:
    records, labels = generate_synthetic(spec)
    with open(records_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    with open(labels_path, "w", encoding="utf-8") as fh:
        for label in labels:
            fh.write(json.dumps(label, ensure_ascii=False) + "\n")
    return len(records), len(labels)


def stories_from_synthetic(spec: SyntheticSpec) -> list[ImageStory]:
    """In-memory shortcut: records straight to assembled stories."""
    from .corpus import ShareEvent, _merge_annotations

    raw_records, raw_labels = generate_synthetic(spec)
    records = [parse_record(obj) for obj in raw_records]
    fake_hashes = {obj["phash"] for obj in raw_labels}
    groups = group_by_hash({r.message_id: r.phash for r in records})
    by_id = {r.message_id: r for r in records}
    stories = []
    for story_id, member_ids in groups.items():
        members = [by_id[mid] for mid in member_ids]
        events = sorted((ShareEvent(m.timestamp, m.group_id, m.user_id,
                                    m.message_id) for m in members),
                        key=lambda ev: (ev.timestamp, ev.message_id))
        verdict = LabelVerdict(key=story_id,
                               verdict=VERDICT_FAKE if story_id in fake_hashes
                               else "unchecked")
        stories.append(ImageStory(
            story_id=story_id, share_events=events,
            ocr_text=max((m.ocr_text for m in members), key=len, default=""),
            annotations=_merge_annotations(members), verdict=verdict))
    return stories
