import json
from pathlib import Path

import pytest

from fakerank.corpus import CorpusStore, attach_labels, ingest_messages, parse_verdict_lines
from fakerank.features import FeatureSchema
from fakerank.lexicon import LexiconConfig

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def schema() -> FeatureSchema:
    return FeatureSchema.load()


@pytest.fixture(scope="session")
def lexicons() -> LexiconConfig:
    return LexiconConfig.default()


@pytest.fixture()
def store(tmp_path) -> CorpusStore:
    return CorpusStore(tmp_path / "store")


def record_line(message_id="m1", timestamp=1533081600, group_id="g1",
                user_id="u1", phash="00000000000000aa", **extra) -> str:
    obj = {"message_id": message_id, "timestamp": timestamp,
           "group_id": group_id, "user_id": user_id}
    if phash is not None:
        obj["phash"] = phash
    obj.update(extra)
    return json.dumps(obj, ensure_ascii=False)


def ingest_lines(store, lines):
    return ingest_messages(lines, store)


def demo_records():
    """Hand-built demo corpus: 30 stories over two dates.

    Stories 0-4 are fake with many web matches, urgent text, and few
    shares; a handful of unchecked stories are viral, so popularity and
    fakeness rankings disagree by construction.
    """
    day1 = 1536969600   # 2018-09-15 UTC
    day2 = 1537056000   # 2018-09-16 UTC
    records = []
    labels = []
    for i in range(30):
        fake = i < 5
        story_hash = f"{i + 1:016x}"
        base = (day1 if i < 20 else day2) + 3600 + i * 60
        n_shares = 2 if fake else (12 + i if i in (6, 7, 8) else 1 + i % 4)
        text = ("URGENTE! Compartilhe isso agora mesmo!!!" if fake
                else "Reunião do grupo na cidade hoje.")
        ann = {
            "face_count": 1,
            "labels": [["crowd", 0.9], ["street", 0.7]],
            "web_matches": [
                {"url": f"https://site{j}.xyz/a", "accessible": True}
                for j in range(8 if fake else i % 2)
            ],
            "toxicity": 0.72 if fake else 0.05,
            "safe_search": {"adult": 0.02, "spoof": 0.6 if fake else 0.05,
                            "medical": 0.01, "violence": 0.03, "racy": 0.02},
        }
        for j in range(n_shares):
            records.append({
                "message_id": f"d{i:03d}-{j:02d}",
                "timestamp": base + j * 120,
                "group_id": f"grupo-{(i + j) % 6:02d}-noticias",
                "user_id": f"u{(i * 3 + j) % 15:03d}",
                "ocr_text": text,
                "phash": story_hash,
                **({"annotations": ann} if j == 0 else {}),
            })
        if fake:
            labels.append({"phash": story_hash, "verdict": "fake",
                           "source_url": "https://checador.example/fato"})
    return records, labels


@pytest.fixture(scope="session")
def demo_store(tmp_path_factory) -> CorpusStore:
    root = tmp_path_factory.mktemp("demo") / "store"
    store = CorpusStore(root)
    records, labels = demo_records()
    ingest_messages([json.dumps(r, ensure_ascii=False) for r in records], store)
    attach_labels(store, parse_verdict_lines(
        [json.dumps(lb) for lb in labels]))
    return store
