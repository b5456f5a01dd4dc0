"""Story feature extraction: 181 slots across content, source, environment.

The packaged manifest (data/feature_manifest.txt) is the schema contract:
one slot per line, in order, tagged with family, set, and kind. Model
files embed the manifest checksum so a model can refuse vectors built
against a different catalog.

Set sizes: image 9, syntax 31, lexical 49, psycholinguistic 38,
semantic 8, subjectivity 4, publisher 5, bias 3, internal 3, external 5,
temporal 26.
"""
from __future__ import annotations

import hashlib
import importlib.resources
import math
import re
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import urlparse

from .corpus import AnnotationBundle, ImageStory
from .lexicon import LexiconConfig

__all__ = [
    "FeatureSchema",
    "FeatureSlot",
    "FeatureVector",
    "CorpusStats",
    "TEMPORAL_WINDOWS",
    "extract_content",
    "extract_source",
    "extract_environment",
    "build_matrix",
]

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# share-count windows, in seconds from the first share
TEMPORAL_WINDOWS = (900, 1800, 2700, 3600, 7200, 14400, 28800, 57600,
                    86400, 172800, 259200, 345600, 432000)

# domain suffixes considered common when sizing foreign/uncommon spread
COMMON_DOMAIN_SUFFIXES = (".com", ".net", ".edu", ".org", ".mil", ".gov", ".br")

EXPECTED_SET_SIZES = {
    "image": 9, "syntax": 31, "lexical": 49, "psycholinguistic": 38,
    "semantic": 8, "subjectivity": 4, "publisher": 5, "bias": 3,
    "internal": 3, "external": 5, "temporal": 26,
}

SET_FAMILY = {
    "image": "content", "syntax": "content", "lexical": "content",
    "psycholinguistic": "content", "semantic": "content",
    "subjectivity": "content", "publisher": "source", "bias": "source",
    "internal": "environment", "external": "environment",
    "temporal": "environment",
}


@dataclass(frozen=True)
class FeatureSlot:
    name: str
    family: str
    set_name: str
    kind: str


@dataclass
class FeatureVector:
    story_id: str
    values: list
    label: int = 0


class FeatureSchema:
    """Ordered slot catalog plus the manifest checksum it was loaded from."""

    def __init__(self, slots: Sequence[FeatureSlot], checksum: str):
        self.slots = list(slots)
        self.checksum = checksum
        self._index = {slot.name: i for i, slot in enumerate(self.slots)}
        if len(self._index) != len(self.slots):
            raise ValueError("duplicate feature names in manifest")
        sizes: dict[str, int] = {}
        for slot in self.slots:
            sizes[slot.set_name] = sizes.get(slot.set_name, 0) + 1
        if sizes != EXPECTED_SET_SIZES:
            raise ValueError(f"manifest set sizes {sizes} do not match "
                             f"{EXPECTED_SET_SIZES}")

    def __len__(self) -> int:
        return len(self.slots)

    def __iter__(self):
        return iter(self.slots)

    @property
    def names(self) -> list[str]:
        return [slot.name for slot in self.slots]

    def index(self, name: str) -> int:
        return self._index[name]

    def numeric_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.slots) if s.kind == NUMERIC]

    def categorical_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.slots) if s.kind == CATEGORICAL]

    def set_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for slot in self.slots:
            counts[slot.set_name] = counts.get(slot.set_name, 0) + 1
        return counts

    @classmethod
    def load(cls, path: str | Path | None = None) -> "FeatureSchema":
        if path is None:
            ref = importlib.resources.files("fakerank") / "data" / "feature_manifest.txt"
            raw = ref.read_bytes()
        else:
            raw = Path(path).read_bytes()
        checksum = hashlib.sha256(raw).hexdigest()
        slots = []
        for line in raw.decode("utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            name, family, set_name, kind = line.split("\t")
            slots.append(FeatureSlot(name, family, set_name, kind))
        return cls(slots, checksum)


# --------------------------------------------------------------------------
# text primitives

WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)
URL_RE = re.compile(r"https?://\S+|www\.\S+", re.IGNORECASE)
MENTION_RE = re.compile(r"(?<!\w)@\w+")
HASHTAG_RE = re.compile(r"(?<!\w)#\w+")
EMAIL_RE = re.compile(r"[\w.+-]+@[\w-]+\.[\w.-]+")
NUMBER_TOKEN_RE = re.compile(r"(?<![\w,.])\d+(?:[.,]\d+)*(?![\w,.])")
EMOJI_RE = re.compile("[\U0001F000-\U0001FAFF☀-➿⬀-⯿️]")
SENTENCE_SPLIT_RE = re.compile(r"[.!?…]+")

PUNCT_CHARS = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~") | set("«»“”‘’…—–¡¿·")
QUOTE_CHARS = set('"«»“”')
APOSTROPHE_CHARS = set("'‘’")
PAREN_CHARS = set("()[]")
DASH_CHARS = set("-–—")
CURRENCY_CHARS = set("$€£¥₿")

_PUNCT_RUN_RE = re.compile(
    "[" + re.escape("".join(sorted(PUNCT_CHARS))) + "]{2,}")


def words_of(text: str) -> list[str]:
    return WORD_RE.findall(text)


def sentences_of(text: str) -> list[str]:
    return [s.strip() for s in SENTENCE_SPLIT_RE.split(text) if s.strip()]


def syllable_count(word: str, vowels: str) -> int:
    """Syllables as maximal vowel runs, at least one per word."""
    runs = 0
    in_run = False
    for ch in word.casefold():
        if ch in vowels:
            if not in_run:
                runs += 1
                in_run = True
        else:
            in_run = False
    return max(1, runs)


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


# --------------------------------------------------------------------------
# content features (139 slots)

def _image_features(ann: AnnotationBundle) -> dict[str, float]:
    safe = ann.safe_search
    return {
        "img_faces": float(ann.face_count),
        "img_has_faces": 1.0 if ann.face_count > 0 else 0.0,
        "img_count_labels": float(len(ann.labels)),
        "img_count_objects": float(len(ann.objects)),
        "safe_adult": safe.get("adult", 0.0),
        "safe_spoof": safe.get("spoof", 0.0),
        "safe_medical": safe.get("medical", 0.0),
        "safe_violence": safe.get("violence", 0.0),
        "safe_racy": safe.get("racy", 0.0),
    }


def _syntax_features(text: str, lex: LexiconConfig) -> dict[str, float]:
    sentences = sentences_of(text)
    words = words_of(text)
    n_sent = len(sentences)
    n_words = len(words)
    syllables = [syllable_count(w, lex.vowels) for w in words]
    n_syll = sum(syllables)
    n_chars_in_words = sum(len(w) for w in words)
    mono = sum(1 for s in syllables if s == 1)
    poly = sum(1 for s in syllables if s >= 3)
    complex_words = poly  # three-plus syllables
    sent_words = [len(words_of(s)) for s in sentences]
    long_sents = sum(1 for n in sent_words if n > 20)
    short_sents = sum(1 for n in sent_words if n < 5)

    wps = _safe_div(n_words, n_sent)
    spw = _safe_div(n_syll, n_words)
    cpw = _safe_div(n_chars_in_words, n_words)
    if n_sent and n_words:
        flesch = 206.835 - 1.015 * wps - 84.6 * spw
        fk = 0.39 * wps + 11.8 * spw - 15.59
        cli = 5.88 * cpw - 29.6 * (n_sent / n_words) - 15.8
        ari = 4.71 * cpw + 0.5 * wps - 21.43
        fog = 0.4 * (wps + 100.0 * complex_words / n_words)
        smog = 1.043 * math.sqrt(poly * 30.0 / n_sent) + 3.1291
        long_words = sum(1 for w in words if len(w) > 6)
        lix = wps + 100.0 * long_words / n_words
        rix = long_words / n_sent
    else:
        flesch = fk = cli = ari = fog = smog = lix = rix = 0.0

    indices = {
        "flesch_reading_ease": flesch,
        "flesch_kincaid_grade": fk,
        "coleman_liau_index": cli,
        "automated_readability_index": ari,
        "gunning_fog": fog,
        "smog_index": smog,
        "lix": lix,
        "rix": rix,
    }
    out = {
        "sentence_count": float(n_sent),
        "words_per_sentence": wps,
        "chars_per_sentence": _safe_div(n_chars_in_words, n_sent),
        "syllables_per_sentence": _safe_div(n_syll, n_sent),
        "sentence_info_syll_per_word": spw,
        "monosyllable_count": float(mono),
        "polysyllable_count": float(poly),
        "complex_word_count": float(complex_words),
        "complex_word_ratio": _safe_div(complex_words, n_words),
        "long_sentence_count": float(long_sents),
        "short_sentence_count": float(short_sents),
        "monosyllables_per_sentence": _safe_div(mono, n_sent),
        "polysyllables_per_sentence": _safe_div(poly, n_sent),
        "complex_words_per_sentence": _safe_div(complex_words, n_sent),
        "long_sentence_ratio": _safe_div(long_sents, n_sent),
    }
    out.update(indices)
    for name, value in indices.items():
        out[f"{name}_per_sentence"] = _safe_div(value, n_sent)
    return out


def _lexical_features(text: str, lex: LexiconConfig) -> dict[str, float]:
    words = words_of(text)
    lowered = [w.casefold() for w in words]
    n_words = len(words)
    lengths = [len(w) for w in words]
    letters = sum(1 for ch in text if ch.isalpha())
    upper_letters = sum(1 for ch in text if ch.isupper())

    pron = {cls: sum(1 for w in lowered if w in members)
            for cls, members in lex.pronouns.items()}
    punct_counts = {
        "punct_period": text.count("."),
        "punct_comma": text.count(","),
        "punct_colon": text.count(":"),
        "punct_semicolon": text.count(";"),
        "punct_question": text.count("?") + text.count("¿"),
        "punct_exclamation": text.count("!") + text.count("¡"),
        "Quote": sum(1 for ch in text if ch in QUOTE_CHARS),
        "punct_apostrophe": sum(1 for ch in text if ch in APOSTROPHE_CHARS),
        "punct_parenthesis": sum(1 for ch in text if ch in PAREN_CHARS),
        "punct_dash": sum(1 for ch in text if ch in DASH_CHARS),
        "punct_ellipsis": text.count("...") + text.count("…"),
    }
    punct_total = sum(1 for ch in text if ch in PUNCT_CHARS)
    currency = sum(1 for ch in text if ch in CURRENCY_CHARS)

    out = {
        "char_count": float(len(text)),
        "word_count": float(n_words),
        "token_count": float(len(text.split())),
        "mean_word_length": _safe_div(sum(lengths), n_words),
        "median_word_length": float(statistics.median(lengths)) if lengths else 0.0,
        "max_word_length": float(max(lengths)) if lengths else 0.0,
        "count_low_word": float(sum(1 for n in lengths if n < 4)),
        "Sixltr": float(sum(1 for n in lengths if n >= 6)),
        "lowercase_word_count": float(sum(1 for w in words if w.islower())),
        "uppercase_word_count": float(
            sum(1 for w in words if len(w) >= 2 and w.isupper())),
        "capitalized_word_count": float(
            sum(1 for w in words
                if len(w) >= 2 and w[0].isupper() and w[1:].islower())),
        "uppercase_char_ratio": _safe_div(upper_letters, letters),
        "digit_count": float(sum(1 for ch in text if ch.isdigit())),
        "number": float(len(NUMBER_TOKEN_RE.findall(text))),
        "unique_word_ratio": _safe_div(len(set(lowered)), n_words),
        "Dic": _safe_div(sum(1 for w in lowered if w in lex.dictionary), n_words),
        "stopword_count": float(sum(1 for w in lowered if w in lex.stopwords)),
        "stopword_ratio": _safe_div(
            sum(1 for w in lowered if w in lex.stopwords), n_words),
        "pron_first_singular": float(pron.get("first_singular", 0)),
        "pron_first_plural": float(pron.get("first_plural", 0)),
        "pron_second": float(pron.get("second", 0)),
        "pron_third": float(pron.get("third", 0)),
        "pron_demonstrative": float(pron.get("demonstrative", 0)),
        "pron_total": float(sum(pron.values())),
        "verb_count": float(sum(1 for w in lowered if w in lex.verbs)),
        "modal_count": float(sum(1 for w in lowered if w in lex.modals)),
        "adjective_count": float(sum(1 for w in lowered if w in lex.adjectives)),
        "adverb_count": float(sum(1 for w in lowered if w in lex.adverbs)),
        "hashtag_count": float(len(HASHTAG_RE.findall(text))),
        "mention_count": float(len(MENTION_RE.findall(text))),
        "url_count": float(len(URL_RE.findall(text))),
        "email_count": float(len(EMAIL_RE.findall(text))),
        "emoji_count": float(len(EMOJI_RE.findall(text))),
        "punct_total": float(punct_total),
        "punct_ratio": _safe_div(punct_total, len(text)),
        "consecutive_punct_runs": float(len(_PUNCT_RUN_RE.findall(text))),
        "currency_count": float(currency),
        "percent_count": float(text.count("%")),
    }
    out.update({k: float(v) for k, v in punct_counts.items()})
    return out


def _psycholinguistic_features(text: str, lex: LexiconConfig) -> dict[str, float]:
    lowered = [w.casefold() for w in words_of(text)]
    return {
        category: float(sum(1 for w in lowered if w in members))
        for category, members in lex.psycholinguistic.items()
    }


def _semantic_features(text: str, ann: AnnotationBundle) -> dict[str, float | str]:
    ocr_tokens = {w.casefold() for w in words_of(text)}
    entity_text = " ".join(entity for entity, _ in ann.web_entities)
    entity_tokens = {w.casefold() for w in words_of(entity_text)}
    label_tokens = {w.casefold()
                    for tag, _ in ann.labels for w in words_of(tag)}
    if ann.labels:
        top_tag = min(ann.labels, key=lambda pair: (-pair[1], pair[0]))[0]
        dominant = top_tag.casefold() or "unknown"
        best_guess_tokens = len(words_of(top_tag))
    else:
        dominant = "unknown"
        best_guess_tokens = 0
    mismatch = 1.0 if (ocr_tokens and label_tokens
                       and not ocr_tokens & label_tokens) else 0.0
    return {
        "toxicity": float(ann.toxicity or 0.0),
        "web_entity_count": float(len(ann.web_entities)),
        "top_web_entity_score": max((s for _, s in ann.web_entities), default=0.0),
        "best_guess_label_tokens": float(best_guess_tokens),
        "Bridge": float(len(ocr_tokens & entity_tokens)),
        "dominant_vision_label": dominant,
        "entity_density": _safe_div(len(ann.web_entities), max(1, len(ocr_tokens))),
        "context_mismatch": mismatch,
    }


def _subjectivity_features(text: str, lex: LexiconConfig) -> dict[str, float]:
    lowered = [w.casefold() for w in words_of(text)]
    pos = sum(1 for w in lowered if w in lex.positive)
    neg = sum(1 for w in lowered if w in lex.negative)
    subj = sum(1 for w in lowered if w in lex.subjectivity)
    return {
        "subjectivity_score": _safe_div(subj + pos + neg, len(lowered)),
        "sentiment_polarity": _safe_div(pos - neg, pos + neg),
        "positive_word_count": float(pos),
        "negative_word_count": float(neg),
    }


def extract_content(story: ImageStory,
                    lexicons: LexiconConfig) -> dict[str, float | str]:
    """All 139 content slots; total on any input (empty text/annotations
    produce the documented zero/default profile)."""
    text = story.ocr_text or ""
    ann = story.annotations or AnnotationBundle()
    out: dict[str, float | str] = {}
    out.update(_image_features(ann))
    out.update(_syntax_features(text, lexicons))
    out.update(_lexical_features(text, lexicons))
    out.update(_psycholinguistic_features(text, lexicons))
    out.update(_semantic_features(text, ann))
    out.update(_subjectivity_features(text, lexicons))
    return out


# --------------------------------------------------------------------------
# source features (8 slots)

@dataclass
class CorpusStats:
    """Corpus-wide publisher statistics, one pass over all share events."""

    user_messages: dict[str, int] = field(default_factory=dict)
    group_messages: dict[str, int] = field(default_factory=dict)
    user_groups: dict[str, set[str]] = field(default_factory=dict)

    @classmethod
    def from_stories(cls, stories: Iterable[ImageStory]) -> "CorpusStats":
        stats = cls()
        for story in stories:
            for event in story.share_events:
                stats.user_messages[event.user_id] = \
                    stats.user_messages.get(event.user_id, 0) + 1
                stats.group_messages[event.group_id] = \
                    stats.group_messages.get(event.group_id, 0) + 1
                stats.user_groups.setdefault(event.user_id, set()).add(event.group_id)
        return stats


def extract_source(story: ImageStory, corpus: CorpusStats,
                   lexicons: LexiconConfig) -> dict[str, float | str]:
    first = story.first_share
    bias = lexicons.resolve_bias(first.group_id)
    return {
        "first_user_id": first.user_id,
        "first_group_id": first.group_id,
        "first_user_message_count": float(corpus.user_messages.get(first.user_id, 0)),
        "first_group_message_count": float(corpus.group_messages.get(first.group_id, 0)),
        "first_user_distinct_groups": float(len(corpus.user_groups.get(first.user_id, ()))),
        "political_bias_left": 1.0 if bias == "left" else 0.0,
        "political_bias_right": 1.0 if bias == "right" else 0.0,
        "political_bias_mainstream": 1.0 if bias == "mainstream" else 0.0,
    }


# --------------------------------------------------------------------------
# environment features (34 slots)

def _domain_of(url: str) -> str:
    try:
        host = urlparse(url).hostname
    except ValueError:
        host = None
    return (host or "").casefold()


def _is_uncommon(host: str) -> bool:
    return bool(host) and not any(host.endswith(suffix)
                                  for suffix in COMMON_DOMAIN_SUFFIXES)


def extract_environment(story: ImageStory,
                        annotations: AnnotationBundle | None = None
                        ) -> dict[str, float]:
    ann = annotations if annotations is not None else (story.annotations
                                                       or AnnotationBundle())
    events = story.share_events
    out = {
        "count_shares": float(len(events)),
        "count_users": float(len({e.user_id for e in events})),
        "count_groups": float(len({e.group_id for e in events})),
    }

    urls = ann.web_matches
    accessible = ann.web_matches_accessible or [True] * len(urls)
    hosts = [_domain_of(u) for u in urls]
    out.update({
        "count_web_dissemination_urls": float(len(urls)),
        "web_dissem_accessible_links": float(sum(1 for ok in accessible if ok)),
        "web_dissem_foreign_uncommon_domains": float(
            sum(1 for h in hosts if _is_uncommon(h))),
        "web_dissem_https_links": float(
            sum(1 for u in urls if u.casefold().startswith("https:"))),
        "web_dissem_distinct_domains": float(len({h for h in hosts if h})),
    })

    t0 = events[0].timestamp
    offsets = [e.timestamp - t0 for e in events]
    for window in TEMPORAL_WINDOWS:
        count = sum(1 for off in offsets if off <= window)
        out[f"acc_{window}"] = float(count)
        out[f"rate_{window}"] = count / window
    return out


# --------------------------------------------------------------------------
# matrix assembly

def extract_vector(story: ImageStory, schema: FeatureSchema,
                   stats: CorpusStats, lexicons: LexiconConfig) -> FeatureVector:
    values_by_name: dict[str, float | str] = {}
    values_by_name.update(extract_content(story, lexicons))
    values_by_name.update(extract_source(story, stats, lexicons))
    values_by_name.update(extract_environment(story))

    values = []
    for slot in schema:
        value = values_by_name[slot.name]
        if slot.kind == NUMERIC:
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"non-finite value for slot {slot.name}")
        else:
            value = str(value)
        values.append(value)
    return FeatureVector(story_id=story.story_id, values=values,
                         label=story.label)


def save_matrix(schema: FeatureSchema, vectors: Sequence[FeatureVector],
                path: str | Path) -> None:
    """TSV: story_id, label, then one column per manifest slot."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("story_id\tlabel\t" + "\t".join(schema.names) + "\n")
        for vec in vectors:
            cells = []
            for slot, value in zip(schema.slots, vec.values):
                if slot.kind == NUMERIC:
                    cells.append(repr(float(value)))
                else:
                    cells.append(str(value).replace("\t", " ").replace("\n", " "))
            fh.write(f"{vec.story_id}\t{vec.label}\t" + "\t".join(cells) + "\n")


def load_matrix(path: str | Path,
                schema: FeatureSchema | None = None
                ) -> tuple[FeatureSchema, list[FeatureVector]]:
    schema = schema or FeatureSchema.load()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header[2:] != schema.names:
            raise ValueError("feature matrix columns do not match the manifest")
        vectors = []
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            story_id, label = parts[0], int(parts[1])
            values = []
            for slot, cell in zip(schema.slots, parts[2:]):
                values.append(float(cell) if slot.kind == NUMERIC else cell)
            vectors.append(FeatureVector(story_id, values, label))
    return schema, vectors


def build_matrix(stories: Iterable[ImageStory],
                 lexicons: LexiconConfig | None = None,
                 schema: FeatureSchema | None = None,
                 ) -> tuple[FeatureSchema, list[FeatureVector]]:
    """One vector per story under a constant schema.

    Publisher statistics are computed in a single corpus pass before the
    per-story extraction; categorical slots stay unencoded here.
    """
    lexicons = lexicons or LexiconConfig.default()
    schema = schema or FeatureSchema.load()
    manifest_psych = {s.name for s in schema if s.set_name == "psycholinguistic"}
    if set(lexicons.psycholinguistic) != manifest_psych:
        raise ValueError("lexicon psycholinguistic categories do not match "
                         "the feature manifest")
    story_list = list(stories)
    stats = CorpusStats.from_stories(story_list)
    vectors = [extract_vector(story, schema, stats, lexicons)
               for story in story_list]
    return schema, vectors
