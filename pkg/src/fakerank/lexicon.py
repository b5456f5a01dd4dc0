"""Lexicon and bias configuration backing the text features.

A single TOML file carries every word list: the 38 psycholinguistic
categories, pronoun classes, stopwords, sentiment polarity lists,
subjectivity cues, part-of-speech lists, syllable rules, and the group
bias keyword map. The packaged default targets Brazilian Portuguese with
a sprinkling of English; any open lexicon with the same keys can be
swapped in via --config.
"""
from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

__all__ = ["LexiconConfig", "PSYCH_CATEGORY_COUNT", "BIAS_LABELS"]

PSYCH_CATEGORY_COUNT = 38
BIAS_LABELS = ("left", "right", "mainstream")

PRONOUN_CLASSES = ("first_singular", "first_plural", "second", "third",
                   "demonstrative")


@dataclass
class LexiconConfig:
    psycholinguistic: dict[str, frozenset[str]]
    pronouns: dict[str, frozenset[str]]
    stopwords: frozenset[str]
    verbs: frozenset[str]
    modals: frozenset[str]
    adjectives: frozenset[str]
    adverbs: frozenset[str]
    positive: frozenset[str]
    negative: frozenset[str]
    subjectivity: frozenset[str]
    vowels: str
    bias_keywords: dict[str, tuple[str, ...]]  # bias label -> substrings
    bias_overrides: dict[str, str] = field(default_factory=dict)  # group_id -> bias
    _dictionary: frozenset[str] = field(default=frozenset(), repr=False)

    def __post_init__(self):
        if len(self.psycholinguistic) != PSYCH_CATEGORY_COUNT:
            raise ValueError(
                f"expected {PSYCH_CATEGORY_COUNT} psycholinguistic categories, "
                f"got {len(self.psycholinguistic)}")
        for label in self.bias_keywords:
            if label not in BIAS_LABELS:
                raise ValueError(f"unknown bias label {label!r}")
        for group, label in self.bias_overrides.items():
            if label not in BIAS_LABELS:
                raise ValueError(f"unknown bias override {label!r} for {group!r}")
        words: set[str] = set()
        for bucket in (self.stopwords, self.verbs, self.modals, self.adjectives,
                       self.adverbs, self.positive, self.negative,
                       self.subjectivity):
            words |= bucket
        for cls in self.pronouns.values():
            words |= cls
        for cat in self.psycholinguistic.values():
            words |= cat
        object.__setattr__(self, "_dictionary", frozenset(words))

    @property
    def dictionary(self) -> frozenset[str]:
        """Union of every word list; the denominator set behind Dic."""
        return self._dictionary

    @property
    def psych_categories(self) -> list[str]:
        return list(self.psycholinguistic)

    def resolve_bias(self, group_id: str) -> str:
        """Political bias of a group: override, keyword substring, or mainstream."""
        override = self.bias_overrides.get(group_id)
        if override:
            return override
        haystack = group_id.casefold()
        for label in BIAS_LABELS:
            for keyword in self.bias_keywords.get(label, ()):
                if keyword in haystack:
                    return label
        return "mainstream"

    @classmethod
    def from_toml(cls, path: str | Path) -> "LexiconConfig":
        with open(path, "rb") as fh:
            return cls.from_mapping(tomllib.load(fh))

    @classmethod
    def from_mapping(cls, data: dict) -> "LexiconConfig":
        def word_set(seq) -> frozenset[str]:
            return frozenset(str(w).casefold() for w in seq)

        words = data.get("words", {})
        pronouns = {
            pcls: word_set(data.get("pronouns", {}).get(pcls, []))
            for pcls in PRONOUN_CLASSES
        }
        psych = {
            name: word_set(entries)
            for name, entries in data.get("psycholinguistic", {}).items()
        }
        bias = data.get("bias", {})
        keywords = {
            label: tuple(sorted(str(k).casefold() for k in entries))
            for label, entries in bias.get("keywords", {}).items()
        }
        overrides = {str(g): str(b) for g, b in bias.get("overrides", {}).items()}
        return cls(
            psycholinguistic=psych,
            pronouns=pronouns,
            stopwords=word_set(words.get("stopwords", [])),
            verbs=word_set(words.get("verbs", [])),
            modals=word_set(words.get("modals", [])),
            adjectives=word_set(words.get("adjectives", [])),
            adverbs=word_set(words.get("adverbs", [])),
            positive=word_set(words.get("positive", [])),
            negative=word_set(words.get("negative", [])),
            subjectivity=word_set(words.get("subjectivity", [])),
            vowels=data.get("syllables", {}).get("vowels", "aeiouy"),
            bias_keywords=keywords,
            bias_overrides=overrides,
        )

    @classmethod
    def default(cls) -> "LexiconConfig":
        ref = importlib.resources.files("fakerank") / "data" / "lexicon_default.toml"
        return cls.from_mapping(tomllib.loads(ref.read_text(encoding="utf-8")))
