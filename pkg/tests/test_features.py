import importlib.resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fakerank.corpus import AnnotationBundle, ImageStory, LabelVerdict, ShareEvent
from fakerank.features import (CorpusStats, FeatureSchema, TEMPORAL_WINDOWS,
                               build_matrix, extract_content,
                               extract_environment, extract_source,
                               extract_vector, load_matrix, save_matrix)

EXPECTED_CENSUS = {"image": 9, "syntax": 31, "lexical": 49,
                   "psycholinguistic": 38, "semantic": 8, "subjectivity": 4,
                   "publisher": 5, "bias": 3, "internal": 3, "external": 5,
                   "temporal": 26}


def story_of(events=None, text="", ann=None, story_id="00000000000000aa",
             fake=False):
    events = events or [ShareEvent(1533081600, "g1", "u1", "m1")]
    return ImageStory(story_id=story_id, share_events=events, ocr_text=text,
                      annotations=ann or AnnotationBundle(),
                      verdict=LabelVerdict(key=story_id,
                                           verdict="fake" if fake else "unchecked"))


def vector_for(story, schema, lexicons, stats=None):
    stats = stats or CorpusStats.from_stories([story])
    return extract_vector(story, schema, stats, lexicons)


def test_census_matches_table(schema):
    assert len(schema) == 181
    assert schema.set_counts() == EXPECTED_CENSUS


def test_categoricals_only_in_semantic_and_publisher(schema):
    cat_sets = {schema.slots[i].set_name for i in schema.categorical_indices()}
    assert cat_sets == {"semantic", "publisher"}
    assert len(schema.categorical_indices()) == 3


def test_packaged_manifest_is_the_loaded_schema(schema):
    ref = importlib.resources.files("fakerank") / "data" / "feature_manifest.txt"
    lines = [ln for ln in ref.read_text(encoding="utf-8").splitlines()
             if ln and not ln.startswith("#")]
    assert len(lines) == 181
    assert [ln.split("\t")[0] for ln in lines] == schema.names


def test_content_hand_counts(lexicons):
    content = extract_content(story_of(text="URGENTE! Veja isso agora!!!"),
                              lexicons)
    assert content["punct_exclamation"] == 4
    assert content["word_count"] == 4
    assert content["uppercase_word_count"] == 1
    assert content["capitalized_word_count"] == 1  # "Veja"
    assert content["sentence_count"] == 2
    assert content["consecutive_punct_runs"] == 1  # the "!!!" run


def test_content_empty_profile_is_zero_and_deterministic(lexicons, schema):
    a = extract_content(story_of(text=""), lexicons)
    b = extract_content(story_of(text="", story_id="00000000000000bb"), lexicons)
    assert a == b
    for name, value in a.items():
        if name == "dominant_vision_label":
            assert value == "unknown"
        else:
            assert value == 0.0, name


def test_image_annotation_passthrough(lexicons):
    ann = AnnotationBundle(face_count=2,
                           labels=[(f"tag{i}", 0.5) for i in range(5)],
                           objects=[(f"obj{i}", 0.5) for i in range(3)])
    content = extract_content(story_of(ann=ann), lexicons)
    assert content["img_faces"] == 2
    assert content["img_has_faces"] == 1
    assert content["img_count_labels"] == 5
    assert content["img_count_objects"] == 3


def test_semantic_features(lexicons):
    ann = AnnotationBundle(
        labels=[("street protest", 0.9), ("crowd", 0.7)],
        web_entities=[("protesto na cidade", 0.8), ("governo", 0.5)],
        toxicity=0.4)
    content = extract_content(story_of(text="foto do protesto hoje", ann=ann),
                              lexicons)
    assert content["toxicity"] == 0.4
    assert content["web_entity_count"] == 2
    assert content["top_web_entity_score"] == 0.8
    assert content["dominant_vision_label"] == "street protest"
    assert content["best_guess_label_tokens"] == 2
    assert content["Bridge"] == 1.0  # shared token: "protesto"
    assert content["context_mismatch"] == 1.0  # no token shared with labels


def test_environment_hand_counts():
    events = [ShareEvent(1000, "g1", "u1", "m1"),
              ShareEvent(1100, "g1", "u1", "m2"),
              ShareEvent(2000, "g1", "u1", "m3")]
    env = extract_environment(story_of(events=events))
    assert env["count_shares"] == 3
    assert env["count_users"] == 1
    assert env["count_groups"] == 1
    assert env["acc_900"] == 2
    assert env["rate_900"] == 2 / 900
    assert env["acc_1800"] == 3


def test_environment_single_share():
    env = extract_environment(story_of())
    for window in TEMPORAL_WINDOWS:
        assert env[f"acc_{window}"] == 1
        assert env[f"rate_{window}"] == 1 / window


def test_environment_web_matches():
    ann = AnnotationBundle(web_matches=["https://a.com/x", "http://b.xyz/y"],
                           web_matches_accessible=[True, True])
    env = extract_environment(story_of(ann=ann))
    assert env["count_web_dissemination_urls"] == 2
    assert env["web_dissem_https_links"] == 1
    assert env["web_dissem_foreign_uncommon_domains"] == 1  # ".xyz"
    assert env["web_dissem_distinct_domains"] == 2


def test_environment_accessible_flags():
    ann = AnnotationBundle(web_matches=["https://a.com/1", "https://a.com/2",
                                        "https://b.org/3"],
                           web_matches_accessible=[True, False, True])
    env = extract_environment(story_of(ann=ann))
    assert env["web_dissem_accessible_links"] == 2
    assert env["web_dissem_distinct_domains"] == 2


@given(st.lists(st.integers(0, 500_000), min_size=1, max_size=40))
@settings(max_examples=150, deadline=None)
def test_temporal_nesting_and_rate_identity(offsets):
    offsets = sorted(offsets)
    t0 = 1533081600
    events = [ShareEvent(t0 + off, f"g{i%3}", f"u{i%5}", f"m{i}")
              for i, off in enumerate([0] + offsets)]
    env = extract_environment(story_of(events=events))
    previous = 0
    for window in TEMPORAL_WINDOWS:
        count = env[f"acc_{window}"]
        assert count >= previous  # non-decreasing in window size
        # bit-exact division identity (the multiplicative form is off by
        # one ulp whenever count/window is not representable)
        assert env[f"rate_{window}"] == count / window
        previous = count


def test_adding_share_never_decreases_propagation(lexicons, schema):
    base_events = [ShareEvent(1533081600, "g1", "u1", "m1"),
                   ShareEvent(1533082600, "g2", "u2", "m2")]
    more = base_events + [ShareEvent(1533090000, "g3", "u3", "m3")]
    env_a = extract_environment(story_of(events=base_events))
    env_b = extract_environment(story_of(events=more))
    for name in ("count_shares", "count_users", "count_groups"):
        assert env_b[name] >= env_a[name]
    for window in TEMPORAL_WINDOWS:
        assert env_b[f"acc_{window}"] >= env_a[f"acc_{window}"]


def test_source_bias_keyword_right(lexicons, schema):
    events = [ShareEvent(1533081600, "# BOLSONARO PRESIDENTE", "u9", "m1")]
    story = story_of(events=events)
    source = extract_source(story, CorpusStats.from_stories([story]), lexicons)
    assert source["political_bias_right"] == 1.0
    assert source["political_bias_left"] == 0.0
    assert source["political_bias_mainstream"] == 0.0
    assert source["first_user_id"] == "u9"


def test_source_unresolvable_bias_defaults_mainstream(lexicons):
    story = story_of(events=[ShareEvent(1533081600, "g-opaque-42", "u1", "m1")])
    source = extract_source(story, CorpusStats.from_stories([story]), lexicons)
    assert source["political_bias_mainstream"] == 1.0


def test_source_single_message_corpus(lexicons):
    story = story_of()
    source = extract_source(story, CorpusStats.from_stories([story]), lexicons)
    assert source["first_user_message_count"] == 1
    assert source["first_group_message_count"] == 1
    assert source["first_user_distinct_groups"] == 1


def test_source_corpus_statistics(lexicons):
    s1 = story_of(events=[ShareEvent(1, "g1", "u1", "m1"),
                          ShareEvent(2, "g2", "u1", "m2")],
                  story_id="00000000000000aa")
    s2 = story_of(events=[ShareEvent(3, "g1", "u1", "m3"),
                          ShareEvent(4, "g1", "u2", "m4")],
                  story_id="00000000000000bb")
    stats = CorpusStats.from_stories([s1, s2])
    source = extract_source(s1, stats, lexicons)
    assert source["first_user_message_count"] == 3  # u1 posted m1, m2, m3
    assert source["first_user_distinct_groups"] == 2


def test_build_matrix_shapes(lexicons, schema):
    stories = [story_of(story_id=f"{i:016x}", text="um texto qualquer")
               for i in range(3)]
    out_schema, vectors = build_matrix(stories, lexicons, schema)
    assert len(vectors) == 3
    assert all(len(v.values) == 181 for v in vectors)
    assert out_schema is schema


def test_label_free_extraction(lexicons, schema):
    story = story_of(text="URGENTE compartilhe", fake=False)
    flipped = story_of(text="URGENTE compartilhe", fake=True)
    a = vector_for(story, schema, lexicons)
    b = vector_for(flipped, schema, lexicons)
    assert a.values == b.values  # no slot reads the verdict
    assert (a.label, b.label) == (0, 1)


def test_identical_stories_same_content_slots(lexicons, schema):
    ann = AnnotationBundle(face_count=1, toxicity=0.2)
    a = extract_content(story_of(text="mesmo texto", ann=ann), lexicons)
    b = extract_content(story_of(text="mesmo texto", ann=ann,
                                 story_id="00000000000000bb"), lexicons)
    assert a == b


def test_matrix_tsv_round_trip(tmp_path, lexicons, schema):
    stories = [story_of(story_id=f"{i:016x}",
                        text=f"texto número {i} com acentuação!")
               for i in range(4)]
    _, vectors = build_matrix(stories, lexicons, schema)
    path = tmp_path / "m.tsv"
    save_matrix(schema, vectors, path)
    _, loaded = load_matrix(path, schema)
    assert [v.story_id for v in loaded] == [v.story_id for v in vectors]
    for a, b in zip(vectors, loaded):
        assert a.label == b.label
        assert a.values == b.values  # repr round-trips floats exactly
