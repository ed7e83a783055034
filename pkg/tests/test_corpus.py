import copy
import json

import pytest
from hypothesis import given, strategies as st

from facerank.corpus import (
    AnnotatedPair,
    PairCategory,
    PairJudgment,
    PairScore,
    aggregate_scores,
    categorize_pair,
    convert_judgment,
    corpus_from_dict,
    corpus_to_dict,
    load_corpus,
    save_corpus,
)
from facerank.errors import (
    DanglingReference,
    EmptyJudgmentSet,
    InvariantViolation,
    ParseError,
)
from conftest import two_image_manifest


def J(winner, magnitude, worker="w0"):
    return PairJudgment(worker_id=worker, winner=winner, magnitude=magnitude)


CONVERSION_TABLE = {
    ("A", "significant"): (1.00, 0.00),
    ("A", "slight"): (0.75, 0.25),
    ("A", "same"): (0.50, 0.50),
    ("B", "significant"): (0.00, 1.00),
    ("B", "slight"): (0.25, 0.75),
    ("B", "same"): (0.50, 0.50),
}


def test_conversion_table_exact():
    for (winner, magnitude), (s_a, s_b) in CONVERSION_TABLE.items():
        score = convert_judgment(J(winner, magnitude))
        assert (score.s_a, score.s_b) == (s_a, s_b)


@given(
    winner=st.sampled_from(["A", "B"]),
    magnitude=st.sampled_from(["significant", "slight", "same"]),
)
def test_conversion_scores_complementary(winner, magnitude):
    score = convert_judgment(J(winner, magnitude))
    assert score.s_a + score.s_b == 1.0


def pair_with(judgments):
    return AnnotatedPair(
        pair_id="p", side_a=("a", "f0"), side_b=("a", "f1"), judgments=tuple(judgments)
    )


def test_aggregate_unanimous():
    pair = pair_with([J("A", "significant", f"w{k}") for k in range(10)])
    assert aggregate_scores(pair) == PairScore(1.0, 0.0)


def test_aggregate_mixed_mean():
    judgments = [J("A", "significant", f"w{k}") for k in range(5)]
    judgments += [J("A", "same", f"w{k+5}") for k in range(5)]
    assert aggregate_scores(pair_with(judgments)) == PairScore(0.75, 0.25)


def test_aggregate_exclusion_empties():
    pair = pair_with([J("A", "slight", "w0")])
    with pytest.raises(EmptyJudgmentSet):
        aggregate_scores(pair, exclude_worker="w0")


def test_aggregate_exclusion_drops_one():
    pair = pair_with([J("A", "significant", "w0"), J("B", "significant", "w1")])
    assert aggregate_scores(pair, exclude_worker="w1") == PairScore(1.0, 0.0)
    assert aggregate_scores(pair) == PairScore(0.5, 0.5)


@given(
    st.lists(
        st.tuples(
            st.sampled_from(["A", "B"]),
            st.sampled_from(["significant", "slight", "same"]),
        ),
        min_size=1,
        max_size=12,
    ),
    st.randoms(),
)
def test_aggregate_permutation_invariant(rows, rnd):
    judgments = [J(w, m, f"w{k}") for k, (w, m) in enumerate(rows)]
    shuffled = judgments[:]
    rnd.shuffle(shuffled)
    assert aggregate_scores(pair_with(judgments)) == aggregate_scores(pair_with(shuffled))


@given(
    st.lists(
        st.tuples(
            st.sampled_from(["A", "B"]),
            st.sampled_from(["significant", "slight", "same"]),
        ),
        min_size=1,
        max_size=12,
    )
)
def test_aggregate_equals_direct_mean(rows):
    judgments = [J(w, m, f"w{k}") for k, (w, m) in enumerate(rows)]
    agg = aggregate_scores(pair_with(judgments))
    direct = sum(convert_judgment(j).s_a for j in judgments) / len(judgments)
    assert agg.s_a == direct
    assert agg.s_a + agg.s_b == 1.0


def test_same_magnitude_winner_is_ignored():
    a = pair_with([J("A", "same", "w0")])
    b = pair_with([J("B", "same", "w0")])
    assert aggregate_scores(a) == aggregate_scores(b) == PairScore(0.5, 0.5)


def test_categorize_examples():
    assert categorize_pair(PairScore(1.0, 0.0)) is PairCategory.SIGNIFICANTLY_MORE
    assert categorize_pair(PairScore(0.75, 0.25)) is PairCategory.SLIGHTLY_MORE
    assert categorize_pair(PairScore(0.5, 0.5)) is PairCategory.ALMOST_SAME
    # boundary behavior: thresholds belong to the lower band
    assert categorize_pair(PairScore(0.875, 0.125)) is PairCategory.SLIGHTLY_MORE
    assert categorize_pair(PairScore(0.625, 0.375)) is PairCategory.ALMOST_SAME


@given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_categorize_symmetric(s_a):
    assert categorize_pair(PairScore(s_a, 1.0 - s_a)) is categorize_pair(
        PairScore(1.0 - s_a, s_a)
    )


def test_load_roundtrip(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(two_image_manifest()))
    corpus = load_corpus(str(path))
    assert len(corpus.images) == 2
    assert corpus.image("b").faces[2].face_id == "f2"

    out = tmp_path / "copy.json"
    save_corpus(corpus, str(out))
    again = load_corpus(str(out))
    assert again.images == corpus.images
    assert again.pairs == corpus.pairs
    assert corpus_to_dict(again) == corpus_to_dict(corpus)


def test_category_distribution(micro_corpus):
    dist = micro_corpus.category_distribution()
    assert sum(dist.values()) == 2
    assert dist[PairCategory.SLIGHTLY_MORE] == 1  # p0 gap exactly 0.75
    assert dist[PairCategory.ALMOST_SAME] == 1  # p1 gap 0.25


def test_load_rejects_dangling_face():
    doc = two_image_manifest()
    doc["pairs"][0]["side_b"] = ["a", "missing"]
    with pytest.raises(DanglingReference, match="missing"):
        corpus_from_dict(doc)


def test_load_rejects_dangling_image():
    doc = two_image_manifest()
    doc["pairs"][0]["side_a"] = ["zzz", "f0"]
    with pytest.raises(DanglingReference, match="zzz"):
        corpus_from_dict(doc)


def test_load_rejects_zero_width_box():
    doc = two_image_manifest()
    doc["images"][0]["faces"][0]["box"] = [40, 40, 0, 20]
    with pytest.raises(InvariantViolation, match="f0"):
        corpus_from_dict(doc)


def test_load_rejects_box_outside_image():
    doc = two_image_manifest()
    doc["images"][0]["faces"][0]["box"] = [150, 150, 10, 10]
    with pytest.raises(InvariantViolation, match="intersect"):
        corpus_from_dict(doc)


def test_load_rejects_duplicate_ids():
    doc = two_image_manifest()
    doc["images"][1]["image_id"] = "a"
    with pytest.raises(InvariantViolation, match="duplicate image_id"):
        corpus_from_dict(doc)
    doc = two_image_manifest()
    doc["images"][0]["faces"][1]["face_id"] = "f0"
    with pytest.raises(InvariantViolation, match="duplicate face_id"):
        corpus_from_dict(doc)


def test_load_rejects_bad_magnitude():
    doc = two_image_manifest()
    doc["pairs"][0]["judgments"][0]["magnitude"] = "huge"
    with pytest.raises(InvariantViolation, match="huge"):
        corpus_from_dict(doc)


def test_load_rejects_pose_argmax_mismatch():
    doc = two_image_manifest()
    doc["images"][0]["faces"][1]["pose"]["component_id"] = 3
    with pytest.raises(InvariantViolation, match="argmax"):
        corpus_from_dict(doc)


def test_load_rejects_empty_faces():
    doc = two_image_manifest()
    doc["images"][0]["faces"] = []
    with pytest.raises((InvariantViolation, ParseError)):
        corpus_from_dict(doc)


def test_load_rejects_self_pair():
    doc = two_image_manifest()
    doc["pairs"][0]["side_b"] = copy.deepcopy(doc["pairs"][0]["side_a"])
    with pytest.raises(InvariantViolation, match="side_a equals side_b"):
        corpus_from_dict(doc)


def test_load_malformed_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        load_corpus(str(path))
    with pytest.raises(ParseError):
        load_corpus(str(tmp_path / "nope.json"))


def test_corpus_level_pair_allowed():
    doc = two_image_manifest()
    doc["pairs"].append(
        {
            "pair_id": "cross",
            "side_a": ["a", "f0"],
            "side_b": ["b", "f0"],
            "person": "alice",
            "judgments": [{"worker_id": "w0", "winner": "A", "magnitude": "slight"}],
        }
    )
    corpus = corpus_from_dict(doc)
    cross = corpus.pairs[-1]
    assert not cross.is_image_level
    assert cross.person == "alice"
    assert corpus.pairs[0].is_image_level
