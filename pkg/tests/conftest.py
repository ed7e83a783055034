import numpy as np
import pytest

from facerank.corpus import corpus_from_dict
from synthetic import build_synthetic_corpus


def two_image_manifest() -> dict:
    """Handmade micro manifest used across the unit tests."""
    return {
        "dataset": "micro",
        "images": [
            {
                "image_id": "a",
                "pixel_width": 100,
                "pixel_height": 100,
                "faces": [
                    {"face_id": "f0", "box": [40, 40, 20, 20]},
                    {
                        "face_id": "f1",
                        "box": [5, 5, 10, 10],
                        "detected_automatically": False,
                        "pose": {
                            "component_id": 7,
                            "component_scores": [-1.0] * 6 + [0.5] + [-1.0] * 6,
                        },
                    },
                ],
            },
            {
                "image_id": "b",
                "pixel_width": 200,
                "pixel_height": 100,
                "faces": [
                    {"face_id": "f0", "box": [90, 40, 20, 20]},
                    {"face_id": "f1", "box": [20, 20, 10, 20]},
                    {"face_id": "f2", "box": [150, 60, 30, 30]},
                ],
            },
        ],
        "pairs": [
            {
                "pair_id": "p0",
                "side_a": ["a", "f0"],
                "side_b": ["a", "f1"],
                "judgments": [
                    {"worker_id": "w0", "winner": "A", "magnitude": "significant"},
                    {"worker_id": "w1", "winner": "A", "magnitude": "slight"},
                ],
            },
            {
                "pair_id": "p1",
                "side_a": ["b", "f2"],
                "side_b": ["b", "f1"],
                "judgments": [
                    {"worker_id": "w0", "winner": "B", "magnitude": "slight"},
                    {"worker_id": "w1", "winner": "A", "magnitude": "same"},
                ],
            },
        ],
    }


@pytest.fixture
def micro_corpus():
    return corpus_from_dict(two_image_manifest())


@pytest.fixture(scope="session")
def world100(tmp_path_factory):
    """The big synthetic world: 100 images, 3 judged pairs each, pixels."""
    root = tmp_path_factory.mktemp("world100")
    return build_synthetic_corpus(
        str(root), n_images=100, seed=7, with_fixations=True, with_sentences=True
    )


@pytest.fixture(scope="session")
def world_small(tmp_path_factory):
    """Smaller fully-annotated world for saliency and CLI tests."""
    root = tmp_path_factory.mktemp("world_small")
    return build_synthetic_corpus(
        str(root),
        n_images=14,
        seed=11,
        all_pairs=True,
        with_fixations=True,
        with_sentences=True,
    )


@pytest.fixture(scope="session")
def world_dissent(tmp_path_factory):
    """World where two of the ten workers systematically under-report."""
    root = tmp_path_factory.mktemp("world_dissent")
    return build_synthetic_corpus(str(root), n_images=12, seed=13, dissent=True)


@pytest.fixture
def rng():
    return np.random.default_rng(99)
