"""Data model for annotated group photos and their pairwise importance judgments.

A corpus is a single JSON manifest holding images (each with one or more
face boxes, optionally with precomputed head-pose sidecar data) and
annotated face pairs. Every crowd judgment is a three-tier forced choice
(significant / slight / same) that converts to a complementary score pair:

    winner A, significant -> (1.00, 0.00)
    winner A, slight      -> (0.75, 0.25)
    same                  -> (0.50, 0.50)

with the mirrored rows for winner B. Ground truth for a pair is the
arithmetic mean of its converted judgments.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum

from .errors import (
    DanglingReference,
    EmptyJudgmentSet,
    InvariantViolation,
    ParseError,
)

MAGNITUDES = ("significant", "slight", "same")
WINNERS = ("A", "B")
POSE_COMPONENTS = 13

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class PoseEstimate:
    """Discrete head orientation from a 13-component mixture detector."""

    component_id: int
    component_scores: tuple[float, ...]


@dataclass(frozen=True)
class FaceRecord:
    face_id: str
    box: tuple[float, float, float, float]  # (x, y, w, h), pixels, top-left origin
    detected_automatically: bool = True
    pose: PoseEstimate | None = None


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    pixel_width: float
    pixel_height: float
    faces: tuple[FaceRecord, ...]
    image_path: str | None = None

    def face(self, face_id: str) -> FaceRecord:
        for f in self.faces:
            if f.face_id == face_id:
                return f
        raise DanglingReference(f"image {self.image_id!r} has no face {face_id!r}")


@dataclass(frozen=True)
class PairJudgment:
    worker_id: str
    winner: str  # "A" or "B"; recorded but ignored when magnitude == "same"
    magnitude: str


@dataclass(frozen=True)
class AnnotatedPair:
    pair_id: str
    side_a: tuple[str, str]  # (image_id, face_id)
    side_b: tuple[str, str]
    judgments: tuple[PairJudgment, ...]
    person: str | None = None  # cross-image pairs: depicted person, metadata only

    @property
    def is_image_level(self) -> bool:
        return self.side_a[0] == self.side_b[0]


@dataclass(frozen=True)
class PairScore:
    """Complementary importance scores; s_a + s_b == 1 by construction."""

    s_a: float
    s_b: float

    @property
    def gap(self) -> float:
        return abs(self.s_a - self.s_b)

    @property
    def diff(self) -> float:
        return self.s_a - self.s_b


class PairCategory(str, Enum):
    SIGNIFICANTLY_MORE = "significantly-more"
    SLIGHTLY_MORE = "slightly-more"
    ALMOST_SAME = "almost-same"


_SCORE_TABLE = {
    ("A", "significant"): (1.00, 0.00),
    ("A", "slight"): (0.75, 0.25),
    ("B", "significant"): (0.00, 1.00),
    ("B", "slight"): (0.25, 0.75),
}


def convert_judgment(j: PairJudgment) -> PairScore:
    """Map one three-tier judgment to its score pair."""
    if j.magnitude == "same":
        return PairScore(0.50, 0.50)
    s_a, s_b = _SCORE_TABLE[(j.winner, j.magnitude)]
    return PairScore(s_a, s_b)


def aggregate_scores(pair: AnnotatedPair, exclude_worker: str | None = None) -> PairScore:
    """Mean of the converted judgment scores, optionally leaving one worker out.

    s_b is recomputed as 1 - s_a so the complementarity invariant holds
    exactly despite float rounding in the mean.
    """
    kept = [j for j in pair.judgments if j.worker_id != exclude_worker]
    if not kept:
        raise EmptyJudgmentSet(
            f"pair {pair.pair_id!r} has no judgments left"
            + (f" after excluding worker {exclude_worker!r}" if exclude_worker else "")
        )
    s_a = sum(convert_judgment(j).s_a for j in kept) / len(kept)
    return PairScore(s_a, 1.0 - s_a)


def categorize_pair(score: PairScore) -> PairCategory:
    """Bucket a score pair by its gap.

    Thresholds 0.25 / 0.75 are the midpoints between the gaps of the three
    pure unanimous outcomes (0, 0.5, 1).
    """
    gap = score.gap
    if gap > 0.75:
        return PairCategory.SIGNIFICANTLY_MORE
    if gap > 0.25:
        return PairCategory.SLIGHTLY_MORE
    return PairCategory.ALMOST_SAME


@dataclass
class Corpus:
    """Validated, cross-referenced dataset. Immutable after load."""

    images: tuple[ImageRecord, ...]
    pairs: tuple[AnnotatedPair, ...]
    dataset: str = ""
    base_dir: str = ""

    def __post_init__(self):
        self._by_id = {img.image_id: img for img in self.images}

    def image(self, image_id: str) -> ImageRecord:
        try:
            return self._by_id[image_id]
        except KeyError:
            raise DanglingReference(f"unknown image {image_id!r}") from None

    def face(self, ref: tuple[str, str]) -> FaceRecord:
        return self.image(ref[0]).face(ref[1])

    def resolve_image_path(self, img: ImageRecord) -> str | None:
        if img.image_path is None:
            return None
        if os.path.isabs(img.image_path):
            return img.image_path
        return os.path.join(self.base_dir, img.image_path)

    def category_distribution(self) -> dict[PairCategory, int]:
        """Counts of aggregated pairs per category (both pair styles pooled)."""
        counts = {c: 0 for c in PairCategory}
        for pair in self.pairs:
            if pair.judgments:
                counts[categorize_pair(aggregate_scores(pair))] += 1
        return counts

    def worker_ids(self) -> list[str]:
        seen = set()
        for pair in self.pairs:
            for j in pair.judgments:
                seen.add(j.worker_id)
        return sorted(seen)


def _require(cond: bool, msg: str):
    if not cond:
        raise InvariantViolation(msg)


def _validate_pose(raw, where: str) -> PoseEstimate:
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: pose must be an object")
    try:
        cid = int(raw["component_id"])
        scores = [float(v) for v in raw["component_scores"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: bad pose entry ({exc})") from None
    _require(1 <= cid <= POSE_COMPONENTS, f"{where}: component_id {cid} outside [1, 13]")
    _require(
        len(scores) == POSE_COMPONENTS,
        f"{where}: expected {POSE_COMPONENTS} component scores, got {len(scores)}",
    )
    argmax = max(range(POSE_COMPONENTS), key=lambda k: (scores[k], -k)) + 1
    _require(
        argmax == cid,
        f"{where}: component_id {cid} is not the argmax of component_scores ({argmax})",
    )
    return PoseEstimate(component_id=cid, component_scores=tuple(scores))


def _validate_face(raw, image_w: float, image_h: float, where: str) -> FaceRecord:
    try:
        face_id = str(raw["face_id"])
        x, y, w, h = (float(v) for v in raw["box"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{where}: bad face entry ({exc})") from None
    where = f"{where} face {face_id!r}"
    _require(w > 0 and h > 0, f"{where}: box sides must be positive, got w={w} h={h}")
    _require(
        x < image_w and x + w > 0 and y < image_h and y + h > 0,
        f"{where}: box does not intersect the image rectangle",
    )
    pose = _validate_pose(raw["pose"], where) if raw.get("pose") is not None else None
    return FaceRecord(
        face_id=face_id,
        box=(x, y, w, h),
        detected_automatically=bool(raw.get("detected_automatically", True)),
        pose=pose,
    )


def _validate_image(raw, where: str) -> ImageRecord:
    try:
        image_id = str(raw["image_id"])
        width = float(raw["pixel_width"])
        height = float(raw["pixel_height"])
        raw_faces = raw["faces"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{where}: bad image entry ({exc})") from None
    where = f"image {image_id!r}"
    _require(width > 0 and height > 0, f"{where}: pixel dimensions must be positive")
    _require(bool(raw_faces), f"{where}: at least one face required")
    faces = tuple(_validate_face(f, width, height, where) for f in raw_faces)
    ids = [f.face_id for f in faces]
    _require(len(set(ids)) == len(ids), f"{where}: duplicate face_id in {ids}")
    path = raw.get("image_path")
    return ImageRecord(
        image_id=image_id,
        pixel_width=width,
        pixel_height=height,
        faces=faces,
        image_path=str(path) if path is not None else None,
    )


def _validate_judgment(raw, where: str) -> PairJudgment:
    try:
        worker = str(raw["worker_id"])
        winner = str(raw["winner"])
        magnitude = str(raw["magnitude"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{where}: bad judgment ({exc})") from None
    _require(winner in WINNERS, f"{where}: winner must be A or B, got {winner!r}")
    _require(
        magnitude in MAGNITUDES,
        f"{where}: magnitude must be one of {MAGNITUDES}, got {magnitude!r}",
    )
    return PairJudgment(worker_id=worker, winner=winner, magnitude=magnitude)


def _validate_pair(raw, images: dict[str, ImageRecord], where: str) -> AnnotatedPair:
    try:
        pair_id = str(raw["pair_id"])
        side_a = tuple(str(v) for v in raw["side_a"])
        side_b = tuple(str(v) for v in raw["side_b"])
        raw_judgments = raw.get("judgments", [])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{where}: bad pair entry ({exc})") from None
    where = f"pair {pair_id!r}"
    _require(len(side_a) == 2 and len(side_b) == 2, f"{where}: sides must be [image_id, face_id]")
    _require(side_a != side_b, f"{where}: side_a equals side_b")
    for side, ref in (("side_a", side_a), ("side_b", side_b)):
        img = images.get(ref[0])
        if img is None:
            raise DanglingReference(f"{where} {side}: unknown image {ref[0]!r}")
        if not any(f.face_id == ref[1] for f in img.faces):
            raise DanglingReference(
                f"{where} {side}: image {ref[0]!r} has no face {ref[1]!r}"
            )
    judgments = tuple(
        _validate_judgment(j, f"{where} judgment[{k}]") for k, j in enumerate(raw_judgments)
    )
    person = raw.get("person")
    return AnnotatedPair(
        pair_id=pair_id,
        side_a=side_a,
        side_b=side_b,
        judgments=judgments,
        person=str(person) if person is not None else None,
    )


def corpus_from_dict(doc: dict, base_dir: str = "", source: str = "<dict>") -> Corpus:
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: manifest root must be an object")
    raw_images = doc.get("images")
    if not isinstance(raw_images, list) or not raw_images:
        raise ParseError(f"{source}: manifest needs a non-empty 'images' list")
    images = tuple(
        _validate_image(raw, f"{source} images[{k}]") for k, raw in enumerate(raw_images)
    )
    ids = [img.image_id for img in images]
    _require(len(set(ids)) == len(ids), f"{source}: duplicate image_id in manifest")
    by_id = {img.image_id: img for img in images}
    raw_pairs = doc.get("pairs", [])
    if not isinstance(raw_pairs, list):
        raise ParseError(f"{source}: 'pairs' must be a list")
    pairs = tuple(
        _validate_pair(raw, by_id, f"{source} pairs[{k}]") for k, raw in enumerate(raw_pairs)
    )
    pair_ids = [p.pair_id for p in pairs]
    _require(len(set(pair_ids)) == len(pair_ids), f"{source}: duplicate pair_id in manifest")
    return Corpus(
        images=images,
        pairs=pairs,
        dataset=str(doc.get("dataset", "")),
        base_dir=base_dir,
    )


def load_corpus(manifest_path: str) -> Corpus:
    """Parse and fully validate a manifest file."""
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read manifest {manifest_path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed manifest {manifest_path!r}: {exc}") from None
    return corpus_from_dict(
        doc, base_dir=os.path.dirname(os.path.abspath(manifest_path)), source=manifest_path
    )


def corpus_to_dict(corpus: Corpus) -> dict:
    def face_dict(f: FaceRecord) -> dict:
        out = {
            "face_id": f.face_id,
            "box": list(f.box),
            "detected_automatically": f.detected_automatically,
        }
        if f.pose is not None:
            out["pose"] = {
                "component_id": f.pose.component_id,
                "component_scores": list(f.pose.component_scores),
            }
        return out

    def image_dict(img: ImageRecord) -> dict:
        out = {
            "image_id": img.image_id,
            "pixel_width": img.pixel_width,
            "pixel_height": img.pixel_height,
            "faces": [face_dict(f) for f in img.faces],
        }
        if img.image_path is not None:
            out["image_path"] = img.image_path
        return out

    def pair_dict(p: AnnotatedPair) -> dict:
        out = {
            "pair_id": p.pair_id,
            "side_a": list(p.side_a),
            "side_b": list(p.side_b),
            "judgments": [
                {"worker_id": j.worker_id, "winner": j.winner, "magnitude": j.magnitude}
                for j in p.judgments
            ],
        }
        if p.person is not None:
            out["person"] = p.person
        return out

    return {
        "version": MANIFEST_VERSION,
        "dataset": corpus.dataset,
        "images": [image_dict(img) for img in corpus.images],
        "pairs": [pair_dict(p) for p in corpus.pairs],
    }


def save_corpus(corpus: Corpus, manifest_path: str):
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(corpus_to_dict(corpus), fh, indent=1)
        fh.write("\n")
