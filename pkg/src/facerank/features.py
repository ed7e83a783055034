"""Per-face feature vectors and their pairwise difference composition.

Every face gets a fixed 37-entry vector (layout ``v1``):

    [0]      dist_center            distance of the box center to the image
                                    center, in image-normalized coordinates
    [1]      weighted_dist_center   [0] / max(normalized box w, h)
    [2]      dist_centroid          distance to the centroid of all face centers
    [3]      dist_weighted_centroid centroid weighted by face area share
    [4]      scale                  box area / image area
    [5]      sharpness              face's share of Sobel gradient energy
    [6]      pose_component_id      1..13, or 0 when pose absent
    [7..19]  pose_indicator         one-hot of the dominant pose component
    [20]     aspect_ratio           box w / h
    [21]     pose_diff_vs_others    own component id minus mean of the others'
    [22..34] pose_component_scores  raw detector scores, zeros when absent
    [35]     dominant_pose_score    max component score, 0 when absent
    [36]     detection_success      1.0 if the face came from the detector

A pair of faces is represented by the entrywise difference of their
vectors, so swapping the pair negates the representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, FaceRecord, ImageRecord, POSE_COMPONENTS
from .errors import LengthMismatch, MissingPixels, ParseError
from .pixels import box_sum, gradient_energy, load_grayscale

LAYOUT_VERSION = "v1"
DIM = 37

FEATURE_NAMES = (
    ["dist_center", "weighted_dist_center", "dist_centroid", "dist_weighted_centroid"]
    + ["scale", "sharpness", "pose_component_id"]
    + [f"pose_indicator_{k}" for k in range(1, POSE_COMPONENTS + 1)]
    + ["aspect_ratio", "pose_diff_vs_others"]
    + [f"pose_score_{k}" for k in range(1, POSE_COMPONENTS + 1)]
    + ["dominant_pose_score", "detection_success"]
)
assert len(FEATURE_NAMES) == DIM

# index blocks, used by the ablation masks in the eval harness
CENTER_DIMS = (0, 1, 2, 3)
SCALE_DIM = 4
SHARPNESS_DIM = 5
POSE_DIMS = tuple(range(6, 22))
OCCLUSION_DIMS = tuple(range(22, 37))


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    layout: str = LAYOUT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.shape != (DIM,):
            raise LengthMismatch(f"feature vector must have {DIM} entries, got {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ValueError("feature vector contains non-finite entries")


@dataclass(frozen=True)
class PairFeature:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))


def _scaled_center(face: FaceRecord, image: ImageRecord) -> tuple[float, float]:
    x, y, w, h = face.box
    return (x + w / 2.0) / image.pixel_width, (y + h / 2.0) / image.pixel_height


def dist_features(face: FaceRecord, image: ImageRecord) -> np.ndarray:
    """Four distances in coordinates where the image spans (1, 1).

    [0] to the image center, [1] same divided by the largest normalized box
    side, [2] to the centroid of all face centers, [3] to the area-weighted
    centroid (weights are each face's share of the total face area).
    """
    cx, cy = _scaled_center(face, image)
    d_center = math.hypot(cx - 0.5, cy - 0.5)
    sw = face.box[2] / image.pixel_width
    sh = face.box[3] / image.pixel_height
    d_weighted = d_center / max(sw, sh)

    centers = [_scaled_center(f, image) for f in image.faces]
    mx = sum(c[0] for c in centers) / len(centers)
    my = sum(c[1] for c in centers) / len(centers)

    areas = [f.box[2] * f.box[3] for f in image.faces]
    total = sum(areas)
    wx = sum(a * c[0] for a, c in zip(areas, centers)) / total
    wy = sum(a * c[1] for a, c in zip(areas, centers)) / total

    return np.array(
        [d_center, d_weighted, math.hypot(cx - mx, cy - my), math.hypot(cx - wx, cy - wy)]
    )


def scale_feature(face: FaceRecord, image: ImageRecord) -> float:
    """Box area as a fraction of the image area."""
    x, y, w, h = face.box
    return (w * h) / (image.pixel_width * image.pixel_height)


def sharpness_features(
    image_pixels: np.ndarray | None,
    faces: list[FaceRecord],
    image: ImageRecord,
    energy_mode: str = "squared",
) -> np.ndarray:
    """Each face's share of the Sobel gradient energy over all face boxes.

    Shares sum to 1; a zero-energy image (flat intensity) falls back to a
    uniform 1/n split.
    """
    if image_pixels is None:
        raise MissingPixels(f"image {image.image_id!r}: no pixel data for sharpness")
    energy = gradient_energy(image_pixels, mode=energy_mode)
    sums = np.array(
        [box_sum(energy, f.box, image.pixel_width, image.pixel_height) for f in faces]
    )
    total = sums.sum()
    if total <= 0.0:
        return np.full(len(faces), 1.0 / len(faces))
    return sums / total


def pose_features(face: FaceRecord, image: ImageRecord) -> np.ndarray:
    """component id, 13-entry indicator, aspect ratio, pose difference.

    The pose difference is the face's component id minus the mean id of
    every other face; it is 0 when the face is alone or when any required
    pose estimate is missing.
    """
    out = np.zeros(16)
    if face.pose is not None:
        out[0] = float(face.pose.component_id)
        out[face.pose.component_id] = 1.0  # indicator occupies slots 1..13
    out[14] = face.box[2] / face.box[3]

    others = [f for f in image.faces if f.face_id != face.face_id]
    if face.pose is not None and others and all(f.pose is not None for f in others):
        mean_other = sum(f.pose.component_id for f in others) / len(others)
        out[15] = face.pose.component_id - mean_other
    return out


def occlusion_features(face: FaceRecord) -> np.ndarray:
    """13 raw component scores, the dominant score, and detection success."""
    out = np.zeros(15)
    if face.pose is not None:
        out[:POSE_COMPONENTS] = face.pose.component_scores
        out[13] = max(face.pose.component_scores)
    out[14] = 1.0 if face.detected_automatically else 0.0
    return out


def compose_pair(f_i: FeatureVector, f_j: FeatureVector) -> PairFeature:
    """Entrywise difference; compose_pair(a, b) == -compose_pair(b, a)."""
    if f_i.values.shape != f_j.values.shape:
        raise LengthMismatch(
            f"cannot compose vectors of shapes {f_i.values.shape} and {f_j.values.shape}"
        )
    return PairFeature(f_i.values - f_j.values)


@dataclass(frozen=True)
class ImageFeatures:
    """Vectors for every face of one image, extraction order preserved."""

    image_id: str
    vectors: tuple[FeatureVector, ...]
    sharpness_available: bool

    def by_face(self, faces: tuple[FaceRecord, ...]) -> dict[str, FeatureVector]:
        return {f.face_id: v for f, v in zip(faces, self.vectors)}


def extract_image(
    image: ImageRecord,
    image_pixels: np.ndarray | None = None,
    energy_mode: str = "squared",
) -> ImageFeatures:
    """Extract vectors for all faces of an image in one pass.

    Sharpness entries stay 0 (and the result is flagged) when no pixel
    data is supplied.
    """
    n = len(image.faces)
    if image_pixels is not None:
        shares = sharpness_features(image_pixels, list(image.faces), image, energy_mode)
    else:
        shares = np.zeros(n)
    vectors = []
    for k, face in enumerate(image.faces):
        v = np.empty(DIM)
        v[0:4] = dist_features(face, image)
        v[4] = scale_feature(face, image)
        v[5] = shares[k]
        v[6:22] = pose_features(face, image)
        v[22:37] = occlusion_features(face)
        vectors.append(FeatureVector(v))
    return ImageFeatures(
        image_id=image.image_id,
        vectors=tuple(vectors),
        sharpness_available=image_pixels is not None,
    )


def extract(
    face: FaceRecord,
    image: ImageRecord,
    image_pixels: np.ndarray | None = None,
    energy_mode: str = "squared",
) -> FeatureVector:
    feats = extract_image(image, image_pixels, energy_mode)
    return feats.by_face(image.faces)[face.face_id]


@dataclass
class FeatureTable:
    """Corpus-wide lookup of per-face vectors plus extraction diagnostics."""

    vectors: dict[tuple[str, str], FeatureVector]
    sharpness_available: dict[str, bool]
    energy_mode: str
    used_pixels: bool

    def get(self, ref: tuple[str, str]) -> FeatureVector:
        return self.vectors[ref]

    def image_vectors(self, image: ImageRecord) -> list[FeatureVector]:
        return [self.vectors[(image.image_id, f.face_id)] for f in image.faces]

    @property
    def missing_pixel_images(self) -> list[str]:
        return sorted(i for i, ok in self.sharpness_available.items() if not ok)


def build_feature_table(
    corpus: Corpus,
    use_pixels: bool = True,
    energy_mode: str = "squared",
    pixel_overrides: dict[str, np.ndarray] | None = None,
) -> FeatureTable:
    """Extract every face in the corpus.

    Images whose pixel file is missing or unreadable degrade to
    geometry-only vectors (sharpness 0) and are flagged, not fatal.
    ``pixel_overrides`` supplies in-memory arrays keyed by image_id,
    bypassing file loading.
    """
    vectors: dict[tuple[str, str], FeatureVector] = {}
    availability: dict[str, bool] = {}
    for image in corpus.images:
        pixels = None
        if use_pixels:
            if pixel_overrides and image.image_id in pixel_overrides:
                pixels = pixel_overrides[image.image_id]
            else:
                path = corpus.resolve_image_path(image)
                if path is not None:
                    try:
                        pixels = load_grayscale(path)
                    except (MissingPixels, ParseError):
                        pixels = None
        feats = extract_image(image, pixels, energy_mode)
        availability[image.image_id] = feats.sharpness_available
        for face, vec in zip(image.faces, feats.vectors):
            vectors[(image.image_id, face.face_id)] = vec
    return FeatureTable(
        vectors=vectors,
        sharpness_available=availability,
        energy_mode=energy_mode,
        used_pixels=use_pixels,
    )


def write_feature_table(table: FeatureTable, corpus: Corpus, path: str):
    """Delimited dump: layout header line, column names, one row per face."""
    import os

    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(
            f"# layout={LAYOUT_VERSION} dim={DIM} energy={table.energy_mode} "
            f"pixels={'yes' if table.used_pixels else 'no'}\n"
        )
        fh.write("image_id,face_id," + ",".join(FEATURE_NAMES) + "\n")
        for image in corpus.images:
            for face in image.faces:
                vec = table.vectors[(image.image_id, face.face_id)]
                row = ",".join(repr(float(v)) for v in vec.values)
                fh.write(f"{image.image_id},{face.face_id},{row}\n")
    os.replace(tmp, path)


def read_feature_table(path: str) -> tuple[dict[tuple[str, str], FeatureVector], dict]:
    """Inverse of write_feature_table; returns (vectors, header metadata)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# layout="):
            raise ParseError(f"{path}: missing layout header line")
        meta = dict(kv.split("=", 1) for kv in header[2:].split())
        if meta.get("layout") != LAYOUT_VERSION:
            raise ParseError(f"{path}: unsupported layout {meta.get('layout')!r}")
        columns = fh.readline().strip().split(",")
        if columns[2:] != list(FEATURE_NAMES):
            raise ParseError(f"{path}: column names do not match layout {LAYOUT_VERSION}")
        vectors = {}
        for lineno, line in enumerate(fh, start=3):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 2 + DIM:
                raise ParseError(f"{path}:{lineno}: expected {2 + DIM} fields, got {len(parts)}")
            vectors[(parts[0], parts[1])] = FeatureVector(
                np.array([float(v) for v in parts[2:]])
            )
    return vectors, meta
