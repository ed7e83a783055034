"""Experimental protocol: cross-validation, baselines, agreement, saliency.

The central metric is sign agreement weighted by how lopsided each pair
is: a pair whose ground truth is (s_a, s_b) contributes max(s_a, s_b)
weight, and a prediction is correct when its sign matches sign(s_a - s_b).
Exactly tied pairs count as correct for every method (there is no
direction to get right) and carry their natural weight 0.5.

Model evaluation follows a 10-fold protocol over annotated pairs: train
on 8 folds, pick C on 1 validation fold by weighted accuracy, report on
the held-out test fold, rotating the test fold. Baselines reuse the same
folds so their mean/std is comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import (
    AnnotatedPair,
    Corpus,
    ImageRecord,
    PairCategory,
    PairScore,
    aggregate_scores,
    categorize_pair,
    convert_judgment,
)
from .errors import (
    EmptyInput,
    EmptyJudgmentSet,
    InsufficientJudgments,
    LengthMismatch,
    MissingFixations,
    MissingPixels,
    MissingSaliency,
    MissingSentence,
    ParseError,
    TooFewPairs,
)
from .features import (
    CENTER_DIMS,
    FeatureTable,
    SCALE_DIM,
    SHARPNESS_DIM,
    build_feature_table,
)
from .ranking import (
    CANONICAL_SCORES,
    EloConfig,
    RankingTable,
    elo_rank,
    kendall_tau,
    table_from_scores,
)
from .svr import (
    DEFAULT_C_GRID,
    RegressionModel,
    SolverConfig,
    TrainingSet,
    predict_rows,
    score_individuals,
    train,
)

BASELINE_METHODS = ("center", "scale", "sharpness", "saliency")

# grid solves are many; a tighter iteration budget than the solver default
# keeps cross-validation tractable, and capped fits are flagged in the report
CV_MAX_ITERATIONS = 5_000


@dataclass(frozen=True)
class Stat:
    mean: float
    std: float

    def to_dict(self):
        return {"mean": self.mean, "std": self.std}


def _stat(values) -> Stat:
    arr = np.asarray(list(values), dtype=np.float64)
    return Stat(mean=float(arr.mean()), std=float(arr.std()))


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def weighted_accuracy(predictions, truths) -> float:
    """Sign agreement weighted by max(s_a, s_b); ties always count correct."""
    preds = list(predictions)
    truth = list(truths)
    if len(preds) != len(truth):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truth)} truths")
    if not preds:
        raise EmptyInput("weighted_accuracy needs at least one pair")
    num = den = 0.0
    for p, t in zip(preds, truth):
        w = max(t.s_a, t.s_b)
        den += w
        if t.s_a == t.s_b:
            num += w  # directionless pair: correct by definition
        elif np.sign(p) == np.sign(t.s_a - t.s_b):
            num += w
    return num / den


def unweighted_accuracy(predictions, truths) -> float:
    preds = list(predictions)
    truth = list(truths)
    if not preds:
        raise EmptyInput("accuracy needs at least one pair")
    hits = sum(
        1.0 if t.s_a == t.s_b or np.sign(p) == np.sign(t.s_a - t.s_b) else 0.0
        for p, t in zip(preds, truth)
    )
    return hits / len(preds)


def mse(predictions, truths) -> float:
    preds = np.asarray(list(predictions), dtype=np.float64)
    diffs = np.array([t.s_a - t.s_b for t in truths])
    if len(preds) != len(diffs):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(diffs)} truths")
    if preds.size == 0:
        raise EmptyInput("mse needs at least one pair")
    return float(np.mean((preds - diffs) ** 2))


# ---------------------------------------------------------------------------
# pair dataset
# ---------------------------------------------------------------------------


@dataclass
class PairExample:
    pair: AnnotatedPair
    truth: PairScore
    features: np.ndarray  # phi(a) - phi(b)

    @property
    def category(self) -> PairCategory:
        return categorize_pair(self.truth)

    @property
    def image_ids(self) -> tuple[str, ...]:
        return (self.pair.side_a[0], self.pair.side_b[0])


def build_pair_examples(
    corpus: Corpus,
    table: FeatureTable,
    truth_overrides: dict[str, PairScore] | None = None,
) -> list[PairExample]:
    """One example per judged pair; un-judged pairs are skipped."""
    examples = []
    for pair in corpus.pairs:
        if not pair.judgments:
            continue
        truth = (truth_overrides or {}).get(pair.pair_id) or aggregate_scores(pair)
        f_a = table.get(pair.side_a).values
        f_b = table.get(pair.side_b).values
        examples.append(PairExample(pair=pair, truth=truth, features=f_a - f_b))
    return examples


def pair_training_set(examples, mask: np.ndarray | None = None) -> TrainingSet:
    """Both orientations of every pair, so the data itself is antisymmetric."""
    from .features import DIM

    if not examples:
        return TrainingSet(np.zeros((0, DIM)), np.zeros(0))
    X = np.array([e.features for e in examples])
    t = np.array([e.truth.s_a - e.truth.s_b for e in examples])
    if mask is not None:
        X = X * mask
    return TrainingSet(np.vstack([X, -X]), np.concatenate([t, -t]))


def _feature_matrix(examples, mask: np.ndarray | None = None) -> np.ndarray:
    X = np.array([e.features for e in examples])
    return X * mask if mask is not None else X


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------


def baseline_score(
    face_ref: tuple[str, str],
    table: FeatureTable,
    method: str,
    saliency_shares: dict[tuple[str, str], float] | None = None,
) -> float:
    """Single-cue importance score for one face; higher means more important."""
    if method == "center":
        return -float(table.get(face_ref).values[1])  # negated weighted distance
    if method == "scale":
        return float(table.get(face_ref).values[SCALE_DIM])
    if method == "sharpness":
        if not table.sharpness_available.get(face_ref[0], False):
            raise MissingPixels(f"no pixels for image {face_ref[0]!r}: sharpness unavailable")
        return float(table.get(face_ref).values[SHARPNESS_DIM])
    if method == "saliency":
        if saliency_shares is None or face_ref not in saliency_shares:
            raise MissingSaliency(f"no saliency share for face {face_ref}")
        return saliency_shares[face_ref]
    raise ValueError(f"unknown baseline {method!r}")


def baseline_predictions(examples, table, method, saliency_shares=None) -> list[float]:
    return [
        baseline_score(e.pair.side_a, table, method, saliency_shares)
        - baseline_score(e.pair.side_b, table, method, saliency_shares)
        for e in examples
    ]


# ---------------------------------------------------------------------------
# report structures
# ---------------------------------------------------------------------------


@dataclass
class CategoryAccuracy:
    weighted: float | None
    unweighted: float | None
    count: int

    def to_dict(self):
        return {"weighted": self.weighted, "unweighted": self.unweighted, "count": self.count}


@dataclass
class MethodRow:
    method: str
    available: bool
    weighted_accuracy: Stat | None = None
    mse: Stat | None = None
    categories: dict[str, CategoryAccuracy] = field(default_factory=dict)
    note: str = ""

    def to_dict(self):
        return {
            "method": self.method,
            "available": self.available,
            "weighted_accuracy": self.weighted_accuracy.to_dict()
            if self.weighted_accuracy
            else None,
            "mse": self.mse.to_dict() if self.mse else None,
            "categories": {k: v.to_dict() for k, v in self.categories.items()},
            "note": self.note,
        }


@dataclass
class EvalReport:
    rows: list[MethodRow]
    n_pairs: int
    n_folds: int
    seed: int
    chosen_c: list[float]
    leakage_count: int
    category_counts: dict[str, int]
    energy_mode: str
    solver: dict
    unconverged_fits: int
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        assert sum(self.category_counts.values()) == self.n_pairs
        for row in self.rows:
            if row.weighted_accuracy is not None:
                assert 0.0 <= row.weighted_accuracy.mean <= 1.0

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_dict(self):
        return {
            "rows": [r.to_dict() for r in self.rows],
            "n_pairs": self.n_pairs,
            "n_folds": self.n_folds,
            "seed": self.seed,
            "chosen_c": self.chosen_c,
            "leakage_count": self.leakage_count,
            "category_counts": self.category_counts,
            "energy_mode": self.energy_mode,
            "solver": self.solver,
            "unconverged_fits": self.unconverged_fits,
            "notes": self.notes,
        }


def _category_breakdown(examples, pooled_preds) -> dict[str, CategoryAccuracy]:
    out = {}
    for cat in PairCategory:
        idx = [k for k, e in enumerate(examples) if e.category == cat]
        if not idx:
            out[cat.value] = CategoryAccuracy(weighted=None, unweighted=None, count=0)
            continue
        preds = [pooled_preds[k] for k in idx]
        truths = [examples[k].truth for k in idx]
        out[cat.value] = CategoryAccuracy(
            weighted=weighted_accuracy(preds, truths),
            unweighted=unweighted_accuracy(preds, truths),
            count=len(idx),
        )
    return out


# ---------------------------------------------------------------------------
# cross-validation
# ---------------------------------------------------------------------------


def fold_partition(n: int, n_folds: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle of range(n) split into n_folds contiguous chunks."""
    if n < n_folds:
        raise TooFewPairs(f"{n} pairs cannot fill {n_folds} folds")
    rng = np.random.default_rng((seed, 0xF01D))
    return [np.sort(chunk) for chunk in np.array_split(rng.permutation(n), n_folds)]


@dataclass
class ModelCvResult:
    fold_accuracy: list[float]
    fold_mse: list[float]
    pooled_predictions: list[float]
    chosen_c: list[float]
    unconverged: int


def _run_model_cv(
    examples,
    folds,
    grid,
    base_cfg: SolverConfig,
    mask: np.ndarray | None = None,
) -> ModelCvResult:
    n_folds = len(folds)
    pooled = [0.0] * len(examples)
    result = ModelCvResult([], [], pooled, [], 0)
    for r in range(n_folds):
        test_idx = folds[r]
        val_idx = folds[(r + 1) % n_folds]
        train_idx = np.concatenate(
            [folds[k] for k in range(n_folds) if k != r and k != (r + 1) % n_folds]
        )
        train_rows = pair_training_set([examples[k] for k in train_idx], mask)
        X_val = _feature_matrix([examples[k] for k in val_idx], mask)
        truth_val = [examples[k].truth for k in val_idx]

        best = None
        warm = None
        for C in sorted(grid):  # ascending C so each solve warm-starts the next
            cfg = SolverConfig(
                C=C,
                nu=base_cfg.nu,
                tolerance=base_cfg.tolerance,
                max_iterations=base_cfg.max_iterations,
                seed=base_cfg.seed,
            )
            model = train(train_rows, cfg, warm_beta=warm)
            warm = model.dual_state.beta
            acc = weighted_accuracy(predict_rows(model, X_val), truth_val)
            if not model.diagnostics.converged:
                result.unconverged += 1
            if best is None or acc > best[0]:
                best = (acc, C, model)
        _, chosen, model = best
        result.chosen_c.append(chosen)

        X_test = _feature_matrix([examples[k] for k in test_idx], mask)
        truth_test = [examples[k].truth for k in test_idx]
        preds = predict_rows(model, X_test)
        result.fold_accuracy.append(weighted_accuracy(preds, truth_test))
        result.fold_mse.append(mse(preds, truth_test))
        for k, p in zip(test_idx, preds):
            pooled[k] = float(p)
    return result


def _fixed_prediction_folds(preds, examples, folds) -> tuple[list[float], list[float]]:
    accs, mses = [], []
    for idx in folds:
        accs.append(
            weighted_accuracy([preds[k] for k in idx], [examples[k].truth for k in idx])
        )
        mses.append(mse([preds[k] for k in idx], [examples[k].truth for k in idx]))
    return accs, mses


def _leakage_count(examples, folds) -> int:
    """Test pairs whose images also back at least one training-side pair."""
    count = 0
    n_folds = len(folds)
    for r in range(n_folds):
        train_images = set()
        for k in range(n_folds):
            if k == r:
                continue
            for idx in folds[k]:
                train_images.update(examples[idx].image_ids)
        for idx in folds[r]:
            if any(i in train_images for i in examples[idx].image_ids):
                count += 1
    return count


ABLATION_MASKS = {
    "model (no center)": CENTER_DIMS,
    "model (no scale)": (SCALE_DIM,),
    "model (no sharpness)": (SHARPNESS_DIM,),
    "model (only center+scale+sharpness)": tuple(range(6, 37)),
}


def _mask_vector(zero_dims, dim: int) -> np.ndarray:
    mask = np.ones(dim)
    mask[list(zero_dims)] = 0.0
    return mask


def cross_validate(
    corpus: Corpus,
    table: FeatureTable | None = None,
    grid=DEFAULT_C_GRID,
    base_cfg: SolverConfig | None = None,
    seed: int = 42,
    n_folds: int = 10,
    saliency_shares: dict[tuple[str, str], float] | None = None,
    truth_overrides: dict[str, PairScore] | None = None,
    ablation: bool = False,
    energy_mode: str = "squared",
    use_pixels: bool = True,
) -> EvalReport:
    """Run the full fold protocol and assemble the method table."""
    if n_folds < 3:
        raise TooFewPairs("the train/validate/test rotation needs >= 3 folds")
    if table is None:
        table = build_feature_table(corpus, use_pixels=use_pixels, energy_mode=energy_mode)
    if base_cfg is None:
        base_cfg = SolverConfig(max_iterations=CV_MAX_ITERATIONS, seed=seed)
    examples = build_pair_examples(corpus, table, truth_overrides)
    folds = fold_partition(len(examples), n_folds, seed)

    notes = []
    rows = []

    model_cv = _run_model_cv(examples, folds, grid, base_cfg)
    rows.append(
        MethodRow(
            method="model",
            available=True,
            weighted_accuracy=_stat(model_cv.fold_accuracy),
            mse=_stat(model_cv.fold_mse),
            categories=_category_breakdown(examples, model_cv.pooled_predictions),
        )
    )

    for method in BASELINE_METHODS:
        try:
            preds = baseline_predictions(examples, table, method, saliency_shares)
        except (MissingPixels, MissingSaliency) as exc:
            rows.append(MethodRow(method=method, available=False, note=str(exc)))
            continue
        accs, mses = _fixed_prediction_folds(preds, examples, folds)
        rows.append(
            MethodRow(
                method=method,
                available=True,
                weighted_accuracy=_stat(accs),
                mse=_stat(mses),
                categories=_category_breakdown(examples, preds),
            )
        )

    try:
        agreement, per_worker = inter_human_agreement(corpus)
        rows.append(
            MethodRow(method="inter-human", available=True, weighted_accuracy=agreement)
        )
    except InsufficientJudgments as exc:
        rows.append(MethodRow(method="inter-human", available=False, note=str(exc)))

    if ablation:
        dim = examples[0].features.shape[0] if examples else 0
        for name, zero_dims in ABLATION_MASKS.items():
            mask = _mask_vector(zero_dims, dim)
            cv = _run_model_cv(examples, folds, grid, base_cfg, mask)
            rows.append(
                MethodRow(
                    method=name,
                    available=True,
                    weighted_accuracy=_stat(cv.fold_accuracy),
                    mse=_stat(cv.fold_mse),
                    categories=_category_breakdown(examples, cv.pooled_predictions),
                )
            )

    missing = table.missing_pixel_images
    if missing and use_pixels:
        notes.append(f"{len(missing)} image(s) without pixel data; sharpness degraded")

    counts = {c.value: 0 for c in PairCategory}
    for e in examples:
        counts[e.category.value] += 1

    return EvalReport(
        rows=rows,
        n_pairs=len(examples),
        n_folds=n_folds,
        seed=seed,
        chosen_c=model_cv.chosen_c,
        leakage_count=_leakage_count(examples, folds),
        category_counts=counts,
        energy_mode=table.energy_mode,
        solver={
            "nu": base_cfg.nu,
            "tolerance": base_cfg.tolerance,
            "max_iterations": base_cfg.max_iterations,
            "c_grid": list(grid),
        },
        unconverged_fits=model_cv.unconverged,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# inter-human agreement and leave-one-human-out training
# ---------------------------------------------------------------------------


def inter_human_agreement(corpus: Corpus) -> tuple[Stat, dict[str, float]]:
    """Each worker scored against the mean of the others, averaged over workers."""
    judged = [p for p in corpus.pairs if p.judgments]
    if not judged:
        raise InsufficientJudgments("corpus has no judged pairs")
    for p in judged:
        if len(p.judgments) < 2:
            raise InsufficientJudgments(
                f"pair {p.pair_id!r} has {len(p.judgments)} judgment(s); need >= 2"
            )
    per_worker: dict[str, list[tuple[float, PairScore]]] = {}
    for pair in judged:
        for j in pair.judgments:
            truth = aggregate_scores(pair, exclude_worker=j.worker_id)
            score = convert_judgment(j)
            per_worker.setdefault(j.worker_id, []).append((score.s_a - score.s_b, truth))
    accuracies = {
        w: weighted_accuracy([p for p, _ in rows], [t for _, t in rows])
        for w, rows in sorted(per_worker.items())
    }
    return _stat(accuracies.values()), accuracies


def leave_one_human_out_truths(corpus: Corpus, worker: str) -> dict[str, PairScore]:
    truths = {}
    for pair in corpus.pairs:
        if not pair.judgments:
            continue
        try:
            truths[pair.pair_id] = aggregate_scores(pair, exclude_worker=worker)
        except EmptyJudgmentSet:
            raise InsufficientJudgments(
                f"pair {pair.pair_id!r} is judged only by worker {worker!r}"
            ) from None
    return truths


def leave_one_human_out_training(
    corpus: Corpus,
    method: str = "model",
    table: FeatureTable | None = None,
    grid=DEFAULT_C_GRID,
    base_cfg: SolverConfig | None = None,
    seed: int = 42,
    n_folds: int = 10,
    saliency_shares=None,
) -> Stat:
    """Re-run the fold protocol once per held-out worker's ground truth."""
    workers = corpus.worker_ids()
    if len(workers) < 2:
        raise InsufficientJudgments(f"need >= 2 workers, corpus has {len(workers)}")
    if table is None:
        table = build_feature_table(corpus)
    if base_cfg is None:
        base_cfg = SolverConfig(max_iterations=CV_MAX_ITERATIONS, seed=seed)

    run_means = []
    for worker in workers:
        overrides = leave_one_human_out_truths(corpus, worker)
        examples = build_pair_examples(corpus, table, overrides)
        folds = fold_partition(len(examples), n_folds, seed)
        if method == "model":
            cv = _run_model_cv(examples, folds, grid, base_cfg)
            accs = cv.fold_accuracy
        elif method in BASELINE_METHODS:
            preds = baseline_predictions(examples, table, method, saliency_shares)
            accs, _ = _fixed_prediction_folds(preds, examples, folds)
        else:
            raise ValueError(f"unknown method {method!r}")
        run_means.append(float(np.mean(accs)))
    return _stat(run_means)


# ---------------------------------------------------------------------------
# saliency
# ---------------------------------------------------------------------------


@dataclass
class FixationData:
    points_by_image: dict[str, np.ndarray]  # each (n, 2) of (x, y) pixels
    dropped_out_of_bounds: int = 0

    def points(self, image_id: str) -> np.ndarray:
        if image_id not in self.points_by_image:
            raise MissingFixations(f"no fixations for image {image_id!r}")
        return self.points_by_image[image_id]


def load_fixations(path: str, corpus: Corpus) -> FixationData:
    """CSV of image_id,x,y rows; out-of-bounds points are dropped and counted."""
    import csv

    by_image: dict[str, list[tuple[float, float]]] = {}
    dropped = 0
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:3]] != ["image_id", "x", "y"]:
                raise ParseError(f"{path}: expected header image_id,x,y")
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) < 3:
                    raise ParseError(f"{path}:{lineno}: expected image_id,x,y")
                image_id = row[0].strip()
                try:
                    x, y = float(row[1]), float(row[2])
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: non-numeric coordinates") from None
                image = corpus.image(image_id)  # DanglingReference when unknown
                if 0 <= x <= image.pixel_width and 0 <= y <= image.pixel_height:
                    by_image.setdefault(image_id, []).append((x, y))
                else:
                    dropped += 1
    except OSError as exc:
        raise ParseError(f"cannot read fixations {path!r}: {exc}") from None
    return FixationData(
        points_by_image={k: np.array(v, dtype=np.float64) for k, v in by_image.items()},
        dropped_out_of_bounds=dropped,
    )


def _in_box(points: np.ndarray, box) -> np.ndarray:
    x, y, w, h = box
    return (
        (points[:, 0] >= x)
        & (points[:, 0] <= x + w)
        & (points[:, 1] >= y)
        & (points[:, 1] <= y + h)
    )


def saliency_share(image: ImageRecord, faces, points: np.ndarray):
    """Fixation share per face: box count / total count over all boxes.

    Points inside several overlapping boxes count for each. When no point
    hits any box the share falls back to uniform 1/n and the flag is set.
    """
    faces = list(faces)
    if len(points) == 0:
        counts = np.zeros(len(faces))
    else:
        counts = np.array([float(_in_box(points, f.box).sum()) for f in faces])
    total = counts.sum()
    if total == 0:
        return np.full(len(faces), 1.0 / len(faces)), True
    return counts / total, False


def saliency_share_from_map(image: ImageRecord, faces, gray_map: np.ndarray):
    """Like saliency_share but from summed map intensity inside each box."""
    from .pixels import box_sum

    faces = list(faces)
    sums = np.array(
        [box_sum(np.asarray(gray_map, dtype=np.float64), f.box, image.pixel_width, image.pixel_height) for f in faces]
    )
    total = sums.sum()
    if total <= 0:
        return np.full(len(faces), 1.0 / len(faces)), True
    return sums / total, False


def corpus_saliency_shares(
    corpus: Corpus,
    fixations: FixationData | None = None,
    maps: dict[str, np.ndarray] | None = None,
) -> dict[tuple[str, str], float]:
    """Per-face shares for every image that has saliency input."""
    shares: dict[tuple[str, str], float] = {}
    for image in corpus.images:
        if fixations is not None and image.image_id in fixations.points_by_image:
            vals, _ = saliency_share(image, image.faces, fixations.points(image.image_id))
        elif maps is not None and image.image_id in maps:
            vals, _ = saliency_share_from_map(image, image.faces, maps[image.image_id])
        else:
            continue
        for face, v in zip(image.faces, vals):
            shares[(image.image_id, face.face_id)] = float(v)
    return shares


def quantize_pair_score(s_a: float) -> float:
    """Snap an aggregated score to the nearest canonical value, ties toward 0.5."""
    return min(CANONICAL_SCORES, key=lambda c: (abs(s_a - c), abs(c - 0.5)))


@dataclass
class SaliencyComparison:
    mean_tau: float
    per_image: list[tuple[str, float]]
    confusion: dict[str, dict[str, int]]  # saliency category -> importance category
    n_images: int
    skipped_no_fixations: int
    skipped_incomplete: int
    rating_ties: int

    def to_dict(self):
        return {
            "mean_tau": self.mean_tau,
            "per_image": [{"image_id": i, "tau": t} for i, t in self.per_image],
            "confusion": self.confusion,
            "n_images": self.n_images,
            "skipped_no_fixations": self.skipped_no_fixations,
            "skipped_incomplete": self.skipped_incomplete,
            "rating_ties": self.rating_ties,
        }


def _image_pairs(corpus: Corpus, image_id: str) -> list[AnnotatedPair]:
    return [
        p
        for p in corpus.pairs
        if p.judgments and p.is_image_level and p.side_a[0] == image_id
    ]


def importance_ranking(
    corpus: Corpus, image: ImageRecord, elo_cfg: EloConfig | None = None
) -> RankingTable:
    """Elo ranking of one image's faces from its aggregated pair outcomes."""
    outcomes = []
    for pair in _image_pairs(corpus, image.image_id):
        agg = aggregate_scores(pair)
        outcomes.append((pair.side_a[1], pair.side_b[1], quantize_pair_score(agg.s_a)))
    return elo_rank([f.face_id for f in image.faces], outcomes, elo_cfg)


def saliency_vs_importance(
    corpus: Corpus,
    fixations: FixationData,
    elo_cfg: EloConfig | None = None,
) -> SaliencyComparison:
    """Tau between saliency and importance rankings plus the 3x3 category table.

    Images are included when they carry fixations, >= 2 faces, and a full
    set of annotated pairs; others are skipped and counted.
    """
    cats = [c.value for c in PairCategory]
    confusion = {sc: {ic: 0 for ic in cats} for sc in cats}
    taus, per_image = [], []
    skipped_fix = skipped_incomplete = rating_ties = 0

    for image in corpus.images:
        faces = image.faces
        if len(faces) < 2:
            continue
        pairs = _image_pairs(corpus, image.image_id)
        if image.image_id not in fixations.points_by_image:
            if pairs:
                skipped_fix += 1
            continue
        want = len(faces) * (len(faces) - 1) // 2
        covered = {frozenset((p.side_a[1], p.side_b[1])) for p in pairs}
        if len(covered) < want:
            skipped_incomplete += 1
            continue

        imp = importance_ranking(corpus, image, elo_cfg)
        shares, _ = saliency_share(image, faces, fixations.points(image.image_id))
        sal = table_from_scores(
            {f.face_id: float(s) for f, s in zip(faces, shares)}
        )
        if imp.has_rating_ties() or sal.has_rating_ties():
            rating_ties += 1
        tau = kendall_tau(imp, sal)
        taus.append(tau)
        per_image.append((image.image_id, tau))

        share_of = {f.face_id: float(s) for f, s in zip(faces, shares)}
        for pair in pairs:
            imp_cat = categorize_pair(aggregate_scores(pair)).value
            sa = share_of[pair.side_a[1]]
            sb = share_of[pair.side_b[1]]
            total = sa + sb
            norm = PairScore(0.5, 0.5) if total == 0 else PairScore(sa / total, 1 - sa / total)
            sal_cat = categorize_pair(norm).value
            confusion[sal_cat][imp_cat] += 1

    if not taus:
        raise MissingFixations("no image has both fixations and full pair annotation")
    return SaliencyComparison(
        mean_tau=float(np.mean(taus)),
        per_image=per_image,
        confusion=confusion,
        n_images=len(taus),
        skipped_no_fixations=skipped_fix,
        skipped_incomplete=skipped_incomplete,
        rating_ties=rating_ties,
    )


# ---------------------------------------------------------------------------
# full rankings per annotation group
# ---------------------------------------------------------------------------


def group_rankings(corpus: Corpus, elo_cfg: EloConfig | None = None) -> dict[str, RankingTable]:
    """Elo tables per annotation group.

    Within-image pairs rank that image's faces (group key = image_id);
    cross-image pairs rank the images a person appears in (group key =
    the pair's person tag, or 'corpus' when untagged).
    """
    tables: dict[str, RankingTable] = {}
    for image in corpus.images:
        if _image_pairs(corpus, image.image_id):
            tables[image.image_id] = importance_ranking(corpus, image, elo_cfg)

    cross: dict[str, list[AnnotatedPair]] = {}
    for pair in corpus.pairs:
        if pair.judgments and not pair.is_image_level:
            cross.setdefault(pair.person or "corpus", []).append(pair)
    for group, pairs in cross.items():
        items = sorted({p.side_a[0] for p in pairs} | {p.side_b[0] for p in pairs})
        outcomes = [
            (p.side_a[0], p.side_b[0], quantize_pair_score(aggregate_scores(p).s_a))
            for p in pairs
        ]
        tables[group] = elo_rank(items, outcomes, elo_cfg)
    return tables


# ---------------------------------------------------------------------------
# description selection
# ---------------------------------------------------------------------------


def load_sentences(path: str, corpus: Corpus) -> dict[str, dict[str, str]]:
    """CSV of image_id,face_id,sentence rows keyed back to the corpus."""
    import csv

    out: dict[str, dict[str, str]] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:3]] != [
                "image_id",
                "face_id",
                "sentence",
            ]:
                raise ParseError(f"{path}: expected header image_id,face_id,sentence")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) < 3:
                    raise ParseError(f"{path}:{lineno}: expected image_id,face_id,sentence")
                corpus.image(row[0]).face(row[1])  # raises DanglingReference
                out.setdefault(row[0], {})[row[1]] = row[2]
    except OSError as exc:
        raise ParseError(f"cannot read sentences {path!r}: {exc}") from None
    return out


def select_description(
    image: ImageRecord,
    sentences: dict[str, str],
    scores: dict[str, float],
) -> tuple[str, str]:
    """Sentence of the highest-scoring face; score ties go to the lowest face_id."""
    for face in image.faces:
        if face.face_id not in sentences:
            raise MissingSentence(
                f"image {image.image_id!r}: no sentence for face {face.face_id!r}"
            )
        if face.face_id not in scores:
            raise MissingSentence(
                f"image {image.image_id!r}: no score for face {face.face_id!r}"
            )
    best = sorted(image.faces, key=lambda f: (-scores[f.face_id], f.face_id))[0]
    return best.face_id, sentences[best.face_id]


@dataclass
class SelectionReport:
    selections: dict[str, dict[str, tuple[str, str]]]  # method -> image -> (face, sentence)
    agreement_with_oracle: dict[str, float]
    n_images: int
    n_scored_images: int


def description_selection(
    corpus: Corpus,
    table: FeatureTable,
    model: RegressionModel,
    sentences: dict[str, dict[str, str]],
    seed: int = 42,
    elo_cfg: EloConfig | None = None,
) -> SelectionReport:
    """Pick one sentence per image by predicted importance; compare to oracle.

    The oracle ranks faces from the image's aggregated ground-truth
    outcomes; agreement is the fraction of oracle-scorable images where a
    method picks the oracle's face. A seeded random picker and the center
    baseline give reference points.
    """
    rng = np.random.default_rng((seed, 0xD35C))
    methods = ("model", "center", "random", "oracle")
    selections: dict[str, dict[str, tuple[str, str]]] = {m: {} for m in methods}
    hits = {m: 0 for m in methods}
    scored = 0

    for image in corpus.images:
        sent = sentences.get(image.image_id)
        if sent is None:
            raise MissingSentence(f"no sentences for image {image.image_id!r}")
        model_scores = dict(
            zip(
                (f.face_id for f in image.faces),
                score_individuals(model, table.image_vectors(image)),
            )
        )
        center_scores = {
            f.face_id: baseline_score((image.image_id, f.face_id), table, "center")
            for f in image.faces
        }
        random_scores = dict(
            zip((f.face_id for f in image.faces), rng.random(len(image.faces)))
        )
        selections["model"][image.image_id] = select_description(image, sent, model_scores)
        selections["center"][image.image_id] = select_description(image, sent, center_scores)
        selections["random"][image.image_id] = select_description(image, sent, random_scores)

        if _image_pairs(corpus, image.image_id):
            ranking = importance_ranking(corpus, image, elo_cfg)
            oracle_scores = {f.face_id: -float(ranking.rank(f.face_id)) for f in image.faces}
            oracle_pick = select_description(image, sent, oracle_scores)
            selections["oracle"][image.image_id] = oracle_pick
            scored += 1
            for m in ("model", "center", "random", "oracle"):
                if selections[m][image.image_id][0] == oracle_pick[0]:
                    hits[m] += 1

    agreement = {
        m: (hits[m] / scored if scored else float("nan")) for m in methods
    }
    return SelectionReport(
        selections=selections,
        agreement_with_oracle=agreement,
        n_images=len(corpus.images),
        n_scored_images=scored,
    )
