"""Command-line surface for batch experiments.

    facerank extract          --manifest M --out DIR
    facerank train            --manifest M --out DIR [--c-grid ...]
    facerank eval             --manifest M --out DIR [--fixations F] [--loho] [--ablation]
    facerank rank             --manifest M --out DIR
    facerank saliency-compare --manifest M --out DIR --fixations F
    facerank describe         --manifest M --out DIR --model MODEL --sentences S

Exit codes: 0 success, 2 input/validation error, 3 numeric failure.
All randomness flows from --seed (default 42).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import corpus as corpus_mod
from . import evaluate, reporting
from .errors import FacerankError, InputError, NumericError
from .features import build_feature_table, write_feature_table
from .ranking import EloConfig
import numpy as np

from .svr import (
    DEFAULT_C_GRID,
    SolverConfig,
    load_model,
    predict_rows,
    save_model,
    train,
)


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad C grid {text!r}; expected comma-separated floats"
        ) from None
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError(f"C grid values must be positive, got {text!r}")
    return values


def _strip_pose(corpus):
    images = tuple(
        replace(
            img,
            faces=tuple(replace(f, pose=None) for f in img.faces),
        )
        for img in corpus.images
    )
    return replace(corpus, images=images)


def _load_corpus(args):
    corpus = corpus_mod.load_corpus(args.manifest)
    if getattr(args, "no_pose", False):
        corpus = _strip_pose(corpus)
    return corpus


def _features(args, corpus):
    return build_feature_table(
        corpus, use_pixels=not args.no_pixels, energy_mode=args.energy
    )


def _solver_config(args, for_cv: bool = False) -> SolverConfig:
    cap = args.max_iterations
    if cap is None:
        cap = evaluate.CV_MAX_ITERATIONS if for_cv else SolverConfig().max_iterations
    return SolverConfig(
        nu=args.nu, tolerance=args.tolerance, max_iterations=cap, seed=args.seed
    )


def _saliency_inputs(args, corpus):
    fixations = None
    maps = None
    if getattr(args, "fixations", None):
        fixations = evaluate.load_fixations(args.fixations, corpus)
    if getattr(args, "saliency_maps", None):
        from .pixels import load_grayscale

        maps = {}
        for image in corpus.images:
            for ext in (".png", ".jpg", ".jpeg", ".bmp"):
                path = os.path.join(args.saliency_maps, image.image_id + ext)
                if os.path.exists(path):
                    maps[image.image_id] = load_grayscale(path)
                    break
    return fixations, maps


def cmd_extract(args) -> int:
    corpus = _load_corpus(args)
    table = _features(args, corpus)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "features.csv")
    write_feature_table(table, corpus, path)
    n_faces = sum(len(img.faces) for img in corpus.images)
    missing = len(table.missing_pixel_images) if not args.no_pixels else len(corpus.images)
    print(
        f"extracted {n_faces} faces from {len(corpus.images)} images -> {path} "
        f"(images without pixels: {missing})"
    )
    return 0


def cmd_train(args) -> int:
    corpus = _load_corpus(args)
    table = _features(args, corpus)
    examples = evaluate.build_pair_examples(corpus, table)
    if not examples:
        raise InputError("manifest has no judged pairs to train on")
    base = _solver_config(args)
    grid = args.c_grid

    if len(grid) == 1:
        chosen = grid[0]
    else:
        # pick C on a seeded held-out tenth, then refit on everything
        folds = evaluate.fold_partition(len(examples), min(10, len(examples)), args.seed)
        val_idx = set(folds[0].tolist())
        train_ex = [e for k, e in enumerate(examples) if k not in val_idx]
        val_ex = [e for k, e in enumerate(examples) if k in val_idx]
        best = None
        for C in grid:
            model = train(evaluate.pair_training_set(train_ex), replace(base, C=C))
            preds = predict_rows(model, np.array([e.features for e in val_ex]))
            acc = evaluate.weighted_accuracy(preds, [e.truth for e in val_ex])
            if best is None or acc > best[0]:
                best = (acc, C)
        chosen = best[1]

    model = train(evaluate.pair_training_set(examples), replace(base, C=chosen))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "model.json")
    save_model(model, path)
    d = model.diagnostics
    print(
        f"trained on {len(examples)} pairs (C={chosen}) -> {path} "
        f"[iterations={d.iterations} converged={d.converged} gap={d.duality_gap:.3e}]"
    )
    return 0


def cmd_eval(args) -> int:
    corpus = _load_corpus(args)
    table = _features(args, corpus)
    fixations, maps = _saliency_inputs(args, corpus)
    shares = (
        evaluate.corpus_saliency_shares(corpus, fixations, maps)
        if (fixations or maps)
        else None
    )
    report = evaluate.cross_validate(
        corpus,
        table=table,
        grid=args.c_grid,
        base_cfg=_solver_config(args, for_cv=True),
        seed=args.seed,
        n_folds=args.folds,
        saliency_shares=shares,
        ablation=args.ablation,
    )
    if args.loho:
        for method in ("model",) + evaluate.BASELINE_METHODS:
            try:
                stat = evaluate.leave_one_human_out_training(
                    corpus,
                    method,
                    table=table,
                    grid=args.c_grid,
                    base_cfg=_solver_config(args, for_cv=True),
                    seed=args.seed,
                    n_folds=args.folds,
                    saliency_shares=shares,
                )
                report.rows.append(
                    evaluate.MethodRow(
                        method=f"{method} (leave-one-human-out)",
                        available=True,
                        weighted_accuracy=stat,
                    )
                )
            except FacerankError as exc:
                report.rows.append(
                    evaluate.MethodRow(
                        method=f"{method} (leave-one-human-out)",
                        available=False,
                        note=str(exc),
                    )
                )
    path = reporting.write_eval_report(report, args.out)
    model_row = report.row("model")
    print(
        f"evaluated {report.n_pairs} pairs over {report.n_folds} folds -> {path} "
        f"[model weighted accuracy {model_row.weighted_accuracy.mean:.4f} "
        f"+/- {model_row.weighted_accuracy.std:.4f}]"
    )
    return 0


def cmd_rank(args) -> int:
    corpus = _load_corpus(args)
    tables = evaluate.group_rankings(corpus, _elo_config(args))
    if not tables:
        raise InputError("manifest has no judged pairs to rank from")
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "rankings.csv")
    reporting.atomic_write_text(path, reporting.rankings_csv(tables))
    print(f"ranked {len(tables)} group(s) -> {path}")
    return 0


def cmd_saliency_compare(args) -> int:
    corpus = _load_corpus(args)
    fixations, _ = _saliency_inputs(args, corpus)
    if fixations is None:
        raise InputError("saliency-compare requires --fixations")
    comparison = evaluate.saliency_vs_importance(corpus, fixations, _elo_config(args))
    reporting.write_saliency_report(comparison, args.out)
    print(
        f"compared {comparison.n_images} images -> {args.out} "
        f"[mean tau {comparison.mean_tau:.4f}; skipped: "
        f"{comparison.skipped_no_fixations} without fixations, "
        f"{comparison.skipped_incomplete} incompletely annotated]"
    )
    return 0


def cmd_describe(args) -> int:
    corpus = _load_corpus(args)
    table = _features(args, corpus)
    model = load_model(args.model)
    sentences = evaluate.load_sentences(args.sentences, corpus)
    report = evaluate.description_selection(
        corpus, table, model, sentences, seed=args.seed, elo_cfg=_elo_config(args)
    )
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "selections.csv")
    reporting.atomic_write_text(path, reporting.selections_csv(report.selections))
    reporting.write_json(
        {
            "agreement_with_oracle": report.agreement_with_oracle,
            "n_images": report.n_images,
            "n_scored_images": report.n_scored_images,
        },
        os.path.join(args.out, "selection_summary.json"),
    )
    if report.n_scored_images:
        agree = report.agreement_with_oracle["model"]
        print(
            f"selected sentences for {report.n_images} images -> {path} "
            f"[model matches oracle on {agree:.2%} of {report.n_scored_images} scored images]"
        )
    else:
        print(f"selected sentences for {report.n_images} images -> {path}")
    return 0


def _elo_config(args) -> EloConfig:
    return EloConfig(seed=args.seed)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--manifest", required=True, help="dataset manifest (JSON)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=42, help="seed for all randomized steps")
    p.add_argument(
        "--no-pixels", action="store_true", help="skip image files; geometry-only features"
    )
    p.add_argument(
        "--no-pose", action="store_true", help="ignore pose sidecar data in the manifest"
    )
    p.add_argument(
        "--energy",
        choices=("squared", "magnitude"),
        default="squared",
        help="sharpness gradient energy definition",
    )


def _add_solver(p: argparse.ArgumentParser):
    p.add_argument(
        "--c-grid",
        type=_parse_grid,
        default=DEFAULT_C_GRID,
        help="comma-separated C values (default powers of four from 2^-6 to 2^6)",
    )
    p.add_argument("--nu", type=float, default=0.5, help="nu parameter of the regressor")
    p.add_argument("--tolerance", type=float, default=1e-4, help="solver KKT/gap tolerance")
    p.add_argument(
        "--max-iterations", type=int, default=None, help="solver iteration cap override"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facerank",
        description="Rank people in group photos by importance learned from pairwise judgments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="write the per-face feature table")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit the pairwise regressor on all judged pairs")
    _add_common(p)
    _add_solver(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="cross-validated method comparison report")
    _add_common(p)
    _add_solver(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--fixations", help="fixation CSV for the saliency baseline")
    p.add_argument("--saliency-maps", help="directory of <image_id>.png saliency maps")
    p.add_argument(
        "--loho", action="store_true", help="add leave-one-human-out rows (slow)"
    )
    p.add_argument(
        "--ablation", action="store_true", help="add feature-ablation model rows (slow)"
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="full Elo rankings from the annotations")
    _add_common(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser(
        "saliency-compare", help="tau and category confusion of saliency vs importance"
    )
    _add_common(p)
    p.add_argument("--fixations", required=True, help="fixation CSV (image_id,x,y)")
    p.set_defaults(func=cmd_saliency_compare)

    p = sub.add_parser("describe", help="pick one per-face sentence per image")
    _add_common(p)
    p.add_argument("--model", required=True, help="model file from `facerank train`")
    p.add_argument("--sentences", required=True, help="CSV of image_id,face_id,sentence")
    p.set_defaults(func=cmd_describe)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except FacerankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
