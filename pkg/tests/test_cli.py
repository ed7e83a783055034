import json
import os

import pytest

from facerank.cli import main
from conftest import two_image_manifest


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def micro_manifest(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(two_image_manifest()))
    return str(path)


def test_extract_writes_table(micro_manifest, tmp_path, capsys):
    out = str(tmp_path / "out")
    code, stdout, _ = run(["extract", "--manifest", micro_manifest, "--out", out], capsys)
    assert code == 0
    lines = open(os.path.join(out, "features.csv")).read().splitlines()
    assert lines[0].startswith("# layout=v1")
    assert len(lines) == 2 + 5
    assert "5 faces" in stdout


def test_extract_missing_image_files_degrade(world_small, tmp_path, capsys):
    # point one image at a file that does not exist; extraction still succeeds
    manifest = json.load(open(world_small.manifest_path))
    manifest["images"][0]["image_path"] = "img/not_there.png"
    path = tmp_path / "broken_path.json"
    path.write_text(json.dumps(manifest))
    out = str(tmp_path / "out")
    code, stdout, _ = run(["extract", "--manifest", str(path), "--out", out], capsys)
    assert code == 0
    assert "images without pixels: 1" in stdout


def test_extract_malformed_manifest_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    code, _, err = run(["extract", "--manifest", str(bad), "--out", str(tmp_path / "o")], capsys)
    assert code == 2
    assert "error" in err


def test_missing_manifest_exit_2(tmp_path, capsys):
    code, _, err = run(
        ["eval", "--manifest", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")],
        capsys,
    )
    assert code == 2


def test_train_degenerate_exit_3(tmp_path, capsys):
    doc = two_image_manifest()
    doc["pairs"] = doc["pairs"][:1]  # a single judged pair cannot fill train+val
    path = tmp_path / "one_pair.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(
        ["train", "--manifest", str(path), "--out", str(tmp_path / "o"), "--no-pixels"],
        capsys,
    )
    assert code == 3
    assert "numeric error" in err


def test_train_then_describe(world_small, tmp_path, capsys):
    out = str(tmp_path / "run")
    code, stdout, _ = run(
        [
            "train",
            "--manifest",
            world_small.manifest_path,
            "--out",
            out,
            "--c-grid",
            "0.0625",
            "--max-iterations",
            "3000",
        ],
        capsys,
    )
    assert code == 0
    model_path = os.path.join(out, "model.json")
    assert os.path.exists(model_path)

    code, stdout, _ = run(
        [
            "describe",
            "--manifest",
            world_small.manifest_path,
            "--out",
            out,
            "--model",
            model_path,
            "--sentences",
            world_small.sentences_path,
        ],
        capsys,
    )
    assert code == 0
    lines = open(os.path.join(out, "selections.csv")).read().splitlines()
    # header + 4 methods x one row per image
    assert len(lines) == 1 + 4 * len(world_small.corpus.images)
    summary = json.load(open(os.path.join(out, "selection_summary.json")))
    assert summary["agreement_with_oracle"]["oracle"] == 1.0


def test_train_deterministic(world_small, tmp_path, capsys):
    outs = []
    for name in ("r1", "r2"):
        out = str(tmp_path / name)
        code, *_ = run(
            [
                "train",
                "--manifest",
                world_small.manifest_path,
                "--out",
                out,
                "--c-grid",
                "0.0625,1.0",
                "--max-iterations",
                "2000",
            ],
            capsys,
        )
        assert code == 0
        outs.append(open(os.path.join(out, "model.json"), "rb").read())
    assert outs[0] == outs[1]


def test_eval_reports_and_determinism(world_small, tmp_path, capsys):
    args = [
        "eval",
        "--manifest",
        world_small.manifest_path,
        "--c-grid",
        "0.0625,1.0",
        "--max-iterations",
        "2000",
    ]
    outputs = []
    for name in ("e1", "e2"):
        out = str(tmp_path / name)
        code, stdout, _ = run(args + ["--out", out], capsys)
        assert code == 0
        assert "weighted accuracy" in stdout
        blobs = {}
        for fname in ("report.csv", "report.json", "report.png"):
            path = os.path.join(out, fname)
            assert os.path.exists(path), fname
            blobs[fname] = open(path, "rb").read()
        outputs.append(blobs)
    assert outputs[0] == outputs[1]

    report = json.loads(outputs[0]["report.json"].decode())
    methods = {r["method"]: r for r in report["rows"]}
    assert methods["saliency"]["available"] is False  # no fixations passed
    assert methods["model"]["available"] is True


def test_eval_with_fixations_has_saliency_row(world_small, tmp_path, capsys):
    out = str(tmp_path / "sal")
    code, _, _ = run(
        [
            "eval",
            "--manifest",
            world_small.manifest_path,
            "--out",
            out,
            "--fixations",
            world_small.fixations_path,
            "--c-grid",
            "0.0625",
            "--max-iterations",
            "2000",
        ],
        capsys,
    )
    assert code == 0
    report = json.load(open(os.path.join(out, "report.json")))
    methods = {r["method"]: r for r in report["rows"]}
    assert methods["saliency"]["available"] is True


def test_rank_consistent_pairs_total_order(tmp_path, capsys):
    from test_evaluate import saliency_corpus
    from facerank.corpus import save_corpus

    path = tmp_path / "m.json"
    save_corpus(saliency_corpus(), str(path))
    out = str(tmp_path / "rank")
    code, stdout, _ = run(["rank", "--manifest", str(path), "--out", out], capsys)
    assert code == 0
    lines = open(os.path.join(out, "rankings.csv")).read().splitlines()
    assert lines[0] == "group,item_id,rating,rank"
    ranks = [line.split(",") for line in lines[1:]]
    assert [(r[1], r[3]) for r in ranks] == [("f0", "1"), ("f1", "2"), ("f2", "3")]


def test_saliency_compare_outputs(world_small, tmp_path, capsys):
    out = str(tmp_path / "cmp")
    code, stdout, _ = run(
        [
            "saliency-compare",
            "--manifest",
            world_small.manifest_path,
            "--out",
            out,
            "--fixations",
            world_small.fixations_path,
        ],
        capsys,
    )
    assert code == 0
    assert "mean tau" in stdout
    for fname in ("confusion.csv", "confusion.png", "per_image_tau.csv", "saliency.json"):
        assert os.path.exists(os.path.join(out, fname)), fname
    doc = json.load(open(os.path.join(out, "saliency.json")))
    assert -1.0 <= doc["mean_tau"] <= 1.0


def test_saliency_compare_missing_fixations_exit_2(micro_manifest, tmp_path, capsys):
    code, _, _ = run(
        [
            "saliency-compare",
            "--manifest",
            micro_manifest,
            "--out",
            str(tmp_path / "o"),
            "--fixations",
            str(tmp_path / "missing.csv"),
        ],
        capsys,
    )
    assert code == 2


def test_no_pose_flag_zeroes_pose_features(micro_manifest, tmp_path, capsys):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    run(["extract", "--manifest", micro_manifest, "--out", out1], capsys)
    run(["extract", "--manifest", micro_manifest, "--out", out2, "--no-pose"], capsys)
    import numpy as np
    from facerank.features import read_feature_table

    with_pose, _ = read_feature_table(os.path.join(out1, "features.csv"))
    without, _ = read_feature_table(os.path.join(out2, "features.csv"))
    v1 = with_pose[("a", "f1")].values
    v2 = without[("a", "f1")].values
    assert v1[6] == 7.0 and v2[6] == 0.0
    assert not v2[7:20].any()
    np.testing.assert_array_equal(v1[:6], v2[:6])


def test_bad_c_grid_exit_2(micro_manifest, tmp_path, capsys):
    code, _, err = run(
        [
            "train",
            "--manifest",
            micro_manifest,
            "--out",
            str(tmp_path / "o"),
            "--c-grid",
            "zero,none",
        ],
        capsys,
    )
    assert code == 2
