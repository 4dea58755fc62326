import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from jpegai_forensics.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main
from jpegai_forensics.harness.synth import noise_image
from jpegai_forensics.imagecore import write_image

SPEC = {
    "seed": 0,
    "groups": [
        {"name": "t", "count": 12, "size": [64, 72], "split": {"train": 0.5, "test": 0.5},
         "single": [{"codec_id": "sim_latent", "strength": 32}]}
    ],
}


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "spec.json").write_text(json.dumps(SPEC))
    assert main(["--workers", "1", "corpus", "build", "--spec", str(root / "spec.json"), "--out", str(root / "c")]) == EXIT_OK
    return root


def run(*argv):
    return main(["--workers", "1", "--seed", "0", *map(str, argv)])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "jpegai_forensics", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "recompress-curve" in proc.stdout


def test_feature_train_predict(corpus):
    m, feats = corpus / "c" / "manifest.json", corpus / "color.csv"
    assert run("features", "extract", "--cue", "color", "--manifest", m, "--out", feats, "--patch", "48") == EXIT_OK
    assert run("train", "--cue", "color", "--manifest", m, "--features", feats, "--model", corpus / "m.json", "--trees", "5") == EXIT_OK
    assert run("predict", "--cue", "color", "--model", corpus / "m.json", "--features", feats, "--out", corpus / "p.csv") == EXIT_OK
    rows = list(csv.DictReader(open(corpus / "p.csv")))
    assert len(rows) == 24 and set(rows[0]) == {"image_id", "label", "p_compressed", "p_original"}


def test_evaluate_is_reproducible(corpus):
    outs = []
    for name in ("a", "b"):
        out = corpus / f"{name}.json"
        assert run("evaluate", "--cue", "color", "--manifest", corpus / "c" / "manifest.json", "--out", out,
                   "--trees", "5", "--patch", "48") == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["n_test"] == 12


def test_evaluate_markdown_with_config(corpus):
    cfg = corpus / "cfg.json"
    cfg.write_text(json.dumps({"forest": {"n_trees": 4}, "patch": 48}))
    out = corpus / "r.md"
    assert run("evaluate", "--cue", "color", "--manifest", corpus / "c" / "manifest.json", "--out", out,
               "--format", "markdown", "--config", cfg) == EXIT_OK
    assert "| condition |" in out.read_text()


def test_quant_and_rd_features(corpus):
    m = corpus / "c" / "manifest.json"
    assert run("features", "extract", "--cue", "quant", "--manifest", m, "--out", corpus / "q.csv", "--split", "test",
               "--codec", "sim_latent", "--strength", "6", "--patch", "64", "--mode", "truncated") == EXIT_OK
    assert run("features", "extract", "--cue", "rd", "--manifest", m, "--out", corpus / "rd.csv", "--split", "test",
               "--codec", "baseline_dct", "--strength", "50") == EXIT_OK
    assert (corpus / "rd.csv.json").is_file()


def test_spectrum(tmp_path):
    paths = []
    for i in range(2):
        paths.append(tmp_path / f"n{i}.png")
        write_image(noise_image(32, seed=i), paths[-1])
    assert run("spectrum", *paths, "--out", tmp_path / "s.npy", "--png", tmp_path / "s.png", "--rectify") == EXIT_OK
    spec = np.load(tmp_path / "s.npy")
    assert spec.shape == (32, 32) and spec.min() == 0.0 and spec.max() == 1.0
    assert (tmp_path / "s.png").is_file()


def test_recompress_curve(tmp_path, texture):
    write_image(texture, tmp_path / "x.png")
    out = tmp_path / "curve.csv"
    assert run("recompress-curve", "--image", tmp_path / "x.png", "--strengths", "30,80", "--k", "3",
               "--out", out, "--codec", "baseline_dct") == EXIT_OK
    rows = list(csv.DictReader(open(out)))
    assert [r["k"] for r in rows] == ["1", "2", "3"] * 2
    assert set(rows[0]) == {"strength", "k", "rate", "p_inp", "p_inc"}


class TestExitCodes:
    def test_bad_spec_json(self, tmp_path):
        (tmp_path / "s.json").write_text("{")
        assert run("corpus", "build", "--spec", tmp_path / "s.json", "--out", tmp_path / "o") == EXIT_CONFIG

    def test_unsupported_strength(self, corpus, tmp_path):
        assert run("features", "extract", "--cue", "rd", "--manifest", corpus / "c" / "manifest.json",
                   "--out", tmp_path / "f.csv", "--codec", "baseline_dct", "--strength", "300") == EXIT_CONFIG

    def test_quant_without_latents(self, corpus, tmp_path):
        assert run("features", "extract", "--cue", "quant", "--manifest", corpus / "c" / "manifest.json",
                   "--out", tmp_path / "f.csv", "--codec", "baseline_dct", "--strength", "50") == EXIT_CONFIG

    def test_missing_manifest(self, tmp_path):
        assert run("evaluate", "--cue", "color", "--manifest", tmp_path / "none.json", "--out", tmp_path / "r.json") == EXIT_DATA

    def test_corrupt_model(self, corpus, tmp_path):
        (tmp_path / "m.json").write_text('{"format": "jpegai-forensics-forest", "vers')
        assert run("predict", "--cue", "color", "--model", tmp_path / "m.json", "--features", corpus / "color.csv",
                   "--out", tmp_path / "p.csv") == EXIT_DATA

    def test_leaky_manifest(self, corpus, tmp_path):
        data = json.loads((corpus / "c" / "manifest.json").read_text())
        data["entries"][0]["split"] = "test" if data["entries"][0]["split"] == "train" else "train"
        (corpus / "c" / "leaky.json").write_text(json.dumps(data))
        assert run("evaluate", "--cue", "color", "--manifest", corpus / "c" / "leaky.json", "--out", tmp_path / "r.json") == EXIT_DATA

    def test_unreadable_image(self, tmp_path):
        (tmp_path / "x.png").write_text("not an image")
        assert run("spectrum", tmp_path / "x.png", "--out", tmp_path / "s.npy") == EXIT_DATA

    def test_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["features", "extract", "--cue", "texture"])
        assert info.value.code == EXIT_CONFIG
