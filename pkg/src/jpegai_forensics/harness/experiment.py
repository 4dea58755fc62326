"""Feature extraction over manifests and the train/test detection experiment."""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..classify import ForestConfig, rf_predict, rf_train
from ..codecs import CodecSettings
from ..cue_color import extract_color_features, read_color_features, write_color_features
from ..cue_quant import extract_quant_features, read_quant_features, write_quant_features
from ..cue_rd import extract_rd_features, flatten, read_rd_features, write_rd_features
from ..imagecore import read_image
from .manifest import DatasetManifest

CUES = ("color", "rd", "quant")

DEFAULT_CODECS = {
    "rd": CodecSettings("sim_latent", 4.0, options={"preset": "c320"}),
    "quant": CodecSettings("sim_latent", 3.0, options={"preset": "c320"}),
}
DEFAULT_PATCH = {"color": 512, "quant": 256}


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    forest: ForestConfig = ForestConfig()
    channel: str = "B"  # colour cue: centre channel fed to the forest
    patch: Optional[int] = None  # cue default when None
    filter_id: str = "laplacian3"
    form: str = "ncc"
    codec: Optional[CodecSettings] = None  # rd extraction codec / quant probe
    mode: str = "full"
    probe: str = "analysis"
    positive_label: Optional[str] = None
    pairs: dict = field(default_factory=dict)  # cell name -> conditions pooled into one accuracy
    workers: int = 1

    def codec_for(self, cue: str) -> Optional[CodecSettings]:
        return self.codec or DEFAULT_CODECS.get(cue)

    def patch_for(self, cue: str) -> Optional[int]:
        return self.patch or DEFAULT_PATCH.get(cue)

    def describe(self, cue: str) -> dict:
        """Canonical, JSON-ready echo of everything that shapes the result."""
        codec = self.codec_for(cue)
        out = {
            "cue": cue,
            "forest": asdict(self.forest),
            "codec": codec.describe() if codec else None,
            "patch": self.patch_for(cue),
            "positive_label": self.positive_label,
            "pairs": {k: sorted(v) for k, v in sorted(self.pairs.items())},
        }
        if cue == "color":
            out.update(channel=self.channel, filter_id=self.filter_id, form=self.form)
        if cue == "quant":
            out.update(mode=self.mode, probe=self.probe)
        return out

    def hash(self, cue: str) -> str:
        text = json.dumps(self.describe(cue), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "forest" in data:
            data["forest"] = ForestConfig(**data["forest"])
        if data.get("codec") is not None:
            c = data["codec"]
            data["codec"] = CodecSettings(c["codec_id"], float(c.get("strength", 0.0)), int(c.get("seed", 0)), dict(c.get("options", {})))
        return cls(**data)


def extract_cue(img, cue: str, config: ExperimentConfig):
    """Cue-native feature object for one image."""
    if cue == "color":
        return extract_color_features(img, config.patch_for(cue), config.filter_id, config.form)
    if cue == "rd":
        return extract_rd_features(img, config.codec_for(cue))
    if cue == "quant":
        return extract_quant_features(img, config.codec_for(cue), config.mode, config.patch_for(cue), config.probe)
    raise ExperimentError(f"unknown cue {cue!r}; choose from {CUES}")


def cue_vector(obj, cue: str, config: ExperimentConfig) -> np.ndarray:
    if cue == "color":
        return np.asarray(obj[config.channel].values)
    if cue == "rd":
        return flatten(obj)
    return np.asarray(obj.values)


def _extract_job(job):
    path, cue, config = job
    return extract_cue(read_image(path), cue, config)


def extract_entries(manifest: DatasetManifest, entries, cue: str, config: ExperimentConfig, workers: Optional[int] = None) -> list:
    """Cue objects for ``entries`` in order; parallel across images when ``workers > 1``."""
    if cue not in CUES:
        raise ExperimentError(f"unknown cue {cue!r}; choose from {CUES}")
    jobs = [(str(manifest.resolve(e)), cue, config) for e in entries]
    workers = workers or config.workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_extract_job, jobs, chunksize=4))
    return [_extract_job(j) for j in jobs]


def write_cue_features(path, cue: str, rows, config: ExperimentConfig) -> Path:
    """``rows``: ``(image_id, cue object)`` pairs, written in the cue's CSV format."""
    if cue == "color":
        return write_color_features(path, rows, patch=config.patch_for(cue), filter_id=config.filter_id, form=config.form)
    if cue == "rd":
        return write_rd_features(path, rows, settings=config.codec_for(cue))
    return write_quant_features(path, rows, settings=config.codec_for(cue))


def read_cue_matrix(path, cue: str, channel: str = "B"):
    """``(image_ids, X)`` from a cue feature file."""
    if cue == "color":
        data = {k: v[channel] for k, v in read_color_features(path).items() if channel in v}
    elif cue == "rd":
        data = {k: flatten(v) for k, v in read_rd_features(path).items()}
    elif cue == "quant":
        data = {k: v.values for k, v in read_quant_features(path).items()}
    else:
        raise ExperimentError(f"unknown cue {cue!r}; choose from {CUES}")
    ids = list(data)
    if not ids:
        raise ExperimentError(f"no {cue} features in {path}")
    lengths = {len(data[i]) for i in ids}
    if len(lengths) != 1:
        raise ExperimentError(f"feature vectors in {path} have differing lengths {sorted(lengths)}")
    return ids, np.array([data[i] for i in ids], dtype=np.float64)


@dataclass
class ExperimentReport:
    cue: str
    config: dict
    config_hash: str
    manifest_digest: str
    n_train: int
    n_test: int
    overall: dict
    per_class: dict
    per_condition: dict
    pairs: dict = field(default_factory=dict)
    feature_refs: list = field(default_factory=list)
    runtime_s: float = 0.0

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = asdict(self)
        if not include_runtime:
            out.pop("runtime_s")
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentReport":
        return cls(**data)


def _cell(correct: np.ndarray) -> dict:
    n = int(correct.size)
    return {"accuracy": float(np.mean(correct)), "correct": int(correct.sum()), "n": n}


def run_detection_experiment(
    manifest: DatasetManifest,
    cue: str,
    config: ExperimentConfig = ExperimentConfig(),
    feature_dir=None,
) -> ExperimentReport:
    """Extract ``cue`` features, train the forest on the train split, score the test split.

    Accuracy is reported overall, per class, per test condition and for
    each configured pooled cell.  With ``feature_dir`` the train and test
    features are also written there in the cue's CSV format.
    """
    start = time.perf_counter()
    if cue not in CUES:
        raise ExperimentError(f"unknown cue {cue!r}; choose from {CUES}")
    manifest.validate(check_paths=False)
    train, test = manifest.split("train"), manifest.split("test")
    if not train:
        raise ExperimentError("manifest has an empty train split")
    if not test:
        raise ExperimentError("manifest has an empty test split")
    conditions = manifest.conditions("test")
    for name, conds in config.pairs.items():
        missing = sorted(set(conds) - set(conditions))
        if missing:
            raise ExperimentError(f"pooled cell {name!r} names conditions absent from the test split: {missing}")

    feats_tr = extract_entries(manifest, train, cue, config)
    feats_te = extract_entries(manifest, test, cue, config)
    refs = []
    if feature_dir is not None:
        feature_dir = Path(feature_dir)
        feature_dir.mkdir(parents=True, exist_ok=True)
        for split, ents, feats in (("train", train, feats_tr), ("test", test, feats_te)):
            p = write_cue_features(feature_dir / f"{cue}_{split}.csv", cue, [(e.image_id, f) for e, f in zip(ents, feats)], config)
            refs.append(p.name)

    X_tr = np.array([cue_vector(f, cue, config) for f in feats_tr])
    X_te = np.array([cue_vector(f, cue, config) for f in feats_te])
    model = rf_train(X_tr, [e.label for e in train], config.forest)
    pred, _ = rf_predict(model, X_te)
    truth = np.array([e.label for e in test], dtype=object)
    correct = np.array(pred, dtype=object) == truth
    cond = np.array([e.condition for e in test], dtype=object)

    per_class = {lab: _cell(correct[truth == lab]) for lab in sorted(set(truth))}
    per_condition = {}
    for c in conditions:
        mask = cond == c
        per_condition[c] = {"label": str(truth[mask][0]), **_cell(correct[mask])}
    pairs = {
        name: {"conditions": sorted(conds), **_cell(correct[np.isin(cond, list(conds))])}
        for name, conds in sorted(config.pairs.items())
    }
    overall = _cell(correct)
    if config.positive_label is not None:
        pos = truth == config.positive_label
        if pos.any():
            overall["recall"] = float(np.mean(correct[pos]))
    return ExperimentReport(
        cue=cue,
        config=config.describe(cue),
        config_hash=config.hash(cue),
        manifest_digest=manifest.digest(),
        n_train=len(train),
        n_test=len(test),
        overall=overall,
        per_class=per_class,
        per_condition=per_condition,
        pairs=pairs,
        feature_refs=refs,
        runtime_s=time.perf_counter() - start,
    )
