"""Materialize compressed, preprocessed and attacked variants of source images."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..codecs import CodecSettings, encode_decode
from ..cue_color import preprocess_only
from ..imagecore import ImageBuffer, read_image, write_image
from .attacks import apply_attack, parse_attack
from .manifest import SPLITS, DatasetManifest, ManifestEntry
from .synth import decoder_synthesized_image, noise_image, textured_image

GENERATORS = {
    "textured": textured_image,
    "decoder": decoder_synthesized_image,
    "noise": noise_image,
}

DEFAULT_LABELS = {
    "original": "original",
    "single": "compressed",
    "double": "double",
    "preprocess": "preprocessed",
}


class CorpusError(RuntimeError):
    pass


def settings_tag(s: CodecSettings) -> str:
    """Short printable name, e.g. ``sim_latent@8`` or ``sim_latent[preset=c320]@4``."""
    opts = ",".join(f"{k}={v}" for k, v in sorted(s.options.items()) if k != "command")
    return f"{s.codec_id}{f'[{opts}]' if opts else ''}@{s.strength:g}"


def _settings_from(obj) -> CodecSettings:
    if isinstance(obj, CodecSettings):
        return obj
    return CodecSettings(obj["codec_id"], float(obj.get("strength", 0.0)), int(obj.get("seed", 0)), dict(obj.get("options", {})))


@dataclass
class SourceGroup:
    """One family of source images and the variants to derive from each."""

    name: str
    generator: str = "textured"  # a key of GENERATORS, or "files"
    count: int = 0
    size: tuple = (512, 512)  # side lengths are drawn uniformly from [lo, hi]
    paths: tuple = ()
    generator_args: dict = field(default_factory=dict)
    split: Union[str, dict] = "train"
    include_original: bool = True
    single: list = field(default_factory=list)
    double: list = field(default_factory=list)  # (b0, b1) settings pairs
    preprocess: bool = False
    attacks: list = field(default_factory=list)  # e.g. "requality90", "resize90"
    attack_splits: tuple = ("test",)
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.single = [_settings_from(s) for s in self.single]
        self.double = [(_settings_from(a), _settings_from(b)) for a, b in self.double]
        for a in self.attacks:
            parse_attack(a)
        if self.generator != "files" and self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.generator == "files":
            self.count = len(self.paths)

    def label(self, kind: str) -> str:
        return self.labels.get(kind, DEFAULT_LABELS[kind])


@dataclass
class CorpusSpec:
    groups: list
    seed: int = 0
    required_patch: Optional[int] = None  # every materialized image must be at least this large

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusSpec":
        groups = []
        for g in data["groups"]:
            g = dict(g)
            g["size"] = tuple(g.get("size", (512, 512)))
            g["paths"] = tuple(g.get("paths", ()))
            groups.append(SourceGroup(**g))
        return cls(groups, int(data.get("seed", 0)), data.get("required_patch"))


def _assign_splits(group: SourceGroup, rng) -> list:
    if isinstance(group.split, str):
        if group.split not in SPLITS:
            raise ValueError(f"unknown split {group.split!r}")
        return [group.split] * group.count
    fractions = {k: float(v) for k, v in group.split.items()}
    if set(fractions) - set(SPLITS) or abs(sum(fractions.values()) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must cover {SPLITS} keys and sum to 1, got {group.split}")
    names = [s for s in SPLITS if s in fractions]
    counts = [int(round(fractions[s] * group.count)) for s in names[:-1]]
    counts.append(group.count - sum(counts))
    out = [s for s, n in zip(names, counts) for _ in range(n)]
    return [out[i] for i in rng.permutation(group.count)]


def _source_image(group: SourceGroup, index: int, seed: int) -> ImageBuffer:
    if group.generator == "files":
        return read_image(group.paths[index])
    rng = np.random.default_rng(seed)
    lo, hi = group.size
    h, w = (int(v) for v in rng.integers(lo, hi + 1, size=2))
    return GENERATORS[group.generator]((h, w), seed=seed, **group.generator_args)


def _build_source(job):
    group, index, seed, split, out_dir, required = job
    source_id = f"{group.name}{index:04d}"
    img = _source_image(group, index, seed)
    generator_id = "file" if group.generator == "files" else group.generator
    base = {"source_id": source_id, "generator_id": generator_id}
    variants = []
    if group.include_original:
        variants.append(("orig", img, group.label("original"),
                         {"kind": "original", "codec_id": "none", "condition": group.label("original")}))
    for s in group.single:
        tag = settings_tag(s)
        variants.append((tag, encode_decode(img, s).decoded, group.label("single"),
                         {"kind": "single", "codec_id": s.codec_id, "strength": s.strength,
                          "options": dict(sorted(s.options.items())), "condition": tag}))
    for b0, b1 in group.double:
        t0, t1 = settings_tag(b0), settings_tag(b1)
        once = encode_decode(img, b0).decoded
        variants.append((f"{t0}-{t1}", encode_decode(once, b1).decoded, group.label("double"),
                         {"kind": "double", "codec_id": b1.codec_id, "strength": b1.strength,
                          "b0": t0, "b1": t1, "condition": f"{t0}->{t1}"}))
    if group.preprocess:
        variants.append(("pre", preprocess_only(img), group.label("preprocess"),
                         {"kind": "preprocess", "codec_id": "none", "condition": "preprocess"}))
    if split in group.attack_splits:
        attacked = []
        for name, vimg, label, tags in variants:
            for a in group.attacks:
                attacked.append((f"{name}_{a}", apply_attack(vimg, a), label,
                                 {**tags, "postprocessing": a, "condition": f"{tags['condition']}|{a}"}))
        variants += attacked

    entries = []
    for name, vimg, label, tags in variants:
        if required and min(vimg.height, vimg.width) < required:
            raise CorpusError(
                f"{source_id}/{name} is {vimg.width}x{vimg.height}, smaller than the required {required}px patch"
            )
        image_id = f"{source_id}_{name}".replace("@", "q").replace("->", "-")
        rel = Path("images") / f"{''.join(c if c.isalnum() or c in '-_.' else '_' for c in image_id)}.png"
        write_image(vimg, Path(out_dir) / rel)
        entries.append(ManifestEntry(image_id, rel.as_posix(), label, split,
                                     {**base, "postprocessing": "none", **tags}))
    return entries


def build_corpus(spec: CorpusSpec, out_dir, workers: Optional[int] = None) -> DatasetManifest:
    """Generate or read every source, write all variants as PNG and return the saved manifest.

    The manifest lands in ``out_dir/manifest.json``.  Output is identical for
    any worker count.
    """
    out_dir = Path(out_dir)
    try:
        (out_dir / "images").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CorpusError(f"cannot create output directory {out_dir}: {exc}") from exc
    if not os.access(out_dir, os.W_OK):
        raise CorpusError(f"output directory {out_dir} is not writable")
    jobs = []
    for gi, group in enumerate(spec.groups):
        for p in group.paths:
            if not Path(p).is_file():
                raise CorpusError(f"missing source image {p}")
        root = np.random.SeedSequence([spec.seed, gi])
        splits = _assign_splits(group, np.random.default_rng(root))
        seeds = [int(ss.generate_state(1)[0]) for ss in root.spawn(group.count)]
        jobs += [(group, i, seeds[i], splits[i], str(out_dir), spec.required_patch) for i in range(group.count)]

    workers = workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_build_source, jobs, chunksize=4))
    else:
        results = [_build_source(j) for j in jobs]
    entries = [e for r in results for e in r]
    labels = tuple(sorted({e.label for e in entries}))
    manifest = DatasetManifest(entries, labels, str(out_dir))
    manifest.validate()
    manifest.save(out_dir / "manifest.json")
    return manifest
