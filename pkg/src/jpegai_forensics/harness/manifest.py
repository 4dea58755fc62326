"""Versioned JSON dataset manifests with split and leakage checks."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

MANIFEST_VERSION = 1
SPLITS = ("train", "val", "test")


class ManifestError(ValueError):
    """A manifest is malformed, leaks images across splits, or points at missing files."""


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    image_path: str
    label: str
    split: str
    # codec_id, strength, generator_id, postprocessing, condition, source_id, b0, b1 ...
    tags: dict = field(default_factory=dict)

    @property
    def condition(self) -> str:
        return str(self.tags.get("condition", self.label))

    @property
    def source_id(self) -> str:
        return str(self.tags.get("source_id", self.image_id))

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "image_path": self.image_path,
            "label": self.label,
            "split": self.split,
            "tags": dict(sorted(self.tags.items())),
        }


@dataclass
class DatasetManifest:
    entries: list
    labels: tuple
    root: str = "."  # relative image paths are resolved against this directory
    version: int = MANIFEST_VERSION

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.image_path)
        return p if p.is_absolute() else Path(self.root) / p

    def split(self, name: str) -> list:
        return [e for e in self.entries if e.split == name]

    def conditions(self, split: str = "test") -> list:
        return sorted({e.condition for e in self.split(split)})

    def validate(self, check_paths: bool = True) -> "DatasetManifest":
        if self.version != MANIFEST_VERSION:
            raise ManifestError(f"unsupported manifest version {self.version} (expected {MANIFEST_VERSION})")
        labels = set(self.labels)
        seen: dict = {}
        sources: dict = {}
        for e in self.entries:
            if e.split not in SPLITS:
                raise ManifestError(f"{e.image_id}: unknown split {e.split!r}")
            if e.label not in labels:
                raise ManifestError(f"{e.image_id}: label {e.label!r} not in declared set {sorted(labels)}")
            if e.image_id in seen:
                other = seen[e.image_id]
                kind = "appears in both" if other != e.split else "is duplicated in"
                raise ManifestError(f"image {e.image_id!r} {kind} {other!r} and {e.split!r}")
            seen[e.image_id] = e.split
            # variants of one source image must never straddle splits
            prev = sources.setdefault(e.source_id, e.split)
            if prev != e.split:
                raise ManifestError(f"source {e.source_id!r} leaks across splits {prev!r} and {e.split!r}")
            if check_paths and not self.resolve(e).is_file():
                raise ManifestError(f"{e.image_id}: missing image file {self.resolve(e)}")
        return self

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "labels": sorted(self.labels),
            "entries": [e.to_dict() for e in self.entries],
        }

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")
        return path


def load_manifest(path, check_paths: bool = True) -> DatasetManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        version = int(data["version"])
        entries = [
            ManifestEntry(str(d["image_id"]), str(d["image_path"]), str(d["label"]), str(d["split"]), dict(d.get("tags", {})))
            for d in data["entries"]
        ]
        labels = tuple(data["labels"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    return DatasetManifest(entries, labels, str(path.parent), version).validate(check_paths)
