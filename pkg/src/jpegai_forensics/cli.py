"""Command line front end.

Exit status: 0 on success, 2 for configuration errors, 3 for data errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .classify import ForestConfig, ModelFormatError, model_load, model_save, rf_predict, rf_train
from .codecs import (
    CodecError,
    CodecSettings,
    LatentUnavailableError,
    RateUnavailableError,
    UnsupportedSettingsError,
    get_codec,
    recompress_chain,
)
from .cue_rd import CHAIN_LENGTH
from .harness.corpus import CorpusError, CorpusSpec, build_corpus
from .harness.experiment import (
    CUES,
    ExperimentConfig,
    ExperimentError,
    extract_entries,
    read_cue_matrix,
    run_detection_experiment,
    write_cue_features,
)
from .harness.manifest import SPLITS, ManifestError, load_manifest
from .harness.report import FORMATS, ReportError, emit_report
from .harness.spectrum import avg_fourier_spectrum, grid_peak_ratio, mean_magnitude_spectrum
from .imagecore import ColorspaceError, psnr, read_image

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


class ConfigError(ValueError):
    pass


def _config(build):
    """Run ``build`` and report any failure as a configuration error."""
    try:
        return build()
    except (ValueError, TypeError, KeyError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def _read_json(path) -> dict:
    return _config(lambda: json.loads(Path(path).read_text()))


def _codec_settings(args):
    if not getattr(args, "codec", None):
        return None
    opts = _read_json_text(args.codec_options)

    def build():
        s = CodecSettings(args.codec, float(args.strength), args.seed or 0, opts)
        get_codec(s)  # construction validates the settings
        return s

    return _config(build)


def _read_json_text(text):
    if not text:
        return {}
    return _config(lambda: dict(json.loads(text)))


def _experiment_config(args) -> ExperimentConfig:
    base = ExperimentConfig.from_dict(_read_json(args.config)) if getattr(args, "config", None) else ExperimentConfig()
    updates = {"workers": args.workers}
    codec = _codec_settings(args)
    if codec is not None:
        updates["codec"] = codec
    for name in ("patch", "mode", "channel", "form"):
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = value
    forest = base.forest
    if getattr(args, "trees", None):
        forest = _config(lambda: replace(forest, n_trees=args.trees))
    if args.seed is not None:
        forest = replace(forest, seed=args.seed)
    updates["forest"] = forest
    return _config(lambda: replace(base, **updates))


def cmd_corpus_build(args) -> int:
    spec = _config(lambda: CorpusSpec.from_dict(_read_json(args.spec)))
    if args.seed is not None:
        spec.seed = args.seed
    manifest = build_corpus(spec, args.out, workers=args.workers)
    print(f"wrote {len(manifest.entries)} entries to {Path(args.out) / 'manifest.json'}")
    return EXIT_OK


def cmd_features_extract(args) -> int:
    manifest = load_manifest(args.manifest)
    config = _experiment_config(args)
    entries = manifest.split(args.split) if args.split else manifest.entries
    feats = extract_entries(manifest, entries, args.cue, config, workers=args.workers)
    write_cue_features(args.out, args.cue, [(e.image_id, f) for e, f in zip(entries, feats)], config)
    print(f"wrote {args.cue} features for {len(entries)} images to {args.out}")
    return EXIT_OK


def _labelled(manifest, ids, X, split):
    by_id = {e.image_id: e for e in manifest.entries}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise ExperimentError(f"{len(missing)} feature rows are not in the manifest, e.g. {missing[0]!r}")
    keep = [k for k, i in enumerate(ids) if by_id[i].split == split]
    if not keep:
        raise ExperimentError(f"no feature rows belong to the {split} split")
    return X[keep], [by_id[ids[k]].label for k in keep]


def cmd_train(args) -> int:
    manifest = load_manifest(args.manifest)
    config = _experiment_config(args)
    ids, X = read_cue_matrix(args.features, args.cue, config.channel)
    Xtr, ytr = _labelled(manifest, ids, X, "train")
    model = rf_train(Xtr, ytr, config.forest)
    model_save(model, args.model)
    print(f"trained {config.forest.n_trees} trees on {len(ytr)} samples -> {args.model}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = model_load(args.model)
    ids, X = read_cue_matrix(args.features, args.cue, args.channel or "B")
    labels, proba = rf_predict(model, X)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["image_id", "label", *(f"p_{c}" for c in model.classes)])
        for i, lab, p in zip(ids, labels, proba):
            w.writerow([i, lab, *(repr(float(v)) for v in p)])
    print(f"wrote {len(ids)} predictions to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    config = _experiment_config(args)
    report = run_detection_experiment(manifest, args.cue, config, feature_dir=args.feature_dir)
    emit_report(report, args.out, args.format, include_runtime=args.include_runtime)
    print(f"accuracy {report.overall['accuracy']:.3f} on {report.n_test} test images -> {args.out}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    images = [read_image(p) for p in args.images]
    spec = avg_fourier_spectrum(images, args.filter, rectify=args.rectify)
    np.save(args.out, spec)
    ratio = grid_peak_ratio(mean_magnitude_spectrum(images, args.filter, rectify=args.rectify), args.period)
    print(f"grid peak ratio (period {args.period}): {ratio:.3f}")
    if args.png:
        from .imagecore import ImageBuffer, write_image

        gray = np.clip(np.floor(spec * 255 + 0.5), 0, 255).astype(np.uint8)
        write_image(ImageBuffer.from_array(np.repeat(gray[..., None], 3, axis=2)), args.png)
    return EXIT_OK


def cmd_recompress_curve(args) -> int:
    img = read_image(args.image)
    strengths = _config(lambda: [float(s) for s in args.strengths.split(",")])
    opts = _read_json_text(args.codec_options)
    rows = []
    for strength in strengths:
        settings = CodecSettings(args.codec, strength, args.seed or 0, opts)
        chain = recompress_chain(img, settings, args.k)
        prev = img
        for k, res in enumerate(chain, start=1):
            rows.append([strength, k, res.bpp, psnr(img, res.decoded), psnr(prev, res.decoded)])
            prev = res.decoded
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["strength", "k", "rate", "p_inp", "p_inc"])
        for r in rows:
            w.writerow([repr(r[0]), r[1], *(repr(float(v)) for v in r[2:])])
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _add_codec_args(p, required=False):
    p.add_argument("--codec", required=required, help="codec id (identity, baseline_dct, sim_latent, external)")
    p.add_argument("--strength", type=float, default=8.0)
    p.add_argument("--codec-options", default=None, help="JSON object of codec options")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jpegai-forensics", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None, help="the single source of randomness")
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    sub = parser.add_subparsers(dest="command", required=True)

    corpus = sub.add_parser("corpus").add_subparsers(dest="action", required=True)
    p = corpus.add_parser("build", help="materialize a corpus from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corpus_build)

    features = sub.add_parser("features").add_subparsers(dest="action", required=True)
    p = features.add_parser("extract", help="write cue features for manifest images")
    p.add_argument("--cue", choices=CUES, required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=SPLITS)
    p.add_argument("--patch", type=int)
    p.add_argument("--mode", choices=("full", "truncated"))
    p.add_argument("--form", choices=("ncc", "cosine"))
    _add_codec_args(p)
    p.set_defaults(func=cmd_features_extract)

    p = sub.add_parser("train", help="fit a forest on train-split feature rows")
    p.add_argument("--cue", choices=CUES, required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--trees", type=int)
    p.add_argument("--channel", choices=("R", "G", "B"))
    p.add_argument("--config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label feature rows with a saved model")
    p.add_argument("--cue", choices=CUES, required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--channel", choices=("R", "G", "B"))
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="full train/test experiment and report")
    p.add_argument("--cue", choices=CUES, required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--feature-dir")
    p.add_argument("--trees", type=int)
    p.add_argument("--patch", type=int)
    p.add_argument("--mode", choices=("full", "truncated"))
    p.add_argument("--form", choices=("ncc", "cosine"))
    p.add_argument("--channel", choices=("R", "G", "B"))
    p.add_argument("--include-runtime", action="store_true")
    _add_codec_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("spectrum", help="average Fourier spectrum of residuals")
    p.add_argument("images", nargs="+")
    p.add_argument("--out", required=True, help=".npy output")
    p.add_argument("--png")
    p.add_argument("--filter", default="laplacian3")
    p.add_argument("--period", type=int, default=8)
    p.add_argument("--rectify", action="store_true")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("recompress-curve", help="rate and PSNR along a recompression chain")
    p.add_argument("--image", required=True)
    p.add_argument("--strengths", required=True, help="comma separated")
    p.add_argument("--k", type=int, default=CHAIN_LENGTH)
    p.add_argument("--out", required=True)
    _add_codec_args(p, required=True)
    p.set_defaults(func=cmd_recompress_curve)
    return parser


CONFIG_ERRORS = (ConfigError, UnsupportedSettingsError, LatentUnavailableError, RateUnavailableError)
DATA_ERRORS = (
    ManifestError, ModelFormatError, CorpusError, ExperimentError, ReportError,
    CodecError, ColorspaceError, OSError, ValueError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
