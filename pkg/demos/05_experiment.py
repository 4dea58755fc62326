"""
A small detection experiment end to end
=======================================

Build a corpus, extract the colour cue, train the forest and print the
report as a markdown table.  The acceptance suite runs the same pipeline at
a larger scale.
"""

import sys
import tempfile

from jpegai_forensics.classify import ForestConfig
from jpegai_forensics.codecs import CodecSettings
from jpegai_forensics.harness.corpus import CorpusSpec, SourceGroup, build_corpus
from jpegai_forensics.harness.experiment import ExperimentConfig, run_detection_experiment
from jpegai_forensics.harness.report import to_markdown

out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="demo-corpus-")
steps = [CodecSettings("sim_latent", s) for s in (8, 16)]
spec = CorpusSpec(
    [SourceGroup("t", count=40, size=(256, 280), single=steps, split={"train": 0.5, "test": 0.5})],
    seed=1,
)
manifest = build_corpus(spec, out)
print(f"{len(manifest.entries)} images in {out}")

config = ExperimentConfig(forest=ForestConfig(n_trees=100), patch=256)
report = run_detection_experiment(manifest, "color", config)
print(to_markdown(report))
