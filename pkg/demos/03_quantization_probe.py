"""
Probing latents for rounding
============================

phi(y_c) is the cosine between a latent channel and its rounded copy.
Compression leaves two traces in the probe's latents.  Surviving
coefficients sit near the integer grid, and coarse quantization empties whole
channels, which score 0.  The second trace pulls the mean down, so the mean
alone says little.  The per-channel pattern is what the forest separates
from decoder output that was never quantized.
"""

import numpy as np

from jpegai_forensics.codecs import CodecSettings, encode_decode
from jpegai_forensics.cue_quant import channel_phi, extract_quant_features, mean_phi
from jpegai_forensics.harness.synth import decoder_synthesized_image, textured_image

# the scalar itself
print(channel_phi([1.0, -3.0, 2.0]), channel_phi([0.4, 1.6, -2.5]), channel_phi([0.4, 1.6, -2.5], "truncated"))

probe = CodecSettings("sim_latent", 6, options={"preset": "c320"})
pristine = [textured_image(300, seed=s) for s in range(6)]
compressed = [encode_decode(im, probe).decoded for im in pristine]
synthetic = [decoder_synthesized_image(300, seed=100 + s) for s in range(6)]

for name, imgs in (("pristine", pristine), ("compressed", compressed), ("synthesized", synthetic)):
    for mode in ("full", "truncated"):
        phi = np.mean([mean_phi(extract_quant_features(im, probe, mode)) for im in imgs])
        print(f"{name:12s} {mode:9s} mean phi {phi:.3f}")
