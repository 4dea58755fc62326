"""
Colour correlations after 4:2:0 processing
==========================================

A learned codec of this family stores chroma at half resolution.  Pushing an
image through YUV 4:2:0 and back makes the highpass residuals of R, G and B
move together, and the row-wise correlation rho picks that up.
"""

import numpy as np

from jpegai_forensics.codecs import CodecSettings, encode_decode
from jpegai_forensics.cue_color import extract_color_features, preprocess_only
from jpegai_forensics.harness.synth import textured_image

# a handful of procedurally textured 512x512 images
images = [textured_image(512, seed=s) for s in range(8)]


def mean_rho(img, channel="R"):
    return extract_color_features(img, 512)[channel].values.mean()


# chroma resampling alone already lifts the correlation
for img in images[:4]:
    print(f"original {mean_rho(img):.3f}   4:2:0 round trip {mean_rho(preprocess_only(img)):.3f}")

# the simulated latent codec adds quantization on top of the resampling
for step in (4, 8, 16, 32):
    codec = CodecSettings("sim_latent", step)
    rho = np.mean([mean_rho(encode_decode(im, codec).decoded, "B") for im in images])
    print(f"sim_latent step {step:>2}: mean rho(b) {rho:.3f}")
