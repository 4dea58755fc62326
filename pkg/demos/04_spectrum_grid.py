"""
Block grid in the average spectrum
==================================

Independent per-block coding errors show up as a lattice of peaks at
multiples of the block frequency once the residual is rectified.
"""

import sys

import numpy as np

from jpegai_forensics.codecs import CodecSettings, encode_decode
from jpegai_forensics.harness.spectrum import avg_fourier_spectrum, grid_peak_ratio, mean_magnitude_spectrum
from jpegai_forensics.harness.synth import noise_image
from jpegai_forensics.imagecore import ImageBuffer, write_image

noise = [noise_image(256, seed=s) for s in range(8)]
coded = [encode_decode(im, CodecSettings("sim_latent", 32)).decoded for im in noise]

for name, imgs in (("uncompressed", noise), ("sim_latent@32", coded)):
    ratio = grid_peak_ratio(mean_magnitude_spectrum(imgs, rectify=True))
    print(f"{name:14s} grid peak ratio {ratio:.2f}")

# save the normalized log spectrum of the coded set as a picture
out = sys.argv[1] if len(sys.argv) > 1 else "spectrum.png"
spec = avg_fourier_spectrum(coded, rectify=True)
gray = np.floor(spec * 255 + 0.5).astype(np.uint8)
write_image(ImageBuffer.from_array(np.repeat(gray[..., None], 3, axis=2)), out)
print("wrote", out)
