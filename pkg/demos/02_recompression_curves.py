"""
Rate and distortion along a recompression chain
===============================================

Recompressing with identical settings converges quickly: the second and
third passes change little.  How fast it converges depends on whether the
image had already been through the codec, which is what the 17-dim RD
feature summarizes.
"""

from jpegai_forensics.codecs import CodecSettings, encode_decode, recompress_chain
from jpegai_forensics.cue_rd import FEATURE_NAMES, extract_rd_features, flatten
from jpegai_forensics.harness.synth import textured_image
from jpegai_forensics.imagecore import psnr

img = textured_image(256, seed=1)

for settings in (CodecSettings("baseline_dct", 50), CodecSettings("sim_latent", 8)):
    print(settings.codec_id, settings.strength)
    prev = img
    for k, res in enumerate(recompress_chain(img, settings, 3), start=1):
        print(f"  k={k}  {res.bpp:.3f} bpp  p_inp {psnr(img, res.decoded):6.2f} dB  "
              f"p_inc {psnr(prev, res.decoded):6.2f} dB")
        prev = res.decoded

# single versus double compression, seen through the RD feature
extract = CodecSettings("sim_latent", 4, options={"preset": "c320"})
b1 = CodecSettings("sim_latent", 8)
single = encode_decode(img, b1).decoded
double = encode_decode(encode_decode(img, CodecSettings("sim_latent", 32)).decoded, b1).decoded
for name, x in (("single", single), ("double 32->8", double)):
    vec = flatten(extract_rd_features(x, extract))
    print(name, {n: round(float(v), 3) for n, v in zip(FEATURE_NAMES, vec) if n.startswith(("r", "p_"))})
