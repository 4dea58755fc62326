"""Subprocess adapter for codecs that live outside this package.

The configured command is called twice per image::

    <cmd> encode --strength <s> --in <png> --out <bin> --meta <json>
    <cmd> decode --in <bin> --out <png> [--latent <file>]

The meta JSON must hold integer ``bits_y`` and ``bits_z``; a codec that only
knows its total size may write ``bits_total`` instead, and the result is then
flagged with ``rates_reported=False``.  ``latent_file`` (optional, relative to
the meta file) or the ``--latent`` output points at a ``LAT1`` latent file.
"""

import json
import shlex
import subprocess
import tempfile
import threading
from pathlib import Path

from ..imagecore import ImageBuffer, read_image, write_image
from .base import (
    Codec,
    CodecError,
    CodecResult,
    LatentTensor,
    LatentUnavailableError,
    UnsupportedSettingsError,
    read_latent_file,
    require_rgb8,
)

STDERR_EXCERPT = 600


class ExternalCodec(Codec):
    codec_id = "external"
    deterministic = False

    def validate(self, settings):
        cmd = settings.options.get("command")
        if not cmd:
            raise UnsupportedSettingsError("external codec needs options['command']")
        self.command = shlex.split(cmd) if isinstance(cmd, str) else [str(c) for c in cmd]
        self.request_latent = bool(settings.options.get("request_latent", True))
        self.timeout = float(settings.options.get("timeout", 600))
        self._lock = threading.Lock()

    @property
    def exposes_latent(self):
        return self.request_latent

    def _run(self, args, step):
        try:
            proc = subprocess.run(
                self.command + args, capture_output=True, text=True, timeout=self.timeout, check=False
            )
        except FileNotFoundError as exc:
            raise CodecError(f"external codec {step}: cannot execute {self.command[0]!r}") from exc
        except subprocess.TimeoutExpired as exc:
            raise CodecError(f"external codec {step}: timed out after {self.timeout}s") from exc
        if proc.returncode != 0:
            excerpt = (proc.stderr or "").strip()[-STDERR_EXCERPT:]
            raise CodecError(f"external codec {step} failed with exit status {proc.returncode}: {excerpt}")

    def encode_decode(self, img: ImageBuffer) -> CodecResult:
        require_rgb8(img)
        with self._lock, tempfile.TemporaryDirectory(prefix="extcodec-") as tmp:
            tmp = Path(tmp)
            src, bitstream, meta_path = tmp / "in.png", tmp / "stream.bin", tmp / "meta.json"
            out, latent_path = tmp / "out.png", tmp / "latent.lat"
            write_image(img, src)
            self._run(
                ["encode", "--strength", repr(float(self.settings.strength)), "--in", str(src),
                 "--out", str(bitstream), "--meta", str(meta_path)],
                "encode",
            )
            decode_args = ["decode", "--in", str(bitstream), "--out", str(out)]
            if self.request_latent:
                decode_args += ["--latent", str(latent_path)]
            self._run(decode_args, "decode")

            try:
                meta = json.loads(meta_path.read_text())
            except (OSError, ValueError) as exc:
                raise CodecError(f"external codec wrote no readable meta file: {exc}") from exc
            rates_reported = "bits_y" in meta and "bits_z" in meta
            if rates_reported:
                bits_y, bits_z = meta["bits_y"], meta["bits_z"]
            elif "bits_total" in meta:
                bits_y, bits_z = meta["bits_total"], 0
            else:
                raise CodecError("external codec meta lacks bits_y/bits_z")
            if not all(isinstance(b, int) and not isinstance(b, bool) for b in (bits_y, bits_z)):
                raise CodecError("external codec meta bit counts must be integers")

            latent = None
            if meta.get("latent_file"):
                latent = read_latent_file(meta_path.parent / meta["latent_file"])
            elif self.request_latent and latent_path.exists():
                latent = read_latent_file(latent_path)
            try:
                decoded = read_image(out)
            except OSError as exc:
                raise CodecError(f"external codec produced no decodable image: {exc}") from exc
        return CodecResult(
            decoded=decoded,
            bits_y=bits_y,
            bits_z=bits_z,
            latent=latent,
            source_size=(img.height, img.width),
            rates_reported=rates_reported,
        )

    def analyze(self, img: ImageBuffer) -> LatentTensor:
        result = self.encode_decode(img)
        if result.latent is None:
            raise LatentUnavailableError("external codec did not provide a latent file")
        return result.latent
