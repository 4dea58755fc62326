"""Compression-forensics cues for learned-codec (JPEG AI style) images."""

__version__ = "0.1.0"
