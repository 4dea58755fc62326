import sys
from pathlib import Path

import numpy as np
import pytest

from jpegai_forensics.harness.synth import textured_image

TESTS = Path(__file__).parent
FAKE_CODEC = [sys.executable, str(TESTS / "fake_codec.py")]

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def texture():
    return textured_image(96, seed=3)


@pytest.fixture(scope="session")
def record_criterion():
    """Collect one summary line per acceptance criterion."""

    def record(number, title, passed, detail):
        _ACCEPTANCE_LINES.append((number, f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}: {detail}"))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_rgb(h, w, seed=0):
    from jpegai_forensics.imagecore import ImageBuffer

    return ImageBuffer.from_array(np.random.default_rng(seed).integers(0, 256, (h, w, 3), dtype=np.uint8))
