"""Blockwise orthonormal 2-D DCT on planes whose sides are multiples of the block size."""

import numpy as np
from scipy.fft import dctn, idctn


def pad_to_multiple(plane: np.ndarray, block: int) -> np.ndarray:
    h, w = plane.shape
    ph, pw = (-h) % block, (-w) % block
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def block_dct(plane: np.ndarray, block: int) -> np.ndarray:
    """Returns ``block*block x H/block x W/block``; channel index is ``u*block + v``."""
    h, w = plane.shape
    tiles = plane.reshape(h // block, block, w // block, block).transpose(1, 3, 0, 2)
    coeffs = dctn(tiles, axes=(0, 1), norm="ortho")
    return coeffs.reshape(block * block, h // block, w // block)


def block_idct(coeffs: np.ndarray, block: int) -> np.ndarray:
    _, nby, nbx = coeffs.shape
    tiles = idctn(coeffs.reshape(block, block, nby, nbx), axes=(0, 1), norm="ortho")
    return tiles.transpose(2, 0, 3, 1).reshape(nby * block, nbx * block)
