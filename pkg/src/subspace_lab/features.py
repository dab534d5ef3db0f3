"""59-bin uniform LBP block histograms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

N_BINS = 59

# clockwise from the top-left neighbour; neighbour k sets bit k
_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def transitions(code: int) -> int:
    """Number of 0/1 changes around the circular 8-bit pattern."""
    rotated = ((code >> 1) | ((code & 1) << 7)) & 0xFF
    return bin(code ^ rotated).count("1")


def _build_table() -> np.ndarray:
    table = np.full(256, N_BINS - 1, dtype=np.int64)
    uniform = [c for c in range(256) if transitions(c) <= 2]
    table[uniform] = np.arange(len(uniform))
    return table


UNIFORM_TABLE = _build_table()


@dataclass(frozen=True)
class LbpParams:
    block: int = 16
    overlap: float = 0.5

    def __post_init__(self):
        if self.block < 1:
            raise ValueError(f"block must be >= 1, got {self.block}")
        if not 0 <= self.overlap < 1:
            raise ValueError(f"overlap must lie in [0, 1), got {self.overlap}")
        s = self.block * (1 - self.overlap)
        if s < 1 or abs(s - round(s)) > 1e-9:
            raise ValueError(f"block * (1 - overlap) = {s} is not a positive integer stride")

    @property
    def stride(self) -> int:
        return int(round(self.block * (1 - self.overlap)))


@dataclass(frozen=True)
class BlockLayout:
    blocks_y: int
    blocks_x: int
    # image rows/columns past the last full block, ignored
    dropped_rows: int
    dropped_cols: int

    @property
    def dim(self) -> int:
        return N_BINS * self.blocks_y * self.blocks_x


def lbp_codes(image) -> np.ndarray:
    """Raw 8-bit LBP codes of the interior pixels, shape ``(h-2, w-2)``."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or img.shape[0] < 3 or img.shape[1] < 3:
        raise ShapeError(f"LBP needs a 2-D image of at least 3x3, got shape {img.shape}")
    h, w = img.shape
    center = img[1:-1, 1:-1]
    codes = np.zeros((h - 2, w - 2), dtype=np.int64)
    for bit, (dy, dx) in enumerate(_OFFSETS):
        nbr = img[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        codes |= (nbr >= center).astype(np.int64) << bit
    return codes


def lbp_code_map(image) -> np.ndarray:
    """Uniform-LBP bin index (0..58) for each interior pixel."""
    return UNIFORM_TABLE[lbp_codes(image)]


def block_layout(shape: tuple[int, int], params: LbpParams) -> BlockLayout:
    h, w = shape
    b, s = params.block, params.stride
    if b > h or b > w:
        raise ShapeError(f"block {b} larger than image {h}x{w}")
    by = (h - b) // s + 1
    bx = (w - b) // s + 1
    return BlockLayout(by, bx, h - ((by - 1) * s + b), w - ((bx - 1) * s + b))


def lbp_block_histograms(image, params: LbpParams = LbpParams()) -> np.ndarray:
    """Concatenated per-block 59-bin histograms, each L1-normalised.

    Blocks tile the image (not the code map) in row-major order; a block
    counts the code-map pixels whose centre falls inside it. Blocks that
    contain no interior pixel contribute an all-zero histogram.
    """
    img = np.asarray(image, dtype=float)
    layout = block_layout(img.shape, params)
    codes = lbp_code_map(img)
    # one-hot image-space map, border pixels carry no code
    onehot = np.zeros((img.shape[0], img.shape[1], N_BINS))
    onehot[1:-1, 1:-1][np.arange(codes.shape[0])[:, None], np.arange(codes.shape[1]), codes] = 1.0
    b, s = params.block, params.stride
    out = np.empty((layout.blocks_y, layout.blocks_x, N_BINS))
    for i in range(layout.blocks_y):
        for j in range(layout.blocks_x):
            hist = onehot[i * s:i * s + b, j * s:j * s + b].sum(axis=(0, 1))
            total = hist.sum()
            out[i, j] = hist / total if total > 0 else hist
    return out.reshape(-1)
