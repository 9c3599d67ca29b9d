"""Rotation/mask primitives over row-packed ciphertexts.

All helpers take the backend first and an EncodedMatrix, and return a new
EncodedMatrix. Costs per call (asserted by the test suite):

shift_rows            1 rot (fast path), or 2 rot + 2 cmul + 1 add; step 0 free
broadcast_row_sums    2*log2(f) rot + 2*log2(f) add + 1 cmul
broadcast_col_sums    log2(rows) rot + log2(rows) add
window_sums           2*(k-1) rot + 2*(k-1) add + 1 cmul
rotate_within_rows    2 rot + 2 cmul + 1 add; amount 0 free
compact_columns       f/p cmul + (f/p - 1) rot + (f/p - 1) add

Filter masks are built once per shape, cached, and read-only.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np

from .backend import CipherVec, SimdBackend
from .encodings import (EncodedMatrix, LayoutKind, MatrixLayout,
                        diagonal_slot_column, grid_layout, row_major_layout)


# ---------------------------------------------------------------- masks

def _frozen(buf: np.ndarray) -> np.ndarray:
    flat = buf.reshape(-1)
    flat.flags.writeable = False
    return flat


@lru_cache(maxsize=None)
def make_matmul_filter(rows: int, row_width: int, step: int) -> np.ndarray:
    """1 at slot (i, (i + step) % row_width) for every row i, else 0."""
    buf = np.zeros((rows, row_width))
    idx = (np.arange(rows) + step) % row_width
    buf[np.arange(rows), idx] = 1.0
    return _frozen(buf)


@lru_cache(maxsize=None)
def make_group_filter(rows: int, row_width: int, period: int, base: int,
                      width: int, step: int) -> np.ndarray:
    """Filter for a column group of a split product.

    Row i's value this iteration belongs to output column
    j = base + ((i + step) % width); it is placed at the diagonal-layout
    column for (i, j) under the full period. With base 0 and
    width == period this is exactly make_matmul_filter.
    """
    buf = np.zeros((rows, row_width))
    for i in range(rows):
        j = base + ((i + step) % width)
        buf[i, diagonal_slot_column(i, j, period, row_width)] = 1.0
    return _frozen(buf)


@lru_cache(maxsize=None)
def make_conv_filter(rows: int, row_width: int, h: int, w: int, k: int,
                     di: int, dj: int) -> np.ndarray:
    """1 at grid anchors congruent to the kernel-span offset (di, dj).

    Anchors (a, b) with a % k == di, b % k == dj and the full k x k
    window in range, replicated across every image row of the batch.
    """
    buf = np.zeros((rows, row_width))
    for a in range(di, h - k + 1, k):
        for b in range(dj, w - k + 1, k):
            buf[:, a * w + b] = 1.0
    return _frozen(buf)


@lru_cache(maxsize=None)
def make_valid_region_mask(rows: int, row_width: int, h: int, w: int,
                           k: int) -> np.ndarray:
    """1 at every grid anchor where a k x k window fits, else 0."""
    buf = np.zeros((rows, row_width))
    for a in range(h - k + 1):
        buf[:, a * w: a * w + (w - k + 1)] = 1.0
    return _frozen(buf)


@lru_cache(maxsize=None)
def make_row_band_mask(rows: int, row_width: int, r0: int, r1: int) -> np.ndarray:
    """1 on whole rows r0..r1-1."""
    buf = np.zeros((rows, row_width))
    buf[r0:r1, :] = 1.0
    return _frozen(buf)


@lru_cache(maxsize=None)
def make_col_band_mask(rows: int, row_width: int, c0: int, c1: int) -> np.ndarray:
    """1 on columns c0..c1-1 of every row."""
    buf = np.zeros((rows, row_width))
    buf[:, c0:c1] = 1.0
    return _frozen(buf)


# ----------------------------------------------------------- primitives

def _log2(n: int, what: str) -> int:
    b = n.bit_length() - 1
    if n <= 0 or 1 << b != n:
        raise ValueError(f"{what} must be a power of two, got {n}")
    return b


def shift_rows(backend: SimdBackend, enc: EncodedMatrix, period: int,
               step: int) -> EncodedMatrix:
    """Advance a transpose-extended encoding by `step` columns.

    Input row r holds column (r % period) of the source matrix; output
    row r holds column ((r + step) % period). When period divides the row
    count a single row rotation is exact; otherwise the wrapped tail rows
    are patched from one extra rotation under band masks.
    """
    m, f = enc.layout.rows, enc.layout.row_width
    if not 0 < period <= m:
        raise ValueError(f"period must be in 1..{m}, got {period}")
    if not 0 <= step < period:
        raise ValueError(f"step must be in 0..{period - 1}, got {step}")
    if step == 0:
        return EncodedMatrix(enc.ct, enc.layout)
    if m % period == 0:
        return EncodedMatrix(backend.rot(enc.ct, step * f), enc.layout)
    head = backend.cmul(backend.rot(enc.ct, step * f),
                        make_row_band_mask(m, f, 0, m - step))
    tail = backend.cmul(backend.rot(enc.ct, (step - period) * f),
                        make_row_band_mask(m, f, m - step, m))
    return EncodedMatrix(backend.add(head, tail), enc.layout)


def broadcast_row_sums(backend: SimdBackend, enc: EncodedMatrix) -> EncodedMatrix:
    """Fill every slot of row i with the sum of row i.

    Rotate-and-add doubling puts the exact row total in column 0 of each
    row (columns past 0 pick up wrapped garbage); that column is masked
    out and broadcast back across the row by a reverse doubling ladder.
    """
    m, f = enc.layout.rows, enc.layout.row_width
    steps = _log2(f, "row_width")
    acc = enc.ct
    for t in range(steps):
        acc = backend.add(acc, backend.rot(acc, 1 << t))
    acc = backend.cmul(acc, make_col_band_mask(m, f, 0, 1))
    for t in range(steps):
        acc = backend.add(acc, backend.rot(acc, -(1 << t)))
    return EncodedMatrix(acc, row_major_layout(m, f, f))


def broadcast_col_sums(backend: SimdBackend, enc: EncodedMatrix) -> EncodedMatrix:
    """Fill every slot with the total of its column across all rows.

    Row-stride rotations wrap around the ciphertext exactly, so the plain
    doubling ladder is already correct in every slot and no mask is needed.
    """
    m, f = enc.layout.rows, enc.layout.row_width
    steps = _log2(m, "rows")
    acc = enc.ct
    for t in range(steps):
        acc = backend.add(acc, backend.rot(acc, f << t))
    return EncodedMatrix(acc, row_major_layout(m, f, enc.layout.logical_width))


def window_sums(backend: SimdBackend, enc: EncodedMatrix, k: int) -> EncodedMatrix:
    """k x k window sums over each image, kept at valid anchors only.

    After k-1 single-slot rotations (horizontal) and k-1 row-stride
    rotations (vertical), slot (a, b) holds the sum of the window anchored
    there; anchors whose window would cross the grid edge picked up
    neighbours' values and are zeroed by the valid-region mask.
    """
    lay = enc.layout
    if lay.kind is not LayoutKind.IMAGE_GRID:
        raise ValueError("window_sums needs an image-grid layout")
    h, w = lay.grid_h, lay.grid_w
    if not 1 <= k <= min(h, w):
        raise ValueError(f"window {k} does not fit a {h}x{w} grid")
    acc = enc.ct
    spun = enc.ct
    for _ in range(k - 1):
        spun = backend.rot(spun, 1)
        acc = backend.add(acc, spun)
    spun = acc
    for _ in range(k - 1):
        spun = backend.rot(spun, w)
        acc = backend.add(acc, spun)
    acc = backend.cmul(acc, make_valid_region_mask(lay.rows, lay.row_width, h, w, k))
    return EncodedMatrix(acc, lay)


def rotate_within_rows(backend: SimdBackend, enc: EncodedMatrix,
                       amount: int) -> EncodedMatrix:
    """Cyclic left rotation by `amount` inside each row's logical window.

    Pad slots stay zero. Two real rotations: one brings the unwrapped
    part into place, one brings the wrapped head to the window tail; band
    masks cut each to its columns.
    """
    window = enc.layout.logical_width
    m, f = enc.layout.rows, enc.layout.row_width
    if not 0 <= amount < window:
        raise ValueError(f"amount must be in 0..{window - 1}, got {amount}")
    if amount == 0:
        return EncodedMatrix(enc.ct, enc.layout)
    body = backend.cmul(backend.rot(enc.ct, amount),
                        make_col_band_mask(m, f, 0, window - amount))
    wrap = backend.cmul(backend.rot(enc.ct, amount - window),
                        make_col_band_mask(m, f, window - amount, window))
    return EncodedMatrix(backend.add(body, wrap), enc.layout)


def compact_columns(backend: SimdBackend, enc: EncodedMatrix) -> EncodedMatrix:
    """Fold a diagonal layout into row-major columns 0..p-1.

    Each width-p column band is masked out and rotated left to the row
    head; the diagonal placement guarantees column c carries output
    column c % p, so the folded bands interleave without collision.
    """
    lay = enc.layout
    if lay.kind is not LayoutKind.DIAGONAL:
        raise ValueError("compact_columns needs a diagonal layout")
    p, f = lay.period, lay.row_width
    if f % p:
        raise ValueError(f"period {p} must divide row_width {f}")
    pieces = []
    for t in range(f // p):
        piece = backend.cmul(enc.ct, make_col_band_mask(lay.rows, f, t * p, (t + 1) * p))
        if t:
            piece = backend.rot(piece, t * p)
        pieces.append(piece)
    return EncodedMatrix(reduce_add(backend, pieces),
                         row_major_layout(lay.rows, f, p))


# ---------------------------------------------------- combine / schedule

def reduce_add(backend: SimdBackend, cts: list[CipherVec],
               combine: str = "tree") -> CipherVec:
    """Deterministic sum of ciphertexts: balanced tree or left fold.

    Both cost len(cts) - 1 additions; the tree is the default because its
    floating-point result is independent of how the inputs were produced
    batch-wise or thread-wise.
    """
    if not cts:
        raise ValueError("nothing to add")
    if combine == "fold":
        acc = cts[0]
        for ct in cts[1:]:
            acc = backend.add(acc, ct)
        return acc
    if combine != "tree":
        raise ValueError(f"unknown combine mode {combine!r}")
    level = list(cts)
    while len(level) > 1:
        nxt = [backend.add(level[i], level[i + 1])
               for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def parallel_map(fn, items, threads: int = 1) -> list:
    """Map preserving order; a thread pool is used when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
