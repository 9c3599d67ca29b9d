"""IDX image/label files and batch slicing.

Big-endian format: magic, then dimension sizes as 32-bit words, then the
payload bytes. Image files use magic 0x00000803 with dims (count, h, w);
label files 0x00000801 with dims (count,). Pixels come back as float64
scaled to [0, 1].
"""

from __future__ import annotations

import struct

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _read_be32(fh, path, what) -> int:
    raw = fh.read(4)
    if len(raw) != 4:
        raise ValueError(f"{path}: truncated {what}")
    return struct.unpack(">I", raw)[0]


def load_idx_images(path) -> np.ndarray:
    """Read an IDX image file; returns (count, h, w) float64 in [0, 1]."""
    with open(path, "rb") as fh:
        magic = _read_be32(fh, path, "magic")
        if magic != IMAGE_MAGIC:
            raise ValueError(
                f"{path}: bad image magic 0x{magic:08x}, want 0x{IMAGE_MAGIC:08x}")
        count = _read_be32(fh, path, "count")
        h = _read_be32(fh, path, "height")
        w = _read_be32(fh, path, "width")
        payload = fh.read(count * h * w)
    if len(payload) != count * h * w:
        raise ValueError(
            f"{path}: truncated payload, want {count * h * w} bytes, "
            f"got {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(count, h, w)
    return pixels.astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    """Read an IDX label file; returns (count,) int64."""
    with open(path, "rb") as fh:
        magic = _read_be32(fh, path, "magic")
        if magic != LABEL_MAGIC:
            raise ValueError(
                f"{path}: bad label magic 0x{magic:08x}, want 0x{LABEL_MAGIC:08x}")
        count = _read_be32(fh, path, "count")
        payload = fh.read(count)
    if len(payload) != count:
        raise ValueError(
            f"{path}: truncated payload, want {count} bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).astype(np.int64)


def load_mnist(images_path, labels_path) -> tuple[np.ndarray, np.ndarray]:
    """Load both files and cross-check the counts."""
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(
            f"{images.shape[0]} images but {labels.shape[0]} labels")
    return images, labels


def write_idx_images(path, images):
    """Write a uint8 (count, h, w) array as an IDX image file."""
    arr = np.asarray(images, dtype=np.uint8)
    count, h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, count, h, w))
        fh.write(arr.tobytes())


def write_idx_labels(path, labels):
    arr = np.asarray(labels, dtype=np.uint8).reshape(-1)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, arr.shape[0]))
        fh.write(arr.tobytes())


def image_blocks(images, batch: int) -> list[tuple[np.ndarray, int]]:
    """Slice into fixed-size blocks, zero-padding the last partial one.

    Returns (block, valid) pairs where only the first `valid` rows are
    real images. 10000 images at batch 32 give 313 blocks, the last one
    holding 16 zero rows of pad.
    """
    imgs = np.asarray(images, dtype=np.float64)
    if batch < 1:
        raise ValueError("batch must be positive")
    blocks = []
    for start in range(0, imgs.shape[0], batch):
        chunk = imgs[start:start + batch]
        valid = chunk.shape[0]
        if valid < batch:
            pad = np.zeros((batch - valid,) + imgs.shape[1:])
            chunk = np.concatenate([chunk, pad])
        blocks.append((chunk, valid))
    return blocks
