"""Shared helpers for the test suite."""

import numpy as np

from hepack import BackendParams, SlotSimulator


def sim(slots: int, **kw) -> SlotSimulator:
    return SlotSimulator(BackendParams.for_slots(slots, **kw))


def ledger_delta(backend, before: dict) -> dict:
    after = backend.ledger.snapshot()
    return {k: after[k] - before[k] for k in after}


def conv_oracle(images: np.ndarray, kernel: np.ndarray, bias: float = 0.0) -> np.ndarray:
    """Valid cross-correlation accumulated tap by tap, plus bias."""
    m, h, w = images.shape
    k = kernel.shape[0]
    oh, ow = h - k + 1, w - k + 1
    out = np.zeros((m, oh, ow))
    for u in range(k):
        for v in range(k):
            out += kernel[u, v] * images[:, u:u + oh, v:v + ow]
    return out + bias
