"""Encrypted CNN inference: conv -> cubic act -> fc -> cubic act -> fc.

The batch stays packed one image per ciphertext row for the whole run.
Convolution outputs live at valid grid anchors of each channel ciphertext;
the first fully-connected layer consumes those channel ciphertexts
directly, with weight rows remapped onto grid positions (zero at invalid
anchors and pad slots, which also swallows the constant term the cubic
activation smears over every slot). Inner fc outputs are compacted to
row-major; the final fc output stays in its diagonal layout and is decoded
straight to logits.

Activation is a fixed cubic evaluated at depth two: x*x, then x2*x, then
one plaintext product per coefficient, so a layer costs
2*delta + delta_c budget bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import DepthExhaustedError, SimdBackend
from .conv import conv_layer, span_kernel
from .encodings import (EncodedMatrix, LayoutKind, decode_diagonal,
                        pack_image_batch)
from .linalg import compact_columns, reduce_add
from .matmul import he_matmul_partitioned, split_weight_groups
from .encodings import encode_transpose_extended

# Degree-three least-squares activation fits baked into the stock MNIST model.
STOCK_ACT1 = (-0.00015120704, 0.4610149, 2.0225089, -1.4511951)
STOCK_ACT2 = (-1.5650465, -0.9943767, 1.6794522, 0.5350255)


@dataclass(frozen=True)
class ConvSpec:
    kernels: np.ndarray  # (channels, k, k)
    biases: np.ndarray  # (channels,)

    @property
    def channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def k(self) -> int:
        return self.kernels.shape[1]


@dataclass(frozen=True)
class ActSpec:
    coeffs: tuple  # (c0, c1, c2, c3)


@dataclass(frozen=True)
class FcSpec:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]


@dataclass(frozen=True)
class NetworkSpec:
    input_h: int
    input_w: int
    layers: tuple

    def validate(self) -> "NetworkSpec":
        """Check layer chaining; returns self so calls can be inline."""
        h, w = self.input_h, self.input_w
        feats = None  # None while still an image grid
        for pos, layer in enumerate(self.layers):
            if isinstance(layer, ConvSpec):
                if pos != 0:
                    raise ValueError("conv layer must come first")
                if layer.k > min(h, w):
                    raise ValueError("kernel larger than image")
                feats = layer.channels * (h - layer.k + 1) * (w - layer.k + 1)
            elif isinstance(layer, ActSpec):
                if len(layer.coeffs) != 4:
                    raise ValueError("activation needs 4 coefficients")
            elif isinstance(layer, FcSpec):
                expect = feats if feats is not None else h * w
                if layer.in_dim != expect:
                    raise ValueError(
                        f"fc layer {pos} expects {expect} inputs, has {layer.in_dim}")
                feats = layer.out_dim
            else:
                raise ValueError(f"unknown layer type {type(layer).__name__}")
        if not self.layers or not isinstance(self.layers[-1], FcSpec):
            raise ValueError("network must end with an fc layer")
        return self

    @property
    def classes(self) -> int:
        return self.layers[-1].out_dim


# ------------------------------------------------------------ primitives

def eval_poly(backend: SimdBackend, ct, coeffs):
    """c0 + c1*x + c2*x^2 + c3*x^3 slot-wise, always at full depth.

    Two ciphertext square-and-extend muls, one plaintext product per
    non-constant coefficient, constant in through a fresh encryption. The
    cubic is evaluated even when trailing coefficients are zero so the
    budget cost is the same for every activation.
    """
    c0, c1, c2, c3 = (float(c) for c in coeffs)
    x2 = backend.mul(ct, ct)
    x3 = backend.mul(x2, ct)
    terms = [
        backend.encrypt(np.full(backend.params.slots, c0)),
        backend.cmul(ct, c1),
        backend.cmul(x2, c2),
        backend.cmul(x3, c3),
    ]
    return reduce_add(backend, terms)


def apply_activation(backend: SimdBackend, enc: EncodedMatrix,
                     coeffs) -> EncodedMatrix:
    """eval_poly over a packed matrix; note c0 lands on pad slots too."""
    return EncodedMatrix(eval_poly(backend, enc.ct, coeffs), enc.layout)


def _fc_block_matrix(part: EncodedMatrix, weight: np.ndarray, offset: int,
                     valid_hw) -> tuple[np.ndarray, int]:
    """Weight columns for one input part, remapped to its slot positions."""
    lay = part.layout
    p = weight.shape[0]
    if lay.kind is LayoutKind.IMAGE_GRID:
        if valid_hw is None:
            raise ValueError("grid input parts need valid_hw")
        oh, ow = valid_hw
        block = np.zeros((lay.grid_h * lay.grid_w, p))
        for a in range(oh):
            cols = weight[:, offset + a * ow: offset + (a + 1) * ow]
            for b in range(ow):
                block[a * lay.grid_w + b, :] = cols[:, b]
        return block, offset + oh * ow
    n_prev = lay.logical_width
    return weight[:, offset: offset + n_prev].T, offset + n_prev


def fc_layer(backend: SimdBackend, parts, spec: FcSpec, valid_hw=None,
             compact: bool = True, threads: int = 1,
             combine: str = "tree") -> EncodedMatrix:
    """Fully-connected layer over one or more packed input parts.

    Produces the diagonal(out_dim) product with the bias seeded into the
    accumulator, then folds it to row-major unless compact=False (the
    final layer is decoded straight from the diagonal layout).
    """
    parts = list(parts)
    m, f = parts[0].layout.rows, parts[0].layout.row_width
    p = spec.out_dim
    offset = 0
    b_blocks = []
    for part in parts:
        block, offset = _fc_block_matrix(part, spec.weight, offset, valid_hw)
        if p <= m:
            b_blocks.append(encode_transpose_extended(backend, block, m, f))
        else:
            b_blocks.append(split_weight_groups(backend, block, m, f))
    if offset != spec.in_dim:
        raise ValueError(
            f"input parts supply {offset} features, fc expects {spec.in_dim}")
    acc = np.tile(np.asarray(spec.bias, dtype=np.float64), (m, 1))
    out = he_matmul_partitioned(backend, parts, b_blocks, p, acc_init=acc,
                                threads=threads, combine=combine)
    if compact:
        return compact_columns(backend, out)
    return out


# -------------------------------------------------------------- pipeline

@dataclass
class InferenceResult:
    logits: np.ndarray
    depth_bits: int  # log_q minus the result budget: depth along the data path
    layer_depths: list = field(default_factory=list)  # (name, bits consumed)
    op_counts: dict = field(default_factory=dict)  # ledger deltas for this call


def _layer_names(net: NetworkSpec) -> list[str]:
    names, seen = [], {}
    for layer in net.layers:
        tag = {"ConvSpec": "conv", "ActSpec": "act", "FcSpec": "fc"}[
            type(layer).__name__]
        seen[tag] = seen.get(tag, 0) + 1
        names.append(f"{tag}-{seen[tag]}")
    return names


def infer(backend: SimdBackend, net: NetworkSpec, packed: EncodedMatrix,
          threads: int = 1, encrypted_kernels: bool = False,
          combine: str = "tree") -> InferenceResult:
    """Run the network over a packed batch; logits come back per image."""
    net.validate()
    lay = packed.layout
    if lay.kind is not LayoutKind.IMAGE_GRID or (lay.grid_h, lay.grid_w) != (
            net.input_h, net.input_w):
        raise ValueError("packed batch does not match the network geometry")
    before = backend.ledger.snapshot()
    parts = [packed]
    valid_hw = (net.input_h, net.input_w)
    names = _layer_names(net)
    budget = min(p.ct.budget_bits for p in parts)
    layer_depths = []
    for pos, (name, layer) in enumerate(zip(names, net.layers)):
        last = pos == len(net.layers) - 1
        try:
            if isinstance(layer, ConvSpec):
                plans = [span_kernel(layer.kernels[c], layer.biases[c],
                                     net.input_h, net.input_w, lay.rows,
                                     lay.row_width)
                         for c in range(layer.channels)]
                parts = conv_layer(backend, parts[0], plans, encrypted_kernels,
                                   threads, combine)
                valid_hw = (net.input_h - layer.k + 1, net.input_w - layer.k + 1)
            elif isinstance(layer, ActSpec):
                parts = [apply_activation(backend, p, layer.coeffs)
                         for p in parts]
            else:
                parts = [fc_layer(backend, parts, layer, valid_hw,
                                  compact=not last, threads=threads,
                                  combine=combine)]
        except DepthExhaustedError as e:
            raise DepthExhaustedError(f"budget exhausted in layer {name}: {e}") from e
        now = min(p.ct.budget_bits for p in parts)
        layer_depths.append((name, budget - now))
        budget = now
    out = parts[0]
    raw = backend.decrypt(out.ct)
    if out.layout.kind is LayoutKind.DIAGONAL:
        logits = decode_diagonal(raw, lay.rows, lay.row_width, out.layout.period)
    else:
        logits = raw.reshape(lay.rows, lay.row_width)[:, : out.layout.logical_width]
    after = backend.ledger.snapshot()
    return InferenceResult(
        logits=logits,
        depth_bits=backend.params.log_q - budget,
        layer_depths=layer_depths,
        op_counts={k: after[k] - before[k] for k in after},
    )


def infer_images(backend: SimdBackend, net: NetworkSpec, images,
                 row_width: int, **kw) -> InferenceResult:
    """Pack a normalized image batch and run infer."""
    packed = pack_image_batch(backend, images, row_width)
    return infer(backend, net, packed, **kw)


# ------------------------------------------------------------- reference

def _conv2d_valid(images: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Plain batched valid cross-correlation, accumulated tap by tap."""
    m, h, w = images.shape
    k = kernel.shape[0]
    oh, ow = h - k + 1, w - k + 1
    out = np.zeros((m, oh, ow))
    for u in range(k):
        for v in range(k):
            out += kernel[u, v] * images[:, u:u + oh, v:v + ow]
    return out


def reference_infer(net: NetworkSpec, images) -> np.ndarray:
    """Plaintext forward pass; the oracle the encrypted path must match."""
    net.validate()
    x = np.asarray(images, dtype=np.float64)
    feats = None
    for layer in net.layers:
        if isinstance(layer, ConvSpec):
            chans = [_conv2d_valid(x, layer.kernels[c]) + layer.biases[c]
                     for c in range(layer.channels)]
            x = np.stack(chans, axis=1)  # (m, C, oh, ow)
        elif isinstance(layer, ActSpec):
            c0, c1, c2, c3 = layer.coeffs
            x = c0 + c1 * x + c2 * x * x + c3 * x * x * x
        else:
            if feats is None:
                x = x.reshape(x.shape[0], -1)  # channel-major flatten
                feats = x.shape[1]
            x = x @ layer.weight.T + layer.bias
            feats = layer.out_dim
    return x


# --------------------------------------------------------------- presets

def stock_geometry() -> dict:
    """Published MNIST model geometry: 28x28, 4 kernels 3x3, 2704-64-10."""
    return dict(h=28, w=28, k=3, channels=4, hidden=64, classes=10,
                batch=32, row_width=1024)


def reduced_geometry() -> dict:
    """Small twin of the stock chain for fast end-to-end checks."""
    return dict(h=8, w=8, k=3, channels=2, hidden=8, classes=4,
                batch=8, row_width=128)


def random_network(rng: np.random.Generator, h: int = 28, w: int = 28,
                   k: int = 3, channels: int = 4, hidden: int = 64,
                   classes: int = 10, act1=STOCK_ACT1,
                   act2=STOCK_ACT2, **_ignored) -> NetworkSpec:
    """Random weights at fan-in scale so the cubics keep values tame."""
    def uni(shape, fan_in):
        s = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-s, s, size=shape)

    oh, ow = h - k + 1, w - k + 1
    fc1_in = channels * oh * ow
    return NetworkSpec(h, w, (
        ConvSpec(uni((channels, k, k), k * k), uni((channels,), k * k)),
        ActSpec(tuple(act1)),
        FcSpec(uni((hidden, fc1_in), fc1_in), uni((hidden,), fc1_in)),
        ActSpec(tuple(act2)),
        FcSpec(uni((classes, hidden), hidden), uni((classes,), hidden)),
    )).validate()
