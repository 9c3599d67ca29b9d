"""Closed-form cost model and benchmark runner.

The schedule of every layer is deterministic, so operation counts and the
budget depth of the data path can be predicted exactly from the geometry:

conv (per channel)   cmul 3k^2, rot 2k^2(k-1), add 2k^2(k-1)+k^2
                     (encrypted kernels: k^2 of the cmuls become muls)
act (per part)       2 mul, 3 cmul, 3 add
fc                   G*p iterations of [shift + mul + row-sum ladder
                     (2 log2 f rot, 2 log2 f add, 1 cmul) + filter cmul],
                     shift costing 1 rot per nonzero step, or 2 rot +
                     2 cmul + 1 add when the group width does not divide
                     the row count; + G*p accumulation adds; inner layers
                     add one column fold: f/p cmul, f/p - 1 rot and add.

Depth assumes weight ciphertexts are fresher than the data path (true
whenever the weights are encrypted at full budget), so only the data-side
rescales count: conv 3*delta_c (or delta + 2*delta_c encrypted), act
2*delta + delta_c, fc delta + 2*delta_c, + delta_c when compacted.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .backend import BackendParams, SimdBackend, SlotSimulator
from .network import (ActSpec, ConvSpec, FcSpec, InferenceResult, NetworkSpec,
                      infer_images)


def column_group_widths(p: int, rows: int) -> list[int]:
    """How split_weight_groups slices p output columns over `rows` rows."""
    widths, base = [], 0
    while base < p:
        widths.append(min(rows, p - base))
        base += widths[-1]
    return widths


@dataclass
class LayerCost:
    name: str
    mul: int = 0
    cmul: int = 0
    rot: int = 0
    add: int = 0
    depth_bits: int = 0


def predict_layer_costs(net: NetworkSpec, batch: int, row_width: int,
                        params: BackendParams,
                        encrypted_kernels: bool = False) -> list[LayerCost]:
    """Per-layer op counts and depth for one batch through the network."""
    net.validate()
    m, f = batch, row_width
    log2f = f.bit_length() - 1
    d, dc = params.delta_bits, params.delta_c_bits
    costs = []
    parts = 1
    names_seen: dict = {}
    for pos, layer in enumerate(net.layers):
        tag = {"ConvSpec": "conv", "ActSpec": "act", "FcSpec": "fc"}[
            type(layer).__name__]
        names_seen[tag] = names_seen.get(tag, 0) + 1
        cost = LayerCost(f"{tag}-{names_seen[tag]}")
        if isinstance(layer, ConvSpec):
            c, k = layer.channels, layer.k
            cost.rot = c * 2 * k * k * (k - 1)
            cost.add = c * (2 * k * k * (k - 1) + k * k)
            if encrypted_kernels:
                cost.mul = c * k * k
                cost.cmul = c * 2 * k * k
                cost.depth_bits = d + 2 * dc
            else:
                cost.cmul = c * 3 * k * k
                cost.depth_bits = 3 * dc
            parts = c
        elif isinstance(layer, ActSpec):
            cost.mul = 2 * parts
            cost.cmul = 3 * parts
            cost.add = 3 * parts
            cost.depth_bits = 2 * d + dc
        else:
            g, p = parts, layer.out_dim
            widths = column_group_widths(p, m)
            cost.mul = g * p
            cost.cmul = 2 * g * p
            cost.rot = g * p * 2 * log2f
            cost.add = g * p * 2 * log2f + g * p
            for w in widths:
                if m % w == 0:
                    cost.rot += g * (w - 1)
                else:
                    cost.rot += g * 2 * (w - 1)
                    cost.cmul += g * 2 * (w - 1)
                    cost.add += g * (w - 1)
            cost.depth_bits = d + 2 * dc
            if pos != len(net.layers) - 1:  # inner layers fold to row-major
                bands = f // p
                cost.cmul += bands
                cost.rot += bands - 1
                cost.add += bands - 1
                cost.depth_bits += dc
            parts = 1
        costs.append(cost)
    return costs


def predict_op_counts(net: NetworkSpec, batch: int, row_width: int,
                      params: BackendParams,
                      encrypted_kernels: bool = False) -> dict:
    costs = predict_layer_costs(net, batch, row_width, params, encrypted_kernels)
    return {
        "mul": sum(c.mul for c in costs),
        "cmul": sum(c.cmul for c in costs),
        "rot": sum(c.rot for c in costs),
        "add": sum(c.add for c in costs),
    }


def predict_depth_bits(net: NetworkSpec, batch: int, row_width: int,
                       params: BackendParams,
                       encrypted_kernels: bool = False) -> int:
    return sum(c.depth_bits for c in predict_layer_costs(
        net, batch, row_width, params, encrypted_kernels))


@dataclass
class BenchReport:
    result: InferenceResult
    predicted: list
    batch: int
    row_width: int
    threads: int
    wall_seconds: float

    @property
    def counts_match(self) -> bool:
        want = {k: sum(getattr(c, k) for c in self.predicted)
                for k in ("mul", "cmul", "rot", "add")}
        return all(self.result.op_counts[k] == want[k] for k in want)


def run_bench(net: NetworkSpec, params: BackendParams, batch: int,
              threads: int = 1, encrypted_kernels: bool = False,
              seed: int = 0) -> BenchReport:
    """One random batch through the network with timing and cost audit."""
    row_width = params.slots // batch
    rng = np.random.default_rng(seed)
    images = rng.uniform(0.0, 1.0, size=(batch, net.input_h, net.input_w))
    backend = SlotSimulator(params)
    start = time.perf_counter()
    result = infer_images(backend, net, images, row_width, threads=threads,
                          encrypted_kernels=encrypted_kernels)
    wall = time.perf_counter() - start
    predicted = predict_layer_costs(net, batch, row_width, params,
                                    encrypted_kernels)
    return BenchReport(result, predicted, batch, row_width, threads, wall)
