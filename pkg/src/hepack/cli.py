"""Command line front end: infer, verify, bench."""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .backend import BackendParams, DepthExhaustedError, SlotSimulator
from .bench import run_bench
from .mnist import image_blocks, load_idx_images, load_mnist
from .network import infer_images, random_network, stock_geometry
from .verify import run_all
from .weights_io import WeightsParseError, load_weights_csv


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--batch", type=int, default=32, help="images per block")
    sub.add_argument("--logq", type=int, default=1200, help="fresh budget bits")
    sub.add_argument("--logn", type=int, default=16, help="ring degree exponent")
    sub.add_argument("--delta", type=int, default=45,
                     help="bits burned per ciphertext-ciphertext mul")
    sub.add_argument("--delta-c", type=int, default=20,
                     help="bits burned per plaintext-mask mul")
    sub.add_argument("--threads", type=int, default=1, help="worker threads")
    sub.add_argument("--seed", type=int, default=0, help="rng seed")
    sub.add_argument("--encrypted-kernels", action="store_true",
                     help="combine conv kernels as ciphertexts, not masks")
    sub.add_argument("--sequential", action="store_true",
                     help="force a single-threaded schedule")


def _params(args) -> BackendParams:
    return BackendParams(log_n=args.logn, log_q=args.logq,
                         delta_bits=args.delta, delta_c_bits=args.delta_c)


def _threads(args) -> int:
    return 1 if args.sequential else max(1, args.threads)


def cmd_infer(args) -> int:
    net = load_weights_csv(args.weights)
    params = _params(args)
    if args.batch < 1:
        raise ValueError(f"batch must be at least 1, got {args.batch}")
    if params.slots % args.batch:
        raise ValueError(f"batch {args.batch} must divide {params.slots} slots")
    row_width = params.slots // args.batch
    if args.labels:
        images, labels = load_mnist(args.images, args.labels)
    else:
        images, labels = load_idx_images(args.images), None
    if images.shape[1:] != (net.input_h, net.input_w):
        raise ValueError(
            f"images are {images.shape[1]}x{images.shape[2]}, network wants "
            f"{net.input_h}x{net.input_w}")
    backend = SlotSimulator(params)
    blocks = image_blocks(images, args.batch)
    start = time.perf_counter()
    rows, correct, seen = [], 0, 0
    depth_bits = 0
    for bi, (block, valid) in enumerate(blocks):
        res = infer_images(backend, net, block, row_width,
                           threads=_threads(args),
                           encrypted_kernels=args.encrypted_kernels)
        depth_bits = res.depth_bits
        guesses = res.logits.argmax(axis=1)
        for i in range(valid):
            rows.append((seen + i, res.logits[i], guesses[i]))
        if labels is not None:
            want = labels[seen: seen + valid]
            hits = int((guesses[:valid] == want).sum())
            correct += hits
            print(f"block {bi + 1}/{len(blocks)}: {hits}/{valid} correct")
        seen += valid
    wall = time.perf_counter() - start
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for idx, logits, guess in rows:
            cells = ",".join(repr(float(v)) for v in logits)
            fh.write(f"{idx},{cells},{guess}\n")
    totals = backend.ledger.snapshot()
    print(f"wrote {len(rows)} predictions to {args.out}")
    if labels is not None:
        print(f"accuracy {correct}/{seen} = {correct / max(seen, 1):.4f}")
    print(f"depth {depth_bits}/{params.log_q} bits; ledger "
          f"mul={totals['mul']} cmul={totals['cmul']} rot={totals['rot']} "
          f"add={totals['add']} rescale_bits={totals['consumed_bits']}")
    print(f"wall {wall:.2f}s, threads {_threads(args)}")
    return 0


def cmd_verify(args) -> int:
    results = run_all(args.seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_bench(args) -> int:
    params = _params(args)
    if args.weights:
        net = load_weights_csv(args.weights)
        source = args.weights
    else:
        g = stock_geometry()
        net = random_network(np.random.default_rng(args.seed), **g)
        source = f"random stock geometry (seed {args.seed})"
    if args.batch < 1:
        raise ValueError(f"batch must be at least 1, got {args.batch}")
    if params.slots % args.batch:
        raise ValueError(f"batch {args.batch} must divide {params.slots} slots")
    report = run_bench(net, params, args.batch, threads=_threads(args),
                       encrypted_kernels=args.encrypted_kernels, seed=args.seed)
    print(f"network: {source}")
    print(f"batch {report.batch} x row_width {report.row_width} "
          f"({params.slots} slots), threads {report.threads}")
    print(f"{'layer':<8}{'mul':>8}{'cmul':>8}{'rot':>8}{'add':>8}{'depth':>8}")
    for c in report.predicted:
        print(f"{c.name:<8}{c.mul:>8}{c.cmul:>8}{c.rot:>8}{c.add:>8}{c.depth_bits:>8}")
    want = {k: sum(getattr(c, k) for c in report.predicted)
            for k in ("mul", "cmul", "rot", "add")}
    got = report.result.op_counts
    print(f"{'total':<8}{want['mul']:>8}{want['cmul']:>8}{want['rot']:>8}"
          f"{want['add']:>8}{sum(c.depth_bits for c in report.predicted):>8}")
    print(f"{'measured':<8}{got['mul']:>8}{got['cmul']:>8}{got['rot']:>8}"
          f"{got['add']:>8}{report.result.depth_bits:>8}")
    print("op counts match closed form" if report.counts_match
          else "MISMATCH between measured and predicted op counts")
    print(f"wall {report.wall_seconds:.2f}s")
    return 0 if report.counts_match else 1


def main(argv=None) -> int:
    top = argparse.ArgumentParser(
        prog="hepack",
        description="row-packed homomorphic matrix kernels and CNN inference")
    subs = top.add_subparsers(dest="command", required=True)

    p_infer = subs.add_parser("infer", help="classify an IDX image file")
    p_infer.add_argument("--weights", required=True, help="network CSV")
    p_infer.add_argument("--images", required=True, help="IDX image file")
    p_infer.add_argument("--labels", help="IDX label file (prints accuracy)")
    p_infer.add_argument("--out", default="predictions.csv",
                         help="prediction CSV path")
    _add_common(p_infer)
    p_infer.set_defaults(fn=cmd_infer)

    p_verify = subs.add_parser("verify", help="run the oracle-equivalence suite")
    _add_common(p_verify)
    p_verify.set_defaults(fn=cmd_verify)

    p_bench = subs.add_parser("bench", help="time one batch and audit op counts")
    p_bench.add_argument("--weights", help="network CSV (default: random)")
    _add_common(p_bench)
    p_bench.set_defaults(fn=cmd_bench)

    args = top.parse_args(argv)
    try:
        return args.fn(args)
    except (WeightsParseError, ValueError, OSError, DepthExhaustedError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
