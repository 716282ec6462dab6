#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the two convolution stages at their production shapes (500-sample
windows, batch 32) plus pooling and one full model forward/backward step.

    python benchmarks/bench_kernels.py [--batch 32] [--repeats 10]
"""

import argparse
import time

import numpy as np

from vibfault.kernels import _numpy_core

try:
    from vibfault.kernels import _compiled
except ImportError:
    _compiled = None


def timeit(fn, repeats):
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats * 1e3  # ms


def bench_backends(label, make_call, repeats):
    numpy_ms = timeit(make_call(_numpy_core), repeats)
    if _compiled is None:
        print(f"{label:<24} numpy {numpy_ms:8.2f} ms   compiled     n/a")
        return
    compiled_ms = timeit(make_call(_compiled), repeats)
    print(f"{label:<24} numpy {numpy_ms:8.2f} ms   compiled {compiled_ms:8.2f} ms"
          f"   speedup {numpy_ms / compiled_ms:5.2f}x")


def conv_cases(batch):
    rng = np.random.default_rng(0)
    cases = []
    for name, in_ch, length, out_ch, k in (
            ("conv1 (64f k100)", 1, 500, 64, 100),
            ("conv2 (32f k50)", 64, 401, 32, 50)):
        x = rng.standard_normal((batch, in_ch, length), dtype=np.float32)
        w = rng.standard_normal((out_ch, in_ch, k), dtype=np.float32)
        b = np.zeros(out_ch, dtype=np.float32)
        dy = rng.standard_normal((batch, out_ch, length - k + 1),
                                 dtype=np.float32)
        cases.append((name, x, w, b, dy))
    return cases


def bench_model_step(batch, repeats):
    from vibfault.model import ModelConfig, build_model, init_params
    model = init_params(
        build_model(ModelConfig(window_len=500, class_count=14)), seed=0)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((batch, 500)).astype(np.float32)
    labels = rng.integers(0, 14, size=batch)

    def step():
        logits = model.forward(x, training=True)
        _, probs = model.loss(logits, labels)
        model.backward(model.loss_backward(probs, labels))

    ms = timeit(step, repeats)
    from vibfault.kernels import BACKEND
    print(f"full model fwd+bwd ({BACKEND} backend, batch {batch}): {ms:.1f} ms")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--repeats", type=int, default=10)
    args = parser.parse_args()

    print(f"batch size {args.batch}, {args.repeats} repeats, float32\n")
    for name, x, w, b, dy in conv_cases(args.batch):
        bench_backends(f"{name} forward",
                       lambda impl, x=x, w=w, b=b: (lambda: impl.conv1d_forward(x, w, b)),
                       args.repeats)
        bench_backends(f"{name} backward",
                       lambda impl, x=x, w=w, dy=dy: (lambda: impl.conv1d_backward(x, w, dy)),
                       args.repeats)

    rng = np.random.default_rng(2)
    xp = rng.standard_normal((args.batch, 32, 352), dtype=np.float32)
    bench_backends("maxpool (4,4) forward",
                   lambda impl: (lambda: impl.maxpool1d_forward(xp, 4, 4)),
                   args.repeats)
    print()
    bench_model_step(args.batch, max(3, args.repeats // 2))


if __name__ == "__main__":
    main()
