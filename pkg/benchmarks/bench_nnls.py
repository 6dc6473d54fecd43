"""Time the banded NNLS solve and a full decomposition on each kernel backend.

    python benchmarks/bench_nnls.py [--repeat 20] [--sizes 300 1200 4800]
"""
import argparse
import timeit

import numpy as np

from edadecomp.deconv import biexp_kernel, convolve, nnls_ridge_solve
from edadecomp.kernels import available_backends
from edadecomp.pipeline import decompose
from edadecomp.preprocess import Signal
from edadecomp.simulator import SimConfig, synthesize


def phasic_like(n, rng):
    kernel = biexp_kernel()
    p = rng.uniform(0, 1, n) * (rng.random(n) < 0.025)
    return convolve(p, kernel.taps) + rng.normal(0, 0.03, n), kernel


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def format_row(label, backends, times):
    row = f"{label:<22}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
    if len(times) > 1:
        row += f"{times[backends.index('python')] / times[backends.index('compiled')]:>9.1f}x"
    return row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--sizes", type=int, nargs="+", default=[300, 1200, 4800])
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = available_backends()

    print(f"{'case':<22}" + "".join(f"{b:>12}" for b in backends) + (f"{'speedup':>10}" if len(backends) > 1 else ""))
    for n in args.sizes:
        y, kernel = phasic_like(n, rng)
        ref = nnls_ridge_solve(y, kernel, backend="python").x
        times = []
        for b in backends:
            assert np.allclose(nnls_ridge_solve(y, kernel, backend=b).x, ref, atol=1e-9)
            times.append(best_of(lambda: nnls_ridge_solve(y, kernel, backend=b), args.repeat))
        print(format_row(f"nnls N={n}", backends, times))

    truth = synthesize(SimConfig(seed=1))
    sig = Signal(truth.noisy["snr20"], 4.0)
    times = [best_of(lambda: decompose(sig, backend=b), max(3, args.repeat // 4)) for b in backends]
    print(format_row("decompose 1200", backends, times))


if __name__ == "__main__":
    main()
