"""Time the compiled chain kernel against the numpy fallback.

Usage: python benchmarks/bench_chain.py [--n 200] [--iterations 20000] [--repeat 3]
"""

import argparse
import time

from btvprior import _backend
from btvprior.mcmc import ChainConfig, PosteriorSpec, run_chain
from btvprior.priors import BtvPrior, Cs13Prior
from btvprior.skew_symmetric import SKEW_LOGISTIC, SKEW_NORMAL, SkewFamily, SkewSymmetricModel

CASES = [
    ("skew-normal, BTV(1/2,1/2)", SKEW_NORMAL, BtvPrior(0.5, 0.5, SKEW_NORMAL)),
    ("skew-logistic, BTV(1,1) approx", SKEW_LOGISTIC, BtvPrior(1, 1, SKEW_LOGISTIC, mode="approx")),
    ("skew-t3, CS13(0,2.5,6.5)", SkewFamily("skew-t", 3.0), Cs13Prior(0.0, 2.5, 6.5)),
]


def best_time(spec, config, backend, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        run_chain(spec, config, backend=backend)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200, help="sample size")
    parser.add_argument("--iterations", type=int, default=20000, help="sweeps per chain")
    parser.add_argument("--repeat", type=int, default=3, help="timings per case (best is reported)")
    args = parser.parse_args(argv)

    backends = _backend.available()
    config = ChainConfig(args.iterations, burn_in=args.iterations // 2, thin=10, seed=1)
    print(f"n={args.n}, {args.iterations} sweeps, backends: {', '.join(backends)}")
    print(f"{'case':34s}" + "".join(f"{b:>12s}" for b in backends) + ("     speed-up" if len(backends) > 1 else ""))
    for label, fam, prior in CASES:
        data = SkewSymmetricModel(fam, 0.0, 1.0, 2.0).sample(args.n, seed=3)
        spec = PosteriorSpec(fam, data, prior)
        t = [best_time(spec, config, b, args.repeat) for b in backends]
        line = f"{label:34s}" + "".join(f"{x:11.3f}s" for x in t)
        if len(t) > 1:
            line += f"{t[1] / t[0]:12.1f}x"
        print(line)


if __name__ == "__main__":
    main()
