"""Time the compiled kernels against the numpy fallback on one dataset.

Runs each kernel on points sampled from the overlapping scenario and prints
a per-kernel table with the speedup.  The two backends are imported side by
side, so a single process measures both.

Usage: python3 benchmarks/bench_backends.py [--count 2000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from modalmix import datagen, meanshift
from modalmix._backend import _kernels_py

try:
    from modalmix._backend import _kernels as _compiled
except ImportError:
    _compiled = None


def best_of(repeats, fn, *args):
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - started)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=2000, help="points to sample")
    parser.add_argument("--repeats", type=int, default=5, help="timed repeats, best kept")
    args = parser.parse_args()

    scenario = datagen.scenario_by_name("overlapping")
    mixture = scenario.true_mixture
    X, _ = scenario.sample(args.count, np.random.default_rng(0))
    p = mixture._packed
    tol = 1e-8 * meanshift.data_scale(mixture)

    kernels = {
        "log_component_terms": lambda impl: impl.log_component_terms(
            X, p.log_weights, p.means, p.chol, p.log_det
        ),
        "shift_steps": lambda impl: impl.shift_steps(
            X, p.log_weights, p.means, p.chol, p.log_det, p.prec, p.prec_mu
        ),
        "ascend": lambda impl: impl.ascend(
            X, p.log_weights, p.means, p.chol, p.log_det, p.prec, p.prec_mu,
            tol, 1000, meanshift.ASCENT_SLACK
        ),
    }

    print(f"n={args.count} d={mixture.dimension} G={mixture.n_components} "
          f"(best of {args.repeats})")
    header = f"{'kernel':<22}{'python':>12}{'compiled':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, call in kernels.items():
        t_py = best_of(args.repeats, call, _kernels_py)
        if _compiled is None:
            print(f"{name:<22}{t_py * 1e3:>10.2f}ms{'absent':>12}{'':>10}")
            continue
        t_c = best_of(args.repeats, call, _compiled)
        print(f"{name:<22}{t_py * 1e3:>10.2f}ms{t_c * 1e3:>10.2f}ms"
              f"{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
