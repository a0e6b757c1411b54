"""Compiled vs pure-Python hot loops.

    python benchmarks/bench_kernels.py [--repeat 5]

Times each kernel function on inputs shaped like a 5000-clock episode, then
whole HEFT episodes and EIM redistributions with each backend swapped in.
"""
import argparse
import time

import numpy as np

from socsched import _kernels_py, kernels
from socsched.config import DEFAULT_CATALOG, DEFAULT_PLATFORM
from socsched.eim import redistribute
from socsched.env import NeuralScheduler
from socsched.heuristics import HEFTScheduler
from socsched.kernel import run
from socsched.neural import PolicyValueNet
from socsched.platform import Platform
from socsched.training import layout_for
from socsched.workload import JobTypeCatalog

try:
    from socsched import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def micro(impl, repeat):
    rng = np.random.default_rng(0)
    H = 5000
    rewards = -0.5 + 50.0 * (rng.random(H) < 0.03)
    starts = np.sort(rng.integers(0, H - 1, 1500))
    ends = np.minimum(starts + rng.integers(1, 60, 1500), H - 1)
    timelines = []
    for _ in range(2000):
        t, iv = 0, []
        for _ in range(int(rng.integers(0, 8))):
            t += int(rng.integers(0, 6))
            d = int(rng.integers(1, 15))
            iv.append((t, t + d))
            t += d
        timelines.append(iv)

    def ins():
        for iv in timelines:
            impl.insertion_start(iv, 3, 4)

    return {
        "insertion_start x2000": best_of(ins, repeat),
        "span_returns 1500 decisions": best_of(lambda: impl.span_returns(rewards, starts, ends, 0.999), repeat),
        "horizon_returns 1500 decisions": best_of(lambda: impl.horizon_returns(rewards, starts, 0.999), repeat),
    }


def swapped(impl, fn):
    saved = {k: getattr(kernels, k) for k in ("insertion_start", "span_returns", "horizon_returns")}
    for k in saved:
        setattr(kernels, k, getattr(impl, k))
    try:
        return fn()
    finally:
        for k, v in saved.items():
            setattr(kernels, k, v)


def end_to_end(impl, repeat, catalog, platform, buffer):
    heft = best_of(lambda: swapped(impl, lambda: run(catalog, platform, HEFTScheduler(), seed=1)), repeat)
    eim = best_of(lambda: swapped(impl, lambda: redistribute(buffer, 0.999, "span")), repeat)
    return {"HEFT episode (5000 clocks)": heft, "EIM redistribute (episode)": eim}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    catalog = JobTypeCatalog.load(DEFAULT_CATALOG)
    platform = Platform.load(DEFAULT_PLATFORM)
    lay = layout_for(catalog, platform, 3, False)
    rec = NeuralScheduler(PolicyValueNet(lay.size, platform.num_pes), lay, greedy=False, record=True)
    run(catalog, platform, rec, seed=0)

    backends = [("python", _kernels_py)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled extension not built; timing the fallback only")
    results = {}
    for name, impl in backends:
        r = micro(impl, args.repeat)
        r.update(end_to_end(impl, args.repeat, catalog, platform, rec.buffer))
        results[name] = r

    print(f"{'case':<34}" + "".join(f"{n:>12}" for n, _ in backends) + ("     speedup" if len(backends) > 1 else ""))
    for case in results["python"]:
        line = f"{case:<34}" + "".join(f"{results[n][case] * 1e3:>10.2f}ms" for n, _ in backends)
        if len(backends) > 1:
            line += f"{results['python'][case] / results['cython'][case]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
