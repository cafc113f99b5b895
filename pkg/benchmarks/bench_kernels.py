"""Compare the compiled scoring kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--n 100000] [--repeat 5]

Runs each kernel on the same buffer with both backends, checks the results are
bit-identical, and reports the best-of-N time and the speed-up. The last rows
time complete scenario runs, where the event loop dominates.
"""
import argparse
import os
import random
import subprocess
import sys
import timeit
from array import array

from faultscape import _kernels_py, kernels


def compiled_module():
    try:
        from faultscape import _kernels
    except ImportError:
        return None
    return _kernels


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def scenario_time(name, pure, repeat):
    env = dict(os.environ, FAULTSCAPE_PURE_PYTHON="1" if pure else "0")
    code = (
        "import timeit, json, importlib.resources as r;"
        "from faultscape import parse_scenario, run;"
        f"cfg = parse_scenario(r.files('faultscape').joinpath('scenarios', '{name}.json').read_text());"
        f"print(min(timeit.repeat(lambda: run(cfg, 'scripted'), number=1, repeat={repeat})))"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=100_000, help="samples per buffer")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    fast = compiled_module()
    if fast is None:
        print("compiled kernels are not built; only the Python fallback is available")
        return 1
    rng = random.Random(args.seed)
    values = array("d", (rng.expovariate(1.0) for _ in range(args.n)))
    weights = array("d", (1.0 / args.n for _ in range(args.n)))
    tau = 1.0
    cases = [
        ("violation_score", lambda m: m.violation_score(values, tau)),
        ("violation_terms", lambda m: m.violation_terms(values, tau)),
        ("weighted_total", lambda m: m.weighted_total(values, weights)),
        ("window_sum", lambda m: m.window_sum(values, 0, args.n)),
        ("count_above", lambda m: m.count_above(values, tau)),
    ]
    print(f"n = {args.n}, best of {args.repeat}, default backend: {kernels.BACKEND}")
    print(f"{'kernel':<18}{'python ms':>12}{'compiled ms':>14}{'speed-up':>10}  identical")
    for name, call in cases:
        same = call(_kernels_py) == call(fast)
        slow_t = best(lambda: call(_kernels_py), args.repeat)
        fast_t = best(lambda: call(fast), args.repeat)
        print(f"{name:<18}{slow_t * 1e3:>12.3f}{fast_t * 1e3:>14.3f}{slow_t / fast_t:>9.1f}x  {same}")
    print(f"\n{'scenario run':<30}{'python ms':>12}{'compiled ms':>14}{'speed-up':>10}")
    for name in ("paper-cpu-stress", "paper-network-latency"):
        slow_t = scenario_time(name, True, args.repeat)
        fast_t = scenario_time(name, False, args.repeat)
        print(f"{name:<30}{slow_t * 1e3:>12.1f}{fast_t * 1e3:>14.1f}{slow_t / fast_t:>9.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
