"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times the four kernels on workloads taken from the package itself: the
product and marginal of the fixture message, the brute-force joint of a
random network, and accumulation of that joint onto a few variables.
Results are checked for agreement before anything is timed.
"""
import argparse
import timeit

import numpy as np

from nestjt import kernels
from nestjt.fixtures import munin1, random_network
from nestjt.model import marginalize, multiply_all
from nestjt.oracle import joint_table, marginal_of_joint


def workloads():
    s = munin1(seed=0)
    s1, s2, s3, v1 = s.potentials
    big = multiply_all([s1, s2])
    spec = random_network(np.random.default_rng(3), 18, cards=(2, 3))
    joint = joint_table(spec, limit=10**8)
    return {
        "multiply 2.6M": lambda: multiply_all([s1, s2, s3, v1]),
        "marginalize 2.6M -> 525k": lambda: marginalize(big, s.target),
        "joint product": lambda: joint_table(spec, limit=10**8),
        "accumulate joint": lambda: marginal_of_joint(joint, [0, 5, 9]),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available()
    if "cython" not in backends:
        print("compiled kernels not built; timing the numpy fallback only")
    results = {}
    for name in backends:
        kernels.use(name)
        jobs = workloads()
        outputs = {k: f() for k, f in jobs.items()}
        results[name] = {k: min(timeit.repeat(f, number=1, repeat=args.repeat)) for k, f in jobs.items()}
        results[name]["_out"] = outputs
    if len(backends) == 2:
        for k in results["python"]["_out"]:
            a, b = results["cython"]["_out"][k], results["python"]["_out"][k]
            assert a.domain == b.domain and np.allclose(a.values, b.values, rtol=1e-12, atol=0), k
    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for k in results[backends[0]]:
        if k == "_out":
            continue
        row = f"{k:<28}" + "".join(f"{results[b][k] * 1e3:>10.1f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{results['python'][k] / results['cython'][k]:>11.2f}x"
        print(row)


if __name__ == "__main__":
    main()
