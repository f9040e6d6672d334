"""Compiled vs pure-Python interior-point kernel on the purification SDPs.

    python benchmarks/bench_kernel.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from qmimo.cloner import params_from_a
from qmimo.distribution import distribution_qr
from qmimo.haar import analytic_qr_2x2
from qmimo.sdp import PurificationModel, available_backends, tradeoff_curve
from qmimo.sdp.kernel import DEFAULT_MAX_ITER, DEFAULT_TOL, kernel_function


def instances():
    yield "K=2", analytic_qr_2x2(params_from_a(0.7), 0.245, 0.1, 0.3)
    yield "K=4", distribution_qr(4, 0.245, 0.1)


def bench_solve(qr, method, p, backend, repeat):
    model = PurificationModel(qr, method=method)
    sdp = model.problem(p)
    kern = kernel_function(backend)
    sizes = np.asarray(sdp.sizes, dtype=np.int64)

    def call():
        return kern(sdp.C, sdp.A, sdp.b, sizes, DEFAULT_TOL, DEFAULT_MAX_ITER)

    info = call()[3]
    number = max(1, repeat)
    t = min(timeit.repeat(call, number=number, repeat=3)) / number
    return t, float(info[2]), sdp.sizes


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = available_backends()
    print(f"backends: {backends}")
    print(f"{'instance':8} {'method':8} {'p':>5} {'blocks':>16} " + " ".join(f"{b + ' ms':>12}" for b in backends) + "  speedup  |dobj|")
    for name, qr in instances():
        methods = ("reduced", "full") if qr.K == 2 else ("reduced",)
        for method in methods:
            for p in (0.5, 1.0):
                res = {b: bench_solve(qr, method, p, b, args.repeat if qr.K == 2 or b == "compiled" else 1) for b in backends}
                times = [res[b][0] * 1e3 for b in backends]
                objs = [res[b][1] for b in backends]
                speed = res["python"][0] / res["compiled"][0] if "compiled" in res else float("nan")
                blocks = "x".join(str(s) for s in res[backends[0]][2])
                print(
                    f"{name:8} {method:8} {p:5.2f} {blocks:>16} "
                    + " ".join(f"{t:12.2f}" for t in times)
                    + f"  {speed:7.1f}  {max(objs) - min(objs):.1e}"
                )
    qr = analytic_qr_2x2(params_from_a(0.7), 0.245, 0.1, 0.3)
    for b in backends:
        t = min(timeit.repeat(lambda: tradeoff_curve(qr, backend=b), number=3, repeat=3)) / 3
        print(f"50-point K=2 trade-off curve, {b}: {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
