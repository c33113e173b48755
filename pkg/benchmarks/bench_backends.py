"""Compare the compiled kernels with the numpy fallback on representative workloads.

    python benchmarks/bench_backends.py [--repeat 3] [--json out.json]

Each workload runs under both backends; the table reports the best wall time
of ``--repeat`` runs and the speed-up, and checks that both backends return
the same result.
"""
from __future__ import annotations

import argparse
import json
import time
from fractions import Fraction

import numpy as np

from dwelljsr import _backend
from dwelljsr.dwell import DwellSystem, dwell_bounds_one
from dwelljsr.ipa import certify, find_candidate
from dwelljsr.linalg import logm
from dwelljsr.lp import LpProblem, solve
from dwelljsr.polytope import SymPolytope, gauge
from dwelljsr.weighted import WeightedSystem, rho_k_exact

A1 = np.array([[1.0, 1.0], [0.0, 1.0]])
A2 = 0.8 * np.array([[1.0, 0.0], [1.0, 1.0]])


def ex1() -> WeightedSystem:
    return WeightedSystem((A1, A2), (1.0, 2.0))


def lp_batch():
    rng = np.random.default_rng(0)
    out = []
    for _ in range(40):
        m, n = 30, 60
        A = rng.uniform(-1, 2, (m, n))
        p = LpProblem(c=-rng.uniform(0, 1, n), A_ub=A, b_ub=rng.uniform(1, 2, m))
        out.append(round(solve(p).objective_value, 9))
    return out


def gauge_batch():
    rng = np.random.default_rng(1)
    V = rng.standard_normal((80, 4))
    return [round(gauge(V, x), 9) for x in rng.standard_normal((40, 4))]


def rho_k():
    return round(rho_k_exact(ex1(), 14)[0], 12)


def closed_paths():
    rng = np.random.default_rng(2)
    ws = WeightedSystem(tuple(rng.standard_normal((3, 3)) for _ in range(3)), (1.0, 1.5, 2.0))
    c = find_candidate(ws, 9)
    return round(c.rho_c, 12), c.modes


def example1_ipa():
    c, out = certify(ex1())
    return round(c.rho_c, 12), out.status.value, out.polytope.size


def dwell_tenth():
    B1 = np.array([[0.0, 0.0], [1.0, 0.0]])
    B2 = logm(np.array([[1.0, 1.0], [-1.0, 0.0]]))
    ds = DwellSystem((B1, B2), (Fraction(1, 2), Fraction(1)))
    rep = dwell_bounds_one(ds, Fraction(1, 10))
    return round(rep.beta, 12), round(rep.mu, 9), rep.iterations


WORKLOADS = {
    "simplex (40 LPs, 30x60)": lp_batch,
    "polytope gauge (40 points, 80 vertices)": gauge_batch,
    "rho_k exact, Example 1, k=14": rho_k,
    "closed-path search, 3 modes, length 9": closed_paths,
    "Example 1 certification": example1_ipa,
    "dwell bounds, tau = 1/10": dwell_tenth,
}


def best_time(fn, repeat: int):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None, help="also write the timings as JSON")
    args = ap.parse_args(argv)

    backends = _backend.available()
    if "compiled" not in backends:
        print("compiled kernels are not built; timing the python backend only")
    before = _backend.BACKEND
    rows = []
    try:
        for name, fn in WORKLOADS.items():
            row = {"workload": name}
            results = {}
            for b in backends:
                _backend.use(b)
                row[b], results[b] = best_time(fn, args.repeat)
            row["agree"] = len({repr(r) for r in results.values()}) == 1
            rows.append(row)
    finally:
        _backend.use(before)

    width = max(len(r["workload"]) for r in rows)
    print(f"{'workload':<{width}}  {'python':>10}  {'compiled':>10}  {'speed-up':>8}  agree")
    for r in rows:
        comp = r.get("compiled")
        speed = f"{r['python'] / comp:8.1f}" if comp else f"{'n/a':>8}"
        comp_s = f"{comp:10.4f}" if comp else f"{'n/a':>10}"
        print(f"{r['workload']:<{width}}  {r['python']:10.4f}  {comp_s}  {speed}  {'yes' if r['agree'] else 'NO'}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
