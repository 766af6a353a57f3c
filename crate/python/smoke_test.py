#!/usr/bin/env python3
"""Smoke test for the rbh_lab extension module.

Build and install the module first:

    cargo build --release -p rbh-lab-py
    cp target/release/librbh_lab_py.so python/rbh_lab.so

then run `python3 python/smoke_test.py` from the repository root.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import rbh_lab


def check(name, cond):
    status = "ok" if cond else "FAILED"
    print(f"  {name}: {status}")
    if not cond:
        sys.exit(1)


def main():
    print("rbh_lab smoke test")

    # Nishimori conversion: T = 0.6 maps to p ~ 0.0344, T -> inf to 1/2.
    p = rbh_lab.nishimori_flip_probability(0.6)
    check("nishimori p(0.6) ~ 0.0344", abs(p - 0.0344) < 2e-4)
    check("nishimori p(T->inf) -> 1/2",
          abs(rbh_lab.nishimori_flip_probability(1e12) - 0.5) < 1e-9)

    # Exact order parameter at d = 2: 1 at zero temperature, 1/2 baseline.
    check("order_param_exact(beta=inf) == 1",
          abs(rbh_lab.order_param_exact(math.inf) - 1.0) < 1e-12)
    check("baseline == 1/2", abs(rbh_lab.baseline_order_param(4) - 0.5) < 1e-12)
    o1 = rbh_lab.order_param_exact(1.0)
    check("order_param_exact(beta=1) in (1/2, 1)", 0.5 < o1 < 1.0)

    # Monte Carlo estimate agrees with the exact value at d = 2.
    est = rbh_lab.order_param(2, 1.0, samples=2000, seed=7)
    check("MC matches exact within 5 sigma + 0.01",
          abs(est["o_corrected"] - o1) < 5 * est["stderr"] + 0.01)
    check("max_alpha(8, 4) == 3", rbh_lab.max_alpha(8, 4) == 3)

    # Loop-gas tail mass is below the analytic bound.
    tail, bound = rbh_lab.loop_tail(6, 1.0)
    check("exact tail <= analytic bound", tail <= bound)

    # Decoder: noiseless decoding never fails; exact method on tiny instances.
    r = rbh_lab.decode_failure_rate(4, 0.0, trials=50, seed=3)
    check("fail rate 0 at p = 0", r["fail_rate"] == 0.0)
    r = rbh_lab.decode_failure_rate(4, 0.01, trials=200, method="greedy", seed=3)
    check("fail rate small at p = 0.01", r["fail_rate"] < 0.15)

    # Gauging dualities and kernel property.
    check("gauge_verify(2)", rbh_lab.gauge_verify(2))

    # 2D disentangler: dense oracle, circuit checks, fixed-point bound.
    check("dense oracle", rbh_lab.disentangle_dense_oracle(1e-10))
    rep = rbh_lab.disentangle_verify(16, 1.0, trials=10, seed=11)
    check("some valid sink configs", rep["valid"] > 0)
    check("all conjugations ok", rep["all_conjugations_ok"])
    dist, bound = rbh_lab.lemma1_check(1.0)
    check("lemma1 distance <= bound", dist <= bound + 1e-10)

    # Invalid input surfaces as ValueError.
    try:
        rbh_lab.nishimori_flip_probability(-1.0)
        check("negative temperature rejected", False)
    except ValueError:
        check("negative temperature rejected", True)

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
