#!/usr/bin/env python3
"""Smoke test for the pcs_py extension module.

Run from the repo root after building the extension:

    cargo build -p pcs-py
    cp target/debug/libpcs_py.so python/pcs_py.so
    python3 python/smoke_test.py
"""

import math
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import pcs_py


def make_cloud(n, p, seed):
    rng = random.Random(seed)
    return [[rng.gauss(0.0, 1.0) for _ in range(p)] for _ in range(n)]


def main():
    # subset size and breakdown bound
    assert pcs_py.default_h(100, 2) == 52
    num, den, value = pcs_py.breakdown_bound(100, 52)
    assert (num, den) == (49, 100) and abs(value - 0.49) < 1e-15

    # dataset construction and accessors
    rows = make_cloud(14, 2, seed=42)
    data = pcs_py.Dataset(rows)
    assert data.n == 14 and data.p == 2
    assert data.rows()[0] == rows[0]
    in_gp, witness = pcs_py.check_general_position(data)
    assert in_gp and witness is None

    # exact fit: optimal subset has minimal index among a few random h-subsets
    fit = pcs_py.solve_exact(data)
    h = pcs_py.default_h(14, 2)
    assert fit["h"] == h and len(fit["h_star"]) == h
    assert all(1 <= i <= 14 for i in fit["h_star"])
    assert fit["index_value"] >= 0.0
    rng = random.Random(7)
    for _ in range(5):
        subset = sorted(rng.sample(range(1, 15), h))
        assert pcs_py.incongruence_index(data, subset) >= fit["index_value"] - 1e-12

    # the reported location/scatter match the subset estimate
    loc, scatter = pcs_py.estimate(data, fit["h_star"])
    assert all(abs(a - b) < 1e-15 for a, b in zip(loc, fit["location"]))
    flat = [scatter[r][c] for r in range(2) for c in range(2)]
    assert all(abs(a - b) < 1e-15 for a, b in zip(flat, fit["scatter"]))

    # randomized mode is seed-deterministic
    r1 = pcs_py.solve_randomized(data, seed=3, n_starts=60, k_directions=40)
    r2 = pcs_py.solve_randomized(data, seed=3, n_starts=60, k_directions=40)
    assert r1["h_star"] == r2["h_star"]
    assert r1["index_value"] == r2["index_value"]

    # point-mass contamination below the breakdown point barely moves the fit
    bad = pcs_py.contaminate(data, c=2, distance=1e6, seed=9, direction=[1.0, 0.0])
    fit_bad = pcs_py.solve_exact(bad)
    shift = math.dist(fit["location"], fit_bad["location"])
    assert shift < 1.0, f"location shifted by {shift}"
    assert not any(i > 12 for i in fit_bad["h_star"]), "outliers entered H*"

    # affine equivariance
    ok, loc_err, scat_err = pcs_py.equivariance_trial(data, seed=5)
    assert ok, (loc_err, scat_err)

    print("smoke test passed")


if __name__ == "__main__":
    main()
