#!/usr/bin/env python3
"""Calibration driver for the acceptance-suite tolerances.

Runs the acceptance-scale Monte Carlo studies against their independent
oracles and prints the observed statistics.  The frozen tolerances in
tests/test_acceptance.py are these numbers with headroom (~2x) -- rerun this
after any change to the integration kernels before touching a tolerance.
"""

import time

import numpy as np

from pathwise import (
    BkConfig,
    GeneratorSpec,
    Partition,
    bk_integral,
    brownian_path,
    doleans_dade,
    functional_path,
    ito_residual,
    make_bk_functional,
    make_qv_functional,
    qv_level_path,
    st_decomposition,
    CadlagPath,
)
from pathwise.registry import (
    ito_demo_functional,
    running_square_functional,
    square_functional,
)


def tic(label, t0):
    print(f"  [{label}: {time.time() - t0:.1f}s]")
    return time.time()


def main():
    t0 = time.time()

    # --- criterion 2c: Brownian self-integral vs the classical Ito identity
    spec = GeneratorSpec("brownian", level=14, seed=20260301)
    cfg = BkConfig(max_level=10)
    sups = []
    for k in range(200):
        w = brownian_path(spec, k)
        res = bk_integral(w, w, 0, cfg)
        x = w.values[:, 0]
        oracle = (x**2 - x[0] ** 2 - w.grid.times) / 2.0
        sups.append(np.abs(res.path.values[:, 0] - oracle).max())
    print(f"2c  self-integral median sup gap: {np.median(sups):.4e}  q90 {np.quantile(sups,0.9):.4e}")
    t0 = tic("2c", t0)

    # --- criterion 3: S QV vs t across BK levels, and vs realized variance
    meds = {}
    for n in (6, 8, 10):
        sups_t, sups_rv = [], []
        for k in range(200):
            w = brownian_path(spec, k)
            b = qv_level_path(w, 0, 0, n).values[:, 0]
            rv = np.concatenate([[0.0], np.cumsum(np.diff(w.values[:, 0]) ** 2)])
            sups_t.append(np.abs(b - w.grid.times).max())
            sups_rv.append(np.abs(b - rv).max())
        meds[n] = (np.median(sups_t), np.median(sups_rv))
        print(f"3   qv level {n}: median sup|B-t| {meds[n][0]:.4e}  vs realized {meds[n][1]:.4e}")
    t0 = tic("3", t0)

    # --- criterion 5: residual decay, driver level 16, pi in {10, 12, 14}
    driver = GeneratorSpec("brownian", level=16, seed=20260302)
    cfg14 = BkConfig(max_level=14)
    functionals = {
        "square": square_functional(0),
        "doleans-dade": doleans_dade(cfg14),
        "running-square": running_square_functional(0),
        "ito-process": ito_demo_functional(cfg14),
    }
    ens = 64
    for name, F in functionals.items():
        sups = np.zeros((3, ens))
        for k in range(ens):
            w = brownian_path(driver, k)
            for li, lev in enumerate((10, 12, 14)):
                sups[li, k] = ito_residual(F, w, Partition.dyadic(1.0, lev), cfg14).residual_sup
        med = np.median(sups, axis=1)
        mesh = np.array([2.0**-10, 2.0**-12, 2.0**-14])
        slope = np.polyfit(np.log(mesh), np.log(med), 1)[0]
        print(f"5   {name}: medians {med} slope {slope:.3f}")
        t0 = tic(f"5 {name}", t0)

    # --- criterion 6: Doleans-Dade identity at level 14
    E = doleans_dade(cfg14)
    sups = []
    for k in range(200):
        w = brownian_path(spec, k)
        ep = functional_path(E, w)
        res = bk_integral(ep, w, 0, cfg14)
        sups.append(np.abs(ep.values[:, 0] - 1.0 - res.path.values[:, 0]).max())
    print(f"6   DD identity median sup: {np.median(sups):.4e}  q90 {np.quantile(sups,0.9):.4e}")
    t0 = tic("6", t0)

    # --- criterion 9: sum-T of the pure-BK functionals at level 14
    cfg12 = BkConfig(max_level=12)
    pi14 = Partition.dyadic(1.0, 14)
    Z = lambda p: CadlagPath(p.grid, np.sin(p.values[:, 0]), p.horizon)
    for name, F in (("qv", make_qv_functional(0, 0, cfg12)),
                    ("bk-sin", make_bk_functional(Z, 0, cfg12, check=False))):
        tsums = []
        for k in range(5):
            w = brownian_path(spec, k)
            _, T = st_decomposition(F, w, pi14)
            tsums.append(abs(T.values[-1, 0]))
        print(f"9   sum-T {name}: max {max(tsums):.3e}")
        t0 = tic(f"9 {name}", t0)


if __name__ == "__main__":
    main()
