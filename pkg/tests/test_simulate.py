import math

import numpy as np
import pytest

from pathwise import (
    CadlagPath,
    GeneratorSpec,
    brownian_path,
    dyadic_refinement,
    ensemble,
    generate,
    ito_euler,
    make_state_functional,
    substream,
)
from pathwise.registry import anticipating_functional, coordinate_functional


def const_coeff(c):
    F = make_state_functional(lambda t, x: c, label=f"const{c}")
    F._pointwise_f = lambda t, x: c
    return F


class TestSpec:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            GeneratorSpec("heston")

    def test_rejects_bad_level(self):
        with pytest.raises(ValueError):
            GeneratorSpec("brownian", level=0)


class TestBrownian:
    def test_same_seed_bit_identical(self):
        spec = GeneratorSpec("brownian", dimension=3, level=8, seed=11)
        a, b = brownian_path(spec, 4), brownian_path(spec, 4)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.grid.times, b.grid.times)

    def test_counter_based_substreams(self):
        spec = GeneratorSpec("brownian", level=8, seed=11)
        a, b = brownian_path(spec, 0), brownian_path(spec, 1)
        assert not np.array_equal(a.values, b.values)
        # stream k is a pure function of (seed, k), independent of call order
        r0 = substream(11, 5).standard_normal(4)
        _ = substream(11, 7).standard_normal(4)
        assert np.array_equal(r0, substream(11, 5).standard_normal(4))

    def test_starts_at_zero_infinite_lifetime_dyadic_grid(self):
        spec = GeneratorSpec("brownian", dimension=2, level=6, horizon=2.0, seed=1)
        p = brownian_path(spec, 0)
        assert np.all(p.eval(0.0) == 0.0)
        assert p.lifetime is None
        assert np.array_equal(p.grid.times, dyadic_refinement(2.0, 6).times)

    def test_terminal_mean_clt_bound(self):
        # |mean of w(T)| <= 3 sqrt(T) / sqrt(n) at n = 10^4
        spec = GeneratorSpec("brownian", level=5, seed=123)
        n = 10_000
        terminal = [brownian_path(spec, k).eval(1.0)[0] for k in range(n)]
        assert abs(np.mean(terminal)) <= 3.0 / math.sqrt(n)

    def test_terminal_variance_matches_horizon(self):
        spec = GeneratorSpec("brownian", level=5, horizon=1.0, seed=321)
        n = 10_000
        sq = [brownian_path(spec, k).eval(1.0)[0] ** 2 for k in range(n)]
        # Var(w_T^2) = 2 T^2: tolerance 3 T sqrt(2/n)
        assert abs(np.mean(sq) - 1.0) <= 3.0 * math.sqrt(2.0 / n)

    def test_increment_scaling(self):
        spec = GeneratorSpec("brownian", level=10, seed=7)
        p = brownian_path(spec, 0)
        inc = np.diff(p.values[:, 0])
        dt = 2.0**-10
        assert np.std(inc) == pytest.approx(math.sqrt(dt), rel=0.1)


class TestItoEuler:
    def test_degenerate_reproduces_brownian_exactly(self):
        spec = GeneratorSpec("ito_euler", level=8, seed=9)
        mu = [const_coeff(0.0)]
        sig = [[const_coeff(1.0)]]
        e = ito_euler(mu, sig, spec, 3)
        w = brownian_path(GeneratorSpec("brownian", level=8, seed=9), 3)
        assert np.array_equal(e.values, w.values)

    def test_pure_drift_is_time_on_grid(self):
        spec = GeneratorSpec("ito_euler", level=8, seed=9)
        e = ito_euler([const_coeff(1.0)], [[const_coeff(0.0)]], spec, 0)
        assert np.array_equal(e.values[:, 0], e.grid.times)

    def test_geometric_martingale_mean(self):
        # driftless dX = X dW started at 1: terminal mean stays near 1
        spec = GeneratorSpec("ito_euler", level=7, seed=55)
        mu = [const_coeff(0.0)]
        sig = [[coordinate_functional(0)]]
        n = 400
        vals = []
        for k in range(n):
            grid, = (dyadic_refinement(1.0, 7),)
            p = ito_euler(mu, sig, spec, k)
            vals.append(1.0 + p.eval(1.0)[0])  # shift: scheme starts at 0 here
        # dX = (1 + X) dW: terminal mean of (1 + X) is 1, Var ~ e - 1
        assert abs(np.mean(vals) - 1.0) <= 3.0 * math.sqrt((math.e - 1.0) / n)

    def test_non_causal_coefficient_rejected(self):
        spec = GeneratorSpec("ito_euler", level=5, seed=2)
        with pytest.raises(ValueError, match="non-causal"):
            ito_euler([anticipating_functional()], [[const_coeff(1.0)]], spec, 0)

    def test_shape_validation(self):
        spec = GeneratorSpec("ito_euler", dimension=2, level=4, seed=2)
        with pytest.raises(ValueError):
            ito_euler([const_coeff(0.0)], [[const_coeff(1.0)]], spec, 0)


class TestGenerateDispatch:
    def test_brownian_kind(self):
        p = generate(GeneratorSpec("brownian", level=5, seed=3), 0)
        assert isinstance(p, CadlagPath)

    def test_euler_kind_needs_coefficients(self):
        with pytest.raises(ValueError):
            generate(GeneratorSpec("ito_euler", level=5, seed=3), 0)

    def test_local_vol_kind_dispatches(self):
        spec = GeneratorSpec(
            "local_vol", level=5, seed=3,
            drift=[const_coeff(0.0)], vol=[[const_coeff(1.0)]],
        )
        p = generate(spec, 0)
        w = generate(GeneratorSpec("brownian", level=5, seed=3), 0)
        assert np.array_equal(p.values, w.values)

    def test_ensemble_matches_indexed_generation(self):
        spec = GeneratorSpec("brownian", level=5, seed=3)
        paths = ensemble(spec, 4)
        assert len(paths) == 4
        assert np.array_equal(paths[2].values, generate(spec, 2).values)
