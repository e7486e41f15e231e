"""Reproducible generators of continuous-semimartingale sample paths.

Paths are embedded as step paths on dyadic grids; they are the operational
stand-in for working under many semimartingale laws at once (one generator
per law).  Ensembles use counter-based seed splitting: the stream of path k is
a pure function of (seed, k), so parallel and serial generation agree
bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .functional import CausalFunctional
from .paths import CadlagPath, Partition, stop

__all__ = ["GeneratorSpec", "substream", "brownian_path", "ito_euler", "generate", "ensemble"]

KINDS = ("brownian", "ito_euler", "local_vol")


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """What to simulate: scheme, dimension, horizon, dyadic grid level, seed.

    drift/vol hold the coefficient functionals for the Euler schemes ('vol' is
    a d x d matrix of functionals, rows = state coordinate, cols = noise).
    """

    kind: str
    dimension: int = 1
    horizon: float = 1.0
    level: int = 8
    seed: int = 0
    drift: Sequence[CausalFunctional] | None = None
    vol: Sequence[Sequence[CausalFunctional]] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.level < 1:
            raise ValueError("level must be >= 1")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "horizon": self.horizon,
            "level": self.level,
            "seed": self.seed,
        }


def substream(seed: int, path_index: int) -> np.random.Generator:
    """Independent stream for ensemble member path_index (counter-based)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=(int(path_index),))
    )


def _gaussian_increments(spec: GeneratorSpec, path_index: int) -> tuple[Partition, np.ndarray]:
    grid = Partition.dyadic(spec.horizon, spec.level)
    dt = spec.horizon * 2.0 ** (-spec.level)
    rng = substream(spec.seed, path_index)
    dw = rng.standard_normal((len(grid) - 1, spec.dimension)) * np.sqrt(dt)
    return grid, dw

def brownian_path(spec: GeneratorSpec, path_index: int = 0) -> CadlagPath:
    """d independent Brownian coordinates started at 0 on the dyadic grid."""
    if spec.kind != "brownian":
        raise ValueError("spec.kind must be 'brownian'")
    grid, dw = _gaussian_increments(spec, path_index)
    values = np.zeros((len(grid), spec.dimension))
    np.add.accumulate(dw, axis=0, out=values[1:])
    return CadlagPath(grid, values)


def ito_euler(
    mu: Sequence[CausalFunctional],
    sigma: Sequence[Sequence[CausalFunctional]],
    spec: GeneratorSpec,
    path_index: int = 0,
    check_causality_of_coefficients: bool = True,
) -> CadlagPath:
    """Explicit Euler stepping driven by Gaussian increments.

    Coefficients are evaluated on the path built so far, which makes the
    scheme adapted by construction.  Non-causal coefficients are rejected by a
    post-hoc spot check: for causal ones the check costs a few extra
    evaluations and can never fire.
    """
    d = spec.dimension
    mu = list(mu)
    sigma = [list(row) for row in sigma]
    if len(mu) != d or len(sigma) != d or any(len(row) != d for row in sigma):
        raise ValueError("need d drift functionals and a d x d volatility matrix")
    grid, dw = _gaussian_increments(spec, path_index)
    times = grid.times
    dt = np.diff(times)
    values = np.zeros((len(grid), d))
    for k in range(len(grid) - 1):
        prefix = CadlagPath._unsafe(
            Partition._unsafe(times[: k + 1]), values[: k + 1], spec.horizon
        )
        t = times[k]
        step = np.zeros(d)
        for i in range(d):
            step[i] = mu[i](t, prefix) * dt[k]
            for j in range(d):
                step[i] += sigma[i][j](t, prefix) * dw[k, j]
        values[k + 1] = values[k] + step
    path = CadlagPath(grid, values)
    if check_causality_of_coefficients:
        probes = times[[len(times) // 4, len(times) // 2, -1]]
        for F in list(mu) + [s for row in sigma for s in row]:
            if not all(F(t, path) == F(t, stop(path, t)) for t in probes):
                raise ValueError(f"non-causal coefficient {F.label!r}")
    return path


def generate(spec: GeneratorSpec, path_index: int = 0) -> CadlagPath:
    """Dispatch on spec.kind; 'local_vol' is Euler with pointwise coefficients."""
    if spec.kind == "brownian":
        return brownian_path(spec, path_index)
    if spec.drift is None or spec.vol is None:
        raise ValueError(f"spec.kind={spec.kind!r} needs drift and vol functionals")
    return ito_euler(spec.drift, spec.vol, spec, path_index)


def ensemble(spec: GeneratorSpec, size: int) -> list[CadlagPath]:
    """Paths 0..size-1 of the spec's ensemble (order-independent streams)."""
    return [generate(spec, k) for k in range(size)]
