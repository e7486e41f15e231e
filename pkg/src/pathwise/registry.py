"""Named built-in functionals and coefficient sets for the batch runner.

Names are ``base`` or ``base:arg1,arg2``.  Every name resolves to a fresh
CausalFunctional for a given dimension and BK config, so experiment configs
stay plain text.
"""

from __future__ import annotations

import math

import numpy as np

from .bk import (
    BkConfig,
    doleans_dade,
    ito_process_functional,
    levy_area,
    make_bk_functional,
    make_qv_functional,
)
from .functional import CausalFunctional, make_running_integral, make_state_functional

__all__ = ["resolve_functional", "resolve_coefficient", "FUNCTIONAL_NAMES"]


def time_functional() -> CausalFunctional:
    return make_state_functional(
        lambda t, x: t,
        df_dt=lambda t, x: 1.0,
        df_dx=lambda t, x: np.zeros(np.atleast_1d(x).size),
        d2f_dx2=lambda t, x: np.zeros((np.atleast_1d(x).size,) * 2),
        label="time",
    )


def coordinate_functional(i: int = 0) -> CausalFunctional:
    def grad(t, x):
        g = np.zeros(np.atleast_1d(x).size)
        g[i] = 1.0
        return g

    F = make_state_functional(
        lambda t, x: float(np.atleast_1d(x)[i]),
        df_dt=lambda t, x: 0.0,
        df_dx=grad,
        d2f_dx2=lambda t, x: np.zeros((np.atleast_1d(x).size,) * 2),
        label=f"coordinate[{i}]",
    )
    F._pointwise_f = lambda t, x: float(x[i])
    return F


def square_functional(i: int = 0) -> CausalFunctional:
    def grad(t, x):
        g = np.zeros(np.atleast_1d(x).size)
        g[i] = 2.0 * float(np.atleast_1d(x)[i])
        return g

    def hess(t, x):
        h = np.zeros((np.atleast_1d(x).size,) * 2)
        h[i, i] = 2.0
        return h

    F = make_state_functional(
        lambda t, x: float(np.atleast_1d(x)[i]) ** 2,
        df_dt=lambda t, x: 0.0,
        df_dx=grad,
        d2f_dx2=hess,
        label=f"square[{i}]",
    )
    F._pointwise_f = lambda t, x: float(x[i]) ** 2
    return F


def sinwave_functional(k: float = 50.0, i: int = 0) -> CausalFunctional:
    """sin(k x_i) + t: strong high-order curvature, so central-difference
    truncation error dominates float roundoff across the probe h range."""

    def grad(t, x):
        g = np.zeros(np.atleast_1d(x).size)
        g[i] = k * math.cos(k * float(np.atleast_1d(x)[i]))
        return g

    def hess(t, x):
        h = np.zeros((np.atleast_1d(x).size,) * 2)
        h[i, i] = -k * k * math.sin(k * float(np.atleast_1d(x)[i]))
        return h

    F = make_state_functional(
        lambda t, x: math.sin(k * float(np.atleast_1d(x)[i])) + t,
        df_dt=lambda t, x: 1.0,
        df_dx=grad,
        d2f_dx2=hess,
        label=f"sinwave[k={k}]",
    )
    F._pointwise_f = lambda t, x: math.sin(k * float(x[i])) + t
    return F


def running_square_functional(i: int = 0) -> CausalFunctional:
    return make_running_integral(
        lambda r, x: float(x[i]) ** 2, label=f"running-square[{i}]"
    )


def anticipating_functional() -> CausalFunctional:
    """Looks ahead to the endpoint: the planted causality violation."""
    return CausalFunctional(
        lambda t, path: float(path.eval(path.horizon)[0]), label="anticipating"
    )


def bk_self_functional(cfg: BkConfig, i: int = 0) -> CausalFunctional:
    """J with integrand Z = X^i against X^i (the self-integral)."""
    return make_bk_functional(
        lambda path: path.component(i), i, cfg, label=f"bk-self[{i}]", check=False
    )


def ito_demo_functional(cfg: BkConfig) -> CausalFunctional:
    """Demo Ito-process functional: mu = x_0, sigma = sin(x_0) (d = 1)."""
    sin1 = make_state_functional(
        lambda t, x: math.sin(float(x[0])), label="sin"
    )
    sin1._pointwise_f = lambda t, x: math.sin(float(x[0]))
    return ito_process_functional(coordinate_functional(0), [sin1], cfg, label="ito-demo")


def _parse_args(raw: str) -> list[str]:
    return [a for a in raw.split(",") if a != ""]


FUNCTIONAL_NAMES = (
    "time",
    "coordinate[:i]",
    "square[:i]",
    "sinwave[:k]",
    "running-square[:i]",
    "doleans-dade",
    "qv:i,j",
    "levy-area",
    "bk-self[:i]",
    "ito-process",
    "anticipating",
)


def resolve_functional(name: str, dim: int, cfg: BkConfig) -> CausalFunctional:
    """Build the named functional. Raises KeyError on unknown names."""
    base, _, raw = name.partition(":")
    args = _parse_args(raw)
    if base == "time":
        return time_functional()
    if base == "coordinate":
        return coordinate_functional(int(args[0]) if args else 0)
    if base == "square":
        return square_functional(int(args[0]) if args else 0)
    if base == "sinwave":
        return sinwave_functional(float(args[0]) if args else 50.0)
    if base == "running-square":
        return running_square_functional(int(args[0]) if args else 0)
    if base == "doleans-dade":
        return doleans_dade(cfg)
    if base == "qv":
        i = int(args[0]) if args else 0
        j = int(args[1]) if len(args) > 1 else i
        return make_qv_functional(i, j, cfg)
    if base == "levy-area":
        if dim != 2:
            raise KeyError("levy-area needs dimension 2")
        return levy_area(cfg)
    if base == "bk-self":
        return bk_self_functional(cfg, int(args[0]) if args else 0)
    if base == "ito-process":
        return ito_demo_functional(cfg)
    if base == "anticipating":
        return anticipating_functional()
    raise KeyError(f"unknown functional {name!r}")


def resolve_coefficient(name: str, dim: int) -> CausalFunctional:
    """Named Euler coefficients: zero, one, coordinate[:i], sin[:i]."""
    base, _, raw = name.partition(":")
    args = _parse_args(raw)
    if base == "zero":
        F = make_state_functional(lambda t, x: 0.0, label="zero")
        F._pointwise_f = lambda t, x: 0.0
        return F
    if base == "one":
        F = make_state_functional(lambda t, x: 1.0, label="one")
        F._pointwise_f = lambda t, x: 1.0
        return F
    if base == "coordinate":
        return coordinate_functional(int(args[0]) if args else 0)
    if base == "sin":
        i = int(args[0]) if args else 0
        F = make_state_functional(lambda t, x: math.sin(float(x[i])), label=f"sin[{i}]")
        F._pointwise_f = lambda t, x: math.sin(float(x[i]))
        return F
    raise KeyError(f"unknown coefficient {name!r}")
