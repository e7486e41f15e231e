"""Causal path functionals and their causal (time/space) derivatives.

A causal functional is a map F(t, w) that only sees the path up to time t:
F(t, w) == F(t, stop(w, t)) exactly.  Its derivatives are defined through the
two path perturbations:

* time derivative  d0 F = right derivative of r -> F(t + r, stop(w, t)) at 0,
* space gradient  grad F = Jacobian of r -> F(t, bump(w, t, r)) at 0,
* space Hessian   hess F = Hessian of the same map.

Built-ins carry analytic derivative bundles; numeric finite-difference
versions are provided to cross-check them.  Past the path lifetime every
value and derivative is 0 by convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .paths import CadlagPath, bump, stop

__all__ = [
    "DerivativeBundle",
    "CausalFunctional",
    "check_causality",
    "numeric_time_derivative",
    "numeric_gradient",
    "numeric_hessian",
    "make_state_functional",
    "make_running_integral",
    "combine",
    "ContinuityProbeReport",
    "probe_space_continuity",
    "probe_time_continuity",
    "DEFAULT_SPACE_STEP",
]

#: Default finite-difference step for grad/hess (central differences).
DEFAULT_SPACE_STEP = 1e-4


@dataclass(frozen=True)
class DerivativeBundle:
    """(d0, grad, hess) of a causal functional at one (t, w)."""

    d0: float
    grad: np.ndarray
    hess: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.grad, dtype=float))
        h = np.asarray(self.hess, dtype=float)
        if h.ndim == 0:
            h = h[None, None]
        if g.ndim != 1 or h.shape != (g.size, g.size):
            raise ValueError("grad must be a d-vector and hess a d x d matrix")
        object.__setattr__(self, "d0", float(self.d0))
        object.__setattr__(self, "grad", g)
        object.__setattr__(self, "hess", h)

    @classmethod
    def zero(cls, dim: int) -> "DerivativeBundle":
        return cls(0.0, np.zeros(dim), np.zeros((dim, dim)))

    def scaled(self, a: float) -> "DerivativeBundle":
        return DerivativeBundle(a * self.d0, a * self.grad, a * self.hess)

    def __add__(self, other: "DerivativeBundle") -> "DerivativeBundle":
        return DerivativeBundle(
            self.d0 + other.d0, self.grad + other.grad, self.hess + other.hess
        )


def _past_lifetime(path: CadlagPath, t: float) -> bool:
    return path.lifetime is not None and t >= path.lifetime


class CausalFunctional:
    """Evaluable map (t, w) -> R with an optional analytic derivative bundle.

    ``fn`` must be causal and side-effect free; both are contracts, the first
    is checkable (check_causality), the second is not.  Evaluation returns 0
    for t >= lifetime(w).
    """

    def __init__(
        self,
        fn: Callable[[float, CadlagPath], float],
        bundle_fn: Callable[[float, CadlagPath], DerivativeBundle] | None = None,
        label: str = "functional",
    ):
        self._fn = fn
        self._bundle_fn = bundle_fn
        self.label = label

    def __repr__(self):
        return f"CausalFunctional({self.label!r})"

    @property
    def has_bundle(self) -> bool:
        return self._bundle_fn is not None

    def __call__(self, t: float, path: CadlagPath) -> float:
        if _past_lifetime(path, t):
            return 0.0
        return float(self._fn(t, path))

    def bundle(
        self, t: float, path: CadlagPath, h: float = DEFAULT_SPACE_STEP
    ) -> DerivativeBundle:
        """Analytic bundle if available, else central finite differences."""
        if _past_lifetime(path, t):
            return DerivativeBundle.zero(path.dimension)
        if self._bundle_fn is not None:
            return self._bundle_fn(t, path)
        return self.numeric_bundle(t, path, h)

    def numeric_bundle(
        self,
        t: float,
        path: CadlagPath,
        h: float = DEFAULT_SPACE_STEP,
        h_time: float | None = None,
    ) -> DerivativeBundle:
        return DerivativeBundle(
            numeric_time_derivative(self, t, path, h_time),
            numeric_gradient(self, t, path, h),
            numeric_hessian(self, t, path, h),
        )


def check_causality(
    F: CausalFunctional, path: CadlagPath, times: Sequence[float]
) -> bool:
    """True iff F(t, w) == F(t, stop(w, t)) exactly at every probe time."""
    return all(F(t, path) == F(t, stop(path, t)) for t in times)


def numeric_time_derivative(
    F: CausalFunctional, t: float, path: CadlagPath, h: float | None = None
) -> float:
    """Forward difference of r -> F(t + r, stop(w, t)) at r = 0.

    Default step: one grid step of the path (sub-grid steps are meaningless
    along the constant continuation of a step path, any h works analytically).
    """
    if _past_lifetime(path, t):
        return 0.0
    if h is None:
        h = path.grid.mesh if path.grid.mesh > 0.0 else 1e-3
    if h <= 0.0:
        raise ValueError("h must be positive")
    if t + h > path.horizon:
        raise ValueError("t + h beyond the path horizon")
    stopped = stop(path, t)
    return (F(t + h, stopped) - F(t, stopped)) / h


def numeric_gradient(
    F: CausalFunctional, t: float, path: CadlagPath, h: float = DEFAULT_SPACE_STEP
) -> np.ndarray:
    """Central differences of r -> F(t, bump(w, t, r)) at r = 0, per coordinate."""
    if _past_lifetime(path, t):
        return np.zeros(path.dimension)
    if h <= 0.0:
        raise ValueError("h must be positive")
    d = path.dimension
    out = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        out[i] = (F(t, bump(path, t, e)) - F(t, bump(path, t, -e))) / (2.0 * h)
    return out


def numeric_hessian(
    F: CausalFunctional, t: float, path: CadlagPath, h: float = DEFAULT_SPACE_STEP
) -> np.ndarray:
    """Second-order central differences of the bump response; symmetric output."""
    if _past_lifetime(path, t):
        return np.zeros((path.dimension, path.dimension))
    if h <= 0.0:
        raise ValueError("h must be positive")
    d = path.dimension
    center = F(t, stop(path, t))
    out = np.empty((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        up = F(t, bump(path, t, e))
        dn = F(t, bump(path, t, -e))
        out[i, i] = (up - 2.0 * center + dn) / (h * h)
    for i in range(d):
        for j in range(i + 1, d):
            r = np.zeros(d)
            r[i] = h
            r[j] = h
            pp = F(t, bump(path, t, r))
            r[j] = -h
            pm = F(t, bump(path, t, r))
            r[i] = -h
            mm = F(t, bump(path, t, r))
            r[j] = h
            mp = F(t, bump(path, t, r))
            out[i, j] = out[j, i] = (pp - pm - mp + mm) / (4.0 * h * h)
    return out


def _const_zero(t, x):
    return 0.0


def make_state_functional(
    f: Callable,
    df_dt: Callable | None = None,
    df_dx: Callable | None = None,
    d2f_dx2: Callable | None = None,
    label: str = "state",
) -> CausalFunctional:
    """F(t, w) = f(t, w(t)) with the bundle (df/dt, grad f, hess f) at (t, w(t)).

    Derivative callables are optional; without all three the functional has no
    analytic bundle and falls back to finite differences.
    """

    def fn(t, path):
        return f(t, path.eval(t))

    bundle_fn = None
    if df_dt is not None and df_dx is not None and d2f_dx2 is not None:

        def bundle_fn(t, path):
            x = path.eval(t)
            d = path.dimension
            grad = np.broadcast_to(np.atleast_1d(np.asarray(df_dx(t, x), float)), (d,))
            hess = np.asarray(d2f_dx2(t, x), float)
            if hess.ndim == 0:
                hess = hess * np.eye(d) if d > 1 else hess[None, None]
            return DerivativeBundle(float(df_dt(t, x)), grad, hess)

    return CausalFunctional(fn, bundle_fn, label)


def make_running_integral(f: Callable, label: str = "running-integral") -> CausalFunctional:
    """F(t, w) = integral_0^t f(r, w(r)) dr by left-point quadrature on the grid.

    Exact for integrands without explicit time dependence (the integrand is
    then a step function).  Bundle: d0 = f(t, w(t)), grad = 0, hess = 0 -- a
    single-point bump is invisible to a Lebesgue integral of the past.
    """

    @lru_cache(maxsize=8)
    def cumulative(path: CadlagPath) -> np.ndarray:
        times = path.grid.times
        vals = np.array([float(f(t, v)) for t, v in zip(times, path.values)])
        out = np.zeros(times.size)
        if times.size > 1:
            out[1:] = np.cumsum(vals[:-1] * np.diff(times))
        return out

    def fn(t, path):
        k = path._index_at(t)
        return cumulative(path)[k] + f(path.grid.times[k], path.values[k]) * (
            t - path.grid.times[k]
        )

    def bundle_fn(t, path):
        d = path.dimension
        return DerivativeBundle(float(f(t, path.eval(t))), np.zeros(d), np.zeros((d, d)))

    return CausalFunctional(fn, bundle_fn, label)


def combine(
    op: str,
    parts: Sequence[CausalFunctional],
    weights: Sequence[float] | None = None,
    g: Callable | None = None,
    dg: Callable | None = None,
    d2g: Callable | None = None,
    label: str | None = None,
) -> CausalFunctional:
    """Composite functional with the bundle assembled by chain/product rules.

    op = 'sum'      weighted sum of the parts (weights default to 1),
    op = 'product'  product of the parts,
    op = 'compose'  g(F) for a single part and twice differentiable g.
    """
    if not parts:
        raise ValueError("combine needs at least one functional")
    parts = list(parts)
    with_bundles = all(p.has_bundle for p in parts)

    if op == "sum":
        w = [1.0] * len(parts) if weights is None else [float(a) for a in weights]
        if len(w) != len(parts):
            raise ValueError("one weight per functional")

        def fn(t, path):
            return sum(a * p(t, path) for a, p in zip(w, parts))

        def bundle_fn(t, path):
            out = DerivativeBundle.zero(path.dimension)
            for a, p in zip(w, parts):
                out = out + p.bundle(t, path).scaled(a)
            return out

    elif op == "product":

        def fn(t, path):
            out = 1.0
            for p in parts:
                out *= p(t, path)
            return out

        def bundle_fn(t, path):
            val = parts[0](t, path)
            b = parts[0].bundle(t, path)
            for p in parts[1:]:
                pv = p(t, path)
                pb = p.bundle(t, path)
                cross = np.outer(b.grad, pb.grad)
                b = DerivativeBundle(
                    b.d0 * pv + val * pb.d0,
                    b.grad * pv + val * pb.grad,
                    b.hess * pv + cross + cross.T + val * pb.hess,
                )
                val = val * pv
            return b

    elif op == "compose":
        if len(parts) != 1 or g is None or dg is None or d2g is None:
            raise ValueError("compose needs one functional and g, dg, d2g")
        inner = parts[0]

        def fn(t, path):
            return g(inner(t, path))

        def bundle_fn(t, path):
            v = inner(t, path)
            b = inner.bundle(t, path)
            g1 = dg(v)
            g2 = d2g(v)
            return DerivativeBundle(
                g1 * b.d0,
                g1 * b.grad,
                g1 * b.hess + g2 * np.outer(b.grad, b.grad),
            )

    else:
        raise ValueError(f"unknown combine op {op!r}")

    name = label or f"{op}(" + ",".join(p.label for p in parts) + ")"
    return CausalFunctional(fn, bundle_fn if with_bundles else None, name)


@dataclass(frozen=True)
class ContinuityProbeReport:
    """Sampled causal-continuity evidence: sup responses per perturbation size.

    Probing is a sampled under-approximation of the sup over all cadlag
    perturbation profiles; it is evidence, never a proof.
    """

    kind: str
    radius: float
    horizon: float
    sizes: np.ndarray
    responses: np.ndarray
    n_probes: int

    def modulus(self) -> np.ndarray:
        """Non-decreasing envelope of the responses (the fitted modulus)."""
        return np.maximum.accumulate(self.responses)

    def vanishes(self, threshold: float) -> bool:
        """True if the smallest-size response is already below threshold."""
        i = int(np.argmin(self.sizes))
        return bool(self.responses[i] <= threshold)

    def to_csv(self, f) -> None:
        own = isinstance(f, str)
        fh = open(f, "w", newline="") if own else f
        try:
            fh.write("size,sup_response\n")
            for s, r in zip(self.sizes, self.responses):
                fh.write(f"{float(s)!r},{float(r)!r}\n")
        finally:
            if own:
                fh.close()


def _probe_times(path: CadlagPath, t: float, max_points: int = 33) -> np.ndarray:
    ts = path.grid.times[path.grid.times <= t]
    if ts.size > max_points:
        ts = ts[np.linspace(0, ts.size - 1, max_points).astype(int)]
    if ts[-1] < t:
        ts = np.append(ts, t)
    return ts


def probe_space_continuity(
    F: CausalFunctional,
    path: CadlagPath,
    t: float,
    R: float,
    sizes: Sequence[float],
    n_probes: int = 8,
    seed: int = 0,
) -> ContinuityProbeReport:
    """Sampled modulus of sup_r |F_r(w^{r,D_r}) - F_r(w^{r,D'_r})|.

    Constant-in-time profile pairs (D, D + size * u) with random direction u,
    |D - D'|_inf = size, all bounded by R.
    """
    rng = np.random.default_rng(seed)
    d = path.dimension
    ts = _probe_times(path, t)
    sizes = np.asarray(sorted(float(s) for s in sizes))
    responses = np.zeros(sizes.size)
    for si, size in enumerate(sizes):
        worst = 0.0
        for k in range(n_probes):
            if k == 0:
                base = np.zeros(d)  # the zero-vs-jump pair must be probed
            else:
                base = rng.uniform(-1.0, 1.0, size=d) * max(R - size, 0.0)
            u = rng.uniform(-1.0, 1.0, size=d)
            u /= max(np.abs(u).max(), 1e-300)
            shifted = base + size * u
            for r in ts:
                a = F(r, bump(path, r, base))
                b = F(r, bump(path, r, shifted))
                worst = max(worst, abs(a - b))
        responses[si] = worst
    return ContinuityProbeReport("space", R, t, sizes, responses, n_probes)


def probe_time_continuity(
    F: CausalFunctional,
    path: CadlagPath,
    t: float,
    R: float,
    sizes: Sequence[float],
    seed: int = 0,
) -> ContinuityProbeReport:
    """Sampled modulus of sup_r |F_{r+D_r}(stop(w, r)) - F_r(w)|.

    Constant nonnegative time shifts D_r = size; requires t + max(sizes)
    within the path horizon.
    """
    del seed  # constant shifts need no randomness; kept for interface parity
    sizes = np.asarray(sorted(float(s) for s in sizes))
    if np.any(sizes < 0.0):
        raise ValueError("time shifts must be nonnegative")
    if t + sizes.max() > path.horizon:
        raise ValueError("t + max(sizes) beyond the path horizon")
    ts = _probe_times(path, t)
    responses = np.zeros(sizes.size)
    for si, size in enumerate(sizes):
        worst = 0.0
        for r in ts:
            a = F(r + size, stop(path, r))
            b = F(r, path)
            worst = max(worst, abs(a - b))
        responses[si] = worst
    return ContinuityProbeReport("time", R, t, sizes, responses, 1)
