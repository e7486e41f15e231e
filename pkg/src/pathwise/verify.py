"""Numerical verification of the functional Ito formula.

Both sides of the identity

    F_t - F_0 = int d0F dr + sum_i int grad_i F_{r-} dX^i
                + 1/2 sum_ij int hess_ij F_{r-} d[X^i, X^j]

are computed along explicit partitions: the time integral by left Riemann
sums, the stochastic integrals by left-point sums against path increments,
and the bracket integrals by left-point sums against increments of the
pathwise quadratic variation (so the formula is tested exactly as stated,
not against squared increments).  Convergence in probability is
operationalized as ensemble quantile decay of sup distances; every report
states evidence, not proof.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bk import BkConfig, qv_level_path, quad_variation
from .functional import CausalFunctional, check_causality
from .paths import CadlagPath, Partition, piecewise_const, stop
from .simulate import GeneratorSpec, generate

__all__ = [
    "ItoReport",
    "ConvergenceReport",
    "functional_trace",
    "ito_rhs",
    "ito_residual",
    "st_decomposition",
    "heat_operator",
    "regularity_report",
    "residual_report",
    "qv_refinement_report",
]


def _step_path(times: np.ndarray, vals: np.ndarray, horizon: float) -> CadlagPath:
    v = np.ascontiguousarray(vals, dtype=float)[:, None]
    v.flags.writeable = False
    return CadlagPath._unsafe(Partition._unsafe(times), v, horizon)


@dataclass(frozen=True)
class ItoReport:
    """Both sides of the formula on one path, with the component breakdown."""

    lhs: CadlagPath
    rhs: CadlagPath
    residual_sup: float
    time_term: CadlagPath
    drift_term: CadlagPath
    trace_term: CadlagPath

    def to_csv(self, f) -> None:
        own = isinstance(f, str)
        fh = open(f, "w", newline="") if own else f
        try:
            fh.write("t,lhs,rhs,residual\n")
            ts = self.lhs.grid.times
            l = self.lhs.values[:, 0]
            r = self.rhs.values[:, 0]
            for t, a, b in zip(ts, l, r):
                row = (float(t), float(a), float(b), float(a) - float(b))
                fh.write(",".join(repr(v) for v in row) + "\n")
        finally:
            if own:
                fh.close()


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-level ensemble sup-distance quantiles (empirical ucp evidence)."""

    levels: tuple
    median_sup: np.ndarray
    q90_sup: np.ndarray
    verdict: bool
    threshold: float | None
    quantiles: tuple = (0.5, 0.9)

    def to_csv(self, f) -> None:
        own = isinstance(f, str)
        fh = open(f, "w", newline="") if own else f
        try:
            fh.write("level,median_sup,q90_sup\n")
            for lv, m, q in zip(self.levels, self.median_sup, self.q90_sup):
                fh.write(f"{int(lv)},{float(m)!r},{float(q)!r}\n")
        finally:
            if own:
                fh.close()


def functional_trace(F: CausalFunctional, path: CadlagPath, times: np.ndarray) -> CadlagPath:
    """The value process t -> F(t, path) sampled at the given times."""
    vals = np.array([F(t, path) for t in times])
    return _step_path(np.asarray(times, dtype=float), vals, path.horizon)


def _rhs_components(
    F: CausalFunctional,
    path: CadlagPath,
    pi: Partition,
    cfg: BkConfig,
    numeric_fallback: bool = True,
):
    if not (F.has_bundle or numeric_fallback):
        raise ValueError("functional has no analytic bundle and numeric fallback is off")
    times = pi.times
    K = times.size
    d = path.dimension
    # The integrands are the left limits dF_{r-}.  On a step path the bundle
    # is constant on the plateau right of each t_k -- where it equals both the
    # left limit and the value on the path stopped at t_k (the proof's
    # evaluation points) -- while at t_k itself it would pick up the jump
    # charged there.  Sample strictly inside the first path plateau after t_k.
    fine = path.grid.times
    left = times[:-1]
    pos = np.searchsorted(fine, left, side="right")
    next_fine = np.where(pos < fine.size, fine[np.minimum(pos, fine.size - 1)], np.inf)
    mids = left + 0.5 * np.minimum(next_fine - left, np.diff(times))
    bundles = [F.bundle(s, path) for s in mids]
    dts = np.diff(times)
    xs = path.sample(times)
    dxs = np.diff(xs, axis=0)

    d0s = np.array([b.d0 for b in bundles])
    grads = np.array([b.grad for b in bundles])
    hesses = np.array([b.hess for b in bundles])

    time_term = np.zeros(K)
    time_term[1:] = np.cumsum(d0s * dts)
    drift_term = np.zeros(K)
    drift_term[1:] = np.cumsum(np.einsum("kd,kd->k", grads, dxs))

    trace_term = np.zeros(K)
    needed = [
        (i, j)
        for i in range(d)
        for j in range(d)
        if np.any(hesses[:, i, j] != 0.0)
    ]
    if needed:
        inc = np.zeros((K - 1,))
        for i, j in needed:
            b = quad_variation(path, i, j, cfg).path
            db = np.diff(b.sample(times)[:, 0])
            inc += 0.5 * hesses[:, i, j] * db
        trace_term[1:] = np.cumsum(inc)
    return time_term, drift_term, trace_term


def ito_rhs(
    F: CausalFunctional,
    path: CadlagPath,
    pi: Partition,
    cfg: BkConfig = BkConfig(),
    numeric_fallback: bool = True,
) -> CadlagPath:
    """Discretized right side of the formula as a path on the partition."""
    time_term, drift_term, trace_term = _rhs_components(F, path, pi, cfg, numeric_fallback)
    return _step_path(pi.times, time_term + drift_term + trace_term, path.horizon)


def ito_residual(
    F: CausalFunctional,
    path: CadlagPath,
    pi: Partition,
    cfg: BkConfig = BkConfig(),
    numeric_fallback: bool = True,
) -> ItoReport:
    """lhs(t) = F(t, w) - F(0, w) against the discretized right side."""
    time_term, drift_term, trace_term = _rhs_components(F, path, pi, cfg, numeric_fallback)
    rhs_vals = time_term + drift_term + trace_term
    f0 = F(0.0, path)
    lhs_vals = np.array([F(t, path) for t in pi.times]) - f0
    residual = float(np.abs(lhs_vals - rhs_vals).max())
    return ItoReport(
        lhs=_step_path(pi.times, lhs_vals, path.horizon),
        rhs=_step_path(pi.times, rhs_vals, path.horizon),
        residual_sup=residual,
        time_term=_step_path(pi.times, time_term, path.horizon),
        drift_term=_step_path(pi.times, drift_term, path.horizon),
        trace_term=_step_path(pi.times, trace_term, path.horizon),
    )


def st_decomposition(
    F: CausalFunctional, path: CadlagPath, pi: Partition
) -> tuple[CadlagPath, CadlagPath]:
    """The proof's split of F increments along the partition, cumulatively.

    S_k = F(t_k, w^pi stopped at t_k) - F(t_k, w^pi stopped at t_{k-1})
    measures the space increment at t_k; T_k = F(t_k, stopped at t_{k-1}) -
    F(t_{k-1}, stopped at t_{k-1}) the time decay on [t_{k-1}, t_k].  Their
    telescoping sum is F(t_K, w^pi) - F(0, w^pi) up to float roundoff.
    """
    approx = piecewise_const(path, pi)
    times = pi.times
    K = times.size
    s_vals = np.zeros(K)
    t_vals = np.zeros(K)
    prev_stopped = stop(approx, times[0])
    for k in range(1, K):
        cur_stopped = stop(approx, times[k])
        f_cur = F(times[k], cur_stopped)
        f_mid = F(times[k], prev_stopped)
        f_prev = F(times[k - 1], prev_stopped)
        s_vals[k] = s_vals[k - 1] + (f_cur - f_mid)
        t_vals[k] = t_vals[k - 1] + (f_mid - f_prev)
        prev_stopped = cur_stopped
    return (
        _step_path(times, s_vals, path.horizon),
        _step_path(times, t_vals, path.horizon),
    )


def heat_operator(F: CausalFunctional, path: CadlagPath, t: float, sigma_sq) -> float:
    """d0 F + 1/2 trace(hess F . sigma^2) at (t, path).

    The combination that is uniquely determined by the process F induces --
    unlike d0 and hess separately.
    """
    b = F.bundle(t, path)
    s = np.asarray(sigma_sq, dtype=float)
    if s.ndim == 0:
        return b.d0 + 0.5 * float(s) * float(np.trace(b.hess))
    return b.d0 + 0.5 * float(np.trace(b.hess @ s))


def _probe_times(path: CadlagPath, pi: Partition, cap: int = 4097) -> np.ndarray:
    fine = path.grid.times
    if fine.size > cap:
        fine = fine[np.linspace(0, fine.size - 1, cap).astype(int)]
    return np.union1d(fine, pi.times)


def _per_path_stats(per_path: Callable[[int], np.ndarray], size: int, workers: int) -> np.ndarray:
    """Column p = per_path(p); thread-mapped but reduced in fixed order."""
    if workers <= 1:
        cols = [per_path(p) for p in range(size)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(per_path, range(size)))
    return np.column_stack(cols)


def regularity_report(
    F: CausalFunctional,
    generator: GeneratorSpec,
    levels: Sequence[int],
    ensemble_size: int,
    threshold: float | None = None,
    quantiles: tuple = (0.5, 0.9),
    workers: int = 1,
) -> ConvergenceReport:
    """Empirical ucp evidence: sup |F(., w^pi(n)) - F(., w)| quantiles per level.

    The sup is sampled on the union of the partition and (a capped subsample
    of) the path grid.  Verdict: medians decreasing, and final median below
    the threshold when one is given.  Non-causal functionals are rejected
    before any statistics are computed.
    """
    levels = tuple(int(n) for n in levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be increasing")
    guard = generate(generator, 0)
    probe = guard.grid.times[[len(guard.grid.times) // 3, -1]]
    if not check_causality(F, guard, probe):
        raise ValueError(f"functional {F.label!r} is not causal")

    def per_path(p: int) -> np.ndarray:
        path = generate(generator, p)
        out = np.zeros(len(levels))
        for li, n in enumerate(levels):
            pi = Partition.dyadic(generator.horizon, n)
            coarse = piecewise_const(path, pi)
            ts = _probe_times(path, pi)
            diffs = [F(t, coarse) - F(t, path) for t in ts]
            out[li] = np.abs(np.array(diffs)).max()
        return out

    sups = _per_path_stats(per_path, ensemble_size, workers)
    med = np.quantile(sups, quantiles[0], axis=1)
    q90 = np.quantile(sups, quantiles[1], axis=1)
    verdict = bool(np.all(np.diff(med) < 0.0))
    if threshold is not None:
        verdict = verdict and bool(med[-1] <= threshold)
    return ConvergenceReport(levels, med, q90, verdict, threshold, quantiles)


def residual_report(
    F: CausalFunctional,
    generator: GeneratorSpec,
    levels: Sequence[int],
    ensemble_size: int,
    cfg: BkConfig = BkConfig(),
    threshold: float | None = None,
    quantiles: tuple = (0.5, 0.9),
    workers: int = 1,
) -> ConvergenceReport:
    """Ito-residual refinement study: residual_sup quantiles per grid level.

    Drivers come from the generator at its own (finer) level; each study level
    n discretizes the right side on the dyadic partition pi(n) of the same
    path.
    """
    levels = tuple(int(n) for n in levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be increasing")
    if max(levels) > generator.level:
        raise ValueError("study levels must not exceed the driver grid level")

    def per_path(p: int) -> np.ndarray:
        path = generate(generator, p)
        out = np.zeros(len(levels))
        for li, n in enumerate(levels):
            pi = Partition.dyadic(generator.horizon, n)
            out[li] = ito_residual(F, path, pi, cfg).residual_sup
        return out

    sups = _per_path_stats(per_path, ensemble_size, workers)
    med = np.quantile(sups, quantiles[0], axis=1)
    q90 = np.quantile(sups, quantiles[1], axis=1)
    verdict = bool(np.all(np.diff(med) < 0.0))
    if threshold is not None:
        verdict = verdict and bool(med[-1] <= threshold)
    return ConvergenceReport(levels, med, q90, verdict, threshold, quantiles)


def qv_refinement_report(
    generator: GeneratorSpec,
    i: int,
    j: int,
    bk_levels: Sequence[int],
    ensemble_size: int,
    reference: str | Callable[[np.ndarray], np.ndarray] = "time",
    threshold: float | None = None,
    quantiles: tuple = (0.5, 0.9),
    workers: int = 1,
) -> ConvergenceReport:
    """Quadratic-variation refinement study across BK levels.

    Per path and BK level n, sup_t |B^n(t) - ref(t)| where ref is 'time'
    (t -> t, the Brownian truth), 'realized' (fine-grid realized variance,
    the calibration oracle), or a callable of the grid times.
    """
    bk_levels = tuple(int(n) for n in bk_levels)
    if any(b <= a for a, b in zip(bk_levels, bk_levels[1:])):
        raise ValueError("bk levels must be increasing")

    def per_path(p: int) -> np.ndarray:
        path = generate(generator, p)
        ts = path.grid.times
        if reference == "time":
            ref = ts
        elif reference == "realized":
            inc_i = np.diff(path.values[:, i])
            inc_j = np.diff(path.values[:, j])
            ref = np.concatenate([[0.0], np.cumsum(inc_i * inc_j)])
        else:
            ref = np.asarray(reference(ts), dtype=float)
        out = np.zeros(len(bk_levels))
        for li, n in enumerate(bk_levels):
            b = qv_level_path(path, i, j, n).values[:, 0]
            out[li] = np.abs(b - ref).max()
        return out

    sups = _per_path_stats(per_path, ensemble_size, workers)
    med = np.quantile(sups, quantiles[0], axis=1)
    q90 = np.quantile(sups, quantiles[1], axis=1)
    verdict = bool(np.all(np.diff(med) < 0.0))
    if threshold is not None:
        verdict = verdict and bool(med[-1] <= threshold)
    return ConvergenceReport(bk_levels, med, q90, verdict, threshold, quantiles)
