"""Cadlag step paths, time partitions, and the two jump perturbations.

Paths are finitely represented: a strictly increasing time grid starting at 0
and one d-vector of values per grid point, read as a right-continuous step
function on [0, horizon].  Everything here is immutable and pure, so paths can
be shared freely across workers.

The two perturbation operators are the building blocks of the causal
derivatives in :mod:`pathwise.functional`:

* ``stop(w, t)``  -- freeze the path at time t,
* ``bump(w, t, r)`` -- freeze at t and add a jump of size r from t onward.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PRE_START",
    "Partition",
    "CadlagPath",
    "stop",
    "bump",
    "piecewise_const",
    "sup_distance",
    "paths_equal",
    "read_path_csv",
    "write_path_csv",
]


class _PreStart:
    """Marker for the (undefined) left limit at time 0."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "PRE_START"


#: Returned by ``left_limit(path, 0)``; never a numeric value.
PRE_START = _PreStart()


def _freeze(a):
    """Mark a freshly built array read-only (caller hands over ownership)."""
    if a.flags.writeable:
        a.flags.writeable = False
    return a


def _as_readonly(a, dtype=float):
    """Read-only float copy of caller-supplied data."""
    return _freeze(np.array(a, dtype=dtype, copy=True))


@dataclass(frozen=True, eq=False)
class Partition:
    """Finite strictly increasing time grid with times[0] == 0."""

    times: np.ndarray

    def __post_init__(self):
        t = _as_readonly(self.times)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("partition needs a 1-d, non-empty time array")
        if t[0] != 0.0:
            raise ValueError("partition must start at 0")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ValueError("partition times must be strictly increasing")
        if not np.all(np.isfinite(t)):
            raise ValueError("partition times must be finite")
        object.__setattr__(self, "times", t)

    @classmethod
    def dyadic(cls, horizon: float, level: int) -> "Partition":
        """Uniform grid of step horizon * 2**-level (the refining sequence)."""
        if level < 0:
            raise ValueError("level must be >= 0")
        if not horizon > 0.0:
            raise ValueError("horizon must be positive")
        return cls(np.linspace(0.0, float(horizon), 2**level + 1))

    @classmethod
    def _unsafe(cls, times: np.ndarray) -> "Partition":
        # internal fast path: caller guarantees the invariants
        p = object.__new__(cls)
        object.__setattr__(p, "times", times)
        return p

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def span(self) -> float:
        return float(self.times[-1])

    @property
    def mesh(self) -> float:
        """Largest gap between consecutive points (0 for a single point)."""
        if self.times.size < 2:
            return 0.0
        return float(np.diff(self.times).max())

    def _check_domain(self, t: float) -> None:
        if not 0.0 <= t <= self.times[-1]:
            raise ValueError(f"t={t} outside partition span [0, {self.times[-1]}]")

    def nearest_left(self, t: float, right_closed: bool = False) -> float:
        """Nearest partition point to the left of t.

        Default convention t in [t_pi, t^pi): at a partition point p the left
        neighbour is p itself.  With ``right_closed`` (t in (t_pi, t^pi]) it is
        the strict predecessor, undefined at t = 0.
        """
        self._check_domain(t)
        side = "left" if right_closed else "right"
        i = int(np.searchsorted(self.times, t, side=side)) - 1
        if i < 0:
            raise ValueError("no partition point strictly left of t=0")
        return float(self.times[i])

    def nearest_right(self, t: float, right_closed: bool = False) -> float:
        """Nearest partition point to the right of t (see nearest_left)."""
        self._check_domain(t)
        side = "left" if right_closed else "right"
        i = int(np.searchsorted(self.times, t, side=side))
        if i >= self.times.size:
            raise ValueError(f"no partition point strictly right of t={t}")
        return float(self.times[i])


def dyadic_refinement(horizon: float, level: int) -> Partition:
    """Alias for Partition.dyadic: mesh = horizon * 2**-level."""
    return Partition.dyadic(horizon, level)


@dataclass(frozen=True, eq=False)
class CadlagPath:
    """Right-continuous step path on [0, horizon], d-dimensional.

    ``values[k]`` is the value on [grid.times[k], grid.times[k+1]).  The path
    is constant after the last grid time up to ``horizon``.  ``lifetime``
    (optional) marks the cemetery time: causal functionals evaluate to 0 from
    it onward.
    """

    grid: Partition
    values: np.ndarray
    horizon: float = None  # type: ignore[assignment]
    lifetime: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != len(self.grid):
            raise ValueError("values must have one row per grid time")
        if v.shape[1] < 1:
            raise ValueError("dimension must be >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "values", _freeze(v))
        h = self.horizon
        if h is None:
            h = float(self.grid.times[-1])
        if h < self.grid.times[-1]:
            raise ValueError("horizon must cover the grid")
        object.__setattr__(self, "horizon", float(h))
        if self.lifetime is not None and self.lifetime < 0.0:
            raise ValueError("lifetime must be >= 0")

    @classmethod
    def _unsafe(cls, grid, values, horizon, lifetime=None) -> "CadlagPath":
        p = object.__new__(cls)
        object.__setattr__(p, "grid", grid)
        object.__setattr__(p, "values", values)
        object.__setattr__(p, "horizon", horizon)
        object.__setattr__(p, "lifetime", lifetime)
        return p

    @classmethod
    def constant(cls, value, horizon: float, lifetime=None) -> "CadlagPath":
        v = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(Partition(np.zeros(1)), v[None, :], horizon, lifetime)

    @property
    def dimension(self) -> int:
        return int(self.values.shape[1])

    def _index_at(self, t: float) -> int:
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"t={t} outside path domain [0, {self.horizon}]")
        return int(np.searchsorted(self.grid.times, t, side="right")) - 1

    def eval(self, t: float) -> np.ndarray:
        """Value at t (right-continuous step evaluation)."""
        return self.values[self._index_at(t)]

    def sample(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized eval at an increasing array of times in [0, horizon]."""
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < 0.0 or ts.max() > self.horizon):
            raise ValueError("sample times outside path domain")
        idx = np.searchsorted(self.grid.times, ts, side="right") - 1
        return self.values[idx]

    def left_limit(self, t: float):
        """Value just before t; PRE_START at t = 0 (the X_{0-} convention)."""
        if t == 0.0:
            return PRE_START
        if not 0.0 < t <= self.horizon:
            raise ValueError(f"t={t} outside (0, {self.horizon}]")
        i = int(np.searchsorted(self.grid.times, t, side="left")) - 1
        if i < 0:
            # t below the first grid time can only happen for t in (0, 0) -- unreachable
            raise ValueError("no value strictly before t")
        return self.values[i]

    def jump(self, t: float) -> np.ndarray:
        """eval(t) - left_limit(t); zero off the grid and, by convention, at t=0."""
        if t == 0.0:
            return np.zeros(self.dimension)
        return self.eval(t) - self.left_limit(t)

    def component(self, i: int) -> "CadlagPath":
        """Scalar path of coordinate i (shares the grid)."""
        if not 0 <= i < self.dimension:
            raise ValueError(f"coordinate {i} out of range")
        return CadlagPath._unsafe(
            self.grid, self.values[:, i : i + 1], self.horizon, self.lifetime
        )


def stop(path: CadlagPath, t: float) -> CadlagPath:
    """The path stopped at t: equal on [0, t], constant eval(path, t) after."""
    k = path._index_at(t)
    return CadlagPath._unsafe(
        Partition._unsafe(path.grid.times[: k + 1]),
        path.values[: k + 1],
        path.horizon,
        path.lifetime,
    )


def bump(path: CadlagPath, t: float, r) -> CadlagPath:
    """Jump perturbation: path(s ^ t) + r * 1_{s >= t}.

    bump(path, t, 0) is exactly stop(path, t), including its grid.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if r.shape != (path.dimension,):
        raise ValueError("bump direction must be a d-vector")
    if not np.any(r):
        return stop(path, t)
    k = path._index_at(t)
    times = path.grid.times
    bumped = path.values[k] + r
    if times[k] == t:
        new_times = times[: k + 1]
        new_values = np.vstack([path.values[:k], bumped[None, :]])
    else:
        new_times = np.append(times[: k + 1], t)
        new_values = np.vstack([path.values[: k + 1], bumped[None, :]])
    return CadlagPath._unsafe(
        Partition._unsafe(_freeze(np.ascontiguousarray(new_times))),
        _freeze(new_values),
        path.horizon,
        path.lifetime,
    )


def piecewise_const(path: CadlagPath, pi: Partition) -> CadlagPath:
    """Piecewise-constant approximation of the path along pi.

    w(0) + sum_k (w(t_k) - w(t_{k-1})) 1_{t >= t_k}; telescoping makes this the
    path sampled at the partition points.
    """
    if pi.times[-1] > path.horizon:
        raise ValueError("partition must lie inside the path horizon")
    return CadlagPath._unsafe(
        pi, _freeze(path.sample(pi.times).copy()), path.horizon, path.lifetime
    )


def _union_times(a: CadlagPath, b: CadlagPath, T: float) -> np.ndarray:
    u = np.union1d(a.grid.times, b.grid.times)
    u = u[u <= T]
    if u.size == 0 or u[-1] < T:
        u = np.append(u, T)
    return u


def sup_distance(a: CadlagPath, b: CadlagPath, T: float) -> float:
    """Sup over [0, T] of the max-norm distance of two step paths.

    Evaluated on the union of the grids (step paths attain their sup there).
    """
    if a.dimension != b.dimension:
        raise ValueError("dimension mismatch")
    if T > a.horizon or T > b.horizon:
        raise ValueError("T beyond a path horizon")
    if a.grid is b.grid:
        u = a.grid.times[a.grid.times <= T]
        diff = a.values[: u.size] - b.values[: u.size]
        return float(np.abs(diff).max()) if u.size else 0.0
    u = _union_times(a, b, T)
    return float(np.abs(a.sample(u) - b.sample(u)).max())


def paths_equal(a: CadlagPath, b: CadlagPath, T: float | None = None) -> bool:
    """Exact pointwise equality of two step paths on [0, T] (float ==)."""
    if a.dimension != b.dimension:
        return False
    if T is None:
        T = min(a.horizon, b.horizon)
    u = _union_times(a, b, T)
    return bool(np.all(a.sample(u) == b.sample(u)))


def write_path_csv(path: CadlagPath, f) -> None:
    """Write the grid rows as ``t,x1,...,xd`` (header included)."""
    own = isinstance(f, str)
    fh = open(f, "w", newline="") if own else f
    try:
        d = path.dimension
        fh.write("t," + ",".join(f"x{i+1}" for i in range(d)) + "\n")
        for t, row in zip(path.grid.times, path.values):
            fh.write(repr(float(t)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if own:
            fh.close()


def read_path_csv(f, horizon: float | None = None) -> CadlagPath:
    """Read a ``t,x1,...,xd`` file; rejects unsorted or duplicate times."""
    own = isinstance(f, str)
    fh = open(f, "r", newline="") if own else f
    try:
        header = fh.readline().strip()
        cols = header.split(",")
        if cols[0] != "t" or any(c != f"x{i+1}" for i, c in enumerate(cols[1:])) or len(cols) < 2:
            raise ValueError(f"bad path CSV header: {header!r}")
        data = np.loadtxt(io.StringIO(fh.read()), delimiter=",", ndmin=2)
    finally:
        if own:
            fh.close()
    if data.shape[0] == 0:
        raise ValueError("empty path CSV")
    if data.shape[1] != len(cols):
        raise ValueError("row width does not match header")
    times = data[:, 0]
    if times[0] != 0.0:
        raise ValueError("first row must have t=0")
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be sorted and free of duplicates")
    return CadlagPath(Partition(times), data[:, 1:], horizon)
