import numpy as np
import pytest
from hypothesis import strategies as st

from pathwise import CadlagPath, Partition


def random_path(rng, dimension=1, max_points=12, horizon=1.0, scale=1.0):
    """Small random step path for plain-rng property loops."""
    n = int(rng.integers(1, max_points + 1))
    interior = np.sort(rng.uniform(0.0, horizon, size=n - 1)) if n > 1 else np.empty(0)
    times = np.concatenate([[0.0], interior])
    times = np.unique(times)
    values = rng.uniform(-scale, scale, size=(times.size, dimension))
    return CadlagPath(Partition(times), values, horizon)


@st.composite
def step_paths(draw, dimension=1, horizon=1.0):
    n = draw(st.integers(min_value=1, max_value=8))
    interior = draw(
        st.lists(
            st.floats(min_value=1e-6, max_value=horizon - 1e-6),
            min_size=n - 1,
            max_size=n - 1,
            unique=True,
        )
    )
    times = np.concatenate([[0.0], np.sort(interior)])
    vals = draw(
        st.lists(
            st.lists(
                st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
                min_size=dimension,
                max_size=dimension,
            ),
            min_size=times.size,
            max_size=times.size,
        )
    )
    return CadlagPath(Partition(times), np.asarray(vals), horizon)


@pytest.fixture
def rng():
    return np.random.default_rng(20240211)
