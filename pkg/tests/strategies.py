# tests/strategies.py
"""Hypothesis strategies for random finite metric spaces and functions on them."""
import numpy as np
from hypothesis import assume, strategies as st
from hypothesis.extra.numpy import arrays

from app.lip_core import LipFunction
from app.metric_core import point_cloud_space, snowflake

_coordinate = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False)
_value = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)


@st.composite
def metric_spaces(draw, min_points=2, max_points=12, snowflaked=True):
    """Point clouds in R^k under l1, l2 or l-infinity, optionally snowflaked."""
    n = draw(st.integers(min_value=min_points, max_value=max_points))
    k = draw(st.integers(min_value=1, max_value=3))
    coords = draw(arrays(np.float64, (n, k), elements=_coordinate))
    # spread the points along the diagonal so shrinking does not collapse them
    coords = coords + 0.25 * np.arange(n)[:, None]
    p = draw(st.sampled_from([1, 2, np.inf]))
    base = draw(st.integers(min_value=0, max_value=n - 1))
    space = point_cloud_space(coords, p=p, base=base)
    assume(space.min_positive_distance > 1e-2)
    if snowflaked and draw(st.booleans()):
        alpha = draw(st.floats(min_value=0.3, max_value=1.0))
        space = snowflake(space, alpha)
    return space


@st.composite
def lip_functions(draw, space=None):
    """A function vanishing at the base point of a drawn (or given) space."""
    if space is None:
        space = draw(metric_spaces())
    raw = draw(arrays(np.float64, (space.n,), elements=_value))
    return LipFunction(space, raw - raw[space.base])


@st.composite
def function_pairs(draw):
    """Two functions on the same space."""
    space = draw(metric_spaces())
    return draw(lip_functions(space)), draw(lip_functions(space))
