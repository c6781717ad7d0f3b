import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ballwalk.rng import root_stream, substream


def test_reproducible():
    a = substream(42, 7).random(100)
    b = substream(42, 7).random(100)
    assert np.array_equal(a, b)


def test_substreams_differ():
    a = substream(42, 0).random(100)
    b = substream(42, 1).random(100)
    assert not np.array_equal(a, b)


def test_root_is_task_zero():
    assert np.array_equal(root_stream(5).random(10), substream(5, 0).random(10))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**64 - 1),
       t1=st.integers(min_value=0, max_value=2**32),
       t2=st.integers(min_value=0, max_value=2**32))
def test_distinct_tasks_never_collide(seed, t1, t2):
    x1 = substream(seed, t1).integers(0, 2**63, 4)
    x2 = substream(seed, t2).integers(0, 2**63, 4)
    if t1 == t2:
        assert np.array_equal(x1, x2)
    else:
        assert not np.array_equal(x1, x2)


def test_rejects_bad_keys():
    with pytest.raises(ValueError):
        substream(-1, 0)
    with pytest.raises(ValueError):
        substream(2**64, 0)
    with pytest.raises(ValueError):
        substream(0, -3)
