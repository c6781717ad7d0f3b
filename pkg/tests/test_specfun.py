import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ballwalk.errors import InvalidParameterError, UnsupportedDimensionError
from ballwalk.specfun import (
    gamma_d,
    gamma_prime_at_zero,
    gamma_quadrature_oracle,
    gamma_sup_bound,
    gamma_table,
    phi_h,
    super_level_set,
    unit_ball_volume,
)


def test_unit_ball_volume_known_values():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(np.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * np.pi / 3.0)


def test_gamma_closed_forms_match_quadrature_oracle():
    # dual route: closed Bessel/trig forms vs adaptive slice quadrature
    for d in (1, 2, 3):
        for s in np.logspace(-6, 4, 21):
            assert gamma_d(d, s) == pytest.approx(
                gamma_quadrature_oracle(d, s), abs=1e-8)


def test_gamma_at_zero_and_monotone_start():
    for d in (1, 2, 3):
        assert gamma_d(d, 0.0) == 1.0
        s = np.linspace(0.0, 1.0, 50)
        assert np.all(np.diff(gamma_d(d, s)) < 0)


def test_gamma_derivative_at_zero():
    for d in (1, 2, 3):
        num = (gamma_d(d, 1e-8) - 1.0) / 1e-8
        assert num == pytest.approx(-1.0 / (2 * (d + 2)), abs=1e-6)
        assert gamma_prime_at_zero(d) == -1.0 / (2 * (d + 2))


def test_series_closed_form_crossover_is_smooth():
    # both branches agree with the quadrature oracle right at the switchover
    for d in (1, 2, 3):
        for s in ((0.999e-2) ** 2, (1.001e-2) ** 2):
            assert gamma_d(d, s) == pytest.approx(
                gamma_quadrature_oracle(d, s, tol=1e-12), abs=1e-9)


def test_gamma_rejects_bad_input():
    with pytest.raises(InvalidParameterError):
        gamma_d(1, -0.5)
    with pytest.raises(UnsupportedDimensionError):
        gamma_d(4, 1.0)


def test_phi_h_small_s_limit():
    # phi_h(s) -> s / h^2 for small s (Taylor of gamma)
    for d in (1, 2, 3):
        s = 1e-6
        assert phi_h(d, 0.1, s) == pytest.approx(s / 0.01, rel=1e-4)


@settings(max_examples=50, deadline=None)
@given(d=st.sampled_from([1, 2, 3]),
       c=st.floats(min_value=0.01, max_value=0.99),
       u=st.floats(min_value=0.0, max_value=1.0))
def test_super_level_membership_consistent(d, c, u):
    sls = super_level_set(d, c)
    # a point sampled inside a reported interval satisfies gamma >= c
    lo, hi = sls.intervals[0]
    s = lo + u * (hi - lo)
    assert gamma_d(d, s) >= c - 1e-7
    # midpoints between consecutive intervals lie strictly below c
    for (a, b), (a2, _) in zip(sls.intervals, sls.intervals[1:]):
        mid = 0.5 * (b + a2)
        assert gamma_d(d, mid) < c


def test_super_level_degenerate_and_truncated():
    assert super_level_set(1, 1.0).intervals == [(0.0, 0.0)]
    assert super_level_set(1, -0.05).truncated
    assert not super_level_set(1, 0.5).truncated


def test_gamma_sup_bound_dominates_samples():
    for d in (1, 2, 3):
        for s_min in (0.5, 4.0, 50.0):
            bound = gamma_sup_bound(d, s_min)
            s = np.linspace(s_min, s_min + 500.0, 20000)
            assert np.max(np.abs(gamma_d(d, s))) <= bound + 1e-9
            assert bound < 1.0


def test_gamma_table_shape():
    t = gamma_table(2, [0.0, 1.0, 4.0])
    assert t.shape == (3, 2)
    assert t[0, 1] == 1.0
