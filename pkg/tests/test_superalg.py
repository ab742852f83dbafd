import numpy as np
import pytest
from hypothesis import given, strategies as st

from fueter_kit.errors import SizeMismatch
from fueter_kit.superalg import (S_upper, SuperElement, act_algebra, act_group, act_linear, lower_index,
                                 merge_sign, raise_index, theta)

n2 = 2
idx = st.integers(0, 2 * n2 - 1)


@given(idx, idx)
def test_wedge_anticommutes(a, b):
    wa, wb = SuperElement.omega(n2, a), SuperElement.omega(n2, b)
    assert (wa * wb + wb * wa).is_zero()


def test_wedge_sign_and_square():
    w = lambda *i: SuperElement.omega(n2, *i)
    assert (w(1) * w(0)).coefficient((0, 0), (0, 1)) == -1
    assert (w(0) * w(0)).is_zero()
    assert w(2, 0, 1).coefficient((0, 0), (0, 1, 2)) == 1
    assert w(1, 0, 2).coefficient((0, 0), (0, 1, 2)) == -1
    assert merge_sign((1, 3), (0, 2)) == -1
    assert merge_sign((1,), (1,)) == 0


def test_primed_variables_commute():
    s0, s1 = SuperElement.s_var(1, 0), SuperElement.s_var(1, 1)
    assert (s0 * s1 - s1 * s0).is_zero()
    assert (s0 ** 3).coefficient((3, 0), ()) == 1


def test_top_form_of_theta_power():
    # theta^n = n! omega^0 ... omega^{2n-1}
    for n, fact in [(1, 1), (2, 2), (3, 6)]:
        assert (theta(n) ** n).top_coefficient() == fact


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_raise_lower_round_trip(x0, x1):
    assert lower_index(raise_index((x0, x1))) == (x0, x1)
    assert raise_index((x0, x1)) == (x1, -x0)


def test_s_upper():
    # S^{0'} = S_{1'} and S^{1'} = -S_{0'}
    assert S_upper(1, 0).coefficient((0, 1), ()) == 1
    assert S_upper(1, 1).coefficient((1, 0), ()) == -1


def test_partials():
    x = SuperElement.s(1, 2, 1, c=3.0) * SuperElement.omega(1, 0)
    assert x.partial_s(0).coefficient((1, 1), (0,)) == 6.0
    assert x.partial_s(1).coefficient((2, 0), (0,)) == 3.0
    assert x.contract_omega(0).coefficient((2, 1), ()) == 3.0


def test_group_action_is_multiplicative(rng):
    m = rng.standard_normal((4, 4))
    x = SuperElement.omega(2, 0, 3) + SuperElement.omega(2, 1, 2, c=2.0)
    y = SuperElement.omega(2, 1) + SuperElement.omega(2, 2, c=-1.0)
    lhs = act_group(x * y, m_grass=m)
    rhs = act_group(x, m_grass=m) * act_group(y, m_grass=m)
    assert lhs.allclose(rhs)


def test_group_action_on_top_form_is_determinant(rng):
    m = rng.standard_normal((4, 4))
    top = SuperElement.omega(2, 0, 1, 2, 3)
    assert act_group(top, m_grass=m).top_coefficient() == pytest.approx(np.linalg.det(m))


def test_algebra_action_is_derivative_of_group_action(rng):
    X = rng.standard_normal((2, 2))
    x = SuperElement.s(1, 2, 1) + SuperElement.s(1, 0, 3, c=0.5)
    h = 1e-6
    up = act_group(x, m_sym=np.eye(2) + h * X)
    dn = act_group(x, m_sym=np.eye(2) - h * X)
    fd = (up - dn).scale(1 / (2 * h))
    assert fd.allclose(act_algebra(x, m_sym=X), tol=1e-6)


def test_act_linear_checks_size():
    with pytest.raises(SizeMismatch):
        act_linear(np.eye(3), SuperElement.omega(2, 0))
    with pytest.raises(SizeMismatch):
        SuperElement.omega(1, 0) + SuperElement.omega(2, 0)
