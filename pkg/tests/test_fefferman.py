import json
from math import factorial

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from fueter_kit.errors import PreconditionFailed, SignIndefinite
from fueter_kit.fefferman import (DefiningFunction, PolyExpansion, RadialExpansion, ball_profile,
                                  boundary_normalize, fefferman_iterate, j_equals_m_over_u,
                                  j_functional, j_polynomial, order_check, radial_j, sigma)
from fueter_kit.fields import ClosureField, PolyField


def square_norm(n):
    return sum((PolyField.variable(4 * n, i) * PolyField.variable(4 * n, i) for i in range(4 * n)),
               PolyField(4 * n))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_j_on_the_ball(n, rng):
    q = rng.standard_normal((5, n, 4)) * 0.3
    want = sigma(n) * 2 ** n * factorial(n)
    assert np.allclose(j_functional(1 - square_norm(n), q), want, rtol=1e-12)


def test_exact_solution_n1(rng):
    q = rng.standard_normal((5, 1, 4)) * 0.3
    rho = (1 - square_norm(1)) * 2 ** -0.5
    assert np.allclose(j_functional(rho, q), 1, rtol=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_radial_formula_matches_jets(n, rng):
    F = lambda t: 1 - t + 0.3 * t * t - 0.1 * t ** 3
    rho = ClosureField(4 * n, lambda x: F((x * x).sum(-1)))
    q = rng.standard_normal((4, n, 4)) * 0.4
    t = np.sum(q ** 2, axis=(1, 2))
    F1 = -1 + 0.6 * t - 0.3 * t ** 2
    F2 = 0.6 - 0.6 * t
    assert np.allclose(j_functional(rho, q), radial_j(F(t), F1, F2, t, n), rtol=1e-10)


@given(st.floats(0.1, 5.0))
def test_j_scaling(lam):
    rng = np.random.default_rng(5)
    rho = PolyField.random(8, 2, rng, real=True)
    q = rng.standard_normal((3, 2, 4))
    lhs, rhs = j_functional(rho * lam, q), lam ** 3 * j_functional(rho, q)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-12 * np.abs(rhs).max())


def test_j_equals_m_over_u(rng):
    rho = (2 - square_norm(2)) * 0.5 + PolyField.random(8, 2, rng, real=True, scale=0.05)
    assert j_equals_m_over_u(rho, rng.standard_normal((5, 2, 4)) * 0.3).passed


def test_j_polynomial_agrees_with_jets(rng):
    rho = PolyField.random(4, 2, rng, real=True)
    q = rng.standard_normal((3, 1, 4))
    assert np.allclose(j_polynomial(rho, 1)(q.reshape(3, 4)), j_functional(rho, q))


def test_normalization_uses_negative_exponent():
    nf = boundary_normalize(DefiningFunction.ball(1))
    assert nf.norm.eta == pytest.approx(2 ** -0.5)
    assert nf.norm.sign_observed == nf.norm.sign_expected == 1
    nf = boundary_normalize(DefiningFunction.ball(2))
    assert nf.norm.sign_observed == -1
    assert nf.norm.eta == pytest.approx(8 ** (-1 / 3))


def test_exact_ball_stays_exact():
    exp = fefferman_iterate(DefiningFunction.ball(1, ball_profile(0.0)))
    assert exp.stages == [2, 3, 4]
    for d in exp.diagnostics.values():
        assert d["exact"] and d["max_residual"] <= 1e-10


def test_stage_update_on_unnormalized_ball():
    # s = 2 with J = 2: factor 1 + 2 (1 - 2) / 6 = 2/3
    eng = RadialExpansion(ball_profile(0.0), 1, 1.0)
    with mpmath.workdps(30):
        s1, s2 = eng.series(1, 0.3, 0), eng.series(2, 0.3, 0)
    assert float(s2[0] / s1[0]) == pytest.approx(2 / 3)


@pytest.mark.parametrize("c", [0.5, 1.0])
def test_orders_of_vanishing_n1(c):
    exp = fefferman_iterate(DefiningFunction.ball(1, ball_profile(c)), rays=1)
    for s, d in exp.diagnostics.items():
        assert d["slope"] >= s - 0.25
    assert json.loads(exp.dumps())["stages"][0]["s"] == 2


def test_generic_engine_matches_radial_engine():
    # the unit ball written as a polynomial, and perturbed so only the generic engine applies
    phi = (1 - square_norm(1)) * (1 + (1 - square_norm(1)) * 0.5)
    generic = DefiningFunction(1, field=phi)
    radial = DefiningFunction.ball(1, ball_profile(0.5))
    eg = fefferman_iterate(generic, check=False)
    er = fefferman_iterate(radial, check=False)
    assert isinstance(eg.engine, PolyExpansion)
    t = 0.49
    pts = [mpmath.mpf(0.7), 0, 0, 0]
    with mpmath.workdps(50):
        a = eg.engine.residual_at(2, pts)
        b = er.engine.residual(2, mpmath.mpf(t))
    assert float(abs(a - b)) <= 1e-10 * max(1.0, float(b))


def test_generic_order_check():
    phi = 1 - square_norm(1)
    shifted = phi * (1 + phi * 0.3)
    exp = fefferman_iterate(DefiningFunction(1, field=shifted), smax=2, rays=2)
    assert exp.diagnostics[2]["slope"] >= 1.75


def test_sign_change_on_a_waisted_domain():
    # a dumbbell in H^2 whose waist makes J(phi) positive on part of the boundary
    v = [PolyField.variable(8, i) for i in range(8)]
    rest = sum((x * x for x in v[1:]), PolyField(8))
    w = v[0] * v[0] - 0.45
    phi = 1 - w * w * 4 - rest
    with pytest.raises(SignIndefinite):
        boundary_normalize(DefiningFunction(2, field=phi), rng=np.random.default_rng(0), count=64)


def test_errors():
    with pytest.raises(PreconditionFailed):
        fefferman_iterate(DefiningFunction(1, field=square_norm(1) - 1), check=False)
    with pytest.raises(PreconditionFailed):
        fefferman_iterate(DefiningFunction(1, field=ClosureField(4, lambda x: 1 - (x * x).sum(-1))),
                          check=False)
