import json

import numpy as np
import pytest

from fueter_kit import cf
from fueter_kit.errors import ShapeMismatch
from fueter_kit.fields import PolyField
from fueter_kit.group import GroupElement, random_regular_points
from fueter_kit.superalg import SuperElement, theta


def test_level_shapes():
    assert cf.level_shape(2, 2, 0) == (2, 0, False)
    assert cf.level_shape(2, 2, 2) == (0, 2, False)
    assert cf.level_shape(2, 2, 3) == (0, 4, True)
    with pytest.raises(ShapeMismatch):
        cf.level_shape(1, 2, 3)
    assert cf.levels(1, 0) == [0, 1]
    assert cf.operator_levels(2, 1) == [0, 1, 2]


@pytest.mark.parametrize("n,k", [(1, 0), (1, 1), (1, 2), (1, 3), (2, 0), (2, 1)])
def test_projective_invariance(n, k, rng):
    for j in cf.operator_levels(n, k):
        g = GroupElement.random(rng, n)
        f = cf.Section.random(rng, n, k, j)
        rep = cf.verify_invariance(g, f, random_regular_points(rng, g, 6))
        assert rep.passed, rep


def test_invariance_detects_a_missing_transform(rng):
    g = GroupElement.random(rng, 1)
    f = cf.Section.random(rng, 1, 1, 0)
    q = random_regular_points(rng, g, 6)
    lhs = cf.D_j(cf.pi_j(g, f)).evaluate(q)
    rhs = cf.D_j(f).evaluate(q)
    _, rel = cf.compare_values(lhs, rhs, 6)
    assert rel > 1e-3


@pytest.mark.parametrize("n,k", [(1, 2), (1, 3), (2, 1), (2, 2)])
def test_complex_property(n, k, rng):
    worst = cf.complex_property(rng, n, k)
    assert worst and max(worst.values()) <= 1e-12


def test_operator_identities():
    for rep in cf.operator_identity_suite(7, n=2):
        assert rep.passed, rep


def test_baston_of_square_norm():
    t = sum((PolyField.variable(4, i) * PolyField.variable(4, i) for i in range(4)), PolyField(4))
    lap = cf.baston(t, 1).element
    want = theta(1).map_coeffs(lambda c: PolyField.constant(4, 2 * c))
    assert (lap - want).max_abs() == 0


def test_representation_and_tau(rng):
    g1, g2 = GroupElement.random(rng, 2), GroupElement.random(rng, 2)
    for j in (0, 2, 3):
        f = cf.Section.random(rng, 2, 2, j)
        q = random_regular_points(rng, g1, 4)
        assert cf.verify_representation(g1, g2, f, q).passed
        assert cf.verify_tau_compatibility(g1, f, q).passed


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_kernels_are_k_regular_and_blow_up(k, rng):
    n = 2
    b, a = rng.standard_normal((n, 4)), rng.standard_normal(4)
    primed = sorted(rng.integers(0, 2, k).tolist())
    K = cf.kernel_function(b, a, primed)
    q = random_regular_points(rng, cf._kernel_group(b, a, n), 20)
    assert cf.is_k_regular(K, q).max_abs_err <= 1e-8
    slope, dist, _ = cf.kernel_blowup_slope(b, a, primed, rng.standard_normal((n, 4)))
    # homogeneity: the kernel scales like |a + bq|^{-(2+k)}
    assert slope == pytest.approx(-(2 + k), abs=0.05)
    assert np.all(np.diff(dist) < 0)


def test_fantappie_sum_is_k_regular(rng):
    mu = SuperElement.s(1, 1, 1) + SuperElement.s(1, 2, 0, c=0.5)
    samples = [(rng.standard_normal((1, 4)), mu) for _ in range(3)]
    F = cf.fantappie(samples)
    q = rng.standard_normal((10, 1, 4)) * 0.1
    assert cf.is_k_regular(F, q).max_abs_err <= 1e-8


def test_hyperplane_point(rng):
    from fueter_kit.quat import qmatmul
    b, a = rng.standard_normal((2, 4)), rng.standard_normal(4)
    p = cf.hyperplane_point(b, a)
    val = a + qmatmul(b[None], p[:, None, :])[0, 0]
    assert np.allclose(val, 0)


def test_section_json_round_trip(rng):
    f = cf.Section.random(rng, 1, 2, 1)
    g = cf.Section.from_json(json.loads(json.dumps(f.to_json())))
    q = rng.standard_normal((3, 1, 4))
    assert cf.compare_values(f.evaluate(q), g.evaluate(q), 3)[0] == 0


def test_section_validation(rng):
    with pytest.raises(ShapeMismatch):
        cf.Section(1, 1, 0, SuperElement.omega(1, 0, c=PolyField.constant(4, 1.0)))
    with pytest.raises(ShapeMismatch):
        cf.D_j(cf.Section.random(rng, 1, 0, 1))
    with pytest.raises(ShapeMismatch):
        a, b = cf.Section.random(rng, 1, 1, 0), cf.Section.random(rng, 1, 2, 0)
        a + b
