import json

import numpy as np
import pytest

from fueter_kit.errors import ShapeMismatch, SingularLocus
from fueter_kit.group import (COMPLEX, GroupElement, act_complex, act_point, cocycles,
                              random_point, random_regular_points, singular_distance, verify_cocycle)
from fueter_kit.quat import embed_point, qmatmul, tau


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cocycle_identity(n, rng):
    for _ in range(20):
        g1, g2 = GroupElement.random(rng, n), GroupElement.random(rng, n)
        res = verify_cocycle(g1, g2, random_point(rng, n))
        assert res["max_rel_err"] <= 1e-10


def test_random_element_has_unit_det(rng):
    g = GroupElement.random(rng, 2)
    assert abs(g.det - 1) < 1e-10


def test_identity_acts_trivially(rng):
    q = random_point(rng, 2)
    assert np.allclose(act_point(GroupElement.identity(2), q), q)


def test_translation_action(rng):
    # c shifts points: (c + q) 1^{-1}
    c = rng.standard_normal((2, 1, 4))
    g = GroupElement.affine(2, c=c)
    q = random_point(rng, 2)
    assert np.allclose(act_point(g, q), q + c[:, 0, :])


def test_product_composes_actions(rng):
    g1, g2 = GroupElement.random(rng, 2), GroupElement.random(rng, 2)
    q = random_regular_points(rng, g1, 1)[0]
    want = act_point(g2, act_point(g1, q))
    assert np.allclose(act_point(g1 @ g2, q), want)


def test_complex_side_agrees(rng):
    g = GroupElement.random(rng, 2)
    q = random_regular_points(rng, g, 3)
    lhs = act_complex(g, embed_point(q))
    assert np.allclose(lhs, embed_point(act_point(g, q)))
    cv_q, cv_c = cocycles(g, q), cocycles(g.to_complex(), embed_point(q))
    assert np.allclose(cv_q.complex_j1, cv_c.j1)
    assert np.allclose(cv_q.complex_j2, cv_c.j2)


def test_inverse(rng):
    g = GroupElement.random(rng, 1)
    e = g @ g.inverse()
    assert np.allclose(e.complex_inverse, np.eye(4), atol=1e-10)


def test_singular_locus(rng):
    g = GroupElement.random(rng, 1)
    a, b, _, _ = g.inverse_blocks
    # q with a + b q = 0
    from fueter_kit.quat import qinv, qmul
    q = -qmul(qinv(b[0, 0]), a[0, 0])[None]
    assert singular_distance(g, q) < 1e-12
    with pytest.raises(SingularLocus):
        act_point(g, q)


def test_json_round_trip(rng):
    for side in ("quaternionic", COMPLEX):
        g = GroupElement.random(rng, 2, side=side)
        h = GroupElement.from_json(json.loads(json.dumps(g.to_json())))
        assert h.side == side
        assert np.array_equal(h.inv, g.inv)


def test_shape_errors():
    with pytest.raises(ShapeMismatch):
        GroupElement(np.zeros((2, 3, 4)))
    with pytest.raises(ShapeMismatch):
        GroupElement(np.eye(3), side=COMPLEX)


def test_regular_points_respect_margin(rng):
    g = GroupElement.random(rng, 2)
    q = random_regular_points(rng, g, 30)
    assert q.shape == (30, 2, 4)
    assert np.all(singular_distance(g, q) > 0)


def test_j2_matches_block_formula(rng):
    g = GroupElement.random(rng, 2)
    q = random_point(rng, 2)
    cv = cocycles(g, q)
    a, b, c, d = (tau(x) for x in g.inverse_blocks)
    z = embed_point(q)
    W = (c + d @ z) @ np.linalg.inv(a + b @ z)
    assert np.allclose(cv.complex_j2, d - W @ b)
    assert np.allclose(tau(cv.j1), a + b @ z)
