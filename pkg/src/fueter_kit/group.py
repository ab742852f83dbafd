"""Projective group elements, fractional-linear actions and the cocycles J1, J2.

An element is always stored through its inverse g^{-1} = [[a, b], [c, d]], since
every formula acts by g^{-1}.  On the quaternionic side the blocks are
quaternionic (a: 1x1, b: 1xn, c: nx1, d: nxn); on the complex side they are
complex (2x2, 2x2n, 2nx2, 2nx2n).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, SingularLocus
from .quat import embed_point, qinv, qmatmul, qnorm2, quat_matrix_inverse, tau

DELTA_SING = 1e-8
QUATERNIONIC = "quaternionic"
COMPLEX = "complex"


class GroupElement:
    __slots__ = ("side", "n", "inv")

    def __init__(self, inverse, side=QUATERNIONIC):
        inv = np.array(inverse, dtype=float if side == QUATERNIONIC else complex)
        if side == QUATERNIONIC:
            if inv.ndim != 3 or inv.shape[0] != inv.shape[1] or inv.shape[2] != 4:
                raise ShapeMismatch(f"quaternionic g^-1 must be (n+1, n+1, 4), got {inv.shape}")
            self.n = inv.shape[0] - 1
        elif side == COMPLEX:
            if inv.ndim != 2 or inv.shape[0] != inv.shape[1] or inv.shape[0] % 2:
                raise ShapeMismatch(f"complex g^-1 must be (2n+2, 2n+2), got {inv.shape}")
            self.n = inv.shape[0] // 2 - 1
        else:
            raise ValueError(f"unknown side {side!r}")
        if self.n < 1:
            raise ShapeMismatch("need n >= 1")
        inv.setflags(write=False)
        self.inv = inv
        self.side = side

    # construction --------------------------------------------------------
    @classmethod
    def from_inverse_blocks(cls, a, b, c, d, side=QUATERNIONIC):
        if side == QUATERNIONIC:
            a, b, c, d = (np.asarray(x, float) for x in (a, b, c, d))
            a = a.reshape(1, 1, 4)
            n = d.shape[0]
            b = b.reshape(1, n, 4)
            c = c.reshape(n, 1, 4)
            top = np.concatenate([a, b], axis=1)
            bot = np.concatenate([c, d], axis=1)
            return cls(np.concatenate([top, bot], axis=0), side)
        return cls(np.block([[a, b], [c, d]]), side)

    @classmethod
    def from_matrix(cls, g, side=QUATERNIONIC):
        """Build from g itself (one inversion)."""
        if side == QUATERNIONIC:
            return cls(quat_matrix_inverse(g), side)
        return cls(np.linalg.inv(g), side)

    @classmethod
    def identity(cls, n, side=QUATERNIONIC):
        if side == QUATERNIONIC:
            m = np.zeros((n + 1, n + 1, 4))
            m[np.arange(n + 1), np.arange(n + 1), 0] = 1.0
            return cls(m, side)
        return cls(np.eye(2 * n + 2, dtype=complex), side)

    @classmethod
    def random(cls, rng, n, side=QUATERNIONIC, near_identity=None):
        """Gaussian g^{-1}, rescaled so that det of its complex image is 1.

        With ``near_identity=eps`` the matrix is I + eps * Gaussian instead.
        """
        if side == QUATERNIONIC:
            m = rng.standard_normal((n + 1, n + 1, 4))
            if near_identity is not None:
                m = cls.identity(n).inv + near_identity * m
            det = np.linalg.det(tau(m)).real
            return cls(m * det ** (-1.0 / (2 * n + 2)), side)
        N = 2 * n + 2
        m = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        if near_identity is not None:
            m = np.eye(N) + near_identity * m
        det = np.linalg.det(m)
        return cls(m * det ** (-1.0 / N), side)

    @classmethod
    def affine(cls, n, a=None, c=None, d=None, side=QUATERNIONIC):
        """Element with b = 0 (defaults a = 1, c = 0, d = I)."""
        I = cls.identity(n, side).inv
        if side == QUATERNIONIC:
            a = I[:1, :1] if a is None else a
            c = np.zeros((n, 1, 4)) if c is None else c
            d = I[1:, 1:] if d is None else d
            return cls.from_inverse_blocks(a, np.zeros((1, n, 4)), c, d, side)
        a = I[:2, :2] if a is None else a
        c = np.zeros((2 * n, 2)) if c is None else c
        d = I[2:, 2:] if d is None else d
        return cls.from_inverse_blocks(a, np.zeros((2, 2 * n)), c, d, side)

    # views ---------------------------------------------------------------
    @property
    def inverse_blocks(self):
        m = self.inv
        k = 1 if self.side == QUATERNIONIC else 2
        return m[:k, :k], m[:k, k:], m[k:, :k], m[k:, k:]

    @property
    def complex_inverse(self):
        return tau(self.inv) if self.side == QUATERNIONIC else self.inv

    @property
    def complex_blocks(self):
        m = self.complex_inverse
        return m[:2, :2], m[:2, 2:], m[2:, :2], m[2:, 2:]

    def to_complex(self):
        return GroupElement(self.complex_inverse, COMPLEX)

    @property
    def det(self):
        """Determinant of the complex image of g^{-1} (recorded, not enforced)."""
        return complex(np.linalg.det(self.complex_inverse))

    def __matmul__(self, other):
        """The product g1 g2, whose inverse is g2^{-1} g1^{-1}."""
        if self.side != other.side:
            raise ShapeMismatch("cannot multiply elements from different sides")
        if self.side == QUATERNIONIC:
            return GroupElement(qmatmul(other.inv, self.inv), self.side)
        return GroupElement(other.inv @ self.inv, self.side)

    def inverse(self):
        if self.side == QUATERNIONIC:
            return GroupElement(quat_matrix_inverse(self.inv), self.side)
        return GroupElement(np.linalg.inv(self.inv), self.side)

    # serialization -------------------------------------------------------
    def to_json(self):
        def enc(x):
            if self.side == QUATERNIONIC:
                return x.tolist()
            return np.stack([x.real, x.imag], axis=-1).tolist()
        a, b, c, d = self.inverse_blocks
        return {"side": self.side, "n": self.n, "a": enc(a), "b": enc(b), "c": enc(c), "d": enc(d)}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        side = data["side"]

        def dec(x):
            x = np.asarray(x, float)
            return x if side == QUATERNIONIC else x[..., 0] + 1j * x[..., 1]
        return cls.from_inverse_blocks(*(dec(data[k]) for k in "abcd"), side=side)

    def __repr__(self):
        return f"GroupElement(side={self.side}, n={self.n})"


@dataclass(frozen=True)
class CocycleValue:
    j1: np.ndarray
    j2: np.ndarray
    side: str

    @property
    def complex_j1(self):
        return tau(self.j1) if self.side == QUATERNIONIC else self.j1

    @property
    def complex_j2(self):
        return tau(self.j2) if self.side == QUATERNIONIC else self.j2


def _as_column(q):
    """Quaternionic point (n, 4) or batch (P, n, 4) as column matrices."""
    q = np.asarray(q, float)
    return q[..., :, None, :]


def singular_distance(g, q):
    """|a + bq| (quaternionic modulus) or sqrt|det(a + bz)| on the complex side."""
    a, b, _, _ = g.inverse_blocks
    if g.side == QUATERNIONIC:
        j1 = a + qmatmul(b, _as_column(q))
        return np.sqrt(qnorm2(j1[..., 0, 0, :]))
    j1 = a + b @ np.asarray(q, complex)
    return np.sqrt(np.abs(np.linalg.det(j1)))


def _check(g, q, delta):
    dist = singular_distance(g, q)
    m = float(np.min(dist))
    if m <= delta:
        raise SingularLocus(m, delta)


def _pieces(g, q, delta):
    _check(g, q, delta)
    a, b, c, d = g.inverse_blocks
    if g.side == QUATERNIONIC:
        col = _as_column(q)
        j1 = a + qmatmul(b, col)
        j1inv = qinv(j1)
        num = c + qmatmul(d, col)
        return j1, j1inv, num, qmatmul(num, j1inv)
    z = np.asarray(q, complex)
    j1 = a + b @ z
    j1inv = np.linalg.inv(j1)
    num = c + d @ z
    return j1, j1inv, num, num @ j1inv


def act_point(g, q, delta=DELTA_SING):
    """g^{-1}.q = (c + dq)(a + bq)^{-1}."""
    _, _, _, w = _pieces(g, q, delta)
    return w[..., :, 0, :] if g.side == QUATERNIONIC else w


def cocycles(g, q, delta=DELTA_SING):
    """J1 = a + bq and J2 = d - (c + dq)(a + bq)^{-1} b."""
    j1, _, _, w = _pieces(g, q, delta)
    _, b, _, d = g.inverse_blocks
    if g.side == QUATERNIONIC:
        return CocycleValue(j1, d - qmatmul(w, b), g.side)
    return CocycleValue(j1, d - w @ b, g.side)


def _rel(lhs, rhs):
    num = np.linalg.norm(lhs - rhs, axis=(-2, -1))
    den = np.linalg.norm(rhs, axis=(-2, -1))
    return float(np.max(num / np.maximum(den, 1e-300)))


def verify_cocycle(g1, g2, q, delta=DELTA_SING):
    """Compare J(g2^{-1} g1^{-1}, q) with J(g2^{-1}, g1^{-1}.q) J(g1^{-1}, q)."""
    lhs = cocycles(g1 @ g2, q, delta)
    inner = cocycles(g1, q, delta)
    outer = cocycles(g2, act_point(g1, q, delta), delta)
    r1 = _rel(lhs.complex_j1, outer.complex_j1 @ inner.complex_j1)
    r2 = _rel(lhs.complex_j2, outer.complex_j2 @ inner.complex_j2)
    return {"max_rel_err_j1": r1, "max_rel_err_j2": r2, "max_rel_err": max(r1, r2)}


def act_complex(g, Z, delta=DELTA_SING):
    """Complex-side action of the complex image of g on a point Z (2n x 2)."""
    return act_point(g.to_complex() if g.side == QUATERNIONIC else g, Z, delta)


def random_point(rng, n, batch=None, scale=1.0):
    shape = (n, 4) if batch is None else (batch, n, 4)
    return scale * rng.standard_normal(shape)


def random_regular_points(rng, g, count, min_distance=0.1, scale=1.0, max_tries=100000):
    """Sample quaternionic points (count, n, 4) with |a + bq| >= min_distance * (|a| + |b||q|)."""
    a, b, _, _ = g.inverse_blocks
    if g.side != QUATERNIONIC:
        raise ValueError("quaternionic elements only")
    ref_a = np.sqrt(qnorm2(a[0, 0]))
    ref_b = np.sqrt(np.sum(b ** 2))
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not sample regular points")
        q = random_point(rng, g.n, scale=scale)
        d = float(singular_distance(g, q))
        if d >= min_distance * (ref_a + ref_b * np.linalg.norm(q)):
            out.append(q)
    return np.array(out)
