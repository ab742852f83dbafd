"""Quaternions, quaternionic matrices and the complex embedding tau.

A quaternion x1 + x2 i + x3 j + x4 k is stored as the last axis of length 4 of
a float array, so a p x m quaternionic matrix is an array of shape (p, m, 4)
and a point of H^n is an array of shape (n, 4).  Complex images are ordinary
complex numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotInImage, SizeMismatch

TAU_TOL = 1e-9

# Hamilton product structure constants: (pq)_k = sum_ij _MUL[i, j, k] p_i q_j
_MUL = np.zeros((4, 4, 4))
for _i, _j, _k, _s in [
    (0, 0, 0, 1), (1, 1, 0, -1), (2, 2, 0, -1), (3, 3, 0, -1),
    (0, 1, 1, 1), (1, 0, 1, 1), (2, 3, 1, 1), (3, 2, 1, -1),
    (0, 2, 2, 1), (2, 0, 2, 1), (3, 1, 2, 1), (1, 3, 2, -1),
    (0, 3, 3, 1), (3, 0, 3, 1), (1, 2, 3, 1), (2, 1, 3, -1),
]:
    _MUL[_i, _j, _k] = _s


def qmul(p, q):
    """Hamilton product of quaternion arrays (..., 4), broadcasting."""
    return np.einsum("...i,...j,ijk->...k", np.asarray(p, float), np.asarray(q, float), _MUL)


def qconj(q):
    q = np.array(q, dtype=float)
    q[..., 1:] *= -1
    return q


def qnorm2(q):
    return np.sum(np.asarray(q, float) ** 2, axis=-1)


def qinv(q):
    return qconj(q) / qnorm2(q)[..., None]


def qmatmul(A, B):
    """Product of quaternionic matrices (..., p, m, 4) @ (..., m, r, 4)."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    if A.shape[-2] != B.shape[-3]:
        raise SizeMismatch(f"cannot multiply {A.shape[:-1]} by {B.shape[:-1]}")
    return np.einsum("...pmi,...mrj,ijk->...prk", A, B, _MUL)


def tau(M):
    """Complex image of a quaternion (4,) or quaternionic matrix (..., p, m, 4).

    Each entry x1 + x2 i + x3 j + x4 k becomes the 2x2 block
    [[x1 - i x2, -x3 + i x4], [x3 + i x4, x1 + i x2]].
    """
    M = np.asarray(M, float)
    if M.ndim == 1:
        return tau(M[None, None, :])
    if M.ndim == 2 or M.shape[-1] != 4:
        raise SizeMismatch(f"expected a quaternion (4,) or matrix (..., p, m, 4), got {M.shape}")
    x1, x2, x3, x4 = (M[..., i] for i in range(4))
    blk = np.empty(M.shape[:-1] + (2, 2), dtype=complex)
    blk[..., 0, 0] = x1 - 1j * x2
    blk[..., 0, 1] = -x3 + 1j * x4
    blk[..., 1, 0] = x3 + 1j * x4
    blk[..., 1, 1] = x1 + 1j * x2
    p, m = M.shape[-3], M.shape[-2]
    # (..., p, m, 2, 2) -> (..., p, 2, m, 2) -> (..., 2p, 2m)
    blk = np.swapaxes(blk, -3, -2)
    return blk.reshape(M.shape[:-3] + (2 * p, 2 * m))


def tau_violation(Z):
    """Largest violation of the tau block pattern, relative to max(1, |Z|)."""
    Z = np.asarray(Z, complex)
    a = Z[..., 0::2, 0::2]
    b = Z[..., 0::2, 1::2]
    c = Z[..., 1::2, 0::2]
    d = Z[..., 1::2, 1::2]
    err = max(np.max(np.abs(a - d.conj()), initial=0.0), np.max(np.abs(b + c.conj()), initial=0.0))
    return err / max(1.0, np.max(np.abs(Z), initial=0.0))


def tau_inverse(Z, tol=TAU_TOL):
    """Quaternionic preimage (..., p, m, 4) of a complex (..., 2p, 2m) matrix."""
    Z = np.asarray(Z, complex)
    if Z.shape[-1] % 2 or Z.shape[-2] % 2:
        raise NotInImage(f"shape {Z.shape} has an odd dimension")
    v = tau_violation(Z)
    if v > tol:
        raise NotInImage(f"block pattern violated by {v:.3e}", violation=v)
    a = Z[..., 0::2, 0::2]
    b = Z[..., 0::2, 1::2]
    c = Z[..., 1::2, 0::2]
    d = Z[..., 1::2, 1::2]
    return np.stack([((a + d) / 2).real, ((d - a) / 2).imag, ((c - b) / 2).real, ((c + b) / 2).imag], axis=-1)


def embed_point(q):
    """Point of H^n, shape (..., n, 4), to its 2n x 2 complex matrix z_{AA'}."""
    q = np.asarray(q, float)
    return tau(q[..., :, None, :])


def point_from_embedding(Z, tol=TAU_TOL):
    return tau_inverse(Z, tol)[..., :, 0, :]


def quat_matrix_inverse(M):
    """Inverse of a square quaternionic matrix, computed through tau."""
    return tau_inverse(np.linalg.inv(tau(M)))


def random_quat_matrix(rng, p, m, scale=1.0):
    return scale * rng.standard_normal((p, m, 4))


@dataclass(frozen=True)
class Quaternion:
    x1: float = 0.0
    x2: float = 0.0
    x3: float = 0.0
    x4: float = 0.0

    @classmethod
    def from_array(cls, a):
        return cls(*(float(t) for t in a))

    def as_array(self):
        return np.array([self.x1, self.x2, self.x3, self.x4])

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(qmul(self.as_array(), other.as_array()))
        return Quaternion.from_array(self.as_array() * other)

    def __rmul__(self, other):
        return Quaternion.from_array(self.as_array() * other)

    def __add__(self, other):
        return Quaternion.from_array(self.as_array() + other.as_array())

    def __sub__(self, other):
        return Quaternion.from_array(self.as_array() - other.as_array())

    def __neg__(self):
        return Quaternion.from_array(-self.as_array())

    def conj(self):
        return Quaternion(self.x1, -self.x2, -self.x3, -self.x4)

    def norm2(self):
        return float(qnorm2(self.as_array()))

    def __abs__(self):
        return float(np.sqrt(self.norm2()))

    def inverse(self):
        return Quaternion.from_array(qinv(self.as_array()))


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def quat_mul(p: Quaternion, q: Quaternion) -> Quaternion:
    return p * q


class QuatMatrix:
    """Immutable quaternionic matrix backed by an array of shape (rows, cols, 4)."""

    __slots__ = ("_a",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 3 or a.shape[-1] != 4:
            raise SizeMismatch(f"expected (rows, cols, 4), got {a.shape}")
        a.setflags(write=False)
        self._a = a

    @property
    def array(self):
        return self._a

    @property
    def shape(self):
        return self._a.shape[:2]

    def __matmul__(self, other):
        return QuatMatrix(qmatmul(self._a, other._a))

    def __add__(self, other):
        return QuatMatrix(self._a + other._a)

    def __sub__(self, other):
        return QuatMatrix(self._a - other._a)

    def __getitem__(self, idx):
        return Quaternion.from_array(self._a[idx])

    def tau(self):
        return tau(self._a)

    def inverse(self):
        return QuatMatrix(quat_matrix_inverse(self._a))

    @classmethod
    def from_complex(cls, Z, tol=TAU_TOL):
        return cls(tau_inverse(Z, tol))

    @classmethod
    def identity(cls, n):
        a = np.zeros((n, n, 4))
        a[np.arange(n), np.arange(n), 0] = 1.0
        return cls(a)

    def __repr__(self):
        return f"QuatMatrix({self.shape[0]}x{self.shape[1]})"
