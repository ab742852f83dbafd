"""Scalar fields with exact polynomial and second-order jet backends.

A :class:`Jet` carries values together with first and second derivatives with
respect to ``nvars`` real (or holomorphic) variables.  Layout: ``val`` has shape
``S``, ``grad`` has shape ``(N,) + S`` and ``hess`` has shape ``(N, N) + S``.
The structural shape ``S`` normally starts with a batch axis over sample points.
Jet-with-jet arithmetic pads the shorter shape with trailing axes, so a batch
of scalars multiplies a batch of matrices entrywise; plain array constants use
ordinary numpy broadcasting.  Indexing ``jet[i, j]`` addresses trailing axes.
"""
from __future__ import annotations

import numbers
from functools import lru_cache
from itertools import product

import numpy as np

from .quat import embed_point


class Jet:
    __slots__ = ("val", "grad", "hess", "nvars")
    __array_ufunc__ = None

    def __init__(self, val, grad=None, hess=None, nvars=None):
        self.val = np.asarray(val)
        self.grad = grad
        self.hess = hess if grad is not None else None
        if nvars is None:
            if grad is None:
                raise ValueError("nvars required for an order-0 jet")
            nvars = grad.shape[0]
        self.nvars = nvars

    @property
    def order(self):
        if self.hess is not None:
            return 2
        return 1 if self.grad is not None else 0

    @property
    def shape(self):
        return self.val.shape

    # construction -------------------------------------------------------
    @classmethod
    def variables(cls, points, order=2):
        """Identity jet of a batch of points, shape (P, N)."""
        pts = np.asarray(points, dtype=complex)
        P, N = pts.shape
        grad = hess = None
        if order >= 1:
            grad = np.zeros((N, P, N), dtype=complex)
            grad[np.arange(N), :, np.arange(N)] = 1.0
        if order >= 2:
            hess = np.zeros((N, N, P, N), dtype=complex)
        return cls(pts, grad, hess, N)

    @classmethod
    def constant(cls, val, nvars, order=2):
        val = np.asarray(val, dtype=complex)
        grad = np.zeros((nvars,) + val.shape, dtype=complex) if order >= 1 else None
        hess = np.zeros((nvars, nvars) + val.shape, dtype=complex) if order >= 2 else None
        return cls(val, grad, hess, nvars)

    def _pad(self, ndim):
        k = ndim - self.val.ndim
        if k <= 0:
            return self
        idx = (Ellipsis,) + (None,) * k
        return Jet(self.val[idx], None if self.grad is None else self.grad[idx],
                   None if self.hess is None else self.hess[idx], self.nvars)

    def _trim(self, order):
        if order >= self.order:
            return self
        return Jet(self.val, self.grad if order >= 1 else None, None, self.nvars)

    def _pair(self, other):
        nd = max(self.val.ndim, other.val.ndim)
        o = min(self.order, other.order)
        return self._pad(nd)._trim(o), other._pad(nd)._trim(o)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._pair(other)
            return Jet(a.val + b.val, None if a.grad is None else a.grad + b.grad,
                       None if a.hess is None else a.hess + b.hess, a.nvars)
        return Jet(self.val + other, self.grad, self.hess, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, None if self.grad is None else -self.grad,
                   None if self.hess is None else -self.hess, self.nvars)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.val * other, None if self.grad is None else self.grad * other,
                       None if self.hess is None else self.hess * other, self.nvars)
        a, b = self._pair(other)
        val = a.val * b.val
        grad = hess = None
        if a.grad is not None:
            grad = a.grad * b.val + a.val * b.grad
        if a.hess is not None:
            cross = a.grad[:, None] * b.grad[None, :]
            hess = a.hess * b.val + a.val * b.hess + cross + np.swapaxes(cross, 0, 1)
        return Jet(val, grad, hess, a.nvars)

    __rmul__ = __mul__

    def apply(self, f0, f1=None, f2=None):
        """Chain rule for a scalar function with values f0, f1, f2 at self.val."""
        grad = hess = None
        if self.grad is not None:
            grad = f1 * self.grad
        if self.hess is not None:
            hess = f2 * self.grad[:, None] * self.grad[None, :] + f1 * self.hess
        return Jet(f0, grad, hess, self.nvars)

    def reciprocal(self):
        v = self.val
        if np.any(v == 0):
            raise ZeroDivisionError("jet division by a zero value")
        r = 1.0 / v
        return self.apply(r, -r * r, 2 * r * r * r)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, numbers.Integral) and p >= 0:
            out = Jet.constant(np.ones_like(self.val), self.nvars, self.order)
            base = self
            while p:
                if p & 1:
                    out = out * base
                p >>= 1
                if p:
                    base = base * base
            return out
        v = self.val
        return self.apply(v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def sqrt(self):
        r = np.sqrt(self.val)
        return self.apply(r, 0.5 / r, -0.25 / (r * self.val))

    def exp(self):
        e = np.exp(self.val)
        return self.apply(e, e, e)

    def log(self):
        v = self.val
        return self.apply(np.log(v), 1.0 / v, -1.0 / (v * v))

    def conj(self):
        return Jet(self.val.conj(), None if self.grad is None else self.grad.conj(),
                   None if self.hess is None else self.hess.conj(), self.nvars)

    @property
    def real(self):
        return Jet(self.val.real, None if self.grad is None else self.grad.real,
                   None if self.hess is None else self.hess.real, self.nvars)

    @property
    def imag(self):
        return Jet(self.val.imag, None if self.grad is None else self.grad.imag,
                   None if self.hess is None else self.hess.imag, self.nvars)

    # matrices -----------------------------------------------------------
    def __matmul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.val @ other, None if self.grad is None else self.grad @ other,
                       None if self.hess is None else self.hess @ other, self.nvars)
        o = min(self.order, other.order)
        a, b = self._trim(o), other._trim(o)
        val = a.val @ b.val
        grad = hess = None
        if o >= 1:
            grad = a.grad @ b.val + a.val @ b.grad
        if o >= 2:
            cross = a.grad[:, None] @ b.grad[None, :]
            hess = a.hess @ b.val + a.val @ b.hess + cross + np.swapaxes(cross, 0, 1)
        return Jet(val, grad, hess, a.nvars)

    def __rmatmul__(self, other):
        return Jet(other @ self.val, None if self.grad is None else other @ self.grad,
                   None if self.hess is None else other @ self.hess, self.nvars)

    def inv(self):
        """Matrix inverse over the last two axes."""
        V = np.linalg.inv(self.val)
        grad = hess = None
        if self.grad is not None:
            X = V @ self.grad
            grad = -X @ V
        if self.hess is not None:
            XX = X[:, None] @ X[None, :]
            hess = (XX + np.swapaxes(XX, 0, 1)) @ V - V @ self.hess @ V
        return Jet(V, grad, hess, self.nvars)

    def det2(self):
        return self[0, 0] * self[1, 1] - self[0, 1] * self[1, 0]

    @property
    def T(self):
        return Jet(np.swapaxes(self.val, -1, -2),
                   None if self.grad is None else np.swapaxes(self.grad, -1, -2),
                   None if self.hess is None else np.swapaxes(self.hess, -1, -2), self.nvars)

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        if not idx or idx[0] is not Ellipsis:
            idx = (Ellipsis,) + idx
        return Jet(self.val[idx], None if self.grad is None else self.grad[idx],
                   None if self.hess is None else self.hess[idx], self.nvars)

    def reshape_trailing(self, ndrop, shape):
        """Replace the last ``ndrop`` axes by ``shape``."""
        def rs(a):
            return None if a is None else a.reshape(a.shape[: a.ndim - ndrop] + tuple(shape))
        return Jet(rs(self.val), rs(self.grad), rs(self.hess), self.nvars)

    def sum(self, axis=-1):
        if axis >= 0:
            raise ValueError("only trailing axes (negative) may be summed")
        return Jet(self.val.sum(axis), None if self.grad is None else self.grad.sum(axis),
                   None if self.hess is None else self.hess.sum(axis), self.nvars)

    @staticmethod
    def stack(jets, axis=-1):
        if axis >= 0:
            raise ValueError("stacking axis must be negative")
        o = min(j.order for j in jets)
        jets = [j._trim(o) for j in jets]
        val = np.stack([j.val for j in jets], axis)
        grad = np.stack([j.grad for j in jets], axis) if o >= 1 else None
        hess = np.stack([j.hess for j in jets], axis) if o >= 2 else None
        return Jet(val, grad, hess, jets[0].nvars)

    # derivatives --------------------------------------------------------
    def partial(self, i):
        if self.grad is None:
            raise ValueError("jet carries no derivative information")
        return Jet(self.grad[i], None if self.hess is None else self.hess[i], None, self.nvars)

    def __repr__(self):
        return f"Jet(shape={self.val.shape}, nvars={self.nvars}, order={self.order})"


def is_zero(c):
    if isinstance(c, numbers.Number):
        return c == 0
    if isinstance(c, PolyField):
        return not c.terms
    return False


# polynomial backend ------------------------------------------------------

class PolyField:
    """Sparse polynomial in ``nvars`` variables with complex coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        t = {}
        for e, c in (terms or {}).items():
            c = complex(c)
            if c != 0:
                t[tuple(int(x) for x in e)] = c
        self.terms = t

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars, i):
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1.0})

    @classmethod
    def random(cls, nvars, degree, rng, real=False, scale=1.0):
        """Dense random polynomial of total degree <= degree."""
        terms = {}
        for e in monomial_exponents(nvars, degree):
            c = rng.standard_normal()
            if not real:
                c = c + 1j * rng.standard_normal()
            terms[e] = scale * c
        return cls(nvars, terms)

    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def _lift(self, other):
        if isinstance(other, PolyField):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return PolyField.constant(self.nvars, other)

    def __add__(self, other):
        if isinstance(other, Jet):
            return NotImplemented
        other = self._lift(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return PolyField(self.nvars, t)

    __radd__ = __add__

    def __neg__(self):
        return PolyField(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return NotImplemented
        if not isinstance(other, PolyField):
            if other == 0:
                return PolyField(self.nvars)
            return PolyField(self.nvars, {e: c * other for e, c in self.terms.items()})
        if len(self.terms) * len(other.terms) > 256:
            packed = _packed_product(self, other)
            if packed is not None:
                return packed
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return PolyField(self.nvars, t)

    __rmul__ = __mul__

    def partial(self, i):
        t = {}
        for e, c in self.terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                t[tuple(f)] = c * e[i]
        return PolyField(self.nvars, t)

    def max_abs(self):
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def __call__(self, points):
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            return self(pts[None])[0]
        out = np.zeros(pts.shape[0], dtype=complex)
        for e, c in self.terms.items():
            out += c * np.prod(pts ** np.array(e), axis=1)
        return out

    def at(self, x):
        return eval_polys([self], x)[0]

    def jet(self, points, order=2):
        return self.at(Jet.variables(points, order))

    def compose_linear(self, L):
        """Substitute x_i = sum_j L[i, j] y_j; returns a polynomial in y."""
        L = np.asarray(L, dtype=complex)
        m = L.shape[1]
        lin = [PolyField(m, {tuple(int(k == j) for k in range(m)): L[i, j] for j in range(m)})
               for i in range(self.nvars)]
        out = PolyField(m)
        for e, c in self.terms.items():
            term = PolyField.constant(m, c)
            for i, p in enumerate(e):
                for _ in range(p):
                    term = term * lin[i]
            out = out + term
        return out

    def to_json(self):
        return {"nvars": self.nvars,
                "terms": [{"exp": list(e), "c": [c.real, c.imag]} for e, c in sorted(self.terms.items())]}

    @classmethod
    def from_json(cls, d):
        return cls(d["nvars"], {tuple(t["exp"]): complex(*t["c"]) for t in d["terms"]})

    def __repr__(self):
        return f"PolyField(nvars={self.nvars}, terms={len(self.terms)})"


def _packed_product(p, q, chunk=1 << 22):
    """Product of two large PolyFields with exponents packed into int64 keys."""
    base = p.degree() + q.degree() + 1
    if base ** p.nvars >= 2 ** 62:
        return None
    weights = base ** np.arange(p.nvars - 1, -1, -1, dtype=np.int64)
    E1 = np.array(list(p.terms), dtype=np.int64)
    E2 = np.array(list(q.terms), dtype=np.int64)
    k1, k2 = E1 @ weights, E2 @ weights
    c1 = np.array(list(p.terms.values()), dtype=complex)
    c2 = np.array(list(q.terms.values()), dtype=complex)
    keys, coeffs = [], []
    step = max(1, chunk // len(k2))
    for s in range(0, len(k1), step):
        kk = (k1[s:s + step, None] + k2[None, :]).ravel()
        cc = (c1[s:s + step, None] * c2[None, :]).ravel()
        u, inv = np.unique(kk, return_inverse=True)
        keys.append(u)
        coeffs.append(np.bincount(inv, cc.real, len(u)) + 1j * np.bincount(inv, cc.imag, len(u)))
    u, inv = np.unique(np.concatenate(keys), return_inverse=True)
    cc = np.concatenate(coeffs)
    tot = np.bincount(inv, cc.real, len(u)) + 1j * np.bincount(inv, cc.imag, len(u))
    exps = (u[:, None] // weights[None, :]) % base
    return PolyField(p.nvars, {tuple(e): c for e, c in zip(exps.tolist(), tot.tolist())})


@lru_cache(maxsize=None)
def monomial_exponents(nvars, degree):
    out = []
    for d in range(degree + 1):
        for e in product(range(d + 1), repeat=nvars):
            if sum(e) == d:
                out.append(e)
    return tuple(out)


def eval_polys(polys, x):
    """Evaluate several PolyFields at a jet ``x`` of shape (..., N); list of jets."""
    exps = sorted({e for p in polys for e in p.terms}, key=lambda e: (sum(e), e))
    if not exps:
        zero = Jet.constant(np.zeros(x.val.shape[:-1], dtype=complex), x.nvars, x.order)
        return [zero for _ in polys]
    xs = [x[i] for i in range(x.val.shape[-1])]
    mono = {}
    for e in exps:
        _monomial(e, xs, mono)
    basis = Jet.stack([mono[e] for e in exps], axis=-1)
    C = np.zeros((len(exps), len(polys)), dtype=complex)
    col = {e: i for i, e in enumerate(exps)}
    for k, p in enumerate(polys):
        for e, c in p.terms.items():
            C[col[e], k] = c
    res = basis @ C
    return [res[k] for k in range(len(polys))]


def _monomial(e, xs, memo):
    if e in memo:
        return memo[e]
    if sum(e) == 0:
        ref = xs[0]
        r = Jet.constant(np.ones(ref.val.shape, dtype=complex), ref.nvars, ref.order)
    else:
        i = max(k for k, p in enumerate(e) if p)
        prev = list(e)
        prev[i] -= 1
        r = _monomial(tuple(prev), xs, memo) * xs[i]
    memo[e] = r
    return r


class ClosureField:
    """Field given by a callable mapping a coordinate jet (..., N) to a jet."""

    def __init__(self, nvars, fn, name="closure"):
        self.nvars = nvars
        self.fn = fn
        self.name = name

    def at(self, x):
        return self.fn(x)

    def jet(self, points, order=2):
        return self.at(Jet.variables(points, order))

    def __call__(self, points):
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            return self(pts[None])[0]
        return self.at(Jet.variables(pts, 0)).val

    def __repr__(self):
        return f"ClosureField({self.name}, nvars={self.nvars})"


def as_field(u, nvars=None):
    if callable(getattr(u, "at", None)):
        return u
    if callable(u):
        return ClosureField(nvars, u)
    raise TypeError(f"not a field: {u!r}")


# coordinates on H^n and C^{2n x 2} -----------------------------------------

@lru_cache(maxsize=None)
def z_of_x(n):
    """Matrix Zx (4n, 4n): flat z_{AA'} (index 2A + A') = Zx @ x."""
    M = np.zeros((2 * n, 2, 4 * n), dtype=complex)
    for l in range(n):
        a, b = 4 * l, 2 * l
        M[b, 0, a], M[b, 0, a + 1] = 1, -1j
        M[b, 1, a + 2], M[b, 1, a + 3] = -1, 1j
        M[b + 1, 0, a + 2], M[b + 1, 0, a + 3] = 1, 1j
        M[b + 1, 1, a], M[b + 1, 1, a + 1] = 1, 1j
    M = M.reshape(4 * n, 4 * n)
    M.setflags(write=False)
    return M


@lru_cache(maxsize=None)
def x_of_z(n):
    """Holomorphic linear inverse: x = Xz @ flat z."""
    M = np.linalg.inv(z_of_x(n))
    M.setflags(write=False)
    return M


@lru_cache(maxsize=None)
def nabla_coefficients(n):
    """Array (2n, 2, 4n): nabla_{AA'} = sum_i C[A, A', i] d/dx_i (factor 1/2 included)."""
    C = np.zeros((2 * n, 2, 4 * n), dtype=complex)
    for l in range(n):
        a, b = 4 * l, 2 * l
        C[b, 0, a], C[b, 0, a + 1] = 0.5, 0.5j
        C[b, 1, a + 2], C[b, 1, a + 3] = -0.5, -0.5j
        C[b + 1, 0, a + 2], C[b + 1, 0, a + 3] = 0.5, -0.5j
        C[b + 1, 1, a], C[b + 1, 1, a + 1] = 0.5, -0.5j
    C.setflags(write=False)
    return C


def flat_points(q):
    """Quaternionic point (n, 4) or batch (P, n, 4) to a (P, 4n) array."""
    q = np.asarray(q, dtype=float)
    if q.ndim == 2:
        return q.reshape(1, -1)
    if q.ndim == 3:
        return q.reshape(q.shape[0], -1)
    raise ValueError(f"expected (n, 4) or (P, n, 4), got {q.shape}")


def nabla(u, q):
    """Matrix nabla_{AA'} u at a point of H^n (or a batch (P, n, 4))."""
    q = np.asarray(q, dtype=float)
    single = q.ndim == 2
    x = flat_points(q)
    n = x.shape[1] // 4
    g = as_field(u, 4 * n).jet(x, order=1).grad  # (4n, P)
    out = np.einsum("abi,ip->pab", nabla_coefficients(n), g)
    return out[0] if single else out


def del_z(F, Z):
    """Matrix of holomorphic partials dF/dz_{AA'} of a PolyField at Z (2n x 2)."""
    Z = np.asarray(Z, dtype=complex)
    flat = Z.reshape(1, -1)
    vals = np.array([F.partial(i)(flat)[0] for i in range(flat.shape[1])])
    return vals.reshape(Z.shape)


def pullback_check(F, q):
    """Compare nabla of F composed with tau against dF/dz at tau(q)."""
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    G = F.compose_linear(z_of_x(n))
    lhs = nabla(G, q)
    rhs = del_z(F, embed_point(q))
    err = float(np.max(np.abs(lhs - rhs)))
    return {"max_abs_err": err, "lhs": lhs, "rhs": rhs}
