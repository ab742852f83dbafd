"""Grassmann and symmetric variables: the supervariables of sections.

An element is a finite sum of terms ``c * s^{e} * omega^{A}`` where ``e = (e0, e1)``
is the exponent pair of the commuting primed variables and ``A`` a strictly
increasing tuple of Grassmann indices in ``0 .. 2n-1``.  Coefficients may be
numbers, polynomial fields or jets; only ring operations are used on them.

The same storage serves lower variables s^{A'} and upper variables S_{A'};
which one is meant is a property of the section level, not of the element.
"""
from __future__ import annotations

import numbers
from itertools import combinations

import numpy as np

from .errors import SizeMismatch
from .fields import Jet, PolyField, is_zero

# eps_{A'B'} and eps^{A'B'}
EPS_LOWER = np.array([[0.0, 1.0], [-1.0, 0.0]])
EPS_UPPER = np.array([[0.0, -1.0], [1.0, 0.0]])

_EMPTY = ()
_S0 = (0, 0)


def merge_sign(a, b):
    """Sign of reordering a + b into increasing order, 0 when indices repeat."""
    if set(a) & set(b):
        return 0
    inv = sum(1 for x in a for y in b if x > y)
    return -1 if inv & 1 else 1


def _acc(t, key, c):
    if key in t:
        t[key] = t[key] + c
    else:
        t[key] = c


def _mag(c):
    if isinstance(c, numbers.Number):
        return abs(c)
    if isinstance(c, PolyField):
        return c.max_abs()
    if isinstance(c, Jet):
        return float(np.max(np.abs(c.val), initial=0.0))
    return float(np.max(np.abs(np.asarray(c)), initial=0.0))


class SuperElement:
    """Polynomial in commuting s^{0'}, s^{1'} and Grassmann omega^0..omega^{2n-1}."""

    __slots__ = ("n", "terms")

    def __init__(self, n, terms=None):
        self.n = n
        self.terms = {}
        for (e, A), c in (terms or {}).items():
            if not is_zero(c):
                self.terms[(tuple(e), tuple(A))] = c

    # constructors --------------------------------------------------------
    @classmethod
    def scalar(cls, n, c=1.0):
        return cls(n, {(_S0, _EMPTY): c})

    @classmethod
    def omega(cls, n, *indices, c=1.0):
        if len(set(indices)) < len(indices):
            return cls(n)
        return cls(n, {(_S0, tuple(sorted(indices))): c * _perm_sign(indices)})

    @classmethod
    def s(cls, n, e0=0, e1=0, c=1.0):
        """Monomial (s^{0'})^{e0} (s^{1'})^{e1}."""
        return cls(n, {((e0, e1), _EMPTY): c})

    @classmethod
    def s_var(cls, n, Ap):
        return cls.s(n, *((1, 0) if Ap == 0 else (0, 1)))

    @classmethod
    def s_multi(cls, n, primed, c=1.0):
        """s^{A'_1} ... s^{A'_k} for a sequence of primed indices."""
        primed = list(primed)
        return cls.s(n, primed.count(0), primed.count(1), c)

    @property
    def dim(self):
        return 2 * self.n

    # structure -----------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def keys(self):
        return self.terms.keys()

    def items(self):
        return self.terms.items()

    def coefficient(self, e, A):
        return self.terms.get((tuple(e), tuple(A)), 0)

    def grass_degrees(self):
        return {len(A) for (_, A) in self.terms}

    def sym_degrees(self):
        return {sum(e) for (e, _) in self.terms}

    def top_coefficient(self):
        """Coefficient of Omega_{2n} = omega^0 ... omega^{2n-1} (no primed variables)."""
        return self.terms.get((_S0, tuple(range(self.dim))), 0)

    def map_coeffs(self, fn):
        return SuperElement(self.n, {k: fn(c) for k, c in self.terms.items()})

    def max_abs(self):
        return max((_mag(c) for c in self.terms.values()), default=0.0)

    # arithmetic ----------------------------------------------------------
    def _check(self, other):
        if other.n != self.n:
            raise SizeMismatch(f"n={self.n} vs n={other.n}")

    def __add__(self, other):
        if not isinstance(other, SuperElement):
            other = SuperElement.scalar(self.n, other)
        self._check(other)
        t = dict(self.terms)
        for k, c in other.terms.items():
            _acc(t, k, c)
        return SuperElement(self.n, t)

    __radd__ = __add__

    def __neg__(self):
        return SuperElement(self.n, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        if is_zero(c):
            return SuperElement(self.n)
        return SuperElement(self.n, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, SuperElement):
            return self.scale(other)
        self._check(other)
        t = {}
        for (e1, A1), c1 in self.terms.items():
            for (e2, A2), c2 in other.terms.items():
                sg = merge_sign(A1, A2)
                if sg == 0:
                    continue
                key = ((e1[0] + e2[0], e1[1] + e2[1]), tuple(sorted(A1 + A2)))
                c = c1 * c2
                _acc(t, key, c if sg > 0 else -c)
        return SuperElement(self.n, t)

    def __rmul__(self, other):
        return self.scale(other)

    wedge = __mul__

    def __pow__(self, p):
        out = SuperElement.scalar(self.n, 1.0)
        for _ in range(p):
            out = out * self
        return out

    # derivations ---------------------------------------------------------
    def contract_omega(self, A):
        """Left derivative d/d omega^A."""
        t = {}
        for (e, B), c in self.terms.items():
            if A in B:
                i = B.index(A)
                rest = B[:i] + B[i + 1:]
                _acc(t, (e, rest), c if i % 2 == 0 else -c)
        return SuperElement(self.n, t)

    def partial_s(self, Ap):
        """d/d s^{A'} on the commuting primed variables."""
        t = {}
        for (e, B), c in self.terms.items():
            if e[Ap]:
                f = list(e)
                f[Ap] -= 1
                _acc(t, (tuple(f), B), c * e[Ap])
        return SuperElement(self.n, t)

    def partial_s_upper(self, Ap):
        """d^{A'} = d_{B'} eps^{B'A'}: d^{0'} = d_{1'}, d^{1'} = -d_{0'}."""
        return self.partial_s(1) if Ap == 0 else -self.partial_s(0)

    def allclose(self, other, tol=1e-12):
        return (self - other).max_abs() <= tol

    def __repr__(self):
        parts = []
        for (e, A), c in sorted(self.terms.items()):
            mono = "".join(f"s{p}^{k}" for p, k in zip("01", e) if k) + "".join(f"w{a}" for a in A)
            parts.append(f"{c!r}*{mono or '1'}")
        return "SuperElement(" + (" + ".join(parts) or "0") + ")"


def _perm_sign(seq):
    seq = list(seq)
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inv & 1 else 1


# epsilon conventions ----------------------------------------------------

def raise_index(pair):
    """x^{A'} = x_{B'} eps^{B'A'} for a pair (x_{0'}, x_{1'})."""
    x0, x1 = pair
    return (x1 * float(EPS_UPPER[1, 0]), x0 * float(EPS_UPPER[0, 1]))


def lower_index(pair):
    """x_{A'} = x^{B'} eps_{B'A'} for a pair (x^{0'}, x^{1'})."""
    x0, x1 = pair
    return (x1 * float(EPS_LOWER[1, 0]), x0 * float(EPS_LOWER[0, 1]))


def raise_lower(pair, direction="raise"):
    if direction == "raise":
        return raise_index(pair)
    if direction == "lower":
        return lower_index(pair)
    raise ValueError(direction)


def S_upper(n, Ap):
    """S^{A'} as an element in the S_{A'} variables."""
    return raise_index((SuperElement.s_var(n, 0), SuperElement.s_var(n, 1)))[Ap]


# linear actions ----------------------------------------------------------

def _entry(m, b, a):
    if isinstance(m, Jet):
        return m[b, a]
    v = np.asarray(m)[..., b, a]
    return complex(v) if v.ndim == 0 else v


def _sym_image(e, m, cache):
    if e in cache:
        return cache[e]
    lin = [{(1, 0): _entry(m, 0, ap), (0, 1): _entry(m, 1, ap)} for ap in (0, 1)]
    cur = {_S0: 1.0}
    for ap in (0, 1):
        for _ in range(e[ap]):
            new = {}
            for k, c in cur.items():
                for d, v in lin[ap].items():
                    if is_zero(v):
                        continue
                    _acc(new, (k[0] + d[0], k[1] + d[1]), c * v)
            cur = new
    cache[e] = cur
    return cur


def _grass_image(A, m, dim, cache):
    if A in cache:
        return cache[A]
    cur = {_EMPTY: 1.0}
    for a in A:
        new = {}
        for key, c in cur.items():
            for b in range(dim):
                if b in key:
                    continue
                v = _entry(m, b, a)
                if is_zero(v):
                    continue
                nk = tuple(sorted(key + (b,)))
                cv = c * v
                _acc(new, nk, -cv if sum(1 for x in key if x > b) & 1 else cv)
        cur = new
    cache[A] = cur
    return cur


def act_group(x, m_sym=None, m_grass=None):
    """Substitute s^{A'} -> m_sym[B', A'] s^{B'} and omega^A -> m_grass[B, A] omega^B."""
    scache, gcache = {}, {}
    t = {}
    for (e, A), c in x.terms.items():
        si = _sym_image(e, m_sym, scache) if m_sym is not None else {e: 1.0}
        gi = _grass_image(A, m_grass, x.dim, gcache) if m_grass is not None else {A: 1.0}
        for e2, c2 in si.items():
            cc = c * c2 if not (isinstance(c2, float) and c2 == 1.0) else c
            for A2, c3 in gi.items():
                _acc(t, (e2, A2), cc * c3 if not (isinstance(c3, float) and c3 == 1.0) else cc)
    return SuperElement(x.n, t)


def act_algebra(x, m_sym=None, m_grass=None):
    """Derivation extension: (m.x^A) d_A x summed over both variable families."""
    out = SuperElement(x.n)
    if m_sym is not None:
        for ap in (0, 1):
            img = SuperElement(x.n, {((1, 0), _EMPTY): _entry(m_sym, 0, ap),
                                     ((0, 1), _EMPTY): _entry(m_sym, 1, ap)})
            out = out + img * x.partial_s(ap)
    if m_grass is not None:
        for a in range(x.dim):
            img = SuperElement(x.n, {(_S0, (b,)): _entry(m_grass, b, a) for b in range(x.dim)})
            out = out + img * x.contract_omega(a)
    return out


def act_linear(m, x, mode="group", family=None):
    """Action of a 2x2 matrix on the primed variables or a 2n x 2n matrix on omega."""
    shape = m.shape[-2:] if isinstance(m, Jet) else np.shape(m)[-2:]
    if family is None:
        # a 2x2 matrix means the primed variables; pass family="grass" when n = 1
        family = "sym" if shape == (2, 2) else "grass"
    need = 2 if family == "sym" else x.dim
    if shape != (need, need):
        raise SizeMismatch(f"{family} action needs a {need}x{need} matrix, got {shape}")
    kw = {"m_sym": m} if family == "sym" else {"m_grass": m}
    if mode == "group":
        return act_group(x, **kw)
    if mode == "algebra":
        return act_algebra(x, **kw)
    raise ValueError(f"unknown mode {mode!r}")


def theta(n):
    """Sum_l omega^{2l} omega^{2l+1}."""
    out = SuperElement(n)
    for l in range(n):
        out = out + SuperElement.omega(n, 2 * l, 2 * l + 1)
    return out


def grass_basis(n, degree):
    return list(combinations(range(2 * n), degree))


def sym_basis(degree):
    return [(degree - i, i) for i in range(degree + 1)]
