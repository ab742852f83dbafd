"""Sections of the level bundles, the operators d_{A'}, D_j and the actions pi_j.

A section at level j is a supervariable element whose coefficients are fields:

* j <= k: degree k - j in the lower primed variables s^{A'}, degree j in omega;
* j >  k: degree j - k - 1 in the upper variables S_{A'}, degree j + 1 in omega.

Sections live either on the quaternionic side (coefficients are functions of
x in R^{4n}, derivatives are nabla_{AA'}) or on the complex side (holomorphic in
z_{AA'}, flattened as index 2A + A', derivatives d/dz_{AA'}).

Polynomial sections are differentiated exactly.  Sections produced by a group
action are jet-evaluable: ``section.at(x)`` takes a coordinate jet and returns a
SuperElement whose coefficients are jets.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ShapeMismatch, SingularLocus
from .fields import Jet, PolyField, eval_polys, nabla_coefficients, x_of_z, z_of_x
from .group import COMPLEX, DELTA_SING, QUATERNIONIC, GroupElement, singular_distance
from .quat import embed_point, qconj, qmul
from .superalg import EPS_UPPER, S_upper, SuperElement, act_group, grass_basis, sym_basis


def level_shape(n, k, j):
    """(symmetric degree, omega degree, upper) of the level-j space."""
    if j < 0:
        raise ShapeMismatch(f"negative level {j}")
    if j <= k:
        shape = (k - j, j, False)
    else:
        shape = (j - k - 1, j + 1, True)
    if shape[1] > 2 * n:
        raise ShapeMismatch(f"level {j} needs omega degree {shape[1]} > 2n = {2 * n}")
    return shape


def levels(n, k):
    """Levels with a nonzero space (the displayed complex when k <= 2n - 1)."""
    out = []
    for j in range(0, k + 2 * n + 1):
        try:
            level_shape(n, k, j)
        except ShapeMismatch:
            continue
        out.append(j)
    return out


def operator_levels(n, k):
    lv = set(levels(n, k))
    return [j for j in sorted(lv) if j + 1 in lv]


# derivatives -----------------------------------------------------------------

def _coeff_derivative(c, A, Ap, side, n):
    if side == COMPLEX:
        return c.partial(2 * A + Ap)
    C = nabla_coefficients(n)[A, Ap]
    out = None
    for i in np.nonzero(C)[0]:
        term = c.partial(int(i)) * complex(C[i])
        out = term if out is None else out + term
    return out


def d_prime(F, Ap, side=QUATERNIONIC):
    """d_{A'}F = omega^A (nabla_{AA'} F) on a supervariable element."""
    out = SuperElement(F.n)
    for A in range(F.dim):
        dF = F.map_coeffs(lambda c: _coeff_derivative(c, A, Ap, side, F.n))
        if dF.terms:
            out = out + SuperElement.omega(F.n, A) * dF
    return out


def apply_D(F, k, j, side=QUATERNIONIC):
    """D_j on a supervariable element at level j."""
    if j < k:
        out = SuperElement(F.n)
        for Ap in (0, 1):
            out = out + d_prime(F, Ap, side).partial_s_upper(Ap)
        return out
    if j == k:
        return d_prime(d_prime(F, 1, side), 0, side)
    return S_upper(F.n, 0) * d_prime(F, 0, side) + S_upper(F.n, 1) * d_prime(F, 1, side)


# sections --------------------------------------------------------------------

class Section:
    """A section of the level-j space, polynomial-backed or jet-evaluable."""

    def __init__(self, n, k, j, element=None, evaluator=None, side=QUATERNIONIC, order=0):
        self.n, self.k, self.j, self.side = n, k, j, side
        self.shape = level_shape(n, k, j)
        if (element is None) == (evaluator is None):
            raise ValueError("give exactly one of element / evaluator")
        self.element = element
        self.evaluator = evaluator
        self.order = order  # derivative order consumed on top of the input jet
        if element is not None:
            self._validate(element)

    def _validate(self, el):
        sdeg, gdeg, _ = self.shape
        for (e, A), c in el.terms.items():
            if sum(e) != sdeg or len(A) != gdeg:
                raise ShapeMismatch(f"term s^{e} w^{A} does not fit level {self.j} (k={self.k})")
            if isinstance(c, PolyField) and c.nvars != 4 * self.n:
                raise ShapeMismatch("coefficient has the wrong number of variables")

    @property
    def upper(self):
        return self.shape[2]

    @property
    def is_polynomial(self):
        return self.element is not None

    @property
    def nvars(self):
        return 4 * self.n

    @classmethod
    def random(cls, rng, n, k, j, degree=2, side=QUATERNIONIC):
        sdeg, gdeg, _ = level_shape(n, k, j)
        terms = {}
        for e in sym_basis(sdeg):
            for A in grass_basis(n, gdeg):
                terms[(e, A)] = PolyField.random(4 * n, degree, rng)
        return cls(n, k, j, SuperElement(n, terms), side=side)

    @classmethod
    def constant(cls, n, k, j, element, side=QUATERNIONIC):
        el = element.map_coeffs(lambda c: PolyField.constant(4 * n, c))
        return cls(n, k, j, el, side=side)

    @classmethod
    def scalar(cls, u, n, side=QUATERNIONIC, k=0):
        """A scalar field regarded as a level-0 section with k = 0."""
        if isinstance(u, PolyField):
            return cls(n, k, 0, SuperElement.scalar(n, u), side=side)
        return cls(n, k, 0, evaluator=lambda x: SuperElement.scalar(n, u.at(x)), side=side)

    # evaluation ----------------------------------------------------------
    def at(self, x):
        if self.evaluator is not None:
            return self.evaluator(x)
        keys = list(self.element.terms)
        vals = eval_polys([self.element.terms[key] for key in keys], x)
        return SuperElement(self.n, dict(zip(keys, vals)))

    def coords(self, points):
        """Flat coordinates (P, 4n) of quaternionic (P, n, 4) or complex (P, 2n, 2) points."""
        pts = np.asarray(points)
        if self.side == QUATERNIONIC:
            pts = pts.reshape((-1, self.n, 4)) if pts.ndim == 2 else pts
            return pts.reshape(pts.shape[0], -1)
        pts = pts.reshape((-1, 2 * self.n, 2)) if pts.ndim == 2 else pts
        return pts.reshape(pts.shape[0], -1)

    def evaluate(self, points):
        """Values at points: SuperElement whose coefficients are arrays (P,)."""
        x = Jet.variables(self.coords(points), order=self.order)
        return self.at(x).map_coeffs(lambda c: c.val)

    def __add__(self, other):
        if (self.n, self.k, self.j, self.side) != (other.n, other.k, other.j, other.side):
            raise ShapeMismatch("sections live in different spaces")
        if self.is_polynomial and other.is_polynomial:
            return Section(self.n, self.k, self.j, self.element + other.element, side=self.side)
        return Section(self.n, self.k, self.j, evaluator=lambda x: self.at(x) + other.at(x),
                       side=self.side, order=max(self.order, other.order))

    # conversion and serialization ---------------------------------------
    def to_complex(self):
        """Holomorphic extension of a polynomial quaternionic-side section."""
        if self.side != QUATERNIONIC or not self.is_polynomial:
            raise ValueError("only polynomial quaternionic sections can be extended")
        M = x_of_z(self.n)
        return Section(self.n, self.k, self.j, self.element.map_coeffs(lambda c: c.compose_linear(M)),
                       side=COMPLEX)

    def to_json(self):
        if not self.is_polynomial:
            raise ValueError("only polynomial sections serialize")
        terms = [{"A": list(A), "Ap": list(e), "poly": c.to_json()}
                 for (e, A), c in sorted(self.element.terms.items())]
        return {"n": self.n, "k": self.k, "j": self.j, "side": self.side, "terms": terms}

    @classmethod
    def from_json(cls, d):
        n = d["n"]
        el = SuperElement(n, {(tuple(t["Ap"]), tuple(t["A"])): PolyField.from_json(t["poly"])
                              for t in d["terms"]})
        return cls(n, d["k"], d["j"], el, side=d.get("side", QUATERNIONIC))

    def __repr__(self):
        kind = "poly" if self.is_polynomial else "jet"
        return f"Section(n={self.n}, k={self.k}, j={self.j}, side={self.side}, {kind})"


def D_j(f):
    """The operator D_j applied to a section at level j (result at level j + 1)."""
    level_shape(f.n, f.k, f.j + 1)
    if f.is_polynomial:
        return Section(f.n, f.k, f.j + 1, apply_D(f.element, f.k, f.j, f.side), side=f.side)
    extra = 2 if f.j == f.k else 1
    return Section(f.n, f.k, f.j + 1, evaluator=lambda x: apply_D(f.at(x), f.k, f.j, f.side),
                   side=f.side, order=f.order + extra)


def baston(u, n, side=QUATERNIONIC):
    """Delta u = d_{0'} d_{1'} u as a level-1 section for k = 0."""
    return D_j(Section.scalar(u, n, side))


# group actions ---------------------------------------------------------------

def _z_jet(x, n, side):
    if side == QUATERNIONIC:
        x = x @ z_of_x(n).T
    return x.reshape_trailing(1, (2 * n, 2))


def _x_jet(W, n, side):
    flat = W.reshape_trailing(2, (4 * n,))
    if side == QUATERNIONIC:
        flat = flat @ x_of_z(n).T
    return flat


def _complex_blocks(g, side):
    if g.side == COMPLEX and side == QUATERNIONIC:
        raise ValueError("a complex group element cannot act on quaternionic sections")
    return g.complex_blocks


def pi_at(g, f, x, delta=DELTA_SING):
    """Value of pi_j(g) f at a coordinate jet x (component formula)."""
    n = f.n
    a, b, c, d = _complex_blocks(g, f.side)
    z = _z_jet(x, n, f.side)
    J1 = a + b @ z
    det1 = J1.det2()
    dist = np.sqrt(np.abs(det1.val))
    if np.min(dist, initial=np.inf) <= delta:
        raise SingularLocus(float(np.min(dist)), delta)
    J1inv = J1.inv()
    num = c + d @ z
    W = num @ J1inv
    J2 = d - W @ b
    inner = f.at(_x_jet(W, n, f.side))
    m_sym = J1.T if f.upper else J1inv
    out = act_group(inner, m_sym=m_sym, m_grass=J2.T)
    return out.scale(det1 ** (-(f.j + 1)))


def pi_j(g, f, delta=DELTA_SING):
    """pi_j(g) f as a jet-evaluable section."""
    if g.n != f.n:
        raise ShapeMismatch("group and section dimensions differ")
    return Section(f.n, f.k, f.j, evaluator=lambda x: pi_at(g, f, x, delta), side=f.side, order=f.order)


def pi_value(g, f, q, delta=DELTA_SING):
    """pi_j(g) f evaluated at points q; SuperElement with array coefficients."""
    return pi_j(g, f, delta).evaluate(q)


# reports ---------------------------------------------------------------------

@dataclass
class OperatorReport:
    name: str
    points: int
    max_abs_err: float
    max_rel_err: float
    tolerance: float
    metric: str = "rel"
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        err = self.max_rel_err if self.metric == "rel" else self.max_abs_err
        return bool(err <= self.tolerance)

    def to_dict(self):
        d = asdict(self)
        d["pass"] = self.passed
        return d


def _stack(el, keys, P):
    rows = []
    for key in keys:
        v = el.terms.get(key, 0)
        rows.append(np.broadcast_to(np.asarray(v, dtype=complex), (P,)))
    return np.array(rows) if rows else np.zeros((0, P), dtype=complex)


def compare_values(lhs, rhs, P):
    """Per-point max-norm errors between two array-valued SuperElements."""
    keys = sorted(set(lhs.terms) | set(rhs.terms))
    L, R = _stack(lhs, keys, P), _stack(rhs, keys, P)
    err = np.max(np.abs(L - R), axis=0, initial=0.0)
    ref = np.maximum(np.max(np.abs(R), axis=0, initial=0.0), np.max(np.abs(L), axis=0, initial=0.0))
    rel = np.where(err == 0, 0.0, err / np.maximum(ref, 1e-300))
    return float(np.max(err, initial=0.0)), float(np.max(rel, initial=0.0))


def verify_invariance(g, f, points, tol=1e-8, delta=DELTA_SING):
    """Compare D_j(pi_j(g) f) with pi_{j+1}(g)(D_j f) at the given points."""
    if not f.is_polynomial:
        raise ValueError("invariance is tested on polynomial sections")
    pts = np.asarray(points)
    lhs = D_j(pi_j(g, f, delta)).evaluate(pts)
    rhs = pi_j(g, D_j(f), delta).evaluate(pts)
    P = f.coords(pts).shape[0]
    a, r = compare_values(lhs, rhs, P)
    return OperatorReport(f"invariance n={f.n} k={f.k} j={f.j}", P, a, r, tol)


def verify_representation(g1, g2, f, points, tol=1e-9, delta=DELTA_SING):
    """Compare pi(g1) pi(g2) f with pi(g1 g2) f at the given points."""
    pts = np.asarray(points)
    lhs = pi_j(g1, pi_j(g2, f, delta), delta).evaluate(pts)
    rhs = pi_j(g1 @ g2, f, delta).evaluate(pts)
    P = f.coords(pts).shape[0]
    a, r = compare_values(lhs, rhs, P)
    return OperatorReport(f"representation n={f.n} k={f.k} j={f.j}", P, a, r, tol)


def verify_tau_compatibility(g, f, points, tol=1e-9, delta=DELTA_SING):
    """Quaternionic pi_j(g) f and D_j f against the complex side at embed_point(q)."""
    pts = np.asarray(points, float)
    fc = f.to_complex()
    Z = embed_point(pts)
    gc = g.to_complex()
    P = f.coords(pts).shape[0]
    worst_a = worst_r = 0.0
    pairs = [(pi_j(g, f, delta), pi_j(gc, fc, delta))]
    if f.j + 1 in levels(f.n, f.k):
        pairs.append((D_j(pi_j(g, f, delta)), D_j(pi_j(gc, fc, delta))))
    for lhs, rhs in pairs:
        a, r = compare_values(lhs.evaluate(pts), rhs.evaluate(Z), P)
        worst_a, worst_r = max(worst_a, a), max(worst_r, r)
    return OperatorReport(f"tau compatibility n={f.n} k={f.k} j={f.j}", P, worst_a, worst_r, tol)


def is_k_regular(f, points, tol=1e-8):
    """Max |D_0 f| over the points (absolute)."""
    if f.j != 0:
        raise ShapeMismatch("k-regularity concerns level-0 sections")
    val = D_j(f).evaluate(points)
    P = f.coords(points).shape[0]
    a = max((float(np.max(np.abs(v))) for v in val.terms.values()), default=0.0)
    return OperatorReport(f"k-regular k={f.k}", P, a, a, tol, metric="abs")


# kernels -----------------------------------------------------------------------

def _kernel_group(b, a, n):
    b = np.asarray(b, float).reshape(1, n, 4)
    a = np.asarray(a, float).reshape(1, 1, 4)
    c = np.zeros((n, 1, 4))
    d = GroupElement.identity(n).inv[1:, 1:]
    return GroupElement.from_inverse_blocks(a, b, c, d)


def kernel_function(b, a, primed, delta=DELTA_SING):
    """(1/|a+bq|^2)(a+bq)^{-1}.s^{A'} as a jet-evaluable level-0 section."""
    b = np.asarray(b, float)
    n = b.reshape(-1, 4).shape[0]
    k = len(primed)
    f = Section.constant(n, k, 0, SuperElement.s_multi(n, primed))
    return pi_j(_kernel_group(b, a, n), f, delta)


def fantappie(samples, a=(1.0, 0.0, 0.0, 0.0), delta=DELTA_SING):
    """Weighted sum of kernels over a discrete measure.

    ``samples`` holds pairs (b_i, mu_i) where mu_i is a degree-k SuperElement in
    the primed variables with numeric weights.
    """
    total = None
    for b, mu in samples:
        b = np.asarray(b, float)
        n = b.reshape(-1, 4).shape[0]
        k = next(iter(mu.sym_degrees()))
        f = Section.constant(n, k, 0, mu)
        term = pi_j(_kernel_group(b, a, n), f, delta)
        total = term if total is None else total + term
    return total


def hyperplane_point(b, a):
    """A point p with a + b p = 0 (b a nonzero quaternionic row)."""
    b = np.asarray(b, float).reshape(-1, 4)
    nb = np.sum(b ** 2)
    return -qmul(qconj(b), np.asarray(a, float)[None, :]) / nb


def kernel_blowup_slope(b, a, primed, direction, eps=None):
    """Log-log slope of the kernel size against the distance |a + bq| along a ray."""
    eps = np.logspace(-1, -4, 13) if eps is None else np.asarray(eps)
    p = hyperplane_point(b, a)
    pts = p[None] + eps[:, None, None] * np.asarray(direction, float)[None]
    K = kernel_function(b, a, primed, delta=0.0)
    val = K.evaluate(pts)
    size = np.max(np.abs(np.array([np.asarray(v) for v in val.terms.values()])), axis=0)
    dist = singular_distance(_kernel_group(b, a, p.shape[0]), pts)
    slope = np.polyfit(np.log(dist), np.log(size), 1)[0]
    return float(slope), dist, size


# operator identities -------------------------------------------------------

def _a_dot_partial(F, a, Ap):
    """a.d_{A'} = a_{B'A'} d/ds^{B'}."""
    return F.partial_s(0) * complex(a[0, Ap]) + F.partial_s(1) * complex(a[1, Ap])


def _a_dot_partial_upper(F, a, Ap):
    """a.d^{A'} = (a.d_{B'}) eps^{B'A'}."""
    return _a_dot_partial(F, a, 0) * float(EPS_UPPER[0, Ap]) + _a_dot_partial(F, a, 1) * float(EPS_UPPER[1, Ap])


def _a_dot_d(F, a, Ap, side):
    return d_prime(F, 0, side) * complex(a[0, Ap]) + d_prime(F, 1, side) * complex(a[1, Ap])


def _z_polys(n):
    N = 4 * n
    return [[PolyField.variable(N, 2 * A + Ap) for Ap in (0, 1)] for A in range(2 * n)]


def _matmul_poly(X, Y):
    rows, inner, cols = len(X), len(Y), len(Y[0])
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            acc = 0
            for t in range(inner):
                acc = X[i][t] * Y[t][j] + acc
            row.append(acc)
        out.append(row)
    return out


def _random_super(rng, n, sym_deg, grass_deg, degree=2):
    N = 4 * n
    terms = {}
    for e in sym_basis(sym_deg):
        for A in grass_basis(n, grass_deg):
            terms[(e, A)] = PolyField.random(N, degree, rng)
    return SuperElement(n, terms)


def _report(name, diff, ref, tol=1e-12):
    a = diff.max_abs()
    scale = max(ref.max_abs(), 1.0)
    return OperatorReport(name, 0, a, a / scale, tol)


def operator_identity_suite(seed, n=2, tol=1e-12, side=COMPLEX):
    """Exact polynomial checks of the d-operator identities and commutator lemmas."""
    rng = np.random.default_rng(seed)
    reps = []
    F = _random_super(rng, n, 0, 1) + _random_super(rng, n, 0, 2)
    for Ap in (0, 1):
        dd = d_prime(d_prime(F, Ap, side), Ap, side)
        reps.append(_report(f"d{Ap}' squared = 0", dd, F, tol))
    anti = d_prime(d_prime(F, 1, side), 0, side) + d_prime(d_prime(F, 0, side), 1, side)
    reps.append(_report("d0'd1' = -d1'd0'", anti, F, tol))
    for p in (0, 1, 2):
        G = _random_super(rng, n, 0, p)
        H = _random_super(rng, n, 0, 1)
        for Ap in (0, 1):
            lhs = d_prime(G * H, Ap, side)
            rhs = d_prime(G, Ap, side) * H + (G * d_prime(H, Ap, side)).scale((-1) ** p)
            reps.append(_report(f"Leibniz deg {p} d{Ap}'", lhs - rhs, lhs, tol))

    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    tr = complex(np.trace(a))
    U = _random_super(rng, n, 2, 1)
    lhs = SuperElement(n)
    rhs = SuperElement(n)
    for Ap in (0, 1):
        lhs = lhs + _a_dot_partial_upper(d_prime(U, Ap, side), a, Ap)
        lhs = lhs + _a_dot_d(U, a, Ap, side).partial_s_upper(Ap)
        rhs = rhs + d_prime(U, Ap, side).partial_s_upper(Ap) * tr
    reps.append(_report("a.d^A' d_A' + d^A' a.d_A' = tr(a) d^A' d_A'", lhs - rhs, lhs, tol))

    V = _random_super(rng, n, 1, 2)
    lhs = SuperElement(n)
    rhs = SuperElement(n)
    for Ap in (0, 1):
        aS = SuperElement(n)
        for Bp in (0, 1):
            aSB = SuperElement.s_var(n, 0) * complex(a[0, Bp]) + SuperElement.s_var(n, 1) * complex(a[1, Bp])
            aS = aS + aSB * float(EPS_UPPER[Bp, Ap])
        lhs = lhs + aS * d_prime(V, Ap, side) + S_upper(n, Ap) * _a_dot_d(V, a, Ap, side)
        rhs = rhs + S_upper(n, Ap) * d_prime(V, Ap, side) * tr
    reps.append(_report("a.S^A' d_A' + S^A' a.d_A' = tr(a) S^A' d_A'", lhs - rhs, lhs, tol))
    reps.extend(commutator_lemmas(rng, n, tol))
    return reps


def commutator_lemmas(rng, n, tol=1e-12):
    """The three identities behind the infinitesimal invariance (complex side)."""
    side = COMPLEX
    N = 4 * n
    bm = rng.standard_normal((2, 2 * n)) + 1j * rng.standard_normal((2, 2 * n))
    z = _z_polys(n)
    bpoly = [[PolyField.constant(N, bm[i, j]) for j in range(2 * n)] for i in range(2)]
    zb = _matmul_poly(z, bpoly)            # 2n x 2n
    bz = _matmul_poly(bpoly, z)            # 2 x 2
    zbz = _matmul_poly(zb, z)              # 2n x 2
    Omega = [SuperElement(n, {((0, 0), (B,)): complex(bm[Ap, B]) for B in range(2 * n)}) for Ap in (0, 1)]
    reps = []
    worst = 0.0
    for A in range(2 * n):
        img = SuperElement(n, {((0, 0), (B,)): zb[A][B] for B in range(2 * n)})
        for Ap in (0, 1):
            diff = d_prime(img, Ap, side) - SuperElement.omega(n, A) * Omega[Ap].map_coeffs(
                lambda c: PolyField.constant(N, c))
            worst = max(worst, diff.max_abs())
    reps.append(OperatorReport("d_A'((zb)^t.w^A) = w^A Omega_A'", 0, worst, worst, tol))

    trbz = bz[0][0] + bz[1][1]
    worst = 0.0
    for Ap in (0, 1):
        diff = d_prime(SuperElement.scalar(n, trbz), Ap, side) - Omega[Ap].map_coeffs(
            lambda c: PolyField.constant(N, c))
        worst = max(worst, diff.max_abs())
    reps.append(OperatorReport("d_A' tr(bz) = Omega_A'", 0, worst, worst, tol))

    def Y(F):
        out = SuperElement(n)
        for B in range(2 * n):
            for Bp in (0, 1):
                out = out + F.map_coeffs(lambda c: c.partial(2 * B + Bp) * zbz[B][Bp])
        return out

    F = _random_super(rng, n, 1, 1) + _random_super(rng, n, 0, 2)
    worst = 0.0
    for Ap in (0, 1):
        lhs = d_prime(Y(F), Ap, side) - Y(d_prime(F, Ap, side))
        rhs = SuperElement(n)
        for Bp in (0, 1):
            rhs = rhs + d_prime(F, Bp, side).map_coeffs(lambda c: c * bz[Ap][Bp])
        for A in range(2 * n):
            for B in range(2 * n):
                dF = F.map_coeffs(lambda c: c.partial(2 * B + Ap) * zb[B][A])
                rhs = rhs + SuperElement.omega(n, A) * dF
        worst = max(worst, (lhs - rhs).max_abs() / max(1.0, lhs.max_abs()))
    reps.append(OperatorReport("[d_A', Y] = (bz)^t.d_A' + (zb)^t.d_A'", 0, worst, worst, tol))
    return reps


def complex_property(rng, n, k, degree=2, side=QUATERNIONIC):
    """Max coefficient of D_{j+1} D_j f over random polynomial sections at every level."""
    out = {}
    for j in operator_levels(n, k):
        if j + 1 not in operator_levels(n, k):
            continue
        f = Section.random(rng, n, k, j, degree + 1, side)
        ddf = D_j(D_j(f))
        out[j] = ddf.element.max_abs() / max(1.0, f.element.max_abs())
    return out
