"""Positive 2p-forms, sampled cone membership, the Monge-Ampere operator M(u),
transport of positivity by J2, the volume law and top-form quadrature.

Forms are SuperElements without primed variables whose coefficients are numbers
(or arrays over sample points).  An elementary generator is a stack of p
quaternionic rows eta_j; its form is the wedge over j of
theta_{j0} theta_{j1}, theta_{jb} = sum_A tau(eta_j)_{bA} omega^A.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.optimize import linprog

from .cf import OperatorReport, Section, _x_jet, _z_jet, baston, pi_j
from .errors import LpFailure, PreconditionFailed, RankDeficient, SingularLocus
from .fields import Jet, as_field, z_of_x
from .group import COMPLEX, DELTA_SING, QUATERNIONIC, act_point, cocycles, singular_distance
from .quat import embed_point, qmatmul, tau
from .superalg import SuperElement, act_group, grass_basis, merge_sign

RANK_TOL = 1e-6
REAL_TOL = 1e-9
MEMBER_TOL = 1e-7


# forms and generators ------------------------------------------------------

class TwoPForm:
    """A Grassmann form of even degree with complex coefficients."""

    def __init__(self, element):
        degs = element.grass_degrees()
        if len(degs) > 1 or element.sym_degrees() - {0}:
            raise ValueError("a 2p-form must be homogeneous without primed variables")
        deg = next(iter(degs), 0)
        if deg % 2:
            raise ValueError(f"odd degree {deg}")
        self.element = element
        self.n = element.n
        self.p = deg // 2

    @classmethod
    def zero(cls, n, p):
        el = SuperElement(n)
        form = cls(el)
        form.p = p
        return form

    def vector(self):
        """Real and imaginary parts of the coefficients in the sorted basis."""
        basis = grass_basis(self.n, 2 * self.p)
        c = np.array([complex(self.element.coefficient((0, 0), A)) for A in basis])
        return np.concatenate([c.real, c.imag])

    def __repr__(self):
        return f"TwoPForm(n={self.n}, p={self.p}, {self.element!r})"


def _as_form(f):
    return f if isinstance(f, TwoPForm) else TwoPForm(f)


@dataclass(frozen=True)
class ElementaryGenerator:
    rows: np.ndarray  # (p, n, 4)

    @property
    def p(self):
        return self.rows.shape[0]

    @property
    def n(self):
        return self.rows.shape[1]

    def complex_rows(self):
        """Stacked tau images, shape (2p, 2n)."""
        return tau(self.rows[:, None, :, :]).reshape(2 * self.p, 2 * self.n)

    def check_rank(self, tol=RANK_TOL):
        if self.p == 0:
            return
        sv = np.linalg.svd(self.complex_rows(), compute_uv=False)
        if sv[-1] <= tol * max(sv[0], 1.0) or self.p > self.n:
            raise RankDeficient(f"generator rows are dependent (smallest singular value {sv[-1]:.2e})")

    def to_json(self):
        return {"rows": self.rows.tolist()}


def random_generator(rng, n, p, tol=RANK_TOL, max_tries=1000):
    """Gaussian quaternionic rows, unit-normalized, rejected on rank."""
    for _ in range(max_tries):
        rows = rng.standard_normal((p, n, 4))
        norms = np.sqrt(np.sum(rows ** 2, axis=(1, 2)))
        gen = ElementaryGenerator(rows / norms[:, None, None])
        try:
            gen.check_rank(tol)
        except RankDeficient:
            continue
        return gen
    raise RankDeficient("could not sample an independent generator")


def elementary_sp(gen, check=True):
    """Wedge over j of theta_{j0} theta_{j1}."""
    if check:
        gen.check_rank()
    n = gen.n
    out = SuperElement.scalar(n, 1.0)
    T = gen.complex_rows()
    for r in range(2 * gen.p):
        theta = SuperElement(n, {((0, 0), (A,)): complex(T[r, A]) for A in range(2 * n)})
        out = out * theta
    form = TwoPForm(out) if out.terms else TwoPForm.zero(n, gen.p)
    form.p = gen.p
    return form


# pairing and the dual test -----------------------------------------------

def _complement_pairing(n, p, comp):
    """Vector v with top(f ^ comp) = v . coeffs(f) over grass_basis(n, 2p)."""
    full = tuple(range(2 * n))
    v = []
    for A in grass_basis(n, 2 * p):
        B = tuple(i for i in full if i not in A)
        v.append(merge_sign(A, B) * complex(comp.element.coefficient((0, 0), B)))
    return np.array(v)


def is_positive_dual(f, rng, budget=64, tol=REAL_TOL):
    """One-sided positivity test: pair with sampled complementary generators.

    Returns (verdict, witness) where verdict is True when every pairing is
    (numerically) real and nonnegative; witness is the first refuting generator.
    """
    f = _as_form(f)
    n, p = f.n, f.p
    if 2 * p > 2 * n:
        raise ValueError("degree exceeds 2n")
    basis = grass_basis(n, 2 * p)
    coeffs = np.array([complex(f.element.coefficient((0, 0), A)) for A in basis])
    scale = max(1.0, float(np.max(np.abs(coeffs), initial=0.0)))
    count = 1 if p == n else budget
    worst = np.inf
    for _ in range(count):
        gen = random_generator(rng, n, n - p) if p < n else ElementaryGenerator(np.zeros((0, n, 4)))
        comp = elementary_sp(gen, check=False)
        val = _complement_pairing(n, p, comp) @ coeffs
        worst = min(worst, val.real)
        if val.real < -tol * scale or abs(val.imag) > tol * scale:
            return False, {"generator": gen.to_json(), "pairing": [val.real, val.imag]}
    return True, {"min_pairing": float(worst)}


# cone membership ---------------------------------------------------------

@dataclass
class ConeCertificate:
    verdict: str
    residual: float
    weights: list = field(default_factory=list)
    generators: list = field(default_factory=list)
    separating: dict | None = None
    seed: int | None = None

    def to_dict(self):
        return {"verdict": self.verdict, "residual": self.residual, "weights": self.weights,
                "generators": self.generators, "separating": self.separating, "seed": self.seed}


def sp_membership(f, budget=200, seed=0, tol=MEMBER_TOL, dual_budget=64):
    """Sampled LP relaxation of membership in the strongly positive cone."""
    f = _as_form(f)
    rng = np.random.default_rng(seed)
    b = f.vector()
    if not np.any(b):
        return ConeCertificate("member", 0.0, [], [], None, seed)
    gens = [random_generator(rng, f.n, f.p) for _ in range(budget)]
    A = np.array([elementary_sp(g, check=False).vector() for g in gens]).T
    m, N = A.shape
    # variables: weights (N), slack u+ (m), slack u- (m)
    c = np.concatenate([np.zeros(N), np.ones(2 * m)])
    A_eq = np.hstack([A, np.eye(m), -np.eye(m)])
    res = linprog(c, A_eq=A_eq, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise LpFailure(f"linear program failed: {res.message}")
    w = res.x[:N]
    residual = float(np.sum(np.abs(A @ w - b)))
    if residual <= tol:
        keep = np.nonzero(w > 1e-14)[0]
        return ConeCertificate("member", residual, w[keep].tolist(),
                               [gens[i].to_json() for i in keep], None, seed)
    ok, witness = is_positive_dual(f, rng, dual_budget)
    verdict = "inconclusive" if ok else "not-member-heuristic"
    return ConeCertificate(verdict, residual, [], [], None if ok else witness, seed)


def positivity_transport(g, gen, q, tol=1e-9, delta=DELTA_SING):
    """J2^t acting on the form of gen versus the form of the transported rows."""
    q = np.asarray(q, float)
    cv = cocycles(g, q, delta)
    J2c = cv.complex_j2
    form = elementary_sp(gen)
    lhs = act_group(form.element, m_grass=J2c.T)
    moved = ElementaryGenerator(np.concatenate([qmatmul(row[None], cv.j2) for row in gen.rows]))
    rhs = elementary_sp(moved).element
    err = (lhs - rhs).max_abs()
    ref = max(rhs.max_abs(), lhs.max_abs(), 1e-300)
    return OperatorReport("positivity transport", 1, err, err / ref, tol)


# Monge-Ampere ---------------------------------------------------------------

def _top_power(delta_u, n):
    return (delta_u ** n).top_coefficient()


def ma(u, q):
    """M(u)(q): coefficient of Omega_{2n} in (Delta u)^n; q is (n, 4) or (P, n, 4)."""
    q = np.asarray(q, float)
    n = q.shape[-2]
    val = _top_power(baston(as_field(u, 4 * n), n).evaluate(q), n)
    val = np.broadcast_to(np.asarray(val, complex), (1 if q.ndim == 2 else q.shape[0],))
    return val[0] if q.ndim == 2 else np.array(val)


def ma_section(f, q):
    """M of a level-0, k = 0 section (for instance pi_0(g) u)."""
    n = f.n
    return np.asarray(_top_power(baston(_section_field(f), n).evaluate(q), n), complex)


class _SectionScalar:
    def __init__(self, f):
        self.f = f

    def at(self, x):
        return self.f.at(x).coefficient((0, 0), ())


def _section_field(f):
    return _SectionScalar(f)


def ma_transform_check(g, u, q, tol=1e-7, delta=DELTA_SING):
    """M(pi u) = |a+bq|^{-(4n+2)} M(u)(g^{-1}.q) and invariance of M(u)/u^{2n+1}."""
    q = np.asarray(q, float)
    q = q[None] if q.ndim == 2 else q
    n = q.shape[-2]
    u = as_field(u, 4 * n)
    pu = pi_j(g, Section.scalar(u, n))
    lhs = ma_section(pu, q)
    qq = act_point(g, q, delta)
    base = ma(u, qq)
    dist = singular_distance(g, q)
    rhs = dist ** (-(4 * n + 2)) * base
    err1 = np.abs(lhs - rhs)
    rel1 = err1 / np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)
    puv = np.asarray(pu.evaluate(q).coefficient((0, 0), ()), complex)
    uv = np.asarray(u.at(Jet.variables(qq.reshape(len(qq), -1), 0)).val, complex)
    inv_l = lhs / puv ** (2 * n + 1)
    inv_r = base / uv ** (2 * n + 1)
    err2 = np.abs(inv_l - inv_r)
    rel2 = err2 / np.maximum(np.maximum(np.abs(inv_l), np.abs(inv_r)), 1e-300)
    return OperatorReport("MA transformation law", len(q), float(max(err1.max(), err2.max())),
                          float(max(rel1.max(), rel2.max())), tol,
                          details={"law_rel": float(rel1.max()), "invariant_rel": float(rel2.max())})


# volume law -----------------------------------------------------------------

def _transform_jet(g, x, side):
    n = g.n
    a, b, c, d = g.complex_blocks
    z = _z_jet(x, n, side)
    J1 = a + b @ z
    W = (c + d @ z) @ J1.inv()
    return _x_jet(W, n, side), J1.det2()


def volume_jacobian_check(g, q, tol=1e-8, delta=DELTA_SING):
    """det of the real Jacobian of q -> g^{-1}.q against |a+bq|^{-(4n+4)}, plus the
    complex law det(a+bz)^{-(2n+2)} on the holomorphic extension."""
    q = np.asarray(q, float)
    q = q[None] if q.ndim == 2 else q
    n = g.n
    dist = singular_distance(g, q)
    if np.min(dist) <= delta:
        raise SingularLocus(float(np.min(dist)), delta)
    x = Jet.variables(q.reshape(len(q), -1), order=1)
    T, _ = _transform_jet(g, x, QUATERNIONIC)
    jac = np.moveaxis(T.grad, 0, -1)  # (P, 4n out, 4n in)
    if np.max(np.abs(jac.imag)) > 1e-9 * max(1.0, np.max(np.abs(jac))):
        raise ValueError("real Jacobian picked up an imaginary part")
    det_r = np.linalg.det(jac.real)
    want = dist ** (-(4 * n + 4))
    rel_r = np.abs(np.abs(det_r) - want) / want

    gc = g.to_complex() if g.side == QUATERNIONIC else g
    Z = embed_point(q).reshape(len(q), -1)
    Tz, det1 = _transform_jet(gc, Jet.variables(Z, order=1), COMPLEX)
    det_c = np.linalg.det(np.moveaxis(Tz.grad, 0, -1))
    want_c = det1.val ** (-(2 * n + 2))
    rel_c = np.abs(det_c - want_c) / np.abs(want_c)
    return OperatorReport("volume law", len(q), float(np.max(np.abs(np.abs(det_r) - want))),
                          float(max(rel_r.max(), rel_c.max())), tol,
                          details={"real_rel": float(rel_r.max()), "complex_rel": float(rel_c.max()),
                                   "real_det_sign_min": float(np.min(np.sign(det_r))),
                                   "volume_factor": volume_form_factor(n)})


def volume_form_factor(n, ordering="paired"):
    """Determinant of x -> z for an ordering of the complex coordinates.

    ``"paired"`` takes z_{(2l)0'}, z_{(2l+1)0'}, z_{(2l)1'}, z_{(2l+1)1'} per block;
    ``"flat"`` takes the flat order 2A + A'.
    """
    M = np.asarray(z_of_x(n))
    if ordering == "paired":
        perm = [4 * l + o for l in range(n) for o in (0, 2, 1, 3)]
        M = M[perm]
    elif ordering != "flat":
        raise ValueError(ordering)
    return float(np.linalg.det(M).real)


# integration and the CLN check --------------------------------------------

def _grid(box, grid, n):
    box = np.asarray(box, float)
    if box.shape == (2,):
        box = np.tile(box, (4 * n, 1))
    h = (box[:, 1] - box[:, 0]) / grid
    axes = [lo + h_i * (np.arange(grid) + 0.5) for (lo, _), h_i in zip(box, h)]
    return axes, float(np.prod(h))


def _grid_chunks(axes, chunk):
    total = int(np.prod([len(a) for a in axes]))
    shape = [len(a) for a in axes]
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(total, start + chunk)), shape)
        yield np.stack([axes[i][idx[i]] for i in range(len(axes))], axis=1)


def integrate_top_form(coeff, box, grid, n, chunk=4096):
    """Midpoint rule for a top-form coefficient given as a function of flat points (P, 4n)."""
    axes, vol = _grid(box, grid, n)
    total = 0.0 + 0.0j
    for pts in _grid_chunks(axes, chunk):
        total += np.sum(coeff(pts))
    return complex(total * vol)


def _laplacian_values(u, n, pts):
    return baston(as_field(u, 4 * n), n).evaluate(pts.reshape(len(pts), n, 4))


def cln_check(us, box, grid=None, rng=None, dual_budget=16, chunk=4096):
    """I = int_box -u0 Delta u1 ^ ... ^ Delta un and its ratio to prod ||u_i||_inf."""
    n = len(us) - 1
    if n < 1:
        raise ValueError("need u0 .. un with n >= 1")
    grid = grid or (16 if n == 1 else 6)
    rng = np.random.default_rng(0) if rng is None else rng
    us = [as_field(u, 4 * n) for u in us]
    axes, vol = _grid(box, grid, n)
    # pairing vectors of the complement generators for the 2-form test
    comps = [elementary_sp(random_generator(rng, n, n - 1), check=False) if n > 1 else
             elementary_sp(ElementaryGenerator(np.zeros((0, n, 4))), check=False)
             for _ in range(dual_budget if n > 1 else 1)]
    pair = np.array([_complement_pairing(n, 1, c) for c in comps])
    basis2 = grass_basis(n, 2)
    total = 0.0 + 0.0j
    norms = np.zeros(n + 1)
    for pts in _grid_chunks(axes, chunk):
        vals = [np.asarray(u.at(Jet.variables(pts, 0)).val) for u in us]
        if any(np.max(v.real) >= 0 for v in vals):
            raise PreconditionFailed("some u_i is not negative on the box")
        norms = np.maximum(norms, [np.max(np.abs(v)) for v in vals])
        prod_form = None
        for u in us[1:]:
            L = _laplacian_values(u, n, pts)
            C = np.array([np.broadcast_to(np.asarray(L.coefficient((0, 0), A), complex), (len(pts),))
                          for A in basis2])
            pv = pair @ C
            scale = np.maximum(1.0, np.max(np.abs(C), axis=0))
            if np.any(pv.real < -REAL_TOL * scale) or np.any(np.abs(pv.imag) > REAL_TOL * scale):
                raise PreconditionFailed("Delta u_i fails the positivity test on the box")
            prod_form = L if prod_form is None else prod_form * L
        top = np.broadcast_to(np.asarray(prod_form.top_coefficient(), complex), (len(pts),))
        total += np.sum(-vals[0] * top)
    integral = complex(total * vol)
    bound = float(np.prod(norms))
    ratio = integral.real / bound if bound else float("nan")
    passed = integral.real >= 0 and abs(integral.imag) <= 1e-9 * max(1.0, abs(integral)) and np.isfinite(integral.real)
    return {"integral": integral.real, "integral_imag": integral.imag, "norm_product": bound,
            "ratio": ratio, "pass": bool(passed), "grid": grid}


def ma_of_square_norm(n):
    """The derived value 2^n n! of M(|q|^2)."""
    return float(2 ** n * factorial(n))
