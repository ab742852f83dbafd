"""The J-functional, boundary normalization and the stagewise defining density.

J(rho) is read off the top form of rho (Delta rho)^n - 2n d0'rho d1'rho (Delta rho)^{n-1}
with a minus sign.  On the unit ball with the orientation omega^0 ... omega^{2n-1}
the functional takes the sign sigma = (-1)^{n+1} near the boundary, so the
iteration below drives sigma * J to 1 (for odd n this is J -> 1).

Each stage needs two more derivatives than the previous one, which second-order
jets cannot supply.  Two exact engines are used instead:

* ``RadialExpansion``: rho = F(|q|^2) with F carried as truncated Taylor series
  in t = |q|^2 at 50 significant digits (mpmath);
* ``PolyExpansion``: rho a real polynomial, every stage an exact PolyField,
  evaluated in mpmath along rays.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, factorial

import mpmath
import numpy as np

from .cf import OperatorReport, d_prime
from .errors import PreconditionFailed, SignIndefinite
from .fields import Jet, PolyField, as_field, flat_points
from .positivity import ma
from .superalg import SuperElement

MP_DPS = 50
FIT_WINDOW = (1e-4, 1e-1)
FIT_POINTS = 40


def sigma(n):
    """Sign of J on the ball near its boundary."""
    return (-1) ** (n + 1)


# the functional ------------------------------------------------------------

def j_coefficient(R):
    """-(top coefficient) of R (Delta R)^n - 2n d0'R d1'R (Delta R)^{n-1} for a scalar R.

    Coefficients may be jets or PolyFields (quaternionic side)."""
    n = R.n
    d0 = d_prime(R, 0)
    d1 = d_prime(R, 1)
    lap = d_prime(d1, 0)
    form = R * lap ** n - (d0 * d1 * lap ** (n - 1)).scale(2 * n)
    top = form.top_coefficient()
    return -top


def j_functional(rho, q):
    """J(rho) at a point (n, 4) or batch (P, n, 4) via second-order jets."""
    q = np.asarray(q, float)
    n = q.shape[-2]
    x = Jet.variables(flat_points(q), order=2)
    val = j_coefficient(SuperElement.scalar(n, as_field(rho, 4 * n).at(x)))
    val = val.val if isinstance(val, Jet) else np.full(x.val.shape[0], complex(val))
    return complex(val[0]) if q.ndim == 2 else val


def j_polynomial(rho, n):
    """J(rho) for a PolyField rho, as an exact PolyField."""
    out = j_coefficient(SuperElement.scalar(n, rho))
    return out if isinstance(out, PolyField) else PolyField.constant(4 * n, out)


def j_equals_m_over_u(rho, q, tol=1e-8):
    """Cross-check J(rho) against M(u)/u^{2n+1} with u = -1/rho."""
    q = np.asarray(q, float)
    q = q[None] if q.ndim == 2 else q
    n = q.shape[-2]
    rho = as_field(rho, 4 * n)
    u = _Reciprocal(rho)
    jv = j_functional(rho, q)
    uv = -1.0 / rho.at(Jet.variables(flat_points(q), 0)).val
    rhs = ma(u, q) / uv ** (2 * n + 1)
    err = np.abs(jv - rhs)
    rel = err / np.maximum(np.maximum(np.abs(jv), np.abs(rhs)), 1e-300)
    return OperatorReport("J = M(u)/u^(2n+1)", len(q), float(err.max()), float(rel.max()), tol)


class _Reciprocal:
    def __init__(self, rho):
        self.rho = rho

    def at(self, x):
        return -self.rho.at(x).reciprocal()


def radial_j(F0, F1, F2, t, n):
    """J of rho = F(|q|^2) from F, F', F'' at t (closed form for radial functions)."""
    return -factorial(n) * (2 * F1) ** (n - 1) * (2 * F0 * F1 + t * F0 * F2 - 2 * t * F1 ** 2)


# truncated Taylor series in t ---------------------------------------------

def _mul(a, b, m):
    out = [mpmath.mpf(0)] * (m + 1)
    for i, ai in enumerate(a[: m + 1]):
        if ai == 0:
            continue
        for j, bj in enumerate(b[: m + 1 - i]):
            out[i + j] += ai * bj
    return out


def _add(a, b, m):
    return [a[i] + b[i] for i in range(m + 1)]


def _scale(a, c, m):
    return [c * a[i] for i in range(m + 1)]


def _deriv(a):
    return [(i + 1) * a[i + 1] for i in range(len(a) - 1)]


def _series_j(F, t0, n, m):
    """Series of J(F) to order m from the series of F to order m + 2."""
    F1 = _deriv(F)
    F2 = _deriv(F1)
    T = [mpmath.mpf(t0), mpmath.mpf(1)] + [mpmath.mpf(0)] * m
    inner = _add(_scale(_mul(F, F1, m), 2, m), _mul(T, _mul(F, F2, m), m), m)
    inner = _add(inner, _scale(_mul(T, _mul(F1, F1, m), m), -2, m), m)
    pw = [mpmath.mpf(1)] + [mpmath.mpf(0)] * m
    for _ in range(n - 1):
        pw = _mul(pw, _scale(F1, 2, m), m)
    return _scale(_mul(pw, inner, m), -factorial(n), m)


class RadialProfile:
    """F(t) given by polynomial coefficients in t or by an mpmath-capable callable."""

    def __init__(self, coeffs=None, fn=None, name="profile"):
        if (coeffs is None) == (fn is None):
            raise ValueError("give exactly one of coeffs / fn")
        with mpmath.workdps(MP_DPS):
            self.coeffs = None if coeffs is None else [mpmath.mpf(c) for c in coeffs]
        self.fn = fn
        self.name = name

    def series(self, t0, m):
        t0 = mpmath.mpf(t0)
        if self.coeffs is not None:
            out = []
            for k in range(m + 1):
                out.append(mpmath.fsum(c * comb(i, k) * t0 ** (i - k)
                                       for i, c in enumerate(self.coeffs) if i >= k))
            return out
        return [mpmath.mpf(c) for c in mpmath.taylor(self.fn, t0, m)]

    def __call__(self, t):
        return self.series(t, 0)[0]

    def to_json(self):
        if self.coeffs is not None:
            return {"coeffs": [float(c) for c in self.coeffs]}
        return {"fn": self.name}


# defining functions and normalization -------------------------------------

class DefiningFunction:
    """phi > 0 inside a domain, phi = 0 on its boundary.

    ``kind="ball"`` carries a radial profile F with phi(q) = F(|q|^2) and the
    unit ball as domain; ``kind="generic"`` takes any field (a PolyField enables
    the exact iteration) and an optional ``inside`` oracle.
    """

    def __init__(self, n, field=None, profile=None, kind="generic", inside=None, center=None):
        self.n = n
        self.kind = kind
        self.profile = profile
        if profile is not None:
            field = _RadialField(profile, n)
        if field is None:
            raise ValueError("need a field or a radial profile")
        self.field = field
        self.inside = inside
        self.center = np.zeros((n, 4)) if center is None else np.asarray(center, float)

    @classmethod
    def ball(cls, n, profile=None):
        profile = profile or RadialProfile([1, -1], name="1-t")
        return cls(n, profile=profile, kind="ball")

    @property
    def is_polynomial(self):
        return isinstance(self.field, PolyField)

    def at(self, x):
        return self.field.at(x)

    def values(self, q):
        return np.asarray(self.at(Jet.variables(flat_points(q), 0)).val)

    def boundary_points(self, rng, count):
        """Boundary samples along random rays from the center."""
        dirs = rng.standard_normal((count, self.n, 4))
        dirs /= np.linalg.norm(dirs.reshape(count, -1), axis=1)[:, None, None]
        if self.kind == "ball":
            return dirs
        return np.array([self.center + float(_boundary_radius(self, d)) * d for d in dirs])

    def gradient_check(self, rng, count=16, tol=1e-8):
        """Sampled check that grad phi does not vanish on the boundary."""
        pts = self.boundary_points(rng, count)
        g = self.at(Jet.variables(flat_points(pts), 1)).grad
        norms = np.linalg.norm(np.abs(g), axis=0)
        return bool(np.min(norms) > tol), float(np.min(norms))


class _RadialField:
    """Float jet evaluation of F(|q|^2), derivatives of F taken in mpmath."""

    def __init__(self, profile, n, series_fn=None):
        self.profile = profile
        self.n = n
        self.nvars = 4 * n
        self.series_fn = series_fn or profile.series

    def at(self, x):
        t = (x * x).sum(-1).real
        tv = np.atleast_1d(t.val)
        F = np.empty((3,) + tv.shape)
        for idx, tt in np.ndenumerate(tv):
            a = self.series_fn(mpmath.mpf(float(tt)), 2)
            F[(0,) + idx], F[(1,) + idx], F[(2,) + idx] = float(a[0]), float(a[1]), 2 * float(a[2])
        F = F.reshape((3,) + t.val.shape)
        return t.apply(F[0], F[1], F[2])


def _boundary_radius(defn, direction, r_max=1e3):
    """Smallest r > 0 with phi(center + r d) = 0 (mpmath bisection)."""
    f = _ray_function(defn, direction)
    lo, hi = mpmath.mpf(0), mpmath.mpf("0.05")
    if f(lo) <= 0:
        raise PreconditionFailed("phi is not positive at the ray origin")
    while f(hi) > 0:
        lo, hi = hi, hi * mpmath.mpf("1.25")
        if hi > r_max:
            raise PreconditionFailed("ray never leaves the domain")
    return mpmath.findroot(f, (lo, hi), solver="anderson")


def _ray_function(defn, direction):
    d = np.asarray(direction, float).reshape(-1)
    c = defn.center.reshape(-1)
    if defn.kind == "ball":
        return lambda r: defn.profile(r * r)
    poly = defn.field
    if not defn.is_polynomial:
        # other fields evaluate in double precision only
        def f(r):
            pt = (c + float(r) * d)[None]
            return mpmath.mpf(float(np.real(poly.at(Jet.variables(pt, 0)).val[0])))
        return f

    def f(r):
        pts = [mpmath.mpf(float(ci)) + r * mpmath.mpf(float(di)) for ci, di in zip(c, d)]
        return mp_eval(poly, pts).real
    return f


@dataclass
class Normalization:
    eta: object  # float, or per-sample array
    directions: np.ndarray | None
    boundary_j: list
    sign_observed: int
    sign_expected: int
    eta_exact: object = None  # high-precision eta when the boundary value is exact

    @property
    def constant(self):
        return np.ndim(self.eta) == 0

    def to_json(self):
        return {"eta": np.asarray(self.eta).tolist(), "boundary_j": self.boundary_j,
                "sign_observed": self.sign_observed, "sign_expected": self.sign_expected}


class NormalizedField:
    """eta * phi with eta constant or constant along rays from the nearest boundary sample."""

    def __init__(self, defn, norm):
        self.defn = defn
        self.norm = norm
        self.nvars = 4 * defn.n

    def eta_at(self, flat):
        if self.norm.constant:
            return float(self.norm.eta)
        dirs = self.norm.directions.reshape(len(self.norm.directions), -1)
        v = flat.real - self.defn.center.reshape(1, -1)
        v = v / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-300)
        nearest = np.argmax(v @ dirs.T, axis=1)
        return np.asarray(self.norm.eta)[nearest]

    def at(self, x):
        return self.defn.at(x) * self.eta_at(np.asarray(x.val))


def boundary_normalize(defn, samples=None, rng=None, count=16, rtol=1e-9):
    """Scale phi by eta = |J(phi)|^{-1/(n+1)} so that |J| = 1 on the boundary.

    The exponent is negative: J(eta phi) = eta^{n+1} J(phi) on the boundary, so
    unit |J| needs eta = |J(phi)|^{-1/(n+1)}.
    """
    n = defn.n
    eta_exact = None
    if defn.kind == "ball":
        with mpmath.workdps(MP_DPS):
            jb_mp = _series_j(defn.profile.series(1, 2), 1, n, 0)[0]
            eta_exact = abs(jb_mp) ** (-mpmath.mpf(1) / (n + 1))
        jb = [float(jb_mp)]
        dirs = None
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        pts = defn.boundary_points(rng, count) if samples is None else np.asarray(samples, float)
        jb = list(np.real(j_functional(defn.field, pts)))
        dirs = pts - defn.center
    jb_arr = np.asarray(jb)
    signs = set(np.sign(jb_arr).astype(int).tolist())
    if len(signs) != 1 or 0 in signs:
        raise SignIndefinite(f"J(phi) changes sign or vanishes on the boundary: {sorted(signs)}")
    sign = signs.pop()
    eta_all = np.abs(jb_arr) ** (-1.0 / (n + 1))
    if np.ptp(eta_all) <= rtol * np.max(eta_all):
        eta, dirs = float(eta_all[0]), None
    else:
        eta = eta_all
    return NormalizedField(defn, Normalization(eta, dirs, [float(v) for v in jb], int(sign), sigma(n),
                                               eta_exact))


# expansions -----------------------------------------------------------------

def _stage_factor(s, n):
    if s < 2 or s > 2 * n + 2:
        raise ValueError(f"stage {s} outside 2..{2 * n + 2}")
    return mpmath.mpf(2) / (s * (2 * n + 3 - s))


class RadialExpansion:
    """Stages rho_1 (= eta phi) .. rho_{2n+2} of a radial defining function."""

    def __init__(self, profile, n, eta, target=None):
        self.profile = profile
        self.n = n
        with mpmath.workdps(MP_DPS):
            self.eta = mpmath.mpf(eta)
        self.target = sigma(n) if target is None else target
        self.smax = 2 * n + 2

    def series(self, s, t0, m):
        if s == 1:
            return _scale(self.profile.series(t0, m), self.eta, m)
        R = self.series(s - 1, t0, m + 2)
        Jr = _series_j(R, t0, self.n, m)
        c = _stage_factor(s, self.n)
        corr = [mpmath.mpf(1) + c * (1 - self.target * Jr[0])] + [-c * self.target * v for v in Jr[1:]]
        return _mul(R[: m + 1], corr, m)

    def j_value(self, s, t0):
        with mpmath.workdps(MP_DPS):
            return _series_j(self.series(s, mpmath.mpf(t0), 2), t0, self.n, 0)[0]

    def residual(self, s, t0):
        """|sigma J(rho_s) - 1| at |q|^2 = t0, in mpmath."""
        return abs(self.target * self.j_value(s, t0) - 1)

    def field(self, s):
        return _RadialField(self.profile, self.n, series_fn=lambda t0, m: self.series(s, t0, m))

    def point_for_phi(self, target, direction=None):
        """|q|^2 on a ray where phi equals target (the ball ray is immaterial)."""
        with mpmath.workdps(MP_DPS):
            f = lambda r: self.profile(r * r) - target
            r = mpmath.findroot(f, (mpmath.mpf(0), mpmath.mpf(1)), solver="anderson")
            return r * r


class PolyExpansion:
    """Exact stages for a polynomial defining function (each stage a PolyField)."""

    def __init__(self, defn, n, eta, target=None, smax=None):
        if not defn.is_polynomial:
            raise PreconditionFailed("the exact expansion needs a polynomial defining function")
        self.defn = defn
        self.n = n
        self.eta = float(eta)
        self.target = sigma(n) if target is None else target
        # the degree roughly triples per stage; stage 2 is the default desk budget
        self.smax = 2 if smax is None else min(smax, 2 * n + 2)
        self._stages = {1: defn.field * self.eta}
        self._j = {}

    def stage(self, s):
        if s not in self._stages:
            prev = self.stage(s - 1)
            c = float(_stage_factor(s, self.n))
            Jp = self.j_poly(s - 1)
            self._stages[s] = prev * (1.0 + (1.0 - Jp * self.target) * c)
        return self._stages[s]

    def j_poly(self, s):
        if s not in self._j:
            self._j[s] = j_polynomial(self.stage(s), self.n)
        return self._j[s]

    def residual_at(self, s, pts):
        J = self.j_poly(s)
        return abs(self.target * mp_eval(J, pts).real - 1)

    def field(self, s):
        return self.stage(s)


def mp_eval(poly, pts):
    """Evaluate a PolyField at an mpmath point (list of 4n mpf)."""
    with mpmath.workdps(MP_DPS):
        total = mpmath.mpc(0)
        for e, c in poly.terms.items():
            term = mpmath.mpc(c.real, c.imag)
            for xi, p in zip(pts, e):
                if p:
                    term *= xi ** p
            total += term
        return total


@dataclass
class DensityExpansion:
    n: int
    target: int
    engine: object
    normalization: Normalization
    stages: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def field(self, s):
        return self.engine.field(s)

    def to_json(self):
        return {"n": self.n, "target_sign": self.target, "normalization": self.normalization.to_json(),
                "stages": [self.diagnostics[s] for s in sorted(self.diagnostics)]}

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def fefferman_iterate(defn, rng=None, smax=None, check=True, rays=4):
    """Normalize phi, then apply the stage updates s = 2 .. 2n+2 (or ``smax``)."""
    n = defn.n
    norm_field = boundary_normalize(defn, rng=rng)
    norm = norm_field.norm
    if not norm.constant:
        raise PreconditionFailed("the exact expansions need a constant boundary normalization")
    if norm.sign_observed != sigma(n):
        raise SignIndefinite(f"J(phi) has sign {norm.sign_observed} on the boundary, expected {sigma(n)}")
    if defn.kind == "ball":
        engine = RadialExpansion(defn.profile, n, norm.eta_exact)
    else:
        engine = PolyExpansion(defn, n, norm.eta, smax=smax)
    last = min(smax or engine.smax, 2 * n + 2)
    exp = DensityExpansion(n, sigma(n), engine, norm, stages=list(range(2, last + 1)))
    if check:
        rng = np.random.default_rng(0) if rng is None else rng
        for s in exp.stages:
            exp.diagnostics[s] = order_check(exp, defn, s, rays=rays, rng=rng)
    return exp


def _fit_window(window=FIT_WINDOW, count=FIT_POINTS):
    return np.logspace(np.log10(window[0]), np.log10(window[1]), count)


def order_check(expansion, defn, s, rays=4, rng=None, window=FIT_WINDOW, count=FIT_POINTS,
                exact_tol=1e-10):
    """Slope of log|sigma J(rho_s) - 1| against log phi along inward rays."""
    rng = np.random.default_rng(0) if rng is None else rng
    engine = expansion.engine
    if isinstance(engine, RadialExpansion):
        rays = 1  # every ray of a radial density sees the same profile
    phis = _fit_window(window, count)
    slopes, tails, worst, at_1e2 = [], [], 0.0, []
    with mpmath.workdps(MP_DPS):
        for _ in range(rays):
            direction = rng.standard_normal((defn.n, 4))
            direction /= np.linalg.norm(direction)
            res = []
            for ph in phis:
                res.append(_residual_on_ray(engine, defn, s, direction, ph))
            res = np.array([float(r) for r in res])
            worst = max(worst, float(res.max()))
            at_1e2.append(float(_residual_on_ray(engine, defn, s, direction, 1e-2)))
            tiny = np.maximum(res, 1e-300)
            slopes.append(float(np.polyfit(np.log(phis), np.log(tiny), 1)[0]))
            low = phis <= 10 * phis[0]
            tails.append(float(np.polyfit(np.log(phis[low]), np.log(tiny[low]), 1)[0]))
    slope = min(slopes)
    exact = worst <= exact_tol
    return {"s": s, "slope": slope, "tail_slope": min(tails), "residual_at_1e-2": max(at_1e2), "max_residual": worst,
            "pass": bool(exact or slope >= s - 0.25), "exact": bool(exact)}


def _residual_on_ray(engine, defn, s, direction, target):
    if isinstance(engine, RadialExpansion):
        return engine.residual(s, engine.point_for_phi(target))
    f = _ray_function(defn, direction)
    rb = _boundary_radius(defn, direction)
    r = mpmath.findroot(lambda r: f(r) - target, (mpmath.mpf(0), rb), solver="anderson")
    c = defn.center.reshape(-1)
    d = np.asarray(direction).reshape(-1)
    pts = [mpmath.mpf(float(ci)) + r * mpmath.mpf(float(di)) for ci, di in zip(c, d)]
    return engine.residual_at(s, pts)


def ball_profile(c=0.0):
    """phi = (1 - t)(1 + c (1 - t)); c = 0 is the exact-solution family."""
    # coefficients formed in mpmath so that F(1) = 0 holds beyond double precision
    with mpmath.workdps(MP_DPS):
        m = mpmath.mpf(c)
        return RadialProfile([1 + m, -1 - 2 * m, m], name=f"(1-t)(1+{c}(1-t))")
