"""Verification suites behind the command line.

Every suite takes a RunConfig and a SeedSequence and returns a list of check
records.  Sampling work is split into fixed chunks with their own child seeds,
so results do not depend on the number of worker threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from . import cf
from .errors import ConfigError, SingularLocus
from .fefferman import (DefiningFunction, ball_profile, fefferman_iterate, j_equals_m_over_u,
                        j_functional, sigma)
from .fields import PolyField
from .group import GroupElement, random_point, random_regular_points, verify_cocycle
from .positivity import (cln_check, elementary_sp, is_positive_dual, ma, ma_transform_check,
                         positivity_transport, random_generator, sp_membership,
                         volume_form_factor, volume_jacobian_check)
from .superalg import SuperElement, theta

DEFAULT_TOLERANCES = {
    "cocycle": 1e-9,
    "invariance": 1e-8,
    "representation": 1e-9,
    "tau": 1e-9,
    "complex": 1e-12,
    "identities": 1e-12,
    "kernel": 1e-8,
    "kernel_slope": -0.9,
    "transport": 1e-9,
    "membership": 1e-7,
    "volume": 1e-8,
    "ma_values": 1e-10,
    "ma_law": 1e-7,
    "j_values": 1e-10,
    "j_consistency": 1e-8,
    "scaling": 1e-9,
    "fefferman_exact": 1e-10,
    "fefferman_margin": 0.25,
}

SUITES = ("cocycle", "invariance", "complex-identities", "kernel", "positivity", "volume", "ma",
          "fefferman")


@dataclass
class RunConfig:
    n: int = 1
    k: int = 2
    seed: int = 42
    samples: int = 200
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    fefferman_c: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("n", "k", "seed", "samples"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.k < 0:
            raise ConfigError("k must be >= 0")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        for name, v in self.tolerances.items():
            if name not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {name!r}")
            if name != "kernel_slope" and not v > 0:
                raise ConfigError(f"tolerance {name} must be positive")

    def tol(self, name):
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def echo(self):
        return {"n": self.n, "k": self.k, "seed": self.seed, "samples": self.samples,
                "tolerances": {k: self.tol(k) for k in sorted(DEFAULT_TOLERANCES)},
                "fefferman_c": self.fefferman_c}


def thread_count():
    raw = os.environ.get("FUETER_KIT_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        v = int(raw)
    except ValueError as exc:
        raise ConfigError(f"FUETER_KIT_THREADS must be an integer, got {raw!r}") from exc
    if v < 1:
        raise ConfigError("FUETER_KIT_THREADS must be >= 1")
    return v


def parallel_map(fn, items):
    items = list(items)
    threads = min(thread_count(), max(1, len(items)))
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def check(name, abs_err, rel_err, tol, points=0, metric="rel", passed=None, **extra):
    err = rel_err if metric == "rel" else abs_err
    rec = {"name": name, "points": int(points), "max_abs_err": float(abs_err),
           "max_rel_err": float(rel_err), "tolerance": float(tol), "metric": metric,
           "pass": bool(err <= tol) if passed is None else bool(passed)}
    rec.update(extra)
    return rec


def from_report(rep, **extra):
    return check(rep.name, rep.max_abs_err, rep.max_rel_err, rep.tolerance, rep.points, rep.metric,
                 **extra)


def merge(name, reports, tol, metric="rel"):
    """Worst case over several OperatorReports (associative)."""
    a = max((r.max_abs_err for r in reports), default=0.0)
    r = max((r.max_rel_err for r in reports), default=0.0)
    pts = sum(rep.points for rep in reports)
    return check(name, a, r, tol, pts, metric)


def _chunks(total, size):
    return [(s, min(total, s + size)) for s in range(0, total, size)]


# suites -----------------------------------------------------------------------

def suite_cocycle(cfg, ss):
    n = cfg.n
    spans = _chunks(cfg.samples, 50)
    seeds = ss.spawn(len(spans))

    def work(arg):
        (lo, hi), seed = arg
        rng = np.random.default_rng(seed)
        r1 = r2 = 0.0
        done = 0
        while done < hi - lo:
            g1, g2 = GroupElement.random(rng, n), GroupElement.random(rng, n)
            q = random_point(rng, n)
            try:
                res = verify_cocycle(g1, g2, q)
            except SingularLocus:
                continue
            r1, r2 = max(r1, res["max_rel_err_j1"]), max(r2, res["max_rel_err_j2"])
            done += 1
        return r1, r2

    res = parallel_map(work, zip(spans, seeds))
    r1 = max(r[0] for r in res)
    r2 = max(r[1] for r in res)
    tol = cfg.tol("cocycle")
    return [check("cocycle J1", 0.0, r1, tol, cfg.samples),
            check("cocycle J2", 0.0, r2, tol, cfg.samples)]


def _invariance_tasks(cfg, ss, sections):
    levels = cf.operator_levels(cfg.n, cfg.k)
    seeds = ss.spawn(len(levels) * sections)
    return [(j, seeds[i * sections + m]) for i, j in enumerate(levels) for m in range(sections)]


def suite_invariance(cfg, ss, sections=None, points=20):
    sections = sections or max(1, cfg.samples // 10)
    tasks = _invariance_tasks(cfg, ss, sections)

    def work(task):
        j, seed = task
        rng = np.random.default_rng(seed)
        g = GroupElement.random(rng, cfg.n)
        f = cf.Section.random(rng, cfg.n, cfg.k, j)
        q = random_regular_points(rng, g, points)
        return j, cf.verify_invariance(g, f, q, cfg.tol("invariance"))

    res = parallel_map(work, tasks)
    out = []
    for j in cf.operator_levels(cfg.n, cfg.k):
        reps = [r for jj, r in res if jj == j]
        out.append(merge(f"invariance n={cfg.n} k={cfg.k} j={j}", reps, cfg.tol("invariance")))
    if not out:
        out.append(check(f"invariance n={cfg.n} k={cfg.k}: no operator levels", 0.0, 0.0,
                         cfg.tol("invariance")))
    return out


def suite_complex_identities(cfg, ss):
    s_id, s_cx, s_rep = ss.spawn(3)
    out = []
    seed = int(s_id.generate_state(1)[0])
    for rep in cf.operator_identity_suite(seed, n=max(cfg.n, 1), tol=cfg.tol("identities")):
        out.append(from_report(rep))
    rng = np.random.default_rng(s_cx)
    worst = cf.complex_property(rng, cfg.n, cfg.k)
    for j, v in sorted(worst.items()):
        out.append(check(f"D_(j+1) D_j = 0 at j={j}", v, v, cfg.tol("complex"), metric="abs"))
    rng = np.random.default_rng(s_rep)
    reps_r, reps_t = [], []
    for j in cf.levels(cfg.n, cfg.k):
        g1, g2 = GroupElement.random(rng, cfg.n), GroupElement.random(rng, cfg.n)
        f = cf.Section.random(rng, cfg.n, cfg.k, j)
        q = random_regular_points(rng, g1, 10)
        reps_r.append(cf.verify_representation(g1, g2, f, q, cfg.tol("representation")))
        reps_t.append(cf.verify_tau_compatibility(g1, f, q, cfg.tol("tau")))
    out.append(merge("representation identity", reps_r, cfg.tol("representation")))
    out.append(merge("tau compatibility of pi and D", reps_t, cfg.tol("tau")))
    return out


def kernel_cases(rng, n, k, pairs=3):
    for kk in range(k + 1):
        for _ in range(pairs):
            b = rng.standard_normal((n, 4))
            a = rng.standard_normal(4)
            primed = sorted(rng.integers(0, 2, kk).tolist())
            yield kk, b, a, primed


def suite_kernel(cfg, ss, pairs=3, points=50):
    rng = np.random.default_rng(ss)
    worst, slopes, count = 0.0, [], 0
    for kk, b, a, primed in kernel_cases(rng, cfg.n, cfg.k, pairs):
        K = cf.kernel_function(b, a, primed)
        g = cf._kernel_group(b, a, cfg.n)
        q = random_regular_points(rng, g, points)
        worst = max(worst, cf.is_k_regular(K, q).max_abs_err)
        count += points
        slope, _, _ = cf.kernel_blowup_slope(b, a, primed, rng.standard_normal((cfg.n, 4)))
        slopes.append(slope)
    tol_s = cfg.tol("kernel_slope")
    return [check("kernel functions are k-regular", worst, worst, cfg.tol("kernel"), count, "abs"),
            check("kernel blow-up slope", 0.0, 0.0, tol_s, len(slopes), metric="slope",
                  passed=max(slopes) <= tol_s, worst_slope=max(slopes),
                  slopes=[round(s, 12) for s in slopes])]


def suite_positivity(cfg, ss):
    n = cfg.n
    s_dual, s_tr, s_mem = ss.spawn(3)
    rng = np.random.default_rng(s_dual)
    count = max(1, cfg.samples // 4)
    bad = 0
    for p in range(1, n + 1):
        for _ in range(count):
            ok, _ = is_positive_dual(elementary_sp(random_generator(rng, n, p)), rng, budget=8)
            bad += not ok
    out = [check("elementary forms pass the dual test", bad, bad, 0, count * n, "count", passed=bad == 0)]
    rng = np.random.default_rng(s_tr)
    reps = []
    for _ in range(count):
        g = GroupElement.random(rng, n)
        q = random_regular_points(rng, g, 1)[0]
        for p in range(1, n + 1):
            reps.append(positivity_transport(g, random_generator(rng, n, p), q, cfg.tol("transport")))
    out.append(merge("positivity transport by J2", reps, cfg.tol("transport")))
    seed = int(s_mem.generate_state(1)[0])
    cert = sp_membership(theta(n), budget=200, seed=seed, tol=cfg.tol("membership"))
    out.append(check("sum w^(2l) w^(2l+1) is a cone member", cert.residual, cert.residual,
                     cfg.tol("membership"), metric="abs", passed=cert.verdict == "member",
                     verdict=cert.verdict))
    neg = sp_membership(SuperElement.omega(n, 0, 1, c=-1.0), budget=200, seed=seed)
    out.append(check("-w^0 w^1 is refuted by the dual test", neg.residual, neg.residual, 0.0,
                     metric="abs", passed=neg.verdict == "not-member-heuristic", verdict=neg.verdict))
    zero = sp_membership(SuperElement(n), budget=4, seed=seed)
    out.append(check("zero form is a member", zero.residual, zero.residual, cfg.tol("membership"),
                     metric="abs", passed=zero.verdict == "member", verdict=zero.verdict))
    return out


def suite_volume(cfg, ss, count=None):
    count = count or max(20, cfg.samples // 10)
    seeds = ss.spawn(count)

    def work(seed):
        rng = np.random.default_rng(seed)
        g = GroupElement.random(rng, cfg.n)
        return volume_jacobian_check(g, random_regular_points(rng, g, 1), cfg.tol("volume"))

    reps = parallel_map(work, seeds)
    factor = volume_form_factor(cfg.n)
    ferr = abs(abs(factor) - 4.0 ** cfg.n)
    return [merge("volume law", reps, cfg.tol("volume")),
            check("|tau* Vol_C| factor is 4^n", ferr, ferr / 4.0 ** cfg.n, 1e-12, metric="rel",
                  signed_factor=factor)]


def square_norm(n):
    N = 4 * n
    return sum((PolyField.variable(N, i) * PolyField.variable(N, i) for i in range(N)), PolyField(N))


def suite_ma(cfg, ss, count=50):
    n = cfg.n
    s_pts, s_law, s_cln = ss.spawn(3)
    rng = np.random.default_rng(s_pts)
    out = []
    t = square_norm(n)
    lap = cf.baston(t, n).element
    diff = (lap - theta(n).map_coeffs(lambda c: PolyField.constant(4 * n, 2 * c))).max_abs()
    out.append(check("Delta |q|^2 = 2 sum w^(2l) w^(2l+1)", diff, diff, 0.0, metric="abs"))
    q = rng.standard_normal((20, n, 4))
    want = 2.0 ** n * factorial(n)
    m = ma(t, q)
    err = np.max(np.abs(m - want))
    out.append(check("M(|q|^2) = 2^n n!", err, err / want, cfg.tol("ma_values"), 20))
    u = PolyField.random(4 * n, 2, rng, real=True)
    lam = 1.7
    mu, mlu = ma(u, q), ma(u * lam, q)
    err = np.abs(mlu - lam ** n * mu)
    out.append(check("M(lambda u) = lambda^n M(u)", err.max(),
                     float(np.max(err / np.maximum(np.abs(mlu), 1e-300))), cfg.tol("scaling"), 20))

    rng = np.random.default_rng(s_law)
    reps = []
    for _ in range(count):
        g = GroupElement.random(rng, n)
        u = PolyField.random(4 * n, 2, rng, real=True)
        qq = random_regular_points(rng, g, 1)
        reps.append(ma_transform_check(g, u, qq, cfg.tol("ma_law")))
    out.append(merge("MA transformation law and M(u)/u^(2n+1) invariance", reps, cfg.tol("ma_law")))

    qb = rng.standard_normal((20, n, 4)) * (0.8 / np.sqrt(4 * n))
    jb = j_functional(1 - t, qb)
    want = sigma(n) * 2.0 ** n * factorial(n)
    err = np.max(np.abs(jb - want))
    out.append(check("J(1 - |q|^2) = (-1)^(n+1) 2^n n!", err, err / abs(want), cfg.tol("j_values"), 20))
    eta = (2.0 ** n * factorial(n)) ** (-1.0 / (n + 1))
    jn = j_functional((1 - t) * eta, qb)
    err = np.max(np.abs(jn - sigma(n)))
    out.append(check("J(eta (1 - |q|^2)) = sign", err, err, cfg.tol("j_values"), 20))
    rho = (2 - t) * 0.5 + PolyField.random(4 * n, 2, rng, real=True, scale=0.05)
    out.append(from_report(j_equals_m_over_u(rho, qb, cfg.tol("j_consistency"))))
    j1, j2 = j_functional(rho, qb), j_functional(rho * 1.3, qb)
    err = np.abs(j2 - 1.3 ** (n + 1) * j1)
    out.append(check("J(lambda rho) = lambda^(n+1) J(rho)", err.max(),
                     float(np.max(err / np.maximum(np.abs(j2), 1e-300))), cfg.tol("scaling"), 20))

    if n <= 2:
        u = t - 1
        res = cln_check([u] * (n + 1), (-0.4, 0.4), rng=np.random.default_rng(s_cln))
        out.append(check("CLN integral is nonnegative", 0.0, 0.0, 0.0, metric="abs", passed=res["pass"],
                         integral=res["integral"], ratio=res["ratio"], grid=res["grid"]))
    else:
        out.append({"name": "CLN integral is nonnegative", "skipped": "grid too large for n >= 3",
                    "pass": True})
    return out


def suite_fefferman(cfg, ss):
    n = cfg.n
    rng = np.random.default_rng(ss)
    out = []
    exact = fefferman_iterate(DefiningFunction.ball(n, ball_profile(0.0)), rng=rng)
    worst = max(d["max_residual"] for d in exact.diagnostics.values())
    out.append(check("exact ball density stays exact", worst, worst, cfg.tol("fefferman_exact"),
                     metric="abs", stages=len(exact.diagnostics)))
    exp = fefferman_iterate(DefiningFunction.ball(n, ball_profile(cfg.fefferman_c)), rng=rng)
    margin = cfg.tol("fefferman_margin")
    for s, d in sorted(exp.diagnostics.items()):
        ok = d["exact"] or d["slope"] >= s - margin
        out.append({"name": f"stage s={s} order of vanishing", "slope": round(d["slope"], 10),
                    "tail_slope": round(d["tail_slope"], 10), "required": s - margin,
                    "residual_at_1e-2": float(d["residual_at_1e-2"]), "pass": bool(ok)})
    return out


SUITE_FUNCS = {
    "cocycle": suite_cocycle,
    "invariance": suite_invariance,
    "complex-identities": suite_complex_identities,
    "kernel": suite_kernel,
    "positivity": suite_positivity,
    "volume": suite_volume,
    "ma": suite_ma,
    "fefferman": suite_fefferman,
}


def suite_seed(cfg, name):
    return np.random.SeedSequence([cfg.seed, SUITES.index(name)])


def run_suite(name, cfg):
    if name not in SUITE_FUNCS:
        raise ConfigError(f"unknown suite {name!r}")
    checks = SUITE_FUNCS[name](cfg, suite_seed(cfg, name))
    for c in checks:
        for key, v in list(c.items()):
            if isinstance(v, (np.floating, np.integer)):
                c[key] = v.item()
    return {"suite": name, "checks": checks, "pass": all(c["pass"] for c in checks)}
