"""The twelve acceptance criteria, each at its stated tolerance.

Every test records a PASS/FAIL line through the ``criterion`` fixture; the
lines are printed in the terminal summary.
"""
import json
import subprocess
import sys
import time
from math import factorial

import numpy as np
import pytest

from fueter_kit import cf
from fueter_kit.cli import deterministic_part, dumps
from fueter_kit.fefferman import DefiningFunction, ball_profile, fefferman_iterate, j_functional
from fueter_kit.fields import PolyField
from fueter_kit.group import GroupElement, random_regular_points
from fueter_kit.positivity import (cln_check, elementary_sp, is_positive_dual, ma, ma_transform_check,
                                   positivity_transport, random_generator, sp_membership,
                                   volume_jacobian_check)
from fueter_kit.suites import RunConfig, run_suite, suite_invariance, suite_seed
from fueter_kit.superalg import SuperElement, theta


def square_norm(n):
    return sum((PolyField.variable(4 * n, i) * PolyField.variable(4 * n, i) for i in range(4 * n)),
               PolyField(4 * n))


def test_01_cocycle(criterion):
    worst, start = 0.0, time.perf_counter()
    for n in (1, 2, 3):
        rep = run_suite("cocycle", RunConfig(n=n, samples=1000, seed=101))
        worst = max([worst] + [c["max_rel_err"] for c in rep["checks"]])
    wall = time.perf_counter() - start
    ok = criterion(1, "cocycle identity, n=1..3, 1000 triples", worst <= 1e-9 and wall <= 10,
                   f"max rel {worst:.2e}, {wall:.1f} s")
    assert ok


def test_02_invariance(criterion):
    worst, start, levels = 0.0, time.perf_counter(), 0
    for n in (1, 2):
        for k in range(4):
            cfg = RunConfig(n=n, k=k, seed=202)
            for c in suite_invariance(cfg, suite_seed(cfg, "invariance"), sections=20, points=20):
                assert c["points"] >= 20 * 20
                worst = max(worst, c["max_rel_err"])
                levels += 1
    wall = time.perf_counter() - start
    ok = criterion(2, "projective invariance of D_j, n=1,2, k=0..3", worst <= 1e-8 and wall <= 120,
                   f"{levels} level pairs, max rel {worst:.2e}, {wall:.1f} s")
    assert ok


def test_03_complex_property(criterion):
    rng = np.random.default_rng(303)
    worst, count = 0.0, 0
    for k in range(3):
        for _ in range(3):
            vals = cf.complex_property(rng, 2, k)
            count += len(vals)
            worst = max([worst] + list(vals.values()))
    ok = criterion(3, "D_(j+1) D_j = 0, n=2, k<=2", count > 0 and worst <= 1e-12,
                   f"{count} compositions, max coeff {worst:.2e}")
    assert ok


def test_04_operator_identities(criterion):
    worst, names = 0.0, set()
    for n in (1, 2):
        for seed in range(3):
            for rep in cf.operator_identity_suite(404 + seed, n=n):
                worst = max(worst, rep.max_rel_err)
                names.add(rep.name)
    ok = criterion(4, "operator identities (Leibniz, d^2, commutators)", worst <= 1e-12,
                   f"{len(names)} identities, max {worst:.2e}")
    assert ok


def test_05_derived_values(criterion):
    rng = np.random.default_rng(505)
    lap_err = m_err = 0.0
    for n in (1, 2, 3):
        t = square_norm(n)
        lap = cf.baston(t, n).element
        lap_err = max(lap_err, (lap - theta(n).map_coeffs(lambda c: PolyField.constant(4 * n, 2 * c))).max_abs())
        want = 2.0 ** n * factorial(n)
        m_err = max(m_err, np.max(np.abs(ma(t, rng.standard_normal((20, n, 4))) - want)) / want)
    q = rng.standard_normal((50, 1, 4))
    q *= rng.uniform(0, 0.99, 50)[:, None, None] / np.linalg.norm(q, axis=(1, 2))[:, None, None]
    t = square_norm(1)
    j_err = np.max(np.abs(j_functional(1 - t, q) - 2)) / 2
    e_err = np.max(np.abs(j_functional((1 - t) * 2 ** -0.5, q) - 1))
    ok = criterion(5, "derived values: Delta|q|^2, M(|q|^2), J on the n=1 ball",
                   lap_err == 0 and m_err <= 1e-10 and j_err <= 1e-10 and e_err <= 1e-10,
                   f"Delta exact, M rel {m_err:.1e}, J rel {j_err:.1e}, exact J {e_err:.1e}")
    assert ok


def test_06_volume_law(criterion):
    rng = np.random.default_rng(606)
    worst = 0.0
    for n in (1, 2):
        for _ in range(20):
            g = GroupElement.random(rng, n)
            worst = max(worst, volume_jacobian_check(g, random_regular_points(rng, g, 1)).max_rel_err)
    ok = criterion(6, "volume law, 20 (g, q) per n=1,2", worst <= 1e-8, f"max rel {worst:.2e}")
    assert ok


def test_07_ma_transformation(criterion):
    rng = np.random.default_rng(707)
    law = inv = 0.0
    for n in (1, 2):
        for _ in range(50):
            g = GroupElement.random(rng, n)
            u = PolyField.random(4 * n, 2, rng, real=True)
            rep = ma_transform_check(g, u, random_regular_points(rng, g, 1))
            law, inv = max(law, rep.details["law_rel"]), max(inv, rep.details["invariant_rel"])
    ok = criterion(7, "MA transformation law and M(u)/u^(2n+1) invariance, 50 triples per n",
                   law <= 1e-7 and inv <= 1e-7, f"law {law:.2e}, invariant {inv:.2e}")
    assert ok


def test_08_kernels(criterion):
    rng = np.random.default_rng(808)
    worst, slopes = 0.0, []
    for n in (1, 2):
        for k in range(4):
            for _ in range(2):
                b, a = rng.standard_normal((n, 4)), rng.standard_normal(4)
                primed = sorted(rng.integers(0, 2, k).tolist())
                K = cf.kernel_function(b, a, primed)
                q = random_regular_points(rng, cf._kernel_group(b, a, n), 50)
                worst = max(worst, cf.is_k_regular(K, q).max_abs_err)
                slopes.append(cf.kernel_blowup_slope(b, a, primed, rng.standard_normal((n, 4)))[0])
    ok = criterion(8, "kernels are k-regular and blow up at the hyperplane, k<=3",
                   worst <= 1e-8 and max(slopes) <= -0.9,
                   f"max |D_0 K| {worst:.1e}, slopes in [{min(slopes):.2f}, {max(slopes):.2f}]")
    assert ok


def test_09_positivity(criterion):
    rng = np.random.default_rng(909)
    dual_ok, transport = True, 0.0
    for n in (1, 2, 3):
        for p in range(1, n + 1):
            for _ in range(20):
                dual_ok &= is_positive_dual(elementary_sp(random_generator(rng, n, p)), rng, budget=8)[0]
        for _ in range(10):
            g = GroupElement.random(rng, n)
            q = random_regular_points(rng, g, 1)[0]
            for p in range(1, n + 1):
                transport = max(transport, positivity_transport(g, random_generator(rng, n, p), q).max_rel_err)
    members = [sp_membership(theta(n), seed=n) for n in (1, 2, 3)]
    neg = sp_membership(SuperElement.omega(1, 0, 1, c=-1.0))
    mem_ok = all(c.verdict == "member" and c.residual <= 1e-7 for c in members)
    ok = criterion(9, "positivity: dual test, transport, cone membership",
                   dual_ok and transport <= 1e-9 and mem_ok and neg.verdict == "not-member-heuristic",
                   f"transport rel {transport:.1e}, member residual "
                   f"{max(c.residual for c in members):.1e}, refutation {neg.verdict}")
    assert ok


def test_10_fefferman_n1(criterion):
    start = time.perf_counter()
    exact = fefferman_iterate(DefiningFunction.ball(1, ball_profile(0.0)))
    exact_res = max(d["max_residual"] for d in exact.diagnostics.values())
    slopes = {}
    for c in (0.5, 1.0):
        exp = fefferman_iterate(DefiningFunction.ball(1, ball_profile(c)))
        for s, d in exp.diagnostics.items():
            slopes[(c, s)] = d["slope"]
    wall = time.perf_counter() - start
    stages_ok = sorted({s for _, s in slopes}) == [2, 3, 4] and all(v >= s - 0.25 for (_, s), v in slopes.items())
    ok = criterion(10, "density expansion on the n=1 ball, s=2,3,4",
                   stages_ok and exact_res <= 1e-10 and wall <= 60,
                   "slopes " + ", ".join(f"s={s}: {v:.2f}" for (c, s), v in sorted(slopes.items()) if c == 1.0)
                   + f"; exact residual {exact_res:.1e}; {wall:.1f} s")
    assert ok


def test_11_cln(criterion):
    u = square_norm(1) - 1
    res = cln_check([u, u], (-0.4, 0.4))
    ok = criterion(11, "CLN integral on the n=1 box", res["pass"] and np.isfinite(res["integral"])
                   and res["integral"] >= 0,
                   f"integral {res['integral']:.5f}, ratio to norms {res['ratio']:.4f} (logged)")
    assert ok


def test_12_determinism(tmp_path, criterion):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        res = subprocess.run([sys.executable, "-m", "fueter_kit", "all", "--seed", "12", "--out", str(path)],
                             capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        outs.append(json.loads(path.read_text()))
    a, b = (dumps(deterministic_part(r)).encode() for r in outs)
    ok = criterion(12, "run all twice gives identical reports outside the timing field",
                   a == b and outs[0]["meta"] != outs[1]["meta"], f"{len(a)} bytes compared")
    assert ok
