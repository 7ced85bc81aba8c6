"""The thirteen acceptance criteria, one test each."""

import math

import numpy as np
import pytest

from sclab.bundles import (DoubleScaleIndex, StrongBundleRetraction, check_strong_retraction,
                           validate_double_index)
from sclab.diff import pointwise_polynomial, shift_map_dichotomy, verify_chain_rule
from sclab.linear import (ScSubspace, build_sc_projection, check_sc, fredholm_certificate,
                          idempotency_defect, perturbation_stability, quotient_inclusion_singular_values,
                          splitting_residual)
from sclab.polyfold import (PartialQuadrant, chart_degeneracy, check_tame, degeneracy_index,
                            line_chart_pair, min_degeneracy)
from sclab.retracts import (admissible_t_min, build_pi_t, cartan_chart, check_retraction,
                            idempotency_residual, splicing_core_scan, splicing_retraction,
                            translated_bump_family)
from sclab.scales import (GridLineScale, ScalePoint, circle_scale, estimate_regularity,
                          inclusion_singular_values, random_phase_point)
from sclab.templates import build_operator, build_retraction

E = circle_scale((128, 256, 512))
Q2 = PartialQuadrant(2)
T_NONPOS = [-1.0, -0.1, 0.0]
T_POS = [0.25, 0.5, 1.0, 2.0]


@pytest.fixture(scope="module")
def grid():
    return GridLineScale(half_width=64.0, grid_size=8192)


def test_c01_degeneracy_figure(criterion):
    with criterion(1, "degeneracy indices 2/1/0 on the quarter plane", limit=1.0):
        pts = [(0.0, 0.0), (0.0, 0.3), (0.0, 5.0), (1.0, 2.0), (1e-3, 7.0)]
        assert [degeneracy_index(np.array(p), Q2) for p in pts] == [2, 1, 1, 0, 0]


def test_c02_chart_dependence(criterion):
    with criterion(2, "L_a chart tables and min over charts", limit=1.0):
        for a in (0.0, 0.5, 1.0, 3.0):
            phi, ident = line_chart_pair(a)
            for x in (0.0, 0.2, 4.0):
                want_phi = 2 if x == 0 else (1 if a == 0 else 0)
                want_id = 1 if x == 0 else 0
                assert chart_degeneracy(x, phi) == want_phi
                assert chart_degeneracy(x, ident) == want_id
                assert min_degeneracy(x, [phi, ident]) == want_id


def test_c03_shift_map_dichotomy(criterion):
    with criterion(3, "shift map: pointwise convergence, horizontal gap, diagonal bound", limit=10.0):
        v = np.exp(-0.5 * np.arange(129))
        taus = [2.0 ** -k for k in range(1, 11)]
        rep = shift_map_dichotomy(v, 1, taus, diagonal_truncation=4096)
        assert rep.checks["pointwise_convergence"]
        r = rep.pointwise_residuals
        assert all(later <= 2 * r[j] for j in range(len(r)) for later in r[j + 1:])
        # -> 0: under the 2 pi tau envelope and linear in tau for small tau
        assert all(x <= e * (1 + 1e-12) for x, e in zip(r, rep.envelope))
        assert r[-4] / r[-1] >= 7.0
        assert min(rep.horizontal_gaps) >= 1.9
        assert all(g <= 2 * math.pi * t * 1.01 for g, t in zip(rep.diagonal_gaps, taus))


def test_c04_chain_rule(criterion):
    with criterion(4, "chain rule for v+v^2 and w+w^3 at N=256", limit=10.0):
        C = circle_scale((256,), max_level=3)
        f = pointwise_polynomial(C, [0.0, 1.0, 1.0])
        g = pointwise_polynomial(C, [0.0, 1.0, 0.0, 1.0])
        rng = np.random.default_rng(4)
        xs = [0.3 * random_phase_point(C, 256, 4.0, rng) for _ in range(20)]
        rep = verify_chain_rule(f, g, xs, m_max=1, seed=4, tol=1e-6)
        assert {row["level"] for row in rep.residuals} == {0, 1}
        assert rep.max_residual <= 1e-6


def test_c05_fredholm_stability(criterion):
    with criterion(5, "d/dt+1 index 0 and stability under 20 sc+ perturbations", limit=30.0):
        T = build_operator("ddt_plus_one", E)
        assert check_sc(T).accepted
        cert = fredholm_certificate(T, levels=[0, 1, 2, 3], seed=5)
        assert cert.accepted and cert.index == 0
        assert cert.per_level_kernel_dims == [0, 0, 0, 0]
        stab = perturbation_stability(T, trials=20, seed=5, rank=3, levels=[0, 1, 2, 3])
        assert stab.ok
        assert all(t["index"] == 0 and len(set(t["kernel_dims"])) == 1 for t in stab.trials)


def test_c06_regularizing(criterion):
    with criterion(6, "(d/dt+1)x = y gains at least 0.75 levels"):
        T = build_operator("ddt_plus_one", E)
        A = T.matrix(512)
        rng = np.random.default_rng(6)
        for s in (0, 1, 2):
            y = random_phase_point(E, 512, s + 0.5, rng)
            sy = estimate_regularity(ScalePoint(y, E)).value
            assert abs(sy - s) <= 0.1
            x = np.linalg.solve(A, y)
            assert estimate_regularity(ScalePoint(x, E)).value >= s + 0.75


def test_c07_splicing_core(criterion, grid):
    with criterion(7, "splicing ranks 0/1 and idempotency on L=64, J=8192", limit=30.0):
        fam = translated_bump_family(grid)
        rows = splicing_core_scan(fam, T_NONPOS + T_POS)
        assert [r["rank"] for r in rows] == [0] * 3 + [1] * 4
        assert max(r["residual"] for r in rows) <= 1e-10
        r = splicing_retraction(fam, grid)
        rng = np.random.default_rng(7)
        t_min = admissible_t_min(grid)
        for k in range(50):
            t = rng.uniform(-1.0, 0.0) if k % 2 else rng.uniform(t_min, 3.0)
            z = np.concatenate([[t], rng.standard_normal(grid.grid_size)])
            assert idempotency_residual(r, z) <= 1e-10


def test_c08_cartan(criterion):
    with criterion(8, "Cartan chart for (x, x^2); alpha = id for linear projectors"):
        ch = cartan_chart(build_retraction("graph_square"), np.zeros(2), radius=0.1)
        assert ch.radius == 0.1
        assert ch.conjugation_residual <= 1e-8
        assert ch.dalpha_residual <= 1e-6
        assert ch.local_dimension == 1
        rng = np.random.default_rng(8)
        for r in (build_retraction("r_a", {"a": 1.0}), build_retraction("coordinate_projector")):
            lin = cartan_chart(r, np.zeros(2))
            for z in rng.standard_normal((20, 2)):
                assert np.allclose(lin.alpha(z), z, rtol=0, atol=1e-15 * max(1.0, np.linalg.norm(z)))


def test_c09_projection_splitting(criterion):
    with criterion(9, "sc-projections for 10 random smooth subspaces"):
        rng = np.random.default_rng(9)
        for _ in range(10):
            k = int(rng.integers(1, 4))
            B = rng.standard_normal((512, k)) * np.exp(-0.3 * np.arange(512))[:, None]
            P = build_sc_projection(ScSubspace(B, E))
            for N in E.ladder:
                assert idempotency_defect(P, N) <= 1e-10
            x = rng.standard_normal(512)
            assert splitting_residual(P, x) == 0.0
            assert check_sc(P).accepted


def test_c10_quotient_compactness(criterion):
    with criterion(10, "quotient inclusion singular values"):
        w = E.weight_vector(512)
        sv = quotient_inclusion_singular_values(ScSubspace(np.eye(512)[:, 0], E), 0, 512)
        assert np.max(np.abs(sv - np.sort(1.0 / w[1:])[::-1])) <= 1e-12
        rng = np.random.default_rng(10)
        b = rng.standard_normal(512) * np.exp(-0.3 * np.arange(512))
        sv = quotient_inclusion_singular_values(ScSubspace(b, E), 0, 512)
        ref = inclusion_singular_values(E, 0, 512)
        assert np.all(sv <= 2.0 * ref[: sv.shape[0]])


def test_c11_estimator_calibration(criterion):
    with criterion(11, "regularity estimator on w^-s and e^-n"):
        w = E.weight_vector(512)
        for s in (1, 2, 3):
            assert abs(estimate_regularity(ScalePoint(w ** -float(s), E)).value - (s - 0.5)) <= 0.1
        assert math.isinf(estimate_regularity(ScalePoint(np.exp(-np.arange(512.0)), E)).value)


def test_c12_tameness(criterion):
    with criterion(12, "r_a not tame with counterexample at (1,0); identity tame"):
        pts = [np.array([1.0, 0.0]), np.array([0.0, 0.0]), np.array([0.5, 0.5]), np.array([0.0, 2.0])]
        model = check_retraction(build_retraction("r_a", {"a": 1.0}), pts)
        rep = check_tame(model, Q2, pts)
        assert not rep.tame
        assert rep.stratum_violations[0]["point"] == [1.0, 0.0]
        assert rep.stratum_violations[0]["index"] == 1 and rep.stratum_violations[0]["image_index"] == 0
        ident = check_retraction(build_retraction("identity", {"dim": 2}), pts)
        assert check_tame(ident, Q2, pts).tame


def test_c13_strong_bundle(criterion, grid):
    with criterion(13, "double-index lattice and fiber dimension jump"):
        for m in range(11):
            for k in range(-1, 14):
                assert validate_double_index(DoubleScaleIndex(m, k)) == (0 <= k <= m + 1)
        fam = translated_bump_family(grid)
        r = splicing_retraction(fam, grid)
        rng = np.random.default_rng(13)
        ts = T_NONPOS + T_POS
        base = [np.concatenate([[t], rng.standard_normal(grid.grid_size)]) for t in ts]
        model = check_retraction(r, base)
        R = StrongBundleRetraction(model, lambda u: build_pi_t(float(u[0]), grid), grid)
        rep = check_strong_retraction(R, [np.concatenate([b, rng.standard_normal(grid.grid_size)]) for b in base])
        assert rep.accepted
        dims = [d["fiber_dimension"] for d in rep.fiber_dimensions]
        assert dims == [row["rank"] for row in splicing_core_scan(fam, ts)] == [0] * 3 + [1] * 4
