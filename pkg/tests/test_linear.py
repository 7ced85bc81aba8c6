import numpy as np
import pytest
from hypothesis import given, strategies as st

from sclab.errors import (AmbiguousRankError, DegenerateBasisError, LevelError, PreconditionError,
                          ShapeError)
from sclab.linear import (ScOperator, ScSubspace, build_sc_projection, check_sc,
                          check_sc_plus_compactness, complement, fredholm_certificate,
                          idempotency_defect, level_operator_norm, numerical_rank,
                          perturbation_stability, quotient_distance,
                          quotient_inclusion_singular_values, random_smoothing_operator,
                          rank_one_operator, splitting_residual)
from sclab.scales import ConstantScale, ScalePoint, circle_scale, inclusion_singular_values
from sclab.templates import build_operator

E = circle_scale((64, 128, 256))
ODD = circle_scale((65, 129, 257))


def smooth_vectors(rng, n, k, rate=0.3):
    return rng.standard_normal((n, k)) * np.exp(-rate * np.arange(n))[:, None]


def unilateral_shift(scale, right=True):
    # e_n -> e_{n+1} (right, index -1) or e_{n+1} -> e_n (left, index +1)
    def assemble(N):
        return np.eye(N + 1, N, -1) if right else np.eye(N - 1, N, 1)
    return ScOperator(assemble, scale, scale, 0, "right_shift" if right else "left_shift")


def test_identity_and_inclusion_norms():
    I = build_operator("identity", E)
    assert level_operator_norm(I, 2, 2, 128) == pytest.approx(1.0)
    inc = build_operator("inclusion", E)
    # E^1 -> E viewed from level m+1 of E to level m: norm 1; sc+ view: also 1
    assert level_operator_norm(inc, 0, 0, 256) == pytest.approx(1.0)
    assert level_operator_norm(inc, 1, 1, 256) == pytest.approx(1.0)
    with pytest.raises(LevelError):
        level_operator_norm(I, 0, 0, 100)


def test_multiplication_by_weights_is_rejected():
    W = ScOperator(lambda N: np.diag(E.weight_vector(N)), E, E, 0, "diag_w")
    assert level_operator_norm(W, 0, 0, 256) == pytest.approx(E.weight_vector(256)[-1])
    assert not check_sc(W).accepted


@pytest.mark.parametrize("name,params", [("identity", {}), ("inclusion", {}),
                                         ("diag_weight_power", {"power": 1}),
                                         ("ddt_plus_one", {})])
def test_template_operators_are_sc(name, params):
    rep = check_sc(build_operator(name, E, params))
    assert rep.accepted
    assert all(abs(r - 1) <= 0.05 for r in rep.ratios.values())


def test_shift_multiplier_is_isometric():
    T = build_operator("shift_multiplier", ODD, {"tau": 0.3})
    rep = check_sc(T)
    assert rep.accepted
    assert all(np.allclose(v, 1.0) for v in rep.norms.values())


def test_check_sc_needs_three_rungs():
    short = circle_scale((64, 128))
    with pytest.raises(PreconditionError):
        check_sc(build_operator("identity", short))


def test_sc_plus_compactness():
    S = build_operator("diag_weight_power", E, {"power": 1})
    rep = check_sc_plus_compactness(S, 1, 256)
    assert np.allclose(rep.singular_values, np.sort(1 / E.weight_vector(256))[::-1])
    assert rep.ok
    u = np.exp(-np.arange(256.0))
    R = rank_one_operator(u, u, E, E)
    sv = check_sc_plus_compactness(R, 0, 256).singular_values
    assert sv[0] > 0 and np.all(sv[1:] < 1e-12 * sv[0])


def test_inclusion_times_bounded_diagonal(rng):
    d = rng.uniform(1, 2, 256)
    S = ScOperator(lambda N: np.diag(d[:N]), E.shifted(1), E, 0, "diag_inclusion")
    sv = check_sc_plus_compactness(S, 0, 256).singular_values
    assert np.all(sv <= 2 * np.sort(1 / E.weight_vector(256))[::-1] * (1 + 1e-12))


def test_coordinate_projection():
    P = build_sc_projection(ScSubspace(np.eye(128)[:, 0], E))
    A = P.matrix(128)
    assert np.array_equal(A, np.diag(np.eye(128)[0]))
    assert idempotency_defect(P, 128) == 0.0


def test_rank_one_projection_matches_formula():
    x = np.exp(-np.arange(256.0))
    P = build_sc_projection(ScSubspace(x, E))
    ref = np.outer(x, x) / (x @ x)       # level-0 weights are all one
    assert np.allclose(P.matrix(256), ref, atol=1e-14)
    assert idempotency_defect(P, 256) <= 1e-12
    assert np.linalg.matrix_rank(P.matrix(256)) == 1


def test_two_dimensional_projection_matches_gram_schmidt(rng):
    B = smooth_vectors(rng, 256, 2)
    Q, _ = np.linalg.qr(B)
    P = build_sc_projection(ScSubspace(B, E))
    assert np.allclose(P.matrix(256), Q @ Q.T, atol=1e-12)
    assert check_sc(P).accepted


@given(st.integers(0, 2 ** 31 - 1))
def test_projection_splitting(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4))
    P = build_sc_projection(ScSubspace(smooth_vectors(rng, 256, k), E))
    assert idempotency_defect(P, 256) <= 1e-10
    x = rng.standard_normal(256)
    assert splitting_residual(P, x) == 0.0
    assert np.linalg.norm(P(complement(P, x))) <= 1e-10 * np.linalg.norm(x)


def test_projection_preconditions(rng):
    with pytest.raises(PreconditionError):
        build_sc_projection(ScSubspace(rng.standard_normal(256), E))
    b = np.exp(-np.arange(256.0))
    with pytest.raises(DegenerateBasisError):
        build_sc_projection(ScSubspace(np.column_stack([b, 2 * b]), E))


def test_quotient_distance_examples():
    C = ConstantScale(2)
    A = ScSubspace(np.array([1.0, 0.0]), C)
    assert quotient_distance(ScalePoint([3.0, 4.0], C), A, 0) == pytest.approx(4.0)
    b = np.exp(-np.arange(64.0))
    assert quotient_distance(ScalePoint(2.5 * b, E), ScSubspace(b, E), 1) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DegenerateBasisError):
        quotient_distance(ScalePoint(b, E), ScSubspace(np.column_stack([b, b]), E), 0)


def grid_search_distance(x, B, w, rounds=12):
    """Zooming grid search for min_c |w (x - B c)|; no least squares involved."""
    center = np.zeros(B.shape[1])
    width = 10.0
    best = None
    for _ in range(rounds):
        axes = [np.linspace(c - width, c + width, 41) for c in center]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, B.shape[1])
        res = np.linalg.norm(w[:, None] * (x[:, None] - B @ grid.T), axis=0)
        i = int(np.argmin(res))
        best, center = res[i], grid[i]
        width /= 8
    return best


def test_quotient_distance_against_grid_search(rng):
    B = smooth_vectors(rng, 64, 2, rate=0.5)
    x = rng.standard_normal(64) * np.exp(-0.2 * np.arange(64))
    w = E.level_weights(64, 1)
    d = quotient_distance(ScalePoint(x, E), ScSubspace(B, E), 1)
    assert d == pytest.approx(grid_search_distance(x, B, w), abs=1e-6)


@given(st.integers(0, 2 ** 31 - 1), st.floats(-5, 5))
def test_quotient_distance_is_a_seminorm(seed, lam):
    rng = np.random.default_rng(seed)
    A = ScSubspace(smooth_vectors(rng, 64, 1), E)
    x, y = rng.standard_normal(64), rng.standard_normal(64)
    d = lambda v: quotient_distance(ScalePoint(v, E), A, 1)
    assert d(x + y) <= d(x) + d(y) + 1e-9
    assert d(lam * x) == pytest.approx(abs(lam) * d(x), rel=1e-9, abs=1e-12)


def test_quotient_inclusion_singular_values():
    zero = ScSubspace(np.zeros((256, 0)), E)
    assert np.allclose(quotient_inclusion_singular_values(zero, 0, 256), inclusion_singular_values(E, 0, 256))
    e0 = ScSubspace(np.eye(256)[:, 0], E)
    sv = quotient_inclusion_singular_values(e0, 0, 256)
    assert np.max(np.abs(sv - np.sort(1 / E.weight_vector(256)[1:])[::-1])) <= 1e-12


def test_quotient_singular_values_for_smooth_line(rng):
    A = ScSubspace(smooth_vectors(rng, 256, 1), E)
    sv = quotient_inclusion_singular_values(A, 1, 256)
    ref = inclusion_singular_values(E, 1, 256)
    assert np.all(sv <= ref[: sv.shape[0]] * (1 + 1e-9))


def test_numerical_rank_ambiguity():
    assert numerical_rank(np.array([1.0, 0.5, 1e-12]), 1e-8) == 2
    with pytest.raises(AmbiguousRankError) as info:
        numerical_rank(np.array([1.0, 1e-8]), 1e-8)
    assert info.value.gap


def test_fredholm_identity():
    c = fredholm_certificate(build_operator("identity", E))
    assert (c.kernel_dim, c.cokernel_dim, c.index) == (0, 0, 0)
    assert c.accepted


def test_fredholm_ddt_plus_one():
    c = fredholm_certificate(build_operator("ddt_plus_one", E), levels=range(4))
    assert c.index == 0 and c.per_level_kernel_dims == [0, 0, 0, 0]
    assert c.level_regularity_ok and c.accepted


def test_fredholm_ddt_kernel_is_constants():
    T = build_operator("ddt", ODD)
    c = fredholm_certificate(T, levels=range(3))
    assert (c.kernel_dim, c.cokernel_dim, c.index) == (1, 1, 0)
    assert c.accepted and all(a <= 1e-6 for a in c.kernel_angles)
    assert np.linalg.norm(T.matrix(257) @ np.eye(257)[0]) == 0.0


def test_fredholm_ddt_with_cokernel_killer():
    T = build_operator("ddt", ODD)
    e0 = np.eye(257)[0]
    S = rank_one_operator(e0, e0, ODD.shifted(1), ODD)
    c = fredholm_certificate(T + S, levels=range(3))
    assert (c.kernel_dim, c.cokernel_dim, c.index) == (0, 0, 0)


def test_index_additivity_for_shifts():
    R, L = unilateral_shift(E, True), unilateral_shift(E, False)
    iR = fredholm_certificate(R, levels=range(2)).index
    iL = fredholm_certificate(L, levels=range(2)).index
    assert (iR, iL) == (-1, 1)
    assert fredholm_certificate(L.compose(R), levels=range(2)).index == iR + iL
    assert fredholm_certificate(R.compose(R), levels=range(2)).index == 2 * iR


def test_identity_plus_compact_keeps_index_zero():
    small = circle_scale((32, 64, 128))
    I = build_operator("identity", small)
    rep = perturbation_stability(I, trials=50, seed=7, levels=range(2), N=128)
    assert rep.ok and all(t["index"] == 0 for t in rep.trials)


def test_zero_perturbation_reproduces_certificate():
    T = build_operator("ddt_plus_one", E)
    zero = ScOperator(lambda N: np.zeros((N, N)), E.shifted(1), E, 1, "zero")
    rep = perturbation_stability(T, zero, trials=2, levels=range(2))
    assert rep.ok
    assert rep.trials[0]["kernel_dims"] == rep.base.per_level_kernel_dims


def test_random_smoothing_is_consistent_across_truncations(rng):
    S = random_smoothing_operator(E, E, 2, rng)
    assert np.allclose(S.matrix(128), S.matrix(256)[:128, :128])
    assert S.declared_shift == 1


def test_assembler_shape_is_checked():
    bad = ScOperator(lambda N: np.zeros((N, N + 1)), E, E)
    with pytest.raises(ShapeError):
        bad.matrix(64)


def test_operator_serialization():
    d = build_operator("ddt_plus_one", E, {"mass": 1.0}).to_dict()
    assert d["assembler"] == {"template": "ddt_plus_one", "params": {"mass": 1.0}}
    assert d["declared_shift"] == 0 and d["domain"]["offset"] == 1
