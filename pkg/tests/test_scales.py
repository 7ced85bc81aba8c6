import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sclab.errors import LevelError, PreconditionError, ShapeError
from sclab.scales import (ConstantScale, GridLineScale, ScalePoint, SumScale, TruncatedScale,
                          WeightSequence, circle_scale, density_residual, estimate_regularity,
                          fractal_scale, grid_inner_product, inclusion_singular_values, level_norm,
                          random_phase_point, scale_from_dict, smooth_cutoff)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def direct_norm(x, weights, m):
    # loop oracle, independent of the vectorized path
    return math.sqrt(sum((w ** m * v) ** 2 for w, v in zip(weights, x)))


def test_circle_weights_pair_cos_and_sin():
    w = WeightSequence("sobolev_circle").vector(5)
    assert np.allclose(w, [1, math.sqrt(2), math.sqrt(2), math.sqrt(5), math.sqrt(5)])


def test_fractal_and_exponential_weights():
    assert np.allclose(WeightSequence("fractal", (2,)).vector(4), [1, 4, 9, 16])
    assert np.allclose(WeightSequence("grid_exponential", (0.5,)).vector(3), np.exp([0, 0.5, 1.0]))
    with pytest.raises(ValueError):
        WeightSequence("fractal", ())
    with pytest.raises(ValueError):
        WeightSequence("nope")


@given(arrays(float, 17, elements=finite), st.integers(0, 4))
def test_norm_matches_direct_sum(x, m):
    E = circle_scale((17, 33))
    w = [math.sqrt(1 + ((n + 1) // 2) ** 2) for n in range(17)]
    assert E.norm(x, m) == pytest.approx(direct_norm(x, w, m), rel=1e-12, abs=1e-300)


@given(arrays(float, 20, elements=finite), st.integers(0, 3))
def test_levels_are_nested(x, m):
    E = fractal_scale(1.5, (20, 40))
    assert E.norm(x, m) <= E.norm(x, m + 1) * (1 + 1e-12) + 1e-300


@given(arrays(float, 16, elements=finite), st.integers(0, 2))
def test_shifted_scale_reindexes_levels(x, m):
    E = circle_scale((16, 32))
    assert E.shifted(1).norm(x, m) == pytest.approx(E.norm(x, m + 1), rel=1e-12, abs=1e-300)
    assert E.shifted(2).norm(x, m) == pytest.approx(E.norm(x, m + 2), rel=1e-12, abs=1e-300)


@given(arrays(float, 3, elements=finite), arrays(float, 9, elements=finite), st.integers(0, 4))
def test_sum_scale_norm_is_euclidean_combination(a, b, m):
    E = circle_scale((9, 17))
    S = SumScale((ConstantScale(3), E))
    z = np.concatenate([a, b])
    assert S.norm(z, m) == pytest.approx(math.hypot(np.linalg.norm(a), E.norm(b, m)), rel=1e-12, abs=1e-300)


def test_level_errors():
    E = circle_scale((9, 17), max_level=2)
    with pytest.raises(LevelError):
        E.norm(np.ones(9), 3)
    with pytest.raises(IndexError):
        E.check_level(-1)
    with pytest.raises(ValueError):
        TruncatedScale(WeightSequence("sobolev_circle"), (32, 16))
    with pytest.raises(ValueError):
        SumScale((circle_scale(), ConstantScale(2)))


def test_level_norm_of_point():
    E = circle_scale((9, 17))
    x = np.arange(9.0)
    assert level_norm(ScalePoint(x, E), 2) == E.norm(x, 2)
    with pytest.raises(ShapeError):
        ScalePoint(np.ones((2, 2)), E)


def test_resize_pads_and_truncates():
    E = circle_scale((4, 8))
    assert np.array_equal(E.resize([1, 2, 3], 5), [1, 2, 3, 0, 0])
    assert np.array_equal(E.resize([1, 2, 3], 2), [1, 2])


def test_inclusion_singular_values_are_inverse_weights():
    E = circle_scale((64, 128))
    sv = inclusion_singular_values(E, 1, 128)
    assert np.allclose(sv, np.sort(1 / E.weight_vector(128))[::-1], atol=1e-15)
    F = fractal_scale(2.0, (32, 64))
    assert np.allclose(inclusion_singular_values(F, 0, 64), 1.0 / np.arange(1, 65) ** 2)
    with pytest.raises(LevelError):
        inclusion_singular_values(E, 0, 100)
    small = circle_scale((4, 8))
    assert np.allclose(inclusion_singular_values(small, 0, 4), [1, 2 ** -0.5, 2 ** -0.5, 5 ** -0.5])


@given(st.floats(1e-3, 1e3), st.booleans())
def test_estimator_is_scale_invariant(alpha, flip):
    E = circle_scale((256,))
    x = random_phase_point(E, 256, 2.0, np.random.default_rng(3))
    a = -alpha if flip else alpha
    assert E.regularity(a * x) == pytest.approx(E.regularity(x), abs=1e-9)


@pytest.mark.parametrize("s", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("N", [128, 257, 1024])
def test_estimator_calibrated_on_power_decay(s, N):
    E = circle_scale((N,), max_level=6)
    x = E.weight_vector(N) ** -s
    assert estimate_regularity(ScalePoint(x, E)).value == pytest.approx(s - 0.5, abs=0.1)


def test_estimator_on_fractal_weights():
    F = fractal_scale(2.0, (256,))
    x = F.weight_vector(256) ** -2.0
    # |x|_m^2 = sum nu^{4m-8}, finite iff m < 7/4 = s - 1/(2p)
    assert estimate_regularity(ScalePoint(x, F)).value == pytest.approx(1.75, abs=0.1)


def test_estimator_superpolynomial_and_degenerate():
    E = circle_scale((256,))
    est = estimate_regularity(ScalePoint(np.exp(-np.arange(256.0)), E))
    assert est.value == math.inf and est.superpolynomial
    z = estimate_regularity(ScalePoint(np.zeros(256), E))
    assert z.value == math.inf and z.degenerate
    with pytest.raises(PreconditionError):
        estimate_regularity(ScalePoint(np.ones(8), E))


def test_estimator_respects_offset():
    E = circle_scale((256,))
    x = E.weight_vector(256) ** -2.0
    assert E.shifted(1).regularity(x) == pytest.approx(E.regularity(x) - 1, abs=1e-12)


@pytest.mark.parametrize("decay", [0.5, 1.0, 2.5])
def test_random_phase_points_hit_target(rng, decay):
    E = circle_scale((512,), max_level=5)
    x = random_phase_point(E, 512, decay, rng)
    assert E.regularity(x) == pytest.approx(decay - 0.5, abs=0.1)


def test_density_residual_decreases():
    E = circle_scale((128,))
    x = E.weight_vector(128) ** -3.0
    res = [density_residual(ScalePoint(x, E), 1, K) for K in (8, 16, 32, 64)]
    assert all(b < a for a, b in zip(res, res[1:]))


def test_smooth_cutoff_is_monotone():
    s = np.linspace(-3, 3, 601)
    b = smooth_cutoff(s)
    assert np.all(np.diff(b) >= -1e-15)


def test_grid_scale_gaussian_norm():
    G = GridLineScale(16.0, 4097)
    s = G.grid()
    f = np.exp(-s ** 2)
    # int e^{-2 s^2} ds = sqrt(pi / 2)
    assert G.norm(f, 0) == pytest.approx((math.pi / 2) ** 0.25, rel=1e-9)
    assert grid_inner_product(f, f, G) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-9)
    assert G.norm(f, 1) > G.norm(f, 0)
    with pytest.raises(ShapeError):
        grid_inner_product(f, f[:-1], G)
    with pytest.raises(ShapeError):
        G.norm(f[:-1], 0)


@pytest.mark.parametrize("scale", [circle_scale((9, 17), max_level=3), fractal_scale(1.5, (8, 16)),
                                   TruncatedScale(WeightSequence("grid_exponential", (0.1,)), (10,)),
                                   ConstantScale(4), GridLineScale(8.0, 129),
                                   SumScale((ConstantScale(1), circle_scale((9,))))])
def test_scale_dict_roundtrip(scale):
    assert scale_from_dict(scale.to_dict()).to_dict() == scale.to_dict()
