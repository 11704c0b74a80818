import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import far_from_band
from holopatch.compacts import SetPrimitive, build_compact, validate_good_pair
from holopatch.cousin import AdditiveSplitter, split_additive
from holopatch.spaces import InterpolationError, InterpolationSet, SampledMap, cr_residual


@pytest.fixture(scope="module")
def rect_ctx():
    h = 0.04
    return validate_good_pair(build_compact([SetPrimitive.rectangle(0, 1 + 1j)], h),
                              build_compact([SetPrimitive.rectangle(0.5, 1.5 + 1j)], h))


def overlap_sum(ctx, s):
    return s.t1.restrict(ctx.k12).values + s.t2.restrict(ctx.k12).values


def test_zero_splits_to_zero(rect_ctx):
    s = split_additive(SampledMap(rect_ctx.k12, np.zeros(len(rect_ctx.k12))), rect_ctx)
    assert not s.t1.values.any() and not s.t2.values.any()


def test_constant_one_rectangle_pair(rect_ctx):
    f = SampledMap(rect_ctx.k12, np.ones(len(rect_ctx.k12)))
    s = split_additive(f, rect_ctx)
    h = rect_ctx.k12.h
    assert np.abs(overlap_sum(rect_ctx, s) - 1).max() <= 1e-9 + 10 * h


def test_disk_pair_identity(pair_ctx):
    ctx = pair_ctx
    P = InterpolationSet((0.0,))
    f = SampledMap.from_function(ctx.k12, lambda z: z)
    s = split_additive(f, ctx, P)
    assert np.abs(overlap_sum(ctx, s) - f.values).max() <= 1e-9
    assert abs(s.t1.values[P.snap(ctx.k1)][0, 0]) <= 1e-9
    assert abs(s.t2.values[P.snap(ctx.k2)][0, 0]) <= 1e-9
    h = ctx.k1.h
    for t, k in ((s.t1, ctx.k1), (s.t2, ctx.k2)):
        r = cr_residual(t, mask=far_from_band(ctx, k))
        assert not r.vacuous and r.max <= 10 * h * (1 + 1)


def test_precondition_checked(pair_ctx):
    f = SampledMap(pair_ctx.k12, np.ones(len(pair_ctx.k12)))
    with pytest.raises(InterpolationError):
        split_additive(f, pair_ctx, InterpolationSet((0.0,)))


def test_support_locality(pair_ctx):
    ctx = pair_ctx
    sp = AdditiveSplitter(ctx, InterpolationSet((0.0,)))
    f = SampledMap.from_function(ctx.k12, lambda z: z * np.exp(z))
    s = sp.split(f)
    plateau = sp.chi1 == 1
    ref = s.big_lambda.values[sp.i1] - s.q(ctx.k1.points)
    assert np.abs(s.t1.values[plateau] - ref[plateau]).max() <= 1e-12 * (1 + np.abs(ref).max())


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6), st.complex_numbers(max_magnitude=2), st.complex_numbers(max_magnitude=2))
def test_linearity(pair_ctx_coarse, seed, a, b):
    ctx = pair_ctx_coarse
    sp = AdditiveSplitter(ctx)
    rng = np.random.default_rng(seed)
    f = rng.normal(size=len(ctx.k12)) + 1j * rng.normal(size=len(ctx.k12))
    g = rng.normal(size=len(ctx.k12)) + 1j * rng.normal(size=len(ctx.k12))
    t1a, t2a, *_ = sp.apply(a * f + b * g)
    t1f, t2f, *_ = sp.apply(f)
    t1g, t2g, *_ = sp.apply(g)
    scale = 1 + abs(a) + abs(b)
    assert np.abs(t1a - (a * t1f + b * t1g)).max() <= 1e-11 * scale * 10
    assert np.abs(t2a - (a * t2f + b * t2g)).max() <= 1e-11 * scale * 10


def test_norm_bound_dominates_empirical_norm(pair_ctx_coarse):
    sp = AdditiveSplitter(pair_ctx_coarse, InterpolationSet((0.0,)))
    emp = sp.empirical_norm(n=10)
    assert 1 <= emp <= sp.norm_bound()
