import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holopatch.compacts import SetPrimitive, build_compact
from holopatch.spaces import (InterpolationError, InterpolationSet, SampledMap, cr_residual,
                              fit_polynomial, interpolant_of, interpolation_correction,
                              lagrange_interpolate, lebesgue_constant, project_vanishing,
                              sup_norm)

complex_st = st.builds(complex, st.floats(-2, 2), st.floats(-2, 2))


@pytest.fixture(scope="module")
def segment():
    return build_compact([SetPrimitive.polyline([-1, 1])], 0.01)


# ---------------------------------------------------------------------------
# sup norm


def test_sup_norm_zero(unit_disk):
    assert sup_norm(SampledMap(unit_disk, np.zeros(len(unit_disk)))) == 0


def test_sup_norm_identity_converges_to_one():
    # lattice samples stop within h of the circle, so the error shrinks with h
    errs = []
    for h in (0.04, 0.02, 0.01):
        K = build_compact([SetPrimitive.disk(0, 1)], h)
        errs.append(1 - sup_norm(SampledMap.from_function(K, lambda z: z)))
    assert all(0 <= e <= h for e, h in zip(errs, (0.04, 0.02, 0.01)))


def test_sup_norm_constant_pair(unit_disk):
    f = SampledMap(unit_disk, np.tile([3, 4j], (len(unit_disk), 1)))
    assert sup_norm(f) == 4


def test_sup_norm_empty_raises():
    K = build_compact([], 0.1)
    with pytest.raises(ValueError):
        sup_norm(SampledMap(K, np.zeros((0, 1))))


def test_sampled_map_rejects_nonfinite(unit_disk):
    v = np.zeros(len(unit_disk))
    v[3] = np.nan
    with pytest.raises(ValueError):
        SampledMap(unit_disk, v)


# ---------------------------------------------------------------------------
# Lagrange interpolation


def test_constant_data_gives_constant():
    L = lagrange_interpolate([0, 1, 1j, 2], [2 - 1j] * 4)
    z = np.linspace(-3, 3, 17) + 0.5j
    assert np.allclose(L(z), 2 - 1j, atol=1e-12)


def test_two_point_linear():
    L = lagrange_interpolate([0, 1], [0, 1])
    z = np.array([0.3 + 0.2j, -2, 5j])
    assert np.allclose(L(z).ravel(), z, atol=1e-12)


def test_three_nodes_match_vandermonde_solve():
    nodes = np.array([0, 1, 1j])
    vals = np.exp(nodes)
    L = lagrange_interpolate(nodes, vals)
    c = np.linalg.solve(np.vander(nodes, 3, increasing=True), vals)
    z = np.array([0.5 + 0.5j, -1, 2j, 0.1])
    ref = c[0] + c[1] * z + c[2] * z ** 2
    assert np.allclose(L(z).ravel(), ref, atol=1e-12)
    assert np.allclose(L(nodes).ravel(), vals, atol=1e-12)


def test_duplicate_nodes_raise():
    with pytest.raises(InterpolationError):
        lagrange_interpolate([0, 1, 0], [1, 2, 3])
    with pytest.raises(InterpolationError):
        InterpolationSet((0, 0))


def test_empty_node_set_is_zero():
    L = lagrange_interpolate([], [], m=2)
    assert np.array_equal(L(np.array([1j, 2])), np.zeros((2, 2)))


def test_too_many_points_rejected():
    with pytest.raises(InterpolationError):
        InterpolationSet(tuple(range(13)))
    assert len(InterpolationSet(tuple(range(13)), allow_large=True)) == 13


@settings(max_examples=40, deadline=None)
@given(st.lists(complex_st, min_size=1, max_size=6, unique=True), st.integers(0, 10**6))
def test_interpolation_is_exact_and_linear(nodes, seed):
    nodes = np.array(nodes)
    if len(nodes) > 1:
        d = np.abs(nodes[:, None] - nodes[None, :]) + np.eye(len(nodes))
        if d.min() < 0.05:
            return
    rng = np.random.default_rng(seed)
    a = rng.normal(size=len(nodes)) + 1j * rng.normal(size=len(nodes))
    b = rng.normal(size=len(nodes)) + 1j * rng.normal(size=len(nodes))
    La, Lb = lagrange_interpolate(nodes, a), lagrange_interpolate(nodes, b)
    Lab = lagrange_interpolate(nodes, 2 * a - 3j * b)
    scale = 1 + np.abs(a).max() + np.abs(b).max()
    assert np.abs(La(nodes).ravel() - a).max() <= 1e-12 * scale
    z = rng.normal(size=10) + 1j * rng.normal(size=10)
    lin = Lab(z) - (2 * La(z) - 3j * Lb(z))
    assert np.abs(lin).max() <= 1e-9 * scale * (1 + np.abs(La(z)).max() + np.abs(Lb(z)).max())


def test_lebesgue_bound_realised(segment):
    P = InterpolationSet((-0.5, 0.0, 0.7))
    C = lebesgue_constant(P, segment)
    rng = np.random.default_rng(0)
    idx = P.snap(segment)
    for _ in range(100):
        g = SampledMap(segment, rng.normal(size=len(segment)) + 1j * rng.normal(size=len(segment)))
        Lg = interpolant_of(g, P)(segment.points)
        assert np.abs(Lg).max() <= C * sup_norm(g) * (1 + 1e-12)
    assert idx.shape == (3,)


# ---------------------------------------------------------------------------
# interpolation correction and projection


def test_correction_identity(segment):
    f = SampledMap.from_function(segment, lambda z: np.exp(z))
    out = interpolation_correction(f, f, InterpolationSet((0.2,)))
    assert np.allclose(out.values, f.values, atol=1e-12)


def test_correction_constant_offset(segment):
    f = SampledMap.from_function(segment, lambda z: np.sin(3 * z))
    ft = f.with_values(f.values + 0.01)
    P = InterpolationSet((0.0,))
    out = interpolation_correction(f, ft, P)
    k = P.snap(segment)[0]
    assert out.values[k, 0] == f.values[k, 0]
    C = lebesgue_constant(P, segment)
    assert np.abs(out.values - f.values).max() <= 0.02 * (1 + C)


def test_correction_empty_set(segment):
    f = SampledMap.from_function(segment, lambda z: z)
    ft = f.with_values(f.values + 0.3)
    assert interpolation_correction(f, ft, InterpolationSet()) is ft


def test_correction_far_point_raises(segment):
    f = SampledMap.from_function(segment, lambda z: z)
    with pytest.raises(InterpolationError):
        interpolation_correction(f, f, InterpolationSet((0.5 + 0.5j,)))


def test_project_vanishing_examples(unit_disk):
    f = SampledMap.from_function(unit_disk, lambda z: z * (z - 0.5))
    P = InterpolationSet((0.0, 0.5))
    assert np.abs(project_vanishing(f, P).values - f.values).max() <= 1e-12
    one = SampledMap(unit_disk, np.ones(len(unit_disk)))
    assert np.abs(project_vanishing(one, InterpolationSet((0.0,))).values).max() <= 1e-12
    sq = SampledMap.from_function(unit_disk, lambda z: z ** 2)
    out = project_vanishing(sq, InterpolationSet((1.0, -1.0)))
    assert np.allclose(out.values.ravel(), unit_disk.points ** 2 - 1, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_project_vanishing_idempotent(seed, n):
    K = build_compact([SetPrimitive.rectangle(-1 - 1j, 1 + 1j)], 0.1)
    rng = np.random.default_rng(seed)
    P = InterpolationSet(tuple(K.points[rng.choice(len(K), n, replace=False)]))
    f = SampledMap(K, rng.normal(size=(len(K), 2)) + 1j * rng.normal(size=(len(K), 2)))
    once = project_vanishing(f, P)
    twice = project_vanishing(once, P)
    assert np.abs(once.values[P.snap(K)]).max() == 0
    assert np.abs(twice.values - once.values).max() <= 1e-12 * (1 + np.abs(once.values).max())


# ---------------------------------------------------------------------------
# discrete dbar


def test_cr_residual_cubic_is_second_order():
    res = []
    for h in (0.04, 0.02):
        K = build_compact([SetPrimitive.disk(0, 1)], h)
        res.append(cr_residual(SampledMap.from_function(K, lambda z: z ** 3)).max)
    assert res[0] < 0.01
    assert np.log2(res[0] / res[1]) > 1.8


def test_cr_residual_conj_is_one(unit_disk):
    r = cr_residual(SampledMap.from_function(unit_disk, np.conj))
    assert not r.vacuous
    assert np.allclose(r.field, 1.0)


def test_cr_residual_constant_and_vacuous(unit_disk):
    assert cr_residual(SampledMap(unit_disk, np.full(len(unit_disk), 2j))).max == 0
    seg = build_compact([SetPrimitive.polyline([0, 1])], 0.05)
    r = cr_residual(SampledMap.from_function(seg, np.conj))
    assert r.vacuous and r.max == 0 and len(r.field) == 0


@settings(max_examples=15, deadline=None)
@given(st.lists(complex_st, min_size=2, max_size=4), st.booleans())
def test_cr_residual_polynomials_in_z_and_conj(coef, conjugate):
    coef = np.array(coef)
    if abs(coef[-1]) < 0.5:
        return
    out = []
    for h in (0.04, 0.02):
        K = build_compact([SetPrimitive.rectangle(-0.5 - 0.5j, 0.5 + 0.5j)], h)
        f = (lambda z: np.polyval(coef, np.conj(z))) if conjugate else (lambda z: np.polyval(coef, z))
        out.append(cr_residual(SampledMap.from_function(K, f)).max)
    if conjugate:
        # dbar of a polynomial in conj(z) is its derivative, bounded away from zero
        assert out[1] >= 0.5 * out[0] > 0
    else:
        assert out[1] <= out[0] / 3.5 + 1e-12


def test_fit_polynomial_recovers_polynomial():
    z = build_compact([SetPrimitive.disk(0, 1)], 0.05).points
    vals = 1 + 2 * z - 0.5j * z ** 4
    fit = fit_polynomial(z, vals, 6)
    assert np.abs(fit(z).ravel() - vals).max() <= 1e-10
