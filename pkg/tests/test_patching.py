import numpy as np
import pytest

from holopatch.cartan import GroupMapSample, split_multiplicative
from holopatch.compacts import GeometryError, SetPrimitive, build_compact
from holopatch.cousin import AdditiveSplitter
from holopatch.patching import (FitError, PatchingError, SectionChart, TransitionMap,
                                build_rhs_inverse, complement_connected, fit_holomorphic,
                                glue_good_pair, patch_sections)
from holopatch.spaces import InterpolationSet, SampledMap, cr_residual


def const_group(ctx, M):
    return GroupMapSample(ctx.k12, np.broadcast_to(np.asarray(M, complex), (len(ctx.k12), 2, 2)).copy())


def sections(ctx, F, t):
    u1 = SectionChart.from_fibre(ctx.k1, t(ctx.k1.points))
    w = F(SectionChart.from_fibre(ctx.k2, t(ctx.k2.points)).values)
    return u1, w


# ---------------------------------------------------------------------------
# transition maps and charts


@pytest.mark.parametrize("F", [TransitionMap.identity(), TransitionMap.shear(0.1, 2),
                               TransitionMap.twist(0.5), TransitionMap.cubic(0.1),
                               TransitionMap.affine([[2.0]], [0.05])])
def test_transition_maps_validate(F):
    assert F.validate() <= 1e-6
    Z = np.array([[0.3 + 0.1j, 0.2 - 0.4j], [1.0, 1j]])
    assert np.array_equal(F(Z)[:, -1], Z[:, -1])


def test_section_last_coordinate_forced(unit_disk):
    s = SectionChart(unit_disk, np.ones((len(unit_disk), 2)))
    assert np.array_equal(s.values[:, -1], unit_disk.points)
    with pytest.raises(ValueError):
        SectionChart(unit_disk, np.ones((len(unit_disk), 1)))


# ---------------------------------------------------------------------------
# right inverse


def test_rhs_inverse_identity_is_additive_split(pair_ctx_coarse):
    ctx = pair_ctx_coarse
    sp = AdditiveSplitter(ctx)
    S = build_rhs_inverse(GroupMapSample.identity(ctx.k1, 2), GroupMapSample.identity(ctx.k2, 2), ctx,
                          splitter=sp)
    g = np.exp(ctx.k12.points)
    v1, v2 = S.apply(g)
    t1, t2, *_ = sp.apply(np.column_stack([g, np.zeros(len(g))]))
    assert np.allclose(v1[:, 0], -t1[:, 0], atol=1e-14)
    assert np.allclose(v2[:, 0], t2[:, 0], atol=1e-14)
    assert not v1[:, 1].any() and not v2[:, 1].any()
    assert S.probe()[0] <= 1e-9


def test_rhs_inverse_constant_diagonal(pair_ctx_coarse):
    # F(z1, z2) = (2 z1, z2) has constant Jacobian diag(2, 1)
    ctx = pair_ctx_coarse
    cs = split_multiplicative(const_group(ctx, np.diag([2.0, 1.0])), ctx)
    S = build_rhs_inverse(cs.gamma1, cs.gamma2, ctx)
    assert S.probe()[0] <= 1e-9


def test_rhs_inverse_zero_and_interpolation(pair_ctx_coarse):
    ctx = pair_ctx_coarse
    P = InterpolationSet((0.0,))
    S = build_rhs_inverse(GroupMapSample.identity(ctx.k1, 2), GroupMapSample.identity(ctx.k2, 2), ctx, P)
    v1, v2 = S.apply(np.zeros(len(ctx.k12)))
    assert not v1.any() and not v2.any()
    g = ctx.k12.points * np.exp(ctx.k12.points)
    v1, v2 = S.apply(g)
    assert np.abs(v1[P.snap(ctx.k1)]).max() <= 1e-9
    assert np.abs(v2[P.snap(ctx.k2)]).max() <= 1e-9


# ---------------------------------------------------------------------------
# nonlinear patching


def test_identity_transition_needs_no_correction(pair_ctx_coarse):
    ctx = pair_ctx_coarse
    F = TransitionMap.identity()
    u1, w = sections(ctx, F, np.sin)
    res = patch_sections(u1, SectionChart(ctx.k2, w), F, ctx)
    assert res.v1.norm() == 0 and res.v2.norm() == 0 and res.iterations == 0


def test_affine_translation_matches_linear_solve(pair_ctx_coarse):
    ctx = pair_ctx_coarse
    F = TransitionMap.affine([[1.0]], [0.05])
    u1, w = sections(ctx, F, lambda z: z ** 2)
    w[:, 0] -= 0.02
    res = patch_sections(u1, SectionChart(ctx.k2, w), F, ctx, epsilon=0.05)
    assert max(res.v1.norm(), res.v2.norm()) <= 0.05
    assert res.residual <= 1e-8 and res.iterations == 1
    # Jacobian is the identity: v2 - v1 = 0.02 on K12 is the additive problem
    t1, t2, *_ = AdditiveSplitter(ctx).apply(np.column_stack([np.full(len(ctx.k12), 0.02), np.zeros(len(ctx.k12))]))
    assert np.abs(res.v1.values[:, 0] + t1[:, 0]).max() <= 1e-12
    assert np.abs(res.v2.values[:, 0] - t2[:, 0]).max() <= 1e-12


def shear_run(ctx, pert, mode="frozen"):
    F = TransitionMap.shear(0.1, 2)
    P = InterpolationSet((0.0,))
    u1, w = sections(ctx, F, np.sin)
    prof = ctx.k2.points / np.abs(ctx.k2.points).max()
    w[:, 0] += pert * prof
    return P, patch_sections(u1, SectionChart(ctx.k2, w), F, ctx, P, 0.1, mode=mode)


@pytest.mark.parametrize("mode", ["frozen", "newton"])
def test_shear_on_disk_pair(pair_ctx_coarse, mode):
    ctx = pair_ctx_coarse
    P, res = shear_run(ctx, 1e-3, mode)
    assert res.residual <= 1e-8
    assert res.v1.values[P.snap(ctx.k1)].max() == 0 and res.v2.values[P.snap(ctx.k2)].max() == 0
    assert not res.v1.values[:, -1].any() and not res.v2.values[:, -1].any()
    assert max(res.v1.norm(), res.v2.norm()) <= 0.1


def test_shear_stable_under_refinement(pair_ctx_coarse, pair_ctx):
    norms = [max(r.v1.norm(), r.v2.norm()) for r in
             (shear_run(c, 1e-3)[1] for c in (pair_ctx_coarse, pair_ctx))]
    assert abs(norms[0] - norms[1]) <= 0.2 * norms[0]


def test_halving_perturbation_halves_correction(pair_ctx_coarse):
    a = shear_run(pair_ctx_coarse, 1e-3)[1]
    b = shear_run(pair_ctx_coarse, 5e-4)[1]
    na, nb = max(a.v1.norm(), a.v2.norm()), max(b.v1.norm(), b.v2.norm())
    assert nb <= 0.5 * na * (1 + 1e-9)


def test_nonaffine_fibre_map(pair_ctx_coarse):
    ctx = pair_ctx_coarse
    F = TransitionMap.cubic(0.1)
    u1, w = sections(ctx, F, lambda z: 0.3 * z)
    w[:, 0] += 1e-4 * ctx.k2.points
    res = patch_sections(u1, SectionChart(ctx.k2, w), F, ctx, InterpolationSet((0.0,)), 0.1)
    assert res.residual <= 1e-8 and res.iterations >= 2


def test_delta_precondition(pair_ctx_coarse):
    ctx = pair_ctx_coarse
    F = TransitionMap.shear(0.1, 2)
    u1, w = sections(ctx, F, np.sin)
    w[:, 0] += 0.5
    with pytest.raises(PatchingError):
        patch_sections(u1, SectionChart(ctx.k2, w), F, ctx, epsilon=0.1)


def test_interpolation_precondition(pair_ctx_coarse):
    ctx = pair_ctx_coarse
    F = TransitionMap.identity()
    u1, w = sections(ctx, F, np.sin)
    w[:, 0] += 1e-3
    with pytest.raises(PatchingError):
        patch_sections(u1, SectionChart(ctx.k2, w), F, ctx, InterpolationSet((0.0,)))


# ---------------------------------------------------------------------------
# polynomial fitting and gluing


def test_complement_connected():
    assert complement_connected(build_compact([SetPrimitive.disk(0, 1)], 0.1))
    ring = build_compact([SetPrimitive.disk(0, 1)], 0.1)
    ring = ring.subset(np.abs(ring.points) >= 0.5)
    assert not complement_connected(ring)


def test_fit_rejects_holes():
    ring = build_compact([SetPrimitive.disk(0, 1)], 0.1)
    ring = ring.subset(np.abs(ring.points) >= 0.5)
    with pytest.raises(FitError):
        fit_holomorphic(ring.points, ring, ring, 1e-3, InterpolationSet())


def test_fit_interpolates(unit_disk):
    P = InterpolationSet((0.0, 0.5j))
    vals = np.exp(unit_disk.points)
    out, rep = fit_holomorphic(vals, unit_disk, unit_disk, 1e-6, P)
    assert np.abs(out[:, 0] - vals).max() <= 1e-6
    assert np.all(out[P.snap(unit_disk), 0] == vals[P.snap(unit_disk)])


@pytest.fixture(scope="module")
def glue_setup(pair_ctx_coarse):
    ctx = pair_ctx_coarse
    B = build_compact([SetPrimitive.disk(2.0, 0.2)], ctx.k1.h)
    return ctx, B, TransitionMap.shear(0.1, 2)


def glue(setup, t, P, eta):
    ctx, B, F = setup
    s1, w = sections(ctx, F, t)
    return glue_good_pair(s1, SectionChart(ctx.k2, w), F, ctx.k1, ctx.k2, B, P, eta=eta)


def test_glue_holomorphic_is_fixed_point(glue_setup):
    out = glue(glue_setup, lambda z: z ** 2, InterpolationSet((0.48,)), 0.05)
    assert out.deviation <= 1e-9
    assert max(out.patch.v1.norm(), out.patch.v2.norm()) <= 1e-9


def test_glue_touching_disk(pair_ctx_coarse):
    ctx = pair_ctx_coarse
    F = TransitionMap.shear(0.1, 2)
    Bf = build_compact([SetPrimitive.disk(1.6, 0.3)], ctx.k1.h)
    B = Bf.subset(ctx.k2.locate(Bf) < 0)
    s1, w = sections(ctx, F, np.exp)
    P = InterpolationSet((0.48,))
    out = glue_good_pair(s1, SectionChart(ctx.k2, w), F, ctx.k1, ctx.k2, B, P, eta=0.05)
    assert out.deviation <= 0.05
    k2b = out.section2.domain
    i = P.snap(k2b)
    ref = F(SectionChart.from_fibre(k2b, np.exp(k2b.points)).values)
    assert np.abs(out.section2.values[i] - ref[i]).max() <= 1e-10
    near = np.abs(k2b.points - 1.6) <= 0.3
    r = cr_residual(SampledMap(k2b, out.section2.fibre), mask=near)
    assert r.max <= 10 * ctx.k1.h


def test_glue_nonholomorphic_chart_data_is_not_approximable(glue_setup):
    # |z|^2 is subharmonic: no holomorphic function is uniformly close on a disk
    with pytest.raises(FitError):
        glue(glue_setup, lambda z: np.abs(z) ** 2, InterpolationSet((0.48,)), 0.05)


def test_glue_large_eta_constant_fit(glue_setup):
    out = glue(glue_setup, lambda z: np.abs(z) ** 2, InterpolationSet(), 100.0)
    assert out.fit.degrees[0] == 0 and out.deviation <= 100.0


def test_glue_rejects_b_meeting_k1(glue_setup):
    ctx, _, F = glue_setup
    B = build_compact([SetPrimitive.disk(-1.0, 0.2)], ctx.k1.h)
    s1, w = sections(ctx, F, np.sin)
    with pytest.raises(GeometryError):
        glue_good_pair(s1, SectionChart(ctx.k2, w), F, ctx.k1, ctx.k2, B)
