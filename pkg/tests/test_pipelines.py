import csv
import json

import numpy as np
import pytest

from holopatch.compacts import GeometryError, SetPrimitive, build_compact
from holopatch.config import PipelineConfig, point_compact
from holopatch.pipelines import (FIXTURES, PipelineError, a3_to_a2, demo_c2, demo_domain,
                                 demo_zero_dim, fixture_config, lift_section, run_fixture)
from holopatch.spaces import InterpolationSet, SampledMap


def assert_report_bounds(rep):
    assert rep.sup_error < rep.epsilon
    assert rep.interpolation_max <= 1e-9 * max(rep.scale, 1.0)
    assert rep.cr_residual_max <= 10 * rep.h * (1 + rep.scale)
    assert rep.ok


@pytest.fixture(scope="module")
def segment():
    return build_compact([SetPrimitive.polyline([0, 1])], 0.02)


# ---------------------------------------------------------------------------
# lift and projection


def test_lift_section_appends_base_point(segment):
    f = np.exp(segment.points)
    L = lift_section(f, segment)
    assert L.shape == (len(segment), 2)
    assert np.array_equal(L[:, 0], f) and np.array_equal(L[:, 1], segment.points)


@pytest.mark.parametrize("c", [2.0, 1 - 3j])
def test_constant_is_reproduced(segment, c):
    f = SampledMap(segment, np.full(len(segment), c))
    out = a3_to_a2(f, InterpolationSet((0.0, 1.0)), 0.05)
    assert out.report.sup_error <= 1e-12
    assert np.abs(out.values - c).max() <= 1e-12


def test_polynomial_is_a_fixed_point(segment):
    f = SampledMap.from_function(segment, lambda z: z ** 3 - z)
    out = a3_to_a2(f, InterpolationSet((0.0, 1.0)), 0.05)
    assert out.report.sup_error <= 1e-9


def test_vector_valued_input(segment):
    f = SampledMap.from_function(segment, lambda z: np.column_stack([np.exp(z), np.conj(z) ** 2]))
    out = a3_to_a2(f, InterpolationSet((0.0, 1.0)), 0.1)
    assert out.values.shape[1] == 2
    assert_report_bounds(out.report)


def test_kink_at_fine_tolerance_is_out_of_reach(segment):
    # a holomorphic function within 0.01 of |x - 0.5| must turn within ~0.01 of
    # the kink, which is incompatible with holomorphy on a 4h = 0.08 neighbourhood
    f = SampledMap.from_function(segment, lambda z: np.abs(z.real - 0.5))
    with pytest.raises(PipelineError):
        a3_to_a2(f, InterpolationSet((0.0, 0.5, 1.0)), 0.01)


def test_kink_at_coarse_tolerance(segment):
    # the gluing constants turn epsilon into a fit target about twenty times smaller
    f = SampledMap.from_function(segment, lambda z: np.abs(z.real - 0.5))
    out = a3_to_a2(f, InterpolationSet((0.0, 0.5, 1.0)), 0.3)
    assert_report_bounds(out.report)


def test_unknown_method(segment):
    with pytest.raises(ValueError):
        a3_to_a2(SampledMap(segment, np.zeros(len(segment))), method="spline")


# ---------------------------------------------------------------------------
# finite sets


def test_three_points_exact():
    K = point_compact([0, 1, 1j], 0.02)
    out = a3_to_a2(SampledMap.from_function(K, np.conj), InterpolationSet((0, 1, 1j)), 0.05)
    assert out.report.sup_error == 0 and out.report.ok


def test_twenty_random_points_exact():
    rng = np.random.default_rng(0)
    pts = []
    while len(pts) < 20:
        p = complex(*rng.uniform(-2, 2, 2))
        if all(abs(p - q) > 0.2 for q in pts):
            pts.append(p)
    K = point_compact(pts, 0.02)
    out = a3_to_a2(SampledMap.from_function(K, lambda z: np.abs(z) + np.conj(z)), None, 0.05)
    assert out.report.sup_error == 0 and out.report.info["components"] == 20


def test_tiny_disks_below_resolution():
    K = build_compact([SetPrimitive.disk(c, 0.01) for c in (0, 1, 1j)], 0.02)
    out = a3_to_a2(SampledMap.from_function(K, np.conj), None, 1e-3, method="zerodim")
    assert out.report.sup_error <= 1e-3


def test_resolved_tiny_disks_cannot_approximate_conj():
    # on a disk of radius r, conj(z) is at distance r from every holomorphic function
    K = build_compact([SetPrimitive.disk(c, 0.01) for c in (0, 1, 1j)], 0.005)
    with pytest.raises(PipelineError):
        a3_to_a2(SampledMap.from_function(K, np.conj), None, 1e-3, method="zerodim")


def test_components_too_close():
    K = point_compact([0, 0.05], 0.02)
    with pytest.raises(GeometryError):
        a3_to_a2(SampledMap(K, np.zeros(2)), None, 0.05, method="zerodim")


def test_zero_dim_demo_from_config():
    cfg = PipelineConfig.from_dict({"schema": 1, "set": {"h": 0.02, "primitives": [
        {"kind": "points", "points": [[0, 0], [1, 0], [0, 1]]}]},
        "function": {"expr": "conj(z)"}, "interpolation_points": [[1, 0]]})
    rep = demo_zero_dim(cfg).report
    assert rep.sup_error == 0 and rep.demo == "zerodim"


# ---------------------------------------------------------------------------
# graphs


def test_triangle_needs_a_split():
    rep = run_fixture("triangle", 0.05).report
    assert len(rep.info["split_edges"]) >= 1
    assert_report_bounds(rep)


@pytest.mark.parametrize("name", ["segment", "y_graph", "triangle"])
def test_graph_refinement(name):
    method, cfg = fixture_config(name, 0.05)
    rep = run_fixture(name, 0.05, h=cfg.h / 2).report
    assert rep.h == cfg.h / 2
    assert_report_bounds(rep)


# ---------------------------------------------------------------------------
# domains


def test_holomorphic_input_on_disk_is_kept():
    K = build_compact([SetPrimitive.disk(0, 1)], 0.04)
    out = a3_to_a2(SampledMap.from_function(K, lambda z: z ** 2), InterpolationSet((0.0,)), 0.05)
    assert out.report.sup_error <= 1e-6
    assert max(s.deviation for s in out.report.stages) <= 1e-6


def test_conj_on_disk_is_out_of_reach():
    # conj(z) has distance 1 from the disk algebra (its mean against dz/(2 pi i) is 1)
    K = build_compact([SetPrimitive.disk(0, 1)], 0.04)
    with pytest.raises(PipelineError):
        a3_to_a2(SampledMap.from_function(K, np.conj), InterpolationSet((0.0,)), 0.05)


def single_summand_cfg():
    _, data = FIXTURES["disk"]
    return PipelineConfig.from_dict(data, h=0.04)


def test_single_summand_matches_domain_demo():
    a = demo_domain(single_summand_cfg()).report.to_dict(timings=False)
    b = demo_c2(single_summand_cfg()).report.to_dict(timings=False)
    assert (a.pop("demo"), b.pop("demo")) == ("domain", "c2")
    assert a == b


def test_nonsmooth_points_need_c2_demo():
    _, data = FIXTURES["tangent_disks"]
    with pytest.raises(GeometryError):
        demo_domain(PipelineConfig.from_dict(data, h=0.04))


def test_domain_coarse_run():
    rep = run_fixture("disk", 0.05, h=0.04).report
    assert_report_bounds(rep)
    assert [s.name for s in rep.stages] == ["pass1", "pass2", "pass3"]


# ---------------------------------------------------------------------------
# reports and dumps


def test_report_json_and_determinism():
    a = run_fixture("segment", 0.05).report
    b = run_fixture("segment", 0.05).report
    assert a.to_json(timings=False) == b.to_json(timings=False)
    d = json.loads(a.to_json())
    for key in ("sup_error", "interpolation_residuals", "cr_residual_max", "stages", "timings"):
        assert key in d
    assert "timings" not in json.loads(a.to_json(timings=False))


def test_csv_dump(tmp_path):
    out = run_fixture("segment", 0.05)
    p = out.write_csv(tmp_path / "seg.csv")
    rows = list(csv.reader(p.open()))
    assert rows[0][:2] == ["re", "im"] and rows[0][-3:] == ["in_K", "certified", "weight"]
    assert len(rows) == len(out.domain) + 1
    inK = sum(int(r[-3]) for r in rows[1:])
    assert inK == len(out.K)
