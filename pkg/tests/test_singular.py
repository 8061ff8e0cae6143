import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ziegler.charpoly import MuPoly
from ziegler.critload import CriticalLoad, SearchSettings, Transition
from ziegler.errors import ConfigError, NoConvergence, NotARoot
from ziegler.model import PendulumConfig, ziegler_config
from ziegler.singular import (MassPlaneFamily, NewtonSettings, SingularKind, certify_umbrella_apex_m2,
                              double_root_loads, find_cusps, find_triple_root_cusp, find_vertical_tangent,
                              jordan_order_at, manufactured_cusp_family)
from ziegler.stability import StabilityClass
from ziegler.sweep import SweepResult, SweepRow, SweepSpec, alpha_grid, sweep_azimuth

C1 = (0.0403477, 11.961144)


@pytest.fixture(scope="module")
def m3_family():
    return MassPlaneFamily(PendulumConfig(3, 1.0, (10.0, 1.0, 1.0), (1.0, 1.0, 1.0)), (2, 3), 1.0)


@pytest.fixture(scope="module")
def cusp(m3_family):
    return find_triple_root_cusp(m3_family, (0.04, 12.0, -1.3))


def test_cusp_location(cusp):
    assert abs(cusp.location["alpha"] - C1[0]) < 1e-4
    assert abs(cusp.location["P"] - C1[1]) < 1e-4
    lam = cusp.lambda_value
    assert abs(lam[0].imag - 1.1635243) < 1e-4 and abs(lam[0].real) < 1e-12
    assert lam[1] == pytest.approx(-lam[0])
    assert cusp.jordan_order == 3
    assert cusp.kind is SingularKind.TRIPLE_IMAGINARY_CUSP
    assert cusp.max_residual < 1e-9


@pytest.mark.parametrize("fa", [0.8, 1.2])
@pytest.mark.parametrize("fp", [0.8, 1.2])
@pytest.mark.parametrize("fm", [0.8, 1.2])
def test_cusp_stable_under_guess_perturbation(m3_family, cusp, fa, fp, fm):
    a, P, mu = cusp.location["alpha"], cusp.location["P"], cusp.mu_value
    pt = find_triple_root_cusp(m3_family, (a * fa, P * fp, mu * fm))
    assert pt.location["alpha"] == pytest.approx(a, abs=1e-8)
    assert pt.location["P"] == pytest.approx(P, abs=1e-8)


def test_cusp_geometry(m3_family, cusp):
    """Two double-root branches are born at the cusp with a gap growing like h**1.5."""
    ac, Pc = cusp.location["alpha"], cusp.location["P"]
    assert len(double_root_loads(m3_family, ac - 1e-4, (Pc - 1, Pc + 1))) == 0
    gaps, mids = [], []
    for h in (1e-4, 1e-5):
        loads = double_root_loads(m3_family, ac + h, (Pc - 1, Pc + 1))
        assert len(loads) == 2
        gaps.append(abs(loads[1] - loads[0]))
        mids.append((0.5 * (loads[0] + loads[1]) - Pc) / h)
    assert gaps[0] / gaps[1] == pytest.approx(10**1.5, rel=0.1)
    # both branches leave with the same finite slope
    assert mids[0] == pytest.approx(mids[1], rel=0.05)


def test_cusp_lies_on_the_boundary_grid(m3_family):
    pts = find_cusps(m3_family, np.linspace(0.0, 0.2, 81), (0.0, 100.0))
    assert any(abs(p.location["alpha"] - C1[0]) < 1e-6 and abs(p.location["P"] - C1[1]) < 1e-5 for p in pts)
    for p in pts:
        assert p.jordan_order == 3 and p.max_residual < 1e-9


def test_cusps_of_lighter_base_match_golden(golden):
    doc = json.loads((golden / "cusps_m1_5_r065.json").read_text())
    fam = MassPlaneFamily(PendulumConfig(3, 1.0, (5.0, 1.0, 1.0), (1.0, 1.0, 1.0)), (2, 3), 0.65)
    pts = find_cusps(fam, np.linspace(0.0, math.pi / 2, 401), (0.0, 100.0))
    assert len(pts) == len(doc["cusps"])
    for got, want in zip(pts, doc["cusps"]):
        assert got.location["alpha"] == pytest.approx(want["location"]["alpha"], abs=1e-9)
        assert got.location["P"] == pytest.approx(want["location"]["P"], abs=1e-8)
        assert got.jordan_order == 3


@given(st.floats(-1.0, 1.0), st.floats(0.5, 20.0), st.floats(-3.0, -0.2), st.floats(0.1, 10.0))
def test_manufactured_cusp_is_recovered(a0, p0, mu0, scale):
    fam = manufactured_cusp_family(a0, p0, mu0, scale)
    pt = find_triple_root_cusp(fam, (a0 + 0.05, p0 + 0.05, mu0 + 0.05))
    assert pt.location["alpha"] == pytest.approx(a0, abs=1e-8)
    assert pt.location["P"] == pytest.approx(p0, abs=1e-8)
    assert pt.mu_value == pytest.approx(mu0, abs=1e-6)
    assert pt.jordan_order == 3


def test_manufactured_double_real_root_kind():
    pt = find_triple_root_cusp(manufactured_cusp_family(0.3, 2.0, mu0=0.5), (0.35, 2.1, 0.6))
    assert pt.kind is SingularKind.DOUBLE_REAL


def test_newton_failure_is_reported():
    fam = manufactured_cusp_family(0.0, 1.0)
    with pytest.raises(NoConvergence):
        find_triple_root_cusp(fam, (5.0, 50.0, 4.0), settings=NewtonSettings(max_iter=1))


def test_jordan_order():
    assert jordan_order_at(MuPoly((1.0, 3.0, 3.0, 1.0)), -1.0) == 3
    assert jordan_order_at(MuPoly((1.0, 2.0, 1.0)), -1.0) == 2
    assert jordan_order_at(np.array([1.0, -3.0, 2.0]), 1.0) == 1
    with pytest.raises(NotARoot):
        jordan_order_at(MuPoly((1.0, 2.0, 1.0)), 0.0)


def _fake_result(boundary_fn, alphas):
    spec = SweepSpec(ziegler_config(), (1, 2), 1.0, tuple(alphas))

    def row(spec, alpha, s):
        loads = boundary_fn(alpha)
        bs = tuple(CriticalLoad(p, p, Transition.CLASS_CHANGE, None, StabilityClass.MARGINALLY_STABLE,
                                StabilityClass.FLUTTER) for p in loads)
        return SweepRow(alpha, bs, (StabilityClass.MARGINALLY_STABLE,) * (len(bs) + 1))

    rows = tuple(row(spec, a, None) for a in alphas)
    return SweepResult(spec, SearchSettings(p_max=25.0), rows), row


def test_constant_boundary_has_no_vertical_tangent():
    result, row_fn = _fake_result(lambda a: [3.0], alpha_grid(50))
    assert find_vertical_tangent(result, row_fn=row_fn) == []


def test_steep_but_smooth_branch_is_rejected():
    result, row_fn = _fake_result(lambda a: [2.0 + 4.0 * a + 3.0 * math.sin(20 * a)], alpha_grid(80))
    assert find_vertical_tangent(result, row_fn=row_fn) == []


def test_square_root_fold_is_found():
    fold = 0.61

    def loads(a):
        if a < fold:
            return [1.0]
        w = math.sqrt(a - fold)
        return [1.0, 5.0 - w, 5.0 + w]

    result, row_fn = _fake_result(loads, alpha_grid(60))
    pts = find_vertical_tangent(result, row_fn=row_fn)
    assert len(pts) == 1
    assert pts[0].location["alpha"] == pytest.approx(fold, abs=1e-6)
    assert pts[0].location["p"] == pytest.approx(5.0, abs=1e-2)
    assert pts[0].kind is SingularKind.VERTICAL_TANGENT


def test_two_link_vertical_tangent_at_zero_base_mass():
    result = sweep_azimuth(SweepSpec(ziegler_config(), (1, 2), 1.0, alpha_grid(100)), SearchSettings(p_max=25.0))
    pts = find_vertical_tangent(result)
    assert len(pts) == 1
    assert pts[0].location["alpha"] == pytest.approx(math.pi / 2, abs=1e-9)
    assert pts[0].location["p"] == pytest.approx(2.5, abs=1e-8)


@pytest.mark.parametrize("c1,c2", [(1.0, 1.0), (4.0, 1.0), (1.0, 3.0)])
def test_umbrella_apex(c1, c2):
    pt = certify_umbrella_apex_m2(ziegler_config(c1=c1, c2=c2), n_rays=1001)
    r = pt.residuals
    assert pt.kind is SingularKind.UMBRELLA_APEX
    assert pt.location["p"] == 2.0 and pt.location["ray_m1_over_m2"] == pytest.approx(c1 / c2)
    assert abs(r["closed_at_ray"]) < 1e-12
    assert abs(r["numeric_at_ray"]) < 1e-9
    assert r["ruled"] < 1e-9
    assert r["self_intersection"] < 1e-9
    assert 0 <= r["min_over_rays"] < 1e-5
    assert pt.jordan_order == 2


def test_umbrella_needs_two_undamped_links():
    with pytest.raises(ConfigError):
        certify_umbrella_apex_m2(ziegler_config(d1=1, d2=1))
