import json
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from ziegler.critload import (BoundaryTracker, SearchSettings, Transition, critical_load_algebraic,
                              critical_load_closed_damped_m2, critical_load_numeric,
                              critical_loads_closed_undamped_m2, critical_value_algebraic, ziegler_damped_load,
                              zero_damping_limit_m2)
from ziegler.errors import ConfigError, DegenerateDamping, InfiniteLoad, UnstableAtZeroLoad
from ziegler.model import PendulumConfig, ziegler_config
from ziegler.stability import StabilityClass

from test_model import configs

LOW, HIGH = 3.5 - math.sqrt(2), 3.5 + math.sqrt(2)
S50 = SearchSettings(p_max=50.0)


def test_ziegler_closed_form():
    lo, hi = critical_loads_closed_undamped_m2(ziegler_config())
    assert lo == pytest.approx(LOW, abs=1e-15) and hi == pytest.approx(HIGH, abs=1e-15)


def test_ziegler_numeric():
    res = critical_load_numeric(ziegler_config())
    assert abs(res.normalized - LOW) < 1e-9
    assert res.transition is Transition.FLUTTER_ONSET
    assert res.from_class is StabilityClass.MARGINALLY_STABLE and res.to_class is StabilityClass.FLUTTER
    # the coalescing mu root is -1 / sqrt(2) at the Ziegler point: omega = 2**-0.25
    assert res.critical_frequency == pytest.approx(2**-0.25, rel=1e-4)


def test_second_boundary_is_divergence():
    tracker = BoundaryTracker(ziegler_config(), SearchSettings(p_max=10.0))
    found = [tracker.boundary_record(*b) for b in tracker.boundaries()]
    assert [b.transition for b in found] == [Transition.FLUTTER_ONSET, Transition.FLUTTER_TO_DIVERGENCE]
    assert abs(found[1].normalized - HIGH) < 1e-9


@given(st.floats(0.05, 5), st.floats(0.05, 5), st.floats(0.2, 5), st.floats(0.2, 5))
def test_numeric_matches_closed_form(m1, m2, c1, c2):
    cfg = ziegler_config(m1=m1, m2=m2, c1=c1, c2=c2)
    lo, _ = critical_loads_closed_undamped_m2(cfg)
    assert critical_load_numeric(cfg, SearchSettings(p_max=200.0)).normalized == pytest.approx(lo, abs=1e-8)


@given(configs(), st.booleans())
def test_algebraic_matches_numeric(cfg, damped):
    if damped:
        cfg = cfg.with_dampings([0.1 + 0.3 * k for k in range(cfg.link_count)])
    try:
        a = critical_load_algebraic(cfg, S50)
    except UnstableAtZeroLoad:
        return
    b = critical_load_numeric(cfg, S50)
    assert a.transition is b.transition
    if not a.unbounded:
        assert a.normalized == pytest.approx(b.normalized, abs=1e-8)
        assert critical_value_algebraic(cfg, S50) == pytest.approx(a.normalized, abs=1e-12)


def test_damped_ziegler_value():
    cfg = ziegler_config(d1=1.0, d2=1.0)
    assert abs(critical_load_numeric(cfg).value - 55 / 28) < 1e-9
    assert abs(critical_load_algebraic(cfg).value - 55 / 28) < 1e-9
    assert critical_load_closed_damped_m2(cfg) == pytest.approx(55 / 28, abs=1e-14)


def test_special_case_in_exact_arithmetic():
    d1 = d2 = Fraction(1)
    value = (4 * d1**2 + 33 * d1 * d2 + 4 * d2**2) / (2 * (6 * d2 + d1) * (d2 + d1)) + d1 * d2 / 2
    assert value == Fraction(55, 28)


@given(st.floats(0.01, 5), st.floats(0.01, 5))
def test_general_formula_specializes(d1, d2):
    cfg = ziegler_config(d1=d1, d2=d2)
    assert critical_load_closed_damped_m2(cfg) == pytest.approx(ziegler_damped_load(d1, d2), rel=1e-12)


def test_general_damped_formula_from_hurwitz_condition():
    """Solve H3 = a1 a2 a3 - a0 a3**2 - a1**2 a4 = 0 for P symbolically and compare."""
    m1, m2, c1, c2, d1, d2, l, P = sp.symbols("m1 m2 c1 c2 d1 d2 l P", positive=True)
    a0 = l**4 * m1 * m2
    a1 = l**2 * (m1 * d2 + d1 * m2 + 4 * m2 * d2)
    a2 = d1 * d2 + m1 * l**2 * c2 + 4 * m2 * l**2 * c2 + c1 * m2 * l**2 - 2 * P * l**3 * m2
    a3 = d1 * c2 + c1 * d2
    a4 = c1 * c2
    sol = sp.solve(sp.Eq(a1 * a2 * a3 - a0 * a3**2 - a1**2 * a4, 0), P)
    assert len(sol) == 1
    f = sp.lambdify((m1, m2, c1, c2, d1, d2, l), sol[0])
    rng = np.random.default_rng(5)
    for _ in range(50):
        v = rng.uniform(0.1, 4, 7)
        cfg = PendulumConfig(2, v[6], (v[0], v[1]), (v[2], v[3]), (v[4], v[5]))
        assert critical_load_closed_damped_m2(cfg) == pytest.approx(f(*v), rel=1e-11)


@pytest.mark.parametrize("beta,limit", [(1.0, Fraction(41, 28))])
def test_zero_damping_limit_exact(beta, limit):
    assert zero_damping_limit_m2(ziegler_config(), beta) == pytest.approx(float(limit), abs=1e-15)


@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0])
def test_zero_damping_limit_is_approached(beta):
    cfg = ziegler_config(d1=beta * 1e-6, d2=1e-6)
    lim = zero_damping_limit_m2(ziegler_config(), beta)
    assert critical_load_closed_damped_m2(cfg) == pytest.approx(lim, abs=1e-9)
    assert critical_load_numeric(cfg).value == pytest.approx(lim, abs=1e-7)
    assert lim < LOW


@given(st.floats(0.01, 100))
def test_zero_damping_limit_below_undamped(beta):
    # destabilization: any fixed damping ratio loses stability earlier than the undamped system
    assert zero_damping_limit_m2(ziegler_config(), beta) < LOW


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.2, 5), st.floats(0.2, 5), st.sampled_from([0.5, 2.0, 10.0]))
def test_cone_homogeneity_in_stiffness(m1, m2, c1, c2, t):
    base = critical_load_algebraic(ziegler_config(m1=m1, m2=m2, c1=c1, c2=c2), SearchSettings(p_max=200.0))
    scaled = critical_load_algebraic(ziegler_config(m1=m1, m2=m2, c1=t * c1, c2=t * c2), SearchSettings(p_max=200.0))
    assert scaled.value == pytest.approx(t * base.value, rel=1e-10)


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.sampled_from([0.5, 2.0, 10.0]))
def test_ruled_surface_in_masses(m1, m2, t):
    a = critical_load_algebraic(ziegler_config(m1=m1, m2=m2), SearchSettings(p_max=200.0))
    b = critical_load_algebraic(ziegler_config(m1=t * m1, m2=t * m2), SearchSettings(p_max=200.0))
    assert b.normalized == pytest.approx(a.normalized, abs=1e-9)


def test_heavy_base_reduces_to_two_links(golden):
    doc = json.loads((golden / "m3_m1_200_quarter.json").read_text())
    a = math.pi / 4
    cfg = PendulumConfig(3, 1.0, (200.0, math.cos(a), math.sin(a)), (1.0, 1.0, 1.0))
    res = critical_load_numeric(cfg, S50)
    assert res.normalized == pytest.approx(doc["critical_load"]["p"], abs=1e-9)
    two = critical_loads_closed_undamped_m2(ziegler_config(m1=math.cos(a), m2=math.sin(a)))[0]
    assert abs(res.normalized - two) / two < 0.05


def test_unbounded_when_no_transition():
    res = critical_load_numeric(ziegler_config(), SearchSettings(p_max=1.0))
    assert res.unbounded and res.transition is Transition.UNBOUNDED
    assert critical_value_algebraic(ziegler_config(), SearchSettings(p_max=1.0)) == math.inf


def test_errors():
    with pytest.raises(InfiniteLoad):
        critical_loads_closed_undamped_m2(ziegler_config(m2=0.0))
    with pytest.raises(ConfigError):
        critical_loads_closed_undamped_m2(PendulumConfig(3, 1, (1, 1, 1), (1, 1, 1)))
    with pytest.raises(DegenerateDamping):
        critical_load_closed_damped_m2(ziegler_config())
    with pytest.raises(ValueError):
        SearchSettings(p_max=0.001)


def test_result_serializes():
    d = critical_load_numeric(ziegler_config()).to_dict()
    assert d["transition"] == "FLUTTER_ONSET" and abs(d["p"] - LOW) < 1e-9
