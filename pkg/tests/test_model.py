import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ziegler.errors import ConfigError
from ziegler.model import (PendulumConfig, assemble, load_config, mass_block, mass_determinant, mass_matrix,
                           ziegler_config)

positive = st.floats(0.05, 10.0)


@st.composite
def configs(draw, m=None, damped=False):
    m = draw(st.integers(2, 4)) if m is None else m
    return PendulumConfig(
        m, draw(st.floats(0.3, 3.0)),
        tuple(draw(positive) for _ in range(m)),
        tuple(draw(positive) for _ in range(m)),
        tuple(draw(positive) for _ in range(m)) if damped else (),
    )


def test_ziegler_matrices():
    t = assemble(ziegler_config(), 0.5)
    np.testing.assert_array_equal(t.M, [[3, 1], [1, 1]])
    np.testing.assert_array_equal(t.K, [[2 - 0.5, -1 + 0.5], [-1, 1]])
    np.testing.assert_array_equal(t.D, np.zeros((2, 2)))


def test_three_link_mass_matrix_on_azimuth():
    a = math.pi / 4
    M = mass_matrix((10.0, math.cos(a), math.sin(a)), 1.0)
    assert M[0, 0] == pytest.approx(10 + math.sqrt(2), abs=1e-15)
    assert M[1, 2] == pytest.approx(math.sqrt(2) / 2, abs=1e-15)
    assert M[2, 2] == pytest.approx(math.sqrt(2) / 2, abs=1e-15)


def test_mass_matrix_is_sum_of_blocks():
    masses = (1.5, 0.2, 3.0, 0.7)
    total = sum(mk * mass_block(4, k + 1, 1.3) for k, mk in enumerate(masses))
    np.testing.assert_allclose(mass_matrix(masses, 1.3), total, rtol=1e-15)


def test_damping_matrix_two_links():
    t = assemble(ziegler_config(d1=0.3, d2=0.7), 0.0)
    np.testing.assert_array_equal(t.D, [[1.0, -0.7], [-0.7, 0.7]])


@given(configs())
def test_mass_determinant_identity(cfg):
    M = assemble(cfg, 0.0).M
    assert np.linalg.det(M) == pytest.approx(mass_determinant(cfg), rel=1e-8)


@given(configs(), st.floats(-5, 5), st.floats(-5, 5))
def test_stiffness_affine_in_load(cfg, p, q):
    K0, Kp, Kq = (assemble(cfg, x).K for x in (0.0, p, q))
    K1 = assemble(cfg, 1.0).K - K0
    np.testing.assert_allclose(Kp, K0 + p * K1, atol=1e-12)
    np.testing.assert_allclose(Kq - Kp, (q - p) * K1, atol=1e-12)
    # -l on the first m-1 diagonal entries plus the last column
    assert np.linalg.matrix_rank(K1) == cfg.link_count - 1


@given(configs(damped=True))
def test_symmetric_parts(cfg):
    t = assemble(cfg, 1.0)
    np.testing.assert_array_equal(t.M, t.M.T)
    np.testing.assert_array_equal(t.D, t.D.T)


def test_config_round_trip(tmp_path):
    cfg = PendulumConfig(3, 0.5, (1, 2, 3), (4, 5, 6), (0.1, 0, 0.2))
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == cfg
    assert PendulumConfig.from_dict(cfg.to_dict()) == cfg


def test_dampings_default_to_zero():
    cfg = PendulumConfig(2, 1.0, (1, 1), (1, 1))
    assert cfg.dampings == (0.0, 0.0) and not cfg.is_damped


@pytest.mark.parametrize("kwargs", [
    dict(link_count=1, link_length=1, masses=[1], stiffnesses=[1]),
    dict(link_count=2, link_length=0, masses=[1, 1], stiffnesses=[1, 1]),
    dict(link_count=2, link_length=1, masses=[1], stiffnesses=[1, 1]),
    dict(link_count=2, link_length=1, masses=[-1, 1], stiffnesses=[1, 1]),
    dict(link_count=2, link_length=1, masses=[0, 0], stiffnesses=[1, 1]),
    dict(link_count=2, link_length=1, masses=[1, 1], stiffnesses=[0, 1]),
    dict(link_count=2, link_length=1, masses=[1, 1], stiffnesses=[1, 1], dampings=[-1, 0]),
    dict(link_count=2.5, link_length=1, masses=[1, 1], stiffnesses=[1, 1]),
    dict(link_count=2, link_length=1, masses=[1, float("nan")], stiffnesses=[1, 1]),
])
def test_invalid_configs(kwargs):
    with pytest.raises(ConfigError):
        PendulumConfig.from_dict(kwargs)


def test_unknown_and_missing_keys():
    with pytest.raises(ConfigError, match="unknown"):
        PendulumConfig.from_dict({"link_count": 2, "link_length": 1, "masses": [1, 1],
                                  "stiffnesses": [1, 1], "colour": "red"})
    with pytest.raises(ConfigError, match="missing"):
        PendulumConfig.from_dict({"link_count": 2})


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_load_must_be_finite():
    with pytest.raises(ConfigError):
        assemble(ziegler_config(), float("inf"))


def test_normalization():
    cfg = PendulumConfig(2, 2.0, (1, 1), (1, 3))
    assert cfg.load_scale == 1.5
    assert cfg.denormalize(cfg.normalize(7.0)) == pytest.approx(7.0)
