import csv
import io
import json
import math

import numpy as np
import pytest

from ziegler.critload import SearchSettings, critical_loads_closed_undamped_m2
from ziegler.model import PendulumConfig, ziegler_config
from ziegler.stability import StabilityClass
from ziegler.sweep import (CSV_COLUMNS, SweepSpec, alpha_grid, azimuth_pair, classify_grid, read_sweep_csv,
                           sweep_azimuth, sweep_row, write_sweep)
from ziegler.verify import reference_sweep

MS, FL, DV = StabilityClass.MARGINALLY_STABLE, StabilityClass.FLUTTER, StabilityClass.DIVERGENCE


@pytest.fixture(scope="module")
def two_link():
    return reference_sweep()


def test_golden_sweep_is_bit_stable(two_link, golden):
    assert two_link.csv_text() == (golden / "sweep_m2_c1_1_400.csv").read_text()
    assert reference_sweep().csv_text() == two_link.csv_text()


def test_two_link_branches_match_closed_form(two_link):
    worst = 0.0
    for row in two_link.rows:
        m1, m2 = azimuth_pair(row.alpha)
        if m2 == 0 or m1 < 1e-12:
            continue  # at m1 = 0 both branches meet; see test_row_at_endpoint
        lo, hi = critical_loads_closed_undamped_m2(ziegler_config(m1=m1, m2=m2))
        expected = [p for p in (lo, hi) if p <= 25.0]
        got = [b.normalized for b in row.boundaries]
        assert len(got) == len(expected)
        worst = max([worst] + [abs(g - e) for g, e in zip(got, expected)])
    assert worst < 1e-9


def test_band_ordering(two_link):
    for row in two_link.rows:
        assert row.bands[0] is MS
        assert tuple(row.bands) in {(MS, FL, DV), (MS, FL), (MS,), (MS, DV)}


def test_csv_round_trip(two_link, tmp_path):
    text = two_link.csv_text()
    rows = read_sweep_csv(text)
    assert list(rows[0]) == list(CSV_COLUMNS)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([f"{r['alpha']:.15g}", f"{r['r']:.15g}", r["boundary_index"], f"{r['load_P']:.12g}",
                    f"{r['load_p_normalized']:.12g}", r["transition"],
                    "" if r["omega"] is None else ("inf" if math.isinf(r["omega"]) else f"{r['omega']:.9g}")])
    assert buf.getvalue() == text


def test_write_sweep_with_json(two_link, tmp_path):
    write_sweep(two_link, tmp_path / "s.csv", tmp_path / "s.json", manifest={"seed": None})
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["manifest"] == {"seed": None}
    assert len(doc["rows"]) == 400 and doc["columns"] == list(CSV_COLUMNS)
    assert (tmp_path / "s.csv").read_text() == two_link.csv_text()


def test_parallel_rows_identical():
    spec = SweepSpec(PendulumConfig(3, 1.0, (10.0, 1.0, 1.0), (1.0, 1.0, 1.0)), (2, 3), 1.0, alpha_grid(24))
    s = SearchSettings(p_max=25.0)
    assert sweep_azimuth(spec, s, jobs=1).csv_text() == sweep_azimuth(spec, s, jobs=2).csv_text()


def test_heavy_base_sweep_tracks_two_link_diagram(golden):
    spec = SweepSpec(PendulumConfig(3, 1.0, (200.0, 1.0, 1.0), (1.0, 1.0, 1.0)), (2, 3), 1.0, alpha_grid(100))
    result = sweep_azimuth(spec, SearchSettings(p_max=25.0))
    assert result.csv_text() == (golden / "sweep_m3_m1_200_100.csv").read_text()
    for alpha, p in result.branch(0):
        if alpha < 0.05:
            continue
        lo = critical_loads_closed_undamped_m2(ziegler_config(m1=math.cos(alpha), m2=math.sin(alpha)))[0]
        assert abs(p - lo) / lo < 0.05


def test_row_at_endpoint():
    spec = SweepSpec(ziegler_config(), (1, 2), 1.0, alpha_grid(5))
    row = sweep_row(spec, math.pi / 2, SearchSettings(p_max=25.0))
    assert [b.normalized for b in row.boundaries] == pytest.approx([2.5])
    assert row.bands == (MS, DV)


def test_classify_grid_shape_and_values():
    loads = np.array([1.0, 3.0, 6.0])
    g = classify_grid(ziegler_config(), (1, 2), loads, alphas=[math.atan2(1.0, 2.0)])
    assert g.shape == (1, 3)
    assert list(g[0]) == ["MARGINALLY_STABLE", "FLUTTER", "DIVERGENCE"]
    g = classify_grid(ziegler_config(), (1, 2), loads, radii=[0.5, 2.0], alpha=math.atan2(1.0, 2.0))
    # ruled surface: the radius does not matter
    assert list(g[0]) == list(g[1])
    with pytest.raises(ValueError):
        classify_grid(ziegler_config(), (1, 2), loads)


@pytest.mark.parametrize("kwargs", [
    dict(plane=(1, 1)), dict(plane=(1, 3)), dict(r=0.0), dict(alpha_grid=(0.3, 0.2)), dict(alpha_grid=(0.0, 2.0)),
])
def test_spec_validation(kwargs):
    base = dict(base=ziegler_config(), plane=(1, 2), r=1.0, alpha_grid=(0.1, 0.2))
    with pytest.raises(ValueError):
        SweepSpec(**{**base, **kwargs})


def test_alpha_grid_endpoints():
    g = alpha_grid(400)
    assert g[0] == 0.0 and g[-1] == math.pi / 2 and len(g) == 400
