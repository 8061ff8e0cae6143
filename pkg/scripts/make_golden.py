"""Regenerate the golden files under tests/golden.

Run once after an intentional numerical change, inspect the diff, commit.

    python3 scripts/make_golden.py
"""

import json
import math
from pathlib import Path

import numpy as np

from ziegler.critload import SearchSettings, critical_load_numeric
from ziegler.model import PendulumConfig
from ziegler.singular import MassPlaneFamily, find_cusps
from ziegler.sweep import SweepSpec, alpha_grid, sweep_azimuth
from ziegler.verify import reference_sweep

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)

    (GOLDEN / "sweep_m2_c1_1_400.csv").write_text(reference_sweep().csv_text())

    fam = MassPlaneFamily(PendulumConfig(3, 1.0, (5.0, 1.0, 1.0), (1.0, 1.0, 1.0)), (2, 3), 0.65)
    cusps = find_cusps(fam, np.linspace(0.0, math.pi / 2, 401), (0.0, 100.0))
    doc = {"family": {"m1": 5.0, "plane": [2, 3], "r": 0.65}, "cusps": [c.to_dict() for c in cusps]}
    (GOLDEN / "cusps_m1_5_r065.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    a = math.pi / 4
    cfg = PendulumConfig(3, 1.0, (200.0, math.cos(a), math.sin(a)), (1.0, 1.0, 1.0))
    crit = critical_load_numeric(cfg, SearchSettings(p_max=50.0))
    (GOLDEN / "m3_m1_200_quarter.json").write_text(
        json.dumps({"config": cfg.to_dict(), "critical_load": crit.to_dict()}, indent=2, sort_keys=True) + "\n")

    heavy = sweep_azimuth(SweepSpec(PendulumConfig(3, 1.0, (200.0, 1.0, 1.0), (1.0, 1.0, 1.0)), (2, 3), 1.0,
                                    alpha_grid(100)), SearchSettings(p_max=25.0))
    (GOLDEN / "sweep_m3_m1_200_100.csv").write_text(heavy.csv_text())
    print("golden files written to", GOLDEN)


if __name__ == "__main__":
    main()
