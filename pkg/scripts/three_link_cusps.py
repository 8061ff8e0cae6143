"""Triple-root cusps of the three-link pendulum over the (m2, m3) quarter circle.

Masses (m1, r cos a, r sin a); cusps are located by scanning a and
polishing with Newton on (f, f', f''). Shrinking r removes all but the
cusp nearest a = 0 for a moderately heavy base.

    python3 scripts/three_link_cusps.py --m1 5 10 --radii 1 0.9 0.8 0.65
"""

import math

import numpy as np

from _common import parser, write_json
from ziegler.model import PendulumConfig
from ziegler.singular import MassPlaneFamily, find_cusps


def main():
    ap = parser(__doc__.splitlines()[0])
    ap.add_argument("--m1", type=float, nargs="+", default=[5.0, 10.0])
    ap.add_argument("--radii", type=float, nargs="+", default=[1.0, 0.9, 0.8, 0.65])
    ap.add_argument("--steps", type=int, default=401)
    a = ap.parse_args()
    study = []
    print(f"{'m1':>5} {'r':>5} {'alpha':>10} {'P':>11} {'mu':>10} {'residual':>9}")
    for m1 in a.m1:
        for r in a.radii:
            fam = MassPlaneFamily(PendulumConfig(3, 1.0, (m1, 1.0, 1.0), (1.0, 1.0, 1.0)), (2, 3), r)
            cusps = find_cusps(fam, np.linspace(0.0, math.pi / 2, a.steps), (0.0, 100.0))
            study.append({"m1": m1, "r": r, "cusps": [c.to_dict() for c in cusps]})
            for c in cusps:
                loc = c.location
                print(f"{m1:5g} {r:5g} {loc['alpha']:10.6f} {loc['P']:11.6f} {complex(c.mu_value).real:10.6f}"
                      f" {c.max_residual:9.1e}")
            if not cusps:
                print(f"{m1:5g} {r:5g}       none")
    write_json(a.outdir / "three_link_cusps.json", study)


if __name__ == "__main__":
    main()
