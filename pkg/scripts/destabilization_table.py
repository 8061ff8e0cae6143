"""Small-damping limit of the two-link flutter load against the undamped value.

The damped critical load tends to a limit that depends on the damping ratio
beta = d1 / d2 and not on the damping size. The table lists the closed-form
limit, a numeric damped load at d2 = 1e-6 and the gap to the undamped value.

    python3 scripts/destabilization_table.py
"""

import numpy as np

from _common import parser, write_json
from ziegler.critload import (
    SearchSettings,
    critical_load_numeric,
    critical_loads_closed_undamped_m2,
    zero_damping_limit_m2,
)
from ziegler.model import ziegler_config


def main():
    ap = parser(__doc__.splitlines()[0])
    ap.add_argument("--betas", type=float, nargs="+",
                    default=[0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0, 100.0])
    ap.add_argument("--d2", type=float, default=1e-6)
    a = ap.parse_args()
    cfg = ziegler_config()
    undamped = critical_loads_closed_undamped_m2(cfg)[0]
    rows = []
    print(f"undamped flutter load {undamped:.9f}")
    print(f"{'beta':>7} {'limit':>12} {'numeric':>12} {'gap':>10}")
    for beta in a.betas:
        limit = zero_damping_limit_m2(cfg, beta)
        damped = ziegler_config(d1=beta * a.d2, d2=a.d2)
        num = critical_load_numeric(damped, SearchSettings(p_max=10.0)).normalized
        rows.append({"beta": beta, "limit": limit, "numeric": num, "gap": undamped - limit})
        print(f"{beta:7g} {limit:12.9f} {num:12.9f} {undamped - limit:10.3e}")
    betas = np.linspace(0.01, 100.0, 20001)
    gaps = undamped - np.array([zero_damping_limit_m2(cfg, b) for b in betas])
    k = int(np.argmin(gaps))
    print(f"smallest gap on beta in [0.01, 100]: {gaps[k]:.3e} at beta = {betas[k]:.4f}")
    write_json(a.outdir / "destabilization.json",
               {"undamped": undamped, "d2": a.d2, "rows": rows,
                "min_gap": {"beta": float(betas[k]), "gap": float(gaps[k])}})


if __name__ == "__main__":
    main()
