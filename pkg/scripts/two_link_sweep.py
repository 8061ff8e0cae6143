"""Stability bands of the two-link pendulum as the masses turn around a quarter circle.

For each stiffness ratio, masses are (m1, m2) = (cos a, sin a) and every
class boundary below p_max is traced over a. The lowest flutter load over
the sweep should touch p = 2 where m1 c2 = m2 c1.

    python3 scripts/two_link_sweep.py --steps 400
"""

import math

import numpy as np

from _common import parser, pyplot
from ziegler.critload import SearchSettings
from ziegler.model import ziegler_config
from ziegler.sweep import SweepSpec, alpha_grid, sweep_azimuth


def main():
    ap = parser(__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.5, 1.0, 2.0], help="c1 / c2 values")
    ap.add_argument("--jobs", type=int, default=1)
    a = ap.parse_args()
    a.outdir.mkdir(parents=True, exist_ok=True)
    plt = pyplot(a.no_plot)
    if plt:
        fig, axes = plt.subplots(1, len(a.ratios), figsize=(4 * len(a.ratios), 3.5), sharey=True)
        axes = np.atleast_1d(axes)

    print(f"{'c1/c2':>6} {'min p':>10} {'at alpha':>10} {'ray alpha':>10}")
    for k, q in enumerate(a.ratios):
        cfg = ziegler_config(c1=q, c2=1.0)
        res = sweep_azimuth(SweepSpec(cfg, (1, 2), 1.0, alpha_grid(a.steps)), SearchSettings(p_max=25.0), jobs=a.jobs)
        (a.outdir / f"sweep_m2_q{q:g}.csv").write_text(res.csv_text())
        firsts = [(row.alpha, row.boundaries[0].normalized) for row in res.rows if row.boundaries]
        alpha_min, p_min = min(firsts, key=lambda t: t[1])
        print(f"{q:6.3g} {p_min:10.6f} {alpha_min:10.6f} {math.atan2(1.0, q):10.6f}")
        if plt:
            for row in res.rows:
                for b in row.boundaries:
                    style = "C0." if b.transition.value == "FLUTTER_ONSET" else "C3."
                    axes[k].plot(row.alpha, b.normalized, style, ms=2)
            axes[k].axvline(math.atan2(1.0, q), color="0.6", lw=0.8)
            axes[k].set_title(f"c1/c2 = {q:g}")
            axes[k].set_xlabel("alpha")
    if plt:
        axes[0].set_ylabel("p")
        axes[0].set_ylim(0, 12)
        fig.tight_layout()
        fig.savefig(a.outdir / "two_link_sweep.png", dpi=150)
        print("wrote", a.outdir / "two_link_sweep.png")


if __name__ == "__main__":
    main()
