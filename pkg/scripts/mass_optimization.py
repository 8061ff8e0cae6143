"""Extremal critical loads over the masses.

Two-link: the minimum p = 2 on the ray m1 c2 = m2 c1 and the edge maximum
2 + c1/(2 c2) at m1 = 0. Three-link: the highest first-loss load and the
highest load with a stable state on a mass circle, which land on a fold and
on a triple-root cusp.

    python3 scripts/mass_optimization.py --starts 8
"""

from _common import parser, write_json
from ziegler.model import PendulumConfig, ziegler_config
from ziegler.optimize import OptimizeSettings, optimize_masses


def show(label, reports):
    print(label)
    for r in reports:
        masses = ", ".join(f"{m:.6g}" for m in r.masses)
        print(f"  {r.kind.value:<22} p = {r.objective:<12.8g} masses ({masses})")


def main():
    ap = parser(__doc__.splitlines()[0])
    ap.add_argument("--starts", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    a = ap.parse_args()
    opt = OptimizeSettings(seed=a.seed)
    out = {}
    for c1, c2 in ((1.0, 1.0), (2.0, 1.0), (0.5, 2.0)):
        cfg = ziegler_config(c1=c1, c2=c2)
        for sense in ("MIN", "MAX"):
            reps = optimize_masses(cfg, sense=sense, starts=a.starts, opt=opt, jobs=a.jobs)
            show(f"m = 2, c = ({c1:g}, {c2:g}), {sense}", reps)
            out[f"m2_c{c1:g}_{c2:g}_{sense}"] = [r.to_dict() for r in reps]
    base = PendulumConfig(3, 1.0, (10.0, 1.0, 1.0), (1.0, 1.0, 1.0))
    for objective in ("critical", "stable_top"):
        reps = optimize_masses(base, sense="MAX", plane=(2, 3), r=1.0, starts=a.starts, jobs=a.jobs,
                               opt=OptimizeSettings(seed=a.seed, objective=objective))
        show(f"m = 3, m1 = 10, (m2, m3) on r = 1, MAX {objective}", reps)
        out[f"m3_{objective}_MAX"] = [r.to_dict() for r in reps]
    write_json(a.outdir / "mass_optimization.json", out)


if __name__ == "__main__":
    main()
