"""Cross-checks of every solver against closed forms and independent oracles.

Each check returns a :class:`CheckResult`; ``run_all`` feeds the CLI table
and the acceptance tests. Reference values are computed here from exact
arithmetic or from code paths that share nothing with the solver under test.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.linalg

from .charpoly import char_poly, mu_poly
from .critload import (
    BoundaryTracker,
    SearchSettings,
    Transition,
    critical_load_algebraic,
    critical_load_closed_damped_m2,
    critical_load_numeric,
    critical_loads_closed_undamped_m2,
    ziegler_damped_load,
    zero_damping_limit_m2,
)
from .model import PendulumConfig, assemble, ziegler_config
from .stability import DEFAULT_TOL, StabilityClass, classify, discriminant_sequence

SQRT2 = math.sqrt(2.0)
P_LOW = 3.5 - SQRT2
P_HIGH = 3.5 + SQRT2


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    seconds: float
    budget: float
    detail: dict = field(default_factory=dict)

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d}. {self.title} ({self.seconds:.2f} s / {self.budget:g} s)"


def _timed(number, title, budget, fn) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    within = dt < budget
    detail = {**detail, "within_budget": within}
    return CheckResult(number, title, bool(ok and within), dt, budget, detail)


# ----------------------------------------------------------------------------


def check_ziegler_values():
    cfg = ziegler_config()
    lo_c, hi_c = critical_loads_closed_undamped_m2(cfg)
    first = critical_load_numeric(cfg, SearchSettings(p_max=10.0))
    found = BoundaryTracker(cfg, SearchSettings(p_max=10.0)).boundaries()
    upper = [0.5 * (a + b) for a, b, _, _ in found[1:2]]
    errs = {
        "closed_low": abs(lo_c - P_LOW),
        "closed_high": abs(hi_c - P_HIGH),
        "numeric_low": abs(first.normalized - P_LOW),
        "numeric_high": abs(upper[0] - P_HIGH) if upper else math.inf,
    }
    ok = all(e < 1e-9 for e in errs.values()) and first.transition is Transition.FLUTTER_ONSET
    return ok, errs


def check_absolute_minimum(starts: int = 2):
    from .optimize import OptimizeSettings, optimize_masses

    # p is quadratic in the angle error, so a 1e-6 simplex is ample for these limits
    opt = OptimizeSettings(xatol=1e-6, fatol=1e-10)
    worst_p, worst_angle = 0.0, 0.0
    for c1 in np.linspace(0.2, 5.0, 10):
        for c2 in np.linspace(0.2, 5.0, 10):
            cfg = ziegler_config(c1=float(c1), c2=float(c2))
            best = optimize_masses(cfg, [(0.0, 10.0), (0.0, 10.0)], "MIN", starts=starts, opt=opt, jobs=1)[0]
            m1, m2 = best.masses
            worst_p = max(worst_p, abs(best.objective - 2.0))
            worst_angle = max(worst_angle, abs(math.atan2(m2, m1) - math.atan2(c2, c1)))
    return worst_p < 1e-6 and worst_angle < 1e-4, {"max_abs_p_error": worst_p, "max_angle_error": worst_angle}


def check_local_maximum():
    from .optimize import ExtremumKind, optimize_masses

    errs = {}
    for q in (0.5, 1.0, 2.0):
        target = 2.0 + q / 2.0
        at_zero = critical_load_numeric(ziegler_config(m1=0.0, c1=q), SearchSettings(p_max=10.0)).normalized
        near_zero = critical_load_numeric(ziegler_config(m1=1e-14, c1=q), SearchSettings(p_max=10.0)).normalized
        reps = optimize_masses(ziegler_config(c1=q), [(0.0, 10.0), (0.0, 10.0)], "MAX", starts=4, jobs=1)
        edge = [r.objective for r in reps if r.kind is ExtremumKind.BOUNDARY_MASS_ZERO and r.masses[0] == 0.0]
        errs[f"q={q}"] = max(abs(at_zero - target), abs(near_zero - target),
                             abs(edge[0] - target) if edge else math.inf)
    return all(e < 1e-6 for e in errs.values()), errs


def check_damped_closed_form():
    # the specialised Ziegler formula in exact rationals at d1 = d2 = 1
    d1 = d2 = Fraction(1)
    exact = (4 * d1**2 + 33 * d1 * d2 + 4 * d2**2) / (2 * (6 * d2 + d1) * (d2 + d1)) + d1 * d2 / 2
    cfg = ziegler_config(d1=1.0, d2=1.0)
    numeric = critical_load_numeric(cfg, SearchSettings(p_max=10.0)).value
    general = critical_load_closed_damped_m2(cfg)
    special = ziegler_damped_load(1.0, 1.0)
    detail = {
        "exact": str(exact),
        "numeric_error": abs(numeric - float(exact)),
        "general_vs_special": abs(general - special),
    }
    ok = exact == Fraction(55, 28) and detail["numeric_error"] < 1e-9 and detail["general_vs_special"] < 1e-12
    return ok, detail


def check_destabilization_gap():
    cfg = ziegler_config()
    detail, ok = {}, True
    for beta in (0.1, 1.0, 10.0):
        lim = zero_damping_limit_m2(cfg, beta)
        # tiny damping on the same ray, solved numerically, must approach the limit
        tiny = critical_load_numeric(ziegler_config(d1=beta * 1e-5, d2=1e-5), SearchSettings(p_max=10.0)).value
        gap = P_LOW - lim
        detail[f"beta={beta}"] = {"limit": lim, "gap": gap, "numeric_small_damping": tiny}
        ok &= lim < P_LOW and gap > 0.1
    return ok, detail


def check_cusp():
    from .singular import MassPlaneFamily, find_triple_root_cusp

    fam = MassPlaneFamily(PendulumConfig(3, 1.0, (10.0, 1.0, 1.0), (1.0, 1.0, 1.0)), (2, 3), 1.0)
    pt = find_triple_root_cusp(fam, (0.04, 12.0, -1.35))
    lam = pt.lambda_value[0]
    detail = {
        "alpha_error": abs(pt.location["alpha"] - 0.0403477),
        "P_error": abs(pt.location["P"] - 11.961144),
        "lambda_error": abs(abs(lam.imag) - 1.1635243) + abs(lam.real),
        "jordan_order": pt.jordan_order,
    }
    ok = detail["alpha_error"] < 1e-4 and detail["P_error"] < 1e-4 and detail["lambda_error"] < 1e-4
    return ok and pt.jordan_order == 3, detail


def check_discriminant_identity(n: int = 100, seed: int = 7):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        l = rng.uniform(0.5, 2.0)
        masses = tuple(rng.uniform(0.1, 5.0, 3))
        cfg = PendulumConfig(3, l, masses, tuple(rng.uniform(0.2, 5.0, 3)))
        d1 = discriminant_sequence(mu_poly(cfg, rng.uniform(0.0, 10.0)))[0]
        ref = 3.0 * l**12 * float(np.prod(masses)) ** 2
        worst = max(worst, abs(d1 - ref) / ref)
    return worst < 1e-10, {"max_relative_error": worst}


# oracle for check 8: realness from the discriminant sequence, signs from Descartes


def _oracle_undamped_stable(coeffs) -> tuple[bool, float]:
    """Marginal stability from the discrimination matrix alone.

    All mu roots are real and simple iff every even leading minor is
    positive; a real-rooted polynomial has only negative roots iff its
    coefficients share one sign. Returns the verdict and the smallest minor
    divided by its Hadamard bound (the distance to the boundary).
    """
    a = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    n = len(a) - 1
    if n < 1 or a[-1] == 0:
        return False, 0.0
    # scale mu so the coefficients are balanced
    b = a / a[0]
    s = max(abs(b[i]) ** (1.0 / i) for i in range(1, n + 1))
    b = b / s ** np.arange(n + 1)
    d = b[:-1] * np.arange(n, 0, -1)
    S = np.zeros((2 * n, 2 * n))
    for k in range(n):
        S[2 * k, k:k + n + 1] = b
        S[2 * k + 1, k + 1:k + 1 + n] = d
    dist = math.inf
    positive = True
    for k in range(1, n + 1):
        sub = S[:2 * k, :2 * k]
        bound = float(np.prod(np.linalg.norm(sub, axis=1)))
        val = float(np.linalg.det(sub)) / bound
        dist = min(dist, abs(val))
        positive &= val > 0
    same_sign = bool(np.all(b > 0))
    return positive and same_sign, dist


def _oracle_max_real(cfg: PendulumConfig, load: float) -> tuple[float, float]:
    """Largest Re(lambda) of the first-order pencil, with the spectral radius as scale."""
    t = assemble(cfg, load)
    m = t.size
    I, Z = np.eye(m), np.zeros((m, m))
    A = np.block([[Z, I], [-t.K, -t.D]])
    B = np.block([[I, Z], [Z, t.M]])
    ev = scipy.linalg.eigvals(A, B)
    ev = ev[np.isfinite(ev)]
    return float(np.max(ev.real)), float(np.max(np.abs(ev)))


def check_oracle_equivalence(n: int = 10_000, seed: int = 11, band: float = 1e-9):
    rng = np.random.default_rng(seed)
    disagreements, skipped, compared = [], 0, 0
    for i in range(n):
        damped = i % 2 == 1
        # undamped discriminant witnesses are compared for two and three links
        m = int(rng.integers(2, 5 if damped else 4))
        cfg = PendulumConfig(m, float(rng.uniform(0.5, 2.0)), tuple(rng.uniform(0.05, 5.0, m)),
                             tuple(rng.uniform(0.2, 5.0, m)),
                             tuple(rng.uniform(0.01, 2.0, m)) if damped else ())
        load = float(rng.uniform(0.0, 6.0)) * cfg.load_scale
        rep = classify(cfg, load, DEFAULT_TOL)
        if rep.classification is StabilityClass.BOUNDARY:
            skipped += 1
            continue
        stable = rep.classification.is_stable
        if damped:
            re, scale = _oracle_max_real(cfg, load)
            if abs(re) <= band * max(1.0, scale):
                skipped += 1
                continue
            oracle = re < 0
        else:
            oracle, dist = _oracle_undamped_stable(char_poly(assemble(cfg, load)).coeffs[::2])
            if dist <= band:
                skipped += 1
                continue
        compared += 1
        if oracle != stable:
            disagreements.append({"index": i, "config": cfg.to_dict(), "load": load,
                                  "class": rep.classification.value})
    return not disagreements, {"compared": compared, "skipped_in_band": skipped,
                               "disagreements": disagreements[:5], "n_disagreements": len(disagreements)}


def check_geometry(n: int = 100, seed: int = 3):
    rng = np.random.default_rng(seed)
    s = SearchSettings(p_max=200.0)
    worst_ruled, worst_cone = 0.0, 0.0
    for _ in range(n):
        m1, m2 = rng.uniform(0.1, 5.0, 2)
        c1, c2 = rng.uniform(0.2, 5.0, 2)
        cfg = ziegler_config(m1=m1, m2=m2, c1=c1, c2=c2)
        base = critical_load_algebraic(cfg, s)
        for t in (0.5, 2.0, 10.0):
            scaled_m = critical_load_algebraic(ziegler_config(m1=t * m1, m2=t * m2, c1=c1, c2=c2), s)
            worst_ruled = max(worst_ruled, abs(scaled_m.normalized - base.normalized))
            scaled_c = critical_load_algebraic(ziegler_config(m1=m1, m2=m2, c1=t * c1, c2=t * c2), s)
            worst_cone = max(worst_cone, abs(scaled_c.value - t * base.value) / t)
    return max(worst_ruled, worst_cone) < 1e-9, {"ruled": worst_ruled, "cone": worst_cone}


def reference_sweep(jobs: int = 1):
    from .sweep import SweepSpec, alpha_grid, sweep_azimuth

    spec = SweepSpec(ziegler_config(), (1, 2), 1.0, alpha_grid(400))
    return sweep_azimuth(spec, SearchSettings(p_max=25.0), jobs=jobs)


def check_band_structure(golden: Path | None = None):
    from .sweep import sweep_row

    result = reference_sweep()
    ms, fl, dv = StabilityClass.MARGINALLY_STABLE, StabilityClass.FLUTTER, StabilityClass.DIVERGENCE
    bad = []
    for row in result.rows:
        if row.error:
            bad.append((row.alpha, row.error))
            continue
        expected = [(ms, fl, dv), (ms, fl), (ms,)]
        if row.alpha == math.pi / 2:
            expected = [(ms, dv)]
        if tuple(row.bands) not in expected:
            bad.append((row.alpha, [b.value for b in row.bands]))
    z = sweep_row(result.spec, math.atan2(1.0, 2.0), result.settings)
    z_err = max(abs(z.boundaries[0].normalized - P_LOW), abs(z.boundaries[1].normalized - P_HIGH))
    detail = {"rows": len(result.rows), "bad_rows": bad[:5], "z_error": z_err}
    ok = not bad and z_err < 1e-9
    if golden is not None and golden.exists():
        same = golden.read_text() == result.csv_text()
        detail["golden_match"] = same
        ok &= same
    return ok, detail


CHECKS = (
    (1, "Ziegler classical values 7/2 -+ sqrt 2", 1.0, check_ziegler_values),
    (2, "absolute minimum p = 2 on m1 c2 = m2 c1", 30.0, check_absolute_minimum),
    (3, "local maximum 2 + c1/(2 c2) at m1 = 0", 5.0, check_local_maximum),
    (4, "damped critical load 55/28", 1.0, check_damped_closed_form),
    (5, "zero-damping limits below 7/2 - sqrt 2 by > 0.1", 1.0, check_destabilization_gap),
    (6, "m = 3 triple-root cusp C1", 5.0, check_cusp),
    (7, "discriminant identity 3 l^12 (m1 m2 m3)^2", 1.0, check_discriminant_identity),
    (8, "root vs discriminant / max Re lambda oracles", 60.0, check_oracle_equivalence),
    (9, "ruled-surface and cone invariance", 5.0, check_geometry),
    (10, "two-link azimuthal band structure and golden CSV", 10.0, check_band_structure),
)


def run_check(number: int, **kwargs) -> CheckResult:
    for num, title, budget, fn in CHECKS:
        if num == number:
            return _timed(num, title, budget, lambda: fn(**kwargs))
    raise KeyError(number)


def run_all(golden: Path | None = None) -> list[CheckResult]:
    out = []
    for num, title, budget, fn in CHECKS:
        kwargs = {"golden": golden} if num == 10 else {}
        out.append(_timed(num, title, budget, lambda: fn(**kwargs)))
    return out
