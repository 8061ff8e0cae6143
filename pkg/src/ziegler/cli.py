"""Command-line front end: ``ziegler <subcommand> ...``.

Every subcommand writes JSON (or CSV for ``sweep`` and ``grid``) to ``--out``
or stdout. Files written with ``--out`` get a ``<out>.manifest.json`` sidecar
carrying the run manifest including wall time; JSON outputs also embed the
manifest without wall time so identical runs give identical bytes.

Exit codes: 0 success, 1 a ``verify`` check failed, 2 bad configuration or
arguments, 3 numeric failure, 4 I/O error. Errors are printed to stderr as a
single JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .critload import (SearchSettings, critical_load_algebraic, critical_load_numeric,
                       critical_loads_closed_undamped_m2)
from .errors import ConfigError, NumericError
from .model import PendulumConfig, load_config
from .stability import ToleranceSet, classify
from .sweep import SweepSpec, alpha_grid, classify_grid, default_jobs, sweep_azimuth

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    """Provenance of one CLI invocation."""

    subcommand: str
    config_path: str | None
    overrides: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    seed: int | None = None
    version: str = field(default_factory=tool_version)
    wall_time: float | None = None

    def embedded(self) -> dict:
        """Manifest without wall time, safe to embed in reproducible outputs."""
        d = asdict(self)
        d.pop("wall_time")
        return d


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (np.floating, np.integer, np.bool_)):
            return o.item()
        if isinstance(o, complex):
            return {"re": o.real, "im": o.imag}
        if hasattr(o, "value"):
            return o.value
        return super().default(o)


def _finite(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _finite(float(obj))
    return obj


def dumps(doc) -> str:
    return json.dumps(_finite(doc), cls=_Encoder, indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------------------
# argument helpers


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _plane(text: str) -> tuple[int, int]:
    try:
        i, j = (int(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected two link indices like 1,2, got {text!r}") from exc
    return i, j


def _add_config(p, required=True):
    p.add_argument("--config", required=required, help="pendulum configuration JSON")
    p.add_argument("--masses", type=_float_list, help="override masses, comma-separated")
    p.add_argument("--stiffnesses", type=_float_list, help="override joint stiffnesses")
    p.add_argument("--dampings", type=_float_list, help="override joint dampings")
    p.add_argument("--length", type=float, help="override link length")


def _add_tolerances(p):
    t = ToleranceSet()
    g = p.add_argument_group("tolerances")
    g.add_argument("--boundary-band", type=float, default=t.boundary_band,
                   help="relative band around zero of the deciding quantities")
    g.add_argument("--imag-tol", type=float, default=t.imag_tol, help="relative tolerance for real roots")
    g.add_argument("--cluster-radius", type=float, default=t.cluster_radius,
                   help="relative radius for coincident roots")
    g.add_argument("--deflation-tol", type=float, default=t.deflation_tol,
                   help="relative size below which leading coefficients are dropped")


def _add_search(p, p_max):
    s = SearchSettings()
    g = p.add_argument_group("load search")
    g.add_argument("--p-max", type=float, default=p_max, help="largest normalized load p = P l / c_m scanned")
    g.add_argument("--scan-step", type=float, default=s.scan_step, help="normalized scan step")
    g.add_argument("--bisect-tol", type=float, default=s.bisect_tol, help="bisection tolerance on p")


def _add_out(p):
    p.add_argument("--out", help="output file (stdout when omitted)")


def _add_jobs(p):
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                   help="worker processes (default: $ZIEGLER_JOBS or 1)")


def _tolerances(a) -> ToleranceSet:
    return ToleranceSet(a.boundary_band, a.imag_tol, a.cluster_radius, a.deflation_tol)


def _search(a) -> SearchSettings:
    try:
        return SearchSettings(p_max=a.p_max, scan_step=a.scan_step, bisect_tol=a.bisect_tol, tol=_tolerances(a))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _config(a, manifest: RunManifest) -> PendulumConfig:
    cfg = load_config(a.config)
    d = cfg.to_dict()
    for key, name in (("masses", "masses"), ("stiffnesses", "stiffnesses"),
                      ("dampings", "dampings"), ("length", "link_length")):
        v = getattr(a, key, None)
        if v is not None:
            d[name] = list(v) if isinstance(v, tuple) else v
            manifest.overrides[name] = d[name]
    return PendulumConfig.from_dict(d)


def _jobs(a) -> int:
    jobs = getattr(a, "jobs", None)
    return jobs if jobs is not None else default_jobs()


# ----------------------------------------------------------------------------
# subcommands; each returns (payload, is_csv, extra exit code)


def _cmd_classify(a, cfg, manifest):
    rep = classify(cfg, cfg.denormalize(a.p) if a.normalized else a.load, _tolerances(a))
    doc = rep.to_dict()
    doc["load_p_normalized"] = cfg.normalize(rep.load)
    return doc


def _cmd_critical(a, cfg, manifest):
    s = _search(a)
    if a.method == "numeric":
        res = critical_load_numeric(cfg, s)
    else:
        res = critical_load_algebraic(cfg, s)
    doc = {"critical_load": res.to_dict(), "method": a.method}
    if cfg.link_count == 2 and not cfg.is_damped:
        lo, hi = critical_loads_closed_undamped_m2(cfg)
        doc["closed_form"] = {"flutter_p": lo, "divergence_p": hi}
    return doc


def _sweep_spec(a, cfg):
    try:
        grid = alpha_grid(a.alpha_steps, a.alpha_min, a.alpha_max)
        return SweepSpec(cfg, a.plane, a.r, grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_sweep(a, cfg, manifest):
    result = sweep_azimuth(_sweep_spec(a, cfg), _search(a), jobs=_jobs(a))
    return result.csv_text()


def _cmd_grid(a, cfg, manifest):
    loads = np.linspace(a.p_min, a.p_max, a.load_steps)
    tol = _tolerances(a)
    try:
        if a.radii is None:
            outer = alpha_grid(a.alpha_steps, a.alpha_min, a.alpha_max)
            raster = classify_grid(cfg, a.plane, loads, alphas=outer, r=a.r, tol=tol)
            label = "alpha"
        else:
            outer = a.radii
            raster = classify_grid(cfg, a.plane, loads, radii=outer, alpha=a.alpha, tol=tol)
            label = "r"
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([label, "load_p_normalized", "class"])
    for o, row in zip(outer, raster):
        for p, c in zip(loads, row):
            w.writerow([f"{o:.15g}", f"{p:.15g}", c])
    return buf.getvalue()


def _cmd_singular(a, cfg, manifest):
    from . import singular as sg

    if a.kind == "umbrella":
        return {"points": [sg.certify_umbrella_apex_m2(cfg, n_rays=a.rays).to_dict()]}
    if a.kind == "cusp":
        fam = sg.MassPlaneFamily(cfg, a.plane, a.r)
        if a.guess is not None:
            if len(a.guess) != 3:
                raise ConfigError("--guess needs alpha,P,mu")
            pts = [sg.find_triple_root_cusp(fam, a.guess)]
        else:
            grid = alpha_grid(a.alpha_steps, a.alpha_min, a.alpha_max)
            pts = sg.find_cusps(fam, grid, (0.0, cfg.denormalize(a.p_max)))
        return {"points": [p.to_dict() for p in pts]}
    result = sweep_azimuth(_sweep_spec(a, cfg), _search(a), jobs=_jobs(a))
    return {"points": [p.to_dict() for p in sg.find_vertical_tangent(result)]}


def _cmd_optimize(a, cfg, manifest):
    from .optimize import OptimizeSettings, optimize_masses

    bounds = None
    if a.bounds is not None:
        if len(a.bounds) != 2 * cfg.link_count:
            raise ConfigError(f"--bounds needs {2 * cfg.link_count} numbers lo1,hi1,lo2,hi2,...")
        bounds = [(a.bounds[2 * i], a.bounds[2 * i + 1]) for i in range(cfg.link_count)]
    manifest.seed = a.seed
    try:
        opt = OptimizeSettings(starts=a.starts, seed=a.seed, objective=a.objective)
        reports = optimize_masses(cfg, bounds, a.sense, s=_search(a), opt=opt,
                                  plane=a.plane, r=a.r if a.plane else None, jobs=_jobs(a))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return {"extrema": [r.to_dict() for r in reports]}


def _cmd_verify(a, cfg, manifest):
    from .verify import CHECKS, run_all, run_check

    golden = Path(a.golden) if a.golden else None
    numbers = a.only or [c[0] for c in CHECKS]
    results = (run_all(golden) if not a.only else
               [run_check(n, **({"golden": golden} if n == 10 else {})) for n in numbers])
    for r in results:
        print(r.line, file=sys.stderr)
    return {"checks": [{"number": r.number, "title": r.title, "passed": r.passed,
                        "budget_s": r.budget, "detail": r.detail} for r in results],
            "all_passed": all(r.passed for r in results)}


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="ziegler", formatter_class=fmt,
                                     description="Stability analysis of m-link follower-force pendulums.")
    parser.add_argument("--version", action="version", version=tool_version())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", formatter_class=fmt, help="classify one load")
    _add_config(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--load", type=float, help="follower load P")
    g.add_argument("--p", type=float, help="normalized load p = P l / c_m")
    _add_tolerances(p)
    _add_out(p)
    p.set_defaults(func=_cmd_classify, csv=False)

    p = sub.add_parser("critical-load", formatter_class=fmt, help="first load at which stability is lost")
    _add_config(p)
    p.add_argument("--method", choices=("numeric", "algebraic"), default="numeric",
                   help="scan-and-bisect, or roots of the boundary polynomials")
    _add_search(p, 1e3)
    _add_tolerances(p)
    _add_out(p)
    p.set_defaults(func=_cmd_critical, csv=False)

    def azimuth(p, steps):
        p.add_argument("--plane", type=_plane, default=(1, 2), help="1-based link indices i,j of the mass plane")
        p.add_argument("--r", type=float, default=1.0, help="radius in the mass plane")
        p.add_argument("--alpha-steps", type=int, default=steps, help="number of azimuth samples")
        p.add_argument("--alpha-min", type=float, default=0.0, help="first azimuth")
        p.add_argument("--alpha-max", type=float, default=math.pi / 2, help="last azimuth")

    p = sub.add_parser("sweep", formatter_class=fmt, help="boundary loads along an azimuth sweep (CSV)")
    _add_config(p)
    azimuth(p, 400)
    _add_search(p, 25.0)
    _add_tolerances(p)
    _add_jobs(p)
    _add_out(p)
    p.set_defaults(func=_cmd_sweep, csv=True)

    p = sub.add_parser("grid", formatter_class=fmt, help="class raster over azimuth or radius and load (CSV)")
    _add_config(p)
    azimuth(p, 100)
    p.add_argument("--radii", type=_float_list, help="sweep these radii at fixed --alpha instead of azimuths")
    p.add_argument("--alpha", type=float, default=math.pi / 4, help="fixed azimuth for --radii")
    p.add_argument("--p-min", type=float, default=0.0, help="smallest normalized load")
    p.add_argument("--p-max", type=float, default=25.0, help="largest normalized load")
    p.add_argument("--load-steps", type=int, default=251, help="number of loads")
    _add_tolerances(p)
    _add_out(p)
    p.set_defaults(func=_cmd_grid, csv=True)

    p = sub.add_parser("singular", formatter_class=fmt, help="cusps, vertical tangents, umbrella apex")
    _add_config(p)
    p.add_argument("--kind", choices=("cusp", "tangent", "umbrella"), default="cusp", help="what to locate")
    azimuth(p, 200)
    p.add_argument("--guess", type=_float_list, help="alpha,P,mu start for a single cusp Newton solve")
    p.add_argument("--rays", type=int, default=2001, help="mass rays sampled for the umbrella certificate")
    _add_search(p, 25.0)
    _add_tolerances(p)
    _add_jobs(p)
    _add_out(p)
    p.set_defaults(func=_cmd_singular, csv=False)

    p = sub.add_parser("optimize", formatter_class=fmt, help="extrema of the critical load over masses")
    _add_config(p)
    p.add_argument("--sense", choices=("MIN", "MAX"), default="MIN", help="minimize or maximize")
    p.add_argument("--objective", choices=("critical", "stable_top"), default="critical",
                   help="first loss of stability, or the highest stable load")
    p.add_argument("--bounds", type=_float_list, help="lo1,hi1,lo2,hi2,... mass box (default 0..10)")
    p.add_argument("--plane", type=_plane, help="restrict to a mass plane i,j at radius --r")
    p.add_argument("--r", type=float, default=1.0, help="radius in the mass plane")
    p.add_argument("--starts", type=int, default=32, help="low-discrepancy starts")
    p.add_argument("--seed", type=int, default=0, help="seed of the scrambled Sobol starts")
    _add_search(p, 50.0)
    _add_tolerances(p)
    _add_jobs(p)
    _add_out(p)
    p.set_defaults(func=_cmd_optimize, csv=False)

    p = sub.add_parser("verify", formatter_class=fmt, help="run the closed-form cross-check suite")
    p.add_argument("--only", type=int, nargs="+", help="check numbers to run")
    p.add_argument("--golden", help="golden sweep CSV for the band-structure check")
    _add_out(p)
    p.set_defaults(func=_cmd_verify, csv=False, config=None)
    return parser


def _error(kind: str, exc: BaseException, code: int) -> int:
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def _write(path: str, text: str):
    Path(path).write_text(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    if getattr(a, "normalized", None) is None and a.command == "classify":
        a.normalized = a.p is not None
    manifest = RunManifest(a.command, getattr(a, "config", None))
    t0 = time.perf_counter()
    try:
        cfg = _config(a, manifest) if a.config else None
        payload = a.func(a, cfg, manifest)
        if a.out:
            manifest.outputs.append(a.out)
        if not a.csv:
            payload = {**payload, "manifest": manifest.embedded()}
            text = dumps(payload)
        else:
            text = payload
        if a.out:
            _write(a.out, text)
            manifest.wall_time = time.perf_counter() - t0
            _write(a.out + ".manifest.json", dumps(asdict(manifest)))
        else:
            sys.stdout.write(text)
    except (ConfigError, json.JSONDecodeError) as exc:
        return _error("config", exc, EXIT_CONFIG)
    except NumericError as exc:
        return _error("numeric", exc, EXIT_NUMERIC)
    except OSError as exc:
        return _error("io", exc, EXIT_IO)
    if a.command == "verify" and not payload["all_passed"]:
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
