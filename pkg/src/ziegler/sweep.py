"""Stability diagrams over azimuth-parametrized mass planes.

Two masses ``(m_i, m_j)`` of a base configuration are replaced by
``(r cos(alpha), r sin(alpha))`` and every class change along the load axis is
located for each ``alpha``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .critload import BoundaryTracker, CriticalLoad, SearchSettings, Transition
from .model import PendulumConfig
from .stability import BD, DEFAULT_TOL, LoadScanner, StabilityClass, ToleranceSet, class_of_code

CSV_COLUMNS = ("alpha", "r", "boundary_index", "load_P", "load_p_normalized", "transition", "omega")
HALF_PI = math.pi / 2


def azimuth_pair(alpha: float, r: float = 1.0) -> tuple[float, float]:
    """(r cos a, r sin a) with exact zeros at the ends of [0, pi/2]."""
    if alpha == 0.0:
        return r, 0.0
    if alpha == HALF_PI:
        return 0.0, r
    return r * math.cos(alpha), r * math.sin(alpha)


@dataclass(frozen=True)
class SweepSpec:
    base: PendulumConfig
    plane: tuple[int, int]  # 1-based mass indices (i, j)
    r: float
    alpha_grid: tuple[float, ...]
    load_grid: tuple[float, ...] | None = None  # normalized loads; None scans uniformly

    def __post_init__(self):
        i, j = self.plane
        m = self.base.link_count
        if i == j or not (1 <= i <= m and 1 <= j <= m):
            raise ValueError(f"plane must name two distinct masses in 1..{m}")
        if not self.r > 0:
            raise ValueError("r must be positive")
        a = np.asarray(self.alpha_grid, dtype=float)
        if a.size == 0 or np.any(np.diff(a) <= 0) or a[0] < 0 or a[-1] > HALF_PI:
            raise ValueError("alpha_grid must be strictly increasing within [0, pi/2]")
        object.__setattr__(self, "alpha_grid", tuple(float(x) for x in a))
        if self.load_grid is not None:
            g = np.asarray(self.load_grid, dtype=float)
            if g.size == 0 or np.any(np.diff(g) <= 0) or g[0] < 0:
                raise ValueError("load_grid must be strictly increasing and non-negative")
            object.__setattr__(self, "load_grid", tuple(float(x) for x in g))

    def masses_at(self, alpha: float) -> tuple[float, ...]:
        masses = list(self.base.masses)
        i, j = self.plane
        masses[i - 1], masses[j - 1] = azimuth_pair(alpha, self.r)
        return tuple(masses)

    def config_at(self, alpha: float) -> PendulumConfig:
        return self.base.with_masses(self.masses_at(alpha))

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "plane": list(self.plane),
            "r": self.r,
            "alpha_grid": list(self.alpha_grid),
            "load_grid": None if self.load_grid is None else list(self.load_grid),
        }


def alpha_grid(steps: int, lo: float = 0.0, hi: float = HALF_PI) -> tuple[float, ...]:
    """``steps`` equally spaced angles; the end points are exactly ``lo`` and ``hi``."""
    if steps < 2:
        return (lo,)
    g = [lo + (hi - lo) * k / (steps - 1) for k in range(steps)]
    g[-1] = hi
    return tuple(g)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    boundaries: tuple[CriticalLoad, ...]
    bands: tuple[StabilityClass, ...]  # len(boundaries) + 1 classes, bottom to top
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    settings: SearchSettings
    rows: tuple[SweepRow, ...]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            for k, b in enumerate(row.boundaries):
                w.writerow([
                    f"{row.alpha:.15g}", f"{self.spec.r:.15g}", k,
                    f"{b.value:.12g}", f"{b.normalized:.12g}", b.transition.value,
                    _fmt_omega(b.critical_frequency),
                ])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "settings": _settings_dict(self.settings),
            "columns": list(CSV_COLUMNS),
            "rows": [
                {
                    "alpha": row.alpha,
                    "bands": [c.value for c in row.bands],
                    "boundaries": [b.to_dict() for b in row.boundaries],
                    "error": row.error,
                }
                for row in self.rows
            ],
        }

    def branch(self, index: int):
        """(alpha, p) of the ``index``-th boundary for rows that have one."""
        out = [(row.alpha, row.boundaries[index].normalized) for row in self.rows
               if len(row.boundaries) > index]
        return np.array(out).reshape(-1, 2)


def _fmt_omega(w) -> str:
    if w is None:
        return ""
    if math.isinf(w):
        return "inf"
    return f"{w:.9g}"


def _settings_dict(s: SearchSettings) -> dict:
    return asdict(s)


def sweep_row(spec: SweepSpec, alpha: float, s: SearchSettings) -> SweepRow:
    try:
        tracker = BoundaryTracker(spec.config_at(alpha), s)
        code0 = int(tracker.codes([0.0])[0])
        if spec.load_grid is None:
            found = tracker.boundaries()
        else:
            found = _grid_boundaries(tracker, np.asarray(spec.load_grid))
        records = tuple(_clean(tracker.boundary_record(*f)) for f in found)
        bands = (class_of_code(code0),) + tuple(r.to_class for r in records)
        return SweepRow(float(alpha), records, bands)
    except Exception as exc:  # row failures are recorded, not fatal
        return SweepRow(float(alpha), (), (), f"{type(exc).__name__}: {exc}")


def _clean(b: CriticalLoad) -> CriticalLoad:
    w = b.critical_frequency
    return CriticalLoad(float(b.value), float(b.normalized), b.transition,
                        None if w is None else float(w), b.from_class, b.to_class)


def _grid_boundaries(tracker: BoundaryTracker, grid: np.ndarray):
    codes = tracker.codes(grid)
    out = []
    for idx in np.flatnonzero(codes[1:] != codes[:-1]):
        a = int(codes[idx])
        p_lo, p_hi = tracker.refine(grid[idx], grid[idx + 1], a)
        nxt = grid[idx + 2] if idx + 2 < len(grid) else grid[idx + 1]
        b = tracker.destination(p_hi, nxt)
        out.append((p_lo, p_hi, a, int(codes[idx + 1]) if b == BD else b))
    return out


def _row_job(args):
    spec, alpha, s = args
    return sweep_row(spec, alpha, s)


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("ZIEGLER_JOBS", "1")))
    except ValueError:
        return 1


def sweep_azimuth(spec: SweepSpec, s: SearchSettings = SearchSettings(p_max=25.0),
                  jobs: int | None = None) -> SweepResult:
    """Every class-change load in (0, p_max] for each angle of ``spec.alpha_grid``.

    Rows are independent; with ``jobs > 1`` they run in worker processes and the
    result is identical to serial execution.
    """
    jobs = default_jobs() if jobs is None else jobs
    tasks = [(spec, a, s) for a in spec.alpha_grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_row_job, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_row_job(t) for t in tasks]
    return SweepResult(spec, s, tuple(rows))


def classify_grid(base: PendulumConfig, plane, loads, *, alphas=None, r: float = 1.0,
                  radii=None, alpha: float | None = None,
                  tol: ToleranceSet = DEFAULT_TOL) -> np.ndarray:
    """Raster of class labels, shape ``(len(outer), len(loads))``.

    The outer axis is ``alphas`` at fixed ``r`` or ``radii`` at fixed ``alpha``.
    ``loads`` are normalized (``p = P l / c_m``).
    """
    if (alphas is None) == (radii is None):
        raise ValueError("give exactly one of alphas or radii")
    loads = np.asarray(loads, dtype=float)
    if alphas is not None:
        outer = [(float(a), r) for a in alphas]
    else:
        if alpha is None:
            raise ValueError("radii sweep needs a fixed alpha")
        outer = [(alpha, float(rr)) for rr in radii]
    out = np.empty((len(outer), len(loads)), dtype=object)
    for k, (a, rr) in enumerate(outer):
        spec = SweepSpec(base, tuple(plane), rr, (a,))
        cfg = spec.config_at(a)
        scanner = LoadScanner(cfg, tol)
        out[k] = [c.value for c in scanner.classes(loads * cfg.load_scale)]
    return out


def write_sweep(result: SweepResult, csv_path, json_path=None, manifest: dict | None = None):
    with open(csv_path, "w", newline="") as fh:
        fh.write(result.csv_text())
    if json_path is not None:
        doc = result.to_json_dict()
        if manifest is not None:
            doc["manifest"] = manifest
        with open(json_path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, StabilityClass) or isinstance(o, Transition):
        return o.value
    if isinstance(o, ToleranceSet):
        return asdict(o)
    raise TypeError(f"not serializable: {type(o)}")


def read_sweep_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for r in rows:
        r["alpha"] = float(r["alpha"])
        r["r"] = float(r["r"])
        r["boundary_index"] = int(r["boundary_index"])
        r["load_P"] = float(r["load_P"])
        r["load_p_normalized"] = float(r["load_p_normalized"])
        r["omega"] = None if r["omega"] == "" else float(r["omega"])
    return rows
