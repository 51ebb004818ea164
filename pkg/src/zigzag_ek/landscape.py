"""Sublevel-set labeling of the minima of V on the torus.

Saddle values sigma_2 > sigma_3 > ... are the distinct values of V on the local
maxima other than the global one. Walking down these levels, every connected
component of ``{V < sigma}`` that holds no previously labeled minimum gets its
lowest minimum labeled, together with the maxima on its boundary. The barrier
``S(m) = sigma(m) - V(m)`` then orders the minima (global minimum first, with
``S = inf``).

Components are open arcs computed exactly from the critical points;
:func:`brute_force_labels` replays the same recursion on a dense grid with a
circular flood fill and is only meant as a test oracle.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import GridTooCoarse, H01Violated, MorseViolation, TieBreakNeeded
from .potential import (
    MAXIMUM,
    MINIMUM,
    MORSE_FLOOR,
    VALUE_TOL,
    CriticalPoint,
    TorusPotential,
    _bisect,
    find_critical_points,
    unique_global_max,
)


class _FictiveSaddle:
    """Stand-in for the saddle at infinite height attached to the global minimum."""

    value = math.inf

    def __repr__(self):
        return "FICTIVE_SADDLE"


FICTIVE_SADDLE = _FictiveSaddle()


@dataclass(frozen=True)
class Arc:
    """Open arc ``(start, start + length)`` of the torus; ``full`` means the whole circle."""

    start: float
    length: float
    full: bool = False

    @property
    def end(self) -> float:
        return (self.start + self.length) % 1.0

    def contains(self, x: float) -> bool:
        if self.full:
            return True
        return 0.0 < (x - self.start) % 1.0 < self.length

    def shifted(self, s: float) -> "Arc":
        return Arc((self.start + s) % 1.0, self.length, self.full)


FULL_TORUS = Arc(0.0, 1.0, full=True)


def _circular_distance(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


@dataclass(frozen=True)
class LabeledMinimum:
    point: CriticalPoint
    rank: int
    component: tuple  # tuple of Arc
    saddle_set: tuple  # tuple of CriticalPoint, empty for the global minimum
    sigma: float
    barrier: float

    @property
    def saddles(self) -> tuple:
        """Saddle set with the fictive saddle made explicit."""
        return self.saddle_set if self.saddle_set else (FICTIVE_SADDLE,)

    @property
    def is_global(self) -> bool:
        return math.isinf(self.barrier)


@dataclass(frozen=True)
class H2Report:
    h01: bool
    unique_minima: bool
    disjoint_saddles: bool
    s_injective: bool
    tie_breaks: tuple = ()

    @property
    def holds(self) -> bool:
        return self.h01 and self.unique_minima and self.disjoint_saddles and self.s_injective


@dataclass(frozen=True)
class Landscape:
    potential: TorusPotential
    minima: tuple  # LabeledMinimum, sorted by rank
    maxima: tuple  # CriticalPoint
    s_max: CriticalPoint
    h2_report: H2Report = field(default=None)

    @property
    def n0(self) -> int:
        return len(self.minima)

    def minimum(self, rank: int) -> LabeledMinimum:
        return self.minima[rank - 1]

    def csv_rows(self):
        """Rows ``(rank, location, V, V'', S, sigma, saddle_locations)``."""
        rows = []
        for m in self.minima:
            if m.saddle_set:
                saddles = ";".join(repr(s.location) for s in m.saddle_set)
            else:
                saddles = "fictive"
            rows.append(
                (m.rank, m.point.location, m.point.value, m.point.second_derivative,
                 m.barrier, m.sigma, saddles)
            )
        return rows

    CSV_HEADER = ("rank", "location", "V", "V2", "S", "sigma", "saddle_locations")


# -- exact arc-based labeling -----------------------------------------------------


def _saddle_levels(maxima, s_max, value_tol):
    values = sorted((s.value for s in maxima if s is not s_max), reverse=True)
    levels = []
    for v in values:
        if not levels or levels[-1] - v > value_tol:
            levels.append(v)
    return levels


def sublevel_components(V: TorusPotential, crit, sigma: float, value_tol: float = VALUE_TOL):
    """Connected components of ``{V < sigma}`` as open arcs.

    Boundary points are critical points lying on the level (tangencies) plus
    the single transversal crossing of every monotone piece that straddles it.
    """
    if math.isinf(sigma):
        return [FULL_TORUS]
    crit = sorted(crit, key=lambda c: c.location)
    boundary = [c.location for c in crit if abs(c.value - sigma) <= value_tol]
    for a, b in zip(crit, crit[1:] + crit[:1]):
        da, db = a.value - sigma, b.value - sigma
        if abs(da) <= value_tol or abs(db) <= value_tol or (da > 0) == (db > 0):
            continue
        lo, hi = a.location, b.location
        if hi <= lo:
            hi += 1.0
        root = _bisect(lambda t: float(V(t)) - sigma, lo, hi, da, 1e-14)
        boundary.append(root % 1.0)
    boundary.sort()
    if not boundary:
        return [FULL_TORUS] if float(V(crit[0].location)) < sigma else []

    arcs = []
    for i, start in enumerate(boundary):
        stop = boundary[(i + 1) % len(boundary)]
        length = (stop - start) % 1.0 or 1.0
        inside = [c for c in crit if 0.0 < (c.location - start) % 1.0 < length]
        probe = min(inside, key=lambda c: c.value).location if inside else start + 0.5 * length
        if float(V(probe)) < sigma:
            arcs.append(Arc(start, length))
    return arcs


def _pick_lowest(candidates, value_tol, where, ties):
    best = min(candidates, key=lambda m: (m.value, m.location))
    twins = [m for m in candidates if m is not best and abs(m.value - best.value) <= value_tol]
    if twins:
        best = min([best] + twins, key=lambda m: m.location)
        msg = f"{where}: {len(twins) + 1} minima share the lowest value {best.value:.12g}"
        warnings.warn(msg, TieBreakNeeded, stacklevel=3)
        ties.append(msg)
    return best


def _rank(labels, value_tol):
    """Sort ``(point, sigma, saddles, arc)`` labels by decreasing barrier."""
    entries = sorted(labels, key=lambda e: (-(e[1] - e[0].value), e[0].location))
    return [
        LabeledMinimum(point=p, rank=i + 1, component=(arc,), saddle_set=tuple(saddles),
                       sigma=sigma, barrier=sigma - p.value)
        for i, (p, sigma, saddles, arc) in enumerate(entries)
    ]


def _global_max(maxima, value_tol, strict):
    s_max = max(maxima, key=lambda s: (s.value, -s.location))
    if not unique_global_max([s.value for s in maxima], value_tol):
        if strict:
            raise H01Violated(f"global maximum value {s_max.value:.12g} is attained more than once")
        s_max = min((s for s in maxima if s_max.value - s.value <= value_tol),
                    key=lambda s: s.location)
    return s_max


def label_minima(
    V: TorusPotential,
    crit=None,
    value_tol: float = VALUE_TOL,
    strict: bool = True,
) -> Landscape:
    """Label the minima of ``V`` and return the ranked :class:`Landscape`.

    With ``strict=False`` a non-unique global maximum is reported in the H2
    report instead of raising :class:`H01Violated`; the leftmost one is used.
    """
    crit = find_critical_points(V) if crit is None else list(crit)
    minima = [c for c in crit if c.kind == MINIMUM]
    maxima = [c for c in crit if c.kind == MAXIMUM]
    s_max = _global_max(maxima, value_tol, strict)
    ties = []

    first = _pick_lowest(minima, value_tol, "torus", ties)
    labels = [(first, math.inf, (), FULL_TORUS)]
    labeled = {first.location}
    for sigma in _saddle_levels(maxima, s_max, value_tol):
        new = []
        for arc in sublevel_components(V, crit, sigma, value_tol):
            inside = [m for m in minima if arc.contains(m.location)]
            if not inside or any(m.location in labeled for m in inside):
                continue
            m = _pick_lowest(inside, value_tol, f"level {sigma:.12g}", ties)
            saddles = [
                s for s in maxima
                if s is not s_max and abs(s.value - sigma) <= value_tol
                and min(_circular_distance(s.location, arc.start),
                        _circular_distance(s.location, arc.end)) < 1e-9
            ]
            if not saddles:
                raise RuntimeError(f"component {arc} at level {sigma} has no boundary saddle")
            new.append((m, sigma, sorted(saddles, key=lambda s: s.location), arc))
        for entry in new:
            labels.append(entry)
            labeled.add(entry[0].location)

    if len(labels) != len(minima):
        raise RuntimeError(f"labeled {len(labels)} of {len(minima)} minima")

    land = Landscape(V, tuple(_rank(labels, value_tol)), tuple(maxima), s_max)
    report = check_h2(land, value_tol)
    report = H2Report(report.h01, report.unique_minima and not ties, report.disjoint_saddles,
                      report.s_injective, tuple(ties))
    return Landscape(V, land.minima, land.maxima, land.s_max, report)


def check_h2(l: Landscape, value_tol: float = VALUE_TOL) -> H2Report:
    """Re-check the four generic-position clauses on a labeled landscape."""
    h01 = unique_global_max([s.value for s in l.maxima], value_tol)
    unique = True
    for m in l.minima:
        arc = m.component[0]
        for other in l.minima:
            if other is m:
                continue
            if arc.contains(other.point.location) and abs(other.point.value - m.point.value) <= value_tol:
                unique = False
    seen = []
    disjoint = True
    for m in l.minima:
        for s in m.saddle_set:
            if any(_circular_distance(s.location, t) < 1e-9 for t in seen):
                disjoint = False
            seen.append(s.location)
    finite = sorted(m.barrier for m in l.minima if not m.is_global)
    injective = all(b - a > value_tol for a, b in zip(finite, finite[1:]))
    return H2Report(h01, unique, disjoint, injective)


# -- grid oracle -------------------------------------------------------------------


def _oracle_critical_points(V: TorusPotential, grid_size: int, morse_floor: float):
    dV = V.derivative_potential(1)
    x = np.arange(grid_size) / grid_size
    d = dV(x)
    if V.is_constant:
        raise MorseViolation("constant potential")
    roots = []
    for i in range(grid_size):
        j = (i + 1) % grid_size
        if d[i] == 0.0:
            roots.append(x[i])
        elif d[j] != 0.0 and (d[i] > 0) != (d[j] > 0):
            roots.append(brentq(lambda t: float(dV(t)), x[i], x[i] + 1.0 / grid_size,
                                xtol=1e-14, rtol=4 * np.finfo(float).eps) % 1.0)
    pts = []
    for r in sorted(roots):
        v2 = float(V.derivative(r, 2))
        if abs(v2) < morse_floor:
            raise MorseViolation(f"degenerate critical point at {r:.12g}")
        pts.append(CriticalPoint(float(r), float(V(r)), v2, MINIMUM if v2 > 0 else MAXIMUM))
    if not pts or len(pts) % 2 or any(a.kind == b.kind for a, b in zip(pts, pts[1:] + pts[:1])):
        raise GridTooCoarse("oracle found inconsistent critical points")
    return pts


def _runs(mask):
    """Maximal circular runs of True as lists of indices."""
    n = len(mask)
    if mask.all():
        return [list(range(n))]
    start = int(np.argmin(mask))  # a False entry
    runs, cur = [], []
    for k in range(1, n + 1):
        i = (start + k) % n
        if mask[i]:
            cur.append(i)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    return runs


def brute_force_labels(
    V: TorusPotential,
    grid_size: int = 10_000,
    value_tol: float = VALUE_TOL,
    morse_floor: float = MORSE_FLOOR,
    strict: bool = True,
) -> Landscape:
    """Recompute the labeling by flood fill on a dense circular grid (test oracle)."""
    if grid_size < 10_000:
        raise ValueError("grid_size must be at least 1e4")
    crit = _oracle_critical_points(V, grid_size, morse_floor)
    minima = [c for c in crit if c.kind == MINIMUM]
    maxima = [c for c in crit if c.kind == MAXIMUM]
    s_max = _global_max(maxima, value_tol, strict)

    # samples: the uniform grid plus every critical point, in circular order
    crit_at = {c.location: c for c in crit}
    xs = np.unique(np.concatenate([np.arange(grid_size) / grid_size, list(crit_at)]))
    vals = V(xs)
    tags = [crit_at.get(float(x)) for x in xs]
    n = len(xs)

    ties = []
    first = _pick_lowest(minima, value_tol, "torus", ties)
    labels = [(first, math.inf, (), FULL_TORUS)]
    labeled = {first.location}
    for sigma in _saddle_levels(maxima, s_max, value_tol):
        new = []
        for run in _runs(vals < sigma - 0.5 * value_tol):
            inside = [tags[i] for i in run if tags[i] is not None and tags[i].kind == MINIMUM]
            if not inside or any(m.location in labeled for m in inside):
                continue
            m = _pick_lowest(inside, value_tol, f"level {sigma:.12g}", ties)
            saddles = []
            # a grid sample sitting next to a sharp saddle can fall just outside the set,
            # so look two samples past each end of the run
            edges = (run[0] - 1, run[0] - 2, run[-1] + 1, run[-1] + 2)
            for i in (e % n for e in edges):
                t = tags[i]
                if (t is not None and t.kind == MAXIMUM and t is not s_max
                        and abs(t.value - sigma) <= value_tol and t not in saddles):
                    saddles.append(t)
            lo, hi = xs[(run[0] - 1) % n], xs[(run[-1] + 1) % n]
            arc = Arc(float(lo), float((hi - lo) % 1.0 or 1.0))
            new.append((m, sigma, sorted(saddles, key=lambda s: s.location), arc))
        for entry in new:
            labels.append(entry)
            labeled.add(entry[0].location)

    land = Landscape(V, tuple(_rank(labels, value_tol)), tuple(maxima), s_max)
    report = check_h2(land, value_tol)
    report = H2Report(report.h01, report.unique_minima and not ties, report.disjoint_saddles,
                      report.s_injective, tuple(ties))
    return Landscape(V, land.minima, land.maxima, land.s_max, report)
