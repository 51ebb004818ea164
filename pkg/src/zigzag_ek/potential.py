"""Trigonometric potentials on the unit torus and their critical points.

A :class:`TorusPotential` is a finite Fourier series

    p(x) = sum_k c_k cos(2 pi k x) + sum_{k>=1} s_k sin(2 pi k x),

so every derivative is available in closed form and the function is exactly
1-periodic. The same type carries the potential ``U``, its negative ``V = -U``,
the refreshment rate ``alpha`` and the weight ``W``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import GridTooCoarse, MorseViolation

ROOT_TOL = 1e-12
MORSE_FLOOR = 1e-8
ALPHA_FLOOR = 1e-12
VALUE_TOL = 1e-10

MINIMUM = "minimum"
MAXIMUM = "maximum"


def _as_tuple(values) -> tuple:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class TorusPotential:
    """Real trigonometric polynomial on the torus R/Z.

    ``cos[k]`` multiplies ``cos(2 pi k x)`` for ``k >= 0``; ``sin[k-1]``
    multiplies ``sin(2 pi k x)`` for ``k >= 1``.
    """

    cos: tuple = (0.0,)
    sin: tuple = ()

    def __post_init__(self):
        c = _as_tuple(self.cos) if len(self.cos) else (0.0,)
        s = _as_tuple(self.sin) if len(self.sin) else ()
        if not all(np.isfinite(c)) or not all(np.isfinite(s)):
            raise ValueError("potential coefficients must be finite")
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, value: float) -> "TorusPotential":
        return cls(cos=(value,))

    @classmethod
    def from_mapping(cls, data: Mapping) -> "TorusPotential":
        """Build from a ``{"cos": [...], "sin": [...]}`` mapping (config block)."""
        unknown = set(data) - {"cos", "sin", "role"}
        if unknown:
            raise ValueError(f"unknown potential keys: {sorted(unknown)}")
        return cls(cos=tuple(data.get("cos", (0.0,))), sin=tuple(data.get("sin", ())))

    def to_config_block(self) -> str:
        cos = ", ".join(repr(c) for c in self.cos)
        sin = ", ".join(repr(s) for s in self.sin)
        return f"cos = [{cos}]\nsin = [{sin}]\n"

    # -- algebra ----------------------------------------------------------------

    @property
    def degree(self) -> int:
        """Highest Fourier mode with a nonzero coefficient (0 for constants)."""
        deg = 0
        for k, c in enumerate(self.cos):
            if c != 0.0:
                deg = max(deg, k)
        for k, s in enumerate(self.sin, start=1):
            if s != 0.0:
                deg = max(deg, k)
        return deg

    @property
    def is_constant(self) -> bool:
        return self.degree == 0

    def _padded(self):
        K = max(len(self.cos) - 1, len(self.sin))
        a = np.zeros(K + 1)
        b = np.zeros(K + 1)
        a[: len(self.cos)] = self.cos
        b[1 : len(self.sin) + 1] = self.sin
        return a, b

    def _from_padded(self, a, b) -> "TorusPotential":
        return TorusPotential(cos=tuple(a), sin=tuple(b[1:]))

    def __neg__(self) -> "TorusPotential":
        a, b = self._padded()
        return self._from_padded(-a, -b)

    def __add__(self, other) -> "TorusPotential":
        if isinstance(other, TorusPotential):
            a1, b1 = self._padded()
            a2, b2 = other._padded()
            K = max(len(a1), len(a2))
            a = np.zeros(K)
            b = np.zeros(K)
            a[: len(a1)] += a1
            a[: len(a2)] += a2
            b[: len(b1)] += b1
            b[: len(b2)] += b2
            return self._from_padded(a, b)
        a, b = self._padded()
        a[0] += float(other)
        return self._from_padded(a, b)

    __radd__ = __add__

    def __mul__(self, scale: float) -> "TorusPotential":
        a, b = self._padded()
        return self._from_padded(float(scale) * a, float(scale) * b)

    __rmul__ = __mul__

    def shifted(self, s: float) -> "TorusPotential":
        """Return ``x -> p(x - s)``."""
        a, b = self._padded()
        theta = 2 * np.pi * np.arange(len(a)) * s
        c, sn = np.cos(theta), np.sin(theta)
        return self._from_padded(a * c - b * sn, a * sn + b * c)

    def derivative_coefficients(self, order: int = 1):
        """Cosine/sine coefficient arrays (index k = 0..K) of the order-th derivative."""
        a, b = self._padded()
        if order == 0:
            return a, b
        w = (2 * np.pi * np.arange(len(a))) ** order
        r = order % 4
        if r == 0:
            da, db = a, b
        elif r == 1:
            da, db = b, -a
        elif r == 2:
            da, db = -a, -b
        else:
            da, db = -b, a
        da = w * da
        db = w * db
        da[0] = 0.0
        db[0] = 0.0
        return da, db

    def derivative_potential(self, order: int = 1) -> "TorusPotential":
        return self._from_padded(*self.derivative_coefficients(order))

    # -- evaluation ---------------------------------------------------------------

    def derivative(self, x, order: int = 1):
        """Evaluate the order-th derivative at ``x`` (scalar or array)."""
        a, b = self.derivative_coefficients(order)
        xs = np.asarray(x, dtype=float)
        phase = 2 * np.pi * np.multiply.outer(xs, np.arange(len(a)))
        out = np.cos(phase) @ a + np.sin(phase) @ b
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, x):
        return self.derivative(x, 0)

    def sup_bound(self, order: int = 0, grid_size: int = 4096) -> float:
        """Upper bound for ``max |p^(order)|`` over the torus.

        Grid maximum plus the Lipschitz slack from the next derivative's
        coefficient bound, so the result is a true bound, not an estimate.
        """
        x = np.arange(grid_size) / grid_size
        grid_max = float(np.max(np.abs(self.derivative(x, order))))
        a, b = self.derivative_coefficients(order + 1)
        lipschitz = float(np.sum(np.hypot(a, b)))
        return grid_max + lipschitz / (2 * grid_size)


def eval_derivatives(p: TorusPotential, x: float, max_order: int = 2) -> list:
    """Return ``[p(x), p'(x), ..., p^(max_order)(x)]``."""
    if not 0 <= max_order <= 4:
        raise ValueError("max_order must be between 0 and 4")
    return [float(p.derivative(x, k)) for k in range(max_order + 1)]


@dataclass(frozen=True)
class CriticalPoint:
    location: float
    value: float
    second_derivative: float
    kind: str

    @property
    def is_minimum(self) -> bool:
        return self.kind == MINIMUM


def default_grid_size(p: TorusPotential) -> int:
    return max(1024, 16 * p.degree)


def _bisect(f, lo: float, hi: float, flo: float, tol: float) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_critical_points(
    p: TorusPotential,
    grid_size: int | None = None,
    root_tol: float = ROOT_TOL,
    morse_floor: float = MORSE_FLOOR,
) -> list:
    """Locate and classify all critical points of ``p`` on [0, 1).

    Roots of ``p'`` are bracketed by sign changes on a uniform grid and
    refined by bisection. Raises :class:`MorseViolation` for degenerate
    critical points (including tangential zeros of ``p'`` that bracketing
    cannot see) and :class:`GridTooCoarse` when minima and maxima fail to
    alternate.
    """
    if p.is_constant:
        raise MorseViolation("constant potential has no isolated critical points")
    n = default_grid_size(p) if grid_size is None else int(grid_size)
    if n < 8 * p.degree:
        raise ValueError(f"grid_size={n} is below 8 x degree ({p.degree})")

    dp = p.derivative_potential(1)
    d2p = p.derivative_potential(2)
    x = np.arange(n) / n
    d = dp(x)
    scale = float(np.max(np.abs(d)))

    def f(t):
        return float(dp(t))

    roots = []
    bracketed = np.zeros(n, dtype=bool)
    for i in range(n):
        j = (i + 1) % n
        lo = x[i]
        hi = x[i] + 1.0 / n
        if d[i] == 0.0:
            roots.append(lo)
            bracketed[i] = True
        elif d[j] != 0.0 and (d[i] > 0) != (d[j] > 0):
            roots.append(_bisect(f, lo, hi, d[i], root_tol) % 1.0)
            bracketed[i] = bracketed[j] = True

    # Tangential zeros of p' (double roots) produce no sign change.
    absd = np.abs(d)
    for i in range(n):
        if bracketed[i] or bracketed[i - 1] or bracketed[(i + 1) % n]:
            continue
        if absd[i] > absd[i - 1] or absd[i] > absd[(i + 1) % n]:
            continue
        lo, hi = x[i] - 1.0 / n, x[i] + 1.0 / n
        g_lo, g_hi = float(d2p(lo)), float(d2p(hi))
        if g_lo == 0.0:
            t = lo
        elif g_hi == 0.0:
            t = hi
        elif (g_lo > 0) != (g_hi > 0):
            t = _bisect(lambda s: float(d2p(s)), lo, hi, g_lo, root_tol)
        else:
            continue
        if abs(f(t)) <= morse_floor * max(1.0, scale):
            raise MorseViolation(f"degenerate critical point near x = {t % 1.0:.12g}")

    points = []
    for r in sorted(set(roots)):
        second = float(d2p(r))
        if abs(second) < morse_floor:
            raise MorseViolation(
                f"critical point at x = {r:.12g} has |p''| = {abs(second):.3g} < {morse_floor:g}"
            )
        kind = MINIMUM if second > 0 else MAXIMUM
        points.append(CriticalPoint(float(r), float(p(r)), second, kind))

    if not points or len(points) % 2:
        raise GridTooCoarse(f"found {len(points)} critical points; expected an even, nonzero count")
    for a, b in zip(points, points[1:] + points[:1]):
        if a.kind == b.kind:
            raise GridTooCoarse(
                f"adjacent critical points at {a.location:.6g} and {b.location:.6g} are both {a.kind}"
            )
    return points


@dataclass(frozen=True)
class AssumptionReport:
    """Which standing hypotheses hold for a pair (U, alpha)."""

    h1: bool
    h1_alpha0: bool
    mixed: bool
    h01: bool
    alpha_nonnegative: bool
    alpha_at_critical: tuple = field(default=())

    def as_rows(self):
        return [
            ("H1", self.h1),
            ("H1_alpha0", self.h1_alpha0),
            ("mixed", self.mixed),
            ("H01", self.h01),
            ("alpha_nonnegative", self.alpha_nonnegative),
        ]


def unique_global_max(values: Sequence[float], value_tol: float = VALUE_TOL) -> bool:
    ordered = sorted(values, reverse=True)
    return len(ordered) < 2 or ordered[0] - ordered[1] >= value_tol


def check_assumptions(
    U: TorusPotential,
    alpha: TorusPotential,
    alpha_floor: float = ALPHA_FLOOR,
    value_tol: float = VALUE_TOL,
) -> AssumptionReport:
    """Evaluate the refreshment hypotheses and H01 (for ``V = -U``)."""
    crit = find_critical_points(U)
    a = np.array([alpha(c.location) for c in crit])
    h1 = bool(np.all(a > alpha_floor))
    h1_alpha0 = bool(np.all(a <= alpha_floor))
    # maxima of V = -U are the minima of U
    v_max_values = [-c.value for c in crit if c.is_minimum]
    grid = np.arange(8 * default_grid_size(alpha)) / (8 * default_grid_size(alpha))
    return AssumptionReport(
        h1=h1,
        h1_alpha0=h1_alpha0,
        mixed=not (h1 or h1_alpha0),
        h01=unique_global_max(v_max_values, value_tol),
        alpha_nonnegative=bool(np.min(alpha(grid)) >= -alpha_floor),
        alpha_at_critical=tuple(float(v) for v in a),
    )


CANONICAL_V = TorusPotential(cos=(0.0, 0.0375, 0.25), sin=(0.075,))
"""V(x) = 0.25 (cos 4 pi x + 0.3 sin 2 pi x + 0.15 cos 2 pi x), the tilted double well."""
