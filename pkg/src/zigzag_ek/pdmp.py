"""Zig-Zag process with refreshment on the torus, simulated exactly by thinning.

The generator is

    L_h = v d/dx - (2/h)(v U')_+ (I - B) - (1/h) alpha (I - pi_v),

so the velocity flips at rate ``(2/h)(v U')_+`` and is redrawn uniformly from
``{+1, -1}`` at rate ``alpha/h``. Proposals come from a homogeneous Poisson
clock with the global bound ``(2/h) sup|U'| + (1/h) sup alpha``; point targets
are detected exactly along each unit-speed flight.

Each replica runs on its own Mersenne Twister stream, seeded from
``SeedSequence([seed, replica])``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .landscape import Landscape
from .potential import TorusPotential

FLIP, REFRESH, GHOST, HIT, TIMEOUT = 0, 1, 2, 3, 4
EVENT_NAMES = {FLIP: "flip", REFRESH: "refresh", GHOST: "ghost", HIT: "hit", TIMEOUT: "timeout"}

_RUNNING = 0


@numba.njit(cache=True)
def _trig_eval(a, b, x):
    """sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x) by the angle-addition recurrence."""
    theta = 2.0 * math.pi * x
    c1 = math.cos(theta)
    s1 = math.sin(theta)
    ck = 1.0
    sk = 0.0
    total = a[0]
    for k in range(1, a.shape[0]):
        ck, sk = ck * c1 - sk * s1, sk * c1 + ck * s1
        total += a[k] * ck + b[k] * sk
    return total


@numba.njit(cache=True)
def _run(x, v, t, ua, ub, aa, ab, h, bound, target, t_max, seed, log, log_len):
    """Advance one trajectory; returns (x, v, t, status, n_events, n_logged)."""
    np.random.seed(seed)
    n_events = 0
    n_log = 0
    if target >= 0.0 and x == target:
        return x, v, t, HIT, n_events, n_log
    while True:
        if bound > 0.0:
            tau = -math.log(1.0 - np.random.random()) / bound
        else:
            tau = math.inf
        if target >= 0.0:
            dist = ((target - x) * v) % 1.0
            if dist <= tau and t + dist <= t_max:
                t += dist
                x = target
                if n_log < log_len:
                    log[n_log, 0] = t
                    log[n_log, 1] = x
                    log[n_log, 2] = v
                    log[n_log, 3] = HIT
                    n_log += 1
                return x, v, t, HIT, n_events, n_log
        if t + tau > t_max:
            x = (x + v * (t_max - t)) % 1.0
            return x, v, t_max, TIMEOUT, n_events, n_log
        t += tau
        x = (x + v * tau) % 1.0
        flip = 2.0 / h * max(v * _trig_eval(ua, ub, x), 0.0)
        refresh = _trig_eval(aa, ab, x) / h
        u = np.random.random() * bound
        if u < flip:
            v = -v
            kind = FLIP
            n_events += 1
        elif u < flip + refresh:
            v = 1.0 if np.random.random() < 0.5 else -1.0
            kind = REFRESH
            n_events += 1
        else:
            kind = GHOST
        if n_log < log_len:
            log[n_log, 0] = t
            log[n_log, 1] = x
            log[n_log, 2] = v
            log[n_log, 3] = kind
            n_log += 1


@numba.njit(cache=True)
def _hitting_times(seeds, x0, v0, ua, ub, aa, ab, h, bound, target, t_max, out, status):
    dummy = np.empty((0, 4))
    for i in range(seeds.shape[0]):
        _, _, t, st, _, _ = _run(x0, v0, 0.0, ua, ub, aa, ab, h, bound, target, t_max, seeds[i], dummy, 0)
        out[i] = t
        status[i] = st


@numba.njit(cache=True)
def _sample_path(x, v, ua, ub, aa, ab, h, bound, dt, burn_in, seed, out):
    """Record x at times burn_in + k dt, k = 0..len(out)-1."""
    np.random.seed(seed)
    t = 0.0
    k = 0
    next_t = burn_in
    n = out.shape[0]
    n_events = 0
    while k < n:
        tau = -math.log(1.0 - np.random.random()) / bound
        while k < n and next_t <= t + tau:
            out[k] = (x + v * (next_t - t)) % 1.0
            k += 1
            next_t = burn_in + k * dt
        t += tau
        x = (x + v * tau) % 1.0
        flip = 2.0 / h * max(v * _trig_eval(ua, ub, x), 0.0)
        refresh = _trig_eval(aa, ab, x) / h
        u = np.random.random() * bound
        if u < flip:
            v = -v
            n_events += 1
        elif u < flip + refresh:
            v = 1.0 if np.random.random() < 0.5 else -1.0
            n_events += 1
    return n_events, t


def replica_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def rate_bound(U: TorusPotential, alpha: TorusPotential, h: float) -> float:
    """Global thinning bound ``(2/h) sup|U'| + (1/h) sup alpha``."""
    return 2.0 / h * U.sup_bound(1) + max(alpha.sup_bound(0), 0.0) / h


def _coeffs(p: TorusPotential, order: int):
    a, b = p.derivative_coefficients(order)
    return np.ascontiguousarray(a, dtype=float), np.ascontiguousarray(b, dtype=float)


@dataclass(frozen=True)
class PdmpState:
    x: float
    v: int
    t: float = 0.0
    time_budget_exceeded: bool = False

    def __post_init__(self):
        if self.v not in (1, -1):
            raise ValueError("velocity must be +1 or -1")
        object.__setattr__(self, "x", float(self.x) % 1.0)


@dataclass(frozen=True)
class PointTarget:
    """Stop predicate ``x == location``, detected exactly along flights."""

    location: float


@dataclass(frozen=True)
class Trajectory:
    state: PdmpState
    n_events: int  # flips and refreshments, ghosts excluded
    events: np.ndarray  # rows (t, x, v, kind); empty unless logging was requested


def simulate_until(
    state: PdmpState,
    U: TorusPotential,
    alpha: TorusPotential,
    h: float,
    stop: PointTarget | None,
    rng_seed: int,
    t_max: float,
    log_capacity: int = 0,
) -> Trajectory:
    """Run one trajectory until ``stop`` is hit or ``t_max`` is reached."""
    if h <= 0 or not math.isfinite(t_max):
        raise ValueError("need h > 0 and a finite t_max")
    ua, ub = _coeffs(U, 1)
    aa, ab = _coeffs(alpha, 0)
    target = -1.0 if stop is None else float(stop.location) % 1.0
    log = np.zeros((log_capacity, 4))
    x, v, t, status, n_events, n_log = _run(
        state.x, float(state.v), state.t, ua, ub, aa, ab, float(h),
        rate_bound(U, alpha, h), target, float(t_max), int(rng_seed) & 0xFFFFFFFF, log, log_capacity,
    )
    final = PdmpState(x, int(v), t, status == TIMEOUT)
    return Trajectory(final, int(n_events), log[:n_log])


def sample_positions(
    U: TorusPotential,
    alpha: TorusPotential,
    h: float,
    n_samples: int,
    dt: float,
    rng_seed: int,
    burn_in: float = 0.0,
    start: PdmpState = PdmpState(0.0, 1),
) -> np.ndarray:
    """Positions recorded on the regular time grid ``burn_in + k dt``."""
    out = np.empty(n_samples)
    ua, ub = _coeffs(U, 1)
    aa, ab = _coeffs(alpha, 0)
    bound = rate_bound(U, alpha, h)
    if bound <= 0:
        raise ValueError("sampling needs a nonzero event rate")
    _sample_path(start.x, float(start.v), ua, ub, aa, ab, float(h), bound, float(dt), float(burn_in),
                 int(rng_seed) & 0xFFFFFFFF, out)
    return out


@dataclass(frozen=True)
class HittingStats:
    target: float
    start: tuple
    replicas: int
    mean: float
    std_error: float
    h: float
    excluded: int = 0
    lambda2_used: float = float("nan")
    seed: int = 0

    @property
    def product(self) -> float:
        """``h * lambda2 * mean``."""
        return self.h * self.lambda2_used * self.mean

    @property
    def rate_product(self) -> float:
        """``lambda2 * mean / h``: lambda2 / h is the matching eigenvalue of -L_h."""
        return self.lambda2_used * self.mean / self.h

    CSV_HEADER = ("h", "replicas", "mean", "std_error", "lambda2_used", "product", "rate_product",
                  "excluded", "seed")

    def csv_row(self):
        return (self.h, self.replicas, self.mean, self.std_error, self.lambda2_used, self.product,
                self.rate_product, self.excluded, self.seed)


def hitting_times(
    U: TorusPotential,
    alpha: TorusPotential,
    h: float,
    start: PdmpState,
    target: float,
    replicas: int,
    rng_seed: int,
    t_max: float = 1e9,
):
    """Raw hitting times and a mask of replicas that ran out of time."""
    ua, ub = _coeffs(U, 1)
    aa, ab = _coeffs(alpha, 0)
    seeds = np.array([replica_seed(rng_seed, i) for i in range(replicas)], dtype=np.int64)
    out = np.empty(replicas)
    status = np.empty(replicas, dtype=np.int64)
    _hitting_times(seeds, start.x, float(start.v), ua, ub, aa, ab, float(h),
                   rate_bound(U, alpha, h), float(target) % 1.0, float(t_max), out, status)
    return out, status == TIMEOUT


def hitting_time_tau(
    U: TorusPotential,
    alpha: TorusPotential,
    h: float,
    landscape: Landscape,
    replicas: int,
    rng_seed: int,
    lambda2: float = float("nan"),
    t_max: float = 1e9,
) -> HittingStats:
    """Time to reach m_2 from (s_2, -1), where ``landscape`` labels V = -U."""
    if landscape.n0 < 2:
        raise ValueError("hitting experiment needs at least two minima")
    m2 = landscape.minimum(2)
    s2 = m2.saddle_set[0].location
    start = PdmpState(s2, -1)
    times, timed_out = hitting_times(U, alpha, h, start, m2.point.location, replicas, rng_seed, t_max)
    kept = times[~timed_out]
    k = kept.size
    mean = float(kept.mean()) if k else float("nan")
    se = float(kept.std(ddof=1) / math.sqrt(k)) if k > 1 else float("nan")
    return HittingStats(m2.point.location, (s2, -1), replicas, mean, se, float(h),
                        int(timed_out.sum()), float(lambda2), int(rng_seed))
