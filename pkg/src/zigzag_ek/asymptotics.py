"""Leading-order Eyring-Kramers predictors for the small eigenvalues.

For a minimum ``m`` with finite barrier ``S`` and saddle set ``j(m)``:

* Witten:      mu   ~ a0   * h       * exp(-2S/h),  a0 = (1/2pi) sum sqrt|V''(m) V''(s)|
* refreshed:   lam  ~ zeta0 * h      * exp(-2S/h),  zeta0 = a0 / alpha(m)
* unrefreshed: lam  ~ zeta0 * sqrt(h) * exp(-2S/h), zeta0 = (1/4) sum sqrt(|V''(s)| / pi)

The unified estimate ``mu / gamma`` with ``gamma = alpha(m) + 2 sqrt(h V''(m)/pi)``
interpolates between the last two.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import AlphaVanishes, FictiveSaddle, MixedRegimeWarning
from .landscape import Landscape, LabeledMinimum
from .potential import ALPHA_FLOOR, TorusPotential

REFRESHED = "refreshed"
UNREFRESHED = "unrefreshed"
WITTEN = "witten"


def _require_saddles(m: LabeledMinimum):
    if not m.saddle_set:
        raise FictiveSaddle(f"minimum of rank {m.rank} carries the fictive saddle (S = inf)")


def witten_prefactor(m: LabeledMinimum) -> float:
    _require_saddles(m)
    vm = m.point.second_derivative
    return sum(math.sqrt(abs(vm * s.second_derivative)) for s in m.saddle_set) / (2 * math.pi)


def refreshed_prefactor(m: LabeledMinimum, alpha: TorusPotential, alpha_floor: float = ALPHA_FLOOR) -> float:
    a = float(alpha(m.point.location))
    if a <= alpha_floor:
        raise AlphaVanishes(f"alpha({m.point.location:.6g}) = {a:.3g} is not positive")
    return witten_prefactor(m) / a


def unrefreshed_prefactor(m: LabeledMinimum) -> float:
    _require_saddles(m)
    return 0.25 * sum(math.sqrt(abs(s.second_derivative) / math.pi) for s in m.saddle_set)


def gamma_leading(m: LabeledMinimum, alpha: TorusPotential, h: float) -> float:
    if h <= 0:
        raise ValueError("h must be positive")
    return float(alpha(m.point.location)) + 2 * math.sqrt(h * m.point.second_derivative / math.pi)


@dataclass(frozen=True)
class EKPrediction:
    minimum_rank: int
    regime: str
    prefactor: float
    h_power: float
    barrier: float  # 2 S(m)

    def predicted_eigenvalue(self, h: float) -> float:
        if math.isinf(self.barrier):
            return 0.0
        return self.prefactor * h ** self.h_power * math.exp(-self.barrier / h)


def regime_of(m: LabeledMinimum, alpha: TorusPotential, alpha_floor: float = ALPHA_FLOOR) -> str:
    return REFRESHED if float(alpha(m.point.location)) > alpha_floor else UNREFRESHED


def prediction(m: LabeledMinimum, alpha: TorusPotential, regime: str | None = None) -> EKPrediction:
    """Leading-order law for one minimum; the regime defaults to the alpha(m) dispatch."""
    regime = regime or regime_of(m, alpha)
    if m.is_global:
        return EKPrediction(m.rank, regime, 0.0, 1.0, math.inf)
    if regime == WITTEN:
        return EKPrediction(m.rank, regime, witten_prefactor(m), 1.0, 2 * m.barrier)
    if regime == REFRESHED:
        return EKPrediction(m.rank, regime, refreshed_prefactor(m, alpha), 1.0, 2 * m.barrier)
    if regime == UNREFRESHED:
        return EKPrediction(m.rank, regime, unrefreshed_prefactor(m), 0.5, 2 * m.barrier)
    raise ValueError(f"unknown regime {regime!r}")


@dataclass(frozen=True)
class PredictionRow:
    rank: int
    regime: str
    S: float
    prefactor: float
    h: float
    lambda_pred: float
    mu_witten_pred: float
    lambda_unified_pred: float

    HEADER = ("rank", "regime", "S", "prefactor", "h", "lambda_pred", "mu_witten_pred",
              "lambda_unified_pred")

    def as_tuple(self):
        return (self.rank, self.regime, self.S, self.prefactor, self.h, self.lambda_pred,
                self.mu_witten_pred, self.lambda_unified_pred)


def predict_table(l: Landscape, alpha: TorusPotential, h_list) -> list:
    """One row per (h, minimum), ordered by h as given and then by rank."""
    preds = [prediction(m, alpha) for m in l.minima]
    finite = [p.regime for p, m in zip(preds, l.minima) if not m.is_global]
    if len(set(finite)) > 1:
        warnings.warn("minima fall into different refreshment regimes", MixedRegimeWarning, stacklevel=2)
    rows = []
    for h in h_list:
        for m, p in zip(l.minima, preds):
            if m.is_global:
                mu = unified = 0.0
            else:
                mu = prediction(m, alpha, WITTEN).predicted_eigenvalue(h)
                unified = mu / gamma_leading(m, alpha, h)
            rows.append(PredictionRow(m.rank, p.regime, m.barrier, p.prefactor, float(h),
                                      p.predicted_eigenvalue(h), mu, unified))
    return rows
