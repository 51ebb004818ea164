from functools import lru_cache

import numpy as np
import pytest

from zigzag_ek.landscape import label_minima
from zigzag_ek.operators import CollocationGrid, assemble_q
from zigzag_ek.potential import CANONICAL_V, TorusPotential

# Critical points of the canonical V from a 30-digit mpmath root solve:
# (location, V, V'')
S_MAX = (0.011514127338409377, 0.2902107150552379, -40.756476803444454)
M2 = (0.25645442702368022, -0.17576016048318207, 36.450206961404815)
S2 = (0.4875842528689021, 0.21542225130577963, -37.753696758580934)
M1 = (0.7444471927690083, -0.32565405587783545, 42.393065749157339)
BARRIER_M2 = S2[1] - M2[1]

SWEEP = (0.3, 0.2, 0.15, 0.1)


def const(c: float) -> TorusPotential:
    return TorusPotential.constant(c)


@lru_cache(maxsize=None)
def bundle(alpha: float, h: float, n: int):
    return assemble_q(CANONICAL_V, const(alpha), CollocationGrid(n), h)


def random_trig(rng: np.random.Generator, degree: int) -> TorusPotential:
    return TorusPotential(cos=tuple(rng.uniform(-1, 1, degree + 1)), sin=tuple(rng.uniform(-1, 1, degree)))


@pytest.fixture(scope="session")
def canonical_landscape():
    return label_minima(CANONICAL_V)
