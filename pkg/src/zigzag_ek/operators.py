"""Dense matrix discretizations of the transport and Witten operators.

Functions are sampled at ``x_k = k/n`` (``n`` even). The spectral derivative of
an even grid always has a two-dimensional kernel (the constant and the
sawtooth ``(-1)^k``), and the sawtooth would show up as a spurious
near-zero mode of every operator built from it. All operators are therefore
compressed onto the ``n - 1`` dimensional trigonometric space without the
Nyquist mode, with orthonormal basis ``B`` (columns: the constant,
``cos 2 pi k x`` and ``sin 2 pi k x`` for ``k < n/2``). Multiplication by ``f``
becomes ``B^T diag(f) B`` and the derivative becomes exact rotation blocks.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import toeplitz

from .potential import TorusPotential


@dataclass(frozen=True)
class CollocationGrid:
    n: int

    def __post_init__(self):
        if self.n < 4 or self.n % 2:
            raise ValueError(f"collocation size must be an even integer >= 4, got {self.n}")

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    @property
    def dim(self) -> int:
        """Dimension of the Nyquist-free working space."""
        return self.n - 1

    @cached_property
    def diff_matrix(self) -> np.ndarray:
        """Standard Fourier differentiation matrix on [0, 1) (antisymmetric)."""
        n = self.n
        k = np.arange(1, n)
        col = np.zeros(n)
        col[1:] = np.pi * (-1.0) ** k / np.tan(np.pi * k / n)
        row = -col
        return toeplitz(col, row)

    @cached_property
    def basis(self) -> np.ndarray:
        x = self.points
        cols = [np.full(self.n, 1 / np.sqrt(self.n))]
        c = np.sqrt(2 / self.n)
        for k in range(1, self.n // 2):
            cols.append(c * np.cos(2 * np.pi * k * x))
            cols.append(c * np.sin(2 * np.pi * k * x))
        return np.column_stack(cols)

    @cached_property
    def reduced_diff(self) -> np.ndarray:
        """``B^T D B``: 2x2 rotation blocks ``d/dx (cos, sin) = 2 pi k (-sin, cos)``."""
        D = np.zeros((self.dim, self.dim))
        for k in range(1, self.n // 2):
            ic, is_ = 2 * k - 1, 2 * k
            D[is_, ic] = -2 * np.pi * k
            D[ic, is_] = 2 * np.pi * k
        return D

    def to_coeffs(self, samples) -> np.ndarray:
        return self.basis.T @ np.asarray(samples, dtype=float)

    def to_samples(self, coeffs) -> np.ndarray:
        return self.basis @ np.asarray(coeffs)

    def multiplication(self, values) -> np.ndarray:
        B = self.basis
        return B.T @ (np.asarray(values, dtype=float)[:, None] * B)


def _omega(dim: int) -> np.ndarray:
    # velocity blocks ordered (+1, -1), so the first reindexing is the identity
    return np.kron(np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2), np.eye(dim))


@dataclass(frozen=True)
class OperatorBundle:
    h: float
    grid: CollocationGrid
    V: TorusPotential
    alpha: TorusPotential
    W_values: np.ndarray  # W = alpha + 2|V'| at the nodes
    d_V: np.ndarray
    weight: np.ndarray  # compressed multiplication by W
    q: np.ndarray
    p: np.ndarray
    omega: np.ndarray

    @cached_property
    def witten(self) -> np.ndarray:
        return self.d_V.T @ self.d_V

    @cached_property
    def witten_norm(self) -> float:
        return float(np.linalg.norm(self.d_V, 2) ** 2)

    @cached_property
    def q_norm(self) -> float:
        return float(np.linalg.norm(self.q, 2))

    @property
    def dim(self) -> int:
        return self.grid.dim


def assemble_p(U: TorusPotential, alpha: TorusPotential, g: CollocationGrid, h: float) -> np.ndarray:
    """Transport generator ``-v d_U + 2 (v U')_+ (I - B) + alpha (I - pi_v)``, blocks (+1, -1)."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = g.points
    dU = U.derivative(x, 1)
    M = g.multiplication
    d_U = h * g.reduced_diff + M(dU)
    up = 2 * M(np.maximum(dU, 0.0))
    um = 2 * M(np.maximum(-dU, 0.0))
    half_a = 0.5 * M(alpha(x) * np.ones_like(x))
    return np.block([
        [-d_U + up + half_a, -up - half_a],
        [-um - half_a, d_U + um + half_a],
    ])


def assemble_q(V: TorusPotential, alpha: TorusPotential, g: CollocationGrid, h: float) -> OperatorBundle:
    if h <= 0:
        raise ValueError("h must be positive")
    x = g.points
    dV = V.derivative(x, 1)
    W = alpha(x) * np.ones_like(x) + 2 * np.abs(dV)
    d_V = h * g.reduced_diff + g.multiplication(dV)
    weight = g.multiplication(W)
    m = g.dim
    q = np.block([[np.zeros((m, m)), d_V], [-d_V.T, weight]])
    p = assemble_p(-V, alpha, g, h)
    return OperatorBundle(float(h), g, V, alpha, W, d_V, weight, q, p, _omega(m))


def assemble_t(bundle: OperatorBundle, lam: complex) -> np.ndarray:
    """``T(lam) = witten - lam W + lam^2 I``."""
    t = bundle.witten - lam * bundle.weight
    return t + lam * lam * np.eye(bundle.dim)


def dump_matrix(path, matrix: np.ndarray, h: float) -> None:
    """Row-major text dump with a ``rows cols h`` header line."""
    a = np.asarray(matrix)
    fmt = "%.17g" if np.isrealobj(a) else "%.17g%+.17gj"
    np.savetxt(path, a, fmt=fmt, header=f"{a.shape[0]} {a.shape[1]} {h!r}")
