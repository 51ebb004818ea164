"""Small spectrum of Q_h by three routes, plus the semigroup decay check.

* :func:`witten_low_modes` reads the lowest Witten eigenpairs off the SVD of
  ``d_V`` (``mu = s**2``), which keeps exponentially small ``mu`` resolvable
  far below the ``eps * ||witten||`` floor of a symmetric eigensolve.
* :func:`grushin_eigenvalues` reduces ``Q_h`` to an ``n0 x n0`` problem on
  the span of those modes.
* :func:`direct_small_spectrum` runs a dense nonsymmetric eigensolve of ``Q_h``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import CountMismatch, FitUnstable, GapNotFound, WSingular
from .operators import OperatorBundle, assemble_t

EPS = np.finfo(float).eps
GAP_RATIO = 10.0


@dataclass(frozen=True)
class WittenLowModes:
    count: int
    mu: np.ndarray  # n0 smallest squared singular values, ascending
    psi: np.ndarray  # dim x n0
    mu_rest: np.ndarray  # the remaining squared singular values, ascending
    phi: np.ndarray  # dim x (dim - n0), the complementary right singular vectors

    @property
    def gap_ratio(self) -> float:
        if self.mu_rest.size == 0:
            return math.inf
        if self.mu[-1] == 0.0:
            return math.inf
        return float(self.mu_rest[0] / self.mu[-1])


def witten_low_modes(bundle: OperatorBundle, n0: int, gap_ratio: float | None = GAP_RATIO) -> WittenLowModes:
    """Lowest ``n0`` Witten eigenpairs; ``gap_ratio=None`` skips the gap check."""
    if n0 < 1:
        raise ValueError("n0 must be positive")
    _, s, vt = np.linalg.svd(bundle.d_V)
    s, vt = s[::-1], vt[::-1]
    mu = s * s
    low = WittenLowModes(n0, mu[:n0], vt[:n0].T, mu[n0:], vt[n0:].T)
    if gap_ratio is not None and low.gap_ratio < gap_ratio:
        raise GapNotFound(
            f"h={bundle.h}: mu[{n0 + 1}]/mu[{n0}] = {low.gap_ratio:.3g} < {gap_ratio:g}"
        )
    return low


@dataclass(frozen=True)
class GrushinReduction:
    m_matrix: np.ndarray
    w_matrix: np.ndarray
    lambdas: np.ndarray  # refined, ascending
    linear_lambdas: np.ndarray  # solutions of M v = lam W_h v
    g_bound: np.ndarray  # lam / h, size of the dropped term relative to lam W_h
    converged: tuple
    h: float


def _pencil_eigs(a, b):
    vals = sla.eigvals(a, b)
    return vals[np.isfinite(vals)]


def _schur_term(low: WittenLowModes, weight_phi, coupling, lam: float) -> np.ndarray:
    # lam^2 (I - C^T That(lam)^{-1} C), That = diag(mu_rest) - lam Phi^T W Phi + lam^2 I
    that = -lam * weight_phi
    that[np.diag_indices_from(that)] += low.mu_rest + lam * lam
    corr = coupling.T @ np.linalg.solve(that, coupling)
    return lam * lam * (np.eye(low.count) - corr)


def grushin_eigenvalues(
    bundle: OperatorBundle,
    low: WittenLowModes,
    refine: bool = True,
    tol: float = 1e-13,
    max_iter: int = 60,
) -> GrushinReduction:
    """Solve the reduced ``n0 x n0`` problem for the small eigenvalues.

    The linear pencil ``M v = lam W_h v`` is the leading-order reduction. With
    ``refine`` each root is then polished on the exact finite-dimensional
    Schur complement ``M - lam W_h + G(lam)`` by a secant iteration, so the
    result matches the direct eigensolve of ``Q_h`` up to rounding.
    """
    psi = low.psi
    wh = psi.T @ bundle.weight @ psi
    wh = 0.5 * (wh + wh.T)
    m = np.diag(low.mu)
    try:
        linear = sla.eigh(m, wh, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise WSingular(f"h={bundle.h}: projected weight matrix is not positive definite") from exc
    if np.linalg.cond(wh) > 1e12:
        raise WSingular(f"h={bundle.h}: cond(W_h) = {np.linalg.cond(wh):.3g}")

    refined = linear.copy()
    converged = [True] * low.count
    if refine and low.count > 1:
        weight_phi = low.phi.T @ bundle.weight @ low.phi
        coupling = low.phi.T @ bundle.weight @ psi

        def fixed_map(lam):
            vals = _pencil_eigs(m + _schur_term(low, weight_phi, coupling, lam), wh)
            z = vals[np.argmin(np.abs(vals - lam))]
            return float(z.real), abs(z.imag) <= 1e-8 * max(abs(z), 1e-300)

        for j in range(1, low.count):
            x0 = linear[j]
            f0, real0 = fixed_map(x0)
            x1 = f0
            ok = False
            for _ in range(max_iter):
                f1, real1 = fixed_map(x1)
                if abs(f1 - x1) <= tol * abs(x1):
                    x0, x1, ok = x1, f1, real1
                    break
                denom = (f1 - x1) - (f0 - x0)
                step = f1 if denom == 0.0 else x1 - (f1 - x1) * (x1 - x0) / denom
                x0, f0, x1 = x1, f1, step
            refined[j] = x1
            converged[j] = ok
        order = np.argsort(refined)
        refined = refined[order]
        converged = [converged[i] for i in order]

    return GrushinReduction(m, wh, refined, linear, np.abs(refined) / bundle.h, tuple(converged), bundle.h)


@dataclass(frozen=True)
class SpectrumReport:
    method: str
    eigenvalues: np.ndarray  # complex, sorted by real part
    trusted: np.ndarray  # bool per eigenvalue
    resolvability_floor: float
    h: float
    n: int
    all_real: bool = True
    nonnegative: bool = True
    eigenvectors: np.ndarray | None = field(default=None, repr=False, compare=False)

    def trusted_nonzero(self):
        return [(z, self.eigenvectors[:, i] if self.eigenvectors is not None else None)
                for i, z in enumerate(self.eigenvalues) if self.trusted[i]]

    def csv_rows(self):
        return [(self.method, self.n, self.h, j + 1, float(z.real), float(z.imag), bool(t))
                for j, (z, t) in enumerate(zip(self.eigenvalues, self.trusted))]

    CSV_HEADER = ("method", "n", "h", "j", "re", "im", "trusted")


def direct_small_spectrum(
    bundle: OperatorBundle,
    n0: int | None = None,
    radius_scale: float = 5.0,
) -> SpectrumReport:
    """Dense eigensolve of ``Q_h`` restricted to ``|Re z| <= radius_scale h^2``."""
    vals, vecs = sla.eig(bundle.q)
    window = np.abs(vals.real) <= radius_scale * bundle.h ** 2
    vals, vecs = vals[window], vecs[:, window]
    order = np.lexsort((vals.imag, vals.real))
    vals, vecs = vals[order], vecs[:, order]
    qn = bundle.q_norm
    floor = 100 * EPS * qn
    trusted = np.abs(vals) >= floor
    report = SpectrumReport(
        "direct", vals, trusted, floor, bundle.h, bundle.grid.n,
        all_real=bool(np.all(np.abs(vals.imag) <= 1e-10 * qn)),
        nonnegative=bool(np.all(vals.real >= -floor)),
        eigenvectors=vecs,
    )
    if n0 is not None and len(vals) != n0:
        raise CountMismatch(
            f"h={bundle.h}: found {len(vals)} eigenvalues with |Re z| <= {radius_scale}h^2, expected {n0}",
            vals,
        )
    return report


def eigenvector_mismatch(bundle: OperatorBundle, lam: complex, vec: np.ndarray) -> float:
    """``||f - d_V g / lam|| / ||g||`` for an eigenvector ``(f, g)`` of ``Q_h``."""
    m = bundle.dim
    f, g = vec[:m], vec[m:]
    return float(np.linalg.norm(f - bundle.d_V @ g / lam) / np.linalg.norm(g))


def pencil_residual(bundle: OperatorBundle, lam: complex) -> float:
    """Smallest singular value of ``T(lam)`` relative to ``||witten||``."""
    s = sla.svdvals(assemble_t(bundle, lam))
    return float(s[-1] / bundle.witten_norm)


def stationary_projector(bundle: OperatorBundle) -> np.ndarray:
    """Rank-one spectral projector of ``Q_h`` onto its kernel."""
    u, _, vt = np.linalg.svd(bundle.q)
    right = vt[-1]
    left = u[:, -1]
    return np.outer(right, left) / (left @ right)


def decay_curve(bundle: OperatorBundle, t_list) -> np.ndarray:
    proj = stationary_projector(bundle)
    return np.array([np.linalg.norm(sla.expm(-t * bundle.q) - proj, 2) for t in t_list])


def semigroup_decay(bundle: OperatorBundle, t_list, tail_fraction: float = 0.5) -> float:
    """Decay rate of ``||exp(-tQ) - Pi_1||`` from a least-squares fit on the tail."""
    t = np.asarray(t_list, dtype=float)
    if t.size < 4:
        raise ValueError("need at least four time points")
    logs = np.log(decay_curve(bundle, t))
    k = max(3, int(round(tail_fraction * t.size)))
    tt, yy = t[-k:], logs[-k:]
    if np.ptp(tt) == 0.0:
        raise FitUnstable(f"h={bundle.h}: tail times do not span an interval")
    slope, intercept = np.polyfit(tt, yy, 1)
    resid = yy - (slope * tt + intercept)
    span = float(np.ptp(yy))
    if span == 0.0 or np.max(np.abs(resid)) > 0.05 * span:
        raise FitUnstable(f"h={bundle.h}: tail residual {np.max(np.abs(resid)):.3g} vs range {span:.3g}")
    return float(-slope)
