"""End-to-end acceptance checks on the tilted double well.

Each test prints one ``PASS``/``FAIL`` line and then asserts the same verdict,
so ``pytest tests/test_acceptance.py`` doubles as the acceptance report.
"""
import math
import time

import numpy as np
import pytest
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from conftest import M2, SWEEP, bundle, const, random_trig
from zigzag_ek import pdmp
from zigzag_ek.asymptotics import prediction, REFRESHED, UNREFRESHED, witten_prefactor
from zigzag_ek.cli import main
from zigzag_ek.errors import GridTooCoarse, H01Violated, MorseViolation
from zigzag_ek.landscape import brute_force_labels, label_minima
from zigzag_ek.operators import CollocationGrid, assemble_q
from zigzag_ek.potential import CANONICAL_V, TorusPotential, find_critical_points
from zigzag_ek.spectra import (
    direct_small_spectrum,
    eigenvector_mismatch,
    grushin_eigenvalues,
    pencil_residual,
    semigroup_decay,
    witten_low_modes,
)

pytestmark = pytest.mark.slow


@pytest.fixture
def verdict(capsys):
    def report(number, name, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail

    return report


def strictly_decreasing(xs):
    return all(b < a for a, b in zip(xs, xs[1:]))


def fmt(xs):
    return "[" + ", ".join(f"{x:.4g}" for x in xs) + "]"


def test_criterion_01_conjugation(verdict):
    start = time.perf_counter()
    g = CollocationGrid(256)
    rng = np.random.default_rng(101)
    cases = [CANONICAL_V] + [random_trig(rng, int(rng.integers(1, 5))) for _ in range(20)]
    worst = 0.0
    for V in cases:
        b = assemble_q(V, const(0.7), g, 0.25)
        ep, eq = sla.eigvals(b.p), sla.eigvals(b.q)
        cost = np.abs(ep[:, None] - eq[None, :])
        r, c = linear_sum_assignment(cost)
        worst = max(worst, cost[r, c].max() / b.q_norm)
    elapsed = time.perf_counter() - start
    verdict(1, "conjugation exactness", worst <= 1e-9 and elapsed < 30,
            f"max relative eigenvalue gap {worst:.2e} over {len(cases)} potentials, {elapsed:.1f}s")


def test_criterion_02_witten_kernel_and_gap(verdict):
    mu1, ratios = [], []
    for h in SWEEP:
        low = witten_low_modes(bundle(0.7, h, 512), 2, gap_ratio=None)
        mu1.append(low.mu[0])
        ratios.append(low.gap_ratio)
    ok = max(mu1) <= 1e-20 and min(ratios) >= 10
    verdict(2, "Witten kernel and gap", ok, f"mu1 max {max(mu1):.2e}, gap ratios {fmt(ratios)}")


def ek_ratios(alpha, kind, canonical_landscape):
    m2 = canonical_landscape.minimum(2)
    rs = []
    for h in SWEEP:
        b = bundle(alpha, h, 512)
        low = witten_low_modes(b, 2)
        if kind == "witten":
            pred = witten_prefactor(m2) * h * math.exp(-2 * m2.barrier / h)
            rs.append(low.mu[1] / pred)
        else:
            lam = grushin_eigenvalues(b, low).lambdas[1]
            regime = REFRESHED if alpha > 0 else UNREFRESHED
            rs.append(lam / prediction(m2, const(alpha), regime).predicted_eigenvalue(h))
    return rs


def check_ek(verdict, number, name, rs, band):
    dev = [abs(r - 1) for r in rs]
    ok = dev[-1] <= band and strictly_decreasing(dev)
    verdict(number, name, ok, f"r(h) over h={list(SWEEP)}: {fmt(rs)}; |r-1| at h=0.1 = {dev[-1]:.3g} (band {band})")


def test_criterion_03_witten_eyring_kramers(verdict, canonical_landscape):
    check_ek(verdict, 3, "Witten Eyring-Kramers", ek_ratios(0.7, "witten", canonical_landscape), 0.15)


def test_criterion_04_refreshed_eyring_kramers(verdict, canonical_landscape):
    check_ek(verdict, 4, "refreshed Eyring-Kramers", ek_ratios(0.7, "grushin", canonical_landscape), 0.25)


def test_criterion_05_unrefreshed_eyring_kramers(verdict, canonical_landscape):
    check_ek(verdict, 5, "unrefreshed Eyring-Kramers", ek_ratios(0.0, "grushin", canonical_landscape), 0.25)


CROSS_H = (0.5, 0.4, 0.3)


def test_criterion_06_cross_method(verdict):
    rel, res = [], []
    for h in CROSS_H:
        b = bundle(0.7, h, 256)
        direct = direct_small_spectrum(b, 2)
        assert direct.trusted[1]
        lam_d = direct.eigenvalues[1].real
        lam_g = grushin_eigenvalues(b, witten_low_modes(b, 2, gap_ratio=None)).lambdas[1]
        rel.append(abs(lam_d - lam_g) / lam_d)
        res.append(pencil_residual(b, lam_d))
    ok = max(rel) <= 1e-3 and max(res) <= 1e-6
    verdict(6, "cross-method agreement", ok, f"relative gaps {fmt(rel)}, pencil residuals {fmt(res)}")


def test_criterion_07_eigenvector_correspondence(verdict):
    worst, count = 0.0, 0
    for h in CROSS_H:
        b = bundle(0.7, h, 256)
        for lam, vec in direct_small_spectrum(b, 2).trusted_nonzero():
            worst = max(worst, eigenvector_mismatch(b, lam, vec))
            count += 1
    verdict(7, "eigenvector correspondence", count > 0 and worst <= 1e-6,
            f"max mismatch {worst:.2e} over {count} eigenpairs")


def test_criterion_08_weight_matrix(verdict):
    gaps, off = [], []
    for h in SWEEP:
        b = bundle(0.7, h, 512)
        w = grushin_eigenvalues(b, witten_low_modes(b, 2)).w_matrix
        gamma = 0.7 + 2 * math.sqrt(h * M2[2] / math.pi)
        gaps.append(abs(w[1, 1] - gamma) / w[1, 1])
        off.append(abs(w[0, 1]))
    slope = np.polyfit(1 / np.array(SWEEP), np.log(off), 1)[0]
    ok = strictly_decreasing(gaps) and gaps[-1] <= 0.1 and slope < 0
    verdict(8, "weight matrix", ok, f"relative gaps {fmt(gaps)}, |W12| {fmt(off)}, log slope {slope:.3g}")


def distinct_values(V, tol=1e-6):
    vals = sorted(c.value for c in find_critical_points(V))
    return min(np.diff(vals)) > tol


def same_labels(a, b):
    if a.n0 != b.n0:
        return False
    for x, y in zip(a.minima, b.minima):
        d = abs(x.point.location - y.point.location) % 1.0
        if x.rank != y.rank or min(d, 1 - d) > 1e-4:
            return False
        if math.isinf(x.barrier) != math.isinf(y.barrier):
            return False
        if not math.isinf(x.barrier) and abs(x.barrier - y.barrier) > 1e-6:
            return False
        if len(x.saddle_set) != len(y.saddle_set):
            return False
    return True


def rejection(fn, V):
    try:
        fn(V)
    except (MorseViolation, GridTooCoarse, H01Violated) as exc:
        return type(exc)
    return None


def test_criterion_09_labeling_oracle(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(909)
    agreed = tried = 0
    mismatches = []
    while tried < 100:
        V = random_trig(rng, int(rng.integers(1, 7)))
        try:
            if not distinct_values(V):
                continue
            land = label_minima(V)
        except (MorseViolation, GridTooCoarse, H01Violated):
            continue
        tried += 1
        if same_labels(land, brute_force_labels(V)):
            agreed += 1
        else:
            mismatches.append(V)
    degenerate = [
        TorusPotential.constant(1.0),
        TorusPotential(cos=(0.0, 1.0, 0.25)),
        TorusPotential(cos=(0.0,), sin=(1 / (4 * math.pi), -1 / (8 * math.pi))),
        TorusPotential(cos=(0.0, 0.0, 1.0)),
        TorusPotential(cos=(0.0, 0.0, 0.0, 1.0)),
    ]
    same_verdicts = sum(
        rejection(lambda p: label_minima(p, find_critical_points(p)), V) == rejection(brute_force_labels, V)
        is not None for V in degenerate
    )
    elapsed = time.perf_counter() - start
    ok = agreed == 100 and same_verdicts == len(degenerate) and elapsed < 120
    verdict(9, "labeling oracle", ok,
            f"{agreed}/100 random potentials agree, {same_verdicts}/{len(degenerate)} rejections match, "
            f"{elapsed:.1f}s")


def test_criterion_10_semigroup_decay(verdict):
    b = bundle(0.7, 0.3, 128)
    lam2 = direct_small_spectrum(b, 2).eigenvalues[1].real
    rate = semigroup_decay(b, np.linspace(0, 12 / lam2, 25))
    rel = abs(rate / lam2 - 1)
    verdict(10, "semigroup decay", rel <= 0.05, f"fitted {rate:.6g} vs direct {lam2:.6g}, relative {rel:.2e}")


def test_criterion_11_hitting_time(verdict, canonical_landscape):
    start = time.perf_counter()
    h = 0.1
    b = bundle(0.0, h, 512)
    lam2 = grushin_eigenvalues(b, witten_low_modes(b, 2)).lambdas[1]
    stats = pdmp.hitting_time_tau(-CANONICAL_V, const(0.0), h, canonical_landscape, 10_000, 7, lambda2=lam2)
    elapsed = time.perf_counter() - start
    scale = h * lam2
    lo, hi = scale * (stats.mean - 3 * stats.std_error), scale * (stats.mean + 3 * stats.std_error)
    ok = (stats.excluded == 0 and 0.9 <= stats.product <= 1.1 and lo <= 1.1 and hi >= 0.9
          and elapsed < 300)
    verdict(11, "hitting-time consistency", ok,
            f"mean tau {stats.mean:.4g} +/- {stats.std_error:.3g}, h*lambda2*mean = {stats.product:.4g} "
            f"(3-sigma [{lo:.4g}, {hi:.4g}]), lambda2*mean/h = {stats.rate_product:.4g}, "
            f"excluded {stats.excluded}, {elapsed:.0f}s")


def test_criterion_12_determinism(verdict, tmp_path):
    runs, codes = [], []
    for name in ("first", "second"):
        out = tmp_path / name
        codes.append(main(["compare", "--out", str(out)]))
        runs.append({p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.is_file()})
    ok = runs[0] == runs[1] and codes == [0, 0] and len(runs[0]) > 0
    verdict(12, "determinism", ok, f"{len(runs[0])} files byte-identical: {runs[0] == runs[1]}, exit codes {codes}")
