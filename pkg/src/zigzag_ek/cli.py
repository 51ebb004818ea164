"""Command-line experiment runner.

Every subcommand reads the same TOML config (see :mod:`zigzag_ek.config`) and
writes CSV files into the output directory. Rows are collected in memory and
written once, sorted by (h, j, method), so identical inputs give identical bytes.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import asymptotics, pdmp, spectra
from .config import METHODS, OUTPUT_ENV, ExperimentConfig, canonical_config_text, load_config, parse_config
from .errors import (
    ConfigError,
    CountMismatch,
    FitUnstable,
    GapNotFound,
    GridTooCoarse,
    H01Violated,
    MorseViolation,
    WSingular,
    ZigZagEKError,
)
from .landscape import Landscape, label_minima
from .operators import CollocationGrid, assemble_q, dump_matrix
from .potential import check_assumptions, find_critical_points

HARD_ERRORS = (MorseViolation, GridTooCoarse, H01Violated, CountMismatch, WSingular)
SPECTRAL = frozenset({"witten", "grushin", "direct", "pencil", "semigroup"})
SEMIGROUP_POINTS = 25
SEMIGROUP_HORIZON = 12.0  # in units of 1 / lambda_2
SEMIGROUP_MAX_QT = 1e6


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Collector:
    """Gathers CSV tables and writes them in a deterministic order."""

    def __init__(self):
        self.tables: dict = {}

    def add(self, name: str, header, rows):
        table = self.tables.setdefault(name, (tuple(header), []))
        if table[0] != tuple(header):
            raise ValueError(f"header mismatch for {name}")
        table[1].extend(tuple(r) for r in rows)

    @staticmethod
    def _sort_key(header):
        idx = [header.index(c) for c in ("h", "j", "rank", "method") if c in header]

        def key(row):
            out = []
            for i in idx:
                v = row[i]
                out.append((0, float(v), "") if isinstance(v, (int, float, np.number)) else (1, 0.0, str(v)))
            return out

        return key

    def render(self, name: str) -> str:
        header, rows = self.tables[name]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in sorted(rows, key=self._sort_key(header)):
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def write(self, out_dir: Path) -> list:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for name in sorted(self.tables):
            path = out_dir / name
            path.write_text(self.render(name))
            paths.append(path)
        return paths


ERROR_HEADER = ("method", "h", "error", "message")
LANDSCAPE_NAME = "landscape.csv"


def _analyze(config: ExperimentConfig, out: Collector):
    V, alpha = config.potential, config.alpha
    crit = find_critical_points(V)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        land = label_minima(V, crit)
    out.add(LANDSCAPE_NAME, Landscape.CSV_HEADER, land.csv_rows())
    report = check_assumptions(config.U, alpha)
    h2 = land.h2_report
    rows = report.as_rows() + [
        ("H2_unique_minima", h2.unique_minima),
        ("H2_disjoint_saddles", h2.disjoint_saddles),
        ("H2_s_injective", h2.s_injective),
    ]
    out.add("assumptions.csv", ("assumption", "holds"), rows)
    return land, [str(w.message) for w in caught]


def _predictions(config, land, out):
    rows = asymptotics.predict_table(land, config.alpha, config.h_list)
    header = ("method", "n", "seed") + asymptotics.PredictionRow.HEADER
    out.add("predictions.csv", header, [("predict", config.n, config.seed) + r.as_tuple() for r in rows])
    return {(r.h, r.rank): r for r in rows}


class _Sweep:
    """Spectral computations at one h."""

    def __init__(self, config: ExperimentConfig, land: Landscape, h: float, out: Collector, errors: list):
        self.config, self.land, self.h, self.out, self.errors = config, land, h, out, errors
        self.bundle = assemble_q(config.potential, config.alpha, CollocationGrid(config.n), h)
        self.low = self.grushin = self.direct = None

    def fail(self, method, exc):
        self.errors.append((method, self.h, type(exc).__name__, str(exc)))

    @property
    def prov(self):
        return (self.config.n, self.h, self.config.seed)

    def witten(self, record: bool):
        n0 = self.land.n0
        try:
            self.low = spectra.witten_low_modes(self.bundle, n0)
        except GapNotFound as exc:
            self.fail("witten", exc)
            self.low = spectra.witten_low_modes(self.bundle, n0, gap_ratio=None)
        if record:
            rows = []
            for j, (m, mu) in enumerate(zip(self.land.minima, self.low.mu), start=1):
                pred = asymptotics.prediction(m, self.config.alpha, asymptotics.WITTEN).predicted_eigenvalue(self.h)
                rows.append(("witten",) + self.prov + (j, float(mu), pred, self.low.gap_ratio))
            self.out.add("witten.csv", ("method", "n", "h", "seed", "j", "mu", "mu_pred", "gap_ratio"), rows)

    def run_grushin(self, record: bool):
        self.grushin = spectra.grushin_eigenvalues(self.bundle, self.low)
        if not record:
            return
        g = self.grushin
        rows = []
        for j, m in enumerate(self.land.minima, start=1):
            gamma = asymptotics.gamma_leading(m, self.config.alpha, self.h)
            rows.append(("grushin",) + self.prov + (
                j, float(g.lambdas[j - 1]), float(g.linear_lambdas[j - 1]), float(g.w_matrix[j - 1, j - 1]),
                gamma, float(g.g_bound[j - 1]), bool(g.converged[j - 1])))
        header = ("method", "n", "h", "seed", "j", "lambda", "linear_lambda", "W_jj", "gamma_leading",
                  "g_bound", "converged")
        self.out.add("grushin.csv", header, rows)

    def run_direct(self):
        try:
            self.direct = spectra.direct_small_spectrum(self.bundle, self.land.n0, self.config.radius_scale)
        except CountMismatch as exc:
            self.fail("direct", exc)
            self.direct = spectra.direct_small_spectrum(self.bundle, None, self.config.radius_scale)
        rows = [r + (self.config.seed,) for r in self.direct.csv_rows()]
        self.out.add("direct.csv", spectra.SpectrumReport.CSV_HEADER + ("seed",), rows)

    def run_pencil(self):
        if self.direct is not None:
            lams = [complex(z) for z in self.direct.eigenvalues]
        else:
            lams = [complex(z) for z in self.grushin.lambdas]
        rows = [("pencil",) + self.prov + (j, z.real, z.imag, spectra.pencil_residual(self.bundle, z))
                for j, z in enumerate(lams, start=1)]
        self.out.add("pencil.csv", ("method", "n", "h", "seed", "j", "re", "im", "residual"), rows)

    def lambda2(self) -> float:
        if self.direct is not None and len(self.direct.eigenvalues) >= 2:
            return float(self.direct.eigenvalues[1].real)
        if self.grushin is not None and len(self.grushin.lambdas) >= 2:
            return float(self.grushin.lambdas[1])
        return math.nan

    def run_semigroup(self):
        lam2 = self.lambda2()
        header = ("method", "n", "h", "seed", "rate", "lambda2_ref", "ratio")
        if not lam2 > 0:
            self.fail("semigroup", ValueError("no reference lambda_2"))
            return
        horizon = SEMIGROUP_HORIZON / lam2
        if lam2 < 1e-6 or horizon * self.bundle.q_norm > SEMIGROUP_MAX_QT:
            qt = horizon * self.bundle.q_norm
            self.errors.append(("semigroup", self.h, "skipped", f"|q| t_max = {qt:.3g} exceeds {SEMIGROUP_MAX_QT:g}"))
            return
        try:
            rate = spectra.semigroup_decay(self.bundle, np.linspace(0.0, horizon, SEMIGROUP_POINTS))
        except FitUnstable as exc:
            self.fail("semigroup", exc)
            return
        self.out.add("semigroup.csv", header, [("semigroup",) + self.prov + (rate, lam2, rate / lam2)])


def run(config: ExperimentConfig, dump_matrices: bool = False, log=sys.stderr) -> int:
    """Run every requested stage; return 0, or 1 if a hard error occurred."""
    out = Collector()
    errors: list = []
    hard = False
    try:
        land, notes = _analyze(config, out)
    except (MorseViolation, GridTooCoarse, H01Violated) as exc:
        errors.append(("analyze", math.nan, type(exc).__name__, str(exc)))
        out.add("errors.csv", ERROR_HEADER, errors)
        out.write(config.output_dir)
        print(f"error: {type(exc).__name__}: {exc}", file=log)
        return 1
    for note in notes:
        errors.append(("analyze", math.nan, "warning", note))

    preds = _predictions(config, land, out)
    methods = config.methods
    lam_g: dict = {}
    lam_d: dict = {}
    trusted: dict = {}
    mu: dict = {}

    for h in config.h_list:
        if not methods & (SPECTRAL | {"simulate"}):
            break
        try:
            sweep = _Sweep(config, land, h, out, errors)
            if dump_matrices:
                mdir = config.output_dir / "matrices"
                mdir.mkdir(parents=True, exist_ok=True)
                dump_matrix(mdir / f"q_h{h!r}.txt", sweep.bundle.q, h)
            need_low = methods & {"witten", "grushin", "pencil", "simulate"}
            if need_low:
                sweep.witten("witten" in methods)
                for j, v in enumerate(sweep.low.mu, start=1):
                    mu[(h, j)] = float(v)
                sweep.run_grushin("grushin" in methods)
                for j, v in enumerate(sweep.grushin.lambdas, start=1):
                    lam_g[(h, j)] = float(v)
            if methods & {"direct", "semigroup"}:
                sweep.run_direct()
                for j, z in enumerate(sweep.direct.eigenvalues, start=1):
                    lam_d[(h, j)] = float(z.real)
                    trusted[(h, j)] = bool(sweep.direct.trusted[j - 1])
            if "pencil" in methods:
                sweep.run_pencil()
            if "semigroup" in methods:
                sweep.run_semigroup()
            if "simulate" in methods:
                if land.n0 < 2:
                    sweep.fail("simulate", ValueError("hitting experiment needs two minima"))
                else:
                    stats = pdmp.hitting_time_tau(config.U, config.alpha, h, land, config.replicas,
                                                  config.seed, lambda2=lam_g.get((h, 2), math.nan))
                    if stats.excluded:
                        sweep.fail("simulate", RuntimeError(f"{stats.excluded} replicas hit t_max"))
                    out.add("pdmp.csv", ("method", "n", "seed") + pdmp.HittingStats.CSV_HEADER[:-1],
                            [("simulate", config.n) + (stats.seed,) + stats.csv_row()[:-1]])
        except ZigZagEKError as exc:
            errors.append(("spectrum", h, type(exc).__name__, str(exc)))
            hard = hard or isinstance(exc, HARD_ERRORS)

    hard = hard or any(e[2] in {c.__name__ for c in HARD_ERRORS} for e in errors)

    comparison, convergence = [], []
    for h in config.h_list:
        for j in range(1, land.n0 + 1):
            pred = preds[(h, j)]
            lp = pred.lambda_pred
            lg = lam_g.get((h, j), math.nan)
            ld = lam_d.get((h, j), math.nan)
            ratio_pred = lg / lp if (j > 1 and lp > 0) else math.nan
            ratio_direct = lg / ld if (j > 1 and ld != 0) else math.nan
            comparison.append(("compare", config.n, h, config.seed, j, lp, lg, ld,
                               trusted.get((h, j), False), ratio_pred, ratio_direct))
            if j > 1:
                if not math.isnan(ratio_pred):
                    convergence.append(("grushin", config.n, h, config.seed, j, ratio_pred, abs(ratio_pred - 1)))
                m = mu.get((h, j))
                if m is not None and pred.mu_witten_pred > 0:
                    r = m / pred.mu_witten_pred
                    convergence.append(("witten", config.n, h, config.seed, j, r, abs(r - 1)))
    out.add("comparison.csv", ("method", "n", "h", "seed", "j", "lambda_pred", "lambda_grushin",
                               "lambda_direct", "trusted", "ratio_pred", "ratio_direct"), comparison)
    if convergence:
        out.add("convergence.csv", ("method", "n", "h", "seed", "j", "ratio", "deviation"), convergence)
    out.add("errors.csv", ERROR_HEADER, errors)
    paths = out.write(config.output_dir)
    for method, h, kind, msg in errors:
        print(f"{kind} [{method}, h={h}]: {msg}", file=log)
    print(f"wrote {len(paths)} files to {config.output_dir}", file=log)
    return 1 if hard else 0


def write_plot_series(out_dir: Path) -> list:
    """Arrhenius series (1/h, log lambda) per method and j from comparison.csv."""
    path = out_dir / "comparison.csv"
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    series: dict = {}
    for r in rows:
        j = int(r["j"])
        if j < 2:
            continue
        for col in ("lambda_pred", "lambda_grushin", "lambda_direct"):
            v = float(r[col])
            if v > 0:
                series.setdefault((col, j), []).append((1.0 / float(r["h"]), math.log(v)))
    written = []
    for (col, j), pts in sorted(series.items()):
        p = out_dir / f"series_{col}_j{j}.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("x", "y"))
            for x, y in sorted(pts):
                w.writerow((repr(x), repr(y)))
        written.append(p)
    return written


def _parse_h(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad h list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zigzag-ek", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", nargs="?", help="TOML config (default: built-in tilted double well)")
    common.add_argument("--h", type=_parse_h, help="comma-separated h values, strictly decreasing")
    common.add_argument("--n", type=int, help="collocation size (even)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path, help=f"output directory (default: ${OUTPUT_ENV} or config)")
    common.add_argument("--replicas", type=int)
    common.add_argument("--methods", type=lambda s: frozenset(s.split(",")),
                        help=f"comma-separated subset of {','.join(METHODS)}")
    common.add_argument("--dump-matrices", action="store_true", help="write Q_h as text for each h")
    for name, help_ in (
        ("analyze", "landscape and assumption report"),
        ("predict", "Eyring-Kramers prediction table"),
        ("spectrum", "spectral methods only"),
        ("compare", "full sweep with comparison tables"),
        ("simulate", "Monte Carlo hitting times"),
        ("plot", "write (x, y) series from an existing comparison.csv"),
    ):
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = parse_config(canonical_config_text())
    return cfg.with_overrides(h_list=args.h, n=args.n, seed=args.seed, output_dir=args.out,
                              replicas=args.replicas, methods=args.methods)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "plot":
        try:
            paths = write_plot_series(cfg.output_dir)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"wrote {len(paths)} series to {cfg.output_dir}", file=sys.stderr)
        return 0
    if args.command == "analyze":
        out = Collector()
        try:
            _, notes = _analyze(cfg, out)
        except (MorseViolation, GridTooCoarse, H01Violated) as exc:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1
        for note in notes:
            print(f"warning: {note}", file=sys.stderr)
        sys.stdout.write(out.render(LANDSCAPE_NAME))
        sys.stdout.write(out.render("assumptions.csv"))
        out.write(cfg.output_dir)
        return 0

    if args.command == "predict":
        cfg = cfg.with_overrides(methods=frozenset({"predict"}))
    elif args.command == "spectrum":
        chosen = cfg.methods & SPECTRAL
        cfg = cfg.with_overrides(methods=chosen or frozenset({"witten", "grushin", "direct"}))
    elif args.command == "simulate":
        cfg = cfg.with_overrides(methods=frozenset({"simulate"}))
    elif args.command == "compare":
        cfg = cfg.with_overrides(methods=cfg.methods | {"predict"})
    return run(cfg, dump_matrices=args.dump_matrices)


if __name__ == "__main__":
    sys.exit(main())
