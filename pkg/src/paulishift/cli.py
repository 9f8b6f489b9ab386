"""Command-line front end: analytic tables, Monte Carlo runs, verification.

Subcommands:

* ``analytic``   - tabulate closed-form MSEs and optimal parameters (or, with
  ``--nstar``, the crossover copy numbers) over grids of dimension, rate and
  copy budget;
* ``mse-curves`` - run the Monte Carlo MSE experiment described by a config
  file and write a CSV curve per (target, scheme, copy budget);
* ``dist``       - sample the clean/noise-mixed function distributions of a
  config's ensemble;
* ``verify``     - run the built-in invariant suite and report pass/fail.

File outputs land in ``--out`` (default: $PAULISHIFT_OUTDIR or the working
directory). Every file-producing run writes a manifest JSON naming its
outputs, the config hash and the tool version. CSV floats are printed with 17
significant digits; given the same config and seed the bytes are identical
for any worker count.

Exit codes: 0 success, 1 experiment or invariant failure, 2 usage or config
error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__, analytics, harness
from .circuits import build_ansatz, cyclic_observable
from .estimators import (DiagHessian, EstimatorSpec, Gradient, OffDiagHessian,
                         estimator_mean, target_kind)

_TARGET_NAMES = {"gradient": Gradient, "diag": DiagHessian,
                 "offdiag": OffDiagHessian}
_VERIFY_SEED = 20260822


def _fmt(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _out_dir(args) -> str:
    out = getattr(args, "out", None) or os.environ.get("PAULISHIFT_OUTDIR",
                                                       ".")
    os.makedirs(out, exist_ok=True)
    return out


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    master_seed: int | None
    started: str
    finished: str
    outputs: list[str]
    extra: dict

    def write(self, path: str) -> None:
        doc = {"config_hash": self.config_hash,
               "master_seed": self.master_seed,
               "tool_version": __version__,
               "started": self.started,
               "finished": self.finished,
               "outputs": self.outputs}
        doc.update(self.extra)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


# ── grid parsing ─────────────────────────────────────────────────────────────

def parse_int_grid(text: str) -> list[int]:
    """Comma list ("96,960") or inclusive range ("96:960" / "96:9600:96")."""
    text = text.strip()
    if not text:
        raise ValueError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) == 2:
            start, stop, step = int(parts[0]), int(parts[1]), 1
        elif len(parts) == 3:
            start, stop, step = (int(p) for p in parts)
        else:
            raise ValueError(f"bad range syntax {text!r}")
        if step <= 0 or stop < start:
            raise ValueError(f"bad range {text!r}")
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",")]


def parse_float_list(text: str) -> list[float]:
    values = [float(p) for p in text.strip().split(",") if p.strip()]
    if not values:
        raise ValueError("empty list")
    return values


# ── config files ─────────────────────────────────────────────────────────────

def load_config(path: str):
    """Parse an INI experiment config; returns (config, error list).

    Errors carry ``section.key`` field paths. A non-empty error list means
    the config is unusable and ``config`` is None.
    """
    parser = configparser.ConfigParser()
    errors: list[str] = []
    read = parser.read(path)
    if not read:
        return None, [f"{path}: cannot read config file"]

    def take(section, key, conv, default=None, required=False):
        try:
            raw = parser.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError):
            if required:
                errors.append(f"{section}.{key}: required")
            return default
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            errors.append(f"{section}.{key}: {exc}")
            return default

    n = take("circuit", "n", int, required=True)
    L = take("circuit", "L", int, required=True)
    axis = take("circuit", "axis_pattern", str, default="zyz")
    kind = take("noise", "kind", str, default="none")
    rate = take("noise", "rate", float, default=0.0)
    redraw = take("noise", "redraw_weights",
                  lambda s: s.lower() in ("1", "true", "yes"), default=False)
    grid = take("experiment", "nt_grid", parse_int_grid, required=True)
    sets = take("experiment", "parameter_sets", int, required=True)
    exps = take("experiment", "experiments_per_set", int, required=True)
    seed = take("experiment", "master_seed", int, required=True)
    schemes = take("experiment", "schemes",
                   lambda s: tuple(p.strip() for p in s.split(",")),
                   default=harness.SCHEMES)
    target_names = take("experiment", "targets",
                        lambda s: tuple(p.strip() for p in s.split(",")),
                        default=("gradient", "diag", "offdiag"))
    if errors:
        return None, errors

    targets = []
    for name in target_names:
        if name not in _TARGET_NAMES:
            errors.append(f"experiment.targets: unknown target {name!r}")
        else:
            targets.append(_TARGET_NAMES[name]())
    if grid is not None:
        for nt in grid:
            if nt % 12 != 0:
                errors.append(f"experiment.nt_grid: {nt} is not a multiple "
                              "of 12 (copies split over 2, 3 or 4 points)")
            elif nt < 48:
                errors.append(f"experiment.nt_grid: {nt} is below the "
                              "minimum of 48")
    if errors:
        return None, errors
    try:
        spec = harness.NoiseSpec(kind=kind, rate=rate, redraw_weights=redraw)
    except ValueError as exc:
        return None, [f"noise: {exc}"]
    try:
        config = harness.ExperimentConfig(
            n=n, L=L, noise=spec, nt_grid=tuple(grid), parameter_sets=sets,
            experiments_per_set=exps, master_seed=seed,
            schemes=tuple(schemes), targets=tuple(targets),
            axis_pattern=axis)
    except ValueError as exc:
        return None, [f"config: {exc}"]
    return config, []


def config_to_dict(config: harness.ExperimentConfig) -> dict:
    return {
        "n": config.n, "L": config.L, "axis_pattern": config.axis_pattern,
        "noise": {"kind": config.noise.kind, "rate": config.noise.rate,
                  "redraw_weights": config.noise.redraw_weights},
        "nt_grid": list(config.nt_grid),
        "parameter_sets": config.parameter_sets,
        "experiments_per_set": config.experiments_per_set,
        "master_seed": config.master_seed,
        "schemes": list(config.schemes),
        "targets": [target_kind(t) for t in config.targets],
        "observable": "".join(config.resolved_observable().letters),
    }


# ── analytic command ─────────────────────────────────────────────────────────

def _scheme_param(scheme: str, kind: str, d: int, nt: float, eta: float):
    if scheme == "ps":
        return 1.0, "sps"
    if scheme == "nsps":
        return analytics.lambda_opt(kind, d, nt).value, "sps"
    if scheme == "hsps":
        return analytics.lambda_opt_eta(kind, d, nt, eta).value, "sps"
    if scheme == "nfd":
        return analytics.epsilon_opt(kind, d, nt).value, "fd"
    return analytics.epsilon_opt(kind, d, nt, eta or None).value, "fd"


def cmd_analytic(args) -> int:
    targets = args.targets.split(",") if args.targets != "all" else \
        list(_TARGET_NAMES)
    for t in targets:
        if t not in _TARGET_NAMES:
            print(f"error: unknown target {t!r}", file=sys.stderr)
            return 2
    try:
        if args.d and args.n:
            raise ValueError("give either --d or --n, not both")
        if args.d:
            dims = parse_int_grid(args.d)
        elif args.n:
            dims = [2 ** q for q in parse_int_grid(args.n)]
        else:
            raise ValueError("need --d or --n")
        etas = parse_float_list(args.eta)
        for eta in etas:
            if not 0.0 <= eta < 1.0:
                raise ValueError(f"eta {eta} outside [0, 1)")
        for d in dims:
            if d < 2:
                raise ValueError(f"dimension {d} below 2")
        if not args.nstar:
            if not args.nt:
                raise ValueError("need --nt for the MSE table")
            grid = parse_int_grid(args.nt)
            if not grid:
                raise ValueError("empty --nt grid")
        else:
            grid = []
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    started = _now()
    if args.nstar:
        header = ["target", "d", "eta", "n_star_sps_exact",
                  "n_star_sps_small_eta", "n_star_fd"]
        rows = []
        for kind in targets:
            for d in dims:
                for eta in etas:
                    row: list = [kind, d, eta]
                    for fn in (analytics.n_star_sps_exact,
                               analytics.n_star_sps_small_eta,
                               analytics.n_star_fd):
                        try:
                            row.append(fn(kind, d, eta))
                        except analytics.CrossoverNotFound:
                            row.append("")
                    rows.append(row)
    else:
        header = ["target", "d", "eta", "n_total", "scheme", "param",
                  "mse_finite", "mse_approx", "mse_total"]
        rows = []
        for kind in targets:
            for d in dims:
                for eta in etas:
                    for nt in grid:
                        for scheme in harness.SCHEMES:
                            value, family = _scheme_param(scheme, kind, d,
                                                          nt, eta)
                            if family == "sps":
                                mse = analytics.mse_sps(kind, d, value, eta,
                                                        0.0, nt)
                            else:
                                mse = analytics.mse_fd(kind, d, value, eta,
                                                       0.0, nt)
                            rows.append([kind, d, eta, nt, scheme, value,
                                         mse.finite_copy, mse.approximation,
                                         mse.total])

    if args.csv:
        path = os.path.join(_out_dir(args), args.csv)
        _write_csv(path, header, rows)
        manifest = RunManifest(
            config_hash=config_digest({"command": "analytic",
                                       "targets": targets, "dims": dims,
                                       "etas": etas, "grid": grid,
                                       "nstar": bool(args.nstar)}),
            master_seed=None, started=started, finished=_now(),
            outputs=[os.path.basename(path)], extra={})
        manifest.write(path + ".manifest.json")
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return 0


# ── mse-curves command ───────────────────────────────────────────────────────

def cmd_mse_curves(args) -> int:
    config, errors = load_config(args.config)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    started = _now()
    results = harness.monte_carlo_mse(config, workers=args.workers)
    stem = os.path.splitext(os.path.basename(args.config))[0]
    out = _out_dir(args)
    csv_path = os.path.join(out, f"{stem}_mse.csv")
    rows = [[target_kind(r.target), r.scheme, r.n_total, r.mean, r.stderr]
            for r in results]
    _write_csv(csv_path, ["target", "scheme", "n_total", "mse_mean",
                          "mse_stderr"], rows)
    manifest = RunManifest(
        config_hash=config_digest(config_to_dict(config)),
        master_seed=config.master_seed, started=started, finished=_now(),
        outputs=[os.path.basename(csv_path)],
        extra={"eta_total": config.eta_total(),
               "config": config_to_dict(config)})
    manifest.write(os.path.join(out, f"{stem}.manifest.json"))
    print(f"wrote {csv_path}")
    return 0


# ── dist command ─────────────────────────────────────────────────────────────

def _weights_hash(weights) -> str:
    return config_digest([_fmt(w) for w in weights])[:16]


def cmd_dist(args) -> int:
    config, errors = load_config(args.config)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    started = _now()
    try:
        summary = harness.distribution_study(config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    stem = os.path.splitext(os.path.basename(args.config))[0]
    out = _out_dir(args)
    dist_path = os.path.join(out, f"{stem}_dist.csv")
    rows = [[i, f, g] for i, (f, g) in
            enumerate(zip(summary.f_samples, summary.g_samples))]
    _write_csv(dist_path, ["set_index", "f", "g"], rows)

    edges = np.linspace(-1.0, 1.0, 41)
    count_f, _ = np.histogram(summary.f_samples, bins=edges)
    count_g, _ = np.histogram(summary.g_samples, bins=edges)
    hist_path = os.path.join(out, f"{stem}_hist.csv")
    _write_csv(hist_path, ["bin_left", "bin_right", "count_f", "count_g"],
               [[edges[i], edges[i + 1], int(count_f[i]), int(count_g[i])]
                for i in range(len(count_f))])

    extra = {"eta_total": summary.eta_total, "var_f": summary.var_f,
             "var_g": summary.var_g, "r_var": summary.r_var,
             "config": config_to_dict(config)}
    if config.noise.kind == "cnot_pauli":
        if config.noise.redraw_weights:
            extra["weights_hashes"] = [
                _weights_hash(config.noise_for_set(s).weights)
                for s in range(config.parameter_sets)]
        else:
            extra["weights_hash"] = _weights_hash(
                config.noise_for_set(0).weights)
    manifest = RunManifest(
        config_hash=config_digest(config_to_dict(config)),
        master_seed=config.master_seed, started=started, finished=_now(),
        outputs=[os.path.basename(dist_path), os.path.basename(hist_path)],
        extra=extra)
    manifest.write(os.path.join(out, f"{stem}.manifest.json"))
    r = "undefined" if summary.r_var is None else f"{summary.r_var:.4g}"
    print(f"wrote {dist_path} (eta_total={summary.eta_total:.6g}, "
          f"var_f={summary.var_f:.4g}, var_g={summary.var_g:.4g}, r_var={r})")
    return 0


# ── verify command ───────────────────────────────────────────────────────────

def _inv_stationarity(rng) -> tuple[bool, str]:
    """Optimal lambdas zero the MSE lambda-derivative; grids find no better."""
    worst = 0.0
    for _ in range(40):
        kind = str(rng.choice(analytics.TARGET_KINDS))
        d = 2 ** int(rng.integers(1, 9))
        nt = float(10 ** rng.uniform(1.2, 6))
        eta = float(rng.uniform(0.0, 0.9))
        for lam_val, use_eta in (
                (analytics.lambda_opt(kind, d, nt).value, 0.0),
                (analytics.lambda_opt_eta(kind, d, nt, eta).value, eta)):
            base = analytics.mse_sps(kind, d, lam_val, use_eta, 0.0, nt).total
            # The MSE is quadratic in lambda, so evaluate the grid from its
            # two closed-form pieces instead of 1e4 separate calls.
            one = analytics.mse_sps(kind, d, 1.0, use_eta, 0.0, nt)
            moment = analytics.two_design_moments(
                round(math.log2(d))).moment_for(kind)
            grid = np.linspace(lam_val * 0.25, lam_val * 4.0, 10 ** 4)
            vals = (one.finite_copy * grid ** 2
                    + (1.0 - (1.0 - use_eta) * grid) ** 2 * moment)
            if vals.min() < base - 1e-15:
                return False, (f"grid beats lambda* for {kind} d={d} "
                               f"eta={use_eta:.3f}")
            h = max(lam_val * 1e-6, 1e-9)
            slope = (analytics.mse_sps(kind, d, lam_val + h, use_eta, 0.0,
                                       nt).total
                     - analytics.mse_sps(kind, d, lam_val - h, use_eta, 0.0,
                                         nt).total) / (2 * h)
            scale = analytics.mse_sps(kind, d, lam_val, use_eta, 0.0,
                                      nt).total / max(lam_val, 1e-6)
            worst = max(worst, abs(slope) / scale)
    ok = worst < 1e-6
    return ok, f"max |dMSE/dlambda| / scale = {worst:.2e}"


def _inv_nstar_roots(rng) -> tuple[bool, str]:
    """Exact crossings equalize the two MSEs; small-eta forms are limits."""
    worst = 0.0
    for _ in range(30):
        kind = str(rng.choice(analytics.TARGET_KINDS))
        d = 2 ** int(rng.integers(1, 9))
        eta = float(rng.uniform(1e-3, 0.9))
        ns = analytics.n_star_sps_exact(kind, d, eta)
        lam = analytics.lambda_opt(kind, d, ns).value
        a = analytics.mse_sps(kind, d, lam, eta, 0.0, ns).total
        b = analytics.mse_sps(kind, d, 1.0, eta, 0.0, ns).total
        worst = max(worst, abs(a - b) / b)
    for kind in analytics.TARGET_KINDS:
        ratio = (analytics.n_star_sps_small_eta(kind, 16, 1e-4)
                 / analytics.n_star_sps_exact(kind, 16, 1e-4))
        if abs(ratio - 1.0) > 5e-3:
            return False, f"small-eta ratio {ratio} off for {kind}"
        h0 = analytics._crossing_h(16, 1e-9)
        if abs(h0 - 32.0) > 32.0 * 1e-6:
            return False, f"h(d, eta->0) = {h0}, want 2d"
    ok = worst < 1e-9
    return ok, f"max crossing residual {worst:.2e}"


def _inv_epsilon_asymptotic(rng) -> tuple[bool, str]:
    """Numeric optimal steps approach the closed-form large-budget law."""
    worst = 0.0
    for kind in analytics.TARGET_KINDS:
        for d in (4, 16):
            num = analytics.epsilon_opt(kind, d, 1e12).value
            asy = analytics.epsilon_opt_asymptotic(kind, d, 1e12)
            worst = max(worst, abs(num - asy) / asy)
    ok = worst < 0.01
    return ok, f"max relative gap {worst:.2e}"


def _inv_noise_floors(rng) -> tuple[bool, str]:
    """Known-noise scaling kills the floor; finite differences cannot.

    The known-noise scheme's approximation error must vanish far below the
    naive floor at huge budgets with the total strictly decreasing, while
    every finite-difference approximation error stays at or above the floor.
    """
    for kind in analytics.TARGET_KINDS:
        for d, eta in ((2, 0.2), (16, 0.226), (64, 0.5)):
            floor = analytics.noise_bias(kind, d, eta)
            totals = []
            for k in range(2, 10):
                nt = 10.0 ** k
                lam = analytics.lambda_opt_eta(kind, d, nt, eta).value
                mse = analytics.mse_sps(kind, d, lam, eta, 0.0, nt)
                totals.append(mse.total)
                if k == 9 and mse.approximation > 1e-8 * floor:
                    return False, (f"HSPS approximation {mse.approximation} "
                                   f"above 1e-8 floor at {kind} d={d}")
            if any(b >= a for a, b in zip(totals, totals[1:])):
                return False, f"HSPS total not decreasing ({kind}, d={d})"
            if totals[-1] > 1e-5 * totals[0]:
                return False, f"HSPS total not vanishing ({kind}, d={d})"
            for nt in (1e2, 1e4, 1e6, 1e8):
                eps = analytics.epsilon_opt(kind, d, nt, eta).value
                approx = analytics.mse_fd(kind, d, eps, eta, 0.0,
                                          nt).approximation
                if approx < floor * (1.0 - 1e-9):
                    return False, (f"FD approximation dips below the floor "
                                   f"at {kind} d={d} nt={nt:g}")
    return True, "floors behave as predicted"


def _inv_two_design(rng) -> tuple[bool, str]:
    """Sampled ensemble moments match the closed forms."""
    check = harness.verify_two_design(2, 6, 1500, rng)
    an = check.analytic
    if abs(check.mean_f.value) > 3 * check.mean_f.stderr:
        return False, f"<f> = {check.mean_f.value} not ~0"
    if abs(check.mean_f2.value - an.mean_f2) > 3 * check.mean_f2.stderr:
        return False, f"<f^2> = {check.mean_f2.value} vs {an.mean_f2}"
    for est, exact, name in ((check.mean_grad2, an.mean_grad2, "grad"),
                             (check.mean_hess_diag2, an.mean_hess_diag2,
                              "diag"),
                             (check.mean_hess_off2, an.mean_hess_off2,
                              "off")):
        if abs(est.value - exact) > max(0.10 * exact, 3 * est.stderr):
            return False, f"<{name}^2> = {est.value} vs {exact}"
    return True, f"5 moments OK at n=2, L=6, {check.samples} samples"


def _inv_estimator_exactness(rng) -> tuple[bool, str]:
    """Shift-rule derivatives match tiny central differences exactly."""
    worst = 0.0
    for _ in range(6):
        n = int(rng.integers(1, 4))
        L = int(rng.integers(2, 4))
        layout = build_ansatz(n, L)
        obs = cyclic_observable(n)
        theta = harness.sample_parameter_set(layout, rng)
        spec = EstimatorSpec("ps", Gradient(1, 2, 2))
        exact = estimator_mean(spec, layout, theta, None, obs)
        tiny = estimator_mean(EstimatorSpec("fd", Gradient(1, 2, 2),
                                            epsilon=1e-6),
                              layout, theta, None, obs)
        worst = max(worst, abs(exact - tiny))
        eps = float(rng.uniform(0.1, 2.0))
        fd = estimator_mean(EstimatorSpec("fd", Gradient(1, 2, 2),
                                          epsilon=eps),
                            layout, theta, None, obs)
        sinc = math.sin(eps / 2.0) / (eps / 2.0)
        worst = max(worst, abs(fd - sinc * exact))
    ok = worst < 1e-6
    return ok, f"max deviation {worst:.2e}"


def _inv_mc_oracle(rng) -> tuple[bool, str]:
    """A small Monte Carlo run tracks the closed-form MSE prediction."""
    eta = 0.226
    config = harness.ExperimentConfig(
        n=4, L=5, noise=harness.NoiseSpec("global_depolarizing", eta),
        nt_grid=(96, 960), parameter_sets=60, experiments_per_set=80,
        master_seed=_VERIFY_SEED, schemes=("ps", "hsps"),
        targets=(Gradient(),))
    results = harness.monte_carlo_mse(config)
    for r in results:
        if r.scheme != "ps":
            continue
        pred = analytics.mse_sps("gradient", 16, 1.0, eta, 0.0,
                                 r.n_total).total
        if abs(r.mean - pred) > max(3 * r.stderr, 0.10 * pred):
            return False, (f"PS MSE {r.mean:.5f} vs predicted {pred:.5f} "
                           f"at nt={r.n_total}")
    return True, "Monte Carlo PS curve matches the closed form"


_QUICK_INVARIANTS = [
    ("stationarity", _inv_stationarity),
    ("nstar_roots", _inv_nstar_roots),
    ("epsilon_asymptotic", _inv_epsilon_asymptotic),
    ("noise_floors", _inv_noise_floors),
]
_FULL_INVARIANTS = _QUICK_INVARIANTS + [
    ("two_design_moments", _inv_two_design),
    ("estimator_exactness", _inv_estimator_exactness),
    ("mc_oracle", _inv_mc_oracle),
]


def cmd_verify(args) -> int:
    suite = _QUICK_INVARIANTS if args.quick else _FULL_INVARIANTS
    rng = np.random.default_rng(_VERIFY_SEED)
    report = []
    all_ok = True
    for name, fn in suite:
        t0 = time.time()
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crashed invariant is a failed invariant
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        seconds = time.time() - t0
        report.append({"name": name, "passed": bool(ok), "detail": detail,
                       "seconds": round(seconds, 3)})
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail} "
              f"({seconds:.2f}s)")
    doc = {"passed": all_ok, "quick": bool(args.quick),
           "tool_version": __version__, "seed": _VERIFY_SEED,
           "invariants": report}
    if args.json:
        path = os.path.join(_out_dir(args), args.json)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {path}")
    return 0 if all_ok else 1


# ── entry point ──────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paulishift",
        description="Noisy-circuit derivative estimator benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analytic",
                          help="tabulate closed-form MSEs and parameters")
    p_an.add_argument("--targets", default="all",
                      help="comma list of gradient,diag,offdiag (default all)")
    p_an.add_argument("--d", help="Hilbert dimensions, e.g. 4,16")
    p_an.add_argument("--n", help="qubit counts, e.g. 2:8 (d = 2^n)")
    p_an.add_argument("--eta", required=True,
                      help="total error rates, comma list")
    p_an.add_argument("--nt", help="copy grid, e.g. 96:9600:96")
    p_an.add_argument("--nstar", action="store_true",
                      help="tabulate crossover copy numbers instead of MSEs")
    p_an.add_argument("--csv", help="output CSV filename (default stdout)")
    p_an.add_argument("--out", help="output directory")
    p_an.set_defaults(fn=cmd_analytic)

    p_mse = sub.add_parser("mse-curves",
                           help="Monte Carlo MSE curves from a config file")
    p_mse.add_argument("config")
    p_mse.add_argument("--workers", type=int, default=1)
    p_mse.add_argument("--out", help="output directory")
    p_mse.set_defaults(fn=cmd_mse_curves)

    p_dist = sub.add_parser("dist",
                            help="sample f/g distributions from a config")
    p_dist.add_argument("config")
    p_dist.add_argument("--out", help="output directory")
    p_dist.set_defaults(fn=cmd_dist)

    p_ver = sub.add_parser("verify", help="run the invariant suite")
    p_ver.add_argument("--quick", action="store_true",
                       help="closed-form invariants only")
    p_ver.add_argument("--json", help="also write a JSON report (filename)")
    p_ver.add_argument("--out", help="output directory")
    p_ver.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
