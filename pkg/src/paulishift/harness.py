"""Seeded Monte Carlo experiments over random circuit ensembles.

Responsibilities: draw Haar-random parameter sets, run finite-shot estimator
experiments for the five schemes (PS, NSPS, HSPS, NFD, HFD) over a copy-number
grid, locate empirical crossings between scheme MSE curves, study the clean
and noise-mixed function distributions, and Monte Carlo check the ensemble
moment identities.

Reproducibility contract: every random draw comes from a named substream of
``SeedSequence(master_seed, spawn_key=...)``. Spawn keys are

* ``(0, s)`` - circuit parameters of set ``s``;
* ``(1, s)`` - per-set Pauli channel weights when redrawing, ``(1,)`` for the
  shared fixed weights;
* ``(2, s)`` - all shot draws of set ``s``, consumed in one fixed enumeration
  order (target, grid point, scheme family, evaluation point; one vectorized
  binomial over the experiments per evaluation point).

Each parameter set is therefore fully independent of every other, and results
are reduced in set order, so outputs are bit-identical for any worker count.

Variance note: the three scaled-shift schemes evaluate the same shifted
circuits, so one draw per evaluation point is shared between PS, NSPS and
HSPS (their estimates differ only by the scaling factor). This leaves each
scheme's MSE unbiased while making paired comparisons, crossings in
particular, much less noisy. The finite-difference schemes use their own
evaluation points and draws.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import analytics, noise as noise_mod
from .circuits import (AnsatzLayout, ParameterPoint, PauliObservable,
                       build_ansatz, cyclic_observable, evolve, expectation)
from .estimators import (DerivativeTarget, DiagHessian, EstimatorSpec,
                         Gradient, OffDiagHessian, evaluation_points,
                         point_count, target_kind)

SCHEMES = ("ps", "nsps", "hsps", "nfd", "hfd")
_SPS_SCHEMES = ("ps", "nsps", "hsps")
_FD_SCHEMES = ("nfd", "hfd")
NOISE_KINDS = ("none", "global_depolarizing", "cnot_depolarizing",
               "cnot_pauli")

_STREAM_PARAMS = 0
_STREAM_NOISE = 1
_STREAM_SHOTS = 2


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for the named substream of the master seed."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(seq))


# ── configuration ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class NoiseSpec:
    """Which channel to attach and at what strength.

    ``rate`` is the per-CNOT rate eta0 for the CNOT-attached channels and the
    total rate eta for the global one; ignored for "none".
    ``redraw_weights`` makes the Pauli channel draw fresh weights per
    parameter set instead of sharing one fixed draw.
    """

    kind: str = "none"
    rate: float = 0.0
    redraw_weights: bool = False

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
        if self.kind != "none" and not 0.0 < self.rate < 1.0:
            raise ValueError("noise rate must lie in (0, 1)")
        if self.redraw_weights and self.kind != "cnot_pauli":
            raise ValueError("redraw_weights only applies to cnot_pauli")


_DEFAULT_TARGETS = (Gradient(), DiagHessian(), OffDiagHessian())


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a Monte Carlo run depends on, seed included."""

    n: int
    L: int
    noise: NoiseSpec
    nt_grid: tuple[int, ...]
    parameter_sets: int
    experiments_per_set: int
    master_seed: int
    schemes: tuple[str, ...] = SCHEMES
    targets: tuple[DerivativeTarget, ...] = _DEFAULT_TARGETS
    axis_pattern: str = "zyz"
    observable: PauliObservable | None = None  # None: cyclic X,Y,Z pattern

    def __post_init__(self):
        if not self.nt_grid:
            raise ValueError("nt_grid must not be empty")
        for nt in self.nt_grid:
            if nt % 12 != 0 or nt < 48:
                raise ValueError(
                    f"nt_grid entries must be multiples of 12 and >= 48, "
                    f"got {nt}")
        if self.parameter_sets < 1 or self.experiments_per_set < 1:
            raise ValueError("parameter_sets and experiments_per_set "
                             "must be >= 1")
        if not self.schemes:
            raise ValueError("scheme list must not be empty")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ValueError("duplicate scheme")
        if not self.targets:
            raise ValueError("target list must not be empty")
        obs = self.resolved_observable()
        if all(c == "I" for c in obs.letters):
            raise ValueError("observable must be traceless")
        self.layout()  # validates n, L, axis pattern

    def layout(self) -> AnsatzLayout:
        return build_ansatz(self.n, self.L, self.axis_pattern)

    def resolved_observable(self) -> PauliObservable:
        return self.observable or cyclic_observable(self.n)

    def eta_total(self) -> float:
        if self.noise.kind == "none":
            return 0.0
        if self.noise.kind == "global_depolarizing":
            return self.noise.rate
        return noise_mod.total_error_rate(self.noise.rate, self.n,
                                          self.L).total

    def noise_for_set(self, set_index: int):
        """The channel applied to this parameter set's circuits."""
        kind = self.noise.kind
        if kind == "none":
            return noise_mod.NoNoise()
        if kind == "global_depolarizing":
            return noise_mod.GlobalDepolarizing(self.noise.rate)
        if kind == "cnot_depolarizing":
            return noise_mod.CnotDepolarizing(self.noise.rate)
        key = ((_STREAM_NOISE, set_index) if self.noise.redraw_weights
               else (_STREAM_NOISE,))
        rng = substream(self.master_seed, *key)
        weights = noise_mod.random_pauli_weights(self.noise.rate, rng)
        return noise_mod.CnotPauliChannel(tuple(weights))


# ── parameter sampling ───────────────────────────────────────────────────────

def sample_parameter_set(layout: AnsatzLayout,
                         rng: np.random.Generator) -> ParameterPoint:
    """Draw angles making every ZYZ block Haar random up to global phase.

    Per block, three uniforms (u0, u1, u2) become alpha = 2 pi u0,
    beta = arccos(1 - 2 u1), gamma = 2 pi u2; the arccos map gives beta the
    sin(beta)/2 density the Haar measure requires. Blocks are drawn layer by
    layer, qubit by qubit.
    """
    theta = np.empty(layout.parameter_count)
    for layer in range(1, layout.L + 1):
        for qubit in range(1, layout.n + 1):
            u = rng.random(3)
            base = layout.flat_index(layer, qubit, 1)
            theta[base] = 2.0 * math.pi * u[0]
            theta[base + 1] = math.acos(1.0 - 2.0 * u[1])
            theta[base + 2] = 2.0 * math.pi * u[2]
    return ParameterPoint(theta)


# ── Monte Carlo MSE curves ───────────────────────────────────────────────────

@dataclass(frozen=True)
class MseEstimate:
    """Mean squared error of one scheme at one copy budget."""

    scheme: str
    target: DerivativeTarget
    n_total: int
    mean: float
    stderr: float

    def __post_init__(self):
        if self.mean < 0 or self.stderr < 0:
            raise ValueError("mean and stderr must be nonnegative")


def _scheme_spec(scheme: str, target: DerivativeTarget, d: int, nt: int,
                 eta: float) -> EstimatorSpec:
    """Resolve a scheme name to an estimator at this copy budget."""
    kind = target_kind(target)
    if scheme == "ps":
        return EstimatorSpec("ps", target)
    if scheme == "nsps":
        return EstimatorSpec("sps", target,
                             lam=analytics.lambda_opt(kind, d, nt).value)
    if scheme == "hsps":
        return EstimatorSpec("sps", target,
                             lam=analytics.lambda_opt_eta(kind, d, nt,
                                                          eta).value)
    if scheme == "nfd":
        return EstimatorSpec("fd", target,
                             epsilon=analytics.epsilon_opt(kind, d, nt).value)
    if scheme == "hfd":
        eps = analytics.epsilon_opt(kind, d, nt,
                                    eta if eta > 0 else None).value
        return EstimatorSpec("fd", target, epsilon=eps)
    raise ValueError(f"unknown scheme {scheme!r}")


def _canonical(shifts) -> tuple:
    return tuple(sorted(shifts.items()))


class _FunctionCache:
    """Exact expectations at shifted parameter points, one circuit per point."""

    def __init__(self, layout, theta, obs):
        self.layout = layout
        self.theta = theta
        self.obs = obs
        self._values: dict[tuple, float] = {}

    def value(self, shifts, noise) -> float:
        key = (noise is None, _canonical(shifts))
        if key not in self._values:
            point = self.theta.shifted(self.layout, shifts)
            self._values[key] = expectation(
                evolve(self.layout, point, noise), self.obs)
        return self._values[key]


def _binomial_estimates(f: float, shots: int, rng: np.random.Generator,
                        size: int) -> np.ndarray:
    """Vector of finite-shot estimates of a +/-1 observable with mean f."""
    f = min(1.0, max(-1.0, f))
    draws = rng.binomial(shots, (1.0 + f) / 2.0, size=size)
    return (2.0 * draws - shots) / shots


def _run_set(config: ExperimentConfig, set_index: int) -> np.ndarray:
    """Per-set mean squared errors, indexed (target, scheme, grid point)."""
    layout = config.layout()
    obs = config.resolved_observable()
    d = 2 ** config.n
    eta = config.eta_total()
    n_exp = config.experiments_per_set

    theta = sample_parameter_set(
        layout, substream(config.master_seed, _STREAM_PARAMS, set_index))
    channel = config.noise_for_set(set_index)
    if isinstance(channel, noise_mod.NoNoise):
        channel = None
    cache = _FunctionCache(layout, theta, obs)
    shots_rng = substream(config.master_seed, _STREAM_SHOTS, set_index)

    sps_schemes = [s for s in config.schemes if s in _SPS_SCHEMES]
    out = np.empty((len(config.targets), len(config.schemes),
                    len(config.nt_grid)))
    for t_idx, target in enumerate(config.targets):
        true_value = sum(
            coeff * cache.value(shifts, None)
            for shifts, coeff in evaluation_points(EstimatorSpec("ps", target)))
        per_point = {nt: nt // point_count(target) for nt in config.nt_grid}
        for nt_idx, nt in enumerate(config.nt_grid):
            estimates: dict[str, np.ndarray] = {}
            if sps_schemes:
                # Shared draws: PS evaluation points, rescaled per scheme.
                points = evaluation_points(EstimatorSpec("ps", target))
                sampled = [
                    (coeff, _binomial_estimates(cache.value(shifts, channel),
                                                per_point[nt], shots_rng,
                                                n_exp))
                    for shifts, coeff in points]
                combination = sum(c * v for c, v in sampled)
                for scheme in sps_schemes:
                    spec = _scheme_spec(scheme, target, d, nt, eta)
                    lam = 1.0 if spec.scheme == "ps" else spec.lam
                    estimates[scheme] = lam * combination
            for scheme in _FD_SCHEMES:
                if scheme not in config.schemes:
                    continue
                spec = _scheme_spec(scheme, target, d, nt, eta)
                total = np.zeros(n_exp)
                for shifts, coeff in evaluation_points(spec):
                    total += coeff * _binomial_estimates(
                        cache.value(shifts, channel), per_point[nt],
                        shots_rng, n_exp)
                estimates[scheme] = total
            for s_idx, scheme in enumerate(config.schemes):
                err = estimates[scheme] - true_value
                out[t_idx, s_idx, nt_idx] = float(np.mean(err * err))
    return out


def monte_carlo_mse(config: ExperimentConfig,
                    workers: int | None = None) -> list[MseEstimate]:
    """Estimate the MSE of every configured scheme over the copy grid.

    Squared errors are measured against the exact noiseless derivative,
    averaged over experiments within each parameter set and then over sets;
    stderr is the standard error of the per-set means. Results are identical
    for any worker count.
    """
    indices = range(config.parameter_sets)
    if workers is None or workers <= 1:
        per_set = [_run_set(config, s) for s in indices]
    else:
        chunk = max(1, config.parameter_sets // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_set = list(pool.map(partial(_run_set, config), indices,
                                    chunksize=chunk))
    stacked = np.stack(per_set)  # (set, target, scheme, nt)
    means = stacked.mean(axis=0)
    if config.parameter_sets > 1:
        errs = stacked.std(axis=0, ddof=1) / math.sqrt(config.parameter_sets)
    else:
        errs = np.zeros_like(means)
    results = []
    for t_idx, target in enumerate(config.targets):
        for s_idx, scheme in enumerate(config.schemes):
            for nt_idx, nt in enumerate(config.nt_grid):
                results.append(MseEstimate(
                    scheme=scheme, target=target, n_total=nt,
                    mean=float(means[t_idx, s_idx, nt_idx]),
                    stderr=float(errs[t_idx, s_idx, nt_idx])))
    return results


# ── empirical crossings ──────────────────────────────────────────────────────

@dataclass(frozen=True)
class CrossingEstimate:
    """Interpolated copy number where one MSE curve overtakes another."""

    n_star: float
    uncertainty: float  # half the bracketing grid interval


def empirical_n_star(candidate: list[MseEstimate],
                     baseline: list[MseEstimate]) -> CrossingEstimate:
    """Locate where the candidate curve's MSE rises above the baseline's.

    Finds the last grid point where candidate - baseline is negative beyond
    the combined standard error and the first where it is positive, then
    interpolates the difference linearly in log copy number between them.
    A difference of exactly zero at a grid point returns that point.
    """
    cand = sorted(candidate, key=lambda e: e.n_total)
    base = sorted(baseline, key=lambda e: e.n_total)
    grid = [e.n_total for e in cand]
    if grid != [e.n_total for e in base]:
        raise ValueError("curves are not on the same copy-number grid")
    diff = np.array([c.mean - b.mean for c, b in zip(cand, base)])
    err = np.array([math.hypot(c.stderr, b.stderr)
                    for c, b in zip(cand, base)])

    def half_step(i: int) -> float:
        if i + 1 < len(grid):
            return 0.5 * (grid[i + 1] - grid[i])
        return 0.5 * (grid[i] - grid[i - 1])

    exact = np.flatnonzero(diff == 0.0)
    if exact.size:
        i = int(exact[0])
        return CrossingEstimate(n_star=float(grid[i]),
                                uncertainty=half_step(i))
    below = np.flatnonzero(diff < -err)
    if not below.size:
        raise analytics.CrossoverNotFound(
            "candidate curve is never below the baseline beyond stderr")
    lo = int(below.max())
    after = np.flatnonzero(diff > 0)
    after = after[after > lo]
    if not after.size:
        raise analytics.CrossoverNotFound(
            "candidate curve never rises above the baseline after its "
            "confidently lower stretch")
    hi = int(after[0])
    x_lo, x_hi = math.log(grid[lo]), math.log(grid[hi])
    frac = diff[lo] / (diff[lo] - diff[hi])
    n_star = math.exp(x_lo + frac * (x_hi - x_lo))
    return CrossingEstimate(n_star=float(n_star),
                            uncertainty=0.5 * (grid[hi] - grid[lo]))


# ── distribution study ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class DistributionSummary:
    """Clean and noise-mixed function samples over the parameter ensemble."""

    f_samples: np.ndarray
    g_samples: np.ndarray
    var_f: float
    var_g: float
    r_var: float | None  # None when var_g is numerically zero
    eta_total: float


def distribution_study(config: ExperimentConfig) -> DistributionSummary:
    """Sample the clean function f and the noise-mixed component g per set.

    f is the exact noiseless expectation; g is recovered from the noisy one
    by inverting the mixing at the config's total error rate. The variance
    ratio var_f/var_g is left undefined when g is constant to numerical
    precision (the global channel mixes in an exactly traceless state).
    """
    eta = config.eta_total()
    if eta <= 1e-12:
        raise ValueError(
            "distribution study needs noise with a nonzero total rate")
    layout = config.layout()
    obs = config.resolved_observable()
    f_vals = np.empty(config.parameter_sets)
    g_vals = np.empty(config.parameter_sets)
    for s in range(config.parameter_sets):
        theta = sample_parameter_set(
            layout, substream(config.master_seed, _STREAM_PARAMS, s))
        channel = config.noise_for_set(s)
        f = expectation(evolve(layout, theta, None), obs)
        f_noisy = expectation(evolve(layout, theta, channel), obs)
        f_vals[s] = f
        g_vals[s] = (f_noisy - (1.0 - eta) * f) / eta
    var_f = float(np.var(f_vals))
    var_g = float(np.var(g_vals))
    r_var = var_f / var_g if var_g > 1e-15 else None
    return DistributionSummary(f_samples=f_vals, g_samples=g_vals,
                               var_f=var_f, var_g=var_g, r_var=r_var,
                               eta_total=eta)


# ── two-design moment verification ───────────────────────────────────────────

@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float


@dataclass(frozen=True)
class TwoDesignCheck:
    """Monte Carlo moment estimates next to their closed-form targets."""

    analytic: analytics.TwoDesignMoments
    mean_f: MomentEstimate
    mean_f2: MomentEstimate
    mean_grad2: MomentEstimate
    mean_hess_diag2: MomentEstimate
    mean_hess_off2: MomentEstimate
    samples: int


def _moment_est(values: np.ndarray) -> MomentEstimate:
    return MomentEstimate(
        value=float(values.mean()),
        stderr=float(values.std(ddof=1) / math.sqrt(len(values))))


def verify_two_design(n: int, L: int, samples: int,
                      rng: np.random.Generator | int,
                      layer: int | None = None) -> TwoDesignCheck:
    """Monte Carlo check of the moment identities on the Haar-block ansatz.

    Evaluates the exact noiseless function and its derivatives at a bulk
    parameter location over random parameter sets and compares the sample
    moments with the ideal two-design values. The identities assume the
    probed gate is surrounded by scrambling sub-circuits on both sides, so
    the default probe sits in the middle layer, where both sides are as
    deep as the circuit allows; shallower locations (e.g. layer 2, the
    spot the error experiments probe) can be selected explicitly and show
    larger finite-depth deviations at small n. Needs L >= 2 so a
    sandwiched layer exists.
    """
    if L < 2:
        raise ValueError("need L >= 2 so the probed layer is sandwiched")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if layer is None:
        layer = L // 2 + 1
    if not 1 <= layer <= L:
        raise ValueError(f"probe layer {layer} outside 1..{L}")
    if isinstance(rng, (int, np.integer)):
        rng = substream(int(rng), _STREAM_PARAMS)
    layout = build_ansatz(n, L)
    obs = cyclic_observable(n)
    if n >= 2:
        off = OffDiagHessian(layer=layer, qubit2=2, layer2=layer)
    else:
        off = OffDiagHessian(layer=layer, qubit2=1,
                             layer2=layer - 1 if layer > 1 else layer + 1)
    targets = {
        "grad": EstimatorSpec("ps", Gradient(layer=layer)),
        "diag": EstimatorSpec("ps", DiagHessian(layer=layer)),
        "off": EstimatorSpec("ps", off),
    }
    f = np.empty(samples)
    derivs = {name: np.empty(samples) for name in targets}
    for i in range(samples):
        theta = sample_parameter_set(layout, rng)
        cache = _FunctionCache(layout, theta, obs)
        f[i] = cache.value({}, None)
        for name, spec in targets.items():
            derivs[name][i] = sum(
                coeff * cache.value(shifts, None)
                for shifts, coeff in evaluation_points(spec))
    return TwoDesignCheck(
        analytic=analytics.two_design_moments(n),
        mean_f=_moment_est(f),
        mean_f2=_moment_est(f * f),
        mean_grad2=_moment_est(derivs["grad"] ** 2),
        mean_hess_diag2=_moment_est(derivs["diag"] ** 2),
        mean_hess_off2=_moment_est(derivs["off"] ** 2),
        samples=samples)
