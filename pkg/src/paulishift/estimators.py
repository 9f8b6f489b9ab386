"""Finite-shot sampling and derivative estimators.

Three estimator families cover each derivative target:

* the parameter-shift (PS) rule, exact in expectation for Pauli-encoded
  rotations: gradients from shifts of +/- pi/2, diagonal second derivatives
  from the collapsed 3-point rule with shifts of +/- pi, and off-diagonal
  second derivatives from the 4-point rule;
* the scaled parameter-shift (SPS) family, the PS combination multiplied by a
  tunable scalar lambda;
* the centralized finite-difference (FD) family with step epsilon.

Shots are simulated by Bernoulli draws from the exact outcome probability,
never by trajectory sampling: a +/-1 observable with mean f yields heads with
probability (1 + f)/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import (AnsatzLayout, DensityMatrix, ParameterPoint,
                       PauliObservable, evolve, expectation)

SCHEME_FAMILIES = ("ps", "sps", "fd")


# ── derivative targets ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class Gradient:
    """First derivative in the angle at (qubit, layer, slot), 1-based."""

    qubit: int = 1
    layer: int = 2
    slot: int = 2


@dataclass(frozen=True)
class DiagHessian:
    """Second derivative in one angle at (qubit, layer, slot)."""

    qubit: int = 1
    layer: int = 2
    slot: int = 2


@dataclass(frozen=True)
class OffDiagHessian:
    """Mixed second derivative in two distinct angles."""

    qubit: int = 1
    layer: int = 2
    slot: int = 2
    qubit2: int = 2
    layer2: int = 2
    slot2: int = 2

    def __post_init__(self):
        if (self.qubit, self.layer, self.slot) == (
                self.qubit2, self.layer2, self.slot2):
            raise ValueError("off-diagonal target needs two distinct angles")


DerivativeTarget = Gradient | DiagHessian | OffDiagHessian

# Fixed codes used for RNG keying and closed-form dispatch.
TARGET_KINDS = ("gradient", "diag", "offdiag")


def target_kind(target: DerivativeTarget) -> str:
    if isinstance(target, Gradient):
        return "gradient"
    if isinstance(target, DiagHessian):
        return "diag"
    if isinstance(target, OffDiagHessian):
        return "offdiag"
    raise TypeError(f"not a derivative target: {target!r}")


def point_count(target: DerivativeTarget) -> int:
    """Number of circuit evaluation points the estimators spend shots on."""
    return {"gradient": 2, "diag": 3, "offdiag": 4}[target_kind(target)]


# ── estimator choice ─────────────────────────────────────────────────────────

@dataclass(frozen=True)
class EstimatorSpec:
    """Scheme (ps | sps | fd) with its free parameter, plus the target."""

    scheme: str
    target: DerivativeTarget
    lam: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEME_FAMILIES:
            raise ValueError(f"scheme must be one of {SCHEME_FAMILIES}")
        if self.scheme == "sps":
            if self.lam is None or not math.isfinite(self.lam) or self.lam <= 0:
                raise ValueError("sps needs a finite positive lambda")
        if self.scheme == "fd":
            if self.epsilon is None or not 0.0 < self.epsilon < 2.0 * math.pi:
                raise ValueError("fd needs epsilon in (0, 2*pi)")


@dataclass(frozen=True)
class ShotBudget:
    """Total copies and the equal per-point share after floor division."""

    n_total: int
    per_point: int
    points: int

    @property
    def remainder(self) -> int:
        return self.n_total - self.per_point * self.points


def shot_allocation(target: DerivativeTarget, n_total: int) -> ShotBudget:
    """Split a total copy number equally over the target's evaluation points.

    The remainder of the floor division is discarded; grids of n_total that
    are multiples of 12 (the lcm of 2, 3 and 4) avoid any waste.
    """
    points = point_count(target)
    if n_total < points:
        raise ValueError(
            f"n_total={n_total} cannot cover {points} evaluation points")
    return ShotBudget(n_total=n_total, per_point=n_total // points,
                      points=points)


# ── evaluation-point tables ──────────────────────────────────────────────────

def _loc(target) -> tuple[int, int, int]:
    return (target.qubit, target.layer, target.slot)


def _loc2(target: OffDiagHessian) -> tuple[int, int, int]:
    return (target.qubit2, target.layer2, target.slot2)


def evaluation_points(spec: EstimatorSpec):
    """The shifted points and combination weights defining the estimator.

    Returns a list of (shifts, coeff) pairs: ``shifts`` maps
    (qubit, layer, slot) to an angle offset, and the estimate is
    sum(coeff * f_hat(theta shifted)).
    """
    kind = target_kind(spec.target)
    if spec.scheme in ("ps", "sps"):
        lam = 1.0 if spec.scheme == "ps" else float(spec.lam)
        shift, denom = math.pi / 2.0, 2.0
        shift2, denom2 = math.pi, 4.0
    else:
        eps = float(spec.epsilon)
        lam = 1.0
        shift, denom = eps / 2.0, eps
        shift2, denom2 = eps, eps * eps
    p = _loc(spec.target)
    if kind == "gradient":
        return [({p: +shift}, +lam / denom), ({p: -shift}, -lam / denom)]
    if kind == "diag":
        return [({p: +shift2}, +lam / denom2), ({}, -2.0 * lam / denom2),
                ({p: -shift2}, +lam / denom2)]
    q = _loc2(spec.target)
    unit = lam / (4.0 if spec.scheme in ("ps", "sps") else eps * eps)
    return [({p: +shift, q: +shift}, +unit), ({p: +shift, q: -shift}, -unit),
            ({p: -shift, q: +shift}, -unit), ({p: -shift, q: -shift}, +unit)]


# ── sampling ─────────────────────────────────────────────────────────────────

def sample_function(state: DensityMatrix, obs: PauliObservable, shots: int,
                    rng: np.random.Generator) -> float:
    """Finite-shot estimate of tr(rho O) for a +/-1 Pauli observable."""
    if shots < 1:
        raise ValueError("need at least one shot")
    f = expectation(state, obs)
    if abs(f) > 1.0 + 1e-10:
        raise ValueError(f"expectation {f} is outside [-1, 1]")
    f = min(1.0, max(-1.0, f))
    n_plus = int(rng.binomial(shots, (1.0 + f) / 2.0))
    return (2.0 * n_plus - shots) / shots


def _exact_at(layout, theta, noise, obs, shifts) -> float:
    return expectation(evolve(layout, theta.shifted(layout, shifts), noise), obs)


def estimator_mean(spec: EstimatorSpec, layout: AnsatzLayout,
                   theta: ParameterPoint, noise, obs: PauliObservable) -> float:
    """Infinite-shot mean of the estimator: exact f at each evaluation point."""
    return sum(coeff * _exact_at(layout, theta, noise, obs, shifts)
               for shifts, coeff in evaluation_points(spec))


def exact_derivative(target: DerivativeTarget, layout: AnsatzLayout,
                     theta: ParameterPoint, noise, obs: PauliObservable) -> float:
    """Exact derivative of the (possibly noisy) circuit function.

    Evaluates the parameter-shift rule on exact expectations; with noise=None
    this is the true component against which estimator errors are measured.
    """
    return estimator_mean(EstimatorSpec("ps", target), layout, theta, noise, obs)


def estimate_derivative(spec: EstimatorSpec, layout: AnsatzLayout,
                        theta: ParameterPoint, noise, obs: PauliObservable,
                        budget: ShotBudget, rng: np.random.Generator) -> float:
    """One finite-shot estimate of the target derivative.

    Each evaluation point is sampled from its own substream: the passed
    generator is split with ``rng.spawn`` and point i always consumes child i,
    so the estimate does not depend on evaluation order.
    """
    points = evaluation_points(spec)
    if budget.per_point < 1:
        raise ValueError("budget allocates zero shots per evaluation point")
    if budget.n_total < len(points):
        raise ValueError("budget cannot cover all evaluation points")
    streams = rng.spawn(len(points))
    total = 0.0
    for (shifts, coeff), stream in zip(points, streams):
        state = evolve(layout, theta.shifted(layout, shifts), noise)
        total += coeff * sample_function(state, obs, budget.per_point, stream)
    return total
