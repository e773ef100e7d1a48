"""Time-dependent decay-rate models, their integrals and divisibility checks.

All times are dimensionless (t = omega_0 * t_phys).  The bath rate models:

* ``OhmicZeroTempRate``: zero-temperature dephasing rate of an exponentially
  cut-off power-law spectral density omega^s / omega_c^(s-1) * exp(-omega/omega_c);
  gamma(t) = omega_c * [1 + (omega_c t)^2]^(-s/2) * Gamma(s) * sin(s * arctan(omega_c t)).
  For s > 2 the rate goes negative on time windows, which is the memory effect
  the rest of the package is about.
* ``OhmicFiniteTempRate``: same spectral density at temperature
  theta = k_B T / (hbar omega_c), evaluated by adaptive quadrature of
  integral d(omega) S(omega) coth(omega / (2 theta omega_c)) sin(omega t) / omega.
* ``SinusoidalRate``: gamma(t) = alpha * sin(t).
* ``ConstantRate``: gamma(t) = gamma_0 >= 0.

The divisibility classifier decides, on a sampled time grid, whether the
three-axis local channel generated by (gamma_x, gamma_y, gamma_z) is
CP-divisible (all rates nonnegative), only P-divisible (all pairwise rate
sums nonnegative) or not even P-divisible.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureError

__all__ = [
    "ConstantRate",
    "SinusoidalRate",
    "OhmicZeroTempRate",
    "OhmicFiniteTempRate",
    "DecayRateModel",
    "ZERO_RATE",
    "gamma_ohmic_t0",
    "gamma_ohmic_finite_t",
    "integrated_rate",
    "integrated_rate_quadrature",
    "dephasing_factor",
    "DivisibilityClass",
    "DivisibilityVerdict",
    "classify_divisibility",
    "rate_model_from_dict",
]

QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-8
_SIGN_TOL = -1e-12


def _quad_strict(func, a, b, description, **kwargs):
    """scipy.integrate.quad that raises QuadratureError on non-convergence."""
    out = quad(
        func, a, b, epsabs=QUAD_ABS_TOL, epsrel=QUAD_REL_TOL, full_output=1, **kwargs
    )
    if len(out) > 3:
        raise QuadratureError(f"quadrature failed for {description}: {out[3]}")
    return out[0]


def gamma_ohmic_t0(t, s: float, omega_c: float = 1.0):
    """Zero-temperature dephasing rate for Ohmicity s and cutoff omega_c.

    Accepts scalar or array t; vanishes at t = 0 and is finite everywhere.
    """
    if s <= 0 or omega_c <= 0:
        raise ValueError("gamma_ohmic_t0 requires s > 0 and omega_c > 0")
    x = omega_c * np.asarray(t, dtype=float)
    val = omega_c * (1.0 + x**2) ** (-s / 2.0) * math.gamma(s) * np.sin(s * np.arctan(x))
    return val if val.ndim else float(val)


def _coth(x: float) -> float:
    # integrands only evaluate this at x > 0
    if x > 20.0:
        return 1.0
    return 1.0 / math.tanh(x)


def gamma_ohmic_finite_t(t: float, s: float, omega_c: float = 1.0, theta: float = 0.0) -> float:
    """Finite-temperature dephasing rate by adaptive quadrature.

    theta is the dimensionless temperature k_B T / (hbar omega_c); theta = 0
    reduces to the zero-temperature integrand (coth -> 1).  The integrand
    behaves as omega^(s-1) near zero for theta > 0, which is integrable for
    any s > 0; the integration interval is split at omega_c and the
    oscillatory tail is handled with a sin-weighted rule.
    """
    if s <= 0 or omega_c <= 0:
        raise ValueError("requires s > 0 and omega_c > 0")
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if t == 0.0:
        return 0.0

    def envelope(w: float) -> float:
        val = w ** (s - 1.0) * omega_c ** (1.0 - s) * math.exp(-w / omega_c)
        if theta > 0.0:
            val *= _coth(w / (2.0 * theta * omega_c))
        return val

    head = _quad_strict(
        lambda w: envelope(w) * math.sin(w * t),
        0.0,
        omega_c,
        f"finite-T rate head (s={s}, theta={theta}, t={t})",
        limit=200,
    )
    tail = _quad_strict(
        envelope,
        omega_c,
        np.inf,
        f"finite-T rate tail (s={s}, theta={theta}, t={t})",
        weight="sin",
        wvar=t,
        limit=200,
    )
    return head + tail


def _integrated_ohmic_t0(t, s: float, omega_c: float):
    """Closed form of integral_0^t gamma_ohmic_t0, valid for all s > 0."""
    x = omega_c * np.asarray(t, dtype=float)
    if s == 1.0:
        out = 0.5 * np.log1p(x**2)
        return out if out.ndim else float(out)
    e = s - 1.0
    half_log = 0.5 * np.log1p(x**2)
    # 1 - cos(e * arctan x) * (1+x^2)^(-e/2), written to avoid cancellation
    bracket = -np.expm1(-e * half_log) + np.exp(-e * half_log) * 2.0 * np.sin(
        e * np.arctan(x) / 2.0
    ) ** 2
    out = math.gamma(e) * bracket
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ConstantRate:
    """gamma(t) = gamma0 with gamma0 >= 0."""

    gamma0: float
    kind = "constant"

    def __post_init__(self):
        if self.gamma0 < 0:
            raise ValueError("constant rate must be nonnegative")

    def rate(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.gamma0)
        return out if out.ndim else float(out)

    def integrated(self, t):
        t = np.asarray(t, dtype=float)
        out = self.gamma0 * t
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma0": self.gamma0}


@dataclass(frozen=True)
class SinusoidalRate:
    """gamma(t) = alpha * sin(t); sign changes are the point of this model."""

    alpha: float
    kind = "sinusoidal"

    def rate(self, t):
        out = self.alpha * np.sin(np.asarray(t, dtype=float))
        return out if out.ndim else float(out)

    def integrated(self, t):
        t = np.asarray(t, dtype=float)
        out = self.alpha * (1.0 - np.cos(t))
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class OhmicZeroTempRate:
    """Zero-temperature rate of the exponentially cut-off omega^s bath."""

    s: float
    omega_c: float = 1.0
    kind = "ohmic_t0"

    def __post_init__(self):
        if self.s <= 0 or self.omega_c <= 0:
            raise ValueError("OhmicZeroTempRate requires s > 0 and omega_c > 0")

    def rate(self, t):
        return gamma_ohmic_t0(t, self.s, self.omega_c)

    def integrated(self, t):
        return _integrated_ohmic_t0(t, self.s, self.omega_c)

    def integrated_infinity(self) -> float:
        """Limit of the integral as t -> inf; finite only for s > 1."""
        if self.s <= 1.0:
            return math.inf
        return math.gamma(self.s - 1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "s": self.s, "omega_c": self.omega_c}


@dataclass(frozen=True)
class OhmicFiniteTempRate:
    """Finite-temperature variant; theta = k_B T / (hbar omega_c)."""

    s: float
    omega_c: float = 1.0
    theta: float = 0.0
    kind = "ohmic_finite_t"

    def __post_init__(self):
        if self.s <= 0 or self.omega_c <= 0:
            raise ValueError("OhmicFiniteTempRate requires s > 0 and omega_c > 0")
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")

    def rate(self, t):
        t_arr = np.asarray(t, dtype=float)
        if t_arr.ndim == 0:
            return gamma_ohmic_finite_t(float(t_arr), self.s, self.omega_c, self.theta)
        return np.array(
            [gamma_ohmic_finite_t(float(u), self.s, self.omega_c, self.theta) for u in t_arr]
        )

    def integrated(self, t):
        t_arr = np.asarray(t, dtype=float)
        if t_arr.ndim == 0:
            return self._integrated_scalar(float(t_arr))
        return np.array([self._integrated_scalar(float(u)) for u in t_arr])

    def _integrated_scalar(self, t: float) -> float:
        # integral d(omega) S(omega) coth(.) (1 - cos(omega t)) / omega^2;
        # the (1 - cos) factor regularises the omega -> 0 endpoint, so the
        # combination is integrated directly on the head interval.
        if t == 0.0:
            return 0.0

        def envelope(w: float) -> float:
            val = w ** (self.s - 2.0) * self.omega_c ** (1.0 - self.s) * math.exp(
                -w / self.omega_c
            )
            if self.theta > 0.0:
                val *= _coth(w / (2.0 * self.theta * self.omega_c))
            return val

        head = _quad_strict(
            lambda w: envelope(w) * (1.0 - math.cos(w * t)),
            0.0,
            self.omega_c,
            f"finite-T integral head (s={self.s}, theta={self.theta}, t={t})",
            limit=200,
        )
        tail_flat = _quad_strict(
            envelope,
            self.omega_c,
            np.inf,
            "finite-T integral tail (flat part)",
            limit=200,
        )
        tail_osc = _quad_strict(
            envelope,
            self.omega_c,
            np.inf,
            "finite-T integral tail (oscillatory part)",
            weight="cos",
            wvar=t,
            limit=200,
        )
        return head + tail_flat - tail_osc

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "s": self.s,
            "omega_c": self.omega_c,
            "theta": self.theta,
        }


DecayRateModel = Union[ConstantRate, SinusoidalRate, OhmicZeroTempRate, OhmicFiniteTempRate]

ZERO_RATE = ConstantRate(0.0)

_MODEL_KINDS = {
    "constant": ConstantRate,
    "sinusoidal": SinusoidalRate,
    "ohmic_t0": OhmicZeroTempRate,
    "ohmic_finite_t": OhmicFiniteTempRate,
}


def rate_model_from_dict(payload: dict) -> DecayRateModel:
    """Build a rate model from its tagged-record form, e.g. {"kind": "ohmic_t0", ...}."""
    payload = dict(payload)
    try:
        kind = payload.pop("kind")
        cls = _MODEL_KINDS[kind]
    except KeyError as exc:
        raise ValueError(f"unknown rate model kind in {payload!r}") from exc
    return cls(**payload)


def integrated_rate(model: DecayRateModel, t) -> float:
    """Integral of the rate from 0 to t (closed form where available)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("integrated_rate requires t >= 0")
    return model.integrated(t)


def integrated_rate_quadrature(model: DecayRateModel, t: float) -> float:
    """Integral of the rate from 0 to t by direct adaptive quadrature.

    Independent of the closed forms in ``integrated``; used to cross-check them.
    """
    if t < 0:
        raise ValueError("integrated_rate_quadrature requires t >= 0")
    if t == 0.0:
        return 0.0
    return _quad_strict(
        lambda u: float(model.rate(u)), 0.0, t, f"rate integral of {model!r}", limit=400
    )


def dephasing_factor(model: DecayRateModel, t) -> float:
    """eta(t) = 1 - exp(-2 integral_0^t gamma), the single-qubit dephasing factor."""
    out = -np.expm1(-2.0 * np.asarray(integrated_rate(model, t), dtype=float))
    return out if out.ndim else float(out)


class DivisibilityClass(enum.Enum):
    CP_DIVISIBLE = "CP-divisible"
    P_DIVISIBLE_ONLY = "P-divisible-only"
    NON_P_DIVISIBLE = "non-P-divisible"


@dataclass(frozen=True)
class DivisibilityVerdict:
    """Outcome of the grid-sampled divisibility test.

    ``violation_windows`` lists the (t_start, t_end) intervals on which the
    deciding inequality fails: the pairwise-sum conditions for a
    non-P-divisible channel, the single-rate conditions for a channel that
    is P-divisible but not CP-divisible.  ``min_margin`` is the smallest
    value attained by the tightest constraint of the deciding family.
    """

    classification: DivisibilityClass
    violation_windows: tuple
    min_margin: float

    def to_dict(self) -> dict:
        return {
            "classification": self.classification.value,
            "violation_windows": [list(w) for w in self.violation_windows],
            "min_margin": self.min_margin,
        }


def _windows_below(grid: np.ndarray, values: np.ndarray, tol: float) -> tuple:
    """Contiguous grid intervals on which values < tol."""
    mask = values < tol
    windows = []
    start = None
    for i, bad in enumerate(mask):
        if bad and start is None:
            start = i
        elif not bad and start is not None:
            windows.append((float(grid[start]), float(grid[i - 1])))
            start = None
    if start is not None:
        windows.append((float(grid[start]), float(grid[-1])))
    return tuple(windows)


def classify_divisibility(
    rate_x: DecayRateModel,
    rate_y: DecayRateModel,
    rate_z: DecayRateModel,
    grid: Sequence[float],
) -> DivisibilityVerdict:
    """Classify the three-axis channel on a sampled time grid.

    CP-divisible iff all three rates stay >= 0 on the grid; P-divisible iff
    all three pairwise sums do.  Values above -1e-12 count as nonnegative so
    that roundoff does not flip the verdict.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        raise ValueError("divisibility grid needs at least 2 points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("divisibility grid must be strictly increasing")

    gx = np.asarray(rate_x.rate(grid), dtype=float)
    gy = np.asarray(rate_y.rate(grid), dtype=float)
    gz = np.asarray(rate_z.rate(grid), dtype=float)

    singles = np.stack([gx, gy, gz])
    pair_sums = np.stack([gx + gy, gy + gz, gz + gx])
    cp_margin = float(singles.min())
    p_margin = float(pair_sums.min())

    if cp_margin >= _SIGN_TOL:
        return DivisibilityVerdict(DivisibilityClass.CP_DIVISIBLE, (), cp_margin)
    if p_margin >= _SIGN_TOL:
        windows = _windows_below(grid, singles.min(axis=0), _SIGN_TOL)
        return DivisibilityVerdict(DivisibilityClass.P_DIVISIBLE_ONLY, windows, p_margin)
    windows = _windows_below(grid, pair_sums.min(axis=0), _SIGN_TOL)
    return DivisibilityVerdict(DivisibilityClass.NON_P_DIVISIBLE, windows, p_margin)
