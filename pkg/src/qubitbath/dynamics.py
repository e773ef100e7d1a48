"""Time-local master-equation propagation for local dephasing and Pauli noise.

The generator acting on an n-qubit density matrix is

    d(rho)/dt = kappa * sum_sites sum_axes (gamma_axis(t) / omega_0)
                * (sigma_axis rho sigma_axis - rho),

with no Hamiltonian commutator (interaction picture).  ``kappa`` selects the
prefactor convention: 1 places the bare rate on every site, 1/4 places a
quarter of it there; both are supported and every output records the choice.

Propagation is classic fixed-step fourth-order Runge-Kutta with rates
evaluated at the stage times.  Two equivalent steppers are provided:

* a dense stepper that materialises the right-hand side as a matrix (works
  for any supported noise kind), and
* a coherence-class stepper for pure dephasing, which exploits that the
  dephasing generator is diagonal elementwise: an element whose basis
  strings differ in d bits obeys the scalar ODE y' = -2 kappa d gamma(t) y
  / omega_0, so one RK4 amplification factor per Hamming class d propagates
  the whole matrix.  The arithmetic per element is the RK4 arithmetic.

Closed-form propagators for both noise kinds serve as independent oracles
for the integrator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .entanglement import Bipartition, log_negativity
from .errors import IntegrationError
from .rates import ZERO_RATE, ConstantRate, DecayRateModel, rate_model_from_dict
from .states import DensityMatrix, hamming_distance_matrix

__all__ = [
    "DEPHASING",
    "PAULI",
    "SUPPORTED_KAPPAS",
    "NoiseSpec",
    "IntegratorOptions",
    "Trajectory",
    "lindblad_rhs",
    "evolve",
    "analytic_dephasing_map",
    "analytic_pauli_map",
    "analytic_state_at",
    "oracle_deviation",
]

DEPHASING = "dephasing"
PAULI = "pauli"
SUPPORTED_KAPPAS = (1.0, 0.25)

TRACE_RENORM_TOL = 1e-12
TRACE_ERROR_TOL = 1e-6
EIGENVALUE_ERROR_FLOOR = -1e-6


def _is_zero_rate(model: DecayRateModel) -> bool:
    return isinstance(model, ConstantRate) and model.gamma0 == 0.0


@dataclass(frozen=True)
class NoiseSpec:
    """Channel kind plus per-axis rate models and prefactor conventions."""

    kind: str
    rate_z: DecayRateModel
    rate_x: DecayRateModel = ZERO_RATE
    rate_y: DecayRateModel = ZERO_RATE
    omega0: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.kind not in (DEPHASING, PAULI):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == DEPHASING and not (
            _is_zero_rate(self.rate_x) and _is_zero_rate(self.rate_y)
        ):
            raise ValueError("dephasing noise must have identically zero x/y rates")
        if self.kappa not in SUPPORTED_KAPPAS:
            raise ValueError(f"kappa must be one of {SUPPORTED_KAPPAS}, got {self.kappa}")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rate_x": self.rate_x.to_dict(),
            "rate_y": self.rate_y.to_dict(),
            "rate_z": self.rate_z.to_dict(),
            "omega0": self.omega0,
            "kappa": self.kappa,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NoiseSpec":
        return cls(
            kind=payload["kind"],
            rate_x=rate_model_from_dict(payload.get("rate_x", {"kind": "constant", "gamma0": 0.0})),
            rate_y=rate_model_from_dict(payload.get("rate_y", {"kind": "constant", "gamma0": 0.0})),
            rate_z=rate_model_from_dict(payload["rate_z"]),
            omega0=float(payload.get("omega0", 1.0)),
            kappa=float(payload.get("kappa", 1.0)),
        )


@dataclass(frozen=True)
class IntegratorOptions:
    """Fixed-step RK4 settings and recording cadence.

    ``observable_every`` defaults to every integrator step; full states are
    recorded (and positivity is spot-checked) every ``sample_every`` time
    units.  ``dense`` forces the dense matrix stepper even where the
    coherence-class fast path applies.
    """

    step: float = 0.01
    observable_every: Optional[float] = None
    sample_every: float = 1.0
    record_states: bool = True
    dense: bool = False
    check_positivity: bool = True

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.sample_every <= 0:
            raise ValueError("sample_every must be positive")
        if self.observable_every is not None and self.observable_every <= 0:
            raise ValueError("observable_every must be positive")


@dataclass
class Trajectory:
    """Recorded time grid, observables and (thinned) states of one run."""

    times: np.ndarray
    observables: dict
    state_times: np.ndarray
    states: list
    metadata: dict

    def observable(self, label: str) -> np.ndarray:
        return self.observables[label]

    def final_state(self) -> DensityMatrix:
        if not self.states:
            raise ValueError("trajectory recorded no states")
        return self.states[-1]


# cached per-qubit-count structures for the elementwise generator algebra
_WORKSPACES = {}


class _Workspace:
    def __init__(self, n: int):
        self.n = n
        self.dim = 2**n
        self.hamming = hamming_distance_matrix(n)
        self.hamming_idx = self.hamming.astype(np.intp)
        self.tshape = (2,) * (2 * n)
        sign = np.array([1.0, -1.0])
        self.row_signs = []
        self.col_signs = []
        for i in range(n):
            shape_r = [1] * (2 * n)
            shape_r[i] = 2
            shape_c = [1] * (2 * n)
            shape_c[n + i] = 2
            self.row_signs.append(sign.reshape(shape_r))
            self.col_signs.append(sign.reshape(shape_c))


def _workspace(n: int) -> _Workspace:
    ws = _WORKSPACES.get(n)
    if ws is None:
        ws = _Workspace(n)
        _WORKSPACES[n] = ws
    return ws


def _rhs_matrix(mat: np.ndarray, t: float, spec: NoiseSpec, ws: _Workspace) -> np.ndarray:
    pref = spec.kappa / spec.omega0
    gz = float(spec.rate_z.rate(t))
    out = (-2.0 * pref * gz) * (ws.hamming * mat)
    if spec.kind == PAULI:
        gx = float(spec.rate_x.rate(t))
        gy = float(spec.rate_y.rate(t))
        if gx != 0.0 or gy != 0.0:
            n = ws.n
            tens = mat.reshape(ws.tshape)
            acc = np.zeros(ws.tshape, dtype=complex)
            for i in range(n):
                flip = np.flip(tens, axis=(i, n + i))
                acc += gx * flip
                if gy != 0.0:
                    acc += gy * (ws.row_signs[i] * ws.col_signs[i] * flip)
            out += pref * acc.reshape(mat.shape)
            out -= (pref * n * (gx + gy)) * mat
    return out


def lindblad_rhs(rho, t: float, spec: NoiseSpec) -> np.ndarray:
    """Right-hand side of the master equation at time t.

    Equals kappa/omega_0 * sum over sites and active axes of
    (sigma rho sigma - rho), evaluated without materialising the embedded
    operators: the z part is an elementwise Hamming-distance damping and the
    x/y parts are bit-flips of both indices with the appropriate signs.
    """
    if isinstance(rho, DensityMatrix):
        mat = rho.elements
        n = rho.n
    else:
        mat = np.asarray(rho, dtype=complex)
        n = int(round(np.log2(mat.shape[0])))
        if mat.shape != (2**n, 2**n):
            raise ValueError(f"rho has shape {mat.shape}, not 2^n x 2^n")
    return _rhs_matrix(mat, t, spec, _workspace(n))


class _RunStats:
    __slots__ = ("max_trace_drift", "max_herm_drift", "min_eigenvalue", "renormalizations")

    def __init__(self):
        self.max_trace_drift = 0.0
        self.max_herm_drift = 0.0
        self.min_eigenvalue = None
        self.renormalizations = 0


class _DenseStepper:
    """RK4 on the full density matrix; hermitise and re-trace each step."""

    engine = "rk4-dense"

    def __init__(self, rho0: DensityMatrix, spec: NoiseSpec, h: float, stats: _RunStats):
        self.mat = np.array(rho0.elements, dtype=complex)
        self.spec = spec
        self.h = h
        self.ws = _workspace(rho0.n)
        self.stats = stats

    def advance(self, k: int) -> None:
        h = self.h
        t = (k - 1) * h
        mat = self.mat
        k1 = _rhs_matrix(mat, t, self.spec, self.ws)
        k2 = _rhs_matrix(mat + (0.5 * h) * k1, t + 0.5 * h, self.spec, self.ws)
        k3 = _rhs_matrix(mat + (0.5 * h) * k2, t + 0.5 * h, self.spec, self.ws)
        k4 = _rhs_matrix(mat + h * k3, t + h, self.spec, self.ws)
        mat = mat + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)

        delta = mat - mat.conj().T
        herm_drift = float(np.abs(delta).max())
        if herm_drift > self.stats.max_herm_drift:
            self.stats.max_herm_drift = herm_drift
        mat -= 0.5 * delta

        trace = float(np.trace(mat).real)
        drift = abs(trace - 1.0)
        if drift > self.stats.max_trace_drift:
            self.stats.max_trace_drift = drift
        if drift > TRACE_ERROR_TOL:
            raise IntegrationError(
                f"trace drifted by {drift:.3e} at t={k * h:.4f}; reduce the step size"
            )
        if drift > TRACE_RENORM_TOL:
            mat = mat / trace
            self.stats.renormalizations += 1
        self.mat = mat

    def current(self) -> np.ndarray:
        return self.mat


class _CoherenceClassStepper:
    """RK4 amplification factors per Hamming class for pure dephasing.

    Every matrix element with basis strings d bits apart evolves by the same
    scalar linear ODE, so the stepper advances n+1 scalars and rebuilds the
    matrix on demand.  Hermiticity and trace are preserved exactly (the
    class-0 factor stays 1 and the factors are real).
    """

    engine = "rk4-coherence-classes"

    def __init__(self, rho0: DensityMatrix, spec: NoiseSpec, h: float, stats: _RunStats):
        self.rho0 = rho0.elements
        self.spec = spec
        self.h = h
        self.ws = _workspace(rho0.n)
        self.stats = stats
        self.decay = 2.0 * spec.kappa / spec.omega0 * np.arange(rho0.n + 1, dtype=float)
        self.factors = np.ones(rho0.n + 1, dtype=float)

    def advance(self, k: int) -> None:
        h = self.h
        t = (k - 1) * h
        rate = self.spec.rate_z.rate
        g1 = float(rate(t))
        gm = float(rate(t + 0.5 * h))
        g2 = float(rate(t + h))
        lam = self.decay
        a1 = -lam * g1
        a2 = -lam * gm * (1.0 + 0.5 * h * a1)
        a3 = -lam * gm * (1.0 + 0.5 * h * a2)
        a4 = -lam * g2 * (1.0 + h * a3)
        self.factors *= 1.0 + (h / 6.0) * (a1 + 2.0 * (a2 + a3) + a4)

    def current(self) -> np.ndarray:
        return self.rho0 * self.factors[self.ws.hamming_idx]


def _stride(name: str, interval: Optional[float], h: float, default: int) -> int:
    if interval is None:
        return default
    stride = int(round(interval / h))
    if stride < 1 or abs(stride * h - interval) > 1e-9:
        raise ValueError(f"{name}={interval} is not a positive multiple of step={h}")
    return stride


def evolve(
    rho0: DensityMatrix,
    spec: NoiseSpec,
    t_max: float,
    cuts: Sequence[Bipartition] = (),
    options: IntegratorOptions = IntegratorOptions(),
) -> Trajectory:
    """Propagate rho0 under the noise spec from t=0 to t_max.

    Entanglement observables (log negativity per requested cut) are recorded
    every ``options.observable_every`` (default: every step); full states
    every ``options.sample_every``.  Raises IntegrationError when trace or
    positivity diagnostics exceed their safety bounds, which indicates the
    step size is too large.
    """
    h = options.step
    n_steps = int(round(t_max / h))
    if n_steps < 1 or abs(n_steps * h - t_max) > 1e-9:
        raise ValueError(f"t_max={t_max} is not a positive multiple of step={h}")
    obs_stride = _stride("observable_every", options.observable_every, h, 1)
    sample_stride = _stride("sample_every", options.sample_every, h, n_steps)

    unique_cuts = []
    seen_labels = set()
    for cut in cuts:
        if cut.n != rho0.n:
            raise ValueError(f"cut {cut.label} is for {cut.n} qubits, state has {rho0.n}")
        if cut.label not in seen_labels:  # e.g. highest-cut == 1-Rest at n = 3
            seen_labels.add(cut.label)
            unique_cuts.append(cut)
    cuts = unique_cuts

    stats = _RunStats()
    fast_ok = spec.kind == DEPHASING
    stepper_cls = _DenseStepper if (options.dense or not fast_ok) else _CoherenceClassStepper
    stepper = stepper_cls(rho0, spec, h, stats)

    labels = [cut.label for cut in cuts]
    times = []
    observables = {label: [] for label in labels}
    state_times = []
    states = []

    def record_observables(t: float, mat: np.ndarray) -> None:
        times.append(t)
        for cut, label in zip(cuts, labels):
            observables[label].append(log_negativity(mat, cut))

    def record_state(t: float, mat: np.ndarray) -> None:
        state = DensityMatrix(n=rho0.n, elements=mat.copy(), check_positivity=False)
        if options.check_positivity:
            lam_min = state.min_eigenvalue()
            if stats.min_eigenvalue is None or lam_min < stats.min_eigenvalue:
                stats.min_eigenvalue = lam_min
            if lam_min < EIGENVALUE_ERROR_FLOOR:
                raise IntegrationError(
                    f"state lost positivity (min eigenvalue {lam_min:.3e}) at "
                    f"t={t:.4f}; reduce the step size"
                )
        if options.record_states:
            state_times.append(t)
            states.append(state)

    record_observables(0.0, stepper.current())
    record_state(0.0, stepper.current())
    for k in range(1, n_steps + 1):
        stepper.advance(k)
        t = k * h
        if k % obs_stride == 0 or k == n_steps:
            record_observables(t, stepper.current())
        if k % sample_stride == 0 or k == n_steps:
            record_state(t, stepper.current())

    metadata = {
        "noise": spec.to_dict(),
        "kappa": spec.kappa,
        "omega0": spec.omega0,
        "integrator": stepper.engine,
        "step": h,
        "t_max": t_max,
        "cuts": labels,
        "max_trace_drift": stats.max_trace_drift,
        "max_hermiticity_drift": stats.max_herm_drift,
        "min_eigenvalue": stats.min_eigenvalue,
        "trace_renormalizations": stats.renormalizations,
    }
    return Trajectory(
        times=np.array(times),
        observables={label: np.array(vals) for label, vals in observables.items()},
        state_times=np.array(state_times),
        states=states,
        metadata=metadata,
    )


def analytic_dephasing_map(rho0: DensityMatrix, big_gamma: float, spec: NoiseSpec) -> DensityMatrix:
    """Exact dephasing propagator at integrated rate big_gamma = int_0^t gamma.

    Element (x, y) is damped by exp(-2 kappa big_gamma d / omega_0) with d
    the Hamming distance between the basis strings x and y; populations are
    untouched.
    """
    if spec.kind != DEPHASING:
        raise ValueError("analytic_dephasing_map requires a dephasing NoiseSpec")
    ws = _workspace(rho0.n)
    factors = np.exp(-2.0 * spec.kappa * big_gamma / spec.omega0 * ws.hamming)
    return DensityMatrix(
        n=rho0.n, elements=rho0.elements * factors, check_positivity=False
    )


def analytic_pauli_map(
    rho0: DensityMatrix, lam_integrals: Sequence[float], spec: NoiseSpec
) -> DensityMatrix:
    """Exact Pauli-channel propagator at per-axis integrated rates.

    ``lam_integrals`` is (Lambda_x, Lambda_y, Lambda_z) with
    Lambda_j = int_0^t gamma_j.  Each qubit is sent through the single-qubit
    channel with Pauli-transfer eigenvalues

        lambda_x = exp(-2 kappa (Lambda_y + Lambda_z) / omega_0)

    and cyclic permutations (identity eigenvalue 1), applied by scaling the
    Pauli expansion of rho0 one site at a time.
    """
    if spec.kind != PAULI:
        raise ValueError("analytic_pauli_map requires a Pauli NoiseSpec")
    lam_x_int, lam_y_int, lam_z_int = (float(v) for v in lam_integrals)
    scale = 2.0 * spec.kappa / spec.omega0
    tx = np.exp(-scale * (lam_y_int + lam_z_int))
    ty = np.exp(-scale * (lam_z_int + lam_x_int))
    tz = np.exp(-scale * (lam_x_int + lam_y_int))
    # mixing weights of {identity, X, Y, Z} conjugations realising the
    # diagonal Pauli-transfer map (Walsh-Hadamard inversion)
    c_i = 0.25 * (1.0 + tx + ty + tz)
    c_x = 0.25 * (1.0 + tx - ty - tz)
    c_y = 0.25 * (1.0 - tx + ty - tz)
    c_z = 0.25 * (1.0 - tx - ty + tz)

    n = rho0.n
    ws = _workspace(n)
    tens = np.array(rho0.elements, dtype=complex).reshape(ws.tshape)
    for i in range(n):
        flip = np.flip(tens, axis=(i, n + i))
        signs = ws.row_signs[i] * ws.col_signs[i]
        tens = c_i * tens + c_x * flip + c_y * (signs * flip) + c_z * (signs * tens)
    return DensityMatrix(
        n=n, elements=tens.reshape(rho0.dim, rho0.dim), check_positivity=False
    )


def analytic_state_at(rho0: DensityMatrix, spec: NoiseSpec, t: float) -> DensityMatrix:
    """Closed-form state at time t for whichever noise kind spec carries."""
    if spec.kind == DEPHASING:
        return analytic_dephasing_map(rho0, float(spec.rate_z.integrated(t)), spec)
    lams = (
        float(spec.rate_x.integrated(t)),
        float(spec.rate_y.integrated(t)),
        float(spec.rate_z.integrated(t)),
    )
    return analytic_pauli_map(rho0, lams, spec)


def oracle_deviation(
    rho0: DensityMatrix,
    spec: NoiseSpec,
    t_max: float,
    options: IntegratorOptions = IntegratorOptions(),
    compare_every: Optional[float] = None,
) -> float:
    """Max-abs element deviation between RK4 evolution and the analytic map.

    Steps the integrator across [0, t_max] and compares against the exact
    propagator every ``compare_every`` time units (default: every step).
    This is the primary correctness gate for the integrator.
    """
    h = options.step
    n_steps = int(round(t_max / h))
    if n_steps < 1 or abs(n_steps * h - t_max) > 1e-9:
        raise ValueError(f"t_max={t_max} is not a positive multiple of step={h}")
    stride = _stride("compare_every", compare_every, h, 1)

    stats = _RunStats()
    fast_ok = spec.kind == DEPHASING
    stepper_cls = _DenseStepper if (options.dense or not fast_ok) else _CoherenceClassStepper
    stepper = stepper_cls(rho0, spec, h, stats)

    worst = 0.0
    for k in range(1, n_steps + 1):
        stepper.advance(k)
        if k % stride == 0 or k == n_steps:
            t = k * h
            exact = analytic_state_at(rho0, spec, t)
            dev = float(np.abs(stepper.current() - exact.elements).max())
            if dev > worst:
                worst = dev
    return worst
