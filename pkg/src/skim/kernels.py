"""Synaptic kernel responses and the pointwise soma nonlinearity.

Each dendrite owns one kernel: a temporal response function that turns an
instantaneous (weighted, nonlinearly squashed) spike event into a signal
that persists over subsequent timesteps.  Randomly distributed kernel
parameters across dendrites give the network a set of non-orthogonal
temporal basis functions from which output spike trains are synthesized
by a linear solve.

Time is discrete with a unit timestep; tau, delta_t and sigma are all
expressed in timesteps.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

DEFAULT_LOGISTIC_GAIN = 5.0
DEFAULT_SUPPORT_EPS = 1e-6


class KernelKind(str, Enum):
    ALPHA = "alpha"
    DAMPED_RESONANCE = "damped_resonance"
    DELAYED_ALPHA = "delayed_alpha"
    DELAYED_GAUSSIAN = "delayed_gaussian"
    LEAKY_INTEGRATOR_NL = "leaky_integrator_nl"
    CUSTOM = "custom"


# Kinds whose response is a fixed function of time-since-spike and can be
# tabulated; the nonlinear leaky integrator is stateful and is stepped
# explicitly instead (see step_leaky).
STATELESS_KINDS = frozenset(
    {
        KernelKind.ALPHA,
        KernelKind.DAMPED_RESONANCE,
        KernelKind.DELAYED_ALPHA,
        KernelKind.DELAYED_GAUSSIAN,
        KernelKind.CUSTOM,
    }
)

_NEEDS_TAU = frozenset(
    {
        KernelKind.ALPHA,
        KernelKind.DAMPED_RESONANCE,
        KernelKind.DELAYED_ALPHA,
        KernelKind.LEAKY_INTEGRATOR_NL,
    }
)


@dataclass(frozen=True)
class KernelSpec:
    """One dendrite's synaptic kernel: kind plus parameters.

    Attributes:
        kind: response family.
        tau: time constant in timesteps (decay rate for alpha / resonant /
            leaky forms).
        delta_t: explicit synaptic or dendritic delay in timesteps.
        omega: resonant angular frequency in radians per timestep.
        sigma: Gaussian width in timesteps.
        logistic_gain: gain of the logistic squashing applied to the summed
            weighted input before the kernel is triggered.
        custom_table: sampled response amplitudes, one per timestep offset,
            for the custom kind.  Need not be monotonic.
    """

    kind: KernelKind
    tau: float = 0.0
    delta_t: float = 0.0
    omega: float = 0.0
    sigma: float = 0.0
    logistic_gain: float = DEFAULT_LOGISTIC_GAIN
    custom_table: tuple = None

    def __post_init__(self):
        kind = KernelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in _NEEDS_TAU and not self.tau > 0:
            raise ValueError(f"{kind.value} kernel requires tau > 0, got {self.tau}")
        if kind is KernelKind.DAMPED_RESONANCE and not self.omega > 0:
            raise ValueError(f"damped_resonance requires omega > 0, got {self.omega}")
        if kind is KernelKind.DELAYED_GAUSSIAN and not self.sigma > 0:
            raise ValueError(f"delayed_gaussian requires sigma > 0, got {self.sigma}")
        if self.delta_t < 0:
            raise ValueError(f"delta_t must be >= 0, got {self.delta_t}")
        if not self.logistic_gain > 0:
            raise ValueError(f"logistic_gain must be > 0, got {self.logistic_gain}")
        if kind is KernelKind.CUSTOM:
            if self.custom_table is None:
                raise ValueError("custom kernel requires a custom_table")
            table = tuple(float(v) for v in self.custom_table)
            if len(table) == 0:
                raise ValueError("custom_table must be non-empty")
            if not np.all(np.isfinite(table)):
                raise ValueError("custom_table must be finite-valued")
            object.__setattr__(self, "custom_table", table)
        elif self.custom_table is not None:
            raise ValueError("custom_table is only valid for the custom kind")


def logistic(u, gain=DEFAULT_LOGISTIC_GAIN):
    """Zero-centered logistic squashing of a summed weighted input.

    v = 1 / (1 + exp(-gain * u)) - 0.5

    Odd-symmetric, strictly increasing and bounded in (-0.5, 0.5); in
    particular an input of exactly zero (no spikes) maps to exactly zero.
    Accepts scalars or arrays.
    """
    if not gain > 0:
        raise ValueError(f"logistic gain must be > 0, got {gain}")
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise ValueError("logistic input must be finite")
    v = expit(gain * u) - 0.5
    if v.ndim == 0:
        return float(v)
    return v


def eval_response(spec, dt):
    """Unit-amplitude kernel response at `dt` timesteps after the trigger.

    Forms by kind:
        alpha:            (dt/tau) * exp(-dt/tau)
        damped_resonance: exp(-dt/tau) * sin(omega*dt)
        delayed_alpha:    0 for dt < delta_t, else alpha in (dt - delta_t)
        delayed_gaussian: (1/(sigma*sqrt(2*pi))) * exp(-(dt-delta_t)^2/(2*sigma^2))
        custom:           table[floor(dt)], 0 beyond the table

    Accepts scalar or array dt (>= 0).  The nonlinear leaky integrator is
    stateful and has no time-since-spike response; asking for one is a
    misuse error.
    """
    if spec.kind is KernelKind.LEAKY_INTEGRATOR_NL:
        raise ValueError(
            "leaky_integrator_nl is stateful; use step_leaky, not eval_response"
        )
    dt_arr = np.asarray(dt, dtype=np.float64)
    if np.any(dt_arr < 0):
        raise ValueError("dt must be >= 0")

    if spec.kind is KernelKind.ALPHA:
        x = dt_arr / spec.tau
        out = x * np.exp(-x)
    elif spec.kind is KernelKind.DAMPED_RESONANCE:
        out = np.exp(-dt_arr / spec.tau) * np.sin(spec.omega * dt_arr)
    elif spec.kind is KernelKind.DELAYED_ALPHA:
        x = (dt_arr - spec.delta_t) / spec.tau
        out = np.where(dt_arr < spec.delta_t, 0.0, np.maximum(x, 0.0) * np.exp(-np.maximum(x, 0.0)))
    elif spec.kind is KernelKind.DELAYED_GAUSSIAN:
        z = (dt_arr - spec.delta_t) / spec.sigma
        out = np.exp(-0.5 * z * z) / (spec.sigma * math.sqrt(2.0 * math.pi))
    elif spec.kind is KernelKind.CUSTOM:
        table = np.asarray(spec.custom_table, dtype=np.float64)
        idx = np.floor(dt_arr).astype(np.int64)
        inside = idx < len(table)
        out = np.where(inside, table[np.minimum(idx, len(table) - 1)], 0.0)
    else:  # pragma: no cover - exhaustive over kinds
        raise ValueError(f"unknown kernel kind {spec.kind}")

    if out.ndim == 0:
        return float(out)
    return out


def _support_scan_bound(spec, epsilon):
    """Integer timestep beyond which the response envelope is provably < epsilon."""
    if spec.kind is KernelKind.CUSTOM:
        return len(spec.custom_table)
    bound = spec.delta_t + 8.0 * max(spec.tau, spec.sigma, 1.0) + 1.0
    while _envelope(spec, bound) >= epsilon:
        bound *= 2.0
        if bound > 1e9:
            raise ValueError("kernel response does not decay below epsilon")
    return int(math.ceil(bound))


def _envelope(spec, dt):
    """Monotone-decaying upper bound on |response| past the peak."""
    if spec.kind is KernelKind.DAMPED_RESONANCE:
        # |sin| <= 1, so the exponential alone bounds the oscillation.
        return math.exp(-dt / spec.tau)
    return abs(eval_response(spec, dt))


def response_support(spec, epsilon=DEFAULT_SUPPORT_EPS):
    """Smallest horizon H with |response(dt)| < epsilon for every dt >= H.

    Found by scanning integer timesteps of the decay envelope (for the
    damped resonance the exp(-dt/tau) envelope is scanned so the sine's
    zero crossings cannot fake an early cutoff).  Forward simulation may
    drop kernel contributions beyond this horizon.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if spec.kind is KernelKind.LEAKY_INTEGRATOR_NL:
        raise ValueError("leaky_integrator_nl has no tabulated response support")

    bound = _support_scan_bound(spec, epsilon)
    steps = np.arange(bound + 1, dtype=np.float64)
    if spec.kind is KernelKind.DAMPED_RESONANCE:
        values = np.exp(-steps / spec.tau)
    else:
        values = np.abs(eval_response(spec, steps))
    above = np.nonzero(values >= epsilon)[0]
    if len(above) == 0:
        return 0
    return int(above[-1]) + 1


def response_table(spec, epsilon=DEFAULT_SUPPORT_EPS, horizon_factor=1.0):
    """Tabulated response over [0, H) with H from response_support.

    `horizon_factor` stretches the horizon (used to check that the default
    truncation is harmless).
    """
    horizon = int(math.ceil(response_support(spec, epsilon) * horizon_factor))
    if horizon == 0:
        return np.zeros(0)
    return np.asarray(eval_response(spec, np.arange(horizon, dtype=np.float64)))


def step_leaky(state, drive, leak):
    """One step of the nonlinear leaky integrator.

    a_t = leak * a_{t-1} / (1 + a_{t-1}^2) + drive

    The 1/(1+a^2) factor compresses large potentials, so with leak in
    (0, 1) the zero-input orbit is bounded and decays to rest from any
    finite start.  Accepts scalars or arrays (state and drive broadcast).
    """
    if not 0.0 < leak < 1.0:
        raise ValueError(f"leak must lie in (0, 1), got {leak}")
    state = np.asarray(state, dtype=np.float64)
    drive = np.asarray(drive, dtype=np.float64)
    if not (np.all(np.isfinite(state)) and np.all(np.isfinite(drive))):
        raise ValueError("step_leaky requires finite state and drive")
    out = leak * state / (1.0 + state * state) + drive
    if out.ndim == 0:
        return float(out)
    return out


def leak_constant(spec):
    """Per-step decay factor for a leaky-integrator kernel: exp(-1/tau)."""
    if spec.kind is not KernelKind.LEAKY_INTEGRATOR_NL:
        raise ValueError("leak_constant applies only to leaky_integrator_nl")
    return math.exp(-1.0 / spec.tau)


def _as_param(value, rng):
    """A family parameter is either a fixed float or a (lo, hi) uniform range."""
    if isinstance(value, (tuple, list)):
        lo, hi = float(value[0]), float(value[1])
        if not lo < hi:
            raise ValueError(f"parameter range must have lo < hi, got ({lo}, {hi})")
        return float(rng.uniform(lo, hi))
    return float(value)


@dataclass(frozen=True)
class KernelFamily:
    """Template for randomizing per-dendrite kernels.

    Each parameter is either a fixed value or a (lo, hi) pair sampled
    uniformly per dendrite.  E.g. the four-channel demo uses alpha kernels
    with tau drawn from (0, 100): half the longest pattern interval, the
    't_s about t_max/2' persistence heuristic.
    """

    kind: KernelKind
    tau: object = 0.0
    delta_t: object = 0.0
    omega: object = 0.0
    sigma: object = 0.0
    logistic_gain: object = DEFAULT_LOGISTIC_GAIN
    custom_table: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.custom_table is not None:
            object.__setattr__(
                self, "custom_table", tuple(float(v) for v in self.custom_table)
            )

    def sample(self, rng):
        """Draw one KernelSpec; ranges are resolved with the given generator."""
        # tau ranges are open at zero: a zero draw would be invalid, so
        # resample the (measure-zero) boundary.
        tau = _as_param(self.tau, rng)
        while isinstance(self.tau, (tuple, list)) and tau <= 0:
            tau = _as_param(self.tau, rng)
        return KernelSpec(
            kind=self.kind,
            tau=tau,
            delta_t=_as_param(self.delta_t, rng),
            omega=_as_param(self.omega, rng),
            sigma=_as_param(self.sigma, rng),
            logistic_gain=_as_param(self.logistic_gain, rng),
            custom_table=self.custom_table,
        )


# Catalog of ready-made families with sensible parameter ranges for a
# pattern horizon of ~200 timesteps.  Time constants and delays straddle
# the 'persistence of order half the pattern length' heuristic.
FAMILY_CATALOG = {
    "alpha": KernelFamily(kind=KernelKind.ALPHA, tau=(0.0, 100.0)),
    "damped_resonance": KernelFamily(
        kind=KernelKind.DAMPED_RESONANCE, tau=(20.0, 200.0), omega=(0.01, 0.15)
    ),
    "delayed_alpha": KernelFamily(
        kind=KernelKind.DELAYED_ALPHA, delta_t=(0.0, 100.0), tau=(0.0, 50.0)
    ),
    "delayed_gaussian": KernelFamily(
        kind=KernelKind.DELAYED_GAUSSIAN, delta_t=(0.0, 150.0), sigma=(2.0, 25.0)
    ),
    "leaky_integrator_nl": KernelFamily(
        kind=KernelKind.LEAKY_INTEGRATOR_NL, tau=(5.0, 200.0)
    ),
}
