"""Network structure and deterministic forward simulation.

A network holds fixed random input weights (one synapse per input/dendrite
pair), one synaptic kernel per dendrite, solved linear output weights and a
soma threshold.  Simulation projects an input spike raster through the
synaptic kernels to an activation matrix A (dendritic potentials, one
column per timestep), then reads out soma potentials y = W2 @ A and output
spikes z = (y > theta).
"""

from dataclasses import dataclass, replace

import numpy as np

from .kernels import (
    DEFAULT_SUPPORT_EPS,
    KernelFamily,
    KernelKind,
    KernelSpec,
    STATELESS_KINDS,
    leak_constant,
    logistic,
    response_table,
    step_leaky,
)
from .util import substream

# Launch amplitudes below this are treated as exact zeros so float dust
# cannot make a silent input produce activity.
LAUNCH_CLAMP = 1e-15


@dataclass(frozen=True)
class SpikeRaster:
    """Multi-channel binary spike events on a discrete time grid.

    `events` is a canonically ordered (time-major) tuple of
    (channel, timestep) pairs; at most one event per pair.
    """

    num_channels: int
    num_steps: int
    events: tuple = ()

    def __post_init__(self):
        if self.num_channels < 1:
            raise ValueError("num_channels must be >= 1")
        if self.num_steps < 0:
            raise ValueError("num_steps must be >= 0")
        events = tuple(sorted((int(c), int(t)) for c, t in self.events))
        events = tuple(sorted(events, key=lambda e: (e[1], e[0])))
        for channel, t in events:
            if not 0 <= channel < self.num_channels:
                raise ValueError(f"event channel {channel} out of range")
            if not 0 <= t < self.num_steps:
                raise ValueError(f"event time {t} out of range")
        if len(set(events)) != len(events):
            raise ValueError("duplicate (channel, timestep) event")
        object.__setattr__(self, "events", events)

    @property
    def num_events(self):
        return len(self.events)

    def to_dense(self):
        """Dense 0/1 matrix of shape (num_channels, num_steps)."""
        dense = np.zeros((self.num_channels, self.num_steps), dtype=np.uint8)
        for channel, t in self.events:
            dense[channel, t] = 1
        return dense

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense)
        channels, times = np.nonzero(dense)
        return cls(dense.shape[0], dense.shape[1], tuple(zip(channels, times)))


def concat_rasters(rasters):
    """Join rasters end to end on the time axis (same channel count)."""
    rasters = list(rasters)
    if not rasters:
        raise ValueError("need at least one raster")
    channels = rasters[0].num_channels
    if any(r.num_channels != channels for r in rasters):
        raise ValueError("rasters must share a channel count")
    events = []
    offset = 0
    for raster in rasters:
        events.extend((c, t + offset) for c, t in raster.events)
        offset += raster.num_steps
    return SpikeRaster(channels, offset, tuple(events))


@dataclass
class SkimNetwork:
    """L inputs, M dendrites, N outputs; random fixed W1, solved W2.

    Input weights and kernels are frozen at construction (the arrays are
    marked read-only); only `output_weights` is assigned by training.
    """

    num_inputs: int
    num_dendrites: int
    num_outputs: int
    input_weights: np.ndarray
    kernels: tuple
    theta: float
    seed: int
    weight_range: tuple = (-0.5, 0.5)
    soma_reset: bool = False
    swapped_order: bool = False
    output_weights: np.ndarray = None
    kernel_family: KernelFamily = None

    def __post_init__(self):
        w1 = np.ascontiguousarray(self.input_weights, dtype=np.float64)
        if w1.shape != (self.num_dendrites, self.num_inputs):
            raise ValueError(
                f"input_weights shape {w1.shape} does not match "
                f"(M={self.num_dendrites}, L={self.num_inputs})"
            )
        w1.setflags(write=False)
        self.input_weights = w1
        self.kernels = tuple(self.kernels)
        if len(self.kernels) != self.num_dendrites:
            raise ValueError("need exactly one kernel per dendrite")
        if not all(isinstance(k, KernelSpec) for k in self.kernels):
            raise ValueError("kernels must be KernelSpec instances")
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.output_weights is not None:
            self.set_output_weights(self.output_weights)

    def set_output_weights(self, weights):
        weights = np.ascontiguousarray(weights, dtype=np.float64)
        if weights.shape != (self.num_outputs, self.num_dendrites):
            raise ValueError(
                f"output_weights shape {weights.shape} does not match "
                f"(N={self.num_outputs}, M={self.num_dendrites})"
            )
        if not np.all(np.isfinite(weights)):
            raise ValueError("output_weights must be finite")
        self.output_weights = weights

    @property
    def trained(self):
        return self.output_weights is not None

    def restrict(self, dendrite_indices):
        """New untrained network keeping only the given dendrites."""
        idx = np.asarray(dendrite_indices, dtype=np.intp)
        if len(idx) < 1:
            raise ValueError("must keep at least one dendrite")
        return replace(
            self,
            num_dendrites=len(idx),
            input_weights=self.input_weights[idx].copy(),
            kernels=tuple(self.kernels[i] for i in idx),
            output_weights=None,
        )


@dataclass(frozen=True)
class ForwardTrace:
    """Simulation products: dendritic potentials, soma values, output spikes.

    `soma` and `output_spikes` are None when the network has no solved
    output weights yet.
    """

    activations: np.ndarray
    soma: np.ndarray = None
    output_spikes: np.ndarray = None


def new_network(
    num_inputs,
    num_dendrites,
    num_outputs,
    kernel_family,
    weight_range=(-0.5, 0.5),
    theta=0.5,
    seed=0,
    soma_reset=False,
    swapped_order=False,
):
    """Construct a network with seeded random input weights and kernels.

    W1 entries are i.i.d. uniform over `weight_range`; each dendrite's
    kernel parameters are drawn from the family's ranges.  Weights and
    kernels come from independent named substreams of `seed`, so identical
    arguments always rebuild the identical network.
    """
    if num_inputs < 1 or num_dendrites < 1 or num_outputs < 1:
        raise ValueError("network dimensions must be >= 1")
    lo, hi = float(weight_range[0]), float(weight_range[1])
    if not lo < hi:
        raise ValueError(f"weight_range must have lo < hi, got ({lo}, {hi})")
    rng_w = substream(seed, "weights")
    rng_k = substream(seed, "kernels")
    input_weights = rng_w.uniform(lo, hi, size=(num_dendrites, num_inputs))
    kernels = tuple(kernel_family.sample(rng_k) for _ in range(num_dendrites))
    return SkimNetwork(
        num_inputs=num_inputs,
        num_dendrites=num_dendrites,
        num_outputs=num_outputs,
        input_weights=input_weights,
        kernels=kernels,
        theta=float(theta),
        seed=int(seed),
        weight_range=(lo, hi),
        soma_reset=bool(soma_reset),
        swapped_order=bool(swapped_order),
        kernel_family=kernel_family,
    )


class _KernelBank:
    """Per-network tables reused across forward calls on many rasters."""

    def __init__(self, net, support_epsilon, horizon_factor):
        specs = net.kernels
        self.gains = np.array([k.logistic_gain for k in specs])
        self.conv_idx = np.array(
            [j for j, k in enumerate(specs) if k.kind in STATELESS_KINDS], dtype=np.intp
        )
        self.leaky_idx = np.array(
            [j for j, k in enumerate(specs) if k.kind is KernelKind.LEAKY_INTEGRATOR_NL],
            dtype=np.intp,
        )
        self.leaks = np.array([leak_constant(specs[j]) for j in self.leaky_idx])
        tables = [
            response_table(specs[j], support_epsilon, horizon_factor)
            for j in self.conv_idx
        ]
        self.horizon = max((len(t) for t in tables), default=0)
        self.responses = np.zeros((len(self.conv_idx), self.horizon))
        for row, table in enumerate(tables):
            self.responses[row, : len(table)] = table


def _event_columns(net, raster):
    """Timesteps with spikes and the summed weighted input per dendrite there.

    Returns (times, U) with U of shape (M, len(times)); u[j, e] is the sum
    of input weights into dendrite j over the channels spiking at times[e].
    """
    if raster.num_channels != net.num_inputs:
        raise ValueError(
            f"raster has {raster.num_channels} channels, network expects "
            f"{net.num_inputs}"
        )
    if raster.num_events == 0:
        return np.zeros(0, dtype=np.intp), np.zeros((net.num_dendrites, 0))
    channels = np.array([c for c, _ in raster.events], dtype=np.intp)
    times = np.array([t for _, t in raster.events], dtype=np.intp)
    unique_times, inverse = np.unique(times, return_inverse=True)
    u = np.zeros((net.num_dendrites, len(unique_times)))
    np.add.at(u.T, inverse, net.input_weights[:, channels].T)
    return unique_times, u


def _clamp(values):
    out = np.where(np.abs(values) < LAUNCH_CLAMP, 0.0, values)
    return out


def forward(
    net,
    raster,
    support_epsilon=DEFAULT_SUPPORT_EPS,
    horizon_factor=1.0,
    require_output=False,
    _bank=None,
):
    """Simulate one raster and return the full trace.

    Per timestep t and dendrite j: the weighted inputs are summed, squashed
    through the dendrite's logistic, and any nonzero result launches that
    dendrite's kernel response scaled by the squashed value; responses
    superpose additively on the dendritic potential a[j].  Nonlinear leaky
    integrator dendrites evolve by the step_leaky recurrence instead.  With
    `swapped_order` the kernel integrates the raw summed input and the
    logistic is applied to the accumulated potential.

    If output weights are solved, soma rows y = W2 @ A and spikes
    z = (y > theta) are included; with `soma_reset` all dendritic
    potentials are forced to zero on the step after any output spike.
    """
    if require_output and not net.trained:
        raise RuntimeError("output weights are unset; train the network first")
    bank = _bank or _KernelBank(net, support_epsilon, horizon_factor)
    times, u_cols = _event_columns(net, raster)
    k_steps = raster.num_steps

    if net.swapped_order:
        launch = _clamp(u_cols)
    else:
        launch = _clamp(logistic(bank.gains[:, None] * u_cols, gain=1.0))

    if net.trained and net.soma_reset:
        return _forward_with_reset(net, bank, times, launch, k_steps)

    activations = np.zeros((net.num_dendrites, k_steps))
    width_max = bank.horizon
    if len(bank.conv_idx) and width_max:
        conv_launch = launch[bank.conv_idx]
        for col, t0 in enumerate(times):
            width = min(width_max, k_steps - t0)
            activations[bank.conv_idx, t0 : t0 + width] += (
                conv_launch[:, col, None] * bank.responses[:, :width]
            )
    if len(bank.leaky_idx):
        drive = np.zeros((len(bank.leaky_idx), k_steps))
        drive[:, times] = launch[bank.leaky_idx]
        state = np.zeros(len(bank.leaky_idx))
        for t in range(k_steps):
            state = step_leaky_vec(state, drive[:, t], bank.leaks)
            activations[bank.leaky_idx, t] = state

    if net.swapped_order:
        activations = logistic(bank.gains[:, None] * activations, gain=1.0)

    if not net.trained:
        return ForwardTrace(activations=activations)
    soma = net.output_weights @ activations
    spikes = soma > net.theta
    return ForwardTrace(activations=activations, soma=soma, output_spikes=spikes)


def step_leaky_vec(state, drive, leaks):
    """Vectorized nonlinear leaky step with per-dendrite leak factors."""
    return leaks * state / (1.0 + state * state) + drive


def _forward_with_reset(net, bank, times, launch, k_steps):
    """Sequential path: zero every dendritic potential after an output spike."""
    activations = np.zeros((net.num_dendrites, k_steps))
    soma = np.zeros((net.num_outputs, k_steps))
    spikes = np.zeros((net.num_outputs, k_steps), dtype=bool)
    event_at = {int(t): i for i, t in enumerate(times)}
    leaky_state = np.zeros(len(bank.leaky_idx))
    width_max = bank.horizon
    for t in range(k_steps):
        col = event_at.get(t)
        if col is not None and len(bank.conv_idx) and width_max:
            width = min(width_max, k_steps - t)
            activations[bank.conv_idx, t : t + width] += (
                launch[bank.conv_idx, col, None] * bank.responses[:, :width]
            )
        if len(bank.leaky_idx):
            drive = launch[bank.leaky_idx, col] if col is not None else 0.0
            leaky_state = step_leaky_vec(leaky_state, drive, bank.leaks)
            activations[bank.leaky_idx, t] = leaky_state
        column = activations[:, t]
        if net.swapped_order:
            column = logistic(bank.gains * column, gain=1.0)
            activations[:, t] = column
        soma[:, t] = net.output_weights @ column
        fired = soma[:, t] > net.theta
        spikes[:, t] = fired
        if fired.any() and t + 1 < k_steps:
            activations[:, t + 1 :] = 0.0
            leaky_state = np.zeros(len(bank.leaky_idx))
    return ForwardTrace(activations=activations, soma=soma, output_spikes=spikes)


def collect_activations(
    net, rasters, streaming=False, support_epsilon=DEFAULT_SUPPORT_EPS
):
    """Activation matrix for a presentation list, columns concatenated.

    Dendritic state resets between rasters (each presentation independent);
    with `streaming=True` the rasters are joined into one continuous
    sequence so kernel responses persist across the seams.
    """
    rasters = list(rasters)
    if not rasters:
        raise ValueError("need at least one raster")
    if streaming:
        rasters = [concat_rasters(rasters)]
    bank = _KernelBank(net, support_epsilon, 1.0)
    blocks = [
        forward(net, raster, support_epsilon=support_epsilon, _bank=bank).activations
        for raster in rasters
    ]
    return np.hstack(blocks)
