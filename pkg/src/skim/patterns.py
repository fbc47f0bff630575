"""Synthetic tasks, target shaping, time-warp augmentation and labeled sets.

The embedded-pattern task hides a fixed spatio-temporal spike pattern at
Poisson-distributed times inside a stream of Poisson noise spikes; the
network must emit an output spike in a short window shortly after each
occurrence.  Labeled raster sets carry one presentation (utterance) per
raster for classification-style evaluation, with uniform time warping as
the augmentation for cadence variation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .network import SpikeRaster
from .util import substream


@dataclass(frozen=True)
class EmbeddedPatternTask:
    """Geometry of one generated pattern-in-noise stream."""

    num_channels: int
    pattern: tuple  # ((channel, offset), ...) with offsets < pattern_len
    pattern_len: int
    stream_len: int
    pattern_times: tuple  # embedding start timesteps
    noise_events: tuple  # ((channel, timestep), ...)
    target_delay: int
    target_width: int
    target_amplitude: float
    seed: int

    @property
    def last_offset(self):
        return max(off for _, off in self.pattern)

    def reference_times(self):
        """Per embedding, the timestep its target window starts."""
        last = self.last_offset
        return tuple(t + last + self.target_delay for t in self.pattern_times)


def _draw_pattern(rng, num_channels, pattern_len, count):
    channels = rng.permutation(num_channels)[:count]
    offsets = rng.integers(0, pattern_len, size=count)
    pattern = sorted(zip(channels.tolist(), offsets.tolist()), key=lambda e: (e[1], e[0]))
    return tuple((int(c), int(o)) for c, o in pattern)


def _poisson_times(rng, count, span_each, total_len):
    """Start times of `count` non-overlapping spans, Poisson-placed.

    Conditioned on the count, a Poisson process is a sorted uniform draw;
    the hard gap `span_each` between starts keeps embeddings (and their
    target windows) from overlapping.
    """
    slack = total_len - count * span_each
    if slack < 0:
        raise ValueError(
            f"stream of {total_len} steps cannot fit {count} embeddings of "
            f"span {span_each}"
        )
    jitter = np.sort(rng.uniform(0.0, slack + 1.0, size=count))
    return tuple(int(jitter[i]) + i * span_each for i in range(count))


def gen_embedded_task(
    num_channels,
    pattern_len,
    pattern_spike_count,
    stream_len,
    num_embeddings,
    noise_ratio,
    target_delay=20,
    target_width=10,
    target_amplitude=1.0,
    seed=0,
):
    """Generate the pattern-in-noise stream and its target signal.

    A fixed random pattern (one spike on each of `pattern_spike_count`
    distinct channels, offsets inside `pattern_len`) is embedded at
    Poisson-distributed times; independent Poisson noise spikes are added
    so their expected count is noise_ratio times the number of pattern
    spikes.  The single-row target is `target_amplitude` over the window
    starting `target_delay` steps after each embedding's last pattern
    spike, zero elsewhere.  Fully deterministic given `seed`: the pattern
    and embedding times come from the task substream, the noise from the
    noise substream, so changing the ratio leaves the embeddings intact.

    Returns (raster, targets, task) with targets of shape (1, stream_len).
    """
    if pattern_spike_count > num_channels:
        raise ValueError("at most one pattern spike per channel")
    if pattern_spike_count < 1 or pattern_len < 1:
        raise ValueError("pattern must contain at least one spike")
    if noise_ratio < 0:
        raise ValueError("noise_ratio must be >= 0")
    if target_delay < 0 or target_width < 1:
        raise ValueError("target window must have delay >= 0 and width >= 1")
    if not target_amplitude > 0:
        raise ValueError("target_amplitude must be > 0")

    rng_task = substream(seed, "task")
    rng_noise = substream(seed, "noise")

    pattern = _draw_pattern(rng_task, num_channels, pattern_len, pattern_spike_count)
    last_offset = max(off for _, off in pattern)
    span = pattern_len + target_delay + target_width
    starts = _poisson_times(rng_task, num_embeddings, span, stream_len)

    events = set()
    for start in starts:
        for channel, offset in pattern:
            events.add((channel, start + offset))

    expected_noise = noise_ratio * num_embeddings * pattern_spike_count
    noise_events = ()
    if expected_noise > 0:
        sigma = math.sqrt(expected_noise)
        count = int(rng_noise.poisson(expected_noise))
        while abs(count - expected_noise) > 3.0 * sigma:
            count = int(rng_noise.poisson(expected_noise))
        occupied = np.zeros(num_channels * stream_len, dtype=bool)
        for channel, t in events:
            occupied[channel * stream_len + t] = True
        free = np.nonzero(~occupied)[0]
        if count > len(free):
            raise ValueError("stream too dense to place the requested noise spikes")
        chosen = rng_noise.choice(free, size=count, replace=False)
        noise_events = tuple(
            sorted(
                (int(c // stream_len), int(c % stream_len)) for c in np.sort(chosen)
            )
        )
        events.update(noise_events)

    raster = SpikeRaster(num_channels, stream_len, tuple(events))
    task = EmbeddedPatternTask(
        num_channels=num_channels,
        pattern=pattern,
        pattern_len=int(pattern_len),
        stream_len=int(stream_len),
        pattern_times=starts,
        noise_events=noise_events,
        target_delay=int(target_delay),
        target_width=int(target_width),
        target_amplitude=float(target_amplitude),
        seed=int(seed),
    )
    refs = task.reference_times()
    targets = make_target_signal(
        refs, [0] * len(refs), target_width, target_amplitude, stream_len, 1
    )
    return raster, targets, task


def make_target_signal(
    reference_times, classes, width, amplitude, num_steps, num_outputs
):
    """Desired soma matrix: `amplitude` over [ref, ref+width) on each
    labeled output row, zero elsewhere.  Overlapping windows merge."""
    if width < 1:
        raise ValueError("width must be >= 1")
    if not amplitude > 0:
        raise ValueError("amplitude must be > 0")
    targets = np.zeros((num_outputs, num_steps))
    for ref, cls in zip(reference_times, classes):
        ref = int(ref)
        if not (0 <= ref and ref + width <= num_steps):
            raise ValueError(
                f"target window [{ref}, {ref + width}) does not fit in "
                f"[0, {num_steps})"
            )
        if not 0 <= cls < num_outputs:
            raise ValueError(f"class {cls} out of range for {num_outputs} outputs")
        row = targets[cls, ref : ref + width]
        np.maximum(row, amplitude, out=row)
    return targets


def _warp_time(t, factor):
    # Round half away from zero; times are nonnegative so this is floor(x+0.5).
    return int(math.floor(t * factor + 0.5))


def time_warp(raster, factor):
    """Uniformly rescale all spike times by `factor`.

    Each event time maps to round(t * factor); the step count scales to
    ceil(K * factor); events colliding on one channel merge into a single
    spike.
    """
    if not (np.isfinite(factor) and factor > 0):
        raise ValueError(f"warp factor must be finite and > 0, got {factor}")
    new_steps = int(math.ceil(raster.num_steps * factor))
    warped = {(c, min(_warp_time(t, factor), new_steps - 1)) for c, t in raster.events}
    return SpikeRaster(raster.num_channels, new_steps, tuple(warped))


@dataclass(frozen=True)
class LabeledRasterSet:
    """One raster per presentation, plus class labels and reference times.

    Rasters share a channel count and a common step count (shorter
    presentations are padded with silence) so the whole set round-trips
    losslessly through the text format.  `reference_times` anchor where
    each presentation's target spike window starts.
    """

    rasters: tuple
    labels: tuple
    reference_times: tuple

    def __post_init__(self):
        rasters = tuple(self.rasters)
        labels = tuple(int(x) for x in self.labels)
        refs = tuple(int(x) for x in self.reference_times)
        if not rasters:
            raise ValueError("raster set must be non-empty")
        if not (len(rasters) == len(labels) == len(refs)):
            raise ValueError("rasters, labels and reference_times lengths differ")
        channels = rasters[0].num_channels
        steps = rasters[0].num_steps
        for raster in rasters:
            if raster.num_channels != channels:
                raise ValueError("all rasters must share a channel count")
            if raster.num_steps != steps:
                raise ValueError("all rasters must share a step count")
        for label in labels:
            if label < 0:
                raise ValueError("labels must be nonnegative")
        for ref in refs:
            if not 0 <= ref < steps:
                raise ValueError(f"reference time {ref} outside raster span")
        object.__setattr__(self, "rasters", rasters)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "reference_times", refs)

    @property
    def num_channels(self):
        return self.rasters[0].num_channels

    @property
    def num_steps(self):
        return self.rasters[0].num_steps

    def __len__(self):
        return len(self.rasters)


def pad_rasters(rasters, num_steps):
    """Extend every raster with trailing silence to a common step count."""
    out = []
    for raster in rasters:
        if raster.num_steps > num_steps:
            raise ValueError("cannot pad a raster below its own length")
        out.append(SpikeRaster(raster.num_channels, num_steps, raster.events))
    return tuple(out)


def augment_training_set(exemplars, warp_min=0.76, warp_max=1.24, steps=7):
    """Replicate every exemplar at evenly spaced warp factors.

    Factors span [warp_min, warp_max] inclusive (a single step collapses
    to the midpoint); labels carry over and reference times are warped
    with their raster.
    """
    if not warp_min <= warp_max:
        raise ValueError("warp_min must be <= warp_max")
    if not warp_min > 0:
        raise ValueError("warp factors must be positive")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        factors = [(warp_min + warp_max) / 2.0]
    else:
        factors = np.linspace(warp_min, warp_max, steps).tolist()

    max_steps = int(math.ceil(exemplars.num_steps * max(factors)))
    rasters, labels, refs = [], [], []
    for raster, label, ref in zip(
        exemplars.rasters, exemplars.labels, exemplars.reference_times
    ):
        for factor in factors:
            warped = time_warp(raster, factor)
            rasters.append(warped)
            labels.append(label)
            refs.append(min(_warp_time(ref, factor), warped.num_steps - 1))
    return LabeledRasterSet(pad_rasters(rasters, max_steps), labels, refs)


def gen_class_set(
    num_channels,
    num_classes,
    per_class,
    span,
    spike_prob=0.8,
    jitter=8,
    warp_min=0.76,
    warp_max=1.24,
    drop_prob=0.05,
    seed=0,
):
    """Synthetic sparse-word dataset: one spike or none per channel.

    Each class owns a fixed prototype (channel spikes with probability
    `spike_prob` at a uniform time inside `span`).  Every presentation is
    the prototype under a random uniform time warp, per-spike jitter and
    occasional channel dropout, mimicking speaker variation over a sparse
    time-encoded word.  Reference time is the presentation's last spike.

    Returns a LabeledRasterSet with `num_classes * per_class` rasters,
    grouped by class, presentation 0 of each class being the unwarped
    prototype (the natural training exemplar).
    """
    if num_classes < 1 or per_class < 1:
        raise ValueError("need at least one class and one presentation per class")
    rng = substream(seed, "task")
    prototypes = []
    for _ in range(num_classes):
        channels = np.nonzero(rng.random(num_channels) < spike_prob)[0]
        while len(channels) == 0:
            channels = np.nonzero(rng.random(num_channels) < spike_prob)[0]
        times = rng.integers(0, span, size=len(channels))
        prototypes.append(tuple(zip(channels.tolist(), times.tolist())))

    max_steps = int(math.ceil(span * warp_max)) + jitter + 1
    rasters, labels, refs = [], [], []
    for cls, prototype in enumerate(prototypes):
        for rep in range(per_class):
            if rep == 0:
                events = list(prototype)
            else:
                factor = rng.uniform(warp_min, warp_max)
                events = []
                for channel, t in prototype:
                    if drop_prob > 0 and rng.random() < drop_prob:
                        continue
                    warped = _warp_time(t, factor) + int(
                        rng.integers(-jitter, jitter + 1)
                    )
                    events.append((channel, int(np.clip(warped, 0, max_steps - 1))))
                if not events:
                    events = [prototype[0]]
            dedup = sorted(set(events))
            raster = SpikeRaster(num_channels, max_steps, tuple(dedup))
            rasters.append(raster)
            labels.append(cls)
            refs.append(max(t for _, t in dedup))
    return LabeledRasterSet(tuple(rasters), tuple(labels), tuple(refs))


def gen_presentation_set(
    task,
    num_targets,
    num_nontargets,
    raster_len=None,
    noise_ratio=None,
    seed=0,
):
    """Test presentations for an embedded-pattern task.

    Target rasters embed the task's pattern once at a random offset;
    every raster (target or not) carries Poisson noise at the same
    per-timestep density the generating stream had (noise_ratio pattern
    spikes per embedding, spread over the stream).  Labels: 1 = pattern
    present, 0 = noise only.  Reference times follow the task's target
    geometry (for non-targets they mark where a pattern at the same draw
    would have put its window; unused by scoring).
    """
    if noise_ratio is None:
        noise_ratio = 1.0
    span = task.pattern_len + task.target_delay + task.target_width
    if raster_len is None:
        raster_len = span + 3 * task.target_width
    if raster_len < span:
        raise ValueError("raster_len shorter than the pattern plus its window")
    rng = substream(seed, "test")
    pattern_size = len(task.pattern)
    num_embeds = max(len(task.pattern_times), 1)
    expected = noise_ratio * num_embeds * pattern_size * raster_len / task.stream_len
    rasters, labels, refs = [], [], []
    for present in [True] * num_targets + [False] * num_nontargets:
        start = int(rng.integers(0, raster_len - span + 1))
        events = set()
        if present:
            for channel, offset in task.pattern:
                events.add((channel, start + offset))
        count = int(rng.poisson(expected)) if expected > 0 else 0
        occupied = np.zeros(task.num_channels * raster_len, dtype=bool)
        for channel, t in events:
            occupied[channel * raster_len + t] = True
        free = np.nonzero(~occupied)[0]
        count = min(count, len(free))
        if count:
            chosen = rng.choice(free, size=count, replace=False)
            events.update(
                (int(c // raster_len), int(c % raster_len)) for c in chosen
            )
        rasters.append(SpikeRaster(task.num_channels, raster_len, tuple(events)))
        labels.append(1 if present else 0)
        refs.append(start + task.last_offset + task.target_delay)
    return LabeledRasterSet(tuple(rasters), tuple(labels), tuple(refs))


def targets_for_set(raster_set, target_class, width, amplitude, num_outputs=None):
    """Stacked target matrix for a labeled set, one block per raster.

    With one output row, windows are placed for rasters of `target_class`
    only; with multiple rows, each raster's window lands on its label's
    row.  Returns an (N, len(set) * K) matrix aligned with
    collect_activations on the same set.
    """
    k = raster_set.num_steps
    if num_outputs is None:
        num_outputs = 1
    blocks = []
    for raster, label, ref in zip(
        raster_set.rasters, raster_set.labels, raster_set.reference_times
    ):
        if num_outputs == 1:
            refs = [ref] if label == target_class else []
            classes = [0] * len(refs)
        else:
            refs = [ref]
            classes = [label]
        ref_fit = [min(r, k - width) for r in refs]
        blocks.append(
            make_target_signal(ref_fit, classes, width, amplitude, k, num_outputs)
        )
    return np.hstack(blocks) if blocks else np.zeros((num_outputs, 0))
