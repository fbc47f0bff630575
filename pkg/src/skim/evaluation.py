"""Scoring of network outputs and plot-ready trace export."""

import math
import os
from dataclasses import dataclass

import numpy as np

from .network import _KernelBank, forward
from .kernels import DEFAULT_SUPPORT_EPS
from .util import fmt9, write_text_atomic


@dataclass(frozen=True)
class ConfusionCounts:
    """Presentation-level detection counts."""

    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int

    def __post_init__(self):
        for name in (
            "true_positives",
            "false_positives",
            "false_negatives",
            "true_negatives",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def degenerate(self):
        """True when a wills_error denominator (TP or TN) is zero."""
        return self.true_positives == 0 or self.true_negatives == 0

    @property
    def num_targets(self):
        return self.true_positives + self.false_negatives

    @property
    def num_nontargets(self):
        return self.false_positives + self.true_negatives


def network_outputs(net, raster_set, output_row, support_epsilon=DEFAULT_SUPPORT_EPS):
    """One output neuron's spike train per presentation in the set."""
    if not net.trained:
        raise RuntimeError("output weights are unset; train the network first")
    if not 0 <= output_row < net.num_outputs:
        raise ValueError(f"output row {output_row} out of range")
    bank = _KernelBank(net, support_epsilon, 1.0)
    trains = []
    for raster in raster_set.rasters:
        trace = forward(
            net, raster, support_epsilon=support_epsilon,
            require_output=True, _bank=bank,
        )
        trains.append(trace.output_spikes[output_row])
    return trains


def match_presentations(outputs, raster_set, target_class, window_width):
    """Score per-presentation output spike trains against labels.

    `outputs` holds one boolean spike train (length = the set's step
    count) per raster, for the output neuron under test.  A target-class
    presentation counts as a true positive when at least one spike lands
    inside [ref, ref + window_width); a non-target presentation counts as
    a false positive when it has at least one spike anywhere.
    """
    outputs = list(outputs)
    if len(outputs) != len(raster_set):
        raise ValueError(
            f"{len(outputs)} outputs for {len(raster_set)} presentations"
        )
    if window_width < 1:
        raise ValueError("window_width must be >= 1")
    tp = fp = fn = tn = 0
    for spikes, label, ref in zip(
        outputs, raster_set.labels, raster_set.reference_times
    ):
        spikes = np.asarray(spikes).reshape(-1).astype(bool)
        if spikes.shape[0] != raster_set.num_steps:
            raise ValueError("output length does not match the raster span")
        if label == target_class:
            if spikes[ref : ref + window_width].any():
                tp += 1
            else:
                fn += 1
        else:
            if spikes.any():
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def _ratio(numerator, denominator):
    if numerator == 0:
        return 0.0
    if denominator == 0:
        return math.inf
    return numerator / denominator


def wills_error(counts):
    """Detection error FN/TP + FP/TN (the sparse-digit competition rule).

    A zero denominator with a zero numerator contributes 0; with a nonzero
    numerator the result is the +infinity sentinel (pair with
    `counts.degenerate` when reporting).
    """
    return _ratio(counts.false_negatives, counts.true_positives) + _ratio(
        counts.false_positives, counts.true_negatives
    )


def rate_error(counts):
    """Conventional miss-rate plus false-alarm-rate alternative.

    FN/(TP+FN) + FP/(FP+TN); fixed denominators, unlike wills_error.
    Provided for comparison only.
    """
    return _ratio(counts.false_negatives, counts.num_targets) + _ratio(
        counts.false_positives, counts.num_nontargets
    )


def detection_rate(counts):
    """TP / (TP + FN); zero when there are no target presentations."""
    if counts.num_targets == 0:
        return 0.0
    return counts.true_positives / counts.num_targets


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    write_text_atomic(path, "\n".join(lines) + "\n")


def export_traces(trace, raster, targets, out_dir, dendrites=None):
    """Dump a simulated trace as plot-ready CSV files.

    Writes input_events.csv, activations.csv, soma.csv, output_spikes.csv
    and target.csv into `out_dir` (value columns with 9 significant
    digits).  `dendrites` restricts the activation export to a subset of
    rows.  Returns the file paths keyed by panel name.
    """
    os.makedirs(out_dir, exist_ok=True)
    activations = trace.activations
    num_steps = activations.shape[1]
    if targets is not None and targets.shape[1] != num_steps:
        raise ValueError("target span does not match the trace")
    if raster.num_steps != num_steps:
        raise ValueError("raster span does not match the trace")
    if dendrites is None:
        dendrites = range(activations.shape[0])
    dendrites = list(dendrites)

    paths = {}

    paths["input_events"] = os.path.join(out_dir, "input_events.csv")
    _write_csv(
        paths["input_events"],
        ["channel", "timestep"],
        ([str(c), str(t)] for c, t in raster.events),
    )

    paths["activations"] = os.path.join(out_dir, "activations.csv")
    _write_csv(
        paths["activations"],
        ["timestep"] + [f"dendrite_{j}" for j in dendrites],
        (
            [str(t)] + [fmt9(activations[j, t]) for j in dendrites]
            for t in range(num_steps)
        ),
    )

    n_out = trace.soma.shape[0] if trace.soma is not None else 0
    paths["soma"] = os.path.join(out_dir, "soma.csv")
    _write_csv(
        paths["soma"],
        ["timestep"] + [f"soma_{n}" for n in range(n_out)],
        (
            [str(t)] + [fmt9(trace.soma[n, t]) for n in range(n_out)]
            for t in range(num_steps if trace.soma is not None else 0)
        ),
    )

    paths["output_spikes"] = os.path.join(out_dir, "output_spikes.csv")
    _write_csv(
        paths["output_spikes"],
        ["timestep"] + [f"output_{n}" for n in range(n_out)],
        (
            [str(t)] + [str(int(trace.output_spikes[n, t])) for n in range(n_out)]
            for t in range(num_steps if trace.output_spikes is not None else 0)
        ),
    )

    n_tgt = targets.shape[0] if targets is not None else 0
    paths["target"] = os.path.join(out_dir, "target.csv")
    _write_csv(
        paths["target"],
        ["timestep"] + [f"target_{n}" for n in range(n_tgt)],
        (
            [str(t)] + [fmt9(targets[n, t]) for n in range(n_tgt)]
            for t in range(num_steps if targets is not None else 0)
        ),
    )
    return paths
