"""On-disk formats: raster text files, labeled raster sets, network JSON,
weight CSV.  All writers are atomic and deterministic so identical inputs
produce byte-identical files."""

import json
import os

import numpy as np

from .kernels import KernelFamily, KernelKind, KernelSpec
from .network import SkimNetwork, SpikeRaster
from .patterns import LabeledRasterSet
from .util import write_text_atomic


class ParseError(ValueError):
    """Malformed text input; carries the offending line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


# --------------------------------------------------------------------------
# Spike raster text format: header "L K", then one "channel time" per line.


def raster_to_text(raster):
    lines = [f"{raster.num_channels} {raster.num_steps}"]
    lines.extend(f"{c} {t}" for c, t in raster.events)
    return "\n".join(lines) + "\n"


def save_raster(raster, path):
    write_text_atomic(path, raster_to_text(raster))


def _parse_ints(path, line_no, line, count, what):
    parts = line.split()
    if len(parts) != count:
        raise ParseError(path, line_no, f"expected {what}, got {line!r}")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ParseError(path, line_no, f"expected integers, got {line!r}") from None


def load_raster(path):
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise ParseError(path, 1, "empty raster file")
    channels, steps = _parse_ints(path, 1, lines[0], 2, "header 'L K'")
    events = []
    for i, line in enumerate(lines[1:], start=2):
        c, t = _parse_ints(path, i, line, 2, "event 'channel time'")
        if not 0 <= c < channels:
            raise ParseError(path, i, f"channel {c} out of range [0, {channels})")
        if not 0 <= t < steps:
            raise ParseError(path, i, f"timestep {t} out of range [0, {steps})")
        events.append((c, t))
    try:
        return SpikeRaster(channels, steps, tuple(events))
    except ValueError as exc:
        raise ParseError(path, 1, str(exc)) from None


# --------------------------------------------------------------------------
# Labeled raster set: header "L K num_rasters"; per raster a descriptor
# line "raster <idx> label <c> ref <t> events <n>" followed by n events.


def raster_set_to_text(raster_set):
    lines = [
        f"{raster_set.num_channels} {raster_set.num_steps} {len(raster_set)}"
    ]
    for idx, (raster, label, ref) in enumerate(
        zip(raster_set.rasters, raster_set.labels, raster_set.reference_times)
    ):
        lines.append(f"raster {idx} label {label} ref {ref} events {raster.num_events}")
        lines.extend(f"{c} {t}" for c, t in raster.events)
    return "\n".join(lines) + "\n"


def save_raster_set(raster_set, path):
    write_text_atomic(path, raster_set_to_text(raster_set))


def load_raster_set(path):
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    stripped = [(no, ln) for no, ln in enumerate(lines, start=1) if ln.strip()]
    if not stripped:
        raise ParseError(path, 1, "empty raster set file")
    head_no, head = stripped[0]
    channels, steps, count = _parse_ints(
        path, head_no, head, 3, "header 'L K num_rasters'"
    )
    rasters, labels, refs = [], [], []
    pos = 1
    for expect_idx in range(count):
        if pos >= len(stripped):
            raise ParseError(path, stripped[-1][0], "missing raster descriptor")
        desc_no, desc = stripped[pos]
        parts = desc.split()
        if (
            len(parts) != 8
            or parts[0] != "raster"
            or parts[2] != "label"
            or parts[4] != "ref"
            or parts[6] != "events"
        ):
            raise ParseError(
                path,
                desc_no,
                "expected 'raster <idx> label <c> ref <t> events <n>', "
                f"got {desc!r}",
            )
        try:
            idx, label, ref, n_events = (
                int(parts[1]),
                int(parts[3]),
                int(parts[5]),
                int(parts[7]),
            )
        except ValueError:
            raise ParseError(path, desc_no, "non-integer descriptor field") from None
        if idx != expect_idx:
            raise ParseError(path, desc_no, f"expected raster {expect_idx}, got {idx}")
        pos += 1
        events = []
        for _ in range(n_events):
            if pos >= len(stripped):
                raise ParseError(path, stripped[-1][0], "truncated event list")
            ev_no, ev = stripped[pos]
            c, t = _parse_ints(path, ev_no, ev, 2, "event 'channel time'")
            if not 0 <= c < channels:
                raise ParseError(
                    path, ev_no, f"channel {c} out of range [0, {channels})"
                )
            if not 0 <= t < steps:
                raise ParseError(path, ev_no, f"timestep {t} out of range [0, {steps})")
            events.append((c, t))
            pos += 1
        try:
            rasters.append(SpikeRaster(channels, steps, tuple(events)))
        except ValueError as exc:
            raise ParseError(path, desc_no, str(exc)) from None
        labels.append(label)
        refs.append(ref)
    if pos != len(stripped):
        raise ParseError(path, stripped[pos][0], "trailing content after last raster")
    try:
        return LabeledRasterSet(tuple(rasters), tuple(labels), tuple(refs))
    except ValueError as exc:
        raise ParseError(path, head_no, str(exc)) from None


# --------------------------------------------------------------------------
# Network JSON.


def _kernel_to_dict(spec):
    out = {
        "kind": spec.kind.value,
        "tau": spec.tau,
        "delta_t": spec.delta_t,
        "omega": spec.omega,
        "sigma": spec.sigma,
        "logistic_gain": spec.logistic_gain,
    }
    if spec.custom_table is not None:
        out["custom_table"] = list(spec.custom_table)
    return out


def _kernel_from_dict(data):
    table = data.get("custom_table")
    return KernelSpec(
        kind=KernelKind(data["kind"]),
        tau=data.get("tau", 0.0),
        delta_t=data.get("delta_t", 0.0),
        omega=data.get("omega", 0.0),
        sigma=data.get("sigma", 0.0),
        logistic_gain=data.get("logistic_gain", 5.0),
        custom_table=tuple(table) if table is not None else None,
    )


def _family_param(value):
    return list(value) if isinstance(value, (tuple, list)) else value


def _family_to_dict(family):
    out = {
        "kind": family.kind.value,
        "tau": _family_param(family.tau),
        "delta_t": _family_param(family.delta_t),
        "omega": _family_param(family.omega),
        "sigma": _family_param(family.sigma),
        "logistic_gain": _family_param(family.logistic_gain),
    }
    if family.custom_table is not None:
        out["custom_table"] = list(family.custom_table)
    return out


def family_from_dict(data):
    def param(name, default):
        value = data.get(name, default)
        return tuple(value) if isinstance(value, list) else value

    table = data.get("custom_table")
    return KernelFamily(
        kind=KernelKind(data["kind"]),
        tau=param("tau", 0.0),
        delta_t=param("delta_t", 0.0),
        omega=param("omega", 0.0),
        sigma=param("sigma", 0.0),
        logistic_gain=param("logistic_gain", 5.0),
        custom_table=tuple(table) if table is not None else None,
    )


def network_to_dict(net):
    return {
        "num_inputs": net.num_inputs,
        "num_dendrites": net.num_dendrites,
        "num_outputs": net.num_outputs,
        "seed": net.seed,
        "theta": net.theta,
        "weight_range": list(net.weight_range),
        "soma_reset": net.soma_reset,
        "swapped_order": net.swapped_order,
        "input_weights": [list(row) for row in net.input_weights],
        "output_weights": (
            [list(row) for row in net.output_weights] if net.trained else None
        ),
        "kernels": [_kernel_to_dict(k) for k in net.kernels],
        "kernel_family": (
            _family_to_dict(net.kernel_family) if net.kernel_family else None
        ),
    }


def network_from_dict(data):
    family = data.get("kernel_family")
    output_weights = data.get("output_weights")
    return SkimNetwork(
        num_inputs=data["num_inputs"],
        num_dendrites=data["num_dendrites"],
        num_outputs=data["num_outputs"],
        input_weights=np.array(data["input_weights"], dtype=np.float64),
        kernels=tuple(_kernel_from_dict(k) for k in data["kernels"]),
        theta=data["theta"],
        seed=data["seed"],
        weight_range=tuple(data.get("weight_range", (-0.5, 0.5))),
        soma_reset=data.get("soma_reset", False),
        swapped_order=data.get("swapped_order", False),
        output_weights=(
            np.array(output_weights, dtype=np.float64)
            if output_weights is not None
            else None
        ),
        kernel_family=family_from_dict(family) if family else None,
    )


def dump_json(data):
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def save_network(net, path):
    write_text_atomic(path, dump_json(network_to_dict(net)))


def load_network(path):
    with open(path, "r") as fh:
        return network_from_dict(json.load(fh))


def save_weights_csv(weights, path):
    """Output weights as CSV, one row per output neuron."""
    weights = np.asarray(weights)
    lines = [",".join(repr(float(w)) for w in row) for row in weights]
    write_text_atomic(path, "\n".join(lines) + "\n")
