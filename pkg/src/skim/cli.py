"""Command-line orchestration: generate tasks, train, test, prune, inspect.

All commands are driven by a JSON config merged over built-in defaults
(the defaults reproduce the four-channel embedded-pattern demo).  Every
random draw descends from the single config seed through named substreams,
and all artifacts are written atomically with deterministic content, so a
rerun with the same config is byte-identical.
"""

import argparse
import copy
import json
import os
import sys

from . import evaluation, fileio, patterns, pruning
from .kernels import FAMILY_CATALOG, KernelKind
from .network import forward, new_network
from .solver import train_network
from .util import write_text_atomic


class ConfigError(ValueError):
    """Invalid run configuration; message lists every violated field."""


DEFAULT_CONFIG = {
    "seed": 42,
    "network": {
        "num_inputs": 4,
        "num_dendrites": 80,
        "num_outputs": 1,
        "kernel": {"kind": "alpha", "tau": [0.0, 100.0], "logistic_gain": 5.0},
        "weight_range": [-0.5, 0.5],
        "theta": 0.5,
        "soma_reset": False,
        "swapped_order": False,
    },
    "task": {
        "type": "embedded",
        "pattern_len": 200,
        "pattern_spikes": 4,
        "stream_len": 16000,
        "num_embeddings": 40,
        "noise_ratio": 1.0,
        "test_targets": 50,
        "test_nontargets": 50,
        "train_path": None,
        "test_path": None,
        "target_class": 1,
    },
    "training": {
        "solver": "batch",
        "reg": 1e-8,
        "tol": None,
        "target_amplitude": 2.0,
        "target_width": 10,
        "target_delay": 20,
        "warp_min": 0.76,
        "warp_max": 1.24,
        "warp_steps": 7,
    },
    "prune": {
        "strategy": "two_pass",
        "keep": 40,
        "discard_fraction": 0.25,
        "rounds": 3,
    },
    "output": {"dir": "out", "traces": True},
}


def _merge(base, override, path, problems):
    merged = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            problems.append(f"{where}: unknown configuration key")
            continue
        if isinstance(base[key], dict) and isinstance(value, dict):
            merged[key] = _merge(base[key], value, where, problems)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path=None, overrides=None):
    """Merge a config file over defaults and validate it fully.

    Raises ConfigError enumerating every violated field; nothing is
    executed (or written) for an invalid config.
    """
    problems = []
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path, "r") as fh:
                user = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config: file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config: top level must be a JSON object")
        config = _merge(config, user, "", problems)
    for key, value in (overrides or {}).items():
        section, _, field = key.partition(".")
        if field:
            config[section][field] = value
        else:
            config[section] = value
    _validate(config, problems)
    if problems:
        raise ConfigError("\n".join(problems))
    return config


def _validate(cfg, problems):
    def check(cond, field, message):
        if not cond:
            problems.append(f"{field}: {message}")

    net = cfg["network"]
    for dim in ("num_inputs", "num_dendrites", "num_outputs"):
        check(
            isinstance(net[dim], int) and net[dim] >= 1,
            f"network.{dim}",
            "must be an integer >= 1",
        )
    rng = net["weight_range"]
    check(
        isinstance(rng, (list, tuple)) and len(rng) == 2 and rng[0] < rng[1],
        "network.weight_range",
        "must be [lo, hi] with lo < hi",
    )
    kind = net["kernel"].get("kind")
    try:
        KernelKind(kind)
    except ValueError:
        problems.append(
            f"network.kernel.kind: unknown kind {kind!r} "
            f"(expected one of {sorted(k.value for k in KernelKind)})"
        )
    amplitude = cfg["training"]["target_amplitude"]
    check(
        isinstance(net["theta"], (int, float)) and 0 < net["theta"],
        "network.theta",
        "must be > 0",
    )
    if isinstance(amplitude, (int, float)) and amplitude > 0:
        check(
            net["theta"] < amplitude,
            "network.theta",
            f"must lie strictly below the target amplitude {amplitude}",
        )

    task = cfg["task"]
    check(task["type"] in ("embedded", "raster_set"), "task.type",
          "must be 'embedded' or 'raster_set'")
    if task["type"] == "embedded":
        for field in ("pattern_len", "stream_len", "num_embeddings",
                      "test_targets", "test_nontargets"):
            check(
                isinstance(task[field], int) and task[field] >= 0,
                f"task.{field}",
                "must be a nonnegative integer",
            )
        check(
            isinstance(task["pattern_spikes"], int) and task["pattern_spikes"] >= 1,
            "task.pattern_spikes",
            "must be an integer >= 1",
        )
        if isinstance(task["pattern_spikes"], int) and isinstance(
            net["num_inputs"], int
        ):
            check(
                task["pattern_spikes"] <= net["num_inputs"],
                "task.pattern_spikes",
                "cannot exceed network.num_inputs (one spike per channel)",
            )
        check(task["noise_ratio"] >= 0, "task.noise_ratio", "must be >= 0")
    else:
        for field in ("train_path", "test_path"):
            path = task[field]
            if path is not None:
                check(os.path.exists(path), f"task.{field}", f"missing file {path}")

    training = cfg["training"]
    check(
        training["solver"] in ("batch", "online"),
        "training.solver",
        "must be 'batch' or 'online'",
    )
    check(training["reg"] > 0, "training.reg", "must be > 0")
    if training["tol"] is not None:
        check(training["tol"] >= 0, "training.tol", "must be >= 0 (or null)")
    check(amplitude > 0, "training.target_amplitude", "must be > 0")
    check(training["target_width"] >= 1, "training.target_width", "must be >= 1")
    check(training["target_delay"] >= 0, "training.target_delay", "must be >= 0")
    check(
        0 < training["warp_min"] <= training["warp_max"],
        "training.warp_min",
        "must satisfy 0 < warp_min <= warp_max",
    )
    check(training["warp_steps"] >= 1, "training.warp_steps", "must be >= 1")

    prune = cfg["prune"]
    check(
        prune["strategy"] in ("two_pass", "iterative"),
        "prune.strategy",
        "must be 'two_pass' or 'iterative'",
    )
    if isinstance(net["num_dendrites"], int):
        check(
            isinstance(prune["keep"], int)
            and 1 <= prune["keep"] < max(net["num_dendrites"], 2),
            "prune.keep",
            "must be an integer in [1, num_dendrites)",
        )
    check(
        0 < prune["discard_fraction"] < 1,
        "prune.discard_fraction",
        "must lie strictly in (0, 1)",
    )
    check(prune["rounds"] >= 1, "prune.rounds", "must be >= 1")


def _build_network(cfg):
    net_cfg = cfg["network"]
    family = fileio.family_from_dict(net_cfg["kernel"])
    return new_network(
        num_inputs=net_cfg["num_inputs"],
        num_dendrites=net_cfg["num_dendrites"],
        num_outputs=net_cfg["num_outputs"],
        kernel_family=family,
        weight_range=tuple(net_cfg["weight_range"]),
        theta=net_cfg["theta"],
        seed=cfg["seed"],
        soma_reset=net_cfg["soma_reset"],
        swapped_order=net_cfg["swapped_order"],
    )


def _gen_train_task(cfg):
    task, training = cfg["task"], cfg["training"]
    return patterns.gen_embedded_task(
        num_channels=cfg["network"]["num_inputs"],
        pattern_len=task["pattern_len"],
        pattern_spike_count=task["pattern_spikes"],
        stream_len=task["stream_len"],
        num_embeddings=task["num_embeddings"],
        noise_ratio=task["noise_ratio"],
        target_delay=training["target_delay"],
        target_width=training["target_width"],
        target_amplitude=training["target_amplitude"],
        seed=cfg["seed"],
    )


def _training_data(cfg):
    """Training rasters + target matrix per the configured task."""
    task, training = cfg["task"], cfg["training"]
    if task["type"] == "embedded":
        raster, targets, _ = _gen_train_task(cfg)
        return [raster], targets
    if task["train_path"] is None:
        raise ConfigError("task.train_path: required for raster_set training")
    exemplars = fileio.load_raster_set(task["train_path"])
    augmented = patterns.augment_training_set(
        exemplars,
        warp_min=training["warp_min"],
        warp_max=training["warp_max"],
        steps=training["warp_steps"],
    )
    targets = patterns.targets_for_set(
        augmented,
        target_class=task["target_class"],
        width=training["target_width"],
        amplitude=training["target_amplitude"],
        num_outputs=cfg["network"]["num_outputs"],
    )
    return list(augmented.rasters), targets


def _test_set(cfg):
    task = cfg["task"]
    if task["type"] == "embedded":
        _, _, geometry = _gen_train_task(cfg)
        return patterns.gen_presentation_set(
            geometry,
            num_targets=task["test_targets"],
            num_nontargets=task["test_nontargets"],
            noise_ratio=task["noise_ratio"],
            seed=cfg["seed"],
        )
    if task["test_path"] is None:
        raise ConfigError("task.test_path: required for raster_set testing")
    return fileio.load_raster_set(task["test_path"])


def _evaluate(net, raster_set, cfg):
    """Confusion counts for the configured target class."""
    task, training = cfg["task"], cfg["training"]
    target_class = 1 if task["type"] == "embedded" else task["target_class"]
    output_row = 0 if net.num_outputs == 1 else target_class
    outputs = evaluation.network_outputs(net, raster_set, output_row)
    return evaluation.match_presentations(
        outputs, raster_set, target_class, training["target_width"]
    )


def _metrics_dict(counts, extra=None):
    error = evaluation.wills_error(counts)
    metrics = {
        "true_positives": counts.true_positives,
        "false_positives": counts.false_positives,
        "false_negatives": counts.false_negatives,
        "true_negatives": counts.true_negatives,
        "detection_rate": evaluation.detection_rate(counts),
        "wills_error": error if error != float("inf") else "inf",
        "wills_error_degenerate": counts.degenerate,
        "rate_error": evaluation.rate_error(counts),
    }
    metrics.update(extra or {})
    return metrics


def _write_json(data, path):
    write_text_atomic(path, fileio.dump_json(data))


def _export_demo_traces(net, cfg, out_dir):
    """Short fresh stream with a few embeddings, dumped panel by panel."""
    task, training = cfg["task"], cfg["training"]
    span = task["pattern_len"] + training["target_delay"] + training["target_width"]
    raster, targets, _ = patterns.gen_embedded_task(
        num_channels=cfg["network"]["num_inputs"],
        pattern_len=task["pattern_len"],
        pattern_spike_count=task["pattern_spikes"],
        stream_len=span * 6,
        num_embeddings=3,
        noise_ratio=task["noise_ratio"],
        target_delay=training["target_delay"],
        target_width=training["target_width"],
        target_amplitude=training["target_amplitude"],
        seed=cfg["seed"] + 1,
    )
    trace = forward(net, raster)
    return evaluation.export_traces(
        trace, raster, targets, os.path.join(out_dir, "traces")
    )


def cmd_demo(cfg):
    """End-to-end run: generate, train, test, export."""
    out_dir = cfg["output"]["dir"]
    os.makedirs(out_dir, exist_ok=True)
    net = _build_network(cfg)
    rasters, targets = _training_data(cfg)
    result = train_network(
        net,
        rasters,
        targets,
        solver=cfg["training"]["solver"],
        reg=cfg["training"]["reg"],
        tol=cfg["training"]["tol"],
    )
    test_set = _test_set(cfg)
    counts = _evaluate(net, test_set, cfg)
    fileio.save_network(net, os.path.join(out_dir, "network.json"))
    fileio.save_weights_csv(net.output_weights, os.path.join(out_dir, "weights.csv"))
    metrics = _metrics_dict(
        counts,
        {"train_residual": result.residual, "num_presentations": len(test_set)},
    )
    _write_json(metrics, os.path.join(out_dir, "metrics.json"))
    if cfg["output"]["traces"]:
        _export_demo_traces(net, cfg, out_dir)
    summary = {k: metrics[k] for k in ("detection_rate", "wills_error")}
    print(json.dumps(summary))
    return 0


def cmd_train(cfg):
    out_dir = cfg["output"]["dir"]
    os.makedirs(out_dir, exist_ok=True)
    net = _build_network(cfg)
    rasters, targets = _training_data(cfg)
    result = train_network(
        net,
        rasters,
        targets,
        solver=cfg["training"]["solver"],
        reg=cfg["training"]["reg"],
        tol=cfg["training"]["tol"],
    )
    fileio.save_network(net, os.path.join(out_dir, "network.json"))
    fileio.save_weights_csv(net.output_weights, os.path.join(out_dir, "weights.csv"))
    _write_json(
        {"train_residual": result.residual, "num_columns": targets.shape[1]},
        os.path.join(out_dir, "training.json"),
    )
    print(f"trained network written to {out_dir}/network.json")
    return 0


def cmd_test(cfg):
    out_dir = cfg["output"]["dir"]
    net_path = os.path.join(out_dir, "network.json")
    if not os.path.exists(net_path):
        raise ConfigError(f"output.dir: no trained network at {net_path}")
    net = fileio.load_network(net_path)
    if not net.trained:
        raise ConfigError(f"output.dir: network at {net_path} has no output weights")
    test_set = _test_set(cfg)
    counts = _evaluate(net, test_set, cfg)
    metrics = _metrics_dict(counts, {"num_presentations": len(test_set)})
    _write_json(metrics, os.path.join(out_dir, "metrics.json"))
    print(json.dumps({k: metrics[k] for k in ("detection_rate", "wills_error")}))
    return 0


def cmd_prune(cfg):
    out_dir = cfg["output"]["dir"]
    net_path = os.path.join(out_dir, "network.json")
    if not os.path.exists(net_path):
        raise ConfigError(f"output.dir: no trained network at {net_path}")
    net = fileio.load_network(net_path)
    rasters, targets = _training_data(cfg)
    prune_cfg = cfg["prune"]
    if prune_cfg["strategy"] == "two_pass":
        pruned, report = pruning.prune_two_pass(
            net, rasters, targets, keep=prune_cfg["keep"], tol=cfg["training"]["tol"]
        )
    else:
        pruned, report = pruning.prune_iterative(
            net,
            rasters,
            targets,
            discard_fraction=prune_cfg["discard_fraction"],
            rounds=prune_cfg["rounds"],
            seed=cfg["seed"],
            tol=cfg["training"]["tol"],
        )
    fileio.save_network(pruned, os.path.join(out_dir, "pruned_network.json"))
    _write_json(report.to_dict(), os.path.join(out_dir, "prune_report.json"))
    print(
        f"pruned to {pruned.num_dendrites} dendrites; residual "
        f"{report.residual_before:.6g} -> {report.residual_after:.6g}"
    )
    return 0


def cmd_kernels():
    """Print the kernel catalog with default randomization ranges."""
    descriptions = {
        "alpha": "(dt/tau) exp(-dt/tau); peak value 1/e at dt = tau",
        "damped_resonance": "exp(-dt/tau) sin(omega dt); decaying oscillation",
        "delayed_alpha": "alpha response shifted by an explicit delay delta_t",
        "delayed_gaussian": "Gaussian bump centered delta_t steps after the spike",
        "leaky_integrator_nl": (
            "stateful: a <- leak * a / (1 + a^2) + input, leak = exp(-1/tau)"
        ),
    }
    print("available kernel kinds:")
    for name, family in FAMILY_CATALOG.items():
        parts = []
        for param in ("tau", "delta_t", "omega", "sigma"):
            value = getattr(family, param)
            if isinstance(value, tuple):
                parts.append(f"{param} ~ U({value[0]:g}, {value[1]:g})")
            elif value:
                parts.append(f"{param} = {value:g}")
        ranges = "; ".join(parts) if parts else "no free parameters"
        print(f"  {name:22s} {descriptions[name]}")
        print(f"  {'':22s} defaults: {ranges}; logistic gain 5")
    print("  custom                 table lookup of sampled amplitudes per timestep")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="skim",
        description=(
            "Synthesize spiking networks that recognize spatio-temporal "
            "spike patterns via random synaptic kernels and a linear solve."
        ),
    )
    parser.add_argument("--config", help="JSON run configuration", default=None)
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument(
        "--solver", choices=["batch", "online"], default=None,
        help="override training.solver",
    )
    parser.add_argument("--out", default=None, help="override output.dir")
    parser.add_argument(
        "command",
        choices=["demo", "train", "test", "prune", "kernels"],
        help="what to run",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "kernels":
            return cmd_kernels()
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.solver is not None:
            overrides["training.solver"] = args.solver
        if args.out is not None:
            overrides["output.dir"] = args.out
        cfg = load_config(args.config, overrides)
        handler = {
            "demo": cmd_demo,
            "train": cmd_train,
            "test": cmd_test,
            "prune": cmd_prune,
        }[args.command]
        return handler(cfg)
    except (ConfigError, fileio.ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
