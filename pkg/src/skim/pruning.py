"""Magnitude-based dendrite pruning with mandatory re-solving.

Solved output weights concentrate on a minority of dendrites, so the
lowest-weighted ones can be discarded with little accuracy cost.  Two
strategies: over-provision then cut once (two-pass), or repeatedly discard
the weakest dendrites and draw fresh random replacements (iterative).
Either way the linear weights are re-solved after every structural change;
keeping stale weights would leave the solution non-optimal.
"""

from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from .network import collect_activations
from .solver import residual_norm, train_network
from .util import substream


@dataclass
class PruneReport:
    """Outcome of one pruning run."""

    kept_indices: tuple
    discarded_indices: tuple
    cumulative_fraction: np.ndarray
    residual_before: float
    residual_after: float
    rounds: list = field(default_factory=list)

    def to_dict(self):
        return {
            "kept_indices": list(self.kept_indices),
            "discarded_indices": list(self.discarded_indices),
            "cumulative_fraction": [float(c) for c in self.cumulative_fraction],
            "residual_before": self.residual_before,
            "residual_after": self.residual_after,
            "rounds": self.rounds,
        }


def _aggregate_magnitudes(weights):
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim == 1:
        return np.abs(weights)
    if weights.ndim == 2:
        return np.abs(weights).sum(axis=0)
    raise ValueError("weights must be a vector or an outputs-by-dendrites matrix")


def rank_dendrites(weights):
    """Dendrite indices sorted by descending weight magnitude.

    Multi-output weights aggregate by the column-wise L1 norm.  The sort
    is stable, so ties keep the lower index first.
    """
    magnitudes = _aggregate_magnitudes(weights)
    return np.argsort(-magnitudes, kind="stable")


def cumulative_weight_fraction(weights):
    """c[m] = (sum of the m+1 largest magnitudes) / (sum of all magnitudes)."""
    magnitudes = _aggregate_magnitudes(weights)
    total = magnitudes.sum()
    if total == 0:
        raise ValueError("all-zero weights have no distribution to accumulate")
    ordered = np.sort(magnitudes)[::-1]
    return np.cumsum(ordered) / total


def prune_two_pass(net, rasters, targets, keep, tol=None, streaming=False):
    """Keep the top `keep` dendrites by solved weight, drop the rest,
    re-solve on the same training set.

    Returns (pruned network, report).  The input network is not mutated.
    """
    if not net.trained:
        raise ValueError("network must be trained before pruning")
    if not 1 <= keep < net.num_dendrites:
        raise ValueError(
            f"keep must lie in [1, {net.num_dendrites - 1}], got {keep}"
        )
    order = rank_dendrites(net.output_weights)
    kept = tuple(sorted(int(j) for j in order[:keep]))
    discarded = tuple(sorted(int(j) for j in order[keep:]))

    activations = collect_activations(net, rasters, streaming=streaming)
    before = residual_norm(net.output_weights, activations, targets)

    pruned = net.restrict(kept)
    result = train_network(
        pruned, rasters, targets, solver="batch", tol=tol, streaming=streaming
    )
    report = PruneReport(
        kept_indices=kept,
        discarded_indices=discarded,
        cumulative_fraction=cumulative_weight_fraction(net.output_weights),
        residual_before=before,
        residual_after=result.residual,
    )
    return pruned, report


def prune_iterative(
    net,
    rasters,
    targets,
    discard_fraction,
    rounds,
    seed=0,
    pool=None,
    tol=None,
    streaming=False,
):
    """Repeatedly discard the weakest dendrites and draw replacements.

    Each round trains the current network, ranks dendrites by weight
    magnitude, replaces the lowest `discard_fraction` of them with fresh
    random input-weight rows and kernels from the network's family, then
    retrains.  The dendrite count (`pool`, defaulting to the network's
    size) stays constant throughout.  Deterministic given `seed`.
    """
    if not 0.0 < discard_fraction < 1.0:
        raise ValueError("discard_fraction must lie strictly in (0, 1)")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if pool is not None and pool != net.num_dendrites:
        raise ValueError(
            f"pool {pool} does not match the network's {net.num_dendrites} dendrites"
        )
    if net.kernel_family is None:
        raise ValueError("network carries no kernel family to draw replacements from")
    m = net.num_dendrites
    n_discard = int(round(discard_fraction * m))
    if not 1 <= n_discard < m:
        raise ValueError(
            f"discard_fraction {discard_fraction} discards {n_discard} of {m} dendrites"
        )

    rng = substream(seed, "prune")
    lo, hi = net.weight_range
    current = net
    trace = []
    first_residual = None
    last_discarded = ()
    for round_idx in range(rounds):
        result = train_network(
            current, rasters, targets, solver="batch", tol=tol, streaming=streaming
        )
        if first_residual is None:
            first_residual = result.residual
        order = rank_dendrites(current.output_weights)
        doomed = sorted(int(j) for j in order[m - n_discard :])
        last_discarded = tuple(doomed)

        new_w1 = current.input_weights.copy()
        new_kernels = list(current.kernels)
        for j in doomed:
            new_w1[j] = rng.uniform(lo, hi, size=current.num_inputs)
            new_kernels[j] = net.kernel_family.sample(rng)
        current = dc_replace(
            current,
            input_weights=new_w1,
            kernels=tuple(new_kernels),
            output_weights=None,
        )
        retrained = train_network(
            current, rasters, targets, solver="batch", tol=tol, streaming=streaming
        )
        trace.append(
            {
                "round": round_idx,
                "replaced": doomed,
                "residual_before": result.residual,
                "residual_after": retrained.residual,
            }
        )

    kept = tuple(j for j in range(m) if j not in set(last_discarded))
    report = PruneReport(
        kept_indices=kept,
        discarded_indices=last_discarded,
        cumulative_fraction=cumulative_weight_fraction(current.output_weights),
        residual_before=first_residual,
        residual_after=trace[-1]["residual_after"],
        rounds=trace,
    )
    return current, report
