"""Output-weight solvers: batch pseudoinverse and online recursive updates.

Training a network means finding W minimizing ||W A - Y|| where A stacks
the dendritic potentials (one column per timestep) and Y the desired soma
values.  The batch path solves it in one step through the Moore-Penrose
pseudoinverse; the online path streams columns through a regularized
rank-one recursive least-squares update that converges to the same
solution as the ridge parameter goes to zero.
"""

from dataclasses import dataclass

import numpy as np

from .network import collect_activations

DEFAULT_ONLINE_REG = 1e-8


def _check_matrix(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def pseudoinverse(a, tol=None):
    """Moore-Penrose pseudoinverse via SVD with a singular-value cutoff.

    Singular values below `tol` are treated as zero; the default cutoff is
    machine epsilon * max(shape) * largest singular value.  The result
    satisfies the four Penrose identities to numerical accuracy.
    """
    a = _check_matrix(a, "matrix")
    if tol is not None and tol < 0:
        raise ValueError("tol must be >= 0")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]))
    cutoff = tol if tol is not None else np.finfo(np.float64).eps * max(a.shape) * s[0]
    inv_s = np.where(s > cutoff, np.divide(1.0, s, where=s > 0), 0.0)
    return (vt.T * inv_s) @ u.T


def solve_batch(activations, targets, tol=None):
    """Minimal-norm least-squares output weights W = Y @ pinv(A)."""
    a = _check_matrix(activations, "activations")
    y = _check_matrix(targets, "targets")
    if a.shape[1] != y.shape[1]:
        raise ValueError(
            f"activations have {a.shape[1]} columns but targets have {y.shape[1]}"
        )
    return y @ pseudoinverse(a, tol)


def solve_ridge(activations, targets, reg):
    """Closed-form ridge solution W = Y A' (A A' + reg I)^-1.

    Exact oracle for the online solver; approaches solve_batch as reg -> 0
    when A has full row rank.
    """
    if not reg > 0:
        raise ValueError("reg must be > 0")
    a = _check_matrix(activations, "activations")
    y = _check_matrix(targets, "targets")
    if a.shape[1] != y.shape[1]:
        raise ValueError(
            f"activations have {a.shape[1]} columns but targets have {y.shape[1]}"
        )
    m = a.shape[0]
    gram = a @ a.T + reg * np.eye(m)
    # Solve gram @ W.T = A @ Y.T; gram is symmetric positive definite.
    return np.linalg.solve(gram, a @ y.T).T


class OnlineSolver:
    """Streaming regularized least squares over activation columns.

    Keeps a running inverse correlation matrix P (initialized to I/reg)
    and weights W; each (a_t, y_t) column pair applies the rank-one update

        g = P a / (1 + a' P a)
        W += (y - W a) g'
        P -= g (P a)'

    After a full pass over the columns of (A, Y) the weights equal the
    closed-form ridge solution up to numerical error.
    """

    def __init__(self, num_dendrites, num_outputs, reg=DEFAULT_ONLINE_REG):
        if not reg > 0:
            raise ValueError("reg must be > 0")
        if num_dendrites < 1 or num_outputs < 1:
            raise ValueError("dimensions must be >= 1")
        self.num_dendrites = int(num_dendrites)
        self.num_outputs = int(num_outputs)
        self.reg = float(reg)
        self.inverse_correlation = np.eye(self.num_dendrites) / self.reg
        self.weights = np.zeros((self.num_outputs, self.num_dendrites))
        self.samples_seen = 0

    def update(self, a_t, y_t):
        """Absorb one activation column and its target column."""
        a = np.asarray(a_t, dtype=np.float64).reshape(-1)
        y = np.asarray(y_t, dtype=np.float64).reshape(-1)
        if a.shape[0] != self.num_dendrites:
            raise ValueError(
                f"activation column has length {a.shape[0]}, expected "
                f"{self.num_dendrites}"
            )
        if y.shape[0] != self.num_outputs:
            raise ValueError(
                f"target column has length {y.shape[0]}, expected {self.num_outputs}"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(y))):
            raise ValueError("online update requires finite inputs")
        pa = self.inverse_correlation @ a
        gain = pa / (1.0 + a @ pa)
        self.weights += np.outer(y - self.weights @ a, gain)
        p = self.inverse_correlation - np.outer(gain, pa)
        self.inverse_correlation = (p + p.T) / 2.0
        self.samples_seen += 1
        return self

    def fit(self, activations, targets):
        """Stream every column of (A, Y) through the update, left to right."""
        a = _check_matrix(activations, "activations")
        y = _check_matrix(targets, "targets")
        if a.shape[1] != y.shape[1]:
            raise ValueError("activations and targets need equal column counts")
        for t in range(a.shape[1]):
            self.update(a[:, t], y[:, t])
        return self


@dataclass
class TrainingResult:
    output_weights: np.ndarray
    activations: np.ndarray
    residual: float


def residual_norm(weights, activations, targets):
    """Frobenius training error ||W A - Y||."""
    return float(np.linalg.norm(weights @ activations - targets))


def train_network(
    net,
    rasters,
    targets,
    solver="batch",
    reg=DEFAULT_ONLINE_REG,
    tol=None,
    streaming=False,
):
    """Solve a network's output weights on a training set, in place.

    `rasters` is a list of input presentations and `targets` the desired
    soma matrix aligned with their concatenated activation columns.
    Returns the activations and training residual alongside the weights.
    """
    targets = _check_matrix(targets, "targets")
    if targets.shape[0] != net.num_outputs:
        raise ValueError(
            f"targets have {targets.shape[0]} rows, network has "
            f"{net.num_outputs} outputs"
        )
    activations = collect_activations(net, rasters, streaming=streaming)
    if activations.shape[1] != targets.shape[1]:
        raise ValueError(
            f"activations span {activations.shape[1]} steps but targets "
            f"span {targets.shape[1]}"
        )
    if solver == "batch":
        weights = solve_batch(activations, targets, tol)
    elif solver == "online":
        state = OnlineSolver(net.num_dendrites, net.num_outputs, reg=reg)
        weights = state.fit(activations, targets).weights
    else:
        raise ValueError(f"unknown solver {solver!r} (expected 'batch' or 'online')")
    net.set_output_weights(weights)
    return TrainingResult(
        output_weights=weights,
        activations=activations,
        residual=residual_norm(weights, activations, targets),
    )
