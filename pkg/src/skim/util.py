"""Shared plumbing: named random substreams, atomic file writes."""

import os
import tempfile

import numpy as np

# Every random draw in the toolkit flows from a single master seed through
# one of these named streams, so each component is reproducible on its own.
STREAM_CODES = {
    "weights": 1,
    "kernels": 2,
    "task": 3,
    "noise": 4,
    "prune": 5,
    "test": 6,
}


def substream(seed, name):
    """Independent generator for one named stream under a master seed."""
    return np.random.default_rng([STREAM_CODES[name], int(seed)])


def write_text_atomic(path, text):
    """Write text to `path` via a temp file + rename, so readers never see
    a partial file and a failed run leaves no truncated artifact."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt9(x):
    """Format a float with 9 significant digits (CSV export convention)."""
    return format(float(x), ".9g")
