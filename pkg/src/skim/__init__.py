"""skim: synthesis of spiking networks for spatio-temporal spike pattern
recognition.

Random fixed synaptic weights plus nonlinear temporal kernels project input
spike trains into a high-dimensional dendritic state; the output weights
that map that state to desired soma values are then solved linearly, in
one batch step through the pseudoinverse or online through recursive least
squares.
"""

from .evaluation import (
    ConfusionCounts,
    detection_rate,
    export_traces,
    match_presentations,
    network_outputs,
    rate_error,
    wills_error,
)
from .fileio import (
    ParseError,
    load_network,
    load_raster,
    load_raster_set,
    save_network,
    save_raster,
    save_raster_set,
    save_weights_csv,
)
from .kernels import (
    FAMILY_CATALOG,
    KernelFamily,
    KernelKind,
    KernelSpec,
    eval_response,
    leak_constant,
    logistic,
    response_support,
    response_table,
    step_leaky,
)
from .network import (
    ForwardTrace,
    SkimNetwork,
    SpikeRaster,
    collect_activations,
    concat_rasters,
    forward,
    new_network,
)
from .patterns import (
    EmbeddedPatternTask,
    LabeledRasterSet,
    augment_training_set,
    gen_class_set,
    gen_embedded_task,
    gen_presentation_set,
    make_target_signal,
    targets_for_set,
    time_warp,
)
from .pruning import (
    PruneReport,
    cumulative_weight_fraction,
    prune_iterative,
    prune_two_pass,
    rank_dendrites,
)
from .solver import (
    OnlineSolver,
    pseudoinverse,
    residual_norm,
    solve_batch,
    solve_ridge,
    train_network,
)

__version__ = "0.1.0"
