"""Closed-form events-to-video toolkit: simulate, reconstruct, estimate, evaluate."""

from ._backend import BACKEND
from .errors import (
    ConfigurationError,
    EventReconError,
    FormatError,
    InputError,
    ParseError,
    WellPosednessError,
)
from .estimator import (
    FitResult,
    ObservationSet,
    build_observations,
    fit_all,
    fit_thresholds_given_k,
    objective_gradient_check,
)
from .metrics import evaluate_sequence, mse, ssim
from .reconstructor import (
    ReconstructionState,
    count_events,
    iter_reconstruction,
    reconstruct_sequence,
    reset,
    step,
)
from .simulator import EventSimulator, log_intensity, sample_thresholds, simulate_events
from .types import CameraParams, CountPair, Event, EventStream, Frame, VoxelGrid, validate_stream
from .voxelgrid import encode_voxel_grid

__version__ = "0.1.0"
