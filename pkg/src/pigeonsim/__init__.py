"""Simulator for pre- and post-selected ensembles and the quantum pigeonhole effect."""

from .errors import (
    DimensionCapError,
    ImpossiblePostselectionError,
    InsufficientPointsError,
    InvalidMeasurementError,
    InvalidShapeError,
    PigeonsimError,
    ShapeMismatchError,
    UndefinedWeakValueError,
)
from .qstate import (
    BoxPair,
    DiffPair,
    ProductPost,
    ProjectorSpec,
    Raw,
    RegisterShape,
    SamePair,
    SingleBox,
    StateVector,
    apply,
    basis_state,
    fourier_basis,
    inner,
    phase_state,
    plus_state,
    tensor,
)
from .prepost import (
    ChainResult,
    MeasurementSpec,
    PrePostEnsemble,
    abl_probabilities,
    born_probabilities,
    box_measurement,
    chain_amplitude,
    same_diff_measurement,
    weak_value,
)
from .pigeonhole import (
    CorrelationPattern,
    Scenario,
    Verdict,
    build_scenario,
    correlation_pattern,
    pair_same_probability,
    verify_general,
)

__version__ = "0.1.0"
