"""Numerical tolerances and size limits used across the package."""

import os

#: identities (idempotence, Hermiticity, orthonormality) on dimension <= 4096
IDENTITY_TOL = 1e-12
#: same identities above 4096 amplitudes
IDENTITY_TOL_LARGE = 1e-10
#: dimension at which IDENTITY_TOL gives way to IDENTITY_TOL_LARGE
LARGE_DIM = 4096
#: a state counts as normalized when | ||psi|| - 1 | is below this
NORM_TOL = 1e-12
#: amplitudes/denominators below this are treated as exactly zero
ORTHOGONAL_TOL = 1e-14
#: SAME / DIFFERENT classification threshold on ABL probabilities
PATTERN_TOL = 1e-10
#: the roots-of-unity sum must vanish to this level
ROOTS_TOL = 1e-12

#: pointer shifts below this are excluded from log-log fits
SHIFT_FLOOR = 1e-15
#: coupling strength above WEAK_RATIO * sigma is tagged strong
WEAK_RATIO = 0.1
#: expected slope when the first-order pointer response vanishes
SECOND_ORDER_SLOPE = 2.0
SECOND_ORDER_SLOPE_TOL = 0.1
#: expected slope for a first-order pointer response
FIRST_ORDER_SLOPE = 1.0
FIRST_ORDER_SLOPE_TOL = 0.05

#: |z| above which a Monte Carlo cell is flagged, and above which it fails
Z_FLAG = 4.0
Z_FAIL = 5.0

DEFAULT_MAX_DIM = 2**20
MAX_DIM_ENV = "PIGEONSIM_MAX_DIM"


def identity_tol(dim: int) -> float:
    return IDENTITY_TOL if dim <= LARGE_DIM else IDENTITY_TOL_LARGE


def max_dim() -> int:
    """Dimension cap, overridable through ``PIGEONSIM_MAX_DIM``."""
    raw = os.environ.get(MAX_DIM_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{MAX_DIM_ENV} must be an integer, got {raw!r}") from None
    if value < 2:
        raise ValueError(f"{MAX_DIM_ENV} must be at least 2, got {value}")
    return value
