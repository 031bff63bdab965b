"""Born and ABL probabilities, weak values and sequential projection chains."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ImpossiblePostselectionError,
    InvalidMeasurementError,
    ShapeMismatchError,
    UndefinedWeakValueError,
)
from .qstate import (
    BoxPair,
    DiffPair,
    ProjectorSpec,
    RegisterShape,
    SamePair,
    StateVector,
    box_name,
    inner,
)
from .tolerances import NORM_TOL, ORTHOGONAL_TOL, identity_tol

__all__ = [
    "PrePostEnsemble",
    "MeasurementSpec",
    "ChainResult",
    "same_diff_measurement",
    "box_measurement",
    "born_probabilities",
    "abl_probabilities",
    "weak_value",
    "chain_amplitude",
]


def _require_normalized(state: StateVector, what: str):
    if not state.is_normalized(NORM_TOL):
        raise ValueError(f"{what} must be normalized (norm {state.norm():.15g})")


@dataclass(frozen=True, eq=False)
class PrePostEnsemble:
    """A pre-selected state ``pre`` together with a post-selected state ``post``."""

    pre: StateVector
    post: StateVector
    overlap: complex = field(init=False)

    def __post_init__(self):
        if self.pre.shape != self.post.shape:
            raise ShapeMismatchError(
                f"pre and post live on different registers: {self.pre.shape} vs {self.post.shape}"
            )
        _require_normalized(self.pre, "pre-selected state")
        _require_normalized(self.post, "post-selected state")
        object.__setattr__(self, "overlap", inner(self.post, self.pre))

    @property
    def shape(self) -> RegisterShape:
        return self.pre.shape

    def amplitude(self, p: ProjectorSpec) -> complex:
        """``<post| P |pre>``."""
        return p.expectation(self.post, self.pre)


def _random_probes(dim: int, count: int = 2) -> np.ndarray:
    rng = np.random.default_rng(0x5EED)
    probes = rng.normal(size=(count, dim)) + 1j * rng.normal(size=(count, dim))
    return probes / np.linalg.norm(probes, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class MeasurementSpec:
    """Complete set of orthogonal projectors with one label each.

    Occupation projectors are checked exactly through their masks; anything
    else is checked by acting on random probe vectors, which catches a
    non-orthogonal or incomplete set with probability one.
    """

    projectors: tuple[ProjectorSpec, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        projectors = tuple(self.projectors)
        labels = tuple(str(lbl) for lbl in self.labels)
        if not projectors:
            raise InvalidMeasurementError("a measurement needs at least one projector")
        if len(labels) != len(projectors):
            raise InvalidMeasurementError(
                f"{len(projectors)} projectors but {len(labels)} labels"
            )
        if len(set(labels)) != len(labels):
            raise InvalidMeasurementError(f"duplicate labels in {labels}")
        shape = projectors[0].shape
        if any(p.shape != shape for p in projectors):
            raise ShapeMismatchError("projectors act on different registers")
        object.__setattr__(self, "projectors", projectors)
        object.__setattr__(self, "labels", labels)
        self._validate()

    @property
    def shape(self) -> RegisterShape:
        return self.projectors[0].shape

    def _validate(self):
        masks = [p.mask() for p in self.projectors]
        if all(m is not None for m in masks):
            counts = np.sum(masks, axis=0)
            if np.any(counts == 0):
                raise InvalidMeasurementError("projectors do not sum to the identity")
            if np.any(counts > 1):
                raise InvalidMeasurementError("projectors are not mutually orthogonal")
            return
        tol = identity_tol(self.shape.dim)
        for probe in _random_probes(self.shape.dim):
            v = StateVector(self.shape, probe)
            images = [p.apply(v) for p in self.projectors]
            total = sum(img.amplitudes for img in images)
            if not np.allclose(total, probe, rtol=0, atol=tol):
                raise InvalidMeasurementError("projectors do not sum to the identity")
            for a, p in enumerate(self.projectors):
                if not np.allclose(p.apply(images[a]).amplitudes, images[a].amplitudes, rtol=0, atol=tol):
                    raise InvalidMeasurementError(f"{self.labels[a]!r} is not idempotent")
                for b in range(len(self.projectors)):
                    if b != a and np.linalg.norm(p.apply(images[b]).amplitudes) > tol:
                        raise InvalidMeasurementError("projectors are not mutually orthogonal")

    def __len__(self):
        return len(self.projectors)

    def __iter__(self):
        return iter(zip(self.labels, self.projectors))

    def projector(self, label: str) -> ProjectorSpec:
        return self.projectors[self.labels.index(label)]


SAME = "same"
DIFF = "diff"


def same_diff_measurement(shape: RegisterShape, i: int, j: int) -> MeasurementSpec:
    """Coarse two-outcome measurement: are particles ``i`` and ``j`` together?"""
    return MeasurementSpec((SamePair(shape, i, j), DiffPair(shape, i, j)), (SAME, DIFF))


def box_measurement(shape: RegisterShape, i: int, j: int) -> MeasurementSpec:
    """Separate box measurement of particles ``i`` and ``j`` (``M**2`` outcomes).

    Labels spell out the two boxes, e.g. ``"LR"`` for two boxes or ``"0,2"``
    otherwise.
    """
    m = shape.num_boxes
    projectors, labels = [], []
    for b1 in range(m):
        for b2 in range(m):
            projectors.append(BoxPair(shape, i, j, b1, b2))
            sep = "" if m == 2 else ","
            labels.append(f"{box_name(m, b1)}{sep}{box_name(m, b2)}")
    return MeasurementSpec(tuple(projectors), tuple(labels))


def born_probabilities(pre: StateVector, m: MeasurementSpec) -> dict[str, float]:
    """``<pre|P_i|pre>`` for every outcome."""
    _require_normalized(pre, "pre-selected state")
    if pre.shape != m.shape:
        raise ShapeMismatchError(f"shape mismatch: {pre.shape} vs {m.shape}")
    return {
        label: float(np.linalg.norm(p.apply(pre).amplitudes) ** 2) for label, p in m
    }


def abl_weights(e: PrePostEnsemble, m: MeasurementSpec) -> dict[str, float]:
    """Unnormalized ABL weights ``|<post|P_i|pre>|**2``."""
    if e.shape != m.shape:
        raise ShapeMismatchError(f"shape mismatch: {e.shape} vs {m.shape}")
    return {label: abs(e.amplitude(p)) ** 2 for label, p in m}


def abl_probabilities(e: PrePostEnsemble, m: MeasurementSpec) -> dict[str, float]:
    """Outcome probabilities of an intermediate measurement given ``pre`` and ``post``."""
    weights = abl_weights(e, m)
    total = sum(weights.values())
    if total <= ORTHOGONAL_TOL:
        raise ImpossiblePostselectionError(
            "post-selected state is unreachable through every outcome "
            f"(ABL denominator {total:.3g})"
        )
    return {label: w / total for label, w in weights.items()}


def weak_value(e: PrePostEnsemble, op: ProjectorSpec) -> complex:
    """``<post|A|pre> / <post|pre>``."""
    if op.shape != e.shape:
        raise ShapeMismatchError(f"shape mismatch: {op.shape} vs {e.shape}")
    if abs(e.overlap) <= ORTHOGONAL_TOL:
        raise UndefinedWeakValueError(
            f"pre- and post-selected states are orthogonal (|overlap| = {abs(e.overlap):.3g})"
        )
    return e.amplitude(op) / e.overlap


@dataclass(frozen=True)
class ChainResult:
    """Outcome of projecting ``pre`` through a chain and onto ``post``.

    ``amplitude`` is the bare product ``<post|P_k...P_1|pre>``;
    ``path_probability`` multiplies the Born probability of every collapse
    with the final post-selection probability. ``step_probabilities`` holds
    the conditional probability of each step, the last entry being the
    post-selection.
    """

    amplitude: complex
    path_probability: float
    step_probabilities: tuple[float, ...]


def chain_amplitude(
    pre: StateVector, outcomes: Sequence[ProjectorSpec], post: StateVector
) -> ChainResult:
    if pre.shape != post.shape:
        raise ShapeMismatchError(f"shape mismatch: {pre.shape} vs {post.shape}")
    for p in outcomes:
        if p.shape != pre.shape:
            raise ShapeMismatchError(f"shape mismatch: {p.shape} vs {pre.shape}")

    bare = pre
    for p in outcomes:
        bare = p.apply(bare)
    amplitude = inner(post, bare)

    state = pre.normalized()
    post_n = post.normalized()
    steps = []
    prob = 1.0
    for p in outcomes:
        projected = p.apply(state)
        nrm = projected.norm()
        if nrm <= ORTHOGONAL_TOL:
            # branch never occurs; later steps are conditioned on nothing
            steps.extend([0.0] * (len(outcomes) - len(steps) + 1))
            return ChainResult(amplitude, 0.0, tuple(steps))
        steps.append(nrm**2)
        prob *= nrm**2
        state = projected.normalized()
    overlap = abs(inner(post_n, state))
    p_final = overlap**2 if overlap > ORTHOGONAL_TOL else 0.0
    steps.append(p_final)
    prob *= p_final
    return ChainResult(amplitude, float(prob), tuple(steps))
