"""Pigeonhole scenarios: N particles, M boxes, product pre- and post-selection.

Every particle starts in the uniform superposition over boxes and is finally
found in one element of :func:`~pigeonsim.qstate.fourier_basis`. Outcome 0
for all particles is the configuration in which no pair can be found in the
same box.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .prepost import SAME, PrePostEnsemble, abl_probabilities, same_diff_measurement
from .qstate import (
    RegisterShape,
    SamePair,
    StateVector,
    fourier_basis,
    plus_state,
    tensor,
)
from .tolerances import PATTERN_TOL, ROOTS_TOL

__all__ = [
    "Scenario",
    "Verdict",
    "PairResult",
    "CorrelationPattern",
    "GeneralReport",
    "build_scenario",
    "pair_same_probability",
    "pair_amplitude",
    "correlation_pattern",
    "all_patterns",
    "roots_of_unity_residual",
    "verify_general",
]


@dataclass(frozen=True, eq=False)
class Scenario:
    shape: RegisterShape
    pre: StateVector
    post: StateVector
    outcome: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.pre.shape != self.shape or self.post.shape != self.shape:
            raise ValueError("pre/post states do not match the scenario shape")

    @property
    def ensemble(self) -> PrePostEnsemble:
        return PrePostEnsemble(self.pre, self.post)

    def describe(self) -> dict:
        return {
            "num_particles": self.shape.num_particles,
            "num_boxes": self.shape.num_boxes,
            "outcome": list(self.outcome) if self.outcome is not None else None,
        }


def build_scenario(N: int, M: int, outcome: Sequence[int] | None = None) -> Scenario:
    """Uniform pre-selection, post-selection on ``fourier_basis(M)[outcome[i]]``.

    ``outcome`` defaults to all zeros. ``M < N`` is not required.
    """
    if N < 2:
        raise ValueError("need at least 2 particles")
    shape = RegisterShape(N, M)
    if outcome is None:
        outcome = (0,) * N
    outcome = tuple(int(o) for o in outcome)
    if len(outcome) != N:
        raise ValueError(f"outcome has {len(outcome)} entries, expected {N}")
    if any(not 0 <= o < M for o in outcome):
        raise ValueError(f"outcome entries must lie in 0..{M - 1}, got {outcome}")
    basis = fourier_basis(M)
    pre = tensor([plus_state(M)] * N)
    post = tensor([basis[o] for o in outcome])
    return Scenario(shape, pre, post, outcome)


def pair_amplitude(s: Scenario, i: int, j: int) -> complex:
    """``<post| same(i, j) |pre>``."""
    return SamePair(s.shape, i, j).expectation(s.post, s.pre)


def pair_same_probability(s: Scenario, i: int, j: int) -> float:
    """ABL probability that the coarse same/different measurement says SAME."""
    probs = abl_probabilities(s.ensemble, same_diff_measurement(s.shape, i, j))
    return probs[SAME]


class Verdict(str, enum.Enum):
    SAME = "SAME"
    DIFFERENT = "DIFFERENT"
    UNDETERMINED = "UNDETERMINED"


@dataclass(frozen=True)
class PairResult:
    verdict: Verdict
    p_same: float

    @classmethod
    def classify(cls, p_same: float, tol: float = PATTERN_TOL) -> PairResult:
        if p_same >= 1.0 - tol:
            return cls(Verdict.SAME, p_same)
        if p_same <= tol:
            return cls(Verdict.DIFFERENT, p_same)
        return cls(Verdict.UNDETERMINED, p_same)


@dataclass(frozen=True)
class CorrelationPattern:
    """Per-pair classification, keyed by 1-based pairs ``(i, j)`` with ``i < j``."""

    pairs: Mapping[tuple[int, int], PairResult]

    def __getitem__(self, pair: tuple[int, int]) -> PairResult:
        i, j = pair
        return self.pairs[(min(i, j), max(i, j))]

    def verdicts(self) -> dict[tuple[int, int], Verdict]:
        return {k: v.verdict for k, v in self.pairs.items()}

    def permuted(self, perm: Sequence[int]) -> CorrelationPattern:
        """Pattern after relabelling particle ``k`` as ``perm[k-1]`` (1-based)."""
        out = {}
        for (i, j), res in self.pairs.items():
            a, b = perm[i - 1], perm[j - 1]
            out[(min(a, b), max(a, b))] = res
        return CorrelationPattern(dict(sorted(out.items())))

    def to_json(self) -> list[dict]:
        return [
            {"pair": [i, j], "verdict": r.verdict.value, "p_same": r.p_same}
            for (i, j), r in self.pairs.items()
        ]


def correlation_pattern(s: Scenario) -> CorrelationPattern:
    results = {}
    for i, j in s.shape.pairs():
        results[(i, j)] = PairResult.classify(pair_same_probability(s, i, j))
    return CorrelationPattern(results)


def all_patterns(N: int, M: int) -> dict[tuple[int, ...], CorrelationPattern]:
    """Pattern for every final outcome, in lexicographic outcome order."""
    return {
        outcome: correlation_pattern(build_scenario(N, M, outcome))
        for outcome in itertools.product(range(M), repeat=N)
    }


def roots_of_unity_residual(M: int) -> float:
    """``|sum_{k=1..M} exp(2 pi i k / M)|``; vanishes for every M >= 2."""
    k = np.arange(1, M + 1)
    return float(abs(np.sum(np.exp(2j * np.pi * k / M))))


@dataclass(frozen=True)
class GeneralReport:
    num_particles: int
    num_boxes: int
    pair_same_prob_max: float
    pair_amplitude_max: float
    roots_of_unity_residual: float

    @property
    def holds(self) -> bool:
        return (
            self.pair_same_prob_max <= PATTERN_TOL
            and self.roots_of_unity_residual <= ROOTS_TOL
        )

    def to_json(self) -> dict:
        return {
            "num_particles": self.num_particles,
            "num_boxes": self.num_boxes,
            "pair_same_prob_max": self.pair_same_prob_max,
            "pair_amplitude_max": self.pair_amplitude_max,
            "roots_of_unity_residual": self.roots_of_unity_residual,
            "holds": self.holds,
        }


def verify_general(N: int, M: int) -> GeneralReport:
    """Check that no pair is ever found together for outcome ``(0, ..., 0)``.

    The headline statement is about ``N > M``; the identity holds for any
    ``N >= 2``.
    """
    s = build_scenario(N, M)
    probs, amps = [], []
    for i, j in s.shape.pairs():
        probs.append(pair_same_probability(s, i, j))
        amps.append(abs(pair_amplitude(s, i, j)))
    return GeneralReport(
        num_particles=N,
        num_boxes=M,
        pair_same_prob_max=max(probs),
        pair_amplitude_max=max(amps),
        roots_of_unity_residual=roots_of_unity_residual(M),
    )
