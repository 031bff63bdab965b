"""Weak pairwise interactions read out by Gaussian pointers.

Each unordered pair of particles owns one pointer, a one-dimensional
Gaussian of width ``sigma`` initially centred at 0. The interaction
``lambda * sum_{i<j} same(i, j) (x) K_ij``, with ``K_ij`` the translation
generator of pointer ``ij``, is diagonal in the arm configuration, so the
evolution is exact: in configuration ``c`` pointer ``ij`` is displaced by
``lambda`` when ``i`` and ``j`` share an arm and left alone otherwise.

The pointer coordinate stands for the transverse deflection of an electron
beam or, equally, the frequency offset of an emitted spectral line; the two
readings share every formula in this module.

Wavefunctions are ``g(x; c) = (2 pi sigma^2)^(-1/4) exp(-(x - c)^2 / (4 sigma^2))``
so ``|g|^2`` has standard deviation ``sigma`` and
``<g(a)|g(b)> = exp(-(a - b)^2 / (8 sigma^2))``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ImpossiblePostselectionError, InsufficientPointsError, ShapeMismatchError
from .qstate import SamePair, StateVector
from .tolerances import (
    FIRST_ORDER_SLOPE,
    FIRST_ORDER_SLOPE_TOL,
    ORTHOGONAL_TOL,
    SECOND_ORDER_SLOPE,
    SECOND_ORDER_SLOPE_TOL,
    SHIFT_FLOOR,
    WEAK_RATIO,
)

__all__ = [
    "PointerState",
    "CoupledState",
    "PostselectionResult",
    "ScanResult",
    "gaussian_overlap",
    "evolve",
    "postselect",
    "first_order_check",
    "perturbation_residual",
    "deflection_scan",
]


def gaussian_overlap(a, b, sigma: float):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.exp(-((a - b) ** 2) / (8.0 * sigma**2))


def _gaussian(xs: np.ndarray, center: float, sigma: float) -> np.ndarray:
    return (2 * np.pi * sigma**2) ** -0.25 * np.exp(-((xs - center) ** 2) / (4 * sigma**2))


@dataclass(frozen=True, eq=False)
class PointerState:
    """Finite superposition ``sum_a w_a g(x; c_a)`` of equal-width Gaussians."""

    weights: np.ndarray
    centers: np.ndarray
    sigma: float

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.complex128))
        c = np.atleast_1d(np.asarray(self.centers, dtype=float))
        if w.size == 0 or w.shape != c.shape:
            raise ValueError("need one weight per centre and at least one term")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(c))):
            raise ValueError("weights and centres must be finite")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "centers", c)
        if not self.norm2() > 0:
            raise ValueError("pointer state has zero norm")

    @classmethod
    def gaussian(cls, center: float = 0.0, sigma: float = 1.0) -> PointerState:
        return cls(np.array([1.0]), np.array([center]), sigma)

    def _gram(self) -> np.ndarray:
        return gaussian_overlap(self.centers[:, None], self.centers[None, :], self.sigma)

    def norm2(self) -> float:
        w = self.weights
        return float(np.real(np.conj(w) @ self._gram() @ w))

    def mean(self) -> float:
        w = self.weights
        mid = (self.centers[:, None] + self.centers[None, :]) / 2
        return float(np.real(np.conj(w) @ (self._gram() * mid) @ w)) / self.norm2()

    def variance(self) -> float:
        w = self.weights
        mid = (self.centers[:, None] + self.centers[None, :]) / 2
        second = float(np.real(np.conj(w) @ (self._gram() * (self.sigma**2 + mid**2)) @ w))
        return second / self.norm2() - self.mean() ** 2

    def translated(self, shift: float) -> PointerState:
        return PointerState(self.weights, self.centers + shift, self.sigma)

    def wavefunction(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return sum(w * _gaussian(xs, c, self.sigma) for w, c in zip(self.weights, self.centers))

    def density(self, xs) -> np.ndarray:
        return np.abs(self.wavefunction(xs)) ** 2


@dataclass(frozen=True, eq=False)
class CoupledState:
    """Arm amplitudes together with one pointer per pair and arm configuration.

    ``occupancy[p, c]`` is true when pair ``pairs[p]`` shares an arm in
    configuration ``c``; that pointer then sits at ``coupling`` instead of 0.
    """

    arm: StateVector
    coupling: float
    sigma: float
    pairs: tuple[tuple[int, int], ...] = field(init=False)
    occupancy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        shape = self.arm.shape
        pairs = tuple(shape.pairs())
        occ = np.array([SamePair(shape, i, j).mask() for i, j in pairs], dtype=bool)
        occ = occ.reshape(len(pairs), shape.dim)
        occ.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "occupancy", occ)

    def arm_probabilities(self) -> np.ndarray:
        """Probability of each arm configuration; pointers are normalized so
        these do not depend on the coupling."""
        return np.abs(self.arm.amplitudes) ** 2

    def pointer(self, pair: tuple[int, int], config: int) -> PointerState:
        p = self.pairs.index(tuple(pair))
        center = self.coupling if self.occupancy[p, config] else 0.0
        return PointerState.gaussian(center, self.sigma)

    def pointer_shifts(self) -> np.ndarray:
        return self.coupling * self.occupancy.astype(float)

    def norm(self) -> float:
        # distinct configurations are orthogonal, so only pointer self-overlaps enter
        pointer_norm2 = {
            center: PointerState.gaussian(center, self.sigma).norm2()
            for center in (0.0, self.coupling)
        }
        factors = np.ones(self.arm.dim)
        for row in self.pointer_shifts():
            factors = factors * np.array([pointer_norm2[c] for c in row])
        return float(np.sqrt(np.sum(self.arm_probabilities() * factors)))

    def is_product(self) -> bool:
        """True when every pointer sits at the same place in every configuration."""
        return bool(self.coupling == 0 or not np.any(self.occupancy))


def evolve(pre: StateVector, lam: float, sigma: float = 1.0) -> CoupledState:
    """Exact interaction-picture evolution with dimensionless strength ``lam``."""
    if not lam >= 0:
        raise ValueError(f"coupling must be non-negative, got {lam}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if pre.shape.num_particles < 2:
        raise ValueError("need at least 2 particles")
    return CoupledState(pre, float(lam), float(sigma))


def _group_patterns(occupancy: np.ndarray):
    """Group configurations with identical pointer displacement patterns."""
    patterns, inverse = np.unique(occupancy.T, axis=0, return_inverse=True)
    return patterns.astype(float), inverse.reshape(-1)


@dataclass(frozen=True, eq=False)
class PostselectionResult:
    """Pointer marginals after (optional) post-selection of the arm state.

    ``covariance[(pair_a, pair_b)]`` is the covariance of two different
    pointers; this is where the O(lambda^2) back-action of post-selection
    shows up when the first-order term cancels.

    ``weights[P, P']`` is the reduced coefficient matrix over displacement
    patterns: coherent ``conj(B_P) B_P'`` after post-selection, diagonal
    without it.
    """

    pairs: tuple[tuple[int, int], ...]
    coupling: float
    sigma: float
    success_probability: float
    mean_shift: dict
    width_change: dict
    covariance: dict
    postselected: bool
    patterns: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def _gram(self, skip: int | None = None) -> np.ndarray:
        shifts = self.coupling * self.patterns
        g = np.ones((len(shifts), len(shifts)))
        for q in range(shifts.shape[1]):
            if q == skip:
                continue
            g = g * gaussian_overlap(shifts[:, q][:, None], shifts[:, q][None, :], self.sigma)
        return g

    def density(self, pair: tuple[int, int], xs) -> np.ndarray:
        """Marginal probability density of one pair's pointer on ``xs``."""
        p = self.pairs.index(tuple(pair))
        xs = np.asarray(xs, dtype=float)
        g_other = self._gram(skip=p)
        centers = self.coupling * self.patterns[:, p]
        waves = np.array([_gaussian(xs, c, self.sigma) for c in centers])
        coeff = self.weights * g_other
        dens = np.real(np.einsum("ab,ax,bx->x", coeff, waves, waves))
        return dens / self.success_probability

    def to_json(self) -> dict:
        return {
            "coupling": self.coupling,
            "sigma": self.sigma,
            "postselected": self.postselected,
            "success_probability": self.success_probability,
            "pairs": [
                {
                    "pair": list(pair),
                    "mean_shift": self.mean_shift[pair],
                    "width_change": self.width_change[pair],
                }
                for pair in self.pairs
            ],
            "covariance": [
                {"pairs": [list(a), list(b)], "value": v}
                for (a, b), v in self.covariance.items()
            ],
        }


def postselect(cs: CoupledState, post: StateVector | None) -> PostselectionResult:
    """Contract the arm state with ``post`` and return per-pair pointer moments.

    ``post=None`` skips the selection: the arms are traced out and the
    pointers form an incoherent mixture over configurations.
    """
    patterns, inverse = _group_patterns(cs.occupancy)
    npat = len(patterns)
    amps = cs.arm.amplitudes
    if post is None:
        diag = np.zeros(npat)
        np.add.at(diag, inverse, np.abs(amps) ** 2)
        weights = np.diag(diag).astype(np.complex128)
    else:
        if post.shape != cs.arm.shape:
            raise ShapeMismatchError(f"shape mismatch: {post.shape} vs {cs.arm.shape}")
        if not post.is_normalized():
            raise ValueError("post-selected state must be normalized")
        b = np.zeros(npat, dtype=np.complex128)
        np.add.at(b, inverse, np.conj(post.amplitudes) * amps)
        weights = np.outer(np.conj(b), b)

    shifts = cs.coupling * patterns
    gram = np.ones((npat, npat))
    for q in range(shifts.shape[1]):
        gram = gram * gaussian_overlap(shifts[:, q][:, None], shifts[:, q][None, :], cs.sigma)
    success = float(np.real(np.sum(weights * gram)))
    if success <= ORTHOGONAL_TOL:
        raise ImpossiblePostselectionError(
            f"post-selection success probability {success:.3g} is zero"
        )
    mean_shift, width_change, covariance = {}, {}, {}
    mids = [(shifts[:, p][:, None] + shifts[:, p][None, :]) / 2 for p in range(len(cs.pairs))]
    for p, pair in enumerate(cs.pairs):
        mean = float(np.real(np.sum(weights * gram * mids[p]))) / success
        second = float(np.real(np.sum(weights * gram * (cs.sigma**2 + mids[p] ** 2)))) / success
        mean_shift[pair] = mean
        width_change[pair] = second - mean**2 - cs.sigma**2
    for p, q in itertools.combinations(range(len(cs.pairs)), 2):
        cross = float(np.real(np.sum(weights * gram * mids[p] * mids[q]))) / success
        covariance[(cs.pairs[p], cs.pairs[q])] = (
            cross - mean_shift[cs.pairs[p]] * mean_shift[cs.pairs[q]]
        )
    return PostselectionResult(
        pairs=cs.pairs,
        coupling=cs.coupling,
        sigma=cs.sigma,
        success_probability=success,
        mean_shift=mean_shift,
        width_change=width_change,
        covariance=covariance,
        postselected=post is not None,
        patterns=patterns,
        weights=weights,
    )


def first_order_check(pre: StateVector, post: StateVector) -> float:
    """Largest ``|<post|same(i, j)|pre>|`` over pairs: the first-order coefficient."""
    if pre.shape != post.shape:
        raise ShapeMismatchError(f"shape mismatch: {pre.shape} vs {post.shape}")
    return max(
        abs(SamePair(pre.shape, i, j).expectation(post, pre)) for i, j in pre.shape.pairs()
    )


def _single_overlap(f, h, sigma: float) -> float:
    """Overlap of single-pointer factors ``("g", c)`` (Gaussian at c) or ``("d", 0)`` (g'(x))."""
    kf, cf = f
    kh, ch = h
    if kf == "g" and kh == "g":
        return float(gaussian_overlap(cf, ch, sigma))
    if kf == "d" and kh == "d":
        return 1.0 / (4 * sigma**2)
    c = cf if kf == "g" else ch
    return float(-(c / 2) / (2 * sigma**2) * gaussian_overlap(c, 0.0, sigma))


def perturbation_residual(
    pre: StateVector, post: StateVector, lam: float, sigma: float = 1.0
) -> float:
    """L2 norm of (exact post-selected pointer state) minus its first-order expansion.

    The expansion is ``<post|pre> g - lam sum_p <post|same_p|pre> g'_p``,
    everything unnormalized. The residual is O(lam^2).
    """
    cs = evolve(pre, lam, sigma)
    npairs = len(cs.pairs)
    terms = []
    b = np.conj(post.amplitudes) * pre.amplitudes
    for c in range(pre.dim):
        if b[c] != 0:
            terms.append((b[c], tuple(("g", lam * cs.occupancy[p, c]) for p in range(npairs))))
    terms.append((-np.sum(b), tuple(("g", 0.0) for _ in range(npairs))))
    for p in range(npairs):
        a_p = np.sum(b * cs.occupancy[p])
        factors = tuple(("d", 0.0) if q == p else ("g", 0.0) for q in range(npairs))
        terms.append((lam * a_p, factors))
    total = 0.0
    for wa, fa in terms:
        for wb, fb in terms:
            prod = 1.0
            for f, h in zip(fa, fb):
                prod *= _single_overlap(f, h, sigma)
            total += np.real(np.conj(wa) * wb) * prod
    return float(np.sqrt(max(total, 0.0)))


def _fit_slope(lams: np.ndarray, values: np.ndarray):
    keep = np.abs(values) >= SHIFT_FLOOR
    if keep.sum() < 2:
        return None, int((~keep).sum())
    slope = np.polyfit(np.log(lams[keep]), np.log(np.abs(values[keep])), 1)[0]
    return float(slope), int((~keep).sum())


@dataclass(frozen=True)
class ScanResult:
    lambdas: tuple[float, ...]
    sigma: float
    pairs: tuple[tuple[int, int], ...]
    postselected: bool
    mean_shift: np.ndarray  # (len(lambdas), len(pairs))
    width_change: np.ndarray
    success_probability: np.ndarray
    slope: float | None
    pair_slopes: dict
    width_slope: float | None
    max_covariance: np.ndarray
    covariance_slope: float | None
    excluded_points: int
    spans_decade: bool
    strong_coupling: bool
    focus_pair: tuple[int, int] | None = None

    @property
    def verdict(self) -> str:
        if self.slope is None:
            return "no deflection"
        if abs(self.slope - FIRST_ORDER_SLOPE) <= FIRST_ORDER_SLOPE_TOL:
            return "first-order deflection"
        if self.slope >= SECOND_ORDER_SLOPE - SECOND_ORDER_SLOPE_TOL:
            return "no first-order deflection"
        return "indeterminate"

    def rows(self) -> list[dict]:
        out = []
        for k, lam in enumerate(self.lambdas):
            for p, pair in enumerate(self.pairs):
                out.append(
                    {
                        "lambda": lam,
                        "pair": f"{pair[0]}-{pair[1]}",
                        "mean_shift": float(self.mean_shift[k, p]),
                        "width_change": float(self.width_change[k, p]),
                        "max_covariance": float(self.max_covariance[k]),
                        "success_probability": float(self.success_probability[k]),
                        "regime": "weak" if lam <= WEAK_RATIO * self.sigma else "strong-coupling",
                    }
                )
        return out

    def to_json(self) -> dict:
        return {
            "sigma": self.sigma,
            "postselected": self.postselected,
            "focus_pair": list(self.focus_pair) if self.focus_pair else None,
            "slope": self.slope,
            "pair_slopes": {f"{i}-{j}": s for (i, j), s in self.pair_slopes.items()},
            "width_slope": self.width_slope,
            "covariance_slope": self.covariance_slope,
            "verdict": self.verdict,
            "excluded_points": self.excluded_points,
            "spans_decade": self.spans_decade,
            "strong_coupling": self.strong_coupling,
        }


def deflection_scan(
    pre: StateVector,
    post: StateVector | None,
    lambdas: Sequence[float],
    sigma: float = 1.0,
    pair: tuple[int, int] | None = None,
) -> ScanResult:
    """Mean pointer shift against coupling strength, with a log-log slope fit.

    The headline ``slope`` fits ``pair`` if given, else the largest
    ``|mean shift|`` over pairs at each coupling. Shifts below
    ``SHIFT_FLOOR`` are left out of the fit and counted in
    ``excluded_points``.
    """
    lams = np.asarray(sorted(float(x) for x in lambdas))
    if lams.size < 2:
        raise InsufficientPointsError(
            f"need at least 2 coupling values for a fit, got {lams.size}"
        )
    if np.any(lams <= 0):
        raise ValueError("coupling values must be positive")
    pairs = tuple(pre.shape.pairs())
    if pair is not None:
        pair = (min(pair), max(pair))
        if pair not in pairs:
            raise ValueError(f"unknown pair {pair}")
    shifts = np.zeros((lams.size, len(pairs)))
    widths = np.zeros_like(shifts)
    max_cov = np.zeros(lams.size)
    success = np.zeros(lams.size)
    for k, lam in enumerate(lams):
        res = postselect(evolve(pre, lam, sigma), post)
        shifts[k] = [res.mean_shift[q] for q in pairs]
        widths[k] = [res.width_change[q] for q in pairs]
        success[k] = res.success_probability
        max_cov[k] = max((abs(v) for v in res.covariance.values()), default=0.0)

    if pair is not None:
        headline = shifts[:, pairs.index(pair)]
        headline_w = widths[:, pairs.index(pair)]
    else:
        headline = np.max(np.abs(shifts), axis=1)
        headline_w = np.max(np.abs(widths), axis=1)
    slope, excluded = _fit_slope(lams, headline)
    width_slope, _ = _fit_slope(lams, headline_w)
    covariance_slope, _ = _fit_slope(lams, max_cov)
    pair_slopes = {q: _fit_slope(lams, shifts[:, p])[0] for p, q in enumerate(pairs)}
    return ScanResult(
        lambdas=tuple(float(x) for x in lams),
        sigma=float(sigma),
        pairs=pairs,
        postselected=post is not None,
        mean_shift=shifts,
        width_change=widths,
        success_probability=success,
        slope=slope,
        pair_slopes=pair_slopes,
        width_slope=width_slope,
        max_covariance=max_cov,
        covariance_slope=covariance_slope,
        excluded_points=excluded,
        spans_decade=bool(lams[-1] / lams[0] >= 10 * (1 - 1e-12)),
        strong_coupling=bool(np.any(lams > WEAK_RATIO * sigma)),
        focus_pair=pair,
    )
