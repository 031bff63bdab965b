"""Dense state vectors and projectors on an N-particle, M-box register.

Conventions
-----------
* Boxes are numbered ``0 .. M-1``; for two boxes ``L = 0`` and ``R = 1``.
* Particles are numbered ``1 .. N`` (the labels used when talking about
  "pair (1, 2)"). Particle 1 is the most significant digit of the flat
  amplitude index, which is exactly the ordering produced by ``np.kron``.
* ``inner(a, b)`` is conjugate-linear in ``a`` (bra-ket convention).

The phase states use ``k = 0 .. M-1``. Summing over ``k = 1 .. M`` instead
multiplies ``phase_state(M, theta)`` by the global phase ``exp(i theta)``,
which drops out of every probability computed here.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionCapError, InvalidShapeError, ShapeMismatchError
from .tolerances import NORM_TOL, identity_tol, max_dim

__all__ = [
    "RegisterShape",
    "StateVector",
    "ProjectorSpec",
    "SamePair",
    "DiffPair",
    "BoxPair",
    "SingleBox",
    "ProductPost",
    "Raw",
    "plus_state",
    "phase_state",
    "basis_state",
    "fourier_basis",
    "tensor",
    "inner",
    "apply",
    "configurations",
    "box_name",
]


@dataclass(frozen=True)
class RegisterShape:
    """``num_particles`` particles, each distributed over ``num_boxes`` boxes."""

    num_particles: int
    num_boxes: int

    def __post_init__(self):
        n, m = self.num_particles, self.num_boxes
        if int(n) != n or n < 1:
            raise InvalidShapeError(f"need at least 1 particle, got {n}")
        if int(m) != m or m < 2:
            raise InvalidShapeError(f"need at least 2 boxes, got {m}")
        cap = max_dim()
        if m**n > cap:
            raise DimensionCapError(
                f"register of {n} particles in {m} boxes has dimension {m**n}, "
                f"above the cap of {cap}"
            )

    @property
    def dim(self) -> int:
        return self.num_boxes**self.num_particles

    @property
    def tensor_shape(self) -> tuple[int, ...]:
        return (self.num_boxes,) * self.num_particles

    def check_particle(self, i: int) -> int:
        """Validate a 1-based particle label and return its 0-based axis."""
        if int(i) != i or not 1 <= i <= self.num_particles:
            raise ValueError(
                f"particle label {i} out of range 1..{self.num_particles}"
            )
        return int(i) - 1

    def check_box(self, b: int) -> int:
        if int(b) != b or not 0 <= b < self.num_boxes:
            raise ValueError(f"box index {b} out of range 0..{self.num_boxes - 1}")
        return int(b)

    def pairs(self) -> list[tuple[int, int]]:
        """All unordered particle pairs, sorted lexicographically."""
        n = self.num_particles
        return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


@functools.lru_cache(maxsize=32)
def _configurations(num_particles: int, num_boxes: int) -> np.ndarray:
    digits = np.indices((num_boxes,) * num_particles).reshape(num_particles, -1).T
    digits = np.ascontiguousarray(digits, dtype=np.int16)
    digits.setflags(write=False)
    return digits


def configurations(shape: RegisterShape) -> np.ndarray:
    """``(dim, N)`` array: row ``c`` lists the box of each particle in configuration ``c``."""
    return _configurations(shape.num_particles, shape.num_boxes)


def box_name(num_boxes: int, b: int) -> str:
    if num_boxes == 2:
        return "LR"[b]
    return str(b)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Immutable complex amplitude vector of length ``M**N``."""

    shape: RegisterShape
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != self.shape.dim:
            raise ShapeMismatchError(
                f"expected {self.shape.dim} amplitudes, got {amps.size}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.shape.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def normalized(self) -> StateVector:
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.shape, self.amplitudes / nrm)

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.shape.tensor_shape)

    def allclose(self, other: StateVector, atol: float | None = None) -> bool:
        _check_same_shape(self, other)
        if atol is None:
            atol = identity_tol(self.dim)
        return bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0, atol=atol))

    def __mul__(self, scalar: complex) -> StateVector:
        return StateVector(self.shape, self.amplitudes * scalar)

    __rmul__ = __mul__

    def __add__(self, other: StateVector) -> StateVector:
        _check_same_shape(self, other)
        return StateVector(self.shape, self.amplitudes + other.amplitudes)

    def __sub__(self, other: StateVector) -> StateVector:
        _check_same_shape(self, other)
        return StateVector(self.shape, self.amplitudes - other.amplitudes)

    def __repr__(self) -> str:
        return (
            f"StateVector(N={self.shape.num_particles}, M={self.shape.num_boxes}, "
            f"norm={self.norm():.15g})"
        )

    def to_json(self) -> dict:
        return {
            "num_particles": self.shape.num_particles,
            "num_boxes": self.shape.num_boxes,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }

    @classmethod
    def from_json(cls, data: dict) -> StateVector:
        shape = RegisterShape(int(data["num_particles"]), int(data["num_boxes"]))
        pairs = np.asarray(data["amplitudes"], dtype=float).reshape(-1, 2)
        return cls(shape, pairs[:, 0] + 1j * pairs[:, 1])


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


def _single(num_boxes: int, amps) -> StateVector:
    return StateVector(RegisterShape(1, num_boxes), amps)


def plus_state(M: int) -> StateVector:
    """Uniform superposition over ``M`` boxes."""
    if int(M) != M or M < 2:
        raise InvalidShapeError(f"need at least 2 boxes, got {M}")
    return _single(M, np.full(M, 1.0 / np.sqrt(M)))


def phase_state(M: int, theta: float) -> StateVector:
    """``(1/sqrt M) sum_k exp(i theta k) |k>``, k = 0..M-1."""
    if int(M) != M or M < 2:
        raise InvalidShapeError(f"need at least 2 boxes, got {M}")
    k = np.arange(M)
    return _single(M, np.exp(1j * theta * k) / np.sqrt(M))


def basis_state(M: int, k: int) -> StateVector:
    if int(M) != M or M < 2:
        raise InvalidShapeError(f"need at least 2 boxes, got {M}")
    if not 0 <= k < M:
        raise ValueError(f"box index {k} out of range 0..{M - 1}")
    amps = np.zeros(M, dtype=np.complex128)
    amps[k] = 1.0
    return _single(M, amps)


def fourier_basis(M: int) -> list[StateVector]:
    """Orthonormal basis whose element ``m`` has phase ``pi/M + 2 pi m / M``.

    Element 0 is ``phase_state(M, pi/M)``; for ``M = 2`` the basis is
    ``[|+i>, |-i>]``.
    """
    if int(M) != M or M < 2:
        raise InvalidShapeError(f"need at least 2 boxes, got {M}")
    return [phase_state(M, np.pi / M + 2 * np.pi * m / M) for m in range(M)]


def tensor(states: Sequence[StateVector]) -> StateVector:
    """Tensor product; the first state becomes the most significant particle(s)."""
    states = list(states)
    if not states:
        raise ValueError("tensor of an empty list")
    m = states[0].shape.num_boxes
    for s in states[1:]:
        if s.shape.num_boxes != m:
            raise ShapeMismatchError(
                f"cannot tensor registers with {m} and {s.shape.num_boxes} boxes"
            )
    n = sum(s.shape.num_particles for s in states)
    shape = RegisterShape(n, m)
    amps = states[0].amplitudes
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
    return StateVector(shape, amps)


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, conjugating ``a``."""
    _check_same_shape(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


class ProjectorSpec:
    """Common interface of the structured projectors.

    Subclasses are frozen dataclasses carrying their register ``shape``.
    Diagonal kinds (occupation projectors) act by a boolean mask over
    configurations and never build a matrix.
    """

    shape: RegisterShape

    def mask(self) -> np.ndarray | None:
        """Boolean diagonal for occupation projectors, ``None`` otherwise."""
        return None

    def apply(self, state: StateVector) -> StateVector:
        if state.shape != self.shape:
            raise ShapeMismatchError(f"shape mismatch: {self.shape} vs {state.shape}")
        mask = self.mask()
        return StateVector(self.shape, np.where(mask, state.amplitudes, 0.0))

    def matrix(self) -> np.ndarray:
        """Dense matrix; meant for small registers and tests."""
        mask = self.mask()
        return np.diag(mask.astype(np.complex128))

    def expectation(self, bra: StateVector, ket: StateVector) -> complex:
        """``<bra| P |ket>``."""
        return inner(bra, self.apply(ket))


@dataclass(frozen=True)
class SamePair(ProjectorSpec):
    """Particles ``i`` and ``j`` share a box (any box)."""

    shape: RegisterShape
    i: int
    j: int

    def __post_init__(self):
        _check_pair(self.shape, self.i, self.j)

    def mask(self):
        cfg = configurations(self.shape)
        return cfg[:, self.i - 1] == cfg[:, self.j - 1]


@dataclass(frozen=True)
class DiffPair(ProjectorSpec):
    """Particles ``i`` and ``j`` are in different boxes."""

    shape: RegisterShape
    i: int
    j: int

    def __post_init__(self):
        _check_pair(self.shape, self.i, self.j)

    def mask(self):
        cfg = configurations(self.shape)
        return cfg[:, self.i - 1] != cfg[:, self.j - 1]


@dataclass(frozen=True)
class BoxPair(ProjectorSpec):
    """Particle ``i`` in box ``b1`` and particle ``j`` in box ``b2``."""

    shape: RegisterShape
    i: int
    j: int
    b1: int
    b2: int

    def __post_init__(self):
        _check_pair(self.shape, self.i, self.j)
        self.shape.check_box(self.b1)
        self.shape.check_box(self.b2)

    def mask(self):
        cfg = configurations(self.shape)
        return (cfg[:, self.i - 1] == self.b1) & (cfg[:, self.j - 1] == self.b2)


@dataclass(frozen=True)
class SingleBox(ProjectorSpec):
    shape: RegisterShape
    i: int
    b: int

    def __post_init__(self):
        self.shape.check_particle(self.i)
        self.shape.check_box(self.b)

    def mask(self):
        return configurations(self.shape)[:, self.i - 1] == self.b


@dataclass(frozen=True, eq=False)
class ProductPost(ProjectorSpec):
    """Rank-one projector onto a product of single-particle states."""

    shape: RegisterShape
    states: tuple[StateVector, ...]
    _target: StateVector = field(init=False, repr=False)

    def __post_init__(self):
        states = tuple(self.states)
        if len(states) != self.shape.num_particles:
            raise ShapeMismatchError(
                f"need {self.shape.num_particles} single-particle states, got {len(states)}"
            )
        for s in states:
            if s.shape != RegisterShape(1, self.shape.num_boxes):
                raise ShapeMismatchError(f"not a single-particle state on M={self.shape.num_boxes}")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "_target", tensor(states).normalized())

    @property
    def target(self) -> StateVector:
        return self._target

    def apply(self, state):
        if state.shape != self.shape:
            raise ShapeMismatchError(f"shape mismatch: {self.shape} vs {state.shape}")
        return self._target * inner(self._target, state)

    def matrix(self):
        v = self._target.amplitudes
        return np.outer(v, v.conj())


@dataclass(frozen=True, eq=False)
class Raw(ProjectorSpec):
    """Arbitrary dense operator.

    Used both for explicit projectors and, in weak-value computations, for
    operators that are not projectors at all.
    """

    shape: RegisterShape
    operator: np.ndarray

    def __post_init__(self):
        op = np.array(self.operator, dtype=np.complex128)
        if op.shape != (self.shape.dim, self.shape.dim):
            raise ShapeMismatchError(
                f"operator must be {self.shape.dim}x{self.shape.dim}, got {op.shape}"
            )
        op.setflags(write=False)
        object.__setattr__(self, "operator", op)

    @classmethod
    def identity(cls, shape: RegisterShape) -> Raw:
        return cls(shape, np.eye(shape.dim))

    @classmethod
    def of(cls, p: ProjectorSpec) -> Raw:
        return cls(p.shape, p.matrix())

    def apply(self, state):
        if state.shape != self.shape:
            raise ShapeMismatchError(f"shape mismatch: {self.shape} vs {state.shape}")
        return StateVector(self.shape, self.operator @ state.amplitudes)

    def matrix(self):
        return np.array(self.operator)

    def is_projector(self, tol: float | None = None) -> bool:
        if tol is None:
            tol = identity_tol(self.shape.dim)
        op = self.operator
        return bool(
            np.allclose(op @ op, op, rtol=0, atol=tol)
            and np.allclose(op, op.conj().T, rtol=0, atol=tol)
        )

    def __add__(self, other: ProjectorSpec) -> Raw:
        if other.shape != self.shape:
            raise ShapeMismatchError(f"shape mismatch: {self.shape} vs {other.shape}")
        return Raw(self.shape, self.operator + other.matrix())


def _check_pair(shape: RegisterShape, i: int, j: int):
    shape.check_particle(i)
    shape.check_particle(j)
    if i == j:
        raise ValueError(f"pair needs two distinct particles, got ({i}, {j})")


def apply(p: ProjectorSpec, s: StateVector) -> StateVector:
    """Unnormalized ``P|s>``."""
    return p.apply(s)

