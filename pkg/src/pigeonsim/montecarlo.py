"""Monte Carlo runs of sequential strong measurements with final post-selection.

Every trajectory starts from the scenario's pre-selected state, goes through
the intermediate measurements in order (Born-rule outcome, collapse,
renormalize), and ends with a measurement of every particle in
``fourier_basis(M)``. The run is *selected* when that final outcome equals the
scenario's post-selection.

Random streams
--------------
Trajectories are cut into fixed blocks of ``block_size``. Block ``b`` draws
from ``PCG64(SeedSequence(seed, spawn_key=(b,)))``, i.e. the ``b``-th child
of ``SeedSequence(seed).spawn``. Each trajectory consumes exactly
``len(intermediate) + 1`` uniforms, row by row. Counts therefore depend only
on ``(seed, samples, block_size)``, never on how blocks are spread across
workers.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .pigeonhole import Scenario, build_scenario
from .prepost import (
    MeasurementSpec,
    box_measurement,
    chain_amplitude,
    same_diff_measurement,
)
from .qstate import StateVector, fourier_basis, tensor
from .tolerances import ORTHOGONAL_TOL, Z_FAIL, Z_FLAG

__all__ = [
    "RNG_ALGORITHM",
    "RunConfig",
    "RunRecord",
    "CountsTable",
    "OracleCell",
    "OracleReport",
    "measurement_from_descriptor",
    "run_ensemble",
    "simulate_records",
    "exact_probabilities",
    "compare_to_oracle",
]

RNG_ALGORITHM = "PCG64"
DEFAULT_BLOCK_SIZE = 4096


def measurement_from_descriptor(shape, desc) -> MeasurementSpec:
    """Build a measurement from a config entry.

    Accepts ``[i, j]`` (same/different on pair i, j) or a mapping
    ``{"pair": [i, j], "kind": "same_diff" | "boxes"}``.
    """
    if isinstance(desc, dict):
        pair = desc["pair"]
        kind = desc.get("kind", "same_diff")
    else:
        pair, kind = desc, "same_diff"
    if len(pair) != 2:
        raise ValueError(f"a pair needs two particle labels, got {pair!r}")
    i, j = (int(x) for x in pair)
    if kind == "same_diff":
        return same_diff_measurement(shape, i, j)
    if kind == "boxes":
        return box_measurement(shape, i, j)
    raise ValueError(f"unknown measurement kind {kind!r}")


@dataclass(frozen=True, eq=False)
class RunConfig:
    scenario: Scenario
    intermediate: tuple[MeasurementSpec, ...]
    samples: int
    seed: int
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        object.__setattr__(self, "intermediate", tuple(self.intermediate))
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError(f"samples must be a positive integer, got {self.samples}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.block_size < 1:
            raise ValueError("block_size must be positive")
        for m in self.intermediate:
            if m.shape != self.scenario.shape:
                raise ValueError("intermediate measurement acts on a different register")

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        """Config document: ``n, m, outcome, intermediate, samples, seed``."""
        rng = data.get("rng", RNG_ALGORITHM)
        if rng != RNG_ALGORITHM:
            raise ValueError(f"unsupported rng {rng!r}; only {RNG_ALGORITHM} is available")
        scenario = build_scenario(int(data["n"]), int(data["m"]), data.get("outcome"))
        intermediate = tuple(
            measurement_from_descriptor(scenario.shape, d) for d in data.get("intermediate", [])
        )
        return cls(
            scenario=scenario,
            intermediate=intermediate,
            samples=int(data.get("samples", 100_000)),
            seed=int(data.get("seed", 0)),
            block_size=int(data.get("block_size", DEFAULT_BLOCK_SIZE)),
        )


@dataclass(frozen=True)
class RunRecord:
    intermediate_outcomes: tuple[str, ...]
    final_outcome: tuple[int, ...]
    selected: bool


class _OutcomeTree:
    """Exact conditional outcome probabilities for every measurement history.

    Histories are indexed in mixed radix; ``probs[k]`` has one row per history
    of length ``k`` and one column per outcome of step ``k`` (the last step
    is the final product-basis measurement).
    """

    def __init__(self, cfg: RunConfig):
        shape = cfg.scenario.shape
        self.radices = [len(m) for m in cfg.intermediate] + [shape.dim]
        basis = fourier_basis(shape.num_boxes)
        self._bra = np.array([b.amplitudes.conj() for b in basis])
        self._n = shape.num_particles
        self.probs: list[np.ndarray] = []
        states = [cfg.scenario.pre.normalized()]
        for m in cfg.intermediate:
            rows, children = [], []
            for st in states:
                row = np.zeros(len(m))
                for k, (_, proj) in enumerate(m):
                    img = proj.apply(st) if st is not None else None
                    nrm = img.norm() if img is not None else 0.0
                    if nrm > ORTHOGONAL_TOL:
                        row[k] = nrm**2
                        children.append(img.normalized())
                    else:
                        children.append(None)
                rows.append(_normalize(row))
            self.probs.append(np.array(rows))
            states = children
        self.probs.append(np.array([_normalize(self._final_probs(st)) for st in states]))

    def _final_probs(self, st: StateVector | None) -> np.ndarray:
        dim = len(self._bra) ** self._n
        if st is None:
            return np.zeros(dim)
        t = st.as_tensor()
        for axis in range(self._n):
            t = np.moveaxis(np.tensordot(self._bra, t, axes=([1], [axis])), 0, axis)
        amps = t.reshape(-1)
        amps = np.where(np.abs(amps) > ORTHOGONAL_TOL, amps, 0.0)
        return np.abs(amps) ** 2

    @property
    def num_cells(self) -> int:
        return math.prod(self.radices)

    def sample(self, uniforms: np.ndarray) -> np.ndarray:
        """Cell index (full history) of each trajectory given its row of uniforms."""
        node = np.zeros(len(uniforms), dtype=np.int64)
        for step, table in enumerate(self.probs):
            cum = np.cumsum(table, axis=1)
            choice = np.empty_like(node)
            for h in np.unique(node):
                sel = node == h
                # rounding can leave cum[-1] a hair below 1; never step past
                # the last outcome with nonzero probability
                last = np.flatnonzero(table[h])[-1]
                picked = np.searchsorted(cum[h], uniforms[sel, step], side="right")
                choice[sel] = np.minimum(picked, last)
            node = node * self.radices[step] + choice
        return node


def _normalize(row: np.ndarray) -> np.ndarray:
    total = row.sum()
    return row / total if total > 0 else row


def _block_bounds(samples: int, block_size: int) -> list[tuple[int, int]]:
    return [(b, min(block_size, samples - b * block_size)) for b in range(-(-samples // block_size))]


def _block_cells(tree: _OutcomeTree, seed: int, block: int, count: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed, spawn_key=(block,))
    rng = np.random.Generator(np.random.PCG64(ss))
    u = rng.random((count, len(tree.radices)))
    return tree.sample(u)


@dataclass(frozen=True, eq=False)
class CountsTable:
    """Counts over every (intermediate outcomes, final outcome) cell."""

    labels: tuple[tuple[str, ...], ...]
    num_particles: int
    num_boxes: int
    post_outcome: tuple[int, ...]
    counts: np.ndarray
    samples: int
    seed: int

    def final_outcomes(self) -> list[tuple[int, ...]]:
        return list(itertools.product(range(self.num_boxes), repeat=self.num_particles))

    def cells(self) -> Iterator[tuple[tuple[str, ...], tuple[int, ...], bool, int]]:
        finals = self.final_outcomes()
        idx = 0
        for hist in itertools.product(*self.labels):
            for fin in finals:
                yield hist, fin, fin == self.post_outcome, int(self.counts[idx])
                idx += 1

    def count(self, intermediate: Sequence[str], final: Sequence[int] | None = None) -> int:
        """Count for a history; ``final=None`` means the post-selected outcome."""
        final = tuple(self.post_outcome if final is None else final)
        hist = tuple(intermediate)
        return sum(c for h, f, _, c in self.cells() if h == hist and f == final)

    @property
    def selected_count(self) -> int:
        return sum(c for _, _, sel, c in self.cells() if sel)

    def conditional_frequency(self, step: int, label: str) -> float:
        """Frequency of ``label`` at ``step`` (0-based) among selected runs."""
        sel = self.selected_count
        if sel == 0:
            return float("nan")
        hits = sum(c for h, _, s, c in self.cells() if s and h[step] == label)
        return hits / sel

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            [f"step_{k + 1}" for k in range(len(self.labels))]
            + [f"final_{i + 1}" for i in range(self.num_particles)]
            + ["selected", "count"]
        )
        for hist, fin, sel, c in self.cells():
            writer.writerow(list(hist) + list(fin) + [int(sel), c])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "num_particles": self.num_particles,
            "num_boxes": self.num_boxes,
            "post_outcome": list(self.post_outcome),
            "cells": [
                {"intermediate": list(h), "final": list(f), "selected": s, "count": c}
                for h, f, s, c in self.cells()
            ],
        }


def run_ensemble(cfg: RunConfig, workers: int | None = None) -> CountsTable:
    """Sample ``cfg.samples`` trajectories and tally every cell.

    ``workers > 1`` spreads blocks over a thread pool; the result is
    identical to the serial run.
    """
    tree = _OutcomeTree(cfg)
    blocks = _block_bounds(cfg.samples, cfg.block_size)

    def tally(block):
        b, count = block
        return np.bincount(_block_cells(tree, cfg.seed, b, count), minlength=tree.num_cells)

    if workers is None or workers <= 1:
        parts = [tally(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(tally, blocks))
    counts = np.sum(parts, axis=0, dtype=np.int64)
    return CountsTable(
        labels=tuple(m.labels for m in cfg.intermediate),
        num_particles=cfg.scenario.shape.num_particles,
        num_boxes=cfg.scenario.shape.num_boxes,
        post_outcome=tuple(cfg.scenario.outcome),
        counts=counts,
        samples=cfg.samples,
        seed=cfg.seed,
    )


def simulate_records(cfg: RunConfig) -> list[RunRecord]:
    """Per-trajectory records, drawn from the same streams as :func:`run_ensemble`."""
    tree = _OutcomeTree(cfg)
    finals = list(
        itertools.product(range(cfg.scenario.shape.num_boxes), repeat=cfg.scenario.shape.num_particles)
    )
    post = tuple(cfg.scenario.outcome)
    records = []
    for b, count in _block_bounds(cfg.samples, cfg.block_size):
        for cell in _block_cells(tree, cfg.seed, b, count):
            digits = []
            for radix in reversed(tree.radices):
                cell, d = divmod(int(cell), radix)
                digits.append(d)
            digits.reverse()
            hist = tuple(m.labels[d] for m, d in zip(cfg.intermediate, digits[:-1]))
            fin = finals[digits[-1]]
            records.append(RunRecord(hist, fin, fin == post))
    return records


def exact_probabilities(cfg: RunConfig) -> np.ndarray:
    """Exact probability of every cell, from sequential-collapse chains.

    Independent of the sampler: each cell is evaluated on its own with
    :func:`~pigeonsim.prepost.chain_amplitude` against the product final state.
    """
    shape = cfg.scenario.shape
    basis = fourier_basis(shape.num_boxes)
    finals = [
        tensor([basis[o] for o in fin])
        for fin in itertools.product(range(shape.num_boxes), repeat=shape.num_particles)
    ]
    out = []
    for hist in itertools.product(*[list(m) for m in cfg.intermediate]):
        projectors = [p for _, p in hist]
        for fin in finals:
            out.append(chain_amplitude(cfg.scenario.pre, projectors, fin).path_probability)
    return np.array(out)


@dataclass(frozen=True)
class OracleCell:
    intermediate: tuple[str, ...]
    final: tuple[int, ...]
    selected: bool
    count: int
    empirical: float
    exact: float
    z: float
    status: str


@dataclass(frozen=True)
class OracleReport:
    samples: int
    seed: int
    total_exact: float
    cells: tuple[OracleCell, ...]

    @property
    def max_abs_z(self) -> float:
        return max(abs(c.z) for c in self.cells)

    @property
    def flagged(self) -> int:
        return sum(c.status == "flag" for c in self.cells)

    @property
    def failed(self) -> int:
        return sum(c.status == "fail" for c in self.cells)

    def cell(self, intermediate: Sequence[str], final: Sequence[int]) -> OracleCell:
        key = (tuple(intermediate), tuple(final))
        for c in self.cells:
            if (c.intermediate, c.final) == key:
                return c
        raise KeyError(key)

    def to_json(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "total_exact_probability": self.total_exact,
            "max_abs_z": self.max_abs_z,
            "flagged": self.flagged,
            "failed": self.failed,
            "cells": [
                {
                    "intermediate": list(c.intermediate),
                    "final": list(c.final),
                    "selected": c.selected,
                    "count": c.count,
                    "empirical": c.empirical,
                    "exact": c.exact,
                    "z": c.z,
                    "status": c.status,
                }
                for c in self.cells
            ],
        }


def _z_score(count: int, n: int, p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0 if count == round(n * p) else math.copysign(math.inf, count - n * p)
    return (count - n * p) / math.sqrt(n * p * (1 - p))


def compare_to_oracle(cfg: RunConfig, table: CountsTable | None = None, workers: int | None = None) -> OracleReport:
    """Empirical frequencies against exact cell probabilities, with z-scores.

    Status is ``ok`` for ``|z| <= 4``, ``flag`` up to 5, ``fail`` beyond.
    """
    if table is None:
        table = run_ensemble(cfg, workers=workers)
    exact = exact_probabilities(cfg)
    n = table.samples
    cells = []
    for (hist, fin, sel, c), p in zip(table.cells(), exact):
        z = _z_score(c, n, float(p))
        status = "ok" if abs(z) <= Z_FLAG else ("flag" if abs(z) <= Z_FAIL else "fail")
        cells.append(OracleCell(hist, fin, sel, c, c / n, float(p), z, status))
    return OracleReport(n, table.seed, float(exact.sum()), tuple(cells))
