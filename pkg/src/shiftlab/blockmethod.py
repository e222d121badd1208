"""Block combinatorics: compatible sequences, cyclic index maps, signed
circulant weight matrices and the block functional.

The construction partitions an initial segment of the integers into
consecutive runs A_n of prescribed lengths p_n, equips each run with its
cyclic predecessor map, and derives from a weight sequence gamma the
signed circulant matrices whose invertibility drives the kernel
certification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .funcspace import BlockPoint, ScalarField, StructureError


class CompatibilityError(StructureError):
    """A length sequence violates the run-compatibility rules."""


class GammaError(StructureError):
    """A weight sequence violates the gamma conditions."""


@dataclass(frozen=True)
class CompatibleSequence:
    """Run lengths p_n; when `infinite`, p is the represented prefix."""

    p: tuple[int, ...]
    infinite: bool = False

    @property
    def n_families(self) -> int:
        return len(self.p)

    @property
    def total(self) -> int:
        return sum(self.p)


def validate_compatible_sequence(p: Sequence[int], infinite: bool = False) -> CompatibleSequence:
    """Check the run-length rules and return the validated sequence.

    A single finite run must have length > 1; otherwise each length must
    be an even integer multiple of its predecessor.  The diagnosis names
    the first offending pair.
    """
    p = tuple(int(v) for v in p)
    if not p:
        raise CompatibilityError("length sequence must be nonempty")
    if any(v < 1 for v in p):
        raise CompatibilityError("run lengths must be positive")
    if len(p) == 1 and not infinite:
        if p[0] == 1:
            raise CompatibilityError("a single run must have length > 1, got p_1 = 1")
        return CompatibleSequence(p, infinite)
    for n, (a, b) in enumerate(zip(p, p[1:]), start=1):
        if b % a != 0 or (b // a) % 2 != 0:
            raise CompatibilityError(
                f"p_{n + 1} = {b} is not an even multiple of p_{n} = {a}"
            )
    return CompatibleSequence(p, infinite)


@dataclass(frozen=True)
class BlockIndex:
    """Runs A_n, the family lookup pi, and the cyclic predecessor maps."""

    seq: CompatibleSequence
    runs: tuple[tuple[int, ...], ...]

    def family_of(self, k: int) -> int:
        for n, run in enumerate(self.runs, start=1):
            if run[0] <= k <= run[-1]:
                return n
        raise StructureError(f"index {k} outside the represented runs")

    def run(self, n: int) -> tuple[int, ...]:
        return self.runs[n - 1]

    def first(self, n: int) -> int:
        return self.runs[n - 1][0]

    def predecessor(self, k: int) -> int:
        """s_n: the first run element goes to the last, others step down."""
        n = self.family_of(k)
        run = self.runs[n - 1]
        j = k - run[0]
        return run[(j - 1) % len(run)]

    def predecessor_power(self, k: int, t: int) -> int:
        n = self.family_of(k)
        run = self.runs[n - 1]
        j = k - run[0]
        return run[(j - t) % len(run)]

    @property
    def n_blocks(self) -> int:
        return self.seq.total


def build_block_index(seq: CompatibleSequence) -> BlockIndex:
    runs = []
    start = 1
    for length in seq.p:
        runs.append(tuple(range(start, start + length)))
        start += length
    return BlockIndex(seq, tuple(runs))


# ---------------------------------------------------------------------------
# Signed circulant matrices.

@dataclass(frozen=True)
class SkewCirculant:
    """Rows are right-rotations of the previous row, wrapped entries negated."""

    order: int
    entries: tuple[complex, ...]
    matrix: np.ndarray = field(compare=False, default=None)

    def structure_ok(self) -> bool:
        m = self.matrix
        p = self.order
        for i in range(1, p):
            prev, cur = m[i - 1], m[i]
            if cur[0] != -prev[p - 1]:
                return False
            if not np.array_equal(cur[1:], prev[: p - 1]):
                return False
        return True

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))


def build_skew_circulant(gamma_run: Sequence[complex]) -> SkewCirculant:
    """Matrix with first row gamma and the signed cyclic row structure."""
    g = [complex(v) for v in gamma_run]
    p = len(g)
    m = np.empty((p, p), dtype=complex)
    for i in range(p):
        for j in range(p):
            m[i, j] = g[j - i] if j >= i else -g[p + j - i]
    return SkewCirculant(p, tuple(g), m)


# ---------------------------------------------------------------------------
# Weight sequences.

@dataclass(frozen=True)
class GammaConfig:
    gamma: tuple[complex, ...]
    field: ScalarField
    index: BlockIndex
    tail_mass: float = 0.0

    def run_values(self, n: int) -> tuple[complex, ...]:
        return tuple(self.gamma[k - 1] for k in self.index.run(n))

    def matrix(self, n: int) -> SkewCirculant:
        return build_skew_circulant(self.run_values(n))


def _det_tolerance(sc: SkewCirculant, rel: float) -> float:
    row_norms = np.linalg.norm(sc.matrix, axis=1)
    scale = float(np.prod(np.maximum(row_norms, 1e-300)))
    return rel * scale


def validate_gamma(
    gamma: Sequence[complex],
    index: BlockIndex,
    scalar_field: ScalarField,
    det_rel_tol: float = 1e-10,
    tail_mass: float = 0.0,
    check_det: bool = True,
) -> GammaConfig:
    g = tuple(complex(v) for v in gamma)
    if len(g) != index.n_blocks:
        raise GammaError(f"need {index.n_blocks} weights, got {len(g)}")
    if sum(1 for v in g if v != 0) < 2:
        raise GammaError("at least two weights must be nonzero")
    if sum(abs(v) for v in g) + tail_mass > 1 + 1e-12:
        raise GammaError("the weights must have total mass at most 1")
    if scalar_field is ScalarField.REAL and any(abs(v.imag) > 0 for v in g):
        raise GammaError("REAL field weights must be real")
    cfg = GammaConfig(g, scalar_field, index, tail_mass)
    if check_det:
        for n in range(1, index.seq.n_families + 1):
            sc = cfg.matrix(n)
            if abs(sc.det) <= _det_tolerance(sc, det_rel_tol):
                raise GammaError(f"weight matrix for run {n} is singular")
    return cfg


def default_gamma_search(
    seq: CompatibleSequence,
    scalar_field: ScalarField,
    seed: int = 0,
    max_tries: int = 64,
) -> GammaConfig:
    """Geometric weights 2^-m, randomly perturbed until all matrices invert.

    Deterministic given the seed; raises GammaError when the search
    budget is exhausted.
    """
    index = build_block_index(seq)
    total = index.n_blocks
    tail = float(2.0 ** (-total)) if seq.infinite else 0.0
    base = np.array([2.0 ** (-m) for m in range(1, total + 1)])
    rng = np.random.default_rng(seed)
    for attempt in range(max_tries):
        if attempt == 0:
            g = base.copy()
        else:
            perturb = 1.0 + 0.25 * rng.standard_normal(total)
            g = np.abs(base * perturb)
            g *= (1.0 - tail) / g.sum()
        try:
            return validate_gamma(g, index, scalar_field, tail_mass=tail)
        except GammaError:
            continue
    raise GammaError(f"no invertible weight sequence found in {max_tries} tries")


# ---------------------------------------------------------------------------
# Row vectors and the block functional.

def v_vector(config: GammaConfig, n: int, i: int) -> np.ndarray:
    """Row i of the signed circulant for run n, negated on the upper range."""
    p = config.index.seq.p[n - 1]
    if not 0 <= i <= 2 * p - 1:
        raise StructureError(f"row index {i} out of range for order {p}")
    sc = config.matrix(n)
    if i < p:
        return sc.matrix[i].copy()
    return -sc.matrix[i - p]


def block_delta(config: GammaConfig, index: BlockIndex, base_points: Sequence[tuple]):
    """The weighted point-mass functional over the run base points.

    Returns (point, weight) pairs ready for a point-combination
    functional; the total mass bound makes its norm at most 1.
    """
    if len(base_points) != index.seq.n_families:
        raise StructureError("one base point per run family is required")
    pairs = []
    for n in range(1, index.seq.n_families + 1):
        coords = base_points[n - 1]
        for k in index.run(n):
            w = config.gamma[k - 1]
            if w != 0:
                pairs.append((BlockPoint(k, coords), w))
    return pairs
