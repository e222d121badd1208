"""Function algebra on discretized compact spaces.

A space is a finite topological sum of blocks, together with an adjoined
sequence of isolated points and one or more limit points.  Each block is a
finite product of factors, and each factor carries a basis that transforms
exactly under the homeomorphisms used elsewhere in the package:

* circle factors: Fourier modes up to a truncation degree (rotations act
  diagonally),
* cycle factors: indicators of finitely many cells (cyclic steps permute
  them),
* symbol factors: indicators of positioned windows into a bilateral
  sequence (the shift moves the position).

Functions are sparse coefficient tables over the resulting product bases,
plus explicit values on the first `sequence_len` sequence points and on
the limit points.  Beyond the explicit range the sequence is taken to be
constant on each residue class, equal to the class limit value; this is
the dense subspace on which all operators act exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .sequences import SymbolPoint

TWO_PI = 2.0 * math.pi


class StructureError(ValueError):
    """A value does not match the structure of its space."""


class GlueViolationError(StructureError):
    """Limit values inconsistent with their identified block addresses."""


class TruncationError(StructureError):
    """A coefficient table exceeds the declared truncation bounds."""


class ScalarField(Enum):
    REAL = "REAL"
    COMPLEX = "COMPLEX"


@dataclass(frozen=True)
class CircleFactor:
    degree: int = 16

    def __post_init__(self):
        if self.degree < 0:
            raise StructureError("Fourier degree must be nonnegative")


@dataclass(frozen=True)
class CycleFactor:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise StructureError("cycle factor needs at least one cell")


@dataclass(frozen=True)
class SymbolFactor:
    alphabet: int
    depth: int = 10

    def __post_init__(self):
        if self.alphabet < 2:
            raise StructureError("symbol alphabet needs at least two letters")
        if self.depth < 1:
            raise StructureError("window depth must be positive")


Factor = CircleFactor | CycleFactor | SymbolFactor


@dataclass(frozen=True)
class BlockDescriptor:
    block_id: int
    factors: tuple[Factor, ...]


@dataclass(frozen=True)
class FreeLimit:
    """A limit point adjoined freely (a plain one-point compactification)."""


@dataclass(frozen=True)
class IdentifiedLimit:
    """A limit point identified with a point of a block."""

    block_id: int
    coords: tuple


LimitPoint = FreeLimit | IdentifiedLimit


@dataclass(frozen=True)
class BlockSpace:
    blocks: tuple[BlockDescriptor, ...]
    sequence_len: int
    limit_points: tuple[LimitPoint, ...]
    field: ScalarField
    tail_window: int = 8

    def __post_init__(self):
        ids = [b.block_id for b in self.blocks]
        if ids != list(range(1, len(ids) + 1)):
            raise StructureError("block ids must be 1..B consecutively")
        if self.sequence_len < 1:
            raise StructureError("sequence_len must be >= 1")
        if not self.limit_points:
            raise StructureError("at least one limit point is required")
        for lp in self.limit_points:
            if isinstance(lp, IdentifiedLimit) and not (1 <= lp.block_id <= len(ids)):
                raise StructureError(f"limit identified with unknown block {lp.block_id}")

    def block(self, block_id: int) -> BlockDescriptor:
        if not 1 <= block_id <= len(self.blocks):
            raise StructureError(f"no block with id {block_id}")
        return self.blocks[block_id - 1]

    @property
    def n_limits(self) -> int:
        return len(self.limit_points)

    def seq_class(self, n: int) -> int:
        """Residue class of the sequence index n, indexing its limit point."""
        return n % self.n_limits


# ---------------------------------------------------------------------------
# Point references.

@dataclass(frozen=True)
class BlockPoint:
    block_id: int
    coords: tuple


@dataclass(frozen=True)
class SeqPoint:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise StructureError("sequence points are indexed from 1")


@dataclass(frozen=True)
class Limit:
    index: int


PointRef = BlockPoint | SeqPoint | Limit


def _check_coords(desc: BlockDescriptor, coords: tuple) -> None:
    if len(coords) != len(desc.factors):
        raise StructureError(
            f"block {desc.block_id} expects {len(desc.factors)} coordinates, got {len(coords)}"
        )
    for fac, c in zip(desc.factors, coords):
        if isinstance(fac, CircleFactor):
            if not isinstance(c, (int, float, np.floating)):
                raise StructureError("circle coordinate must be an angle")
        elif isinstance(fac, CycleFactor):
            if not isinstance(c, (int, np.integer)) or not 0 <= int(c) < fac.size:
                raise StructureError("cycle coordinate out of range")
        else:
            if not isinstance(c, SymbolPoint):
                raise StructureError("symbol coordinate must be a SymbolPoint")


# ---------------------------------------------------------------------------
# Block functions.

@dataclass(frozen=True)
class BlockFunction:
    """Coefficient tables per block + explicit sequence and limit values.

    Tables map multi-indices (one component per factor) to complex
    coefficients.  Index components are: int mode k for circle factors,
    int cell for cycle factors, (position, letters) for symbol factors.
    """

    space: BlockSpace
    tables: tuple[Mapping[tuple, complex], ...]
    seq_values: np.ndarray
    limit_values: np.ndarray

    def table(self, block_id: int) -> Mapping[tuple, complex]:
        return self.tables[block_id - 1]


def _validate_index(desc: BlockDescriptor, idx: tuple) -> None:
    if len(idx) != len(desc.factors):
        raise TruncationError(
            f"index arity {len(idx)} does not match block {desc.block_id}"
        )
    for fac, comp in zip(desc.factors, idx):
        if isinstance(fac, CircleFactor):
            if abs(int(comp)) > fac.degree:
                raise TruncationError(f"Fourier mode {comp} beyond degree {fac.degree}")
        elif isinstance(fac, CycleFactor):
            if not 0 <= int(comp) < fac.size:
                raise TruncationError(f"cell index {comp} out of range")
        else:
            pos, word = comp
            if len(word) > fac.depth:
                raise TruncationError(f"window of length {len(word)} beyond depth {fac.depth}")
            if any(not 0 <= a < fac.alphabet for a in word):
                raise TruncationError("window letters outside the alphabet")


def _conj_index(desc: BlockDescriptor, idx: tuple) -> tuple:
    return tuple(
        -comp if isinstance(fac, CircleFactor) else comp
        for fac, comp in zip(desc.factors, idx)
    )


def _real_symmetric(desc: BlockDescriptor, tab: Mapping[tuple, complex], tol: float) -> bool:
    for idx, c in tab.items():
        cc = tab.get(_conj_index(desc, idx), 0.0)
        if abs(np.conj(cc) - c) > tol:
            return False
    return True


def assemble_block_function(
    space: BlockSpace,
    parts: Mapping[int, Mapping[tuple, complex]],
    seq: Iterable[complex],
    limits: Iterable[complex],
    glue_tol: float = 1e-12,
) -> BlockFunction:
    """Validate and build a BlockFunction.

    Rejects missing blocks, truncation overflow, continuity-glue
    violations at identified limit points, tail windows inconsistent with
    the class limits, and (for REAL spaces) asymmetric Fourier tables.
    """
    tables = []
    for desc in space.blocks:
        if desc.block_id not in parts:
            raise StructureError(f"missing part for block {desc.block_id}")
        tab = {tuple(k): complex(v) for k, v in parts[desc.block_id].items() if v != 0}
        for idx in tab:
            _validate_index(desc, idx)
        if space.field is ScalarField.REAL and not _real_symmetric(desc, tab, 1e-9):
            raise StructureError(f"block {desc.block_id} table is not conjugate symmetric")
        tables.append(tab)
    seq_arr = np.asarray(list(seq), dtype=complex)
    if seq_arr.shape != (space.sequence_len,):
        raise StructureError(
            f"expected {space.sequence_len} sequence values, got {seq_arr.shape}"
        )
    lim_arr = np.asarray(list(limits), dtype=complex)
    if lim_arr.shape != (space.n_limits,):
        raise StructureError(f"expected {space.n_limits} limit values")
    f = BlockFunction(space, tuple(tables), seq_arr, lim_arr)
    for k, lp in enumerate(space.limit_points):
        if isinstance(lp, IdentifiedLimit):
            glued = eval_function(f, BlockPoint(lp.block_id, lp.coords))
            if abs(glued - lim_arr[k]) > glue_tol:
                raise GlueViolationError(
                    f"limit {k} value {lim_arr[k]} != identified block value {glued}"
                )
    for n in range(max(1, space.sequence_len - space.tail_window + 1), space.sequence_len + 1):
        want = lim_arr[space.seq_class(n)]
        if abs(seq_arr[n - 1] - want) > glue_tol:
            raise GlueViolationError(
                f"sequence tail value at {n} must equal its class limit within {glue_tol}"
            )
    return f


def raw_block_function(space, tables, seq, limits) -> BlockFunction:
    """Internal constructor skipping validation (used by exact operators)."""
    return BlockFunction(
        space,
        tuple(dict(t) for t in tables),
        np.asarray(seq, dtype=complex),
        np.asarray(limits, dtype=complex),
    )


# ---------------------------------------------------------------------------
# Evaluation.

def _factor_basis_value(fac: Factor, comp, coord) -> complex:
    if isinstance(fac, CircleFactor):
        return complex(np.exp(1j * comp * coord))
    if isinstance(fac, CycleFactor):
        return 1.0 if int(coord) == int(comp) else 0.0
    pos, word = comp
    return 1.0 if coord.window(pos, pos + len(word)) == tuple(word) else 0.0


def eval_function(f: BlockFunction, x: PointRef) -> complex:
    """Evaluate the basis expansion at x (exact up to floating round-off)."""
    if isinstance(x, SeqPoint):
        if x.n <= f.space.sequence_len:
            return complex(f.seq_values[x.n - 1])
        return complex(f.limit_values[f.space.seq_class(x.n)])
    if isinstance(x, Limit):
        if not 0 <= x.index < f.space.n_limits:
            raise StructureError(f"no limit point with index {x.index}")
        return complex(f.limit_values[x.index])
    desc = f.space.block(x.block_id)
    _check_coords(desc, x.coords)
    tab = f.table(x.block_id)
    total = 0.0 + 0.0j
    for idx, c in tab.items():
        v = c
        for fac, comp, coord in zip(desc.factors, idx, x.coords):
            b = _factor_basis_value(fac, comp, coord)
            if b == 0.0:
                v = 0.0
                break
            v *= b
        total += v
    return complex(total)


# ---------------------------------------------------------------------------
# Supremum norm.
#
# Cylinder and cycle parts are exact by cell decomposition.  A single
# circle factor is exact: the critical points of |f|^2 (a trigonometric
# polynomial) are located through the companion-matrix roots of its
# derivative.  Blocks with two or more circle factors fall back to grid
# sampling and are flagged as such.

_SPAN_CAP = 1 << 18


def _trig_abs_sup(coeffs: dict[int, complex], resolution: int) -> float:
    if not coeffs:
        return 0.0
    deg = max(abs(k) for k in coeffs)
    c = np.zeros(2 * deg + 1, dtype=complex)
    for k, v in coeffs.items():
        c[k + deg] = v
    grid = np.linspace(0.0, TWO_PI, max(resolution, 8 * deg + 8), endpoint=False)
    ks = np.arange(-deg, deg + 1)
    ev = np.exp(1j * np.outer(grid, ks)) @ c
    best = float(np.max(np.abs(ev)))
    if deg == 0:
        return best
    # |f|^2 has Fourier coefficients b_j = sum_k c_k conj(c_{k-j}); its
    # derivative's roots on the unit circle locate all interior maxima.
    b = np.convolve(c, np.conj(c[::-1]))
    js = np.arange(-2 * deg, 2 * deg + 1)
    h = 1j * js * b
    if np.max(np.abs(h)) > 0:
        roots = np.roots(h[::-1])
        roots = roots[np.abs(np.abs(roots) - 1.0) < 1e-6]
        if roots.size:
            thetas = np.angle(roots)
            ev = np.exp(1j * np.outer(thetas, ks)) @ c
            best = max(best, float(np.max(np.abs(ev))))
    return best


def _block_sup(desc: BlockDescriptor, tab: Mapping[tuple, complex], resolution: int) -> tuple[float, bool]:
    """Sup of |f| over one block.  Returns (value, exact_flag)."""
    if not tab:
        return 0.0, True
    circle_axes = [i for i, fac in enumerate(desc.factors) if isinstance(fac, CircleFactor)]
    cycle_axes = [i for i, fac in enumerate(desc.factors) if isinstance(fac, CycleFactor)]
    symbol_axes = [i for i, fac in enumerate(desc.factors) if isinstance(fac, SymbolFactor)]

    # enumerate discrete assignments: cycle cells x symbol span assignments
    discrete_choices: list[list] = []
    for i in cycle_axes:
        discrete_choices.append([(i, c) for c in range(desc.factors[i].size)])
    exact = True
    for i in symbol_axes:
        fac = desc.factors[i]
        spans = [
            (comp[0], comp[0] + len(comp[1]))
            for idx in tab
            for comp in [idx[i]]
            if len(comp[1]) > 0
        ]
        if not spans:
            discrete_choices.append([(i, None)])
            continue
        lo = min(s for s, _ in spans)
        hi = max(e for _, e in spans)
        count = fac.alphabet ** (hi - lo)
        if count <= _SPAN_CAP:
            discrete_choices.append(
                [(i, (lo, assign)) for assign in itertools.product(range(fac.alphabet), repeat=hi - lo)]
            )
        else:
            # sampled: support windows extended by a deterministic filler scan
            exact = False
            rng = np.random.default_rng(0)
            samples = [tuple(rng.integers(0, fac.alphabet, hi - lo)) for _ in range(4096)]
            samples += [
                tuple(
                    (list(word) + [0] * (hi - lo))[: hi - lo]
                )
                for idx in tab
                for _pos, word in [idx[i]]
            ]
            discrete_choices.append([(i, (lo, a)) for a in set(samples)])

    best = 0.0
    for combo in itertools.product(*discrete_choices) if discrete_choices else [()]:
        assign = dict(combo)

        def symbol_match(i: int, comp) -> float:
            pos, word = comp
            if not word:
                return 1.0
            lo, letters = assign[i]
            seg = letters[pos - lo : pos - lo + len(word)]
            return 1.0 if tuple(seg) == tuple(word) else 0.0

        # collapse discrete axes into a reduced table over circle axes only
        reduced: dict[tuple, complex] = {}
        for idx, c in tab.items():
            w = c
            for i in cycle_axes:
                if int(idx[i]) != assign[i]:
                    w = 0.0
                    break
            if w == 0.0:
                continue
            for i in symbol_axes:
                if assign[i] is None:
                    if len(idx[i][1]) > 0:
                        w = 0.0
                        break
                    continue
                m = symbol_match(i, idx[i])
                if m == 0.0:
                    w = 0.0
                    break
            if w == 0.0:
                continue
            key = tuple(idx[i] for i in circle_axes)
            reduced[key] = reduced.get(key, 0.0) + w
        if not reduced:
            continue
        if len(circle_axes) == 0:
            best = max(best, max(abs(v) for v in reduced.values()))
        elif len(circle_axes) == 1:
            coeffs = {k[0]: v for k, v in reduced.items()}
            best = max(best, _trig_abs_sup(coeffs, resolution))
        else:
            exact = False
            grids = [
                np.linspace(0.0, TWO_PI, max(8, int(round(resolution ** (1 / len(circle_axes))))), endpoint=False)
                for _ in circle_axes
            ]
            mesh = np.meshgrid(*grids, indexing="ij")
            acc = np.zeros(mesh[0].shape, dtype=complex)
            for key, v in reduced.items():
                phase = np.ones(mesh[0].shape, dtype=complex)
                for ax, k in enumerate(key):
                    phase = phase * np.exp(1j * k * mesh[ax])
                acc += v * phase
            best = max(best, float(np.max(np.abs(acc))))
    return best, exact


def sup_norm_report(f: BlockFunction, resolution: int = 1 << 12) -> tuple[float, bool]:
    """Sup norm and a flag telling whether it was computed exactly."""
    if resolution < 2:
        raise StructureError("resolution must be >= 2")
    best = float(np.max(np.abs(f.seq_values))) if f.seq_values.size else 0.0
    if f.limit_values.size:
        best = max(best, float(np.max(np.abs(f.limit_values))))
    exact = True
    for desc in f.space.blocks:
        v, ex = _block_sup(desc, f.table(desc.block_id), resolution)
        best = max(best, v)
        exact = exact and ex
    return best, exact


def sup_norm(f: BlockFunction, resolution: int = 1 << 12) -> float:
    return sup_norm_report(f, resolution)[0]


# ---------------------------------------------------------------------------
# Arithmetic and constructors.

def zero_function(space: BlockSpace) -> BlockFunction:
    return raw_block_function(
        space,
        [{} for _ in space.blocks],
        np.zeros(space.sequence_len),
        np.zeros(space.n_limits),
    )


def add(f: BlockFunction, g: BlockFunction) -> BlockFunction:
    if f.space is not g.space and f.space != g.space:
        raise StructureError("cannot add functions on different spaces")
    tables = []
    for tf, tg in zip(f.tables, g.tables):
        t = dict(tf)
        for k, v in tg.items():
            t[k] = t.get(k, 0.0) + v
        tables.append({k: v for k, v in t.items() if v != 0})
    return raw_block_function(
        f.space, tables, f.seq_values + g.seq_values, f.limit_values + g.limit_values
    )


def scale(alpha: complex, f: BlockFunction) -> BlockFunction:
    return raw_block_function(
        f.space,
        [{k: alpha * v for k, v in t.items()} for t in f.tables],
        alpha * f.seq_values,
        alpha * f.limit_values,
    )


def constant_function(space: BlockSpace, value: complex = 1.0) -> BlockFunction:
    tables = []
    for desc in space.blocks:
        idx = tuple(
            0 if isinstance(fac, (CircleFactor, CycleFactor)) else (0, ())
            for fac in desc.factors
        )
        tables.append({idx: complex(value)})
    lims = np.full(space.n_limits, complex(value))
    seq = np.full(space.sequence_len, complex(value))
    return raw_block_function(space, tables, seq, lims)


def block_indicator(space: BlockSpace, block_id: int) -> BlockFunction:
    """Characteristic function of one block (1 on it, 0 elsewhere).

    Limit points identified with the block pick up the value 1.
    """
    tables = []
    for desc in space.blocks:
        if desc.block_id == block_id:
            idx = tuple(
                0 if isinstance(fac, (CircleFactor, CycleFactor)) else (0, ())
                for fac in desc.factors
            )
            tables.append({idx: 1.0 + 0.0j})
        else:
            tables.append({})
    lims = np.array(
        [
            1.0 if isinstance(lp, IdentifiedLimit) and lp.block_id == block_id else 0.0
            for lp in space.limit_points
        ],
        dtype=complex,
    )
    return raw_block_function(space, tables, np.zeros(space.sequence_len), lims)


def seq_indicator(space: BlockSpace, n: int) -> BlockFunction:
    """Indicator of the n-th sequence point (n within the explicit range)."""
    if not 1 <= n <= space.sequence_len - space.tail_window:
        raise StructureError("indicator index must stay clear of the tail window")
    seq = np.zeros(space.sequence_len, dtype=complex)
    seq[n - 1] = 1.0
    return raw_block_function(space, [{} for _ in space.blocks], seq, np.zeros(space.n_limits))


def random_function(
    space: BlockSpace,
    rng: np.random.Generator,
    tail_margin: int = 0,
) -> BlockFunction:
    """A random function compatible with the space invariants.

    Coefficients are standard complex Gaussians (symmetrized for REAL
    spaces); sequence tails obey the class-limit convention with
    `tail_window + tail_margin` glued entries so that inverse iterates up
    to `tail_margin` steps stay exact.
    """
    real = space.field is ScalarField.REAL

    def rand_scalar():
        if real:
            return complex(rng.standard_normal())
        return complex(rng.standard_normal() + 1j * rng.standard_normal())

    tables: list[dict] = []
    for desc in space.blocks:
        axes = []
        for fac in desc.factors:
            if isinstance(fac, CircleFactor):
                axes.append(list(range(-fac.degree, fac.degree + 1)))
            elif isinstance(fac, CycleFactor):
                axes.append(list(range(fac.size)))
            else:
                axes.append([(0, w) for w in itertools.product(range(fac.alphabet), repeat=fac.depth)])
        tab: dict[tuple, complex] = {}
        for idx in itertools.product(*axes):
            tab[idx] = complex(rng.standard_normal() + 1j * rng.standard_normal())
        if real:
            sym: dict[tuple, complex] = {}
            for idx, v in tab.items():
                cj = _conj_index(desc, idx)
                if cj in sym:
                    continue
                if cj == idx:
                    sym[idx] = complex(v.real)
                else:
                    sym[idx] = v
                    sym[cj] = np.conj(v)
            tab = sym
        tables.append(tab)
    lims = np.array([rand_scalar() for _ in space.limit_points], dtype=complex)
    f0 = raw_block_function(space, tables, np.zeros(space.sequence_len), lims)
    for k, lp in enumerate(space.limit_points):
        if isinstance(lp, IdentifiedLimit):
            lims[k] = eval_function(f0, BlockPoint(lp.block_id, lp.coords))
    seq = np.array([rand_scalar() for _ in range(space.sequence_len)], dtype=complex)
    glued = min(space.sequence_len, space.tail_window + tail_margin)
    for n in range(space.sequence_len - glued + 1, space.sequence_len + 1):
        seq[n - 1] = lims[space.seq_class(n)]
    return raw_block_function(space, tables, seq, lims)
