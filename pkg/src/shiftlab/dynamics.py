"""Homeomorphisms and finite-budget transitivity certification.

Flows act on exactly-represented points: angle tuples for rotations,
lazily evaluated symbol sequences for shifts, p-adic digit streams for
the translated/conjugated Cantor flows.  Every flow exposes `forward`,
`backward` and an O(1)-per-call `iterate`, so orbit scans cost O(budget)
regardless of the power being certified.

Certification is one-sided: success proves density at the truncation
scale, failure is evidence only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .sequences import (
    BilateralWord,
    ConstantWord,
    InterleavedPadic,
    PadicStream,
    RationalPadic,
    ReindexedPadic,
    ScheduledWord,
    SymbolPoint,
    TranslatedPadic,
    digits_to_int,
)

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """A point is outside the domain of a flow."""


class CapacityError(RuntimeError):
    """The schedule budget cannot accommodate the requested depth."""

    def __init__(self, message: str, achieved_depth: int):
        super().__init__(message)
        self.achieved_depth = achieved_depth


# ---------------------------------------------------------------------------
# Flows.

class Flow:
    kind = "flow"

    def forward(self, x):
        raise NotImplementedError

    def backward(self, x):
        raise NotImplementedError

    def iterate(self, x, n: int):
        for _ in range(abs(n)):
            x = self.forward(x) if n > 0 else self.backward(x)
        return x


class IdentityFlow(Flow):
    kind = "identity"

    def forward(self, x):
        return x

    backward = forward

    def iterate(self, x, n: int):
        return x


class AngleRotation(Flow):
    """Rotation of a single circle coordinate by the fraction `rho` of a turn."""

    kind = "angle_rotation"

    def __init__(self, rho: float):
        self.rho = float(rho)

    def forward(self, theta):
        return (theta + TWO_PI * self.rho) % TWO_PI

    def backward(self, theta):
        return (theta - TWO_PI * self.rho) % TWO_PI

    def iterate(self, theta, n: int):
        return (theta + n * TWO_PI * self.rho) % TWO_PI


class CycleStep(Flow):
    """The +1 step on a finite cyclic set of cells."""

    kind = "cycle_step"

    def __init__(self, size: int):
        if size < 1:
            raise ValueError("cycle size must be positive")
        self.size = int(size)

    def forward(self, c):
        return (int(c) + 1) % self.size

    def backward(self, c):
        return (int(c) - 1) % self.size

    def iterate(self, c, n: int):
        return (int(c) + n) % self.size


class SymbolShift(Flow):
    """The bilateral shift: coordinate m of the image is coordinate m+1."""

    kind = "symbol_shift"

    def __init__(self, step: int = 1):
        self.step = int(step)

    def forward(self, x: SymbolPoint) -> SymbolPoint:
        return x.shifted(self.step)

    def backward(self, x: SymbolPoint) -> SymbolPoint:
        return x.shifted(-self.step)

    def iterate(self, x: SymbolPoint, n: int) -> SymbolPoint:
        return x.shifted(n * self.step)


class PadicTranslation(Flow):
    """t -> t + delta on p-adic digit streams."""

    kind = "padic_translation"

    def __init__(self, p: int, delta: int):
        self.p = int(p)
        self.delta = int(delta)

    def _shift(self, x: PadicStream, d: int) -> PadicStream:
        if d == 0:
            return x
        if isinstance(x, RationalPadic):
            return RationalPadic(self.p, x.value + d)
        if isinstance(x, TranslatedPadic):
            return TranslatedPadic(x.base, x.delta + d)
        return TranslatedPadic(x, d)

    def forward(self, x: PadicStream) -> PadicStream:
        return self._shift(x, self.delta)

    def backward(self, x: PadicStream) -> PadicStream:
        return self._shift(x, -self.delta)

    def iterate(self, x: PadicStream, n: int) -> PadicStream:
        return self._shift(x, n * self.delta)


class InterleaveShift(Flow):
    """The bilateral shift transported to digit streams by interleaving.

    Totally transitive on the digit space, with the all-zero stream as a
    fixed point; used as the canonical transitive Cantor homeomorphism.
    """

    kind = "interleave_shift"

    def __init__(self, p: int):
        self.p = int(p)

    def forward(self, x: PadicStream) -> PadicStream:
        return ReindexedPadic(x, 1)

    def backward(self, x: PadicStream) -> PadicStream:
        return ReindexedPadic(x, -1)

    def iterate(self, x: PadicStream, n: int) -> PadicStream:
        return ReindexedPadic(x, n)


class ProductFlow(Flow):
    """Coordinatewise product of flows, acting on tuples."""

    kind = "product"

    def __init__(self, parts: Sequence[Flow]):
        self.parts = tuple(parts)

    def forward(self, x):
        self._check(x)
        return tuple(p.forward(c) for p, c in zip(self.parts, x))

    def backward(self, x):
        self._check(x)
        return tuple(p.backward(c) for p, c in zip(self.parts, x))

    def iterate(self, x, n: int):
        self._check(x)
        return tuple(p.iterate(c, n) for p, c in zip(self.parts, x))

    def _check(self, x):
        if len(x) != len(self.parts):
            raise DomainError(f"expected {len(self.parts)} coordinates, got {len(x)}")

    @property
    def phases(self) -> tuple[float, ...]:
        return tuple(p.rho for p in self.parts if isinstance(p, AngleRotation))


class ConjugatedFlow(Flow):
    """psi^-1 . phi . psi, with iterates taken on the inner flow."""

    kind = "conjugated"

    def __init__(self, psi: Flow, phi: Flow):
        self.psi = psi
        self.phi = phi

    def forward(self, x):
        return self.psi.backward(self.phi.forward(self.psi.forward(x)))

    def backward(self, x):
        return self.psi.backward(self.phi.backward(self.psi.forward(x)))

    def iterate(self, x, n: int):
        return self.psi.backward(self.phi.iterate(self.psi.forward(x), n))


class CyclicBlockFlow(Flow):
    """One block family: a cycle on the block ids, the fiber moved backwards.

    Acts on pairs (block_id, fiber_coords); the forward map sends
    (a_j, z) to (s(a_j), h^-1(z)) where s is the predecessor cycle.
    """

    kind = "cyclic_block"

    def __init__(self, block_ids: Sequence[int], fiber: Flow):
        self.block_ids = tuple(block_ids)
        self.fiber = fiber
        self._pos = {m: i for i, m in enumerate(self.block_ids)}

    def _step_id(self, m: int, n: int) -> int:
        # s maps position j to j-1 cyclically (predecessor map)
        p = len(self.block_ids)
        return self.block_ids[(self._pos[m] - n) % p]

    def forward(self, x):
        m, z = x
        if m not in self._pos:
            raise DomainError(f"block {m} not in this family")
        return (self._step_id(m, 1), self.fiber.backward(z))

    def backward(self, x):
        m, z = x
        if m not in self._pos:
            raise DomainError(f"block {m} not in this family")
        return (self._step_id(m, -1), self.fiber.forward(z))

    def iterate(self, x, n: int):
        m, z = x
        if m not in self._pos:
            raise DomainError(f"block {m} not in this family")
        return (self._step_id(m, n), self.fiber.iterate(z, -n))


class AssembledFlow(Flow):
    """A whole-space homeomorphism acting on PointRefs.

    Blocks are mapped through (target, fiber flow) pairs, the sequence
    point n+1 goes to n (the distinguished first point has no forward
    image), and limit points are permuted.
    """

    kind = "assembled"

    def __init__(self, block_targets: dict[int, int], fiber_flows: dict[int, Flow],
                 n_limits: int, limit_map: Sequence[int]):
        from .funcspace import BlockPoint, Limit, SeqPoint  # local to avoid cycle

        self._BlockPoint, self._SeqPoint, self._Limit = BlockPoint, SeqPoint, Limit
        self.block_targets = dict(block_targets)
        self.fiber_flows = dict(fiber_flows)
        self.block_sources = {v: k for k, v in block_targets.items()}
        if len(self.block_sources) != len(self.block_targets):
            raise DomainError("block map must be a permutation")
        self.n_limits = n_limits
        self.limit_map = tuple(limit_map)
        self._limit_inv = tuple(
            self.limit_map.index(k) for k in range(len(self.limit_map))
        )

    def forward(self, x):
        if isinstance(x, self._SeqPoint):
            if x.n == 1:
                raise DomainError("the distinguished point has no forward image")
            return self._SeqPoint(x.n - 1)
        if isinstance(x, self._Limit):
            return self._Limit(self.limit_map[x.index])
        m = x.block_id
        if m not in self.block_targets:
            raise DomainError(f"unknown block {m}")
        return self._BlockPoint(self.block_targets[m], self.fiber_flows[m].forward(x.coords))

    def backward(self, x):
        if isinstance(x, self._SeqPoint):
            return self._SeqPoint(x.n + 1)
        if isinstance(x, self._Limit):
            return self._Limit(self._limit_inv[x.index])
        m2 = x.block_id
        if m2 not in self.block_sources:
            raise DomainError(f"unknown block {m2}")
        m = self.block_sources[m2]
        return self._BlockPoint(m, self.fiber_flows[m].backward(x.coords))


def conjugate_flow(psi: Flow, phi: Flow) -> ConjugatedFlow:
    """The flow psi^-1 . phi . psi (transitivity transports along psi^-1)."""
    return ConjugatedFlow(psi, phi)


# ---------------------------------------------------------------------------
# Transitive seeds and reports.

@dataclass
class TransitiveSeed:
    flow: Flow
    point: object
    eps: float
    budget: int
    meta: dict = field(default_factory=dict)


@dataclass
class OrbitReport:
    eps: float
    power: int
    iterations: int
    n_probes: int
    coverage: float
    certified: bool
    first_hits: np.ndarray
    note: str = ""


@dataclass
class LTransitivityReport:
    eps: float
    budget: int
    horizon: int
    entries: dict[tuple[int, int], tuple[bool, int]]

    @property
    def all_ok(self) -> bool:
        return all(ok for ok, _ in self.entries.values())


# ---------------------------------------------------------------------------
# Distances.

def point_distance(x, y) -> float:
    """Sup-metric distance between two points of the same shape."""
    if isinstance(x, (float, np.floating)) and isinstance(y, (float, np.floating)):
        d = abs(float(x) - float(y)) % TWO_PI
        return min(d, TWO_PI - d)
    if isinstance(x, (int, np.integer)) and isinstance(y, (int, np.integer)):
        return 0.0 if int(x) == int(y) else 1.0
    if isinstance(x, SymbolPoint) and isinstance(y, SymbolPoint):
        for r in range(0, 61):
            if x.window(-r, r + 1) != y.window(-r, r + 1):
                return 2.0 ** (-r)
        return 0.0
    if isinstance(x, PadicStream) and isinstance(y, PadicStream):
        for i in range(0, 64):
            if x.digit(i) != y.digit(i):
                return float(x.p) ** (-i)
        return 0.0
    if isinstance(x, tuple) and isinstance(y, tuple) and len(x) == len(y):
        return max((point_distance(a, b) for a, b in zip(x, y)), default=0.0)
    raise DomainError(f"cannot compare points {x!r} and {y!r}")


# ---------------------------------------------------------------------------
# Rotation flows.

def make_rotation_flow(phases: Sequence[float]) -> ProductFlow:
    """Product of circle rotations; forward adds 2*pi*rho per factor."""
    if not len(phases):
        raise ValueError("phase list must be nonempty")
    return ProductFlow(tuple(AngleRotation(r) for r in phases))


_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43)


def default_phase(index: int) -> float:
    """Fractional parts of square roots of primes.

    Rational independence over the integers is assumed, not certified;
    runs record this assumption.
    """
    return math.sqrt(_PRIMES[index % len(_PRIMES)]) % 1.0


# ---------------------------------------------------------------------------
# Bilateral shift with an explicitly scheduled transitive point.

def _zsize(z: int) -> int:
    return 2 * z - 1 if z > 0 else -2 * z


def _iter_schedule_entries(q: int, max_shell: int):
    """Deterministic enumeration of (z, m, i, j) covering Z x N x {(i,j)}.

    Entries are produced in shells by max(size(z), m, j); every tuple
    index i for the word length j appears in each shell that includes j.
    """
    for shell in range(1, max_shell + 1):
        for j in range(1, shell + 1):
            n_letters = min(j, q)
            count = n_letters ** j
            for m in range(1, shell + 1):
                for zs in range(0, shell + 1):
                    z = (zs + 1) // 2 if zs % 2 == 1 else -(zs // 2)
                    if max(_zsize(z), m, j) != shell:
                        continue
                    for i in range(1, count + 1):
                        yield (z, m, i, j)


def _tuple_word(alphabet: Sequence[int], i: int, j: int) -> tuple[int, ...]:
    """The i-th (1-based) j-tuple over the first min(j, q) letters."""
    n_letters = min(j, len(alphabet))
    out = []
    v = i - 1
    for _ in range(j):
        out.append(alphabet[v % n_letters])
        v //= n_letters
    return tuple(reversed(out))


def make_bilateral_shift(
    seed_alphabet: Sequence[int],
    schedule_budget: int = 1_000_000,
    depth: int | None = None,
) -> tuple[SymbolShift, TransitiveSeed]:
    """The bilateral shift plus a scheduled transitive point.

    Every tuple over the first n letters is written at a position
    congruent to z mod m for every (z, m), following a fixed diagonal
    enumeration; unscheduled coordinates carry the first letter.  The
    schedule stops at `schedule_budget` positions; if `depth` is given
    and some tuple of that length was not scheduled, a CapacityError
    reports the depth actually achieved.
    """
    alphabet = [int(a) for a in seed_alphabet]
    if not alphabet:
        raise ValueError("alphabet must be nonempty")
    q = len(alphabet)
    segments: list[tuple[int, tuple[int, ...]]] = []
    seen: dict[int, set[int]] = {}
    prev_end = 0
    max_shell = 64
    for (z, m, i, j) in _iter_schedule_entries(q, max_shell):
        l = max(1, -(-(prev_end - z) // m))  # minimal l >= 1 with z + l*m >= prev_end
        n = z + l * m
        if n + j > schedule_budget:
            break
        segments.append((n + 1, _tuple_word(alphabet, i, j)))
        seen.setdefault(j, set()).add(i)
        prev_end = n + j + 1
    achieved = 0
    j = 1
    while j in seen and len(seen[j]) == min(j, q) ** j:
        achieved = j
        j += 1
    if depth is not None and achieved < depth:
        raise CapacityError(
            f"schedule budget {schedule_budget} reaches depth {achieved} < {depth}",
            achieved_depth=achieved,
        )
    word = ScheduledWord(segments, filler=alphabet[0])
    flow = SymbolShift()
    seed = TransitiveSeed(
        flow,
        SymbolPoint(word, 0),
        eps=2.0 ** (-achieved) if achieved else 1.0,
        budget=schedule_budget,
        meta={"achieved_depth": achieved, "n_segments": len(segments),
              "alphabet": tuple(alphabet)},
    )
    return flow, seed


# ---------------------------------------------------------------------------
# Cantor flows by p-adic conjugation.

def padic_translate(t: int, l0: int, m0: int, p: int, depth: int) -> int:
    """t - l0 + m0 at truncation depth (plain modular arithmetic)."""
    return (t - l0 + m0) % (p ** depth)


def make_cantor_flow(
    p: int,
    depth: int,
    l0_digits: Sequence[int],
    m0_digits: Sequence[int],
    schedule_budget: int = 200_000,
) -> ConjugatedFlow:
    """A totally transitive Cantor flow fixing the point with digits l0.

    The canonical transitive digit-space flow (the bilateral shift pulled
    through the interleaving) is conjugated so its fixed point sits at
    m0, then conjugated again by the translation t -> t - l0 + m0.  The
    result fixes l0 and carries a transported transitive seed.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    for d in list(l0_digits) + list(m0_digits):
        if not 0 <= int(d) < p:
            raise ValueError(f"digit {d} invalid for base {p}")
    l0 = digits_to_int(l0_digits, p)
    m0 = digits_to_int(m0_digits, p)
    base = InterleaveShift(p)
    _, shift_seed = make_bilateral_shift(list(range(p)), schedule_budget)
    pulled = InterleavedPadic(p, shift_seed.point)

    recenter = PadicTranslation(p, -m0)
    fixed_at_m0 = conjugate_flow(recenter, base)
    translation = PadicTranslation(p, m0 - l0)
    flow = conjugate_flow(translation, fixed_at_m0)

    seed_point = translation.backward(recenter.backward(pulled))
    flow.seed = TransitiveSeed(
        flow, seed_point,
        eps=shift_seed.eps, budget=shift_seed.budget,
        meta=dict(shift_seed.meta, p=p, depth=depth),
    )
    flow.fixed_point = RationalPadic(p, l0)
    flow.p = p
    flow.depth = depth
    flow.translation = translation
    flow.word_seed = shift_seed
    return flow


# ---------------------------------------------------------------------------
# Orbit density certification.

def _circle_probe_count(eps: float) -> int:
    return int(math.ceil(TWO_PI / (eps / 2.0)))


def _rotation_orbit_angles(start: Sequence[float], phases: Sequence[float],
                           power: int, budget: int) -> np.ndarray:
    t = np.arange(1, budget + 1, dtype=float)
    cols = [
        (s + t * power * TWO_PI * rho) % TWO_PI
        for s, rho in zip(start, phases)
    ]
    return np.stack(cols, axis=1)


def _certify_circle_orbit(angles: np.ndarray, eps: float) -> tuple[np.ndarray, int]:
    """First-hit table over a uniform product grid with spacing <= eps/2."""
    budget, dims = angles.shape
    n_cells = _circle_probe_count(eps)
    h = TWO_PI / n_cells
    r = int(math.floor(eps / h)) + 1
    sentinel = np.iinfo(np.int64).max
    first = np.full(n_cells ** dims, sentinel, dtype=np.int64)
    t_idx = np.arange(1, budget + 1, dtype=np.int64)
    base = np.floor(angles / h).astype(np.int64)
    for offsets in itertools.product(range(-r, r + 1), repeat=dims):
        cells = (base + np.asarray(offsets)) % n_cells
        probe_angle = cells * h
        d = np.abs(angles - probe_angle)
        d = np.minimum(d, TWO_PI - d)
        ok = np.all(d <= eps, axis=1)
        if not np.any(ok):
            continue
        flat = np.zeros(ok.sum(), dtype=np.int64)
        sel = cells[ok]
        for k in range(dims):
            flat = flat * n_cells + sel[:, k]
        np.minimum.at(first, flat, t_idx[ok])
    first[first == sentinel] = -1
    return first, n_cells ** dims


def orbit_density(
    flow: Flow,
    start,
    eps: float,
    budget: int,
    power: int = 1,
    alphabet: int | None = None,
) -> OrbitReport:
    """Scan the forward orbit of flow^power and report probe coverage.

    Probe grids are uniform with density at least eps/2 and a fixed
    enumeration order, so reports are reproducible.  Certification
    requires every probe to be eps-approached.
    """
    if eps <= 0 or budget < 1 or power < 1:
        raise ValueError("eps > 0, budget >= 1 and power >= 1 required")

    if isinstance(start, tuple) and all(isinstance(c, (float, np.floating)) for c in start):
        phases = getattr(flow, "phases", None)
        if phases is not None and len(phases) == len(start):
            angles = _rotation_orbit_angles(start, phases, power, budget)
        else:
            angles = np.empty((budget, len(start)))
            x = start
            for t in range(budget):
                x = flow.iterate(start, power * (t + 1))
                angles[t] = x
        first, n_probes = _certify_circle_orbit(angles, eps)
        cov = float(np.mean(first >= 0))
        return OrbitReport(eps, power, budget, n_probes, cov, bool(np.all(first >= 0)), first)

    if isinstance(start, SymbolPoint):
        q = alphabet if alphabet is not None else 2
        d = max(1, int(math.ceil(-math.log(eps, 2))))
        probes = {w: i for i, w in enumerate(itertools.product(range(q), repeat=d))}
        first = np.full(len(probes), -1, dtype=np.int64)
        for t in range(1, budget + 1):
            w = start.window(power * t, power * t + d)
            i = probes.get(w)
            if i is not None and first[i] < 0:
                first[i] = t
                if np.all(first >= 0):
                    break
        cov = float(np.mean(first >= 0))
        return OrbitReport(eps, power, budget, len(probes), cov, bool(np.all(first >= 0)), first)

    if isinstance(start, PadicStream):
        p = start.p
        d = max(1, int(math.ceil(-math.log(eps, p))))
        first = np.full(p ** d, -1, dtype=np.int64)
        for t in range(1, budget + 1):
            x = flow.iterate(start, power * t)
            i = x.prefix_int(d)
            if first[i] < 0:
                first[i] = t
                if np.all(first >= 0):
                    break
        cov = float(np.mean(first >= 0))
        return OrbitReport(eps, power, budget, p ** d, cov, bool(np.all(first >= 0)), first)

    raise DomainError(f"no probe scheme for start point {start!r}")


# ---------------------------------------------------------------------------
# L-transitivity of families.

def _closed_form_coords(flow: Flow, point, power: int, budget: int):
    """Per-coordinate orbit arrays for flows with closed-form iterates."""
    if isinstance(flow, AngleRotation):
        t = np.arange(1, budget + 1, dtype=float)
        return [("angle", (point + t * power * TWO_PI * flow.rho) % TWO_PI)]
    if isinstance(flow, CycleStep):
        t = np.arange(1, budget + 1, dtype=np.int64)
        return [("cell", (point + t * power) % flow.size)]
    if isinstance(flow, ProductFlow):
        out = []
        for part, c in zip(flow.parts, point):
            sub = _closed_form_coords(part, c, power, budget)
            if sub is None:
                return None
            out.extend(sub)
        return out
    return None


def _flatten_target(flow: Flow, point):
    if isinstance(flow, AngleRotation):
        return [("angle", point)]
    if isinstance(flow, CycleStep):
        return [("cell", point)]
    if isinstance(flow, ProductFlow):
        out = []
        for part, c in zip(flow.parts, point):
            out.extend(_flatten_target(part, c))
        return out
    return None


def certify_L_transitivity(
    family: Sequence[TransitiveSeed],
    L: Sequence[int],
    eps: float,
    budget: int,
    horizon: int = 4,
) -> LTransitivityReport:
    """Joint-orbit search for the shifted base points under each power.

    For every k in L and i = 0..horizon the joint orbit of the base
    points under the k-th powers is scanned for an eps-approach to the
    jointly i-shifted base point; per-(k, i) success and first-hit index
    are reported.  Failure is a report, not an error.
    """
    if not family or not len(L):
        raise ValueError("family and L must be nonempty")
    report: dict[tuple[int, int], tuple[bool, int]] = {}
    for k in L:
        coords = [_closed_form_coords(s.flow, s.point, k, budget) for s in family]
        closed = all(c is not None for c in coords)
        for i in range(0, horizon + 1):
            targets = [s.flow.iterate(s.point, i) for s in family]
            if closed:
                worst = np.zeros(budget)
                for seed, cols, tgt in zip(family, coords, targets):
                    flat_t = _flatten_target(seed.flow, tgt)
                    for (kindc, arr), (_, tval) in zip(cols, flat_t):
                        if kindc == "angle":
                            d = np.abs(arr - tval)
                            d = np.minimum(d, TWO_PI - d)
                        else:
                            d = (arr != tval).astype(float)
                        worst = np.maximum(worst, d)
                hits = np.nonzero(worst <= eps)[0]
                if hits.size:
                    report[(k, i)] = (True, int(hits[0] + 1))
                else:
                    report[(k, i)] = (False, -1)
            else:
                found = -1
                for t in range(1, budget + 1):
                    dmax = 0.0
                    for seed, tgt in zip(family, targets):
                        x = seed.flow.iterate(seed.point, k * t)
                        dmax = max(dmax, point_distance(x, tgt))
                        if dmax > eps:
                            break
                    if dmax <= eps:
                        found = t
                        break
                report[(k, i)] = (found > 0, found)
    return LTransitivityReport(eps, budget, horizon, report)
