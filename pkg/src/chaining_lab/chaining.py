"""Admissible partition sequences and the gamma_alpha chaining functional.

Sequences are finite chains ``P_0, ..., P_L`` ending in singletons; all levels
past ``L`` implicitly contribute zero. Level ``s`` may hold at most
``2 ** (2 ** s)`` blocks (``P_0`` exactly one).
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import (
    AlphaMismatch,
    ConstructionBoundViolated,
    EmptySubset,
    GroundMismatch,
    NotAdmissible,
    PointNotInGround,
    TooLarge,
)
from .metric import FiniteMetricSpace, PointSubset, as_subset, diameter

EXACT_CAP = 12
# the depth-two closed form used by gamma_exact is optimal while 2**(2**2) >= |T|
EXACT_HARD_CAP = 16
MAX_LEVEL_BLOCKS = 4  # budget at level 1


def level_budget(s: int) -> int:
    """Maximum number of blocks allowed at level ``s``."""
    if s < 0:
        raise ValueError("levels start at 0")
    return 1 if s == 0 else 2 ** (2 ** s)


def _canonical_blocks(blocks) -> tuple:
    out = [tuple(sorted(int(i) for i in b)) for b in blocks]
    out = [b for b in out if b]
    out.sort()
    return tuple(out)


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks whose union is exactly ``ground``.

    Empty blocks passed in are dropped.
    """

    ground: PointSubset
    blocks: tuple

    def __post_init__(self):
        ground = tuple(sorted(int(i) for i in self.ground))
        blocks = _canonical_blocks(self.blocks)
        object.__setattr__(self, "ground", ground)
        object.__setattr__(self, "blocks", blocks)
        covered = [i for b in blocks for i in b]
        if len(covered) != len(set(covered)):
            raise ValueError("partition blocks overlap")
        if sorted(covered) != list(ground):
            raise ValueError("partition blocks do not cover the ground set exactly")

    def __len__(self):
        return len(self.blocks)

    @classmethod
    def single(cls, ground: Iterable[int]) -> "Partition":
        ground = tuple(ground)
        return cls(ground, (ground,))

    @classmethod
    def singletons(cls, ground: Iterable[int]) -> "Partition":
        ground = tuple(ground)
        return cls(ground, tuple((i,) for i in ground))

    @classmethod
    def from_labels(cls, ground: Sequence[int], labels: Sequence[int]) -> "Partition":
        groups = {}
        for point, lab in zip(ground, labels):
            groups.setdefault(int(lab), []).append(int(point))
        return cls(tuple(ground), tuple(groups.values()))

    @cached_property
    def _lookup(self) -> dict:
        return {i: b for b in self.blocks for i in b}

    @property
    def is_singletons(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def refines(self, other: "Partition") -> bool:
        """True when every block of ``self`` lies inside a block of ``other``."""
        if self.ground != other.ground:
            return False
        parent = other._lookup
        return all(all(parent[i] is parent[b[0]] for i in b) for b in self.blocks)

    def labels(self) -> np.ndarray:
        """Block number of each ground point, aligned with ``ground``."""
        lookup = {i: n for n, b in enumerate(self.blocks) for i in b}
        return np.fromiter((lookup[i] for i in self.ground), dtype=np.int64, count=len(self.ground))


def block_of(partition: Partition, t: int) -> PointSubset:
    """The unique block of ``partition`` containing ``t``."""
    try:
        return partition._lookup[int(t)]
    except KeyError:
        raise PointNotInGround(f"point {t} is not in the partition's ground set") from None


@dataclass(frozen=True)
class AdmissibleSequence:
    ground: PointSubset
    levels: tuple
    alpha: float = 2.0

    def __post_init__(self):
        ground = tuple(sorted(int(i) for i in self.ground))
        object.__setattr__(self, "ground", ground)
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not self.levels:
            raise ValueError("a sequence needs at least one level")
        for s, part in enumerate(self.levels):
            if part.ground != ground:
                raise GroundMismatch(f"level {s} partitions a different ground set")

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def level(self, s: int) -> Partition:
        """Partition at level ``s``; levels past the end repeat the terminal one."""
        return self.levels[min(s, self.depth)]

    def to_dict(self) -> dict:
        return {
            "ground": list(self.ground),
            "alpha": self.alpha,
            "levels": [[list(b) for b in p.blocks] for p in self.levels],
        }


@dataclass
class AdmissibilityReport:
    root_ok: bool
    budgets_ok: bool
    refinement_ok: bool
    terminal_ok: bool
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.root_ok and self.budgets_ok and self.refinement_ok and self.terminal_ok

    def __bool__(self):
        return self.ok


def check_admissible(seq: AdmissibleSequence) -> AdmissibilityReport:
    """Report each admissibility invariant separately; never raises."""
    failures = []
    root_ok = len(seq.levels[0]) == 1
    if not root_ok:
        failures.append(f"level 0 has {len(seq.levels[0])} blocks, expected 1")
    budgets_ok = True
    for s, part in enumerate(seq.levels[1:], start=1):
        # budgets past level 6 exceed 2**64 points; no finite space can break them
        if s < 7 and len(part) > level_budget(s):
            budgets_ok = False
            failures.append(f"level {s} has {len(part)} blocks, budget {level_budget(s)}")
    refinement_ok = True
    for s in range(1, len(seq.levels)):
        if not seq.levels[s].refines(seq.levels[s - 1]):
            refinement_ok = False
            failures.append(f"level {s} does not refine level {s - 1}")
    terminal_ok = seq.levels[-1].is_singletons
    if not terminal_ok:
        failures.append(f"terminal level {seq.depth} is not the singleton partition")
    return AdmissibilityReport(root_ok, budgets_ok, refinement_ok, terminal_ok, failures)


def _pointwise_sums(space: FiniteMetricSpace, seq: AdmissibleSequence) -> np.ndarray:
    idx = np.asarray(seq.ground, dtype=np.int64)
    sub = space.dist[np.ix_(idx, idx)]
    totals = np.zeros(idx.size)
    for s, part in enumerate(seq.levels):
        labels = part.labels()
        same = labels[:, None] == labels[None, :]
        eccentricity = np.where(same, sub, 0.0).max(axis=1)
        block_diam = np.zeros(len(part))
        np.maximum.at(block_diam, labels, eccentricity)
        totals += 2.0 ** (s / seq.alpha) * block_diam[labels]
    return totals


def chaining_value(space: FiniteMetricSpace, seq: AdmissibleSequence) -> tuple:
    """``sup_t sum_s 2**(s/alpha) * diam(P_s(t))`` and the lowest-index maximiser."""
    report = check_admissible(seq)
    if not report.ok:
        raise NotAdmissible("; ".join(report.failures))
    if seq.ground and seq.ground[-1] >= space.size:
        raise PointNotInGround("sequence ground exceeds the metric space")
    totals = _pointwise_sums(space, seq)
    w = int(np.argmax(totals))
    return float(totals[w]), seq.ground[w]


@dataclass(frozen=True)
class GammaResult:
    value: float
    sequence: AdmissibleSequence
    method: str
    witness_point: int

    def to_dict(self) -> dict:
        return {
            "gamma": self.value,
            "method": self.method,
            "alpha": self.sequence.alpha,
            "witness": self.witness_point,
            "subset": list(self.sequence.ground),
            "sequence": self.sequence.to_dict()["levels"],
        }


def _result(space, seq, method) -> GammaResult:
    value, witness = chaining_value(space, seq)
    return GammaResult(value, seq, method, witness)


def gamma_exact(space: FiniteMetricSpace, subset: Iterable[int] | None = None, alpha: float = 2.0,
                max_size: int = EXACT_CAP) -> GammaResult:
    """Exact gamma_alpha on a small subset.

    An optimal sequence always has depth at most two here: ``{T}``, a partition
    into at most four blocks, then singletons. Only the middle level needs a
    search, which minimises the largest block diameter.
    """
    members = as_subset(space, space.all_points() if subset is None else subset)
    if not members:
        raise EmptySubset("gamma of an empty set is undefined")
    cap = min(max_size, EXACT_HARD_CAP)
    if len(members) > cap:
        raise TooLarge(f"exact search capped at {cap} points, got {len(members)}")
    if len(members) == 1:
        seq = AdmissibleSequence(members, (Partition.single(members),), alpha)
    elif len(members) <= MAX_LEVEL_BLOCKS:
        seq = AdmissibleSequence(members, (Partition.single(members), Partition.singletons(members)), alpha)
    else:
        idx = np.asarray(members, dtype=np.int64)
        _, labels = kernels.minmax_partition(space.dist[np.ix_(idx, idx)], MAX_LEVEL_BLOCKS)
        middle = Partition.from_labels(members, labels)
        seq = AdmissibleSequence(
            members, (Partition.single(members), middle, Partition.singletons(members)), alpha
        )
    return _result(space, seq, "exact")


def _farthest_point_split(sub: np.ndarray, pieces: int) -> np.ndarray:
    """Gonzalez traversal from the first point; returns a center label per point."""
    centers = [0]
    nearest = sub[0].copy()
    while len(centers) < pieces:
        nxt = int(np.argmax(nearest))
        if nearest[nxt] <= 0.0:
            break
        centers.append(nxt)
        np.minimum(nearest, sub[nxt], out=nearest)
    return np.argmin(sub[:, centers], axis=1)


def _allocate_pieces(sizes, diams, budget):
    pieces = [min(sz, budget // len(sizes)) for sz in sizes]
    spare = budget - sum(pieces)
    order = sorted(range(len(sizes)), key=lambda b: (-diams[b], b))
    while spare > 0:
        grew = False
        for b in order:
            if spare == 0:
                break
            if pieces[b] < sizes[b]:
                pieces[b] += 1
                spare -= 1
                grew = True
        if not grew:
            break
    return pieces


def greedy_sequence(space: FiniteMetricSpace, subset: Iterable[int] | None = None,
                    alpha: float = 2.0) -> AdmissibleSequence:
    """Divisive farthest-point sequence respecting the level budgets."""
    members = as_subset(space, space.all_points() if subset is None else subset)
    if not members:
        raise EmptySubset("cannot build a sequence over an empty set")
    levels = [Partition.single(members)]
    s = 0
    while not levels[-1].is_singletons:
        s += 1
        current = levels[-1]
        budget = level_budget(s) if s < 7 else len(members)
        sizes = [len(b) for b in current.blocks]
        diams = [diameter(space, b) for b in current.blocks]
        pieces = _allocate_pieces(sizes, diams, budget)
        new_blocks = []
        for block, k in zip(current.blocks, pieces):
            if k <= 1 or len(block) == 1:
                new_blocks.append(block)
                continue
            idx = np.asarray(block, dtype=np.int64)
            if k >= len(block):
                new_blocks.extend((i,) for i in block)
                continue
            assign = _farthest_point_split(space.dist[np.ix_(idx, idx)], k)
            for c in np.unique(assign):
                new_blocks.append(tuple(idx[assign == c]))
        nxt = Partition(members, tuple(new_blocks))
        if nxt.blocks == current.blocks and len(members) <= budget:
            # only zero-diameter blocks remain; finish once the budget allows it
            nxt = Partition.singletons(members)
        levels.append(nxt)
    return AdmissibleSequence(members, tuple(levels), alpha)


def gamma_greedy(space: FiniteMetricSpace, subset: Iterable[int] | None = None,
                 alpha: float = 2.0) -> GammaResult:
    """Upper bound on gamma_alpha from :func:`greedy_sequence`."""
    return _result(space, greedy_sequence(space, subset, alpha), "greedy")


def gamma(space, subset=None, alpha=2.0, method="exact") -> GammaResult:
    if method == "exact":
        return gamma_exact(space, subset, alpha)
    if method == "greedy":
        return gamma_greedy(space, subset, alpha)
    if method == "auto":
        n = space.size if subset is None else len(tuple(subset))
        return gamma_exact(space, subset, alpha) if n <= EXACT_CAP else gamma_greedy(space, subset, alpha)
    raise ValueError(f"unknown method {method!r}")


def merge_sequences(space: FiniteMetricSpace, t1: Iterable[int], seq_a: AdmissibleSequence,
                    t2: Iterable[int], seq_b: AdmissibleSequence) -> AdmissibleSequence:
    """Combine sequences for ``t1`` and ``t2`` into one for their union.

    Levels 0 and 1 are the whole union. Level ``s >= 2`` holds the nonempty sets
    ``A - t2``, ``B - t1`` and ``A & B`` for ``A`` in ``seq_a`` level ``s - 2`` and
    ``B`` in ``seq_b`` level ``s - 2``. Levels continue until all singletons.
    """
    t1 = as_subset(space, t1)
    t2 = as_subset(space, t2)
    if seq_a.alpha != seq_b.alpha:
        raise AlphaMismatch(f"alpha {seq_a.alpha} vs {seq_b.alpha}")
    if seq_a.ground != t1:
        raise GroundMismatch("first sequence is not over t1")
    if seq_b.ground != t2:
        raise GroundMismatch("second sequence is not over t2")
    if not t1 or not t2:
        raise EmptySubset("both sets must be nonempty")
    set1, set2 = set(t1), set(t2)
    union = tuple(sorted(set1 | set2))
    only1, only2 = set1 - set2, set2 - set1

    levels = [Partition.single(union), Partition.single(union)]
    s = 2
    while not levels[-1].is_singletons:
        blocks_a = [set(b) for b in seq_a.level(s - 2).blocks]
        blocks_b = [set(b) for b in seq_b.level(s - 2).blocks]
        blocks = [a & only1 for a in blocks_a]
        blocks += [b & only2 for b in blocks_b]
        blocks += [a & b for a in blocks_a for b in blocks_b]
        levels.append(Partition(union, tuple(blocks)))
        s += 1
    return AdmissibleSequence(union, tuple(levels), seq_a.alpha)


@dataclass(frozen=True)
class SubadditivityCertificate:
    merged_value: float
    value_A: float
    value_B: float
    diameter_union: float
    alpha: float
    construction_bound: float
    lemma_bound_3: float
    lemma_bound_9: float | None
    lemma_3_holds: bool
    lemma_9_holds: bool | None
    merged_depth: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# float slack for the construction-bound check; equality cases differ by rounding only
_BOUND_RTOL = 1e-12


def subadditivity_certificate(space: FiniteMetricSpace, t1: Iterable[int], seq_a: AdmissibleSequence,
                              t2: Iterable[int], seq_b: AdmissibleSequence) -> SubadditivityCertificate:
    """Merge the sequences, evaluate the result, and compare against the bounds.

    ``construction_bound = (1 + 2**(1/a)) diam(T1 u T2) + 2**(2/a) (value_A + value_B)``
    is guaranteed by the merge (levels ``s >= 2`` reuse level ``s - 2`` of the
    inputs) and is enforced. The constant-3 and constant-9 forms are recorded
    but not enforced.
    """
    merged = merge_sequences(space, t1, seq_a, t2, seq_b)
    alpha = seq_a.alpha
    merged_value, _ = chaining_value(space, merged)
    value_a, _ = chaining_value(space, seq_a)
    value_b, _ = chaining_value(space, seq_b)
    diam_union = diameter(space, merged.ground)
    construction = (1.0 + 2.0 ** (1.0 / alpha)) * diam_union + 2.0 ** (2.0 / alpha) * (value_a + value_b)
    if merged_value > construction * (1.0 + _BOUND_RTOL):
        raise ConstructionBoundViolated(
            f"merged value {merged_value!r} exceeds construction bound {construction!r}"
        )
    bound3 = 3.0 * (diam_union + value_a + value_b)
    overlap = bool(set(seq_a.ground) & set(seq_b.ground))
    bound9 = 9.0 * (value_a + value_b) if overlap else None
    return SubadditivityCertificate(
        merged_value=merged_value,
        value_A=value_a,
        value_B=value_b,
        diameter_union=diam_union,
        alpha=alpha,
        construction_bound=construction,
        lemma_bound_3=bound3,
        lemma_bound_9=bound9,
        lemma_3_holds=merged_value <= bound3,
        lemma_9_holds=None if bound9 is None else merged_value <= bound9,
        merged_depth=merged.depth,
    )
