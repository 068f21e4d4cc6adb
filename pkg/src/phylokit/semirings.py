"""Computation semirings and the generic chain dynamic-programming evaluator.

Three semirings drive one shared fold: ordinary probability arithmetic,
max-plus (tropical) arithmetic with optional decision tags for arg-max
reconstruction, and lattice polygons under (convex hull of union,
Minkowski sum).  Summing a product of step weights over all state paths
of a chain is the same algorithm in each case; only the (add, mul) pair
changes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable

Point = tuple[int, int]

NEG_INF = float("-inf")


# ---------------------------------------------------------------------------
# lattice polygons


def _cross(o: Point, a: Point, b: Point) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable[Point]) -> tuple[Point, ...]:
    """Convex hull of integer points, counter-clockwise, collinear points
    dropped, starting at the lexicographically smallest vertex.

    Returns () for no points, a single point, or a two-point segment in
    the degenerate cases.  Arithmetic is exact (Python ints).
    """
    pts = sorted({(int(x), int(y)) for x, y in points})
    if len(pts) <= 2:
        return tuple(pts)
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return tuple(lower[:-1] + upper[:-1])


@dataclass(frozen=True)
class LatticePolygon:
    """Convex lattice polygon in canonical form.

    ``vertices`` are integer points in strict convex position, listed
    counter-clockwise starting at the lexicographically smallest vertex.
    The empty polygon (no vertices) is the additive identity of the
    polygon semiring; ``{(0, 0)}`` is the multiplicative identity.
    """

    vertices: tuple[Point, ...]

    def __post_init__(self):
        given = tuple((int(x), int(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", given)
        canon = convex_hull(given)
        if canon != given:
            raise ValueError(
                f"vertices {given!r} are not in canonical hull form {canon!r}"
            )

    @classmethod
    def from_points(cls, points: Iterable[Point]) -> "LatticePolygon":
        return cls(convex_hull(points))

    @classmethod
    def empty(cls) -> "LatticePolygon":
        return cls(())

    @classmethod
    def point(cls, x: int, y: int) -> "LatticePolygon":
        return cls(((x, y),))

    @property
    def is_empty(self) -> bool:
        return not self.vertices


def polygon_sum(a: LatticePolygon, b: LatticePolygon) -> LatticePolygon:
    """Semiring addition: convex hull of the union of the two polygons."""
    return LatticePolygon.from_points(a.vertices + b.vertices)


def polygon_product(a: LatticePolygon, b: LatticePolygon) -> LatticePolygon:
    """Semiring multiplication: Minkowski sum of the two polygons."""
    if a.is_empty or b.is_empty:
        return LatticePolygon.empty()
    sums = [(p[0] + q[0], p[1] + q[1]) for p in a.vertices for q in b.vertices]
    return LatticePolygon.from_points(sums)


# ---------------------------------------------------------------------------
# scalar semirings


@dataclass(frozen=True)
class TropicalValue:
    """Max-plus value with an optional decision tag.

    ``value`` lives in R u {-inf}; -inf is the additive identity and
    absorbs under multiplication (which clears the tag).  Tags are label
    tuples; addition keeps the tag of the larger value and breaks exact
    ties by the lexicographically smaller tag.
    """

    value: float
    tag: tuple[str, ...] | None = None


class ProbabilitySemiring:
    """Non-negative reals under (+, *)."""

    zero = 0.0
    one = 1.0

    @staticmethod
    def add(a: float, b: float) -> float:
        return a + b

    @staticmethod
    def mul(a: float, b: float) -> float:
        return a * b


class MaxPlusSemiring:
    """R u {-inf} under (max, +), on tagged :class:`TropicalValue`."""

    zero = TropicalValue(NEG_INF)
    one = TropicalValue(0.0)

    @staticmethod
    def add(a: TropicalValue, b: TropicalValue) -> TropicalValue:
        if a.value > b.value:
            return a
        if b.value > a.value:
            return b
        return a if _tag_key(a.tag) <= _tag_key(b.tag) else b

    @staticmethod
    def mul(a: TropicalValue, b: TropicalValue) -> TropicalValue:
        if a.value == NEG_INF or b.value == NEG_INF:
            return MaxPlusSemiring.zero
        if a.tag is None:
            tag = b.tag
        elif b.tag is None:
            tag = a.tag
        else:
            tag = a.tag + b.tag
        return TropicalValue(a.value + b.value, tag)


def _tag_key(tag: tuple[str, ...] | None) -> tuple:
    # untagged values sort before tagged ones; stable but arbitrary
    return () if tag is None else tag


class PolygonSemiring:
    """Lattice polygons under (hull of union, Minkowski sum)."""

    zero = LatticePolygon.empty()
    one = LatticePolygon.point(0, 0)

    add = staticmethod(polygon_sum)
    mul = staticmethod(polygon_product)


_SEMIRINGS = {
    "prob": ProbabilitySemiring,
    "probability": ProbabilitySemiring,
    "max-plus": MaxPlusSemiring,
    "maxplus": MaxPlusSemiring,
    "tropical": MaxPlusSemiring,
    "polygon": PolygonSemiring,
}


def resolve_semiring(tag):
    if isinstance(tag, str):
        try:
            return _SEMIRINGS[tag.lower()]
        except KeyError:
            raise ValueError(f"unknown semiring tag {tag!r}") from None
    return tag


# ---------------------------------------------------------------------------
# chain specifications and evaluation


@dataclass(frozen=True)
class ChainSpec:
    """Weights of a k-state chain with ``len(steps) + 1`` positions.

    ``initial[i]`` is the weight of starting in state i (first emission
    folded in by the caller); ``steps[t][i][j]`` is the weight of moving
    from state i at position t to state j at position t+1.  All weights
    must live in the semiring the chain is later evaluated under.
    ``labels`` fixes the total order used for max-plus tie-breaking;
    it defaults to decimal state indices.
    """

    initial: tuple
    steps: tuple = ()
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        k = len(self.initial)
        if k == 0:
            raise ValueError("chain needs at least one state")
        object.__setattr__(self, "initial", tuple(self.initial))
        steps = tuple(tuple(tuple(row) for row in w) for w in self.steps)
        for t, w in enumerate(steps):
            if len(w) != k or any(len(row) != k for row in w):
                raise ValueError(
                    f"step {t} is not a {k}x{k} matrix (got {len(w)} rows)"
                )
        object.__setattr__(self, "steps", steps)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(k)))
        elif len(self.labels) != k:
            raise ValueError(f"expected {k} state labels, got {len(self.labels)}")

    @property
    def states(self) -> int:
        return len(self.initial)

    @property
    def length(self) -> int:
        return len(self.steps) + 1


@dataclass(frozen=True)
class ChainResult:
    """Value of a chain; ``path`` is the arg-max state sequence under
    max-plus (lexicographically smallest among ties), else None."""

    value: object
    path: tuple[str, ...] | None = None


def evaluate_chain(spec: ChainSpec, semiring) -> ChainResult:
    """Fold the chain: add over all state paths of the mul of path weights.

    Runs in O(length * states^2) semiring operations.  Under max-plus the
    chain weights must be plain floats (log weights); the result carries
    the arg-max path with exact ties broken by the lexicographically
    smallest label sequence.
    """
    sr = resolve_semiring(semiring)
    if sr is MaxPlusSemiring:
        return _evaluate_chain_argmax(spec)
    cur = list(spec.initial)
    k = spec.states
    for w in spec.steps:
        cur = [
            reduce(sr.add, (sr.mul(cur[i], w[i][j]) for i in range(k)))
            for j in range(k)
        ]
    return ChainResult(reduce(sr.add, cur))


# Arg-max paths are stored as backward-linked (label, parent) cells so that
# extending a path is O(1); ties materialize both candidates for a full
# lexicographic comparison, which only costs when scores are exactly equal.


def _materialize(cell) -> tuple[str, ...]:
    out = []
    while cell is not None:
        out.append(cell[0])
        cell = cell[1]
    out.reverse()
    return tuple(out)


def _better(score_a, path_a, score_b, path_b) -> bool:
    if score_a != score_b:
        return score_a > score_b
    return _materialize(path_a) < _materialize(path_b)


def _evaluate_chain_argmax(spec: ChainSpec) -> ChainResult:
    labels = spec.labels
    k = spec.states
    scores = [float(v) for v in spec.initial]
    paths = [(labels[i], None) for i in range(k)]
    for w in spec.steps:
        new_scores = []
        new_paths = []
        for j in range(k):
            best_s, best_p = NEG_INF, None
            for i in range(k):
                s = scores[i] + w[i][j]
                p = (labels[j], paths[i])
                if best_p is None or _better(s, p, best_s, best_p):
                    best_s, best_p = s, p
            new_scores.append(best_s)
            new_paths.append(best_p)
        scores, paths = new_scores, new_paths
    best_s, best_p = scores[0], paths[0]
    for j in range(1, k):
        if _better(scores[j], paths[j], best_s, best_p):
            best_s, best_p = scores[j], paths[j]
    return ChainResult(best_s, _materialize(best_p))
