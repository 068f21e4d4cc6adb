"""Phylogenetic combinatorics: dissimilarity maps, the four-point
condition, splits and their compatibility, neighbor-joining, subtree-
length maps on m-subsets with the generalized cherry criterion, and the
linear relations cutting out tree-derived 3-maps on six taxa.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .trees import PhyloTree

_SYM_TOL = 1e-9
_FOUR_POINT_SLACK = 1e-9


# ---------------------------------------------------------------------------
# dissimilarity maps


@dataclass(frozen=True)
class DissimilarityMap:
    """Symmetric pairwise values on a declared taxon order, zero on the
    diagonal.  Entries may be negative (dissimilarity, not metric)."""

    taxa: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        taxa = tuple(self.taxa)
        if len(set(taxa)) != len(taxa):
            raise ValueError("taxa must be distinct")
        values = np.asarray(self.values, dtype=float)
        n = len(taxa)
        if values.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} table, got {values.shape}")
        if np.isnan(values).any():
            raise ValueError("dissimilarity values must not be NaN")
        if np.abs(np.diag(values)).max(initial=0.0) > 1e-12:
            raise ValueError("diagonal must be zero")
        asym = np.abs(values - values.T)
        if asym.max(initial=0.0) > _SYM_TOL:
            i, j = np.unravel_index(int(asym.argmax()), asym.shape)
            raise ValueError(
                f"asymmetric entries d[{taxa[i]},{taxa[j]}]={values[i, j]!r} "
                f"vs d[{taxa[j]},{taxa[i]}]={values[j, i]!r}"
            )
        values = (values + values.T) / 2.0
        values.setflags(write=False)
        object.__setattr__(self, "taxa", taxa)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return len(self.taxa)

    def index(self, taxon: str) -> int:
        try:
            return self.taxa.index(taxon)
        except ValueError:
            raise KeyError(f"unknown taxon {taxon!r}") from None

    def get(self, a: str, b: str) -> float:
        return float(self.values[self.index(a), self.index(b)])


@dataclass(frozen=True)
class MetricVerdict:
    ok: bool
    violation: tuple[str, str, str] | None = None

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class FourPointVerdict:
    ok: bool
    violation: tuple[str, str, str, str] | None = None

    def __bool__(self):
        return self.ok


def check_metric(delta: DissimilarityMap) -> MetricVerdict:
    """Non-negativity plus the triangle inequality.

    A violating triple (x, y, z) means d(x,z) > d(x,y) + d(y,z); taking
    z = x makes a negative entry a violation too.  The lexicographically
    first violating triple is reported.
    """
    taxa = sorted(delta.taxa)
    for x in taxa:
        for y in taxa:
            if y == x:
                continue
            for z in taxa:
                if z == y:
                    continue
                if delta.get(x, z) > delta.get(x, y) + delta.get(y, z) + 1e-15:
                    return MetricVerdict(False, (x, y, z))
    return MetricVerdict(True)


def check_four_point(delta: DissimilarityMap) -> FourPointVerdict:
    """For every four taxa, the two largest of the three pair-sums must
    agree (within a slack of 1e-9).  Vacuously true below four taxa."""
    taxa = sorted(delta.taxa)
    for a, b, c, d in combinations(taxa, 4):
        sums = sorted(
            (
                delta.get(a, b) + delta.get(c, d),
                delta.get(a, c) + delta.get(b, d),
                delta.get(a, d) + delta.get(b, c),
            )
        )
        if sums[2] - sums[1] > _FOUR_POINT_SLACK:
            return FourPointVerdict(False, (a, b, c, d))
    return FourPointVerdict(True)


def tree_metric(tree: PhyloTree) -> DissimilarityMap:
    """Pairwise path-length map of a tree, in sorted taxon order."""
    taxa = tree.taxa
    n = len(taxa)
    values = np.zeros((n, n))
    for i, a in enumerate(taxa):
        dist = _distances_from(tree, tree.node_of(a))
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = dist[tree.node_of(taxa[j])]
    return DissimilarityMap(taxa=taxa, values=values)


def _distances_from(tree: PhyloTree, src: int) -> dict[int, float]:
    dist = {src: 0.0}
    stack = [src]
    while stack:
        x = stack.pop()
        for y, ln in tree.neighbors(x).items():
            if y not in dist:
                dist[y] = dist[x] + ln
                stack.append(y)
    return dist


# ---------------------------------------------------------------------------
# splits


@dataclass(frozen=True)
class Split:
    """Bipartition of a taxon set; the stored side is the one containing
    the smallest taxon label."""

    inside: frozenset[str]
    taxa: frozenset[str]

    def __post_init__(self):
        inside = frozenset(self.inside)
        taxa = frozenset(self.taxa)
        if not inside or inside == taxa or not inside <= taxa:
            raise ValueError("a split needs two nonempty sides")
        if min(taxa) not in inside:
            inside = taxa - inside
        object.__setattr__(self, "inside", inside)
        object.__setattr__(self, "taxa", taxa)

    @property
    def outside(self) -> frozenset[str]:
        return self.taxa - self.inside

    @property
    def is_trivial(self) -> bool:
        return min(len(self.inside), len(self.outside)) == 1

    def sides(self) -> tuple[frozenset[str], frozenset[str]]:
        return self.inside, self.outside


def splits_compatible(s1: Split, s2: Split) -> bool:
    """True when some pair of sides (one from each split) is disjoint."""
    if s1.taxa != s2.taxa:
        raise ValueError("splits are over different taxon sets")
    a, b = s1.sides()
    a2, b2 = s2.sides()
    return not (a & a2) or not (a & b2) or not (b & a2) or not (b & b2)


@dataclass(frozen=True)
class SplitSystem:
    """Distinct splits of a tree.  A binary tree on n taxa has exactly
    2n - 3; fewer flags an unresolved (or subdivided) tree."""

    splits: tuple[Split, ...]
    is_binary: bool

    def __iter__(self):
        return iter(self.splits)

    def __len__(self):
        return len(self.splits)

    def as_set(self) -> frozenset[Split]:
        return frozenset(self.splits)


def splits_of_tree(tree: PhyloTree) -> SplitSystem:
    """Bipartitions induced by deleting each edge, deduplicated (the two
    halves of a subdivided edge induce the same split)."""
    taxa = frozenset(tree.taxa)
    if len(taxa) < 2:
        raise ValueError("splits need at least two taxa")
    found = set()
    for u, v, _ in tree.edges():
        side = tree.leaves_beyond(u, v)
        if side and side != taxa:
            found.add(Split(inside=side, taxa=taxa))
    ordered = tuple(
        sorted(found, key=lambda s: (len(s.inside), sorted(s.inside)))
    )
    return SplitSystem(splits=ordered, is_binary=len(ordered) == 2 * len(taxa) - 3)


def cherries(tree: PhyloTree) -> set[frozenset[str]]:
    """Leaf pairs separated by a single internal vertex."""
    collapsed = tree.suppress_unifurcations()
    out = set()
    for node in collapsed.nodes():
        if collapsed.is_leaf(node):
            continue
        leaf_nbrs = [
            collapsed.label_of(x)
            for x in collapsed.neighbors(node)
            if collapsed.is_leaf(x)
        ]
        out.update(
            frozenset(p) for p in combinations(sorted(leaf_nbrs), 2)
        )
    return out


# ---------------------------------------------------------------------------
# neighbor joining


def _nj_q_matrix(values: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    r = values.sum(axis=1)
    return (n - 2) * values - r[:, None] - r[None, :]


def neighbor_join(delta: DissimilarityMap) -> PhyloTree:
    """Agglomerate the pair minimizing (n-2) d(i,j) - r_i - r_j, assign
    cherry edge lengths by the divergence-corrected formula, and reduce
    with d(z,k) = (d(x,k) + d(y,k) - d(x,y))/2.

    Exact tree metrics are reconstructed exactly (up to roundoff); ties
    in the criterion go to the lexicographically smallest label pair.
    Negative edge lengths from noisy inputs are clamped to zero with a
    warning.
    """
    n = delta.size
    if n < 3:
        raise ValueError("neighbor joining needs at least 3 taxa")

    tree = PhyloTree()
    nodes = [tree.add_node(label=t) for t in delta.taxa]
    # sort key of an agglomerated cluster: its smallest original label
    keys = list(delta.taxa)
    values = np.array(delta.values)

    def attach(node: int, hub: int, length: float, key: str) -> None:
        if length < 0:
            if length < -1e-12:
                warnings.warn(
                    f"clamping negative branch length {length:.3e} on the "
                    f"edge above {key!r}",
                    stacklevel=3,
                )
            length = 0.0
        tree.add_edge(node, hub, length)

    while len(nodes) > 3:
        m = len(nodes)
        q = _nj_q_matrix(values)
        best = None
        for a in range(m):
            for b in range(a + 1, m):
                cand = (q[a, b], tuple(sorted((keys[a], keys[b]))))
                if best is None or cand < best[0]:
                    best = (cand, a, b)
        _, a, b = best
        r = values.sum(axis=1)
        dab = values[a, b]
        la = 0.5 * dab + (r[a] - r[b]) / (2.0 * (m - 2))
        lb = dab - la
        hub = tree.add_node()
        attach(nodes[a], hub, la, keys[a])
        attach(nodes[b], hub, lb, keys[b])

        merged = 0.5 * (values[a] + values[b] - dab)
        keep = [x for x in range(m) if x not in (a, b)]
        values = np.vstack(
            [
                np.hstack([values[np.ix_(keep, keep)], merged[keep, None]]),
                np.hstack([merged[keep], [0.0]]),
            ]
        )
        nodes = [nodes[x] for x in keep] + [hub]
        keys = [keys[x] for x in keep] + [min(keys[a], keys[b])]

    hub = tree.add_node()
    for a in range(3):
        b, c = [x for x in range(3) if x != a]
        la = 0.5 * (values[a, b] + values[a, c] - values[b, c])
        attach(nodes[a], hub, la, keys[a])
    return tree


# ---------------------------------------------------------------------------
# m-dissimilarity maps


@dataclass(frozen=True)
class MDissimilarityMap:
    """One value per m-element subset of the taxa (order-free; repeated
    taxa are outside the index set, matching a value of zero)."""

    taxa: tuple[str, ...]
    m: int
    values: dict

    def __post_init__(self):
        taxa = tuple(self.taxa)
        if len(set(taxa)) != len(taxa):
            raise ValueError("taxa must be distinct")
        if not 2 <= self.m <= len(taxa):
            raise ValueError(f"m must lie in [2, {len(taxa)}], got {self.m}")
        values = {frozenset(k): float(v) for k, v in self.values.items()}
        for subset in combinations(taxa, self.m):
            if frozenset(subset) not in values:
                raise ValueError(f"missing value for subset {sorted(subset)}")
        for k in values:
            if len(k) != self.m or not set(k) <= set(taxa):
                raise ValueError(f"bad subset key {sorted(k)}")
        object.__setattr__(self, "taxa", taxa)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return len(self.taxa)

    def get(self, *taxa: str) -> float:
        if len(taxa) != self.m or len(set(taxa)) != self.m:
            raise ValueError(f"need {self.m} distinct taxa, got {taxa!r}")
        return self.values[frozenset(taxa)]

    def restrict(self, fixed) -> DissimilarityMap:
        """Induced pairwise map on the remaining taxa obtained by pinning
        ``fixed`` (m - 2 taxa) into every subset."""
        fixed = frozenset(fixed)
        if len(fixed) != self.m - 2:
            raise ValueError(f"need {self.m - 2} fixed taxa")
        rest = tuple(t for t in self.taxa if t not in fixed)
        n = len(rest)
        values = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                v = self.values[fixed | {rest[i], rest[j]}]
                values[i, j] = values[j, i] = v
        return DissimilarityMap(taxa=rest, values=values)


def m_dissimilarity(tree: PhyloTree, m: int) -> MDissimilarityMap:
    """Total branch length of the subtree spanned by each m-subset.

    An edge belongs to the spanned subtree exactly when both of its
    sides contain a taxon of the subset.  At m = 2 this is the pairwise
    path-length map.
    """
    taxa = tree.taxa
    if not 2 <= m <= len(taxa):
        raise ValueError(f"m must lie in [2, {len(taxa)}], got {m}")
    edge_sides = [
        (tree.leaves_beyond(u, v), ln) for u, v, ln in tree.edges()
    ]
    values = {}
    for subset in combinations(taxa, m):
        chosen = frozenset(subset)
        total = 0.0
        for side, ln in edge_sides:
            hits = len(chosen & side)
            if 0 < hits < m:
                total += ln
        values[chosen] = total
    return MDissimilarityMap(taxa=taxa, m=m, values=values)


def generalized_nj_cherry(delta_m: MDissimilarityMap):
    """Arg-min pair of the subtree-length cherry criterion.

    Q(i,j) = (n-2)/(m-1) * sum of delta(i,j,Y) over (m-2)-subsets Y
    avoiding i,j, minus the sums of delta(i,Y') and delta(j,Y') over
    (m-1)-subsets.  On maps derived from a tree the minimizing pair is a
    cherry.  Returns the pair and the full Q table keyed by sorted label
    pairs; ties go to the lexicographically smallest pair.
    """
    taxa = delta_m.taxa
    n, m = len(taxa), delta_m.m
    if n <= m:
        raise ValueError(f"need more taxa than the subset size ({n} <= {m})")
    single = {
        t: sum(
            delta_m.values[frozenset((t,) + y)]
            for y in combinations([s for s in taxa if s != t], m - 1)
        )
        for t in taxa
    }
    table = {}
    for i, j in combinations(sorted(taxa), 2):
        rest = [t for t in taxa if t not in (i, j)]
        joint = sum(
            delta_m.values[frozenset((i, j) + y)]
            for y in combinations(rest, m - 2)
        )
        table[(i, j)] = (n - 2) / (m - 1) * joint - single[i] - single[j]
    pair = min(table, key=lambda p: (table[p], p))
    return pair, table


def pairwise_from_3map(md: MDissimilarityMap) -> DissimilarityMap:
    """Pairwise distances implied by a tree-derived 3-map (n >= 5).

    With delta(i,j,k) = (d(i,j) + d(i,k) + d(j,k)) / 2, summing over the
    third taxon, over pairs through one taxon, and over all triples
    gives linear relations that invert to d.  On four taxa the map has a
    two-dimensional kernel and no inverse exists.
    """
    taxa = md.taxa
    n = len(taxa)
    if md.m != 3:
        raise ValueError("expected a 3-dissimilarity map")
    if n < 5:
        raise ValueError("pairwise inversion needs at least 5 taxa")
    total = sum(md.values.values())  # = (n-2)/2 * sum of all pairwise d
    all_pairs_sum = 2.0 * total / (n - 2)
    row = {}
    for t in taxa:
        acc = sum(v for k, v in md.values.items() if t in k)
        # acc = ((n-3) * r_t + all_pairs_sum) / 2
        row[t] = (2.0 * acc - all_pairs_sum) / (n - 3)
    values = np.zeros((n, n))
    for a, b in combinations(range(n), 2):
        x, y = taxa[a], taxa[b]
        joint = sum(v for k, v in md.values.items() if x in k and y in k)
        # joint = ((n-4) * d(x,y) + r_x + r_y) / 2
        d = (2.0 * joint - row[x] - row[y]) / (n - 4)
        values[a, b] = values[b, a] = d
    return DissimilarityMap(taxa=taxa, values=values)


def generalized_neighbor_join(delta_m: MDissimilarityMap) -> PhyloTree:
    """Tree topology from a 3-dissimilarity map by repeated cherry
    picking on the subtree-length criterion.

    Joining a cherry (x, y) into z replaces triple values by the average
    (delta(x,i,j) + delta(y,i,j)) / 2 minus half the x-y distance: the
    subtraction removes the two pendant edges, so the reduced map is
    again an exact 3-map of the reduced tree (plain averaging would
    shift every z-triple and bias later picks).  Pairwise distances are
    derived once by :func:`pairwise_from_3map` and carried along with
    the standard (d(x,k) + d(y,k) - d(x,y)) / 2 reduction; they resolve
    the final quartet, where the triple criterion is constant across
    pairs (on four taxa the four triple values cannot distinguish the
    three quartet topologies).  Exact on maps of the form
    m_dissimilarity(tree, 3) with five or more taxa; four-taxon input
    falls back to the lexicographically smallest pairing.  Only the
    topology is inferred; branch lengths are reported as zero.
    """
    if delta_m.m != 3:
        raise ValueError("only 3-dissimilarity maps are supported")
    if delta_m.size < 4:
        raise ValueError("need at least 4 taxa")

    tree = PhyloTree()
    # clusters are named by their smallest member, which is also the
    # tie-breaking key of the cherry criterion
    node_of = {t: tree.add_node(label=t) for t in delta_m.taxa}
    active = set(delta_m.taxa)
    values = dict(delta_m.values)
    pair_dist: dict[frozenset, float] = {}
    if delta_m.size >= 5:
        derived = pairwise_from_3map(delta_m)
        for a, b in combinations(delta_m.taxa, 2):
            pair_dist[frozenset((a, b))] = derived.get(a, b)

    def join(x: str, y: str) -> str:
        hub = tree.add_node()
        tree.add_edge(node_of.pop(x), hub, 0.0)
        tree.add_edge(node_of.pop(y), hub, 0.0)
        z = min(x, y)
        node_of[z] = hub
        rest = [t for t in active if t not in (x, y)]
        pendant = pair_dist.get(frozenset((x, y)), 0.0)
        for i, j in combinations(rest, 2):
            values[frozenset((z, i, j))] = (
                0.5 * (values[frozenset((x, i, j))] + values[frozenset((y, i, j))])
                - 0.5 * pendant
            )
        for k in rest:
            dk = 0.5 * (
                pair_dist.get(frozenset((x, k)), 0.0)
                + pair_dist.get(frozenset((y, k)), 0.0)
                - pendant
            )
            pair_dist[frozenset((z, k))] = dk
        active.difference_update((x, y))
        active.add(z)
        return z

    while len(active) > 4:
        sub = MDissimilarityMap(
            taxa=tuple(sorted(active)),
            m=3,
            values={k: v for k, v in values.items() if k <= active},
        )
        (x, y), _ = generalized_nj_cherry(sub)
        join(x, y)

    # quartet stage: the pairwise criterion picks a true cherry
    quartet = sorted(active)
    if pair_dist:
        best = None
        for x, y in combinations(quartet, 2):
            r_x = sum(pair_dist[frozenset((x, k))] for k in quartet if k != x)
            r_y = sum(pair_dist[frozenset((y, k))] for k in quartet if k != y)
            q = 2.0 * pair_dist[frozenset((x, y))] - r_x - r_y
            cand = (q, (x, y))
            if best is None or cand < best:
                best = cand
        join(*best[1])
    else:
        join(quartet[0], quartet[1])

    hub = tree.add_node()
    for t in sorted(active):
        tree.add_edge(node_of[t], hub, 0.0)
    return tree


@dataclass(frozen=True)
class MTreeVerdict:
    ok: bool
    vacuous: bool = False
    witness: tuple | None = None

    def __bool__(self):
        return self.ok


def check_m_tree(delta_m: MDissimilarityMap) -> MTreeVerdict:
    """Whether every induced pairwise map (pinning m-2 taxa) is a tree
    metric, i.e. non-negative, triangle, and four-point.  Needs at least
    m + 2 taxa to be informative; below that the verdict is vacuously
    true and flagged."""
    n, m = delta_m.size, delta_m.m
    if n < m + 2:
        return MTreeVerdict(True, vacuous=True)
    for fixed in combinations(delta_m.taxa, m - 2):
        induced = delta_m.restrict(fixed)
        metric = check_metric(induced)
        if not metric:
            return MTreeVerdict(False, witness=(tuple(fixed), metric.violation))
        four = check_four_point(induced)
        if not four:
            return MTreeVerdict(False, witness=(tuple(fixed), four.violation))
    return MTreeVerdict(True)


# The five 8-term linear relations satisfied exactly by 3-maps of the
# form delta(i,j,k) = (d(i,j) + d(i,k) + d(j,k))/2, taxa numbered 1..6.
_GR36_EQUATIONS = (
    ((123, 145, 246, 356), (124, 135, 236, 456)),
    ((123, 145, 346, 256), (134, 125, 236, 456)),
    ((123, 245, 146, 356), (124, 235, 136, 456)),
    ((123, 345, 246, 156), (234, 135, 126, 456)),
    ((123, 345, 146, 256), (134, 235, 126, 456)),
)


def gr36_residuals(delta3: MDissimilarityMap) -> tuple[float, float, float, float, float]:
    """Left-minus-right of the five linear relations, taxa taken in the
    map's declared order.  All five vanish on tree-derived 3-maps."""
    if delta3.size != 6 or delta3.m != 3:
        raise ValueError("expected a 3-dissimilarity map on six taxa")
    taxa = delta3.taxa

    def val(code: int) -> float:
        digits = [int(c) - 1 for c in str(code)]
        return delta3.values[frozenset(taxa[d] for d in digits)]

    out = []
    for lhs, rhs in _GR36_EQUATIONS:
        out.append(sum(val(c) for c in lhs) - sum(val(c) for c in rhs))
    return tuple(out)


def schroder_count(n: int) -> int:
    """Number of trivalent tree topologies on n labeled leaves: the
    double factorial 1 * 3 * 5 * ... * (2n - 5), exactly."""
    if n < 3:
        raise ValueError("need at least 3 taxa")
    out = 1
    for odd in range(1, 2 * n - 4, 2):
        out *= odd
    return out


# ---------------------------------------------------------------------------
# random trees (test and simulation support)


def random_binary_tree(
    taxa, rng: np.random.Generator, min_length: float = 0.05, max_length: float = 1.0
) -> PhyloTree:
    """Uniform-ish random unrooted binary tree: leaves are attached one
    at a time to a uniformly chosen existing edge, with branch lengths
    drawn uniformly from [min_length, max_length]."""
    names = sorted(taxa)
    if len(names) < 3:
        raise ValueError("need at least 3 taxa")

    def length() -> float:
        return float(rng.uniform(min_length, max_length))

    tree = PhyloTree()
    hub = tree.add_node()
    for name in names[:3]:
        tree.add_edge(tree.add_node(label=name), hub, length())
    for name in names[3:]:
        u, v, _ = tree.edges()[int(rng.integers(len(tree.edges())))]
        mid = tree.split_edge(u, v, tree.edge_length(u, v) / 2.0)
        tree.add_edge(tree.add_node(label=name), mid, length())
    return tree
