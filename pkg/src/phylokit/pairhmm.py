"""Pairwise alignment as a three-state pair hidden Markov model.

An alignment of sequences of lengths n and m is a word over {M, I, D}
with #M + #D = n and #M + #I = m: M consumes a letter of both sequences,
D one letter of the first, I one letter of the second.  The same grid
dynamic program, parameterized by a semiring, yields the total
generation probability (sum over alignments of the word's parameter
monomial), the best-scoring alignment under max-plus, and the lattice
polygon of achievable (mismatch count, indel count) pairs for
parametric alignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .semirings import LatticePolygon, convex_hull

NUCLEOTIDES = "ACGT"
_NUC_INDEX = {c: i for i, c in enumerate(NUCLEOTIDES)}

#: Transition-table state order.
STATES = ("M", "I", "D")
_S = {s: i for i, s in enumerate(STATES)}

NEG_INF = float("-inf")

#: Refuse to materialize more alignments than this.
ENUMERATION_CAP = 10**6


# ---------------------------------------------------------------------------
# combinatorics of alignment words


def delannoy_count(n: int, m: int) -> int:
    """Number of alignments of sequences of lengths n and m, by the
    recurrence D(n,m) = D(n-1,m) + D(n,m-1) + D(n-1,m-1) with unit
    boundary values.  Exact integer arithmetic."""
    if n < 0 or m < 0:
        raise ValueError("lengths must be non-negative")
    row = [1] * (m + 1)
    for _ in range(n):
        new = [1] * (m + 1)
        for j in range(1, m + 1):
            new[j] = new[j - 1] + row[j] + row[j - 1]
        row = new
    return row[m]


def is_alignment(word: str, n: int, m: int) -> bool:
    """Whether ``word`` is a valid alignment of lengths (n, m)."""
    if any(c not in "MID" for c in word):
        return False
    nm = word.count("M")
    return nm + word.count("D") == n and nm + word.count("I") == m


def validate_alignment(word: str, n: int, m: int) -> None:
    if not is_alignment(word, n, m):
        raise ValueError(
            f"{word!r} is not an alignment of sequence lengths ({n}, {m})"
        )


def enumerate_alignments(n: int, m: int, cap: int = ENUMERATION_CAP) -> list[str]:
    """All alignments of lengths (n, m), lexicographic with D < I < M.

    Raises if the count exceeds ``cap``.
    """
    count = delannoy_count(n, m)
    if count > cap:
        raise ValueError(
            f"{count} alignments of lengths ({n}, {m}) exceed the cap of {cap}"
        )
    out: list[str] = []
    word: list[str] = []

    def rec(r1: int, r2: int) -> None:
        if r1 == 0 and r2 == 0:
            out.append("".join(word))
            return
        if r1 > 0:
            word.append("D")
            rec(r1 - 1, r2)
            word.pop()
        if r2 > 0:
            word.append("I")
            rec(r1, r2 - 1)
            word.pop()
        if r1 > 0 and r2 > 0:
            word.append("M")
            rec(r1 - 1, r2 - 1)
            word.pop()

    rec(n, m)
    return out


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class PairHmmParams:
    """The 33 pair-HMM parameters: a 3x3 transition table over (M, I, D),
    a 4x4 match-emission table, and length-4 insertion and deletion
    emission vectors.

    ``mode="algebraic"`` places no normalization constraints (any
    non-negative reals); ``mode="stochastic"`` requires transition rows
    and each emission block to sum to 1.
    """

    trans: np.ndarray
    emit_match: np.ndarray
    emit_insert: np.ndarray
    emit_delete: np.ndarray
    mode: str = "algebraic"

    def __post_init__(self):
        trans = np.asarray(self.trans, dtype=float)
        em = np.asarray(self.emit_match, dtype=float)
        ei = np.asarray(self.emit_insert, dtype=float)
        ed = np.asarray(self.emit_delete, dtype=float)
        if trans.shape != (3, 3):
            raise ValueError(f"transition table must be 3x3, got {trans.shape}")
        if em.shape != (4, 4):
            raise ValueError(f"match emissions must be 4x4, got {em.shape}")
        if ei.shape != (4,) or ed.shape != (4,):
            raise ValueError("insert/delete emissions must have length 4")
        for arr in (trans, em, ei, ed):
            if (arr < 0).any():
                raise ValueError("parameters must be non-negative")
        if self.mode == "stochastic":
            if np.abs(trans.sum(axis=1) - 1.0).max() > 1e-9:
                raise ValueError("stochastic mode: transition rows must sum to 1")
            for name, total in (
                ("match", em.sum()),
                ("insert", ei.sum()),
                ("delete", ed.sum()),
            ):
                if abs(total - 1.0) > 1e-9:
                    raise ValueError(f"stochastic mode: {name} emissions must sum to 1")
        elif self.mode != "algebraic":
            raise ValueError(f"unknown mode {self.mode!r}")
        for arr in (trans, em, ei, ed):
            arr.setflags(write=False)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "emit_match", em)
        object.__setattr__(self, "emit_insert", ei)
        object.__setattr__(self, "emit_delete", ed)

    def to_dict(self) -> dict:
        return {
            "S": self.trans.tolist(),
            "tM": self.emit_match.tolist(),
            "tI": self.emit_insert.tolist(),
            "tD": self.emit_delete.tolist(),
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PairHmmParams":
        return cls(
            trans=np.array(data["S"], dtype=float),
            emit_match=np.array(data["tM"], dtype=float),
            emit_insert=np.array(data["tI"], dtype=float),
            emit_delete=np.array(data["tD"], dtype=float),
            mode=data.get("mode", "algebraic"),
        )


@dataclass(frozen=True)
class ScoringScheme:
    """Match/mismatch/indel scoring: a match scores +1, a mismatch
    scores -mismatch, an inserted or deleted letter scores -gap."""

    mismatch: float
    gap: float

    def __post_init__(self):
        if self.mismatch < 0 or self.gap < 0:
            raise ValueError("mismatch and gap penalties must be non-negative")


def scoring_scheme_params(scheme: ScoringScheme) -> PairHmmParams:
    """Pair-HMM parameters whose logs realize the simple scoring scheme:
    unit transitions, match emissions e^{+1} (same letter) or
    e^{-mismatch}, and indel emissions e^{-gap}."""
    em = np.full((4, 4), math.exp(-scheme.mismatch))
    np.fill_diagonal(em, math.e)
    indel = np.full(4, math.exp(-scheme.gap))
    return PairHmmParams(
        trans=np.ones((3, 3)),
        emit_match=em,
        emit_insert=indel.copy(),
        emit_delete=indel.copy(),
        mode="algebraic",
    )


def _check_sequences(s1: str, s2: str) -> tuple[str, str]:
    for name, s in (("first", s1), ("second", s2)):
        if not s:
            raise ValueError(f"{name} sequence is empty")
        for pos, ch in enumerate(s.upper()):
            if ch not in _NUC_INDEX:
                raise ValueError(
                    f"invalid nucleotide {ch!r} at position {pos} of the {name} sequence"
                )
    return s1.upper(), s2.upper()


# ---------------------------------------------------------------------------
# direct evaluation of one alignment word


def _emission(p: PairHmmParams, state: str, a: str | None, b: str | None) -> float:
    if state == "M":
        return float(p.emit_match[_NUC_INDEX[a], _NUC_INDEX[b]])
    if state == "I":
        return float(p.emit_insert[_NUC_INDEX[b]])
    return float(p.emit_delete[_NUC_INDEX[a]])


def alignment_monomial(p: PairHmmParams, word: str, s1: str, s2: str) -> float:
    """Value of the parameter monomial of one alignment word: the first
    state's emission times transition-emission factors for the rest."""
    s1, s2 = _check_sequences(s1, s2)
    validate_alignment(word, len(s1), len(s2))
    i = j = 0
    value = 1.0
    prev: str | None = None
    for state in word:
        if state in "MD":
            i += 1
        if state in "MI":
            j += 1
        if prev is not None:
            value *= float(p.trans[_S[prev], _S[state]])
        value *= _emission(p, state, s1[i - 1], s2[j - 1])
        prev = state
    return value


def log_alignment_monomial(p: PairHmmParams, word: str, s1: str, s2: str) -> float:
    value = alignment_monomial(p, word, s1, s2)
    return math.log(value) if value > 0 else NEG_INF


# ---------------------------------------------------------------------------
# the shared grid dynamic program

# Cell (i, j) holds, per final state, the semiring total over alignment
# prefixes that consume i letters of the first and j letters of the
# second sequence.  The first alignment position carries no transition
# factor.  Adapters supply the semiring: plain floats for probability,
# (score, backward-linked word) pairs for max-plus with lexicographic
# (D < I < M) tie-breaking, and vertex->word maps for lattice polygons.


def _grid_dp(adapter, n: int, m: int):
    cells: dict[tuple[int, int], dict[str, object]] = {}
    for i in range(n + 1):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            vals: dict[str, object] = {}
            if i >= 1 and j >= 1:
                vals["M"] = _enter(adapter, cells, i - 1, j - 1, "M", i, j)
            if j >= 1:
                vals["I"] = _enter(adapter, cells, i, j - 1, "I", i, j)
            if i >= 1:
                vals["D"] = _enter(adapter, cells, i - 1, j, "D", i, j)
            cells[(i, j)] = vals
    return adapter.merge(list(cells[(n, m)].values()))


def _enter(adapter, cells, pi: int, pj: int, state: str, i: int, j: int):
    if pi == 0 and pj == 0:
        return adapter.first(state, i, j)
    prev = cells[(pi, pj)]
    return adapter.merge(
        [adapter.step(v, ps, state, i, j) for ps, v in prev.items()]
    )


class _ProbGrid:
    def __init__(self, p: PairHmmParams, s1: str, s2: str):
        self.p, self.s1, self.s2 = p, s1, s2

    def _emit(self, state, i, j):
        return _emission(
            self.p,
            state,
            self.s1[i - 1] if i else None,
            self.s2[j - 1] if j else None,
        )

    def first(self, state, i, j):
        return self._emit(state, i, j)

    def step(self, value, prev_state, state, i, j):
        return value * float(self.p.trans[_S[prev_state], _S[state]]) * self._emit(state, i, j)

    @staticmethod
    def merge(values):
        return sum(values)


def _word_of(cell) -> tuple[str, ...]:
    out = []
    while cell is not None:
        out.append(cell[0])
        cell = cell[1]
    out.reverse()
    return tuple(out)


class _MaxPlusGrid:
    """Values are (score, linked word); merge keeps the max score and
    breaks exact ties by the lexicographically smaller word."""

    def __init__(self, trans_score: Callable, emit_score: Callable):
        self.trans_score = trans_score
        self.emit_score = emit_score

    def first(self, state, i, j):
        return (self.emit_score(state, i, j), (state, None))

    def step(self, value, prev_state, state, i, j):
        score = value[0] + self.trans_score(prev_state, state) + self.emit_score(state, i, j)
        return (score, (state, value[1]))

    @staticmethod
    def merge(values):
        best = values[0]
        for cand in values[1:]:
            if cand[0] > best[0] or (
                cand[0] == best[0] and _word_of(cand[1]) < _word_of(best[1])
            ):
                best = cand
        return best


class _PolygonGrid:
    """Values map achievable exponent points to a witness word (linked,
    lexicographically smallest); merge prunes to convex-hull vertices."""

    def __init__(self, s1: str, s2: str):
        self.s1, self.s2 = s1, s2

    def _delta(self, state, i, j):
        if state == "M":
            return (0, 0) if self.s1[i - 1] == self.s2[j - 1] else (1, 0)
        return (0, 1)

    def first(self, state, i, j):
        return {self._delta(state, i, j): (state, None)}

    def step(self, value, prev_state, state, i, j):
        dx, dy = self._delta(state, i, j)
        return {(x + dx, y + dy): (state, cell) for (x, y), cell in value.items()}

    @staticmethod
    def merge(values):
        merged: dict = {}
        for val in values:
            for point, cell in val.items():
                old = merged.get(point)
                if old is None or _word_of(cell) < _word_of(old):
                    merged[point] = cell
        hull = set(convex_hull(merged))
        return {pt: cell for pt, cell in merged.items() if pt in hull}


# ---------------------------------------------------------------------------
# public operations


class ScoredAlignment(NamedTuple):
    word: str
    score: float


@dataclass(frozen=True)
class ParametricPolygon:
    """Convex hull of the (mismatch count, indel count) pairs achievable
    by alignments of one sequence pair, with one witness alignment per
    vertex.  The indel count aggregates insertions and deletions."""

    polygon: LatticePolygon
    witnesses: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "vertices": [list(v) for v in self.polygon.vertices],
            "witnesses": list(self.witnesses),
        }


def pair_probability(p: PairHmmParams, s1: str, s2: str) -> float:
    """Total weight of generating the two sequences: the sum over all
    alignments of the alignment's parameter monomial, in O(n*m)."""
    s1, s2 = _check_sequences(s1, s2)
    return float(_grid_dp(_ProbGrid(p, s1, s2), len(s1), len(s2)))


def viterbi_alignment(p: PairHmmParams, s1: str, s2: str) -> ScoredAlignment:
    """Alignment with the largest log monomial; exact ties resolved by
    the lexicographically smallest word under D < I < M."""
    s1, s2 = _check_sequences(s1, s2)
    with np.errstate(divide="ignore"):
        log_trans = np.log(p.trans)
        log_match = np.log(p.emit_match)
        log_ins = np.log(p.emit_insert)
        log_del = np.log(p.emit_delete)

    def emit(state, i, j):
        if state == "M":
            return float(log_match[_NUC_INDEX[s1[i - 1]], _NUC_INDEX[s2[j - 1]]])
        if state == "I":
            return float(log_ins[_NUC_INDEX[s2[j - 1]]])
        return float(log_del[_NUC_INDEX[s1[i - 1]]])

    def trans(a, b):
        return float(log_trans[_S[a], _S[b]])

    score, cell = _grid_dp(_MaxPlusGrid(trans, emit), len(s1), len(s2))
    return ScoredAlignment("".join(_word_of(cell)), float(score))


def score_alignment_basic(scheme: ScoringScheme, s1: str, s2: str) -> ScoredAlignment:
    """Best alignment under +1 match / -mismatch / -gap position scores.

    By construction this is :func:`viterbi_alignment` on
    :func:`scoring_scheme_params`, whose logs are exactly these position
    scores with zero transition weights; the reported score re-scores
    the word in exact position arithmetic.
    """
    s1, s2 = _check_sequences(s1, s2)
    best = viterbi_alignment(scoring_scheme_params(scheme), s1, s2)
    matches = mismatches = indels = 0
    i = j = 0
    for state in best.word:
        if state == "M":
            i += 1
            j += 1
            if s1[i - 1] == s2[j - 1]:
                matches += 1
            else:
                mismatches += 1
        else:
            i, j = (i + 1, j) if state == "D" else (i, j + 1)
            indels += 1
    score = matches - scheme.mismatch * mismatches - scheme.gap * indels
    return ScoredAlignment(best.word, float(score))


def parametric_polygon(s1: str, s2: str) -> ParametricPolygon:
    """Lattice polygon of achievable (mismatch, indel) counts.

    Every optimal alignment under any choice of mismatch/gap penalties
    sits at a vertex of this polygon, so it partitions the penalty plane
    into regions of constant optimal alignment.  Each vertex carries its
    lexicographically smallest witness alignment.
    """
    s1, s2 = _check_sequences(s1, s2)
    final = _grid_dp(_PolygonGrid(s1, s2), len(s1), len(s2))
    polygon = LatticePolygon.from_points(final.keys())
    witnesses = tuple("".join(_word_of(final[v])) for v in polygon.vertices)
    return ParametricPolygon(polygon=polygon, witnesses=witnesses)


def format_alignment(word: str, s1: str, s2: str) -> str:
    """Two-row gapped rendering of an alignment word."""
    validate_alignment(word, len(s1), len(s2))
    top, bottom = [], []
    i = j = 0
    for state in word:
        if state == "M":
            top.append(s1[i]); bottom.append(s2[j])
            i += 1; j += 1
        elif state == "I":
            top.append("-"); bottom.append(s2[j])
            j += 1
        else:
            top.append(s1[i]); bottom.append("-")
            i += 1
    return "".join(top) + "\n" + "".join(bottom)
