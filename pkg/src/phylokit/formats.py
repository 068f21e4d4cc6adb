"""File formats: Newick trees, square PHYLIP / JSON distance matrices,
FASTA records, JSON parameter files, and access to the bundled data
files.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .hmm import HmmParams
from .pairhmm import PairHmmParams
from .trees import PhyloTree
from .treespace import DissimilarityMap, MDissimilarityMap


# ---------------------------------------------------------------------------
# Newick

_NAME_END = set(":,()[];' \t\n\r")


class _NewickParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        raise ValueError(f"{message} at character {self.pos}")

    def peek(self) -> str:
        self._skip_ws()
        if self.pos >= len(self.text):
            self.error("unexpected end of input")
        return self.text[self.pos]

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t\n\r":
            self.pos += 1

    def take(self, expected: str):
        if self.peek() != expected:
            self.error(f"expected {expected!r}, found {self.text[self.pos]!r}")
        self.pos += 1

    def name(self) -> str:
        self._skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _NAME_END:
            self.pos += 1
        return self.text[start:self.pos]

    def length(self) -> float:
        self._skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == ":":
            self.pos += 1
            self._skip_ws()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos] not in ",()[];":
                self.pos += 1
            raw = self.text[start:self.pos].strip()
            try:
                return float(raw)
            except ValueError:
                self.pos = start
                self.error(f"invalid branch length {raw!r}")
        return 0.0


def parse_newick(text: str) -> PhyloTree:
    """Parse one Newick tree.

    Branch lengths default to 0; internal-node labels are accepted and
    ignored.  Malformed input raises a ValueError that names the
    character offset.  A rooted two-child top level is kept as a
    degree-2 node; it subdivides the root edge without changing the
    unrooted tree.
    """
    parser = _NewickParser(text)
    tree = PhyloTree()

    def subtree() -> int:
        if parser.peek() == "(":
            parser.take("(")
            node = tree.add_node()
            while True:
                child = subtree()
                length = parser.length()
                tree.add_edge(node, child, max(length, 0.0))
                if parser.peek() == ",":
                    parser.take(",")
                    continue
                parser.take(")")
                break
            parser.name()  # optional internal label, discarded
            return node
        label = parser.name()
        if not label:
            parser.error("expected a leaf label")
        try:
            return tree.add_node(label=label)
        except ValueError as exc:
            parser.error(str(exc))

    root = subtree()
    parser.length()  # tolerate a stray root length
    parser._skip_ws()
    if parser.pos < len(parser.text):
        if parser.text[parser.pos] == ";":
            parser.pos += 1
            parser._skip_ws()
        else:
            parser.error(f"unexpected {parser.text[parser.pos]!r}")
    if parser.pos != len(parser.text):
        parser.error("trailing characters after tree")
    if tree.degree(root) == 1 and not tree.is_leaf(root):
        raise ValueError("root has a single child; not a valid unrooted tree")
    if len(tree.taxa) < 2:
        raise ValueError("tree must have at least two leaves")
    return tree


def emit_newick(tree: PhyloTree, decimals: int = 6) -> str:
    """Deterministic Newick text: degree-2 nodes are suppressed, the
    tree is written from the internal node next to the alphabetically
    first taxon, children are ordered by their smallest descendant
    taxon, and lengths carry a fixed number of decimals."""
    collapsed = tree.suppress_unifurcations()
    taxa = collapsed.taxa
    if len(taxa) < 2:
        raise ValueError("tree must have at least two leaves")
    fmt = f"%.{decimals}f"
    if len(taxa) == 2:
        a, b = taxa
        ln = collapsed.edge_length(collapsed.node_of(a), collapsed.node_of(b))
        return f"({a}:{fmt % ln},{b}:{fmt % 0.0});"

    first = collapsed.node_of(taxa[0])
    root = next(iter(collapsed.neighbors(first)))

    def render(node: int, parent: int) -> tuple[str, str]:
        if collapsed.is_leaf(node):
            label = collapsed.label_of(node)
            return label, label
        parts = sorted(
            render(child, node) + (collapsed.edge_length(node, child),)
            for child in collapsed.neighbors(node)
            if child != parent
        )
        text = ",".join(f"{t}:{fmt % ln}" for _, t, ln in parts)
        return parts[0][0], f"({text})"

    parts = sorted(
        render(child, root) + (collapsed.edge_length(root, child),)
        for child in collapsed.neighbors(root)
    )
    body = ",".join(f"{t}:{fmt % ln}" for _, t, ln in parts)
    return f"({body});"


# ---------------------------------------------------------------------------
# distance matrices


def parse_distance_matrix(text: str) -> DissimilarityMap:
    """Square PHYLIP or JSON ({"taxa": [...], "matrix": [[...]]})
    distance matrix.  Must be symmetric within 1e-9 with a zero
    diagonal; violations are reported with the offending entries."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        try:
            taxa = [str(t) for t in data["taxa"]]
            matrix = np.array(data["matrix"], dtype=float)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"distance JSON needs taxa and matrix: {exc}") from None
        return DissimilarityMap(taxa=tuple(taxa), values=matrix)

    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty distance matrix")
    try:
        n = int(lines[0].split()[0])
    except ValueError:
        raise ValueError(
            f"first line must give the taxon count, got {lines[0]!r}"
        ) from None
    if len(lines) != n + 1:
        raise ValueError(f"expected {n} matrix rows, found {len(lines) - 1}")
    taxa, rows = [], []
    for line in lines[1:]:
        fields = line.split()
        if len(fields) != n + 1:
            raise ValueError(
                f"row {fields[0] if fields else '?'!r} needs a name and {n} values"
            )
        taxa.append(fields[0])
        try:
            rows.append([float(v) for v in fields[1:]])
        except ValueError:
            raise ValueError(f"non-numeric entry in row {fields[0]!r}") from None
    return DissimilarityMap(taxa=tuple(taxa), values=np.array(rows))


def format_distance_matrix(dm: DissimilarityMap, style: str = "phylip") -> str:
    if style == "phylip":
        lines = [str(dm.size)]
        for i, taxon in enumerate(dm.taxa):
            row = " ".join(f"{v:.6f}" for v in dm.values[i])
            lines.append(f"{taxon:<10s} {row}")
        return "\n".join(lines) + "\n"
    if style == "json":
        return json.dumps(
            {"taxa": list(dm.taxa), "matrix": dm.values.tolist()}, indent=2
        )
    raise ValueError(f"unknown style {style!r}")


# ---------------------------------------------------------------------------
# m-dissimilarity maps (JSON)


def parse_m_dissimilarity(text: str) -> MDissimilarityMap:
    """JSON 3-taxon-subset maps: {"taxa": [...], "m": 3,
    "values": {"a,b,c": 1.25, ...}} with comma-joined subset keys."""
    data = json.loads(text)
    try:
        taxa = tuple(str(t) for t in data["taxa"])
        m = int(data["m"])
        values = {
            frozenset(key.split(",")): float(v) for key, v in data["values"].items()
        }
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"m-dissimilarity JSON needs taxa, m, values: {exc}") from None
    return MDissimilarityMap(taxa=taxa, m=m, values=values)


def format_m_dissimilarity(md: MDissimilarityMap) -> str:
    values = {
        ",".join(sorted(subset)): value for subset, value in md.values.items()
    }
    return json.dumps(
        {"taxa": list(md.taxa), "m": md.m, "values": dict(sorted(values.items()))},
        indent=2,
    )


# ---------------------------------------------------------------------------
# FASTA


def read_fasta(text: str) -> list[tuple[str, str]]:
    """(name, sequence) records; names are the first whitespace-separated
    token after '>'."""
    records: list[tuple[str, list[str]]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith(">"):
            name = line[1:].split()[0] if line[1:].split() else ""
            if not name:
                raise ValueError(f"unnamed FASTA record at line {lineno}")
            records.append((name, []))
        else:
            if not records:
                raise ValueError(f"sequence before any '>' header at line {lineno}")
            records[-1][1].append(line)
    if not records:
        raise ValueError("no FASTA records found")
    return [(name, "".join(chunks).upper()) for name, chunks in records]


def write_fasta(records, width: int = 70) -> str:
    lines = []
    for name, seq in records:
        lines.append(f">{name}")
        for start in range(0, len(seq), width):
            lines.append(seq[start:start + width])
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# parameter files


def hmm_params_from_json(text: str) -> HmmParams:
    return HmmParams.from_dict(json.loads(text))


def hmm_params_to_json(params: HmmParams) -> str:
    return json.dumps(params.to_dict(), indent=2)


def pair_params_from_json(text: str) -> PairHmmParams:
    return PairHmmParams.from_dict(json.loads(text))


def pair_params_to_json(params: PairHmmParams) -> str:
    return json.dumps(params.to_dict(), indent=2)


# ---------------------------------------------------------------------------
# bundled data


def read_bundled(name: str) -> str:
    """Contents of a file in the package's data directory."""
    return (resources.files("phylokit") / "data" / name).read_text()


def bundled_distance_matrix() -> DissimilarityMap:
    """The ten-vertebrate pairwise distance matrix shipped with the
    package (fourfold-degenerate-site estimates)."""
    return parse_distance_matrix(read_bundled("vertebrates10.phy"))


def bundled_reference_tree() -> PhyloTree:
    """The ten-vertebrate reference tree shipped with the package."""
    return parse_newick(read_bundled("vertebrates10.nwk"))
