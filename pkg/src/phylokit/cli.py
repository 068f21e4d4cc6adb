"""Command-line interface.

Subcommands: pipeline, dist, nj, align, hmm, codon, tree, motif.
Exit code 0 on success, 2 on any input problem (bad files, malformed
formats, violated preconditions).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import codonmodel, hmm, pairhmm, pipeline, treespace
from .formats import (
    emit_newick,
    format_distance_matrix,
    hmm_params_from_json,
    hmm_params_to_json,
    pair_params_from_json,
    parse_distance_matrix,
    parse_m_dissimilarity,
    read_fasta,
)
from .pipeline import AlignedFasta, PipelineConfig


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_pipeline(args) -> int:
    config = PipelineConfig(
        distances=Path(args.distances) if args.distances else None,
        alignment=Path(args.alignment) if args.alignment else None,
        motif=args.motif,
        genome_length=args.genome_length,
    )
    report = pipeline.run_pipeline(config)
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
        sys.stdout.write(report.to_text())
    else:
        print(report.to_json())
    return 0


def _cmd_dist(args) -> int:
    alignment = AlignedFasta.from_text(Path(args.alignment).read_text())
    _, dm = pipeline.distances_from_alignment(alignment)
    _emit(args, format_distance_matrix(dm, style=args.format))
    return 0


def _cmd_nj(args) -> int:
    dm = parse_distance_matrix(Path(args.distances).read_text())
    tree = treespace.neighbor_join(dm)
    _emit(args, emit_newick(tree))
    return 0


def _read_pair_sequences(args) -> tuple[str, str]:
    if args.fasta:
        records = read_fasta(Path(args.fasta).read_text())
        if len(records) != 2:
            raise ValueError(f"need exactly 2 records, found {len(records)}")
        return records[0][1], records[1][1]
    if args.seq1 and args.seq2:
        return args.seq1, args.seq2
    raise ValueError("supply --fasta or both --seq1 and --seq2")


def _cmd_align(args) -> int:
    if args.align_command == "enumerate":
        words = pairhmm.enumerate_alignments(args.n, args.m, cap=args.cap)
        _emit(args, json.dumps({"count": len(words), "alignments": words}))
        return 0

    s1, s2 = _read_pair_sequences(args)
    if args.align_command == "prob":
        params = pair_params_from_json(Path(args.params).read_text())
        value = pairhmm.pair_probability(params, s1, s2)
        _emit(args, json.dumps({"probability": value}))
    elif args.align_command == "viterbi":
        params = pair_params_from_json(Path(args.params).read_text())
        best = pairhmm.viterbi_alignment(params, s1, s2)
        _emit(
            args,
            json.dumps({"alignment": best.word, "logScore": best.score})
            + "\n"
            + pairhmm.format_alignment(best.word, s1.upper(), s2.upper()),
        )
    elif args.align_command == "score":
        scheme = pairhmm.ScoringScheme(mismatch=args.mis, gap=args.gap)
        best = pairhmm.score_alignment_basic(scheme, s1, s2)
        _emit(
            args,
            json.dumps({"alignment": best.word, "score": best.score})
            + "\n"
            + pairhmm.format_alignment(best.word, s1.upper(), s2.upper()),
        )
    else:  # polygon
        poly = pairhmm.parametric_polygon(s1, s2)
        _emit(args, json.dumps(poly.to_dict()))
    return 0


def _encode_observations(lines: list[str], alphabet: str) -> list[list[int]]:
    index = {c: i for i, c in enumerate(alphabet)}
    out = []
    for lineno, line in enumerate(lines, 1):
        try:
            out.append([index[c] for c in line])
        except KeyError as exc:
            raise ValueError(
                f"symbol {exc.args[0]!r} on line {lineno} is not in the "
                f"alphabet {alphabet!r}"
            ) from None
    return out


def _cmd_hmm(args) -> int:
    params = hmm_params_from_json(Path(args.params).read_text())
    lines = [
        line.strip()
        for line in Path(args.observations).read_text().splitlines()
        if line.strip()
    ]
    if not lines:
        raise ValueError("no observations found")
    alphabet = args.alphabet or ("ACGT" if params.l == 4 else "")
    if alphabet:
        if len(alphabet) != params.l:
            raise ValueError(
                f"alphabet {alphabet!r} does not match emission width {params.l}"
            )
        encoded = _encode_observations(lines, alphabet)
    else:
        encoded = [[int(c) for c in line] for line in lines]

    if args.hmm_command == "forward":
        rows = [
            {
                "observation": line,
                "probability": hmm.forward_probability(params, obs),
                "logProbability": hmm.log_forward(params, obs),
            }
            for line, obs in zip(lines, encoded)
        ]
        _emit(args, json.dumps(rows))
    elif args.hmm_command == "viterbi":
        rows = []
        for line, obs in zip(lines, encoded):
            expl = hmm.viterbi_explanation(params, obs)
            rows.append(
                {"observation": line, "path": expl.path, "logScore": expl.log_score}
            )
        _emit(args, json.dumps(rows))
    else:  # train
        trained, trace = hmm.baum_welch_train(
            params, encoded, max_iters=args.max_iters, tol=args.tol
        )
        payload = hmm_params_to_json(trained)
        if args.out:
            Path(args.out).write_text(payload + "\n")
        else:
            print(payload)
        print(
            json.dumps(
                {"iterations": len(trace) - 1, "logLikelihood": trace},
            ),
            file=sys.stderr,
        )
    return 0


def _cmd_codon(args) -> int:
    records = read_fasta(Path(args.fasta).read_text())
    table = np.zeros((4, 4, 4), dtype=np.int64)
    for _, seq in records:
        table += codonmodel.codon_counts_from_sequence(seq).counts
    counts = codonmodel.CodonCounts(table)
    report = codonmodel.independence_test(counts)
    diag = codonmodel.segre_residual(counts.frequency_table())
    _emit(
        args,
        json.dumps(
            {
                "codons": counts.total,
                "g2": report.g2,
                "chi2": report.chi2,
                "df": report.df,
                "sigma2": diag.sigma2,
                "maxMinor": diag.max_minor,
            }
        ),
    )
    return 0


def _cmd_tree(args) -> int:
    if args.tree_command == "fourpoint":
        dm = parse_distance_matrix(Path(args.distances).read_text())
        verdict = treespace.check_four_point(dm)
        metric = treespace.check_metric(dm)
        _emit(
            args,
            json.dumps(
                {
                    "isTreeMetric": bool(verdict) and bool(metric),
                    "fourPoint": bool(verdict),
                    "fourPointViolation": verdict.violation,
                    "metric": bool(metric),
                    "metricViolation": metric.violation,
                }
            ),
        )
    elif args.tree_command == "mtree":
        md = parse_m_dissimilarity(Path(args.input).read_text())
        verdict = treespace.check_m_tree(md)
        _emit(
            args,
            json.dumps(
                {
                    "isMTree": bool(verdict),
                    "vacuous": verdict.vacuous,
                    "witness": _jsonable(verdict.witness),
                }
            ),
        )
    else:  # gr36
        md = parse_m_dissimilarity(Path(args.input).read_text())
        residuals = treespace.gr36_residuals(md)
        _emit(args, json.dumps({"residuals": list(residuals)}))
    return 0


def _jsonable(obj):
    if obj is None or isinstance(obj, (str, int, float, bool)):
        return obj
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return repr(obj)


def _cmd_motif(args) -> int:
    records = read_fasta(Path(args.fasta).read_text())
    motif = args.motif
    hits = [
        {
            "taxon": name,
            "positions": pipeline.find_motif(seq.replace("-", ""), motif),
        }
        for name, seq in records
    ]
    _emit(args, json.dumps({"motif": motif, "hits": hits}))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phylokit",
        description="Phylogenomic toolkit: distances, trees, alignment, "
        "HMM decoding, codon tests, conservation probabilities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="distances -> tree -> conservation probability")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--distances", help="distance matrix (PHYLIP square or JSON)")
    src.add_argument("--alignment", help="aligned FASTA of neutral sites")
    p.add_argument("--motif", help="query motif (e.g. the conserved 42-mer)")
    p.add_argument(
        "--genome-length",
        type=float,
        default=pipeline.DEFAULT_GENOME_LENGTH,
        help="genome length used for the genome-scale estimate",
    )
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(handler=_cmd_pipeline)

    p = sub.add_parser("dist", help="pairwise corrected distances from an alignment")
    p.add_argument("--alignment", required=True)
    p.add_argument("--format", choices=("phylip", "json"), default="phylip")
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_dist)

    p = sub.add_parser("nj", help="distance-based tree building")
    nj_sub = p.add_subparsers(dest="nj_command", required=True)
    b = nj_sub.add_parser("build", help="neighbor-joining tree from a matrix")
    b.add_argument("--distances", required=True)
    b.add_argument("--out")
    b.set_defaults(handler=_cmd_nj)

    p = sub.add_parser("align", help="pairwise alignment operations")
    align_sub = p.add_subparsers(dest="align_command", required=True)
    for name, needs_params in (
        ("prob", True),
        ("viterbi", True),
        ("score", False),
        ("polygon", False),
    ):
        a = align_sub.add_parser(name)
        a.add_argument("--seq1")
        a.add_argument("--seq2")
        a.add_argument("--fasta", help="two-record FASTA instead of --seq1/--seq2")
        if needs_params:
            a.add_argument("--params", required=True, help="pair-HMM parameter JSON")
        if name == "score":
            a.add_argument("--mis", type=float, required=True)
            a.add_argument("--gap", type=float, required=True)
        a.add_argument("--out")
        a.set_defaults(handler=_cmd_align)
    e = align_sub.add_parser("enumerate")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--m", type=int, required=True)
    e.add_argument("--cap", type=int, default=pairhmm.ENUMERATION_CAP)
    e.add_argument("--out")
    e.set_defaults(handler=_cmd_align)

    p = sub.add_parser("hmm", help="hidden Markov model operations")
    hmm_sub = p.add_subparsers(dest="hmm_command", required=True)
    for name in ("forward", "viterbi", "train"):
        h = hmm_sub.add_parser(name)
        h.add_argument("--params", required=True, help="HMM parameter JSON")
        h.add_argument(
            "--observations", required=True, help="text file, one observation per line"
        )
        h.add_argument(
            "--alphabet",
            help="observation alphabet (default ACGT when l=4, else digits)",
        )
        if name == "train":
            h.add_argument("--max-iters", type=int, default=100)
            h.add_argument("--tol", type=float, default=1e-8)
        h.add_argument("--out")
        h.set_defaults(handler=_cmd_hmm)

    p = sub.add_parser("codon", help="codon-position independence diagnostics")
    codon_sub = p.add_subparsers(dest="codon_command", required=True)
    c = codon_sub.add_parser("test")
    c.add_argument("--fasta", required=True)
    c.add_argument("--out")
    c.set_defaults(handler=_cmd_codon)

    p = sub.add_parser("tree", help="tree-metric diagnostics")
    tree_sub = p.add_subparsers(dest="tree_command", required=True)
    f = tree_sub.add_parser("fourpoint")
    f.add_argument("--distances", required=True)
    f.add_argument("--out")
    f.set_defaults(handler=_cmd_tree)
    m = tree_sub.add_parser("mtree")
    m.add_argument("--input", required=True, help="m-dissimilarity JSON")
    m.add_argument("--out")
    m.set_defaults(handler=_cmd_tree)
    g = tree_sub.add_parser("gr36")
    g.add_argument("--input", required=True, help="3-dissimilarity JSON on six taxa")
    g.add_argument("--out")
    g.set_defaults(handler=_cmd_tree)

    p = sub.add_parser("motif", help="exact motif search")
    motif_sub = p.add_subparsers(dest="motif_command", required=True)
    mm = motif_sub.add_parser("find")
    mm.add_argument("--fasta", required=True)
    mm.add_argument(
        "--motif",
        default=pipeline.CONSERVED_ELEMENT_42,
        help="query (default: the conserved 42-mer)",
    )
    mm.add_argument("--out")
    mm.set_defaults(handler=_cmd_motif)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
