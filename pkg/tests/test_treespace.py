"""Metric and four-point checks, splits, neighbor joining round trips,
subtree-length maps with the generalized cherry criterion, the six-taxon
linear relations, and topology counting."""

import numpy as np
import pytest

from phylokit.formats import bundled_distance_matrix, bundled_reference_tree
from phylokit.treespace import (
    DissimilarityMap,
    MDissimilarityMap,
    Split,
    check_four_point,
    check_m_tree,
    check_metric,
    cherries,
    generalized_neighbor_join,
    generalized_nj_cherry,
    gr36_residuals,
    m_dissimilarity,
    neighbor_join,
    random_binary_tree,
    schroder_count,
    splits_compatible,
    splits_of_tree,
    tree_metric,
)

from conftest import random_tree, rng


def _dm(taxa, entries):
    n = len(taxa)
    values = np.zeros((n, n))
    for (a, b), v in entries.items():
        i, j = taxa.index(a), taxa.index(b)
        values[i, j] = values[j, i] = v
    return DissimilarityMap(taxa=tuple(taxa), values=values)


def _split_lengths(tree):
    """Split -> branch length for every edge of a (suppressed) tree."""
    collapsed = tree.suppress_unifurcations()
    taxa = frozenset(collapsed.taxa)
    out = {}
    for u, v, length in collapsed.edges():
        side = collapsed.leaves_beyond(u, v)
        out[Split(inside=side, taxa=taxa)] = length
    return out


# ---------------------------------------------------------------------------
# metric and four-point checks


def test_zero_map_is_a_metric():
    assert check_metric(_dm(["a", "b", "c"], {}))


def test_metric_violation_reports_first_triple():
    verdict = check_metric(
        _dm(["1", "2", "3"], {("1", "2"): 3.0, ("1", "3"): 1.0, ("2", "3"): 1.0})
    )
    assert not verdict
    assert verdict.violation == ("1", "3", "2")


def test_negative_entry_fails_the_metric_check():
    verdict = check_metric(_dm(["a", "b", "c"], {("a", "b"): -0.5}))
    assert not verdict


def test_random_tree_metrics_pass_both_checks():
    for seed in range(100):
        tree = random_tree(1000 + seed, 4 + seed % 6)
        dm = tree_metric(tree)
        assert check_metric(dm)
        assert check_four_point(dm)


def test_four_point_violation_case():
    dm = _dm(
        ["u", "v", "x", "y"],
        {
            ("u", "v"): 2.0,
            ("x", "y"): 2.0,
            ("u", "x"): 1.0,
            ("u", "y"): 1.0,
            ("v", "x"): 1.0,
            ("v", "y"): 1.0,
        },
    )
    verdict = check_four_point(dm)
    assert not verdict
    assert verdict.violation == ("u", "v", "x", "y")


def test_four_point_vacuous_below_four_taxa():
    assert check_four_point(_dm(["a", "b", "c"], {("a", "b"): 9.0}))


# ---------------------------------------------------------------------------
# tree metrics


def test_tree_metric_two_and_three_leaves():
    from phylokit.trees import PhyloTree

    tree = PhyloTree()
    root = tree.add_node()
    tree.add_edge(tree.add_node(label="a"), root, 1.5)
    tree.add_edge(tree.add_node(label="b"), root, 2.25)
    assert tree_metric(tree).get("a", "b") == pytest.approx(3.75)

    claw = PhyloTree()
    hub = claw.add_node()
    for name, b in zip("abc", (1.0, 2.0, 4.0)):
        claw.add_edge(claw.add_node(label=name), hub, b)
    dm = tree_metric(claw)
    assert dm.get("a", "b") == 3.0
    assert dm.get("a", "c") == 5.0
    assert dm.get("b", "c") == 6.0


def test_reference_tree_metric_matches_bundled_matrix_entry():
    tree = bundled_reference_tree()
    dm = tree_metric(tree)
    assert dm.get("hs", "pt") == pytest.approx(0.013, abs=1e-9)
    assert bundled_distance_matrix().get("hs", "pt") == 0.013


# ---------------------------------------------------------------------------
# splits


def test_quartet_tree_splits():
    tree = neighbor_join(
        _dm(
            ["1", "2", "3", "4"],
            {
                ("1", "2"): 2.0,
                ("1", "3"): 5.0,
                ("1", "4"): 5.0,
                ("2", "3"): 5.0,
                ("2", "4"): 5.0,
                ("3", "4"): 2.0,
            },
        )
    )
    system = splits_of_tree(tree)
    assert system.is_binary and len(system) == 5
    taxa = frozenset("1234")
    assert Split(inside=frozenset("12"), taxa=taxa) in system.as_set()


def test_star_tree_has_trivial_splits_and_flag():
    from phylokit.trees import PhyloTree

    star = PhyloTree()
    hub = star.add_node()
    for name in "abcde":
        star.add_edge(star.add_node(label=name), hub, 1.0)
    system = splits_of_tree(star)
    assert len(system) == 5
    assert not system.is_binary
    assert all(s.is_trivial for s in system)


def test_reference_tree_has_17_splits():
    system = splits_of_tree(bundled_reference_tree())
    assert len(system) == 17 == 2 * 10 - 3
    assert system.is_binary


def test_split_compatibility_cases():
    taxa = frozenset("12345")
    nested = Split(inside=frozenset("12"), taxa=taxa)
    finer = Split(inside=frozenset("1"), taxa=taxa)
    assert splits_compatible(nested, finer)
    quartet = frozenset("1234")
    crossing = Split(inside=frozenset("12"), taxa=quartet)
    other = Split(inside=frozenset("13"), taxa=quartet)
    assert not splits_compatible(crossing, other)
    with pytest.raises(ValueError):
        splits_compatible(nested, crossing)


def test_splits_of_one_tree_are_pairwise_compatible():
    tree = random_tree(1101, 8)
    system = splits_of_tree(tree)
    splits = list(system)
    for i, s1 in enumerate(splits):
        for s2 in splits[i + 1:]:
            assert splits_compatible(s1, s2)


# ---------------------------------------------------------------------------
# neighbor joining


def test_nj_three_taxa_solves_the_claw():
    dm = _dm(
        ["a", "b", "c"], {("a", "b"): 3.0, ("a", "c"): 5.0, ("b", "c"): 6.0}
    )
    tree = neighbor_join(dm)
    lengths = _split_lengths(tree)
    taxa = frozenset("abc")
    assert lengths[Split(inside=frozenset("a"), taxa=taxa)] == pytest.approx(1.0)
    assert lengths[Split(inside=frozenset("b"), taxa=taxa)] == pytest.approx(2.0)
    assert lengths[Split(inside=frozenset("c"), taxa=taxa)] == pytest.approx(4.0)


def test_nj_round_trips_random_trees():
    for seed in range(60):
        tree = random_tree(1200 + seed, 4 + seed % 9)
        dm = tree_metric(tree)
        rebuilt = neighbor_join(dm)
        assert splits_of_tree(rebuilt).as_set() == splits_of_tree(tree).as_set()
        want = _split_lengths(tree)
        got = _split_lengths(rebuilt)
        assert set(want) == set(got)
        for split, length in want.items():
            assert got[split] == pytest.approx(length, abs=1e-9)


def test_nj_first_pick_is_a_cherry_of_the_source_tree():
    # the minimizing pair of the criterion on a tree metric is a cherry
    for seed in range(40):
        tree = random_tree(1300 + seed, 6 + seed % 5)
        dm = tree_metric(tree)
        n = dm.size
        values = dm.values
        r = values.sum(axis=1)
        q = (n - 2) * values - r[:, None] - r[None, :]
        np.fill_diagonal(q, np.inf)
        i, j = np.unravel_index(int(q.argmin()), q.shape)
        pair = frozenset({dm.taxa[i], dm.taxa[j]})
        assert pair in cherries(tree)


def test_nj_reproduces_reference_tree_from_bundled_matrix():
    tree = neighbor_join(bundled_distance_matrix())
    reference = bundled_reference_tree()
    assert splits_of_tree(tree).as_set() == splits_of_tree(reference).as_set()
    got = _split_lengths(tree)
    for split, printed in _split_lengths(reference).items():
        assert abs(got[split] - printed) <= 0.002


def test_nj_total_tie_joins_lexicographically_smallest_pair():
    # equidistant taxa tie every criterion entry; the first join must be
    # the alphabetically first pair, making the run deterministic
    taxa = ("delta", "alpha", "echo", "bravo", "charlie")
    n = len(taxa)
    values = np.full((n, n), 2.0)
    np.fill_diagonal(values, 0.0)
    tree = neighbor_join(DissimilarityMap(taxa=taxa, values=values))
    assert frozenset({"alpha", "bravo"}) in cherries(tree)


def test_nj_input_validation():
    with pytest.raises(ValueError, match="at least 3"):
        neighbor_join(_dm(["a", "b"], {("a", "b"): 1.0}))
    with pytest.raises(ValueError, match="NaN"):
        DissimilarityMap(taxa=("a", "b"), values=np.array([[0, np.nan], [np.nan, 0]]))


def test_nj_clamps_negative_lengths_with_warning():
    dm = _dm(
        ["a", "b", "c", "d"],
        {
            ("a", "b"): 0.1,
            ("a", "c"): 1.0,
            ("a", "d"): 1.1,
            ("b", "c"): 0.2,
            ("b", "d"): 0.3,
            ("c", "d"): 1.2,
        },
    )
    with pytest.warns(UserWarning, match="clamping"):
        tree = neighbor_join(dm)
    assert all(length >= 0 for _, _, length in tree.edges())


# ---------------------------------------------------------------------------
# m-dissimilarity maps


def test_m2_dissimilarity_is_the_tree_metric():
    tree = random_tree(1400, 7)
    dm = tree_metric(tree)
    md = m_dissimilarity(tree, 2)
    for i, a in enumerate(dm.taxa):
        for b in dm.taxa[i + 1:]:
            assert md.get(a, b) == pytest.approx(dm.get(a, b), rel=1e-12)


def test_m_dissimilarity_rejects_out_of_range_orders():
    tree = random_tree(1399, 5)
    with pytest.raises(ValueError, match="m must lie"):
        m_dissimilarity(tree, 1)
    with pytest.raises(ValueError, match="m must lie"):
        m_dissimilarity(tree, 6)


def test_claw_3_dissimilarity_is_total_length():
    from phylokit.trees import PhyloTree

    claw = PhyloTree()
    hub = claw.add_node()
    for name, b in zip("abc", (1.0, 2.0, 4.0)):
        claw.add_edge(claw.add_node(label=name), hub, b)
    md = m_dissimilarity(claw, 3)
    assert md.get("a", "b", "c") == pytest.approx(7.0)


def test_3_dissimilarity_median_vertex_identity():
    tree = random_tree(1401, 6)
    dm = tree_metric(tree)
    md = m_dissimilarity(tree, 3)
    from itertools import combinations

    for a, b, c in combinations(dm.taxa, 3):
        expected = 0.5 * (dm.get(a, b) + dm.get(a, c) + dm.get(b, c))
        assert md.get(a, b, c) == pytest.approx(expected, rel=1e-12)


def test_generalized_cherry_at_m2_matches_pairwise_criterion():
    # the identity is a formula specialization, so it must hold for
    # arbitrary symmetric inputs, not just tree metrics
    g = rng(1402)
    taxa = tuple("abcdefg")
    n = len(taxa)
    raw = g.random((n, n)) * 5
    values = (raw + raw.T) / 2
    np.fill_diagonal(values, 0.0)
    dm = DissimilarityMap(taxa=taxa, values=values)
    md_values = {
        frozenset((a, b)): dm.get(a, b)
        for i, a in enumerate(taxa)
        for b in taxa[i + 1:]
    }
    md = MDissimilarityMap(taxa=taxa, m=2, values=md_values)
    _, table = generalized_nj_cherry(md)
    r = dm.values.sum(axis=1)
    for (a, b), q in table.items():
        i, j = dm.taxa.index(a), dm.taxa.index(b)
        expected = (n - 2) * dm.values[i, j] - r[i] - r[j]
        assert q == pytest.approx(expected, rel=1e-9)


def test_generalized_cherry_property_random_trees():
    for seed in range(60):
        tree = random_tree(1500 + seed, 8)
        md = m_dissimilarity(tree, 3)
        pair, _ = generalized_nj_cherry(md)
        assert frozenset(pair) in cherries(tree)


def test_generalized_cherry_needs_more_taxa_than_subset_size():
    values = {frozenset("abc"): 1.0}
    md = MDissimilarityMap(taxa=("a", "b", "c"), m=3, values=values)
    with pytest.raises(ValueError, match="more taxa"):
        generalized_nj_cherry(md)


def test_generalized_cherry_on_reference_tree():
    md = m_dissimilarity(bundled_reference_tree(), 3)
    pair, _ = generalized_nj_cherry(md)
    assert frozenset(pair) in {
        frozenset({"hs", "pt"}),
        frozenset({"mm", "rn"}),
        frozenset({"tn", "tr"}),
    }


def test_generalized_nj_recovers_topology():
    for seed in range(200):
        n = 5 + seed % 4
        tree = random_tree(1600 + seed, n)
        rebuilt = generalized_neighbor_join(m_dissimilarity(tree, 3))
        want = {(s.inside, s.outside) for s in splits_of_tree(tree)}
        got = {(s.inside, s.outside) for s in splits_of_tree(rebuilt)}
        assert want == got


def test_generalized_nj_four_taxa_base_case():
    # a 3-map on four taxa has a two-dimensional kernel that moves the
    # three quartet pair-sums freely, so no algorithm can recover the
    # quartet split from it; the run must still produce a valid binary
    # tree on the right taxa via the single fallback pairing
    tree = random_tree(1700, 4)
    rebuilt = generalized_neighbor_join(m_dissimilarity(tree, 3))
    assert rebuilt.taxa == tree.taxa
    assert splits_of_tree(rebuilt).is_binary


def test_generalized_nj_stable_under_tiny_noise():
    tree = random_tree(1701, 7)
    md = m_dissimilarity(tree, 3)
    g = rng(1702)
    noisy = MDissimilarityMap(
        taxa=md.taxa,
        m=3,
        values={k: v + float(g.random() - 0.5) * 2e-6 for k, v in md.values.items()},
    )
    rebuilt = generalized_neighbor_join(noisy)
    assert splits_of_tree(rebuilt).as_set() == splits_of_tree(tree).as_set()


def test_generalized_nj_rejects_unsupported_orders():
    tree = random_tree(1703, 6)
    with pytest.raises(ValueError, match="3-dissimilarity"):
        generalized_neighbor_join(m_dissimilarity(tree, 2))


# ---------------------------------------------------------------------------
# m-tree membership


def test_tree_derived_3_maps_are_m_trees():
    tree = random_tree(1800, 7)
    assert check_m_tree(m_dissimilarity(tree, 3))


def test_random_3_maps_are_rejected_with_witness():
    g = rng(1801)
    taxa = tuple("abcdefg")
    from itertools import combinations

    values = {frozenset(s): float(g.random() * 10) for s in combinations(taxa, 3)}
    verdict = check_m_tree(MDissimilarityMap(taxa=taxa, m=3, values=values))
    assert not verdict
    assert verdict.witness is not None


def test_m_tree_vacuous_flag():
    tree = random_tree(1802, 4)
    verdict = check_m_tree(m_dissimilarity(tree, 3))
    assert verdict and verdict.vacuous


def test_m2_tree_check_equals_four_point():
    tree = random_tree(1803, 6)
    md = m_dissimilarity(tree, 2)
    assert check_m_tree(md)
    dm = tree_metric(tree)
    assert check_four_point(dm)


# ---------------------------------------------------------------------------
# the six-taxon linear relations


def test_gr36_residuals_vanish_on_tree_maps():
    for seed in range(30):
        tree = random_tree(1900 + seed, 6)
        residuals = gr36_residuals(m_dissimilarity(tree, 3))
        assert max(abs(r) for r in residuals) <= 1e-10


def test_gr36_residuals_nonzero_on_random_maps():
    g = rng(1901)
    from itertools import combinations

    taxa = tuple("uvwxyz")
    hits = 0
    for _ in range(50):
        values = {frozenset(s): float(g.random() * 5) for s in combinations(taxa, 3)}
        residuals = gr36_residuals(MDissimilarityMap(taxa=taxa, m=3, values=values))
        if max(abs(r) for r in residuals) > 1e-6:
            hits += 1
    assert hits == 50


def test_gr36_residuals_invariant_under_taxon_weight_shifts():
    g = rng(1902)
    tree = random_tree(1903, 6)
    md = m_dissimilarity(tree, 3)
    base = gr36_residuals(md)
    weights = {t: float(g.random() * 3) for t in md.taxa}
    shifted = MDissimilarityMap(
        taxa=md.taxa,
        m=3,
        values={k: v + sum(weights[t] for t in k) for k, v in md.values.items()},
    )
    got = gr36_residuals(shifted)
    assert np.allclose(got, base, atol=1e-9)


def test_gr36_requires_six_taxa():
    tree = random_tree(1904, 7)
    with pytest.raises(ValueError, match="six"):
        gr36_residuals(m_dissimilarity(tree, 3))


# ---------------------------------------------------------------------------
# topology counting


def test_schroder_values():
    assert schroder_count(3) == 1
    assert schroder_count(4) == 3
    assert schroder_count(5) == 15
    assert schroder_count(10) == 2027025
    with pytest.raises(ValueError):
        schroder_count(2)


def test_random_binary_trees_are_binary():
    for seed in range(10):
        tree = random_tree(2000 + seed, 9)
        assert splits_of_tree(tree).is_binary
        internal_degrees = {
            tree.degree(v) for v in tree.nodes() if not tree.is_leaf(v)
        }
        assert internal_degrees == {3}
