"""Forward likelihood against exhaustive path sums, decoding against
exhaustive arg-max with the same tie rule, and training monotonicity."""

import itertools
import math

import numpy as np
import pytest

from phylokit.hmm import (
    HmmParams,
    baum_welch_train,
    forward_probability,
    log_forward,
    uniform_params,
    viterbi_explanation,
)

from conftest import rng


def _random_params(g, k, l, mode="stochastic") -> HmmParams:
    trans = g.random((k, k)) + 0.05
    trans /= trans.sum(axis=1, keepdims=True)
    emit = g.random((k, l)) + 0.05
    emit /= emit.sum(axis=1, keepdims=True)
    if mode == "stochastic":
        init = g.random(k) + 0.05
        init /= init.sum()
    else:
        init = np.ones(k)
    return HmmParams(trans=trans, emit=emit, init=init, mode=mode)


def _enum_forward(h: HmmParams, obs) -> float:
    total = 0.0
    for path in itertools.product(range(h.k), repeat=len(obs)):
        term = h.init[path[0]] * h.emit[path[0], obs[0]]
        for t in range(1, len(obs)):
            term = term * h.trans[path[t - 1], path[t]] * h.emit[path[t], obs[t]]
        total += term
    return total


def _enum_viterbi(h: HmmParams, obs):
    best_score, best_word = None, None
    for path in itertools.product(range(h.k), repeat=len(obs)):
        score = math.log(h.init[path[0]]) + math.log(h.emit[path[0], obs[0]])
        for t in range(1, len(obs)):
            score = score + math.log(h.trans[path[t - 1], path[t]])
            score = score + math.log(h.emit[path[t], obs[t]])
        word = tuple(h.labels[i] for i in path)
        if (
            best_score is None
            or score > best_score
            or (score == best_score and word < best_word)
        ):
            best_score, best_word = score, word
    return best_word, best_score


# ---------------------------------------------------------------------------
# forward


def test_forward_single_state_is_emission_product():
    h = HmmParams(
        trans=[[1.0]],
        emit=[[0.2, 0.3, 0.4, 0.1]],
        init=[1.0],
        mode="stochastic",
    )
    assert forward_probability(h, [0, 2, 2, 1]) == pytest.approx(
        0.2 * 0.4 * 0.4 * 0.3, rel=1e-12
    )


def test_forward_length_one_unit_initial_sums_emissions():
    g = rng(41)
    h = _random_params(g, 3, 4, mode="unit-initial")
    assert forward_probability(h, [2]) == pytest.approx(
        float(h.emit[:, 2].sum()), rel=1e-12
    )


def test_forward_matches_exhaustive_path_sum():
    g = rng(42)
    for trial in range(10):
        mode = "stochastic" if trial % 2 else "unit-initial"
        h = _random_params(g, 2, 3, mode=mode)
        obs = [int(x) for x in g.integers(0, 3, size=6)]
        assert forward_probability(h, obs) == pytest.approx(
            _enum_forward(h, obs), rel=1e-12
        )


def test_forward_agrees_with_generic_chain_evaluator():
    # the scaled forward and the probability-semiring chain fold are the
    # same sum computed two ways
    from phylokit.semirings import ChainSpec, evaluate_chain

    g = rng(52)
    h = _random_params(g, 3, 4)
    obs = [int(x) for x in g.integers(0, 4, size=9)]
    initial = tuple(h.init * h.emit[:, obs[0]])
    steps = tuple(
        tuple(map(tuple, h.trans * h.emit[:, s][None, :])) for s in obs[1:]
    )
    chain_value = evaluate_chain(ChainSpec(initial=initial, steps=steps), "prob")
    assert forward_probability(h, obs) == pytest.approx(
        float(chain_value.value), rel=1e-12
    )


def test_forward_sums_to_one_in_stochastic_mode():
    g = rng(43)
    h = _random_params(g, 2, 2)
    for n in (1, 4, 8):
        total = sum(
            forward_probability(h, list(obs))
            for obs in itertools.product(range(2), repeat=n)
        )
        assert total == pytest.approx(1.0, abs=1e-9)


def test_forward_sums_to_k_in_unit_initial_mode():
    g = rng(44)
    for k in (1, 2, 3):
        h = _random_params(g, k, 2, mode="unit-initial")
        total = sum(
            forward_probability(h, list(obs))
            for obs in itertools.product(range(2), repeat=5)
        )
        assert total == pytest.approx(float(k), abs=1e-9)


def test_forward_input_validation():
    h = uniform_params(2, 4)
    with pytest.raises(ValueError):
        forward_probability(h, [])
    with pytest.raises(ValueError, match="symbol 4"):
        forward_probability(h, [0, 4])


def test_log_forward_handles_deep_underflow():
    h = uniform_params(2, 4)
    obs = [0] * 4000
    assert log_forward(h, obs) == pytest.approx(4000 * math.log(0.25), rel=1e-12)
    assert forward_probability(h, obs) == 0.0  # underflows as a plain float


# ---------------------------------------------------------------------------
# decoding


def test_viterbi_total_tie_gives_lexicographically_smallest_path():
    h = uniform_params(3, 2)
    expl = viterbi_explanation(h, [0, 1, 0, 1])
    assert expl.states == ("0",) * 4
    named = HmmParams(
        trans=np.full((2, 2), 0.5),
        emit=np.full((2, 4), 0.25),
        init=np.array([0.5, 0.5]),
        labels=("intron", "exon"),
    )
    assert viterbi_explanation(named, [0, 1]).states == ("exon", "exon")


def test_viterbi_single_state():
    h = HmmParams(trans=[[1.0]], emit=[[0.25, 0.75]], init=[1.0])
    expl = viterbi_explanation(h, [1, 0, 1])
    assert expl.states == ("0", "0", "0")
    assert expl.log_score == pytest.approx(
        math.log(0.75) + math.log(0.25) + math.log(0.75), rel=1e-12
    )


def test_viterbi_matches_exhaustive_argmax():
    g = rng(45)
    for trial in range(20):
        k = 2 + trial % 2
        h = _random_params(g, k, 3)
        n = 3 + trial % 4
        obs = [int(x) for x in g.integers(0, 3, size=n)]
        expl = viterbi_explanation(h, obs)
        word, score = _enum_viterbi(h, obs)
        assert expl.states == word
        assert expl.log_score == pytest.approx(score, rel=1e-12)


def test_viterbi_structured_ties_match_enumeration():
    # mirror-symmetric emissions force exact score ties between whole
    # families of paths; the decoder must still pick the enumeration's
    # lexicographic minimum
    g = rng(53)
    for _ in range(20):
        p = float(g.random() * 0.8 + 0.1)
        h = HmmParams(
            trans=np.full((2, 2), 0.5),
            emit=np.array([[p, 1 - p], [1 - p, p]]),
            init=np.array([0.5, 0.5]),
        )
        obs = [int(x) for x in g.integers(0, 2, size=7)]
        word, score = _enum_viterbi(h, obs)
        expl = viterbi_explanation(h, obs)
        assert expl.states == word
        assert expl.log_score == pytest.approx(score, rel=1e-12)


def test_viterbi_rescoring_consistency():
    g = rng(46)
    h = _random_params(g, 3, 4)
    obs = [int(x) for x in g.integers(0, 4, size=12)]
    expl = viterbi_explanation(h, obs)
    idx = {lab: i for i, lab in enumerate(h.labels)}
    path = [idx[s] for s in expl.states]
    rescored = math.log(h.init[path[0]] * h.emit[path[0], obs[0]])
    for t in range(1, len(obs)):
        rescored += math.log(h.trans[path[t - 1], path[t]])
        rescored += math.log(h.emit[path[t], obs[t]])
    assert expl.log_score == pytest.approx(rescored, rel=1e-12)


def test_viterbi_score_never_exceeds_forward():
    g = rng(47)
    for _ in range(10):
        h = _random_params(g, 2, 2)
        obs = [int(x) for x in g.integers(0, 2, size=7)]
        assert viterbi_explanation(h, obs).log_score <= log_forward(h, obs) + 1e-12


def test_viterbi_all_paths_zero_is_an_error():
    h = HmmParams(
        trans=[[0.5, 0.5], [0.5, 0.5]],
        emit=[[1.0, 0.0], [1.0, 0.0]],
        init=[0.5, 0.5],
    )
    with pytest.raises(ValueError, match="zero probability"):
        viterbi_explanation(h, [0, 1, 0])


# ---------------------------------------------------------------------------
# training


def test_train_single_state_recovers_emission_frequencies():
    h0 = HmmParams(trans=[[1.0]], emit=[[0.25, 0.25, 0.25, 0.25]], init=[1.0])
    data = [[0, 1, 1, 2], [2, 1, 0, 0]]
    trained, trace = baum_welch_train(h0, data, max_iters=50, tol=1e-10)
    counts = np.bincount([s for obs in data for s in obs], minlength=4)
    assert np.allclose(trained.emit[0], counts / counts.sum(), atol=1e-12)
    assert len(trace) <= 4  # converges immediately after one update


def test_train_repeated_symbol_concentrates_emission():
    g = rng(48)
    h0 = _random_params(g, 2, 3)
    trained, _ = baum_welch_train(h0, [[1] * 12] * 4, max_iters=50, tol=0.0)
    assert trained.emit[:, 1].max() >= 0.99


def test_train_loglikelihood_monotone_and_deterministic():
    g = rng(49)
    planted = _random_params(g, 2, 2)
    data = []
    for _ in range(20):
        n = 10
        states = [int(g.integers(2))]
        for _ in range(n - 1):
            states.append(int(g.random() > planted.trans[states[-1], 0]))
        data.append(
            [int(g.random() > planted.emit[s, 0]) for s in states]
        )
    h0 = _random_params(g, 2, 2)
    trained, trace = baum_welch_train(h0, data, max_iters=40, tol=1e-12)
    diffs = np.diff(trace)
    assert (diffs >= -1e-9).all()
    assert trace[-1] >= trace[0]
    rerun, trace2 = baum_welch_train(h0, data, max_iters=40, tol=1e-12)
    assert trace2 == trace
    assert (rerun.trans == trained.trans).all()
    assert (rerun.emit == trained.emit).all()
    assert (rerun.init == trained.init).all()


def test_train_input_validation():
    h0 = uniform_params(2, 2)
    with pytest.raises(ValueError, match="empty"):
        baum_welch_train(h0, [])
    with pytest.raises(ValueError, match="symbol"):
        baum_welch_train(h0, [[0, 3]])
    unit = uniform_params(2, 2, mode="unit-initial")
    with pytest.raises(ValueError, match="stochastic"):
        baum_welch_train(unit, [[0, 1]])


# ---------------------------------------------------------------------------
# parameter validation and round-trips


def test_params_validation():
    with pytest.raises(ValueError, match="sum to 1"):
        HmmParams(trans=[[0.5, 0.4], [0.5, 0.5]], emit=np.full((2, 2), 0.5), init=[0.5, 0.5])
    with pytest.raises(ValueError, match="non-negative"):
        HmmParams(trans=[[1.5, -0.5], [0.5, 0.5]], emit=np.full((2, 2), 0.5), init=[0.5, 0.5])
    with pytest.raises(ValueError, match="initial"):
        HmmParams(trans=np.eye(2), emit=np.full((2, 2), 0.5), init=[0.9, 0.9])
    with pytest.raises(ValueError, match="mode"):
        HmmParams(trans=np.eye(2), emit=np.full((2, 2), 0.5), init=[0.5, 0.5], mode="x")


def test_params_dict_round_trip():
    g = rng(50)
    h = _random_params(g, 2, 4)
    again = HmmParams.from_dict(h.to_dict())
    assert (again.trans == h.trans).all()
    assert (again.emit == h.emit).all()
    assert (again.init == h.init).all()
    assert again.mode == h.mode and again.labels == h.labels
    with pytest.raises(ValueError, match="declared k=3"):
        bad = h.to_dict() | {"k": 3}
        HmmParams.from_dict(bad)
