"""Homogeneous hidden Markov models: forward likelihood, max-plus
decoding of the best hidden path, and expectation-maximization training.

Two initial-weight conventions are supported.  In ``"stochastic"`` mode
the initial vector is a probability distribution and the model sums to 1
over all observation strings of a given length.  In ``"unit-initial"``
mode every state gets initial weight 1, so the same sum equals the
number of hidden states; this is the convention under which the model
polynomial is a sum of k^n monomials with no initial-distribution
factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .semirings import ChainSpec, evaluate_chain

MODES = ("stochastic", "unit-initial")

_ROW_TOL = 1e-9


@dataclass(frozen=True)
class HmmParams:
    """Transition matrix ``trans`` (k x k), emission matrix ``emit``
    (k x l), initial weights ``init`` (length k) and the mode that fixes
    their normalization.  ``labels`` names the hidden states; their
    alphabetical order is the tie-breaking order for decoding.
    """

    trans: np.ndarray
    emit: np.ndarray
    init: np.ndarray
    mode: str = "stochastic"
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        trans = np.asarray(self.trans, dtype=float)
        emit = np.asarray(self.emit, dtype=float)
        if trans.ndim != 2 or trans.shape[0] != trans.shape[1]:
            raise ValueError(f"transition table must be square, got {trans.shape}")
        k = trans.shape[0]
        if emit.ndim != 2 or emit.shape[0] != k:
            raise ValueError(
                f"emission table must have {k} rows, got shape {emit.shape}"
            )
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        init = (
            np.asarray(self.init, dtype=float)
            if self.init is not None
            else _default_init(k, self.mode)
        )
        if init.shape != (k,):
            raise ValueError(f"initial vector must have length {k}")
        if (trans < 0).any() or (emit < 0).any() or (init < 0).any():
            raise ValueError("parameters must be non-negative")
        if np.abs(trans.sum(axis=1) - 1.0).max() > _ROW_TOL:
            raise ValueError("transition rows must sum to 1")
        if np.abs(emit.sum(axis=1) - 1.0).max() > _ROW_TOL:
            raise ValueError("emission rows must sum to 1")
        if self.mode == "stochastic":
            if abs(init.sum() - 1.0) > _ROW_TOL:
                raise ValueError("stochastic mode needs initial weights summing to 1")
        else:
            if np.abs(init - 1.0).max() > _ROW_TOL:
                raise ValueError("unit-initial mode needs all initial weights equal to 1")
        labels = self.labels
        if labels is None:
            labels = tuple(str(i) for i in range(k))
        elif len(labels) != k:
            raise ValueError(f"expected {k} state labels")
        elif len(set(labels)) != k:
            raise ValueError("state labels must be distinct")
        for arr in (trans, emit, init):
            arr.setflags(write=False)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "emit", emit)
        object.__setattr__(self, "init", init)
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def k(self) -> int:
        return self.trans.shape[0]

    @property
    def l(self) -> int:
        return self.emit.shape[1]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "S": self.trans.tolist(),
            "T": self.emit.tolist(),
            "init": self.init.tolist(),
            "mode": self.mode,
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HmmParams":
        params = cls(
            trans=np.array(data["S"], dtype=float),
            emit=np.array(data["T"], dtype=float),
            init=np.array(data["init"], dtype=float) if "init" in data else None,
            mode=data.get("mode", "stochastic"),
            labels=tuple(data["labels"]) if "labels" in data else None,
        )
        for name in ("k", "l"):
            if name in data and data[name] != getattr(params, name):
                raise ValueError(
                    f"declared {name}={data[name]} does not match tables"
                )
        return params


def _default_init(k: int, mode: str) -> np.ndarray:
    return np.ones(k) if mode == "unit-initial" else np.full(k, 1.0 / k)


def uniform_params(k: int, l: int, mode: str = "stochastic") -> HmmParams:
    """All-uniform model, mostly useful as a degenerate test point."""
    return HmmParams(
        trans=np.full((k, k), 1.0 / k),
        emit=np.full((k, l), 1.0 / l),
        init=_default_init(k, mode),
        mode=mode,
    )


@dataclass(frozen=True)
class Explanation:
    """Hidden-state path decoded for one observation, with the log of
    its single path term."""

    states: tuple[str, ...]
    log_score: float

    @property
    def path(self) -> str:
        return "".join(self.states)


def _check_observation(h: HmmParams, obs) -> np.ndarray:
    arr = np.asarray(obs, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("observation must be a nonempty symbol sequence")
    if arr.min() < 0 or arr.max() >= h.l:
        bad = int(arr[(arr < 0) | (arr >= h.l)][0])
        raise ValueError(f"symbol {bad} outside alphabet of size {h.l}")
    return arr


def log_forward(h: HmmParams, obs) -> float:
    """log of the total probability of the observation, summed over all
    k^n hidden paths.  Rescales at every position, so it is safe far
    below double-precision underflow."""
    sigma = _check_observation(h, obs)
    alpha = h.init * h.emit[:, sigma[0]]
    log_prob = 0.0
    for t in range(len(sigma)):
        if t > 0:
            alpha = (alpha @ h.trans) * h.emit[:, sigma[t]]
        scale = alpha.sum()
        if scale == 0.0:
            return float("-inf")
        log_prob += np.log(scale)
        alpha = alpha / scale
    return float(log_prob)


def forward_probability(h: HmmParams, obs) -> float:
    """Probability of the observation under the model (sum over all
    hidden paths of the path term)."""
    return float(np.exp(log_forward(h, obs)))


def viterbi_explanation(h: HmmParams, obs) -> Explanation:
    """Best hidden path: the arg-max of the log path term, ties broken
    by the alphabetically smallest state-label sequence."""
    sigma = _check_observation(h, obs)
    with np.errstate(divide="ignore"):
        log_trans = np.log(h.trans)
        log_emit = np.log(h.emit)
        log_init = np.log(h.init)
    initial = tuple(log_init + log_emit[:, sigma[0]])
    steps = tuple(
        tuple(map(tuple, log_trans + log_emit[:, s][None, :])) for s in sigma[1:]
    )
    result = evaluate_chain(
        ChainSpec(initial=initial, steps=steps, labels=h.labels), "max-plus"
    )
    if result.value == float("-inf"):
        raise ValueError("every hidden path has zero probability")
    return Explanation(states=result.path, log_score=float(result.value))


def _forward_backward(h: HmmParams, sigma: np.ndarray):
    """Scaled forward/backward tables and the sequence log-likelihood."""
    n, k = len(sigma), h.k
    alpha = np.empty((n, k))
    scales = np.empty(n)
    cur = h.init * h.emit[:, sigma[0]]
    for t in range(n):
        if t > 0:
            cur = (alpha[t - 1] @ h.trans) * h.emit[:, sigma[t]]
        scales[t] = cur.sum()
        if scales[t] == 0.0:
            raise ValueError("observation has zero probability under current model")
        alpha[t] = cur / scales[t]
    beta = np.empty((n, k))
    beta[-1] = 1.0
    for t in range(n - 2, -1, -1):
        beta[t] = (h.trans @ (h.emit[:, sigma[t + 1]] * beta[t + 1])) / scales[t + 1]
    return alpha, beta, scales, float(np.log(scales).sum())


def baum_welch_train(
    h0: HmmParams,
    data: list,
    max_iters: int = 100,
    tol: float = 1e-8,
) -> tuple[HmmParams, list[float]]:
    """Expectation-maximization for HMM parameters.

    Returns the trained parameters and the per-iteration log-likelihood
    trace (first entry scores ``h0``, last scores the returned
    parameters).  The trace is non-decreasing up to roundoff; training
    stops after ``max_iters`` updates or when the improvement drops
    below ``tol``.  States whose expected visit count is zero keep their
    previous rows.
    """
    if h0.mode != "stochastic":
        raise ValueError("training requires a stochastic-mode model")
    if not data:
        raise ValueError("training data is empty")
    sigmas = [_check_observation(h0, obs) for obs in data]

    params = h0
    trace: list[float] = []
    for _ in range(max_iters):
        k, l = params.k, params.l
        trans_num = np.zeros((k, k))
        trans_den = np.zeros(k)
        emit_num = np.zeros((k, l))
        emit_den = np.zeros(k)
        init_acc = np.zeros(k)
        total_ll = 0.0
        for sigma in sigmas:
            alpha, beta, scales, ll = _forward_backward(params, sigma)
            total_ll += ll
            gamma = alpha * beta
            gamma /= gamma.sum(axis=1, keepdims=True)
            init_acc += gamma[0]
            for t in range(len(sigma) - 1):
                xi = (
                    params.trans
                    * np.outer(
                        alpha[t],
                        params.emit[:, sigma[t + 1]] * beta[t + 1],
                    )
                    / scales[t + 1]
                )
                trans_num += xi
                trans_den += gamma[t]
            for t, s in enumerate(sigma):
                emit_num[:, s] += gamma[t]
                emit_den += gamma[t]
        trace.append(total_ll)
        if len(trace) >= 2 and trace[-1] - trace[-2] < tol:
            return params, trace

        new_trans = params.trans.copy()
        visited = trans_den > 0
        new_trans[visited] = trans_num[visited] / trans_den[visited, None]
        new_trans[visited] /= new_trans[visited].sum(axis=1, keepdims=True)
        new_emit = params.emit.copy()
        seen = emit_den > 0
        new_emit[seen] = emit_num[seen] / emit_den[seen, None]
        new_emit[seen] /= new_emit[seen].sum(axis=1, keepdims=True)
        new_init = init_acc / init_acc.sum()
        params = HmmParams(
            trans=new_trans,
            emit=new_emit,
            init=new_init,
            mode="stochastic",
            labels=params.labels,
        )

    trace.append(sum(_forward_backward(params, s)[3] for s in sigmas))
    return params, trace
