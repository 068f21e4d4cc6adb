"""Shared test helpers: independent geometry oracles and random-model
generators used across the suite."""

from __future__ import annotations

import numpy as np
import pytest

from phylokit.treespace import random_binary_tree


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))


# ---------------------------------------------------------------------------
# gift-wrapping convex hull: an independent check of the package's
# monotone-chain hull


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def gift_wrap_hull(points) -> tuple:
    """Jarvis-march hull, counter-clockwise from the lexicographically
    smallest vertex, collinear points dropped."""
    pts = sorted({(int(x), int(y)) for x, y in points})
    if len(pts) <= 2:
        return tuple(pts)
    start = pts[0]
    hull = [start]
    cur = start
    while True:
        cand = None
        for p in pts:
            if p == cur:
                continue
            if cand is None:
                cand = p
                continue
            turn = _cross(cur, cand, p)
            far = (p[0] - cur[0]) ** 2 + (p[1] - cur[1]) ** 2 > (
                cand[0] - cur[0]
            ) ** 2 + (cand[1] - cur[1]) ** 2
            if turn < 0 or (turn == 0 and far):
                cand = p
        if cand == start:
            break
        hull.append(cand)
        cur = cand
        if len(hull) > len(pts):  # pragma: no cover - guards a broken oracle
            raise AssertionError("gift wrapping failed to close")
    return tuple(hull)


def random_tree(seed: int, n: int, min_length=0.05, max_length=1.0):
    taxa = [f"t{i:02d}" for i in range(n)]
    return random_binary_tree(taxa, rng(seed), min_length, max_length)


@pytest.fixture
def fixed_rng():
    return rng(20240901)


def pytest_runtest_logreport(report):
    # one visible line per acceptance criterion, independent of -s
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    digits = "".join(c for c in name.partition("_criterion_")[2] if c.isdigit())
    if report.passed:
        import test_acceptance

        detail = test_acceptance.MESSAGES.get(int(digits or 0), name)
        print(f"\nACCEPTANCE {digits or '?'}: PASS - {detail}")
    elif report.failed:
        print(f"\nACCEPTANCE {digits or '?'}: FAIL - {name}")
