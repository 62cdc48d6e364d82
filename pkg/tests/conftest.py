"""Shared corpora for the unit and acceptance suites."""

from __future__ import annotations

import numpy as np
import pytest

from metricvote import instances as inst
from metricvote.core import truncate_to_ktop


def _size_plan(rng: np.random.Generator) -> list[tuple[int, int, int]]:
    """200 (n, m, dim) triples skewed small with a heavy tail up to (200, 16)."""
    plan = []
    for _ in range(140):
        plan.append((int(rng.integers(8, 61)), int(rng.integers(3, 9)), int(rng.integers(1, 4))))
    for _ in range(40):
        plan.append((int(rng.integers(20, 121)), int(rng.integers(9, 13)), int(rng.integers(1, 4))))
    for _ in range(18):
        plan.append((int(rng.integers(40, 201)), int(rng.integers(13, 17)), int(rng.integers(1, 4))))
    plan.append((200, 16, 2))  # both bounds realised
    plan.append((197, 13, 3))
    return plan


@pytest.fixture(scope="session")
def euclidean_corpus():
    """200 seeded Euclidean instances with ground-truth witnesses (n <= 200, m <= 16)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(20240601)))
    corpus = []
    for i, (n, m, dim) in enumerate(_size_plan(rng)):
        corpus.append(inst.euclidean(n, m, dim, seed=1000 + i))
    return corpus


@pytest.fixture(scope="session")
def small_lp_corpus():
    """100 instances with n <= 12, m <= 4: full rankings, k-top, and induced."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(77)))
    corpus = []
    for i in range(40):
        n = int(rng.integers(1, 13))
        m = int(rng.integers(2, 5))
        corpus.append(inst.impartial_culture(n, m, seed=300 + i).election)
    for i in range(30):
        n = int(rng.integers(1, 13))
        m = int(rng.integers(2, 5))
        e = inst.impartial_culture(n, m, seed=500 + i).election
        k = int(rng.integers(1, m + 1))
        corpus.append(truncate_to_ktop(e, k))
    for i in range(30):
        n = int(rng.integers(1, 13))
        m = int(rng.integers(2, 5))
        dim = int(rng.integers(1, 3))
        corpus.append(inst.euclidean(n, m, dim, seed=700 + i).election)
    return corpus
