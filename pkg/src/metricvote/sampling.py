"""Sampled Copeland and sampled PluralityMatching with published sample sizes.

The source guarantees are asymptotic; the exact formulas below are this
module's configuration, validated statistically (not formula-exactly) by
the acceptance suite:

- copeland mode, sampling with replacement, size forced odd:
      c = ceil( ln(2 m^2 / delta) / (2 (eps/16)^2) )
  (per-pair Chernoff bound with a union bound over the m^2 ordered pairs;
  the 1/16 rescale matches the 5 + 16 eps analysis slack)

- plurality-matching mode, sampling without replacement:
      c = ceil( 2 (m + ln(2 m / delta)) / (eps/8)^2 )

Reproducibility: every draw uses numpy's PCG64 seeded through
SeedSequence; per-trial child seeds derive as SeedSequence((seed, trial)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import Election, Transcript
from .errors import ConfigError
from .mechanisms import (
    ThresholdDigraph,
    build_domination_graph,
    comparison_graph,
    king_vertex,
    max_matching,
)

MODES = ("copeland", "plurality-matching")


def sample_size(epsilon: float, delta: float, m: int, mode: str) -> int:
    """Published sample-size formula for the requested mode."""
    if not 0 < epsilon <= 4:
        raise ConfigError(f"epsilon must be in (0, 4], got {epsilon}")
    if not 0 < delta < 1:
        raise ConfigError(f"delta must be in (0, 1), got {delta}")
    if m < 1:
        raise ConfigError("need at least one candidate")
    if mode == "copeland":
        c = math.ceil(math.log(2 * m * m / delta) / (2 * (epsilon / 16) ** 2))
        if c % 2 == 0:
            c += 1  # odd size rules out sampled ties
        return c
    if mode == "plurality-matching":
        return math.ceil(2 * (m + math.log(2 * m / delta)) / (epsilon / 8) ** 2)
    raise ConfigError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class SamplePlan:
    epsilon: float
    delta: float
    mode: str
    size: int
    with_replacement: bool
    seed: int


def make_plan(epsilon: float, delta: float, m: int, mode: str, seed: int) -> SamplePlan:
    c = sample_size(epsilon, delta, m, mode)
    return SamplePlan(epsilon, delta, mode, c, with_replacement=(mode == "copeland"), seed=seed)


def child_seed(seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((seed, trial))


def _generator(seed) -> np.random.Generator:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(seed))


def sample_voters(e: Election, plan: SamplePlan) -> tuple[Election, Transcript]:
    """Seeded voter draw; the transcript records the sampled indices in order."""
    if not plan.with_replacement and plan.size > e.n:
        raise ConfigError(f"cannot draw {plan.size} voters from {e.n} without replacement")
    rng = _generator(plan.seed)
    idx = rng.choice(e.n, size=plan.size, replace=plan.with_replacement)
    transcript = Transcript()
    for i in idx:
        transcript.record_sample(int(i))
    return e.restrict([int(i) for i in idx]), transcript


def sampled_copeland(e: Election, epsilon: float, delta: float, seed: int, transcript: Transcript | None = None) -> int:
    """King of the tournament thresholded at 1/2 on sampled pairwise weights."""
    if not e.all_total:
        raise ConfigError("sampled copeland needs total orders")
    plan = make_plan(epsilon, delta, e.m, "copeland", seed)
    sub, log = sample_voters(e, plan)
    if transcript is not None:
        transcript.events.extend(log.events)
    g = comparison_graph(sub)
    edges = set()
    for a in range(e.m):
        for b in range(a + 1, e.m):
            if g.counts[a][b] > g.counts[b][a]:
                edges.add((a, b))
            elif g.counts[b][a] > g.counts[a][b]:
                edges.add((b, a))
            else:
                # unreachable for odd c over total orders; keep one edge
                edges.add((max(a, b), min(a, b)))
    return king_vertex(ThresholdDigraph(e.m, Fraction(1, 2), frozenset(edges)))


def scaled_plurality(pi: Sequence[int], c: int) -> tuple[int, ...]:
    """Largest-remainder rounding of c * pi / sum(pi); sums to c exactly."""
    pi = [int(x) for x in pi]
    total = sum(pi)
    if total <= 0 or c < 1:
        raise ConfigError("need positive counts and c >= 1")
    base = [c * p // total for p in pi]
    rem = [(c * p) % total for p in pi]
    short = c - sum(base)
    for k in sorted(range(len(pi)), key=lambda k: (-rem[k], k))[:short]:
        base[k] += 1
    return tuple(base)


def empirical_plurality(e: Election) -> tuple[int, ...]:
    caps = [0] * e.m
    for i in range(e.n):
        t = e.top(i)
        if t is None:
            raise ConfigError(f"voter {i} has no unique top")
        caps[t] += 1
    return tuple(caps)


def sampled_phi(e: Election, sub: Election) -> tuple[Fraction, ...]:
    """Matching fractions on the sampled domination graphs G^S(j).

    Right-side capacities are the sample's own plurality counts, which sum
    to the sample size by construction.
    """
    caps = empirical_plurality(sub)
    return tuple(max_matching(build_domination_graph(sub, j, caps)).phi for j in range(e.m))


def sampled_plurality_matching(
    e: Election, epsilon: float, delta: float, seed: int, transcript: Transcript | None = None
) -> int:
    """Argmax of the sampled matching fractions; ties break by index."""
    if not e.all_total:
        raise ConfigError("sampled plurality-matching needs total orders")
    plan = make_plan(epsilon, delta, e.m, "plurality-matching", seed)
    sub, log = sample_voters(e, plan)
    if transcript is not None:
        transcript.events.extend(log.events)
    phis = sampled_phi(e, sub)
    best = max(phis)
    return phis.index(best)
