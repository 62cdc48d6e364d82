"""Ordinal mechanisms: knockout elicitation, tournament rules, and matchings.

All rules are pure given an election (plus a seed where pairings are
shuffled); per-candidate matching scores can safely be computed
concurrently, while the knockout oracle is inherently sequential.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .core import ComparisonGraph, Election, Transcript, comparison_graph, scores
from .errors import ConfigError, CoverageError, TheoremFalsificationError

#: Majority tie handling: with "high_index_wins" (default) the smaller
#: candidate index loses a tied comparison.  The chain lower-bound
#: construction needs exactly this rule.
TIEBREAKS = ("high_index_wins", "low_index_wins")


def majority_oracle(
    e: Election,
    a: int,
    b: int,
    tiebreak: str = "high_index_wins",
    transcript: Transcript | None = None,
) -> int:
    """Return the pairwise loser between a and b; abstainers count for neither."""
    if a == b:
        raise ConfigError("oracle needs distinct candidates")
    if tiebreak not in TIEBREAKS:
        raise ConfigError(f"unknown tiebreak {tiebreak!r}")
    na = sum(1 for p in e.prefs if (a, b) in p)
    nb = sum(1 for p in e.prefs if (b, a) in p)
    if na > nb:
        loser = b
    elif nb > na:
        loser = a
    else:
        loser = min(a, b) if tiebreak == "high_index_wins" else max(a, b)
    if transcript is not None:
        transcript.record_comparison(a, b, loser)
    return loser


def _make_pairs(survivors: list[int], pairing: str, rng) -> list[tuple[int, int]]:
    order = list(survivors)
    if pairing == "reversed":
        order.reverse()
    elif pairing == "shuffle":
        order = [order[i] for i in rng.permutation(len(order))]
    elif pairing != "input":
        raise ConfigError(f"unknown pairing strategy {pairing!r}")
    return [(order[2 * i], order[2 * i + 1]) for i in range(len(order) // 2)]


def domination_root(
    candidates: Sequence[int],
    oracle: Callable[[int, int], int],
    pairing: str = "input",
    seed: int | None = None,
    schedule: Sequence[Sequence[tuple[int, int]]] | None = None,
) -> tuple[int, Transcript]:
    """Knockout elicitation: pair the survivors, drop every loser, repeat.

    Elicits exactly ``m - 1`` comparisons.  With an odd survivor count one
    candidate receives a bye.  ``schedule`` overrides the pairing strategy
    with an explicit round-by-round pair list (adversarial constructions).
    """
    survivors = list(dict.fromkeys(candidates))
    if len(survivors) != len(list(candidates)):
        raise ConfigError("duplicate candidates")
    if not survivors:
        raise ConfigError("need at least one candidate")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(0 if seed is None else seed)))
    transcript = Transcript()
    round_no = 0
    while len(survivors) > 1:
        if schedule is not None:
            if round_no >= len(schedule):
                raise ConfigError("pairing schedule exhausted before a winner emerged")
            pairs = [tuple(p) for p in schedule[round_no]]
            alive = set(survivors)
            flat = [c for p in pairs for c in p]
            if len(set(flat)) != len(flat) or not set(flat) <= alive:
                raise ConfigError(f"round {round_no}: schedule does not match the survivors")
            if len(pairs) != len(survivors) // 2:
                raise ConfigError(f"round {round_no}: schedule must contain floor(S/2) pairings")
        else:
            pairs = _make_pairs(survivors, pairing, rng)
        eliminated = set()
        for a, b in pairs:
            loser = oracle(a, b)
            if loser not in (a, b):
                raise ConfigError(f"oracle returned {loser} for pair ({a}, {b})")
            transcript.record_comparison(a, b, loser)
            eliminated.add(loser)
        survivors = [c for c in survivors if c not in eliminated]
        round_no += 1
    return survivors[0], transcript


def run_dr(
    e: Election,
    pairing: str = "input",
    seed: int | None = None,
    schedule=None,
    tiebreak: str = "high_index_wins",
) -> tuple[int, Transcript]:
    """DominationRoot on an election via the majority oracle."""
    oracle = lambda a, b: majority_oracle(e, a, b, tiebreak=tiebreak)
    return domination_root(range(e.m), oracle, pairing=pairing, seed=seed, schedule=schedule)


# -- tournaments and threshold digraphs --------------------------------------


@dataclass(frozen=True)
class Tournament:
    """Complete antisymmetric digraph: exactly one edge per unordered pair."""

    m: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        for a, b in itertools.combinations(range(self.m), 2):
            if ((a, b) in self.edges) == ((b, a) in self.edges):
                raise ConfigError(f"pair ({a}, {b}) must carry exactly one edge")

    def out_neighbours(self, v: int) -> set[int]:
        return {b for a, b in self.edges if a == v}


@dataclass(frozen=True)
class ThresholdDigraph:
    """Support digraph: edge (a, b) iff the fraction preferring a to b meets tau."""

    m: int
    tau: Fraction
    edges: frozenset[tuple[int, int]]

    @classmethod
    def from_graph(cls, g: ComparisonGraph, tau) -> "ThresholdDigraph":
        tau = Fraction(tau)
        edges = frozenset(
            (a, b)
            for a in range(g.m)
            for b in range(g.m)
            if a != b and g.weight(a, b) >= tau
        )
        return cls(g.m, tau, edges)


def _adjacency(graph) -> list[set[int]]:
    adj = [set() for _ in range(graph.m)]
    for a, b in graph.edges:
        adj[a].add(b)
    return adj


def two_hop_reach(adj: Sequence[set[int]], v: int) -> set[int]:
    reach = {v} | adj[v]
    for u in list(adj[v]):
        reach |= adj[u]
    return reach


def is_king(graph, v: int) -> bool:
    adj = _adjacency(graph)
    return len(two_hop_reach(adj, v)) == graph.m


def king_vertex(graph) -> int:
    """A vertex reaching every other in at most two hops.

    Takes the maximum out-degree vertex (a king in any digraph containing
    a tournament) and verifies reachability; failure would falsify the
    king theorem and raises accordingly.
    """
    adj = _adjacency(graph)
    v = max(range(graph.m), key=lambda c: (len(adj[c]), -c))
    if len(two_hop_reach(adj, v)) != graph.m:
        raise TheoremFalsificationError(
            f"max out-degree vertex {v} is not a 2-hop king; input lacks a tournament?"
        )
    return v


# -- tournament rules ---------------------------------------------------------


def copeland(e: Election, tiebreak_pair: str = "half") -> int:
    """Copeland winner; a drawn pair contributes half a win to both sides.

    Requires full pairwise information: every candidate pair must be
    compared by at least one voter.
    """
    g = comparison_graph(e)
    m = g.m
    for a, b in itertools.combinations(range(m), 2):
        if g.counts[a][b] + g.counts[b][a] == 0:
            raise CoverageError((a, b), f"no voter compares candidates {a} and {b}")
    score = [Fraction(0)] * m
    for a, b in itertools.combinations(range(m), 2):
        if g.counts[a][b] > g.counts[b][a]:
            score[a] += 1
        elif g.counts[b][a] > g.counts[a][b]:
            score[b] += 1
        else:
            score[a] += Fraction(1, 2)
            score[b] += Fraction(1, 2)
    best = max(score)
    return score.index(best)


def majority_digraph(e: Election) -> ThresholdDigraph:
    """Edges for strict pairwise wins; drawn pairs carry both directions."""
    g = comparison_graph(e)
    edges = set()
    for a, b in itertools.combinations(range(g.m), 2):
        if g.counts[a][b] >= g.counts[b][a]:
            edges.add((a, b))
        if g.counts[b][a] >= g.counts[a][b]:
            edges.add((b, a))
    return ThresholdDigraph(g.m, Fraction(0), frozenset(edges))


def balanced_rule(e: Election, alpha) -> int:
    """King of the digraph thresholded at alpha/2.

    Requires that for every candidate pair at least an alpha fraction of
    the voters compared them; the offending pair is named on violation.
    """
    alpha = Fraction(alpha)
    if not 0 < alpha <= 1:
        raise ConfigError(f"alpha must be in (0, 1], got {alpha}")
    g = comparison_graph(e)
    for a, b in itertools.combinations(range(g.m), 2):
        if g.coverage(a, b) < alpha:
            raise CoverageError(
                (a, b),
                f"pair ({a}, {b}) covered by {g.coverage(a, b)} < alpha = {alpha}",
            )
    return king_vertex(ThresholdDigraph.from_graph(g, alpha / 2))


def ktop_rule(e: Election, k: int) -> int:
    """Winner under k-top ballots: a 2-hop king at support threshold k/(3m).

    Candidates are scanned by descending k-top coverage, then index; the
    guarantee says a king always exists, so exhausting the scan raises a
    falsification error.
    """
    for i in range(e.n):
        if e.ktop[i] is None or len(e.ktop[i]) != k:
            raise ConfigError(f"voter {i} does not carry an exactly-{k}-top annotation")
    g = comparison_graph(e)
    digraph = ThresholdDigraph.from_graph(g, Fraction(k, 3 * e.m))
    adj = _adjacency(digraph)
    coverage = scores(e).topk_coverage
    order = sorted(range(e.m), key=lambda c: (-coverage[c], c))
    for c in order:
        if len(two_hop_reach(adj, c)) == e.m:
            return c
    raise TheoremFalsificationError(f"no 2-hop king at threshold {k}/(3*{e.m})")


# -- plurality matching -------------------------------------------------------


@dataclass(frozen=True)
class DominationGraph:
    """Bipartite graph certifying a focal candidate's quality.

    Left side: voters.  Right side: candidates, where candidate k carries
    the capacity of voters whose top choice is k.  Voter i connects to k
    when the focal candidate is (certainly) at least as good for i as k.
    This folding is equivalent to the voter-vs-voter form because a right
    voter j matters only through top(j).
    """

    focal: int
    n: int
    capacities: tuple[int, ...]
    adjacency: tuple[frozenset[int], ...]


@dataclass(frozen=True)
class MatchingResult:
    size: int
    usage: tuple[int, ...]
    phi: Fraction
    #: matched candidate per voter, -1 when unmatched (the V^0 block)
    assignment: tuple[int, ...]

    def blocks(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for i, k in enumerate(self.assignment):
            out.setdefault(k, []).append(i)
        return {k: tuple(v) for k, v in sorted(out.items())}


def build_domination_graph(
    e: Election, focal: int, capacities: Sequence[int] | None = None
) -> DominationGraph:
    """Domination graph of ``focal``; edges use only certain comparisons."""
    if capacities is None:
        caps = [0] * e.m
        for i in range(e.n):
            t = e.top(i)
            if t is None:
                raise ConfigError(f"voter {i} has no unique top; supply capacities explicitly")
            caps[t] += 1
        capacities = caps
    if len(capacities) != e.m:
        raise ConfigError("capacity vector must have one entry per candidate")
    adj = []
    for i in range(e.n):
        p = e.prefs[i]
        adj.append(frozenset(k for k in range(e.m) if k == focal or (focal, k) in p))
    return DominationGraph(focal, e.n, tuple(int(c) for c in capacities), tuple(adj))


def max_matching(g: DominationGraph) -> MatchingResult:
    """Maximum capacitated bipartite matching via max-flow.

    Voters with identical neighbourhoods are aggregated into classes
    before the flow computation; the class flows are expanded back to a
    deterministic per-voter assignment (ascending voter, ascending
    candidate).
    """
    classes: dict[frozenset[int], list[int]] = {}
    for i, nb in enumerate(g.adjacency):
        classes.setdefault(nb, []).append(i)
    keys = sorted(classes, key=lambda nb: classes[nb][0])
    kn = len(keys)
    m = len(g.capacities)
    # nodes: 0 source, 1..kn classes, kn+1..kn+m candidates, kn+m+1 sink
    src, snk = 0, kn + m + 1
    rows, cols, caps = [], [], []
    for ci, nb in enumerate(keys):
        rows.append(src)
        cols.append(1 + ci)
        caps.append(len(classes[nb]))
        for k in nb:
            if g.capacities[k] > 0:
                rows.append(1 + ci)
                cols.append(1 + kn + k)
                caps.append(len(classes[nb]))
    for k in range(m):
        if g.capacities[k] > 0:
            rows.append(1 + kn + k)
            cols.append(snk)
            caps.append(g.capacities[k])
    if not rows:
        return MatchingResult(0, (0,) * m, Fraction(0, 1) if g.n == 0 else Fraction(0, g.n), (-1,) * g.n)
    mat = csr_matrix((caps, (rows, cols)), shape=(snk + 1, snk + 1), dtype=np.int64)
    res = maximum_flow(mat, src, snk)
    flow = res.flow
    assignment = [-1] * g.n
    usage = [0] * m
    for ci, nb in enumerate(keys):
        voters = classes[nb]
        pos = 0
        for k in sorted(nb):
            if g.capacities[k] <= 0:
                continue
            f = int(flow[1 + ci, 1 + kn + k])
            for _ in range(f):
                assignment[voters[pos]] = k
                usage[k] += 1
                pos += 1
    size = int(res.flow_value)
    phi = Fraction(size, g.n) if g.n else Fraction(0)
    return MatchingResult(size, tuple(usage), phi, tuple(assignment))


def phi_scores(e: Election, capacities: Sequence[int] | None = None) -> tuple[Fraction, ...]:
    """Matching fraction of every candidate's domination graph."""
    return tuple(max_matching(build_domination_graph(e, j, capacities)).phi for j in range(e.m))


def plurality_matching(e: Election) -> tuple[int, tuple[Fraction, ...]]:
    """Candidate maximising the matching fraction; some candidate reaches 1
    on total orders.  Ties break towards the smaller index."""
    phis = phi_scores(e)
    best = max(phis)
    return phis.index(best), phis


@dataclass(frozen=True)
class ProbeResult:
    best_candidate: int
    best_fraction: Fraction
    threshold: Fraction
    holds: bool


def conjecture_probe(e: Election, k: int) -> ProbeResult:
    """Empirical probe of the k-top matching conjecture.

    Computes the best certain-edge matching fraction over all candidates
    and reports whether it reaches k/m.  The outcome is logged evidence,
    not a proof.
    """
    for i in range(e.n):
        if e.ktop[i] is None or len(e.ktop[i]) != k:
            raise ConfigError(f"voter {i} does not carry an exactly-{k}-top annotation")
    phis = phi_scores(e)
    best = max(phis)
    threshold = Fraction(k, e.m)
    return ProbeResult(phis.index(best), best, threshold, best >= threshold)
