"""Election data model: partial preference orders, metrics, and derived counts.

Candidates and voters are 0-based integers throughout.  A voter's stated
preferences are kept as the transitive closure of the elicited comparisons,
i.e. a set of ordered candidate pairs ``(a, b)`` meaning "a is (weakly)
closer than b".  Total rankings, k-top ballots, and score-derived partial
orders are all special cases of this representation.
"""

from __future__ import annotations

import json
import math
from dataclasses import InitVar, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError, PreferenceCycleError

#: Relative tolerance for metric checks (triangle inequality, consistency).
TAU_METRIC = 1e-9


def transitive_closure(pairs: Iterable[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    """Smallest transitively closed superset of ``pairs``.

    Idempotent and monotone in its input.  Raises
    :class:`PreferenceCycleError` if the closure would violate
    irreflexivity or antisymmetry.
    """
    adj: dict[int, set[int]] = {}
    for p, q in pairs:
        if p == q:
            raise PreferenceCycleError(f"reflexive pair ({p}, {p})")
        adj.setdefault(p, set()).add(q)
    out = []
    for start, direct in adj.items():
        seen: set[int] = set()
        stack = list(direct)
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            stack.extend(adj.get(u, ()))
        if start in seen:
            raise PreferenceCycleError(f"preference cycle through candidate {start}")
        out.extend((start, q) for q in seen)
    return frozenset(out)


def ktop_pairs(order: Sequence[int], m: int) -> frozenset[tuple[int, int]]:
    """Expand an ordered k-top list into its pair set.

    Listed candidates are ranked among themselves in list order and above
    every omitted candidate; omitted candidates stay mutually incomparable.
    """
    order = list(order)
    listed = set(order)
    if len(listed) != len(order):
        raise DataFormatError("k-top list contains duplicates")
    omitted = [c for c in range(m) if c not in listed]
    pairs = []
    for pos, a in enumerate(order):
        pairs.extend((a, b) for b in order[pos + 1 :])
        pairs.extend((a, c) for c in omitted)
    return frozenset(pairs)


@dataclass(frozen=True)
class Election:
    """An election: ``n`` voters, ``m`` candidates, per-voter closed pair sets.

    ``ktop[i]`` optionally records that voter i's information arrived as an
    ordered top list (its pair set must equal the k-top expansion).  Voters
    whose pair set is a full total order are canonically annotated with
    their complete ranking, so ``ktop[i]`` is never ``None`` for them.
    """

    n: int
    m: int
    prefs: tuple[frozenset[tuple[int, int]], ...]
    ktop: tuple[tuple[int, ...] | None, ...] = None  # normalised in __post_init__
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        prefs = tuple(frozenset(p) for p in self.prefs)
        object.__setattr__(self, "prefs", prefs)
        ktop = self.ktop
        if ktop is None:
            ktop = (None,) * self.n
        ktop = tuple(tuple(t) if t is not None else None for t in ktop)
        if validate:
            self._check(prefs, ktop)
        total_size = self.m * (self.m - 1) // 2
        tops, bottoms = [], []
        norm_ktop = []
        for i in range(self.n):
            outdeg: dict[int, int] = {}
            indeg: dict[int, int] = {}
            for a, b in prefs[i]:
                outdeg[a] = outdeg.get(a, 0) + 1
                indeg[b] = indeg.get(b, 0) + 1
            if self.m == 1:
                tops.append(0)
                bottoms.append(0)
            else:
                tops.append(next((a for a, d in outdeg.items() if d == self.m - 1), None))
                bottoms.append(next((b for b, d in indeg.items() if d == self.m - 1), None))
            ann = ktop[i]
            if ann is None and len(prefs[i]) == total_size:
                # canonical annotation for total orders
                ann = tuple(sorted(range(self.m), key=lambda c: -outdeg.get(c, 0)))
            norm_ktop.append(ann)
        object.__setattr__(self, "ktop", tuple(norm_ktop))
        object.__setattr__(self, "_tops", tuple(tops))
        object.__setattr__(self, "_bottoms", tuple(bottoms))

    def _check(self, prefs, ktop) -> None:
        if self.n < 0 or self.m < 1:
            raise DataFormatError("need n >= 0 and m >= 1")
        if len(prefs) != self.n or len(ktop) != self.n:
            raise DataFormatError("prefs/ktop length must equal n")
        for i, p in enumerate(prefs):
            for a, b in p:
                if not (0 <= a < self.m and 0 <= b < self.m):
                    raise DataFormatError(f"voter {i}: candidate pair ({a}, {b}) out of range")
            if transitive_closure(p) != p:
                raise PreferenceCycleError(f"voter {i}: pair set is not transitively closed")
            if ktop[i] is not None:
                if not all(0 <= c < self.m for c in ktop[i]):
                    raise DataFormatError(f"voter {i}: k-top entry out of range")
                if ktop_pairs(ktop[i], self.m) != p:
                    raise DataFormatError(f"voter {i}: k-top annotation does not match pair set")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_rankings(cls, rankings: Sequence[Sequence[int]], m: int | None = None) -> "Election":
        """Build an election from total orders (best candidate first)."""
        rankings = [list(r) for r in rankings]
        if m is None:
            m = max((max(r) for r in rankings if r), default=-1) + 1
        prefs = [ktop_pairs(r, m) for r in rankings]
        for i, r in enumerate(rankings):
            if len(r) != m:
                raise DataFormatError(f"voter {i}: ranking must list all {m} candidates")
        return cls(len(rankings), m, tuple(prefs), tuple(tuple(r) for r in rankings))

    @classmethod
    def from_ktop(cls, lists: Sequence[Sequence[int]], m: int) -> "Election":
        """Build an election from per-voter ordered top lists."""
        lists = [tuple(t) for t in lists]
        prefs = tuple(ktop_pairs(t, m) for t in lists)
        return cls(len(lists), m, prefs, tuple(lists))

    # -- accessors ---------------------------------------------------------

    def prefers(self, i: int, a: int, b: int) -> bool:
        return (a, b) in self.prefs[i]

    def top(self, i: int) -> int | None:
        """Voter i's unique maximal candidate, or None for partial information."""
        return self._tops[i]

    def bottom(self, i: int) -> int | None:
        return self._bottoms[i]

    def second(self, i: int) -> int | None:
        """Voter i's second choice: dominates everyone except the top."""
        t = self._tops[i]
        if t is None:
            return None
        need = self.m - 2
        for c in range(self.m):
            if c == t:
                continue
            if sum(1 for d in range(self.m) if d != c and (c, d) in self.prefs[i]) == need:
                return c
        return None

    def is_total(self, i: int) -> bool:
        return len(self.prefs[i]) == self.m * (self.m - 1) // 2

    @property
    def all_total(self) -> bool:
        return all(self.is_total(i) for i in range(self.n))

    def ranking(self, i: int) -> tuple[int, ...] | None:
        """Full ranking of voter i when derivable (total order), else None."""
        ann = self.ktop[i]
        if ann is not None and len(ann) == self.m:
            return ann
        return None

    def restrict(self, voters: Sequence[int]) -> "Election":
        """Sub-election on the given voter multiset (order preserved)."""
        prefs = tuple(self.prefs[i] for i in voters)
        ktop = tuple(self.ktop[i] for i in voters)
        return Election(len(voters), self.m, prefs, ktop, validate=False)


def truncate_to_ktop(e: Election, k: int) -> Election:
    """Keep only the top ``k`` of every voter's total order."""
    if not 1 <= k <= e.m:
        raise DataFormatError(f"k must be in [1, {e.m}], got {k}")
    lists = []
    for i in range(e.n):
        r = e.ranking(i)
        if r is None:
            raise DataFormatError(f"voter {i} has no total order to truncate")
        lists.append(r[:k])
    return Election.from_ktop(lists, e.m)


def mask_voters(e: Election, voters: Iterable[int]) -> Election:
    """Blank out the given voters (their pair set becomes empty)."""
    gone = set(voters)
    prefs = tuple(frozenset() if i in gone else e.prefs[i] for i in range(e.n))
    ktop = tuple(None if i in gone else e.ktop[i] for i in range(e.n))
    return Election(e.n, e.m, prefs, ktop, validate=False)


# -- comparison graph and scores ------------------------------------------


@dataclass(frozen=True)
class ComparisonGraph:
    """Per-ordered-pair support counts; weights are exact rationals over n."""

    n: int
    counts: tuple[tuple[int, ...], ...]

    def weight(self, a: int, b: int) -> Fraction:
        return Fraction(self.counts[a][b], self.n)

    def coverage(self, a: int, b: int) -> Fraction:
        return Fraction(self.counts[a][b] + self.counts[b][a], self.n)

    @property
    def m(self) -> int:
        return len(self.counts)


def comparison_graph(e: Election) -> ComparisonGraph:
    """Fraction of voters who certainly prefer a to b, for every ordered pair."""
    if e.n < 1:
        raise DataFormatError("comparison graph needs at least one voter")
    counts = [[0] * e.m for _ in range(e.m)]
    for p in e.prefs:
        for a, b in p:
            counts[a][b] += 1
    return ComparisonGraph(e.n, tuple(tuple(row) for row in counts))


@dataclass(frozen=True)
class Scores:
    plurality: tuple[int, ...]
    veto: tuple[int, ...]
    topk_coverage: tuple[Fraction, ...]


def scores(e: Election) -> Scores:
    """Plurality and veto counts plus per-candidate k-top coverage.

    Voters without a unique top (resp. bottom) contribute to neither
    plurality (resp. veto); the source model defines these counts only for
    total orders, so this zero-contribution rule is a documented choice.
    """
    plu = [0] * e.m
    veto = [0] * e.m
    cov = [0] * e.m
    for i in range(e.n):
        t = e.top(i)
        if t is not None:
            plu[t] += 1
        b = e.bottom(i)
        if b is not None:
            veto[b] += 1
        if e.ktop[i] is not None:
            for c in e.ktop[i]:
                cov[c] += 1
    coverage = tuple(Fraction(c, e.n) for c in cov) if e.n else tuple(Fraction(0) for _ in range(e.m))
    return Scores(tuple(plu), tuple(veto), coverage)


# -- metrics ----------------------------------------------------------------


def _is_exact(x) -> bool:
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)


@dataclass(frozen=True, eq=False)
class MetricWitness:
    """Symmetric distance table on voters followed by candidates.

    ``dist`` is either a nested tuple of exact ``Fraction``/int entries
    (exact social-cost arithmetic) or a 2-D float array for large
    instances.  Off-diagonal zeros are allowed (pseudo-metric with merged
    points).
    """

    n: int
    m: int
    dist: object

    def __post_init__(self) -> None:
        size = self.n + self.m
        dist = self.dist
        if isinstance(dist, np.ndarray):
            if dist.shape != (size, size):
                raise DataFormatError(f"distance table must be {size}x{size}")
            dist = np.ascontiguousarray(dist, dtype=np.float64)
            dist.setflags(write=False)
        else:
            dist = tuple(tuple(row) for row in dist)
            if len(dist) != size or any(len(row) != size for row in dist):
                raise DataFormatError(f"distance table must be {size}x{size}")
        object.__setattr__(self, "dist", dist)

    @classmethod
    def from_points(cls, voter_points, candidate_points, norm: int = 2) -> "MetricWitness":
        """Distances between explicit coordinates (exact for exact 1-D input)."""
        vp = [tuple(p) if isinstance(p, (tuple, list, np.ndarray)) else (p,) for p in voter_points]
        cp = [tuple(p) if isinstance(p, (tuple, list, np.ndarray)) else (p,) for p in candidate_points]
        pts = vp + cp
        exact = all(all(_is_exact(x) for x in p) for p in pts)
        if exact:
            size = len(pts)

            def d(p, q):
                return sum(abs(x - y) for x, y in zip(p, q))

            table = tuple(tuple(d(pts[i], pts[j]) for j in range(size)) for i in range(size))
            return cls(len(vp), len(cp), table)
        arr = np.asarray(pts, dtype=np.float64)
        from scipy.spatial.distance import cdist

        table = cdist(arr, arr, metric="cityblock" if norm == 1 else "euclidean")
        return cls(len(vp), len(cp), table)

    def vc(self, voter: int, candidate: int):
        if isinstance(self.dist, np.ndarray):
            return float(self.dist[voter, self.n + candidate])
        return self.dist[voter][self.n + candidate]

    def cc(self, a: int, b: int):
        if isinstance(self.dist, np.ndarray):
            return float(self.dist[self.n + a, self.n + b])
        return self.dist[self.n + a][self.n + b]

    def voter_candidate_block(self) -> np.ndarray:
        """Float view of the n x m voter-to-candidate distances."""
        a = self.as_array()
        return a[: self.n, self.n :]

    def as_array(self) -> np.ndarray:
        if isinstance(self.dist, np.ndarray):
            return self.dist
        return np.array([[float(x) for x in row] for row in self.dist])

    @property
    def exact(self) -> bool:
        if isinstance(self.dist, np.ndarray):
            return False
        return all(_is_exact(x) for row in self.dist for x in row)

    def validate_metric(self, tol: float = TAU_METRIC) -> None:
        """Check symmetry, zero diagonal, nonnegativity, triangle inequality."""
        size = self.n + self.m
        if size <= 80 and self.exact:
            d = self.dist
            for i in range(size):
                if d[i][i] != 0:
                    raise DataFormatError(f"nonzero diagonal at {i}")
                for j in range(size):
                    if d[i][j] != d[j][i] or d[i][j] < 0:
                        raise DataFormatError(f"asymmetric or negative entry at ({i}, {j})")
            for k in range(size):
                for i in range(size):
                    dik = d[i][k]
                    row_k = d[k]
                    row_i = d[i]
                    for j in range(size):
                        if row_i[j] > dik + row_k[j]:
                            raise DataFormatError(f"triangle violated on ({i}, {j}, {k})")
            return
        a = self.as_array()
        scale = max(1.0, float(a.max(initial=0.0)))
        if np.abs(np.diag(a)).max(initial=0.0) > tol * scale:
            raise DataFormatError("nonzero diagonal")
        if np.abs(a - a.T).max() > tol * scale or a.min() < -tol * scale:
            raise DataFormatError("asymmetric or negative entries")
        for k in range(size):
            if (a > a[:, k : k + 1] + a[k : k + 1, :] + tol * scale).any():
                raise DataFormatError(f"triangle violated through point {k}")


def social_cost(metric: MetricWitness, a: int):
    """Sum of voter distances to candidate ``a`` (exact for exact tables)."""
    if not 0 <= a < metric.m:
        raise DataFormatError(f"candidate {a} out of range")
    if isinstance(metric.dist, np.ndarray):
        return float(metric.dist[: metric.n, metric.n + a].sum())
    col = [metric.vc(i, a) for i in range(metric.n)]
    if all(_is_exact(x) for x in col):
        return sum(col, Fraction(0)) if any(isinstance(x, Fraction) for x in col) else sum(col)
    return math.fsum(float(x) for x in col)


def social_costs(metric: MetricWitness):
    return tuple(social_cost(metric, a) for a in range(metric.m))


def realized_distortion(metric: MetricWitness, winner: int):
    """SC(winner) / min_a SC(a); ``inf`` when the optimum has zero cost."""
    costs = social_costs(metric)
    best = min(costs)
    sw = costs[winner]
    if best == 0:
        return Fraction(1) if sw == 0 else math.inf
    if _is_exact(sw) and _is_exact(best):
        return Fraction(sw) / Fraction(best)
    return float(sw) / float(best)


def check_consistent(metric: MetricWitness, e: Election, tol: float = TAU_METRIC) -> bool:
    """True iff every stated pair is respected by the metric within ``tol``."""
    if metric.n != e.n or metric.m != e.m:
        raise DataFormatError("metric dimensions do not match the election")
    for i in range(e.n):
        for a, b in e.prefs[i]:
            da, db = metric.vc(i, a), metric.vc(i, b)
            if _is_exact(da) and _is_exact(db):
                if da > db:
                    return False
            elif float(da) > float(db) + tol * max(1.0, abs(float(da)), abs(float(db))):
                return False
    return True


# -- profile induction -------------------------------------------------------


def rankings_from_witness(metric: MetricWitness, tiebreak: str = "index_asc") -> list[tuple[int, ...]]:
    """Total orders induced by distance, equal distances broken by index.

    ``index_asc`` prefers the smaller candidate index on ties (default);
    ``index_desc`` the larger, which some adversarial constructions need.
    """
    if tiebreak not in ("index_asc", "index_desc"):
        raise DataFormatError(f"unknown tiebreak {tiebreak!r}")
    sign = 1 if tiebreak == "index_asc" else -1
    if isinstance(metric.dist, np.ndarray):
        block = metric.dist[: metric.n, metric.n :]
        idx = np.arange(metric.m)
        return [tuple(int(c) for c in np.lexsort((sign * idx, row))) for row in block]
    out = []
    for i in range(metric.n):
        order = sorted(range(metric.m), key=lambda c: (metric.vc(i, c), sign * c))
        out.append(tuple(order))
    return out


def induce_election(metric: MetricWitness, tiebreak: str = "index_asc") -> Election:
    return Election.from_rankings(rankings_from_witness(metric, tiebreak), metric.m)


# -- transcripts -------------------------------------------------------------


@dataclass
class Transcript:
    """Ordered log of elicited comparisons or sampled voters (single-writer)."""

    events: list = field(default_factory=list)

    def record_comparison(self, a: int, b: int, loser: int) -> None:
        self.events.append({"type": "compare", "a": a, "b": b, "loser": loser})

    def record_sample(self, voter: int) -> None:
        self.events.append({"type": "sample", "voter": int(voter)})

    @property
    def comparisons(self) -> int:
        return sum(1 for ev in self.events if ev["type"] == "compare")

    @property
    def samples(self) -> int:
        return sum(1 for ev in self.events if ev["type"] == "sample")

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(ev, sort_keys=True) for ev in self.events)


# -- line-based text format ---------------------------------------------------


def election_to_text(e: Election) -> str:
    """Serialise to the line format: header ``n m``, one ballot line per voter.

    Annotated voters are written as their ordered list (omitted candidates
    are implicitly ranked below); other voters must form a weak order,
    written with ``=`` between tied candidates.
    """
    lines = [f"{e.n} {e.m}"]
    for i in range(e.n):
        ann = e.ktop[i]
        if ann is not None:
            lines.append(" > ".join(str(c) for c in ann))
            continue
        if not e.prefs[i]:
            lines.append("")
            continue
        above = [0] * e.m
        for _, b in e.prefs[i]:
            above[b] += 1
        levels: dict[int, list[int]] = {}
        for c in range(e.m):
            levels.setdefault(above[c], []).append(c)
        groups = [sorted(levels[k]) for k in sorted(levels)]
        rebuilt = frozenset(
            (a, b)
            for gi, g in enumerate(groups)
            for a in g
            for h in groups[gi + 1 :]
            for b in h
        )
        if rebuilt != e.prefs[i]:
            raise DataFormatError(f"voter {i}: preferences are not a weak order; not serialisable")
        lines.append(" > ".join(" = ".join(str(c) for c in g) for g in groups))
    return "\n".join(lines) + "\n"


def election_from_text(text: str) -> Election:
    lines = text.splitlines()
    if not lines:
        raise DataFormatError("empty election file")
    head = lines[0].split()
    if len(head) != 2:
        raise DataFormatError("header must be 'n m'")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError as exc:
        raise DataFormatError(f"bad header: {lines[0]!r}") from exc
    body = lines[1 : 1 + n]
    if len(body) < n:
        raise DataFormatError(f"expected {n} ballot lines, found {len(body)}")
    prefs, ktop = [], []
    for i, line in enumerate(body):
        line = line.strip()
        if not line:
            prefs.append(frozenset())
            ktop.append(None)
            continue
        groups = []
        for part in line.split(">"):
            try:
                group = [int(tok) for tok in part.split("=")]
            except ValueError as exc:
                raise DataFormatError(f"voter {i}: bad token in {line!r}") from exc
            groups.append(group)
        listed = [c for g in groups for c in g]
        if len(set(listed)) != len(listed):
            raise DataFormatError(f"voter {i}: candidate listed twice")
        if any(not 0 <= c < m for c in listed):
            raise DataFormatError(f"voter {i}: candidate id out of range")
        omitted = [c for c in range(m) if c not in set(listed)]
        pairs = set()
        for gi, g in enumerate(groups):
            for a in g:
                for h in groups[gi + 1 :]:
                    pairs.update((a, b) for b in h)
                pairs.update((a, c) for c in omitted)
        prefs.append(frozenset(pairs))
        if all(len(g) == 1 for g in groups):
            ktop.append(tuple(listed))
        else:
            ktop.append(None)
    return Election(n, m, tuple(prefs), tuple(ktop))
