"""Worst-case cost-ratio LPs and the instance-optimal Minimax rule.

For candidates a, b the program maximises SC(a) subject to SC(b) = 1 over
all pseudo-metrics consistent with the stated preferences: variables are
unordered point pairs (symmetry is folded away structurally, the diagonal
is implicit), with ordering rows per stated pair and triangle rows.

Triangle rows touching two or more voters are pruned by default:
voter-voter distances appear in no objective or ordering row and can
always be completed by shortest paths afterwards, so those rows are
redundant.  ``triangle_mode="full"`` re-enables the complete row set over
all point triples; the equivalence is covered by a brute-force cross-check
in the test suite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .core import Election, MetricWitness
from .errors import ConfigError, SolverFailureError

#: Relative tolerance on LP objective values.
TAU_LP = 1e-7

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"


@dataclass
class LinearProgram:
    """Sparse LP in maximisation form: max c.x s.t. A_ub x <= b_ub, A_eq x = b_eq, x >= 0."""

    var_names: list
    objective: np.ndarray
    a_ub: sparse.csr_matrix | None
    b_ub: np.ndarray | None
    a_eq: sparse.csr_matrix | None
    b_eq: np.ndarray | None
    meta: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, var_names, objective: dict, ub_rows=(), eq_rows=(), meta=None):
        """Convenience constructor from dict-keyed rows (small programs)."""
        index = {v: i for i, v in enumerate(var_names)}
        obj = np.zeros(len(var_names))
        for v, coef in objective.items():
            obj[index[v]] = coef

        def pack(rows):
            if not rows:
                return None, None
            data, ri, ci, rhs = [], [], [], []
            for r, (row, b) in enumerate(rows):
                rhs.append(b)
                for v, coef in row.items():
                    ri.append(r)
                    ci.append(index[v])
                    data.append(coef)
            mat = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), len(var_names)))
            return mat, np.array(rhs, dtype=float)

        a_ub, b_ub = pack(list(ub_rows))
        a_eq, b_eq = pack(list(eq_rows))
        return cls(list(var_names), obj, a_ub, b_ub, a_eq, b_eq, meta or {})


@dataclass
class LpOutcome:
    status: str
    value: float
    witness: dict | None = None
    program: LinearProgram | None = None


def solve_lp(lp: LinearProgram) -> LpOutcome:
    """Solve via HiGHS; unboundedness is detected and reported as +inf."""
    res = linprog(
        -lp.objective,
        A_ub=lp.a_ub,
        b_ub=lp.b_ub,
        A_eq=lp.a_eq,
        b_eq=lp.b_eq,
        bounds=(0, None),
        method="highs",
    )
    if res.status == 0:
        witness = {name: float(x) for name, x in zip(lp.var_names, res.x)}
        return LpOutcome(OPTIMAL, -float(res.fun), witness, lp)
    if res.status == 3:
        return LpOutcome(UNBOUNDED, math.inf, None, lp)
    if res.status == 2:
        return LpOutcome(INFEASIBLE, math.nan, None, lp)
    raise SolverFailureError(f"LP solver failed (status {res.status}): {res.message}")


# -- metric LP construction --------------------------------------------------


def _pair_index(m: int) -> dict[tuple[int, int], int]:
    return {p: i for i, p in enumerate(itertools.combinations(range(m), 2))}


def _alpha_rows(e: Election, alpha) -> list[tuple[int, int]]:
    if not 0 <= alpha <= 1:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    rows = []
    for i in range(e.n):
        t, s = e.top(i), e.second(i)
        if t is None or s is None:
            raise ConfigError(f"voter {i} has no identified top and second choice")
        rows.append((t, s))
    return rows


def build_metric_lp(
    e: Election,
    a: int,
    b: int,
    alpha=None,
    triangle_mode: str = "pruned",
) -> LinearProgram:
    """LP whose value is the worst consistent cost ratio of a against b."""
    if a == b:
        raise ConfigError("build_metric_lp needs distinct candidates")
    if triangle_mode not in ("pruned", "full"):
        raise ConfigError(f"unknown triangle_mode {triangle_mode!r}")
    if triangle_mode == "full":
        return _build_full(e, a, b, alpha)
    n, m = e.n, e.m
    nm = n * m
    cpairs = list(itertools.combinations(range(m), 2))
    ncp = len(cpairs)
    var_names = [("vc", i, c) for i in range(n) for c in range(m)]
    var_names += [("cc", p, q) for p, q in cpairs]
    nvars = nm + ncp

    obj = np.zeros(nvars)
    for i in range(n):
        obj[i * m + a] = 1.0

    data, rows, cols = [], [], []
    nrows = 0

    def add_row(entries):
        nonlocal nrows
        for col, val in entries:
            rows.append(nrows)
            cols.append(col)
            data.append(val)
        nrows += 1

    for i in range(n):
        for p, q in e.prefs[i]:
            add_row(((i * m + p, 1.0), (i * m + q, -1.0)))
    if alpha is not None:
        for i, (t, s) in enumerate(_alpha_rows(e, alpha)):
            add_row(((i * m + t, 1.0), (i * m + s, -float(alpha))))

    # vectorised voter/candidate-pair triangle block: 3 rows per (i, {p, q})
    if n and ncp:
        pa = np.fromiter((p for p, _ in cpairs), dtype=np.int64)
        pb = np.fromiter((q for _, q in cpairs), dtype=np.int64)
        ii = np.repeat(np.arange(n, dtype=np.int64), ncp)
        va = ii * m + np.tile(pa, n)
        vb = ii * m + np.tile(pb, n)
        vy = nm + np.tile(np.arange(ncp, dtype=np.int64), n)
        blk = n * ncp
        r = nrows + np.arange(blk, dtype=np.int64)
        for signs, off in ((( 1.0, -1.0, -1.0), 0), ((-1.0, 1.0, -1.0), blk), ((-1.0, -1.0, 1.0), 2 * blk)):
            rows.extend((r + off).tolist())
            cols.extend(va.tolist())
            data.extend([signs[0]] * blk)
            rows.extend((r + off).tolist())
            cols.extend(vb.tolist())
            data.extend([signs[1]] * blk)
            rows.extend((r + off).tolist())
            cols.extend(vy.tolist())
            data.extend([signs[2]] * blk)
        nrows += 3 * blk

    pidx = _pair_index(m)
    for p, q, r_ in itertools.combinations(range(m), 3):
        ypq, ypr, yqr = nm + pidx[(p, q)], nm + pidx[(p, r_)], nm + pidx[(q, r_)]
        add_row(((ypq, 1.0), (ypr, -1.0), (yqr, -1.0)))
        add_row(((ypr, 1.0), (ypq, -1.0), (yqr, -1.0)))
        add_row(((yqr, 1.0), (ypq, -1.0), (ypr, -1.0)))

    a_ub = sparse.csr_matrix(
        (np.asarray(data), (np.asarray(rows), np.asarray(cols))), shape=(nrows, nvars)
    )
    b_ub = np.zeros(nrows)

    eq_cols = [i * m + b for i in range(n)]
    a_eq = sparse.csr_matrix(
        (np.ones(n), (np.zeros(n, dtype=int), eq_cols)), shape=(1, nvars)
    )
    b_eq = np.ones(1)

    meta = {"kind": "metric", "n": n, "m": m, "a": a, "b": b, "mode": "pruned", "alpha": alpha}
    return LinearProgram(var_names, obj, a_ub, b_ub, a_eq, b_eq, meta)


def _build_full(e: Election, a: int, b: int, alpha) -> LinearProgram:
    """Reference builder with every pair variable and every triangle row."""
    n, m = e.n, e.m
    size = n + m
    pidx = _pair_index(size)  # points: voters 0..n-1, candidates n..n+m-1
    var_names = [("pp", p, q) for p, q in itertools.combinations(range(size), 2)]

    def vi(p: int, q: int) -> int:
        return pidx[(p, q) if p < q else (q, p)]

    objective = {}
    for i in range(n):
        objective[var_names[vi(i, n + a)]] = 1.0
    ub_rows = []
    for i in range(n):
        for p, q in e.prefs[i]:
            ub_rows.append(({var_names[vi(i, n + p)]: 1.0, var_names[vi(i, n + q)]: -1.0}, 0.0))
    if alpha is not None:
        for i, (t, s) in enumerate(_alpha_rows(e, alpha)):
            ub_rows.append(({var_names[vi(i, n + t)]: 1.0, var_names[vi(i, n + s)]: -float(alpha)}, 0.0))
    for p, q, r in itertools.combinations(range(size), 3):
        for x, y, z in ((p, q, r), (p, r, q), (q, r, p)):
            row = {var_names[vi(x, y)]: 1.0}
            row[var_names[vi(x, z)]] = row.get(var_names[vi(x, z)], 0.0) - 1.0
            row[var_names[vi(z, y)]] = row.get(var_names[vi(z, y)], 0.0) - 1.0
            ub_rows.append((row, 0.0))
    eq_rows = [({var_names[vi(i, n + b)]: 1.0 for i in range(n)}, 1.0)]
    meta = {"kind": "metric", "n": n, "m": m, "a": a, "b": b, "mode": "full", "alpha": alpha}
    return LinearProgram.from_rows(var_names, objective, ub_rows, eq_rows, meta)


def solve_metric_lp(e: Election, a: int, b: int, alpha=None, triangle_mode="pruned") -> LpOutcome:
    """Solve the pair LP; a reported infeasibility is re-checked and mapped
    to unbounded, since consistent metrics always exist."""
    lp = build_metric_lp(e, a, b, alpha=alpha, triangle_mode=triangle_mode)
    out = solve_lp(lp)
    if out.status == INFEASIBLE:
        probe = LinearProgram(lp.var_names, np.zeros_like(lp.objective), lp.a_ub, lp.b_ub, lp.a_eq, lp.b_eq, lp.meta)
        if solve_lp(probe).status == OPTIMAL:
            return LpOutcome(UNBOUNDED, math.inf, None, lp)
        raise SolverFailureError(f"metric LP reported infeasible for pair ({a}, {b})")
    return out


def distortion_pair(e: Election, a: int, b: int, alpha=None, triangle_mode="pruned") -> float:
    """Worst-case SC(a)/SC(b) over consistent metrics; +inf when unbounded."""
    if a == b:
        return 1.0
    return solve_metric_lp(e, a, b, alpha=alpha, triangle_mode=triangle_mode).value


@dataclass
class DistortionReport:
    """Full pairwise table of worst-case ratios with the minimax winner."""

    values: tuple[tuple[float, ...], ...]
    per_candidate: tuple[float, ...]
    worst_opponent: tuple[int, ...]
    winner: int

    def to_json_dict(self) -> dict:
        def enc(x):
            return "inf" if math.isinf(x) else x

        return {
            "values": [[enc(v) for v in row] for row in self.values],
            "per_candidate": [enc(v) for v in self.per_candidate],
            "worst_opponent": list(self.worst_opponent),
            "winner": self.winner,
        }


def _strictly_less(x: float, y: float) -> bool:
    if math.isinf(x) or math.isinf(y):
        return x < y
    return x < y - TAU_LP * max(1.0, abs(x), abs(y))


def distortion_of(e: Election, a: int, alpha=None, triangle_mode="pruned") -> tuple[float, int]:
    """Max over opponents of the pair LP value, with the attaining opponent."""
    best, who = 1.0, a
    for b in range(e.m):
        if b == a:
            continue
        v = distortion_pair(e, a, b, alpha=alpha, triangle_mode=triangle_mode)
        if _strictly_less(best, v):
            best, who = v, b
    return best, who


def minimax(e: Election, alpha=None, triangle_mode: str = "pruned") -> DistortionReport:
    """Instance-optimal rule: evaluate every pair LP and return the argmin-max.

    Ties (within the objective tolerance) break towards the smaller
    candidate index.  With ``alpha`` set this is the alpha-decisive
    variant; ``alpha = 1`` coincides with the plain rule.
    """
    m = e.m
    if m < 1:
        raise ConfigError("minimax needs at least one candidate")
    values = [[1.0] * m for _ in range(m)]
    for a in range(m):
        for b in range(m):
            if a != b:
                values[a][b] = distortion_pair(e, a, b, alpha=alpha, triangle_mode=triangle_mode)
    per_candidate, worst = [], []
    for a in range(m):
        best, who = 1.0, a
        for b in range(m):
            if _strictly_less(best, values[a][b]):
                best, who = values[a][b], b
        per_candidate.append(best)
        worst.append(who)
    winner = 0
    for c in range(1, m):
        if _strictly_less(per_candidate[c], per_candidate[winner]):
            winner = c
    return DistortionReport(tuple(map(tuple, values)), tuple(per_candidate), tuple(worst), winner)


def extract_pseudometric(outcome: LpOutcome) -> MetricWitness:
    """Turn an optimal pair-LP solution into a full pseudo-metric witness.

    Distances absent from the variable set (voter-voter pairs in pruned
    mode) are completed by all-pairs shortest paths, which preserves every
    solved distance and repairs solver-tolerance triangle slack.
    """
    if outcome.status != OPTIMAL:
        raise ConfigError(f"cannot extract a witness from a {outcome.status} outcome")
    lp = outcome.program
    meta = lp.meta
    if meta.get("kind") != "metric":
        raise ConfigError("outcome does not come from a metric LP")
    n, m = meta["n"], meta["m"]
    size = n + m
    d = np.full((size, size), np.inf)
    np.fill_diagonal(d, 0.0)
    for name, val in outcome.witness.items():
        if name[0] == "vc":
            _, i, c = name
            p, q = i, n + c
        elif name[0] == "cc":
            _, a, b = name
            p, q = n + a, n + b
        else:
            _, p, q = name
        v = max(0.0, val)
        d[p, q] = d[q, p] = v
    for k in range(size):
        np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :], out=d)
    return MetricWitness(n, m, tuple(tuple(float(x) for x in row) for row in d))
