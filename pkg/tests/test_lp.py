"""Pair LPs, Minimax, the alpha-decisive variant, and witness extraction."""

import math
from fractions import Fraction

import pytest

from metricvote import instances as inst
from metricvote.core import Election, check_consistent, social_cost
from metricvote.errors import ConfigError, SolverFailureError
from metricvote.lp import (
    INFEASIBLE,
    OPTIMAL,
    TAU_LP,
    UNBOUNDED,
    LinearProgram,
    build_metric_lp,
    distortion_of,
    distortion_pair,
    extract_pseudometric,
    minimax,
    solve_lp,
    solve_metric_lp,
)


def close(x, y, tol=1e-6):
    if math.isinf(x) or math.isinf(y):
        return x == y
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


class TestSolver:
    def test_bounded(self):
        lp = LinearProgram.from_rows(["x"], {"x": 1.0}, ub_rows=[({"x": 1.0}, 1.0)])
        out = solve_lp(lp)
        assert out.status == OPTIMAL and close(out.value, 1.0)

    def test_unbounded(self):
        out = solve_lp(LinearProgram.from_rows(["x"], {"x": 1.0}))
        assert out.status == UNBOUNDED and out.value == math.inf

    def test_infeasible(self):
        lp = LinearProgram.from_rows(["x"], {}, ub_rows=[({"x": 1.0}, -1.0)])
        assert solve_lp(lp).status == INFEASIBLE


class TestMetricLpConstruction:
    def test_single_voter_shape(self):
        e = Election(1, 2, (frozenset({(0, 1)}),))
        lp = build_metric_lp(e, 0, 1, triangle_mode="full")
        # one voter, two candidates: three distinct pair variables
        assert len(lp.var_names) == 3
        out = solve_lp(lp)
        assert out.status == OPTIMAL and close(out.value, 1.0)

    def test_alpha_zero_pins_top(self):
        e = Election.from_rankings([(0, 1, 2), (2, 1, 0)], 3)
        out = solve_metric_lp(e, 0, 2, alpha=0.0)
        assert out.status == OPTIMAL
        w = extract_pseudometric(out)
        for i in range(2):
            assert w.vc(i, e.top(i)) <= 1e-7

    def test_alpha_needs_top_and_second(self):
        e = Election(1, 3, (frozenset({(0, 1)}),))
        with pytest.raises(ConfigError):
            build_metric_lp(e, 0, 1, alpha=0.5)

    def test_empty_prefs_lp_still_solves(self):
        e = Election(2, 2, (frozenset(), frozenset()))
        assert distortion_pair(e, 0, 1) == math.inf


class TestDistortionPair:
    def test_one_voter_pair_values(self):
        e = Election(1, 2, (frozenset({(0, 1)}),))
        assert close(distortion_pair(e, 0, 1), 1.0)
        assert distortion_pair(e, 1, 0) == math.inf

    def test_split_vote_is_three(self):
        e = Election.from_rankings([(0, 1), (1, 0)], 2)
        assert close(distortion_pair(e, 0, 1), 3.0)

    def test_self_pair_is_one(self):
        e = Election.from_rankings([(0, 1)], 2)
        assert distortion_pair(e, 0, 0) == 1.0


class TestWitnessExtraction:
    def test_tightness_on_split_instance(self):
        e = Election.from_rankings([(0, 1), (1, 0)], 2)
        out = solve_metric_lp(e, 0, 1)
        w = extract_pseudometric(out)
        w.validate_metric()
        assert check_consistent(w, e)
        assert close(social_cost(w, 0) / social_cost(w, 1), out.value)

    def test_merged_points_share_rows(self):
        e = Election.from_rankings([(0, 1, 2)], 3)
        out = solve_metric_lp(e, 0, 1)
        w = extract_pseudometric(out)
        a = w.as_array()
        size = a.shape[0]
        for i in range(size):
            for j in range(size):
                if a[i, j] <= 1e-9:
                    assert (abs(a[i] - a[j]) <= 1e-7).all()

    def test_rejects_non_optimal(self):
        e = Election(1, 2, (frozenset({(0, 1)}),))
        out = solve_metric_lp(e, 1, 0)
        assert out.status == UNBOUNDED
        with pytest.raises(ConfigError):
            extract_pseudometric(out)


class TestMinimax:
    def test_single_candidate(self):
        e = Election.from_rankings([(0,)], 1)
        rep = minimax(e)
        assert rep.winner == 0 and rep.per_candidate == (1.0,)

    def test_veto_instance_m10(self):
        gi = inst.veto_instance(10)
        rep = minimax(gi.election)
        assert rep.winner == 0
        assert rep.per_candidate[0] <= 1.5 + TAU_LP
        assert all(rep.per_candidate[b] >= 2.6 - 1e-6 for b in range(1, 10))

    def test_missing_voters_value(self):
        gi = inst.missing_voters_tight(Fraction(2, 5))
        rep = minimax(gi.election)
        assert close(rep.per_candidate[0], float(gi.expected["distortion_a"]), 1e-5)

    @pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0])
    def test_decisive_instance_alpha(self, alpha):
        gi = inst.decisive_instance(Fraction(alpha).limit_denominator(10))
        rep = minimax(gi.election, alpha=alpha)
        assert rep.winner in (0, 2)
        assert close(rep.per_candidate[rep.winner], 1 + 2 * alpha)
        assert close(rep.per_candidate[1], 2 + alpha)

    def test_alpha_one_matches_plain(self):
        for seed in range(4):
            e = inst.impartial_culture(7, 4, seed=seed).election
            assert minimax(e).winner == minimax(e, alpha=1.0).winner

    def test_report_serialises_infinities(self):
        e = Election(1, 2, (frozenset({(0, 1)}),))
        doc = minimax(e).to_json_dict()
        assert doc["values"][1][0] == "inf"
        assert doc["winner"] == 0

    def test_full_ranking_winner_within_three(self):
        for seed in range(3):
            e = inst.impartial_culture(9, 4, seed=seed).election
            rep = minimax(e)
            assert rep.per_candidate[rep.winner] <= 3 + TAU_LP


class TestSoundnessAgainstBruteForce:
    def test_cross_check_small(self):
        # pruned and full builders agree; witnesses are sound and tight
        for seed in range(6):
            e = inst.impartial_culture(5, 3, seed=seed).election
            for a in range(3):
                for b in range(3):
                    if a == b:
                        continue
                    out = solve_metric_lp(e, a, b)
                    ref = solve_metric_lp(e, a, b, triangle_mode="full")
                    assert out.status == ref.status
                    if out.status == OPTIMAL:
                        assert close(out.value, ref.value)
                        w = extract_pseudometric(out)
                        assert check_consistent(w, e)
                        sb = social_cost(w, b)
                        assert sb > 0
                        assert social_cost(w, a) / sb <= out.value * (1 + 1e-6) + 1e-9
