"""Election model: closure, consistency, counts, and the text format."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metricvote import instances as inst
from metricvote.core import (
    Election,
    MetricWitness,
    check_consistent,
    comparison_graph,
    election_from_text,
    election_to_text,
    induce_election,
    ktop_pairs,
    scores,
    social_cost,
    transitive_closure,
    truncate_to_ktop,
)
from metricvote.errors import DataFormatError, PreferenceCycleError


def pairs_strategy(m=5):
    pair = st.tuples(st.integers(0, m - 1), st.integers(0, m - 1)).filter(lambda p: p[0] != p[1])
    return st.frozensets(pair, max_size=10)


def small_election():
    @st.composite
    def build(draw):
        m = draw(st.integers(1, 4))
        n = draw(st.integers(0, 5))
        rankings = [draw(st.permutations(range(m))) for _ in range(n)]
        return Election.from_rankings([tuple(r) for r in rankings], m)

    return build()


class TestTransitiveClosure:
    def test_definition(self):
        assert transitive_closure({(0, 1), (1, 2)}) == {(0, 1), (1, 2), (0, 2)}

    def test_empty(self):
        assert transitive_closure(set()) == frozenset()

    def test_antisymmetry_violation(self):
        with pytest.raises(PreferenceCycleError):
            transitive_closure({(0, 1), (1, 0)})

    def test_longer_cycle(self):
        with pytest.raises(PreferenceCycleError):
            transitive_closure({(0, 1), (1, 2), (2, 0)})

    @given(pairs_strategy())
    def test_idempotent(self, pairs):
        try:
            closed = transitive_closure(pairs)
        except PreferenceCycleError:
            return
        assert transitive_closure(closed) == closed

    @given(pairs_strategy(), pairs_strategy())
    def test_monotone(self, p1, p2):
        try:
            c1 = transitive_closure(p1)
            c2 = transitive_closure(p1 | p2)
        except PreferenceCycleError:
            return
        assert c1 <= c2


class TestElection:
    def test_rejects_unclosed_prefs(self):
        with pytest.raises(PreferenceCycleError):
            Election(1, 3, (frozenset({(0, 1), (1, 2)}),))

    def test_rejects_out_of_range(self):
        with pytest.raises(DataFormatError):
            Election(1, 2, (frozenset({(0, 5)}),))

    def test_total_orders_get_canonical_annotation(self):
        e = Election(1, 3, (transitive_closure({(2, 1), (1, 0)}),))
        assert e.ktop[0] == (2, 1, 0)
        assert e.ranking(0) == (2, 1, 0)

    def test_ktop_annotation_must_match(self):
        with pytest.raises(DataFormatError):
            Election(1, 3, (frozenset({(0, 1)}),), ((0, 1),))

    def test_ktop_invariant_pairs(self):
        # listed candidates beat each other in order and all omitted ones
        e = Election.from_ktop([(2, 0)], 4)
        assert e.prefs[0] == {(2, 0), (2, 1), (2, 3), (0, 1), (0, 3)}
        assert e.top(0) == 2 and e.second(0) == 0

    def test_top_and_bottom_partial(self):
        e = Election(1, 3, (frozenset({(0, 1)}),))
        assert e.top(0) is None and e.bottom(0) is None

    def test_truncate_to_ktop(self):
        e = Election.from_rankings([(2, 0, 1)], 3)
        t = truncate_to_ktop(e, 1)
        assert t.ktop[0] == (2,)
        assert t.prefs[0] == {(2, 0), (2, 1)}


class TestConsistencyAndCost:
    def test_euclidean_induced_consistent(self):
        gi = inst.euclidean(12, 4, 2, seed=3)
        assert check_consistent(gi.witness, gi.election)

    def test_violated_pair(self):
        e = Election(1, 2, (frozenset({(0, 1)}),))
        w = MetricWitness(1, 2, ((0, 2, 1), (2, 0, 3), (1, 3, 0)))
        assert not check_consistent(w, e)

    def test_empty_prefs_vacuous(self):
        e = Election(1, 2, (frozenset(),))
        w = MetricWitness(1, 2, ((0, 2, 1), (2, 0, 3), (1, 3, 0)))
        assert check_consistent(w, e)

    def test_colocated_zero_cost(self):
        w = MetricWitness(2, 1, ((0, 0, 0), (0, 0, 0), (0, 0, 0)))
        assert social_cost(w, 0) == 0

    def test_chain_costs(self):
        gi = inst.chain(5)
        assert [social_cost(gi.witness, c) for c in range(5)] == [1, 3, 5, 7, 9]

    def test_veto_costs(self):
        gi = inst.veto_instance(4)
        assert social_cost(gi.witness, 0) == 4
        assert social_cost(gi.witness, 1) == 8


class TestComparisonGraph:
    def test_unanimous(self):
        e = Election.from_rankings([(0, 1)] * 3, 2)
        g = comparison_graph(e)
        assert g.weight(0, 1) == 1 and g.weight(1, 0) == 0

    def test_partial_support(self):
        e = Election(2, 2, (frozenset({(0, 1)}), frozenset()))
        g = comparison_graph(e)
        assert g.weight(0, 1) == Fraction(1, 2) and g.weight(1, 0) == 0

    @given(small_election())
    @settings(max_examples=40)
    def test_total_orders_complement(self, e):
        if e.n == 0:
            return
        g = comparison_graph(e)
        for a in range(e.m):
            for b in range(a + 1, e.m):
                assert g.weight(a, b) + g.weight(b, a) == 1

    @given(small_election())
    @settings(max_examples=40)
    def test_recount_matches_brute_force(self, e):
        if e.n == 0:
            return
        g = comparison_graph(e)
        for a in range(e.m):
            for b in range(e.m):
                if a != b:
                    assert g.counts[a][b] == sum(1 for i in range(e.n) if e.prefers(i, a, b))


class TestScores:
    def test_veto_instance_scores(self):
        gi = inst.veto_instance(4)
        s = scores(gi.election)
        assert s.plurality[0] == 0 and s.veto[0] == 1

    def test_unanimous_plurality(self):
        e = Election.from_rankings([(1, 0, 2)] * 4, 3)
        assert scores(e).plurality == (0, 4, 0)

    def test_disjoint_blocks_zero_coverage(self):
        gi = inst.ktop_lower_bound(5, 2, Fraction(1, 100))
        s = scores(gi.election)
        assert s.topk_coverage[4] == 0  # the centre candidate is in nobody's list
        assert sum(s.topk_coverage) == 2  # k

    @given(small_election())
    @settings(max_examples=40)
    def test_total_order_sums(self, e):
        if e.n == 0:
            return
        s = scores(e)
        assert sum(s.plurality) == e.n and sum(s.veto) == e.n


class TestTextFormat:
    def test_roundtrip_with_ties_and_omissions(self):
        text = "3 4\n0 > 1 = 2 > 3\n2 > 0\n\n"
        e = election_from_text(text)
        assert e.ktop[0] is None and e.ktop[1] == (2, 0) and e.ktop[2] is None
        assert e.prefs[2] == frozenset()
        assert election_from_text(election_to_text(e)) == e

    def test_ktop_semantics_of_omission(self):
        e = election_from_text("1 3\n2\n")
        assert e.prefs[0] == {(2, 0), (2, 1)}

    def test_bad_header(self):
        with pytest.raises(DataFormatError):
            election_from_text("nope\n")

    def test_duplicate_candidate(self):
        with pytest.raises(DataFormatError):
            election_from_text("1 3\n0 > 0\n")

    @given(small_election())
    @settings(max_examples=60)
    def test_roundtrip_total_orders(self, e):
        assert election_from_text(election_to_text(e)) == e

    def test_roundtrip_truncated(self):
        e = truncate_to_ktop(inst.impartial_culture(6, 5, seed=1).election, 2)
        assert election_from_text(election_to_text(e)) == e


class TestInduction:
    def test_tiebreak_override(self):
        # voter equidistant from both candidates
        w = MetricWitness(1, 2, ((0, 1, 1), (1, 0, 2), (1, 2, 0)))
        asc = induce_election(w, "index_asc")
        desc = induce_election(w, "index_desc")
        assert asc.ranking(0) == (0, 1) and desc.ranking(0) == (1, 0)

    def test_line_single_peaked(self):
        gi = inst.euclidean(6, 4, 1, seed=9)
        e, w = gi.election, gi.witness
        assert check_consistent(w, e)
        # along a line, each voter's ranking is single-peaked in candidate position
        order = sorted(range(4), key=lambda c: w.vc(0, c))
        assert e.ranking(0)[0] == order[0]
