import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genrank.errors import DomainError, StructuralError
from genrank.graph import validate
from genrank.ingest import (VisitCounts, VisitLog, accumulate, estimate_model, read_counts,
                            read_visit_log, row_drift, write_counts, write_visit_log)


def counts_of(sessions, n):
    return accumulate(VisitLog.from_sessions(sessions), n)


def single_row_counts(n, visits, terms, transitions):
    src = [i for i, _ in transitions]
    tgt = [j for _, j in transitions]
    return VisitCounts.from_triples(n, visits, terms, src, tgt, list(transitions.values()))


class TestAccumulate:
    def test_single_pair(self):
        c = counts_of([[0, 1]], 2)
        assert c.visits.tolist() == [1, 1]
        assert c.terminations.tolist() == [0, 1]
        assert c.transitions() == {(0, 1): 1}

    def test_length_one_sessions(self):
        c = counts_of([[0], [0]], 1)
        assert c.visits.tolist() == [2]
        assert c.terminations.tolist() == [2]
        assert c.transitions() == {}

    def test_self_transition(self):
        c = counts_of([[0, 1], [0, 0, 1]], 2)
        assert c.visits.tolist() == [3, 2]
        assert c.terminations.tolist() == [0, 2]
        assert c.transitions() == {(0, 0): 1, (0, 1): 2}

    def test_out_of_range_names_session(self):
        with pytest.raises(StructuralError, match="session 1"):
            counts_of([[0, 1], [1, 5]], 3)

    def test_empty_session_rejected(self):
        with pytest.raises(StructuralError):
            VisitLog.from_sessions([[0], []])

    def test_invariant_enforced(self):
        with pytest.raises(DomainError):
            single_row_counts(2, [3, 0], [1, 0], {(0, 1): 1})

    sessions = st.lists(st.lists(st.integers(0, 7), min_size=1, max_size=12), max_size=40)

    @settings(max_examples=100, deadline=None)
    @given(a=sessions, b=sessions)
    def test_merge_consistency(self, a, b):
        assert counts_of(a + b, 8) == counts_of(a, 8) + counts_of(b, 8)

    @settings(max_examples=100, deadline=None)
    @given(a=sessions)
    def test_counting_identities(self, a):
        c = counts_of(a, 8)
        assert c.visits.sum() == sum(map(len, a))
        assert c.terminations.sum() == len(a)
        assert c.t_counts.sum() == sum(len(s) - 1 for s in a)


class TestEstimate:
    def test_direct_ratio(self):
        c = single_row_counts(2, [10, 0], [4, 0], {(0, 1): 6})
        m = estimate_model(c)
        assert m.W.row(0)[1].tolist() == [0.4, 0.6]
        assert m.A.values[0] == pytest.approx(0.6, abs=1e-15)

    def test_zero_visit_sink(self):
        m = estimate_model(single_row_counts(2, [10, 0], [4, 0], {(0, 1): 6}), "sink", 1e-6)
        assert m.W.toarray()[1].tolist() == [0.0, 1.0]
        assert m.A.values[1] == 1e-6

    def test_zero_visit_uniform(self):
        m = estimate_model(single_row_counts(2, [10, 0], [4, 0], {(0, 1): 6}), "uniform")
        assert m.W.toarray()[1].tolist() == [0.5, 0.5]

    def test_all_terminate(self):
        m = estimate_model(counts_of([[0], [0], [1, 0]], 2), eps=1e-6)
        assert m.W.diagonal[0] == 1.0
        assert m.A.values[0] == 1e-6

    def test_self_transitions_fold_into_diagonal(self):
        m = estimate_model(counts_of([[0, 1], [0, 0, 1]], 2))
        np.testing.assert_allclose(m.W.toarray()[0], [1 / 3, 2 / 3], rtol=0, atol=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(a=TestAccumulate.sessions, policy=st.sampled_from(["sink", "uniform"]))
    def test_always_valid(self, a, policy):
        assert validate(estimate_model(counts_of(a, 8), policy).W).ok

    @settings(max_examples=100, deadline=None)
    @given(a=TestAccumulate.sessions, times=st.integers(2, 5))
    def test_scale_consistency(self, a, times):
        once = estimate_model(counts_of(a, 8))
        many = estimate_model(counts_of(a * times, 8))
        assert once.W == many.W and once.A == many.A

    def test_unknown_policy(self):
        with pytest.raises(DomainError):
            estimate_model(counts_of([[0]], 1), "drop")


class TestDrift:
    def test_identical(self):
        c = counts_of([[0, 1, 2], [2, 0], [1]], 3)
        rep = row_drift(c, c)
        assert rep.distances.tolist() == [0.0, 0.0, 0.0]
        assert rep.flagged_rows == []

    @pytest.mark.parametrize("threshold", [0.1, 1.0, 1.99])
    def test_disjoint_rows(self, threshold):
        old = counts_of([[0], [1]], 2)
        new = counts_of([[0, 1]], 2)
        rep = row_drift(old, new, threshold)
        assert rep.distances[0] == 2.0
        assert rep.flagged[0]

    def test_threshold_two_not_exceeded(self):
        rep = row_drift(counts_of([[0], [1]], 2), counts_of([[0, 1]], 2), 2.0)
        assert rep.distances[0] == 2.0 and not rep.flagged[0]

    def test_half_shift(self):
        old = counts_of([[0], [0, 1]], 2)
        new = counts_of([[0], [0], [1]], 2)
        rep = row_drift(old, new)
        assert rep.distances[0] == 1.0

    def test_insufficient(self):
        old = counts_of([[0]], 2)
        new = counts_of([[0], [1]], 2)
        rep = row_drift(old, new)
        assert rep.insufficient.tolist() == [False, True]
        assert np.isnan(rep.distances[1]) and not rep.flagged[1]

    def test_dimension_mismatch(self):
        with pytest.raises(StructuralError):
            row_drift(counts_of([[0]], 1), counts_of([[0]], 2))

    @pytest.mark.parametrize("threshold", [0.0, 2.5])
    def test_threshold_domain(self, threshold):
        c = counts_of([[0]], 1)
        with pytest.raises(DomainError):
            row_drift(c, c, threshold)

    @settings(max_examples=100, deadline=None)
    @given(a=TestAccumulate.sessions, b=TestAccumulate.sessions)
    def test_distance_range(self, a, b):
        rep = row_drift(counts_of(a, 8), counts_of(b, 8))
        d = rep.distances[~rep.insufficient]
        assert np.all((d >= 0) & (d <= 2))


class TestFormats:
    def test_visit_log_round_trip(self):
        text = "# header\n3,7,7,2\n\n0\n"
        log = read_visit_log(io.StringIO(text))
        assert [s.tolist() for s in log] == [[3, 7, 7, 2], [0]]
        out = io.StringIO()
        write_visit_log(log, out)
        assert out.getvalue() == "3,7,7,2\n0\n"

    def test_bad_log_line(self):
        with pytest.raises(StructuralError, match="line 2"):
            read_visit_log(io.StringIO("1,2\n1,,2\n"))

    def test_counts_round_trip(self):
        c = counts_of([[0, 1], [0, 0, 1], [2]], 3)
        buf = io.StringIO()
        write_counts(c, buf)
        assert buf.getvalue() == (
            "# node\tvisits\tterminations\n0\t3\t0\n1\t2\t2\n2\t1\t1\n"
            "\n# source\ttarget\tcount\n0\t0\t1\n0\t1\t2\n"
        )
        buf.seek(0)
        assert read_counts(buf) == c

    def test_counts_file_invariant_checked(self):
        with pytest.raises(DomainError):
            read_counts(io.StringIO("0\t2\t1\n1\t0\t0\n\n"))
