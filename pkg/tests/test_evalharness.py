from __future__ import annotations

import statistics

import pytest

from scenforge.errors import EmptyInput, OutOfRange, UnmatchedScore
from scenforge.evalharness import (
    HumanScores,
    RunRecord,
    correctness_rate,
    format_are,
    load_results,
    load_scores,
    render_table,
    score_are,
    summarize,
    write_tables,
)


def record(report_id: str, valid: bool = True, seconds: float = 1.0, strategy="s"):
    flag = {"syntactic": valid, "semantic": valid, "executable": valid}
    return RunRecord(report_id, strategy, valid, seconds, flag)


# --- score_are -----------------------------------------------------------------


def test_score_are_exact_arithmetic():
    value = score_are(4.1, 4.5, 4.2)
    assert value == (4.1 + 4.5 + 4.2) / 3
    assert round(value, 4) == 4.2667
    assert f"{value:.1f}" == "4.3"


def test_score_are_constant_inputs():
    assert score_are(5, 5, 5) == 5.0
    assert score_are(1, 1, 1) == 1.0


def test_score_are_symmetric_and_bounded():
    import itertools

    for a, r, e in itertools.permutations((2, 3, 5)):
        assert score_are(a, r, e) == score_are(2, 3, 5)
        assert min(a, r, e) <= score_are(a, r, e) <= max(a, r, e)


def test_score_are_out_of_range():
    with pytest.raises(OutOfRange):
        score_are(0.5, 3, 3)
    with pytest.raises(OutOfRange):
        score_are(3, 3, 5.5)


def test_human_scores_validate_integer_range():
    with pytest.raises(OutOfRange):
        HumanScores("r1", 0, 3, 3)
    with pytest.raises(OutOfRange):
        HumanScores("r1", 3, 6, 3)


# --- correctness rate ---------------------------------------------------------


def test_correctness_rate_basic():
    results = [record(f"r{i}", valid=i < 90) for i in range(100)]
    summary = correctness_rate(results)
    assert summary.count == 90
    assert summary.rate == 0.90


def test_correctness_rate_all_fail():
    results = [record(f"r{i}", valid=False) for i in range(10)]
    assert correctness_rate(results).rate == 0.0


def test_correctness_rate_empty_raises():
    with pytest.raises(EmptyInput):
        correctness_rate([])


def test_correctness_rate_permutation_invariant():
    results = [record(f"r{i}", valid=i % 3 == 0) for i in range(30)]
    forward = correctness_rate(results)
    backward = correctness_rate(list(reversed(results)))
    assert forward == backward


def test_correctness_count_additive_over_disjoint_sets():
    part_a = [record(f"a{i}", valid=i % 2 == 0) for i in range(10)]
    part_b = [record(f"b{i}", valid=i % 5 == 0) for i in range(10)]
    combined = correctness_rate(part_a + part_b)
    assert combined.count == correctness_rate(part_a).count + correctness_rate(part_b).count


# --- summarize ------------------------------------------------------------------


def test_summarize_singleton():
    row = summarize([record("r1", seconds=2.0)], [HumanScores("r1", 4, 4, 4)], "s")
    assert row.are_score == 4.0
    assert row.inference_time_mean == 2.0
    assert row.rated_reports == 1
    assert row.are_stderr == 0.0


def test_summarize_zero_variance_stderr():
    results = [record("r1"), record("r2")]
    scores = [HumanScores("r1", 4, 4, 4), HumanScores("r2", 4, 4, 4)]
    row = summarize(results, scores, "s")
    assert row.are_stderr == 0.0


def test_summarize_unmatched_score():
    with pytest.raises(UnmatchedScore, match="ghost"):
        summarize([record("r1")], [HumanScores("ghost", 4, 4, 4)], "s")


def test_summarize_multiple_raters_average_within_report():
    results = [record("r1")]
    scores = [HumanScores("r1", 4, 4, 4, "a"), HumanScores("r1", 2, 2, 2, "b")]
    row = summarize(results, scores, "s")
    assert row.accuracy_mean == 3.0
    assert row.are_score == 3.0


def test_summarize_stderr_matches_statistics_module():
    results = [record(f"r{i}") for i in range(4)]
    scores = [
        HumanScores("r0", 4, 4, 4),
        HumanScores("r1", 5, 5, 5),
        HumanScores("r2", 3, 3, 3),
        HumanScores("r3", 4, 5, 3),
    ]
    row = summarize(results, scores, "s")
    ares = [4.0, 5.0, 3.0, 4.0]
    assert row.are_stderr == pytest.approx(statistics.stdev(ares) / 2)


def test_summarize_without_scores_yields_time_and_counts_only():
    row = summarize([record("r1")], [], "s")
    assert row.are_score is None
    assert row.correctness_count == 1
    assert format_are(row) == "-"


def test_summarize_are_equals_mean_of_three_means():
    results = [record("r1"), record("r2")]
    scores = [HumanScores("r1", 4, 5, 3), HumanScores("r2", 2, 4, 5)]
    row = summarize(results, scores, "s")
    expected = (row.accuracy_mean + row.relevance_mean + row.expressiveness_mean) / 3
    assert row.are_score == expected


# --- display -------------------------------------------------------------------


def _scores_for_table_row():
    """Ten per-report integer score triplets whose means are exactly
    (4.1, 4.5, 4.2); frozen after computing the stderr with the
    statistics module."""
    accuracy = [4, 4, 4, 4, 4, 4, 4, 4, 4, 5]          # mean 4.1
    relevance = [4, 4, 4, 4, 4, 5, 5, 5, 5, 5]          # mean 4.5
    expressiveness = [4, 4, 4, 4, 4, 4, 4, 4, 5, 5]     # mean 4.2
    return [
        HumanScores(f"r{i}", accuracy[i], relevance[i], expressiveness[i])
        for i in range(10)
    ]


def test_rebuilt_headline_row_formats_with_plus_minus():
    scores = _scores_for_table_row()
    results = [record(f"r{i}", seconds=109.860) for i in range(10)]
    row = summarize(results, scores, "compositional")
    assert row.accuracy_mean == pytest.approx(4.1)
    assert row.relevance_mean == pytest.approx(4.5)
    assert row.expressiveness_mean == pytest.approx(4.2)
    assert f"{row.are_score:.1f}" == "4.3"
    # frozen from statistics.stdev of the per-report ARE values / sqrt(10)
    ares = [score_are(s.accuracy, s.relevance, s.expressiveness) for s in scores]
    expected_stderr = statistics.stdev(ares) / (10 ** 0.5)
    assert row.are_stderr == pytest.approx(expected_stderr)
    assert format_are(row) == "4.3 ± 0.1"
    rendered = render_table([row])
    assert "4.3 ± 0.1" in rendered
    assert "109.860" in rendered


def test_render_table_has_header_and_rates():
    row = summarize([record("r1")], [], "zero_shot")
    rendered = render_table([row])
    assert rendered.splitlines()[0].startswith("strategy")
    assert "1 (1.00)" in rendered


# --- files ----------------------------------------------------------------------


def test_load_scores_round_trip(tmp_path):
    path = tmp_path / "scores.jsonl"
    path.write_text(
        '{"report_id": "r1", "rater_id": "a", "accuracy": 4, "relevance": 5, "expressiveness": 3}\n'
        '{"report_id": "r2", "accuracy": 2, "relevance": 2, "expressiveness": 2}\n'
    )
    scores = load_scores(path)
    assert len(scores) == 2
    assert scores[0].rater_id == "a"
    assert scores[1].rater_id == "rater-0"


def test_load_results_and_write_tables(tmp_path, config):
    from scenforge.pipeline import run_pipeline, write_run_result
    from scenforge.gateway import Gateway, MemoryCache
    from scenforge.reports import load_report
    from support import happy_transcript, playback, write_report

    report = load_report(write_report(tmp_path))
    result = run_pipeline(report, config, Gateway(playback(happy_transcript()), cache=MemoryCache()))
    out = tmp_path / "results"
    write_run_result(result, out)
    records = load_results(out)
    assert len(records) == 1
    assert records[0].report_id == "r1"
    assert records[0].success
    row = summarize(records, [HumanScores("r1", 4, 4, 4)], "compositional")
    written = write_tables([row], tmp_path / "tables")
    assert any(p.name == "metrics_compositional.txt" for p in written)
    assert any(p.name == "metrics_all.txt" for p in written)
