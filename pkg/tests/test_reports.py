from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenforge.errors import MalformedReport
from scenforge.reports import (
    AGENT_KINDS,
    ROAD_CONTEXT_VALUES,
    AgentMention,
    ReportRecord,
    classify_report,
    corpus_report_path,
    difficulty_rank,
    load_manifest,
    load_report,
)
from support import write_corpus, write_report


def test_load_report_normalizes_and_counts_agents(tmp_path):
    path = write_report(tmp_path)
    record = load_report(path)
    assert record.id == "r1"
    assert len(record.dynamic_agents) == 2
    assert record.weather == "clear"
    assert "  " not in record.narrative


def test_empty_narrative_is_malformed(tmp_path):
    path = write_report(tmp_path, narrative="   ")
    with pytest.raises(MalformedReport, match="narrative"):
        load_report(path)


def test_missing_agents_is_malformed(tmp_path):
    path = write_report(tmp_path, agents=[])
    with pytest.raises(MalformedReport, match="agent"):
        load_report(path)


def test_missing_weather_defaults_to_unknown(tmp_path):
    payload = json.loads(write_report(tmp_path).read_text())
    del payload["weather"]
    del payload["lighting"]
    path = tmp_path / "r2.report"
    path.write_text(json.dumps(payload))
    record = load_report(path)
    assert record.weather == "unknown"
    assert record.lighting == "unknown"


def test_unknown_agent_kind_coerced_to_other(tmp_path):
    path = write_report(
        tmp_path, agents=[{"kind": "av"}, {"kind": "rickshaw", "role_text": "x"}]
    )
    record = load_report(path)
    assert record.dynamic_agents[1].kind == "other"
    assert record.dynamic_agents[1].role_text == "x"


def test_invalid_json_is_malformed(tmp_path):
    path = tmp_path / "bad.report"
    path.write_text("{not json")
    with pytest.raises(MalformedReport):
        load_report(path)


def _record(agents: int, road: str = "public_road", narrative: str = "plain collision"):
    mentions = tuple(AgentMention("av" if i == 0 else "car") for i in range(agents))
    return ReportRecord(
        id="t", narrative=narrative, road_context=road, dynamic_agents=mentions
    )


def test_single_agent_public_road_is_easy():
    difficulty = classify_report(_record(1))
    assert difficulty.level == "easy"
    assert "public road" in difficulty.reason


def test_two_agents_is_medium():
    difficulty = classify_report(_record(2))
    assert difficulty.level == "medium"
    assert "two dynamic agents" in difficulty.reason


def test_three_agents_is_hard():
    assert classify_report(_record(3)).level == "hard"


def test_overtaking_language_is_hard():
    difficulty = classify_report(
        _record(2, narrative="one vehicle was overtaking the AV illegally")
    )
    assert difficulty.level == "hard"
    assert "overtak" in difficulty.reason


def test_parking_lot_is_medium_even_with_one_agent():
    difficulty = classify_report(_record(1, road="parking_lot"))
    assert difficulty.level == "medium"
    assert "no default map" in difficulty.reason


def test_classification_is_deterministic():
    record = _record(2)
    assert classify_report(record) == classify_report(record)


_road = st.sampled_from(sorted(ROAD_CONTEXT_VALUES))
_kinds = st.sampled_from(sorted(AGENT_KINDS))
_narrative = st.sampled_from(
    ["rear-ended at rest", "a swerve before impact", "slow merge", "U-turn gone wrong"]
)


@given(
    agents=st.lists(_kinds, min_size=1, max_size=6),
    road=_road,
    narrative=_narrative,
)
@settings(max_examples=200, deadline=None)
def test_adding_an_agent_never_lowers_difficulty(agents, road, narrative):
    mentions = tuple(AgentMention(k) for k in agents)
    record = ReportRecord(
        id="p", narrative=narrative, road_context=road, dynamic_agents=mentions
    )
    grown = ReportRecord(
        id="p", narrative=narrative, road_context=road,
        dynamic_agents=mentions + (AgentMention("car"),),
    )
    before = classify_report(record)
    after = classify_report(grown)
    assert difficulty_rank(after.level) >= difficulty_rank(before.level)


def test_manifest_round_trip(tmp_path):
    corpus_dir = write_corpus(tmp_path / "corpus", ["a1", "a2", "a3"])
    corpus = load_manifest(corpus_dir)
    assert corpus.report_ids == ("a1", "a2", "a3")
    for report_id in corpus.report_ids:
        assert corpus_report_path(corpus, report_id).is_file()


def test_manifest_missing_is_malformed(tmp_path):
    with pytest.raises(MalformedReport):
        load_manifest(tmp_path)
