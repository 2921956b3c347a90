"""Crash-report ingestion and difficulty classification.

Report files are JSON documents (conventionally ``*.report``) with the
fields id, narrative, weather, lighting, road_context, agents and
damage; a corpus directory holds many of them plus a ``manifest.txt``
listing ids in evaluation order.

Classification is mechanized with explicit rules so it is reproducible:
three or more dynamic agents, or advanced-maneuver language in the
narrative, is hard; a single agent on a public road is easy; everything
else - two agents, unsupported road layouts, unknown settings - is
medium. All moving agents count toward the tally, the AV included.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MalformedReport

WEATHER_VALUES = frozenset({"clear", "rain", "fog", "snow", "unknown"})
LIGHTING_VALUES = frozenset({"day", "dusk", "night", "unknown"})
ROAD_CONTEXT_VALUES = frozenset(
    {"public_road", "intersection", "parking_lot", "highway", "other"}
)
AGENT_KINDS = frozenset(
    {"av", "car", "truck", "cyclist", "pedestrian", "motorcycle", "other"}
)

EASY = "easy"
MEDIUM = "medium"
HARD = "hard"

# narrative substrings that signal maneuvers the primitive behavior set
# cannot express directly
DEFAULT_MANEUVER_KEYWORDS = ("overtake", "overtaking", "swerve", "aggressive", "u-turn", "reverse")

# road layouts with no default map available
_UNSUPPORTED_ROAD_CONTEXTS = frozenset({"parking_lot", "other"})

MANIFEST_NAME = "manifest.txt"
REPORT_SUFFIX = ".report"


@dataclass(frozen=True)
class AgentMention:
    kind: str
    role_text: str = ""


@dataclass(frozen=True)
class ReportRecord:
    id: str
    narrative: str
    weather: str = "unknown"
    lighting: str = "unknown"
    road_context: str = "other"
    dynamic_agents: tuple = ()
    damage: str = ""
    source_path: str = ""


@dataclass(frozen=True)
class Difficulty:
    level: str
    reason: str


def _normalize_text(text: str) -> str:
    return " ".join(text.split())


def _coerce_enum(value, allowed, default: str) -> str:
    if isinstance(value, str) and value.strip().lower() in allowed:
        return value.strip().lower()
    return default


def load_report(path) -> ReportRecord:
    """Load one report file; unknown enum fields fall back to their
    unknown value, missing narrative or agents are malformed."""
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedReport(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedReport(f"{path}: report must be a JSON object")
    narrative = _normalize_text(str(data.get("narrative", "")))
    if not narrative:
        raise MalformedReport(f"{path}: narrative is missing or empty")
    agents_raw = data.get("agents")
    if not isinstance(agents_raw, list) or not agents_raw:
        raise MalformedReport(f"{path}: report needs at least one agent")
    agents = []
    for item in agents_raw:
        if isinstance(item, str):
            kind, role = item, ""
        elif isinstance(item, dict):
            kind, role = item.get("kind", ""), str(item.get("role_text", ""))
        else:
            raise MalformedReport(f"{path}: malformed agent entry {item!r}")
        kind = str(kind).strip().lower()
        if kind not in AGENT_KINDS:
            kind = "other"
        agents.append(AgentMention(kind, _normalize_text(role)))
    report_id = str(data.get("id") or path.stem)
    return ReportRecord(
        id=report_id,
        narrative=narrative,
        weather=_coerce_enum(data.get("weather"), WEATHER_VALUES, "unknown"),
        lighting=_coerce_enum(data.get("lighting"), LIGHTING_VALUES, "unknown"),
        road_context=_coerce_enum(data.get("road_context"), ROAD_CONTEXT_VALUES, "other"),
        dynamic_agents=tuple(agents),
        damage=_normalize_text(str(data.get("damage", ""))),
        source_path=str(path),
    )


def classify_report(
    report: ReportRecord,
    maneuver_keywords=DEFAULT_MANEUVER_KEYWORDS,
) -> Difficulty:
    """Deterministic difficulty classification; total over valid records."""
    agents = len(report.dynamic_agents)
    narrative = report.narrative.lower()
    for keyword in maneuver_keywords:
        if keyword.lower() in narrative:
            return Difficulty(HARD, f"narrative mentions '{keyword}' (advanced maneuver)")
    if agents >= 3:
        return Difficulty(HARD, f"{agents} dynamic agents (three or more)")
    if agents == 2:
        return Difficulty(MEDIUM, "two dynamic agents")
    if report.road_context in _UNSUPPORTED_ROAD_CONTEXTS:
        return Difficulty(
            MEDIUM, f"road context '{report.road_context}' has no default map"
        )
    if agents == 1 and report.road_context == "public_road":
        return Difficulty(EASY, "single dynamic agent on a public road")
    return Difficulty(
        MEDIUM,
        f"single agent but road context '{report.road_context}' is not a plain public road",
    )


_LEVEL_ORDER = {EASY: 0, MEDIUM: 1, HARD: 2}


def difficulty_rank(level: str) -> int:
    return _LEVEL_ORDER[level]


@dataclass(frozen=True)
class Corpus:
    directory: Path
    report_ids: tuple


def load_manifest(directory) -> Corpus:
    """Read a corpus manifest: one report id per line, evaluation order."""
    directory = Path(directory)
    manifest = directory / MANIFEST_NAME
    if not manifest.is_file():
        raise MalformedReport(f"no {MANIFEST_NAME} in {directory}")
    ids = [
        line.strip()
        for line in manifest.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]
    if not ids:
        raise MalformedReport(f"{manifest} lists no report ids")
    return Corpus(directory, tuple(ids))


def corpus_report_path(corpus: Corpus, report_id: str) -> Path:
    return corpus.directory / f"{report_id}{REPORT_SUFFIX}"
