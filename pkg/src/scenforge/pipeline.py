"""Pipeline orchestration: staged prompting, compiler-feedback repair,
stitching, and the execution check.

The compositional strategy runs four stages in order: a three-expert
panel identifies scene objects, follow-up questions are collected for
every missing property, the panel answers them (directly or as
probability distributions), and the program is generated by parts under
per-section line constraints, with retrieved examples in the prompt.
Each part is compiled on arrival; compiler diagnostics drive a bounded
zero-shot repair loop. Clean parts are stitched and the whole program
must instantiate a scene, with a second bounded repair loop on failure.

Baseline strategies issue one-shot generations (sectioned for the
constrained baseline) and never see compiler feedback; they exist for
comparison runs.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .bundled import bundled_map, bundled_registry, example_programs
from .distributions import (
    DistributionSpec,
    distribution_from_expr,
    distribution_to_source,
)
from .errors import (
    ConstraintUnsatisfiable,
    GatewayError,
    MarkerMissing,
    RepairExhausted,
    ScenForgeError,
)
from .gateway import Gateway
from .prompts import PromptFactory, extract_code, section_constraint
from .retrieval import LocalHashEmbedder, VectorStore, hyde_query
from .scene import ValidityReport, check_validity
from .scenic import (
    SECTION_KINDS,
    ProgramParts,
    compile_section,
    has_errors,
    parse_section,
    render_diagnostics,
    section_behaviors,
    section_names,
    stitch,
)
from .scenic.diagnostics import ERROR, Diagnostic
from .scenic.sections import PART_FAILED, PART_OK

log = logging.getLogger(__name__)

COMPOSITIONAL = "compositional"
BASELINE_STRATEGIES = ("zero_shot", "few_shot", "rag", "rag_hyde", "constrained")
STRATEGIES = (COMPOSITIONAL,) + BASELINE_STRATEGIES

OUTCOME_OK = "ok"
OUTCOME_REPAIRED = "repaired"
OUTCOME_FAILED = "failed"

DEFAULT_SECTION_RETRY_BUDGET = 5
DEFAULT_PROGRAM_RETRY_BUDGET = 3
DEFAULT_RETRIEVAL_K = 3


@dataclass
class PipelineConfig:
    strategy: str = COMPOSITIONAL
    model_id: str = "default-model"
    section_retry_budget: int = DEFAULT_SECTION_RETRY_BUDGET
    program_retry_budget: int = DEFAULT_PROGRAM_RETRY_BUDGET
    retrieval_k: int = DEFAULT_RETRIEVAL_K
    seed: int = 0
    registry: object = None
    network: object = None
    max_rejections: int = 1000
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.section_retry_budget < 0 or self.program_retry_budget < 0:
            raise ValueError("retry budgets must be >= 0")
        if self.retrieval_k < 1:
            raise ValueError("retrieval_k must be >= 1")
        if self.registry is None:
            self.registry = bundled_registry()
        if self.network is None:
            self.network = bundled_map("cross4")


@dataclass
class RetrievalSetup:
    store: VectorStore | None = None
    embedder: LocalHashEmbedder = field(default_factory=LocalHashEmbedder)


@dataclass(frozen=True)
class TraceInteraction:
    digest: str
    text: str
    latency_seconds: float
    from_cache: bool


@dataclass
class StageTrace:
    stage: str
    interactions: list
    diagnostics_fed_back: list
    outcome: str


@dataclass
class RunResult:
    report_id: str
    strategy: str
    final_program: str | None
    validity: ValidityReport
    traces: list
    wall_seconds: float
    success: bool
    failure: str | None = None
    repairs: dict = field(default_factory=dict)

    @property
    def backend_calls(self) -> int:
        return sum(
            1
            for trace in self.traces
            for interaction in trace.interactions
            if not interaction.from_cache
        )


@dataclass(frozen=True)
class Answer:
    label: str
    text: str
    value: object  # DistributionSpec, str, float, or None
    source: str    # model | reprompt | fallback

    @property
    def is_distribution(self) -> bool:
        return isinstance(self.value, DistributionSpec)


class _TraceRecorder:
    def __init__(self, gateway: Gateway):
        self.gateway = gateway
        self.traces: list[StageTrace] = []
        self.gateway.drain_events()  # start clean

    def close(self, stage: str, outcome: str = OUTCOME_OK, diagnostics=()) -> None:
        events = self.gateway.drain_events()
        self.traces.append(
            StageTrace(
                stage=stage,
                interactions=[
                    TraceInteraction(
                        e.digest, e.text, e.latency_seconds, e.from_cache
                    )
                    for e in events
                ],
                diagnostics_fed_back=[str(d) for d in diagnostics],
                outcome=outcome,
            )
        )


# --- stages -------------------------------------------------------------------


def stage_objects(report, gateway: Gateway, factory: PromptFactory) -> list[str]:
    """Three-expert object identification; parses the FINAL ANSWER block,
    reprompting once before giving up."""
    request = factory.objects_request(report)
    completion = gateway.complete(request)
    items = prompts.parse_final_answer(completion.text)
    if items:
        return items
    followup = factory.objects_followup(request, completion.text)
    completion = gateway.complete(followup)
    items = prompts.parse_final_answer(completion.text)
    if items:
        return items
    raise MarkerMissing(
        f"no '{prompts.FINAL_ANSWER_MARKER}' block after one reprompt"
    )


def stage_questions(report, objects, gateway: Gateway, factory: PromptFactory) -> list[str]:
    """Property questions, padded with templates so speed/placement/type
    per object plus weather and road setting are always covered."""
    completion = gateway.complete(factory.questions_request(report, objects))
    questions = prompts.parse_questions(completion.text)
    return prompts.ensure_question_coverage(questions, objects)


def _interpret_answers(raw) -> tuple[list[Answer], list[prompts.RawAnswer]]:
    answers: list[Answer] = []
    bad: list[prompts.RawAnswer] = []
    for item in raw:
        if not item.is_assignment:
            answers.append(Answer(item.label, item.text, item.text, "model"))
            continue
        value = _parse_assignment_value(item.label, item.text)
        if value is not None:
            answers.append(Answer(item.label, item.text, value, "model"))
        elif prompts.looks_like_distribution(item.text):
            bad.append(item)
        else:
            answers.append(Answer(item.label, item.text, item.text, "model"))
    return answers, bad


def _parse_assignment_value(label: str, rhs: str):
    result = parse_section(f"{label} = {rhs}", "constants")
    if not result.ok or not result.statements:
        return None
    expr = result.statements[0].value
    spec = distribution_from_expr(expr)
    if spec is not None:
        return spec
    from .scenic import ast as _ast  # local import to keep module surface tidy

    if isinstance(expr, _ast.NumberLit):
        return expr.value
    if isinstance(expr, _ast.StringLit):
        return expr.value
    if prompts.looks_like_distribution(rhs):
        return None
    return rhs


def stage_answers(report, questions, gateway: Gateway, factory: PromptFactory) -> list[Answer]:
    """Expert answers: direct values or distributions. Unparseable
    distribution answers get one reformat reprompt, then a Range fallback
    over the facet default, so the stage is total."""
    request = factory.answers_request(report, questions)
    completion = gateway.complete(request)
    answers, bad = _interpret_answers(prompts.parse_answers(completion.text))
    if bad:
        reprompt = factory.answers_reformat(
            request, completion.text, [f"{a.label} = {a.text}" for a in bad]
        )
        retry = gateway.complete(reprompt)
        fixed, _ = _interpret_answers(prompts.parse_answers(retry.text))
        fixed_by_label = {
            a.label: a for a in fixed if isinstance(a.value, DistributionSpec)
        }
        for item in bad:
            repaired = fixed_by_label.get(item.label)
            if repaired is not None:
                answers.append(
                    Answer(item.label, repaired.text, repaired.value, "reprompt")
                )
            else:
                low, high = prompts.fallback_range(item.label)
                answers.append(
                    Answer(
                        item.label,
                        item.text,
                        DistributionSpec.uniform_range(low, high),
                        "fallback",
                    )
                )
    return answers


def render_answers(answers: list[Answer]) -> str:
    lines = []
    for answer in answers:
        if isinstance(answer.value, DistributionSpec):
            lines.append(f"{answer.label} = {distribution_to_source(answer.value)}")
        elif answer.label and not answer.text.startswith(answer.label):
            lines.append(f"{answer.label}: {answer.value}")
        else:
            lines.append(str(answer.value))
    return "\n".join(lines)


def stage_section(
    kind: str, report, objects, answers_block: str, examples,
    gateway: Gateway, factory: PromptFactory,
) -> str:
    """Constrained generation of one program section. An exhausted
    constraint budget yields an empty section, which the caller routes
    into repair rather than aborting the run."""
    request = factory.section_request(report, kind, objects, answers_block, examples)
    try:
        completion = gateway.complete_constrained(request, section_constraint(kind))
    except ConstraintUnsatisfiable:
        return ""
    return completion.text


def repair_section(
    kind: str,
    section_text: str,
    diagnostics,
    gateway: Gateway,
    factory: PromptFactory,
    budget: int,
    registry,
    env=(),
    known_behaviors=None,
    report_id: str = "report",
):
    """Compiler-feedback repair: reprompt with the rendered diagnostics,
    recompile each candidate, stop at the first clean one. Performs
    exactly ``budget`` attempts before raising RepairExhausted."""
    current_text = section_text
    current_diags = list(diagnostics)
    for attempt in range(1, budget + 1):
        request = factory.repair_request(
            report_id, kind, current_text, render_diagnostics(current_diags), attempt
        )
        completion = gateway.complete(request)
        candidate = extract_code(completion.text)
        statements, diags = compile_section(
            candidate, kind, registry, env, known_behaviors
        )
        if statements is not None and not has_errors(diags):
            return candidate, statements, attempt
        current_text = candidate
        current_diags = diags
    raise RepairExhausted(
        f"{kind} section still broken after {budget} repair attempt(s)",
        current_diags,
    )


def finalize(parts: ProgramParts, config: PipelineConfig, gateway: Gateway,
             factory: PromptFactory, report_id: str):
    """Stitch, check validity (including scene instantiation), and run the
    whole-program repair loop when the execution check fails."""
    program = stitch(parts)
    validity = check_validity(
        program, config.registry, config.network, config.seed, config.max_rejections
    )
    attempts = 0
    while not validity.valid and attempts < config.program_retry_budget:
        attempts += 1
        request = factory.program_repair_request(
            report_id, program, render_diagnostics(validity.diagnostics), attempts
        )
        completion = gateway.complete(request)
        program = extract_code(completion.text)
        validity = check_validity(
            program, config.registry, config.network, config.seed, config.max_rejections
        )
    return program, validity, attempts


def _retrieve_examples(report, config, gateway, factory, retrieval):
    """One HyDE retrieval per run: draft once, embed the draft, reuse the
    retrieved examples for all three section prompts."""
    store = retrieval.store
    if store is None or len(store) == 0:
        return [], None

    def draft_generator(_text: str) -> str:
        request = factory.draft_request(report, _fixed_examples())
        return extract_code(gateway.complete(request).text)

    result = hyde_query(
        store, report.narrative, config.retrieval_k, retrieval.embedder, draft_generator
    )
    return [scored.entry.text for scored in result.results], result.draft


_FIXED_EXAMPLE_COUNT = 3


def _fixed_examples() -> list[str]:
    return [text for _, text in example_programs()[:_FIXED_EXAMPLE_COUNT]]


def _empty_section_diagnostic() -> Diagnostic:
    return Diagnostic(ERROR, "empty section (no conforming code lines)", 1, 1, "")


def _failure_validity(diagnostics) -> ValidityReport:
    return ValidityReport(False, False, False, list(diagnostics))


def run_pipeline(
    report,
    config: PipelineConfig,
    gateway: Gateway,
    retrieval: RetrievalSetup | None = None,
) -> RunResult:
    """Run the compositional strategy end to end for one report.

    Deterministic under a playback backend and fixed seed. Stage
    failures produce a failed RunResult naming the stage; nothing
    escapes as an exception.
    """
    retrieval = retrieval or RetrievalSetup()
    factory = PromptFactory(config.model_id, config.temperature, config.max_tokens)
    recorder = _TraceRecorder(gateway)
    repairs = {kind: 0 for kind in SECTION_KINDS}
    repairs["program"] = 0
    start = time.perf_counter()

    def failed(stage: str, message: str, diagnostics=()) -> RunResult:
        recorder.close(stage, OUTCOME_FAILED, diagnostics)
        return RunResult(
            report_id=report.id,
            strategy=COMPOSITIONAL,
            final_program=None,
            validity=_failure_validity(diagnostics),
            traces=recorder.traces,
            wall_seconds=time.perf_counter() - start,
            success=False,
            failure=f"{stage}: {message}",
            repairs=repairs,
        )

    log.debug("pipeline start: report=%s strategy=%s", report.id, config.strategy)
    try:
        objects = stage_objects(report, gateway, factory)
    except (MarkerMissing, GatewayError) as exc:
        return failed("objects", str(exc))
    recorder.close("objects")

    try:
        questions = stage_questions(report, objects, gateway, factory)
    except GatewayError as exc:
        return failed("questions", str(exc))
    recorder.close("questions")

    try:
        answers = stage_answers(report, questions, gateway, factory)
    except GatewayError as exc:
        return failed("answers", str(exc))
    recorder.close("answers")

    try:
        examples, _draft = _retrieve_examples(report, config, gateway, factory, retrieval)
    except ScenForgeError as exc:
        return failed("retrieve", str(exc))
    if examples:
        recorder.close("retrieve")

    answers_block = render_answers(answers)
    parts = ProgramParts.empty()
    env: set[str] = set()
    behaviors_map: dict = {}
    for kind in SECTION_KINDS:
        try:
            text = stage_section(
                kind, report, objects, answers_block, examples, gateway, factory
            )
        except GatewayError as exc:
            parts.part(kind).status = PART_FAILED
            return failed(f"section:{kind}", str(exc))
        if text.strip():
            statements, diags = compile_section(
                text, kind, config.registry, env, behaviors_map
            )
        else:
            statements, diags = None, [_empty_section_diagnostic()]
        count = 0
        if statements is None or has_errors(diags):
            try:
                text, statements, count = repair_section(
                    kind, text, diags, gateway, factory,
                    config.section_retry_budget, config.registry, env,
                    behaviors_map, report.id,
                )
            except (RepairExhausted, GatewayError) as exc:
                part = parts.part(kind)
                part.text = text
                part.status = PART_FAILED
                part.diagnostics = getattr(exc, "diagnostics", diags)
                repairs[kind] = config.section_retry_budget
                return failed(
                    f"section:{kind}", str(exc), getattr(exc, "diagnostics", diags)
                )
        part = parts.part(kind)
        part.text = text
        part.status = PART_OK
        part.repair_count = count
        repairs[kind] = count
        env |= section_names(statements)
        if kind == "behaviors":
            behaviors_map = section_behaviors(statements)
        recorder.close(
            f"section:{kind}", OUTCOME_REPAIRED if count else OUTCOME_OK,
            [d.message for d in diags] if count else (),
        )

    try:
        program, validity, program_repairs = finalize(
            parts, config, gateway, factory, report.id
        )
    except (GatewayError, ScenForgeError) as exc:
        return failed("finalize", str(exc))
    repairs["program"] = program_repairs
    if not validity.valid:
        finalize_outcome = OUTCOME_FAILED
    elif program_repairs:
        finalize_outcome = OUTCOME_REPAIRED
    else:
        finalize_outcome = OUTCOME_OK
    recorder.close(
        "finalize", finalize_outcome, [d.message for d in validity.diagnostics]
    )
    success = validity.valid
    return RunResult(
        report_id=report.id,
        strategy=COMPOSITIONAL,
        final_program=program,
        validity=validity,
        traces=recorder.traces,
        wall_seconds=time.perf_counter() - start,
        success=success,
        failure=None if success else "finalize: program failed the validity check",
        repairs=repairs,
    )


def run_baseline(
    strategy: str,
    report,
    config: PipelineConfig,
    gateway: Gateway,
    retrieval: RetrievalSetup | None = None,
) -> RunResult:
    """One-shot baseline strategies; no compiler or execution feedback."""
    if strategy not in BASELINE_STRATEGIES:
        raise ValueError(f"unknown baseline strategy {strategy!r}")
    retrieval = retrieval or RetrievalSetup()
    factory = PromptFactory(config.model_id, config.temperature, config.max_tokens)
    recorder = _TraceRecorder(gateway)
    start = time.perf_counter()

    def failed(stage: str, message: str) -> RunResult:
        recorder.close(stage, OUTCOME_FAILED)
        return RunResult(
            report_id=report.id,
            strategy=strategy,
            final_program=None,
            validity=_failure_validity([]),
            traces=recorder.traces,
            wall_seconds=time.perf_counter() - start,
            success=False,
            failure=f"{stage}: {message}",
        )

    try:
        if strategy == "constrained":
            program = _constrained_baseline(report, gateway, factory, recorder)
        else:
            examples: list[str] = []
            if strategy == "few_shot":
                examples = _fixed_examples()
            elif strategy == "rag":
                if retrieval.store is not None and len(retrieval.store):
                    scored = retrieval.store.query_topk(
                        report.narrative, config.retrieval_k, retrieval.embedder
                    )
                    examples = [s.entry.text for s in scored]
            elif strategy == "rag_hyde":
                if retrieval.store is not None and len(retrieval.store):
                    examples, _ = _retrieve_examples(
                        report, config, gateway, factory, retrieval
                    )
            completion = gateway.complete(
                factory.baseline_request(report, strategy, examples)
            )
            program = extract_code(completion.text)
            recorder.close(strategy)
    except (GatewayError, ScenForgeError) as exc:
        return failed(strategy, str(exc))

    validity = check_validity(
        program, config.registry, config.network, config.seed, config.max_rejections
    )
    return RunResult(
        report_id=report.id,
        strategy=strategy,
        final_program=program,
        validity=validity,
        traces=recorder.traces,
        wall_seconds=time.perf_counter() - start,
        success=validity.valid,
        failure=None if validity.valid else "program failed the validity check",
    )


def _constrained_baseline(report, gateway, factory, recorder) -> str:
    parts = ProgramParts.empty()
    for kind in SECTION_KINDS:
        request = factory.baseline_section_request(report, kind)
        completion = gateway.complete_constrained(request, section_constraint(kind))
        parts.part(kind).text = completion.text
        recorder.close(f"section:{kind}")
    return stitch(parts)


def run_report(
    report,
    config: PipelineConfig,
    gateway: Gateway,
    retrieval: RetrievalSetup | None = None,
) -> RunResult:
    if config.strategy == COMPOSITIONAL:
        return run_pipeline(report, config, gateway, retrieval)
    return run_baseline(config.strategy, report, config, gateway, retrieval)


def max_backend_calls(config: PipelineConfig, regeneration_budget: int) -> int:
    """Upper bound on backend calls for one compositional run: the three
    prompting stages with their single reprompts, one HyDE draft, the
    constrained section generations, and both repair loops."""
    stage_calls = 2 + 1 + 2  # objects (+reprompt), questions, answers (+reformat)
    section_calls = len(SECTION_KINDS) * regeneration_budget
    repair_calls = len(SECTION_KINDS) * config.section_retry_budget
    return (
        stage_calls + 1 + section_calls + repair_calls + config.program_retry_budget
    )


# --- persistence ----------------------------------------------------------------


def write_run_result(result: RunResult, out_dir) -> dict:
    """Persist one run: <id>.scenic (when a program exists), <id>.trace,
    and <id>.validity under the output directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    if result.final_program is not None:
        program_path = out / f"{result.report_id}.scenic"
        program_path.write_text(result.final_program, encoding="utf-8")
        paths["program"] = program_path
    trace_doc = {
        "report_id": result.report_id,
        "strategy": result.strategy,
        "success": result.success,
        "wall_seconds": result.wall_seconds,
        "failure": result.failure,
        "repairs": result.repairs,
        "traces": [
            {
                "stage": trace.stage,
                "outcome": trace.outcome,
                "diagnostics_fed_back": trace.diagnostics_fed_back,
                "interactions": [
                    {
                        "digest": i.digest,
                        "text": i.text,
                        "latency_seconds": i.latency_seconds,
                        "from_cache": i.from_cache,
                    }
                    for i in trace.interactions
                ],
            }
            for trace in result.traces
        ],
    }
    trace_path = out / f"{result.report_id}.trace"
    trace_path.write_text(json.dumps(trace_doc, indent=2), encoding="utf-8")
    paths["trace"] = trace_path
    validity_path = out / f"{result.report_id}.validity"
    validity_path.write_text(
        json.dumps(result.validity.to_json(), indent=2), encoding="utf-8"
    )
    paths["validity"] = validity_path
    return paths


def transcript_from_traces(result: RunResult) -> dict:
    """A by-digest playback transcript that replays this run exactly."""
    by_digest = {}
    for trace in result.traces:
        for interaction in trace.interactions:
            by_digest.setdefault(interaction.digest, interaction.text)
    return {"by_stage": {}, "by_digest": by_digest}
