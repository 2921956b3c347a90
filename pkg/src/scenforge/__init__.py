"""scenforge: crash reports in, probabilistic scenario programs out.

A compound-AI pipeline around a small Scenic-subset DSL: staged
prompting, retrieval-augmented generation, constrained decoding,
compiler-feedback repair, a scene sampler standing in for simulator
execution, and the metric machinery to evaluate it all.
"""

from . import bundled, distributions, evalharness, gateway, pipeline, prompts
from . import reports, retrieval, scene, scenic
from .distributions import DistributionSpec, sample_value
from .errors import ScenForgeError
from .evalharness import HumanScores, MetricsRow, correctness_rate, score_are, summarize
from .gateway import (
    Completion,
    ConstraintSpec,
    Gateway,
    Message,
    PlaybackBackend,
    PromptRequest,
    RemoteBackend,
    cache_key,
)
from .pipeline import (
    PipelineConfig,
    RetrievalSetup,
    RunResult,
    StageTrace,
    run_baseline,
    run_pipeline,
    run_report,
    write_run_result,
)
from .reports import AgentMention, Difficulty, ReportRecord, classify_report, load_report
from .retrieval import LocalHashEmbedder, VectorStore, hyde_query
from .scene import (
    RoadNetwork,
    SceneInstance,
    ValidityReport,
    check_validity,
    filter_four_way,
    instantiate_scene,
    load_map,
)
from .scenic import (
    Diagnostic,
    ModelRegistry,
    default_registry,
    format_program,
    parse_program,
    parse_section,
    stitch,
    tokenize,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "bundled", "distributions", "evalharness", "gateway", "pipeline",
    "prompts", "reports", "retrieval", "scene", "scenic",
    "DistributionSpec", "sample_value",
    "ScenForgeError",
    "HumanScores", "MetricsRow", "correctness_rate", "score_are", "summarize",
    "Completion", "ConstraintSpec", "Gateway", "Message", "PlaybackBackend",
    "PromptRequest", "RemoteBackend", "cache_key",
    "PipelineConfig", "RetrievalSetup", "RunResult", "StageTrace",
    "run_baseline", "run_pipeline", "run_report", "write_run_result",
    "AgentMention", "Difficulty", "ReportRecord", "classify_report", "load_report",
    "LocalHashEmbedder", "VectorStore", "hyde_query",
    "RoadNetwork", "SceneInstance", "ValidityReport", "check_validity",
    "filter_four_way", "instantiate_scene", "load_map",
    "Diagnostic", "ModelRegistry", "default_registry", "format_program",
    "parse_program", "parse_section", "stitch", "tokenize", "validate",
    "__version__",
]
