"""Scenario DSL toolchain: lexer, parser, validator, formatter, stitcher."""

from . import ast
from .diagnostics import ERROR, WARNING, Diagnostic, has_errors, render_diagnostics
from .formatter import format_expr, format_program, format_section, format_statement
from .parser import ParseResult, SectionResult, parse_program, parse_section
from .sections import (
    PART_FAILED,
    PART_OK,
    PART_PENDING,
    ProgramParts,
    SectionPart,
    compile_section,
    stitch,
)
from .tokens import KEYWORDS, Token, TokenKind, tokenize
from .validator import (
    BUILTIN_ACTIONS,
    BUILTIN_BEHAVIORS,
    BUILTIN_FUNCTIONS,
    BUILTIN_NAMES,
    BUILTIN_VALUES,
    ModelRegistry,
    default_registry,
    load_registry,
    section_behaviors,
    section_names,
    validate,
    validate_section,
)

SECTION_KINDS = ast.SECTION_KINDS

__all__ = [
    "ast",
    "Diagnostic", "ERROR", "WARNING", "has_errors", "render_diagnostics",
    "Token", "TokenKind", "KEYWORDS", "tokenize",
    "ParseResult", "SectionResult", "parse_program", "parse_section",
    "format_expr", "format_program", "format_section", "format_statement",
    "ModelRegistry", "default_registry", "load_registry",
    "validate", "validate_section", "section_behaviors", "section_names",
    "BUILTIN_ACTIONS", "BUILTIN_BEHAVIORS", "BUILTIN_FUNCTIONS",
    "BUILTIN_NAMES", "BUILTIN_VALUES",
    "ProgramParts", "SectionPart", "compile_section", "stitch",
    "PART_PENDING", "PART_OK", "PART_FAILED",
    "SECTION_KINDS",
]
