"""Static checks on parsed programs: name resolution, distribution
parameters, registry membership, and the single-ego rule.

Validation exceeds what the real target language enforces at compile
time, on purpose: every extra diagnostic caught here is one the repair
loop can fix before a scene is ever sampled. Messages are phrased the
way the backing compiler phrases them ("name 'x' is not defined") so
they drop straight into repair prompts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import ast
from .diagnostics import ERROR, Diagnostic

BUILTIN_VALUES = frozenset({"network", "roadDirection", "road", "simulation_time"})
BUILTIN_FUNCTIONS = frozenset(
    {"filter", "Uniform", "Normal", "TruncatedNormal", "Range", "distance"}
)
BUILTIN_ACTIONS = frozenset(
    {
        "SetBrakeAction", "SetThrottleAction", "SetSpeedAction",
        "SetSteerAction", "SetTurnSignalAction", "SetReverseAction",
    }
)
BUILTIN_BEHAVIORS = frozenset(
    {
        "FollowLaneBehavior", "FollowTrajectoryBehavior", "LaneChangeBehavior",
        "StayStillBehavior", "WalkForwardBehavior",
    }
)

BUILTIN_NAMES = BUILTIN_VALUES | BUILTIN_FUNCTIONS | BUILTIN_ACTIONS | BUILTIN_BEHAVIORS

# string literals with these prefixes are simulator asset ids and must
# appear in the registry
_MODEL_PREFIXES = ("vehicle.", "walker.")

_DEFAULT_VEHICLE_MODELS = (
    "vehicle.lincoln.mkz_2017",
    "vehicle.tesla.model3",
    "vehicle.audi.tt",
    "vehicle.toyota.prius",
    "vehicle.mini.cooper_s",
    "vehicle.carlamotors.carlacola",
    "vehicle.mercedes.sprinter",
    "vehicle.diamondback.century",
    "vehicle.kawasaki.ninja",
    "walker.pedestrian.0001",
)
_DEFAULT_OBJECT_CLASSES = (
    "car", "truck", "van", "bus", "bicycle", "motorcycle", "pedestrian",
)


@dataclass(frozen=True)
class ModelRegistry:
    """Known simulator assets; all entries lowercase for matching."""

    vehicle_models: frozenset
    object_classes: frozenset

    @classmethod
    def create(cls, vehicle_models: Iterable[str], object_classes: Iterable[str]) -> "ModelRegistry":
        models = frozenset(m.lower() for m in vehicle_models)
        classes = frozenset(c.lower() for c in object_classes)
        if not models or not classes:
            raise ValueError("registry requires at least one model and one object class")
        return cls(models, classes)


def default_registry() -> ModelRegistry:
    return ModelRegistry.create(_DEFAULT_VEHICLE_MODELS, _DEFAULT_OBJECT_CLASSES)


def load_registry(path) -> ModelRegistry:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return ModelRegistry.create(data["vehicle_models"], data["object_classes"])


class _Checker:
    def __init__(self, registry: ModelRegistry):
        self.registry = registry
        self.diagnostics: list[Diagnostic] = []
        self.scope: set[str] = set(BUILTIN_NAMES)
        self.behaviors: dict[str, tuple] = {}  # name -> params
        self.const_values: dict[str, float] = {}

    def error(self, message: str, node) -> None:
        self.diagnostics.append(
            Diagnostic(ERROR, message, getattr(node, "line", 1), getattr(node, "col", 1))
        )

    # -- expression walking ------------------------------------------

    def check_expr(self, node, local: set[str] | None = None) -> None:
        scope = self.scope if local is None else local
        if isinstance(node, ast.Name):
            if node.id not in scope:
                self.error(f"name '{node.id}' is not defined", node)
        elif isinstance(node, ast.StringLit):
            self._check_model_string(node)
        elif isinstance(node, ast.Attribute):
            self.check_expr(node.base, local)
        elif isinstance(node, ast.Index):
            self.check_expr(node.base, local)
            self.check_expr(node.index, local)
        elif isinstance(node, ast.Starred):
            self.check_expr(node.value, local)
        elif isinstance(node, ast.Call):
            self.check_expr(node.func, local)
            for arg in node.args:
                self.check_expr(arg, local)
            for kw in node.kwargs:
                self.check_expr(kw.value, local)
            self._check_distribution(node)
        elif isinstance(node, ast.Lambda):
            inner = set(scope)
            inner.add(node.param)
            self.check_expr(node.body, inner)
        elif isinstance(node, ast.UnaryOp):
            self.check_expr(node.operand, local)
        elif isinstance(node, ast.BinOp):
            self.check_expr(node.left, local)
            self.check_expr(node.right, local)
        elif isinstance(node, (ast.TupleExpr, ast.ListExpr)):
            for item in node.items:
                self.check_expr(item, local)
        # literals need no checking

    def _check_model_string(self, node: ast.StringLit) -> None:
        value = node.value.lower()
        if any(value.startswith(p) for p in _MODEL_PREFIXES):
            if value not in self.registry.vehicle_models:
                self.error(f"unknown vehicle model '{node.value}'", node)

    def _fold(self, node, _depth: int = 0) -> float | None:
        """Fold an expression to a number when statically possible."""
        if _depth > 32:
            return None
        if isinstance(node, ast.NumberLit):
            return float(node.value)
        if isinstance(node, ast.Name):
            return self.const_values.get(node.id)
        if isinstance(node, ast.UnaryOp) and node.op in ("+", "-"):
            inner = self._fold(node.operand, _depth + 1)
            if inner is None:
                return None
            return inner if node.op == "+" else -inner
        if isinstance(node, ast.BinOp) and node.op in ("+", "-", "*", "/"):
            left = self._fold(node.left, _depth + 1)
            right = self._fold(node.right, _depth + 1)
            if left is None or right is None:
                return None
            try:
                if node.op == "+":
                    return left + right
                if node.op == "-":
                    return left - right
                if node.op == "*":
                    return left * right
                return left / right
            except ZeroDivisionError:
                return None
        return None

    def _check_distribution(self, node: ast.Call) -> None:
        if not isinstance(node.func, ast.Name) or node.func.id not in ast.DIST_FUNCTIONS:
            return
        name = node.func.id
        args = node.args
        has_star = any(isinstance(a, ast.Starred) for a in args)
        if name == "Uniform":
            if not args:
                self.error("Uniform requires at least one option", node)
            return
        if has_star or node.kwargs:
            self.error(f"{name} takes positional numeric arguments only", node)
            return
        if name == "Normal":
            if len(args) != 2:
                self.error("Normal expects 2 arguments (mean, stddev)", node)
                return
            sigma = self._fold(args[1])
            if sigma is not None and sigma <= 0:
                self.error("standard deviation must be positive", node)
        elif name == "TruncatedNormal":
            if len(args) != 4:
                self.error("TruncatedNormal expects 4 arguments (mean, stddev, low, high)", node)
                return
            sigma = self._fold(args[1])
            if sigma is not None and sigma <= 0:
                self.error("standard deviation must be positive", node)
            low, high = self._fold(args[2]), self._fold(args[3])
            if low is not None and high is not None and low >= high:
                self.error("truncation bounds inverted (low must be less than high)", node)
        elif name == "Range":
            if len(args) != 2:
                self.error("Range expects 2 arguments (low, high)", node)
                return
            low, high = self._fold(args[0]), self._fold(args[1])
            if low is not None and high is not None and low > high:
                self.error("range bounds inverted (low must not exceed high)", node)

    # -- statement walking ---------------------------------------------

    def declare_constant(self, stmt: ast.ConstantDecl) -> None:
        self.check_expr(stmt.value)
        folded = self._fold(stmt.value)
        if folded is not None:
            self.const_values[stmt.name] = folded
        self.scope.add(stmt.name)

    def declare_behavior(self, stmt: ast.BehaviorDef) -> None:
        if stmt.name in self.behaviors:
            self.error(f"behavior '{stmt.name}' is defined more than once", stmt)
        self.behaviors[stmt.name] = stmt.params
        self.scope.add(stmt.name)
        local = set(self.scope) | set(stmt.params)
        self._check_behavior_body(stmt.body, local)

    def _check_behavior_body(self, body, local: set[str]) -> None:
        for stmt in body:
            if isinstance(stmt, ast.TakeStmt):
                for action in stmt.actions:
                    self.check_expr(action, local)
            elif isinstance(stmt, ast.DoStmt):
                target = stmt.target
                if target not in self.behaviors and target not in BUILTIN_BEHAVIORS:
                    self.error(f"behavior '{target}' is not defined", stmt)
                if isinstance(stmt.call, ast.Call):
                    for arg in stmt.call.args:
                        self.check_expr(arg, local)
                    for kw in stmt.call.kwargs:
                        self.check_expr(kw.value, local)
                    self._check_behavior_arity(target, stmt.call, stmt)
            elif isinstance(stmt, ast.InterruptWhen):
                self.check_expr(stmt.condition, local)
                self._check_behavior_body(stmt.body, local)
            # wait has nothing to check

    def _check_behavior_arity(self, target: str, call: ast.Call, site) -> None:
        params = self.behaviors.get(target)
        if params is None:
            return  # builtin or undefined (already reported)
        if any(isinstance(a, ast.Starred) for a in call.args):
            return
        supplied = len(call.args) + len(call.kwargs)
        if supplied != len(params):
            self.error(
                f"behavior '{target}' expects {len(params)} argument(s), got {supplied}",
                site,
            )
            return
        for kw in call.kwargs:
            if kw.name not in params:
                self.error(
                    f"behavior '{target}' has no parameter '{kw.name}'", site
                )

    def check_spatial(self, stmt) -> int:
        """Check one spatial statement; returns 1 if it declares ego."""
        if isinstance(stmt, ast.Assign):
            self.check_expr(stmt.value)
            self.scope.add(stmt.name)
            return 0
        if isinstance(stmt, ast.ObjectDecl):
            self._check_object(stmt)
            self.scope.add(stmt.name)
            return 1 if stmt.name == "ego" else 0
        if isinstance(stmt, (ast.RequireStmt, ast.TerminateWhen)):
            self.check_expr(stmt.condition)
            return 0
        if isinstance(stmt, ast.ConstantDecl):
            self.declare_constant(stmt)
            return 0
        self.error(f"unexpected statement {type(stmt).__name__}", stmt)
        return 0

    def _check_object(self, stmt: ast.ObjectDecl) -> None:
        new = stmt.value
        if new.class_name.lower() not in self.registry.object_classes:
            self.error(f"'{new.class_name}' is not a registered object class", stmt)
        for spec in new.specifiers:
            if isinstance(spec, ast.AtSpecifier):
                self.check_expr(spec.position)
            elif isinstance(spec, ast.OnSpecifier):
                self.check_expr(spec.region)
            elif isinstance(spec, ast.FollowingSpecifier):
                self.check_expr(spec.start)
                self.check_expr(spec.distance)
            elif isinstance(spec, ast.WithSpecifier):
                self.check_expr(spec.value)
                if spec.name == "behavior":
                    self._check_behavior_spec(spec)

    def _check_behavior_spec(self, spec: ast.WithSpecifier) -> None:
        value = spec.value
        if isinstance(value, ast.Call) and isinstance(value.func, ast.Name):
            target = value.func.id
        elif isinstance(value, ast.Name):
            target = value.id
        else:
            self.error("behavior property must be a behavior name or call", spec)
            return
        if target not in self.behaviors and target not in BUILTIN_BEHAVIORS:
            self.error(f"behavior '{target}' is not defined", spec)
        elif isinstance(value, ast.Call):
            self._check_behavior_arity(target, value, spec)


def validate(program: ast.Program, registry: ModelRegistry) -> list[Diagnostic]:
    """Validate a whole program. Empty result means: all names resolve,
    model strings are registered, distribution parameters are legal, the
    program declares exactly one ego, and behavior references check out.
    """
    checker = _Checker(registry)
    for const in program.constants:
        checker.declare_constant(const)
    for behavior in program.behaviors:
        checker.declare_behavior(behavior)
    ego_count = 0
    for stmt in program.spatial:
        ego_count += checker.check_spatial(stmt)
    if ego_count == 0:
        checker.diagnostics.append(
            Diagnostic(ERROR, "program does not declare an object named 'ego'", 1, 1)
        )
    elif ego_count > 1:
        checker.diagnostics.append(
            Diagnostic(ERROR, "multiple object declarations bind 'ego'", 1, 1)
        )
    return checker.diagnostics


def validate_section(
    statements,
    kind: str,
    registry: ModelRegistry,
    env: Iterable[str] = (),
    known_behaviors: dict | None = None,
) -> list[Diagnostic]:
    """Validate one parsed section. ``env`` lists names declared by the
    sections compiled before this one; ``known_behaviors`` maps behavior
    names from earlier sections to their parameter tuples (or None when
    the signature is unknown). The spatial section must declare exactly
    one ego; the other sections have no ego requirement.
    """
    if kind not in ast.SECTION_KINDS:
        raise ValueError(f"unknown section kind: {kind!r}")
    checker = _Checker(registry)
    checker.scope.update(env)
    if known_behaviors:
        checker.behaviors.update(known_behaviors)
        checker.scope.update(known_behaviors)
    if kind == "constants":
        for stmt in statements:
            checker.declare_constant(stmt)
    elif kind == "behaviors":
        for stmt in statements:
            checker.declare_behavior(stmt)
    else:
        ego_count = 0
        for stmt in statements:
            ego_count += checker.check_spatial(stmt)
        if ego_count == 0:
            checker.diagnostics.append(
                Diagnostic(ERROR, "spatial section does not declare an object named 'ego'", 1, 1)
            )
        elif ego_count > 1:
            checker.diagnostics.append(
                Diagnostic(ERROR, "multiple object declarations bind 'ego'", 1, 1)
            )
    return checker.diagnostics


def section_names(statements) -> set[str]:
    """Names a compiled section contributes to later sections' scope."""
    names: set[str] = set()
    for stmt in statements:
        if isinstance(stmt, (ast.ConstantDecl, ast.Assign, ast.ObjectDecl, ast.BehaviorDef)):
            names.add(stmt.name)
    return names


def section_behaviors(statements) -> dict:
    """Behavior signatures a compiled behaviors section exposes."""
    return {
        s.name: s.params for s in statements if isinstance(s, ast.BehaviorDef)
    }
