"""Symbolic probability distributions and their sampling.

Truncated normals are drawn by rejection against the parent normal,
capped at 10,000 inner draws, with an inverse-CDF fallback (rational
approximation) so sampling stays exact-in-distribution and bounded in
time even for extreme truncations.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .scenic import ast as _ast

NORMAL = "normal"
TRUNCATED_NORMAL = "truncated_normal"
UNIFORM_CHOICE = "uniform_choice"
RANGE = "range"

_TRUNC_REJECTION_CAP = 10_000


@dataclass(frozen=True)
class DistributionSpec:
    """One symbolic distribution; parameters depend on ``kind``."""

    kind: str
    mu: float | None = None
    sigma: float | None = None
    low: float | None = None
    high: float | None = None
    options: tuple = ()

    @classmethod
    def normal(cls, mu: float, sigma: float) -> "DistributionSpec":
        if sigma <= 0:
            raise ValueError("standard deviation must be positive")
        return cls(NORMAL, mu=float(mu), sigma=float(sigma))

    @classmethod
    def truncated_normal(
        cls, mu: float, sigma: float, low: float, high: float
    ) -> "DistributionSpec":
        if sigma <= 0:
            raise ValueError("standard deviation must be positive")
        if low >= high:
            raise ValueError("truncation bounds inverted (low must be less than high)")
        return cls(
            TRUNCATED_NORMAL,
            mu=float(mu), sigma=float(sigma), low=float(low), high=float(high),
        )

    @classmethod
    def uniform_choice(cls, options) -> "DistributionSpec":
        options = tuple(options)
        if not options:
            raise ValueError("uniform choice requires at least one option")
        return cls(UNIFORM_CHOICE, options=options)

    @classmethod
    def uniform_range(cls, low: float, high: float) -> "DistributionSpec":
        if low > high:
            raise ValueError("range bounds inverted (low must not exceed high)")
        return cls(RANGE, low=float(low), high=float(high))


def sample_value(spec: DistributionSpec, rng: random.Random):
    """Draw one concrete value from a distribution spec."""
    if spec.kind == NORMAL:
        return rng.gauss(spec.mu, spec.sigma)
    if spec.kind == TRUNCATED_NORMAL:
        return _sample_truncated(spec, rng)
    if spec.kind == UNIFORM_CHOICE:
        return spec.options[rng.randrange(len(spec.options))]
    if spec.kind == RANGE:
        return rng.uniform(spec.low, spec.high)
    raise ValueError(f"unknown distribution kind: {spec.kind!r}")


def _sample_truncated(spec: DistributionSpec, rng: random.Random) -> float:
    for _ in range(_TRUNC_REJECTION_CAP):
        x = rng.gauss(spec.mu, spec.sigma)
        if spec.low <= x <= spec.high:
            return x
    # the acceptance region is so small rejection never landed; invert the
    # CDF restricted to [low, high]
    a = _normal_cdf((spec.low - spec.mu) / spec.sigma)
    b = _normal_cdf((spec.high - spec.mu) / spec.sigma)
    u = rng.uniform(a, b)
    x = spec.mu + spec.sigma * _inverse_normal_cdf(u)
    return min(max(x, spec.low), spec.high)


def _normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


# Rational approximation of the standard normal quantile (Acklam-style
# coefficients); relative error below 1.2e-9 over the open unit interval.
_ICDF_A = (
    -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
    1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00,
)
_ICDF_B = (
    -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
    6.680131188771972e+01, -1.328068155288572e+01,
)
_ICDF_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
    -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00,
)
_ICDF_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
    3.754408661907416e+00,
)


def _inverse_normal_cdf(p: float) -> float:
    if not 0.0 < p < 1.0:
        if p <= 0.0:
            return -math.inf
        return math.inf
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        c, d = _ICDF_C, _ICDF_D
        return (
            ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        ) / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    if p > 1.0 - p_low:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        c, d = _ICDF_C, _ICDF_D
        return -(
            ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        ) / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    a, b = _ICDF_A, _ICDF_B
    return (
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
    ) / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)


def distribution_to_source(spec: DistributionSpec) -> str:
    """Render a spec back to program-text form."""
    def num(x: float) -> str:
        return str(int(x)) if float(x).is_integer() else repr(x)

    if spec.kind == NORMAL:
        return f"Normal({num(spec.mu)}, {num(spec.sigma)})"
    if spec.kind == TRUNCATED_NORMAL:
        return (
            f"TruncatedNormal({num(spec.mu)}, {num(spec.sigma)}, "
            f"{num(spec.low)}, {num(spec.high)})"
        )
    if spec.kind == RANGE:
        return f"Range({num(spec.low)}, {num(spec.high)})"
    options = ", ".join(
        repr(o) if isinstance(o, str) else num(o) for o in spec.options
    )
    return f"Uniform({options})"


def distribution_from_expr(expr) -> DistributionSpec | None:
    """Interpret a parsed distribution call with constant arguments.

    Returns None when the expression is not a distribution call or its
    parameters are not statically legal; callers treat None as
    "unparseable" and fall back.
    """
    if not (isinstance(expr, _ast.Call) and isinstance(expr.func, _ast.Name)):
        return None
    name = expr.func.id
    if name not in _ast.DIST_FUNCTIONS or expr.kwargs:
        return None
    try:
        if name == "Uniform":
            options = []
            for arg in expr.args:
                value = _literal_value(arg)
                if value is None:
                    return None
                options.append(value)
            return DistributionSpec.uniform_choice(options)
        numbers = []
        for arg in expr.args:
            value = _fold_number(arg)
            if value is None:
                return None
            numbers.append(value)
        if name == "Normal" and len(numbers) == 2:
            return DistributionSpec.normal(*numbers)
        if name == "TruncatedNormal" and len(numbers) == 4:
            return DistributionSpec.truncated_normal(*numbers)
        if name == "Range" and len(numbers) == 2:
            return DistributionSpec.uniform_range(*numbers)
    except ValueError:
        return None
    return None


def _literal_value(node):
    if isinstance(node, _ast.StringLit):
        return node.value
    return _fold_number(node)


def _fold_number(node, _depth: int = 0) -> float | None:
    if _depth > 32:
        return None
    if isinstance(node, _ast.NumberLit):
        return float(node.value)
    if isinstance(node, _ast.UnaryOp) and node.op in ("+", "-"):
        inner = _fold_number(node.operand, _depth + 1)
        if inner is None:
            return None
        return inner if node.op == "+" else -inner
    if isinstance(node, _ast.BinOp) and node.op in ("+", "-", "*", "/"):
        left = _fold_number(node.left, _depth + 1)
        right = _fold_number(node.right, _depth + 1)
        if left is None or right is None:
            return None
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left / right if right != 0 else None
    return None
