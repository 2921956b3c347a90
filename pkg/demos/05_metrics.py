"""Metric machinery: correctness rates, ARE scores, and summary tables.

Builds a small synthetic result set with human ratings and renders the
per-strategy comparison table.

    python demos/05_metrics.py
"""

from scenforge.evalharness import (
    HumanScores,
    RunRecord,
    correctness_rate,
    render_table,
    score_are,
    summarize,
)

print("ARE of (4.1, 4.5, 4.2):", round(score_are(4.1, 4.5, 4.2), 4))

def runs(strategy: str, total: int, valid: int, seconds: float):
    return [
        RunRecord(
            report_id=f"{strategy}-{i}",
            strategy=strategy,
            success=i < valid,
            wall_seconds=seconds,
            validity={
                "syntactic": i < valid, "semantic": i < valid, "executable": i < valid,
            },
        )
        for i in range(total)
    ]

zero_shot = runs("zero_shot", 20, 1, 1.064)
compositional = runs("compositional", 20, 18, 109.86)

print("zero-shot correctness:", correctness_rate(zero_shot))
print("compositional correctness:", correctness_rate(compositional))

ratings = [
    HumanScores(f"compositional-{i}", 4 + (i % 2), 4, 4 + (i % 2), rater_id="expert-1")
    for i in range(10)
]

rows = [
    summarize(zero_shot, [], "zero_shot"),
    summarize(compositional, ratings, "compositional"),
]
print()
print(render_table(rows))
