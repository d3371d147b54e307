"""Render benchmark runs as a text table or as structured JSON."""

from __future__ import annotations

import json
from typing import Sequence

from .harness import BenchmarkRun

HEADERS = ("Generator", "Mode", "Validity (↑)", "Optimality (↑)", "Similarity (↓)", "Seed")


def _row(run: BenchmarkRun) -> tuple[str, ...]:
    name = run.generator + (" *" if run.partial else "") + (" †" if _substitutes(run) else "")
    a = run.aggregate
    if a is None:
        return (name, run.mode, "n/a", "n/a", "n/a", str(run.seeds.get("run", "")))
    return (
        name,
        run.mode,
        f"{100 * a.validity:.2f}%",
        f"{a.optimality:.4f}",
        f"{a.similarity:.4f}",
        str(run.seeds.get("run", "")),
    )


def _substitutes(run: BenchmarkRun) -> list[str]:
    return sorted(k for k, v in run.provenance.items() if v == "substitute")


def format_table(runs: Sequence[BenchmarkRun] | BenchmarkRun) -> str:
    if isinstance(runs, BenchmarkRun):
        runs = [runs]
    rows = [HEADERS] + [_row(r) for r in runs]
    widths = [max(len(r[i]) for r in rows) for i in range(len(HEADERS))]
    lines = []
    for k, r in enumerate(rows):
        lines.append(" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if k == 0:
            lines.append("-+-".join("-" * w for w in widths))
    notes = []
    for r in runs:
        if r.partial:
            failed = sum(1 for c in r.per_condition if c.summary is None)
            notes.append(f"* {r.generator}/{r.mode}: partial run, {failed} of {len(r.per_condition)} condition(s) failed")
    subs = sorted({s for r in runs for s in _substitutes(r)})
    if subs:
        notes.append("† scored with analytic substitute evaluators for: " + ", ".join(subs))
    if notes:
        lines.append("")
        lines.extend(notes)
    return "\n".join(lines) + "\n"


def format_structured(runs: Sequence[BenchmarkRun] | BenchmarkRun) -> str:
    if isinstance(runs, BenchmarkRun):
        return runs.to_json()
    return json.dumps([r.to_dict() for r in runs], indent=1, sort_keys=True) + "\n"


def report(runs, fmt: str = "table") -> str:
    if fmt == "table":
        return format_table(runs)
    if fmt == "structured":
        return format_structured(runs)
    raise ValueError("format must be 'table' or 'structured'")
