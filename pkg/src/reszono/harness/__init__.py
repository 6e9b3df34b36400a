"""Scenario ingestion, closed-loop simulation, serialisation and the CLI."""

from .config import InputPolicy, ScenarioConfig, load_config, parse_config, with_overrides
from .emit import emit_csv_metrics, emit_jsonl, emit_svg_snapshot, load_jsonl
from .simulate import RunReport, StepRecord, run_scenario

__all__ = [
    "InputPolicy",
    "ScenarioConfig",
    "load_config",
    "parse_config",
    "with_overrides",
    "emit_csv_metrics",
    "emit_jsonl",
    "emit_svg_snapshot",
    "load_jsonl",
    "RunReport",
    "StepRecord",
    "run_scenario",
]
