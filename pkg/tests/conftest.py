from __future__ import annotations

import functools
import sys
from pathlib import Path

import pytest

from ccslab.scenario import load_scenario
from ccslab.suite import convergence_study, run_suite

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"

sys.path.insert(0, str(Path(__file__).resolve().parent))


def scenario_path(name: str) -> Path:
    return SCENARIOS / f"{name}.json"


@functools.lru_cache(maxsize=None)
def scenario(name: str):
    return load_scenario(scenario_path(name))


@functools.lru_cache(maxsize=None)
def suite_report(name: str, workers: int = 1):
    """Plain suite run, shared across test modules."""
    return run_suite(scenario(name), workers)


@functools.lru_cache(maxsize=None)
def ladder_report(name: str):
    return convergence_study(scenario(name), workers=1)


def check_entry(report, name: str, **params) -> dict:
    """The single check entry named ``name`` whose params include ``params``."""
    found = [
        e for e in report.checks + report.convergence
        if e["name"] == name and all(e["params"].get(k) == v for k, v in params.items())
    ]
    if len(found) != 1:
        raise LookupError(f"{len(found)} entries match {name} {params}")
    return found[0]


@pytest.fixture(scope="session")
def scenarios_dir() -> Path:
    return SCENARIOS


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
