from __future__ import annotations

import functools

import pytest
from hypothesis import HealthCheck, settings

from pucci_eigen import Ball, Interval, OperatorSpec, build_grid, estimate_lambda_bar

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, label: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_LINES.append(f"criterion {number:>4} {'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def cached_grid(kind: str, h: float, width: int = 2, R: float = 1.0):
    domain = Interval(-R, R) if kind == "interval" else Ball([0.0, 0.0], R)
    return build_grid(domain, h, width)


@functools.lru_cache(maxsize=None)
def cached_eigen(kind: str, h: float, a: float, A: float, alpha: float, sign: str = "plus",
                 R: float = 1.0, bracket_tol: float = 1e-3):
    op = OperatorSpec(a, A, alpha, sign)
    return estimate_lambda_bar(op, cached_grid(kind, h, 2, R), bracket_tol=bracket_tol)


@pytest.fixture(scope="session")
def disc_grid_coarse():
    return cached_grid("disc", 1 / 16)


@pytest.fixture(scope="session")
def interval_grid():
    return cached_grid("interval", 1 / 64)
