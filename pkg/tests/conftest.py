"""Shared fixtures and the acceptance-criterion summary hook."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cohortcea.core import StateSpace, StateVector
from cohortcea.sicksicker import SickSickerParams, bundled_life_table, build_strategy_models

# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LOG: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LOG[number] = f"criterion {number}: {status}  {detail}".rstrip()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(ACCEPTANCE_LOG):
        terminalreporter.write_line(ACCEPTANCE_LOG[number])


@pytest.fixture(scope="session")
def params() -> SickSickerParams:
    return SickSickerParams()


@pytest.fixture(scope="session")
def life_table():
    return bundled_life_table()


@pytest.fixture(scope="session")
def sick_sicker_space() -> StateSpace:
    return StateSpace(["H", "S1", "S2", "D"], absorbing=["D"])


@pytest.fixture(scope="session")
def all_healthy(sick_sicker_space) -> StateVector:
    return StateVector.from_mapping(sick_sicker_space, {"H": 1.0})


@pytest.fixture(scope="session")
def ti_strategies(params, life_table):
    specs, _ = build_strategy_models(params, life_table, "time-independent")
    return specs


@pytest.fixture(scope="session")
def ad_strategies(params, life_table):
    specs, _ = build_strategy_models(params, life_table, "age-dependent")
    return specs


@pytest.fixture(scope="session")
def ti_soc_model(ti_strategies):
    return ti_strategies[0].model


@pytest.fixture(scope="session")
def ad_soc_model(ad_strategies):
    return ad_strategies[0].model


# Published cohort distribution under standard of care for the first
# six cycles of the constant-probability model, at 3 decimals.
PRINTED_TRACE = np.array(
    [
        [1.000, 0.000, 0.000, 0.000],
        [0.848, 0.150, 0.000, 0.002],
        [0.794, 0.186, 0.016, 0.005],
        [0.766, 0.192, 0.035, 0.008],
        [0.745, 0.190, 0.054, 0.011],
        [0.726, 0.186, 0.073, 0.015],
    ]
)

# The published age-dependent cycle-0 matrix block, at the printed precision.
PRINTED_CYCLE0_MATRIX = np.array(
    [
        [0.8489865, 0.1500000, 0.0000000, 0.001013486],
        [0.5000000, 0.3919626, 0.1050000, 0.003037378],
        [0.0000000, 0.0000000, 0.9899112, 0.010088764],
        [0.0000000, 0.0000000, 0.0000000, 1.000000000],
    ]
)

# Published totals: state-rewards-only pipeline (cost, QALY) per strategy.
PUBLISHED_STATE_TOTALS = {
    "Standard of care": (112_444.0, 19.490),
    "Strategy A": (210_019.0, 20.192),
    "Strategy B": (193_403.0, 20.778),
    "Strategy AB": (281_871.0, 21.599),
}

# Published totals: transition-reward pipeline, plus frontier facts.
PUBLISHED_CEA_TOTALS = {
    "Standard of care": (115_275.0, 19.468),
    "Strategy A": (212_851.0, 20.170),
    "Strategy B": (196_408.0, 20.754),
    "Strategy AB": (284_877.0, 21.575),
}
PUBLISHED_ICERS = {"Strategy B": 63_090.0, "Strategy AB": 107_757.0}
PUBLISHED_LIFE_EXPECTANCY = 41.2
