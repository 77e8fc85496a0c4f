import json
import sys
from pathlib import Path

import numpy as np
import pytest

HERE = Path(__file__).resolve().parent
ROOT = HERE.parent
sys.path.insert(0, str(HERE))

from ovbound.model_inputs import RegressionSummary  # noqa: E402

FIXTURES = ROOT / "fixtures"


def load_summary(name: str) -> RegressionSummary:
    return RegressionSummary.from_dict(json.loads((FIXTURES / name).read_text()))


@pytest.fixture
def analogue():
    return load_summary("analogue_summary.json")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
