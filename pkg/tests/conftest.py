import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "utils"))
sys.path.insert(0, str(ROOT / "scripts"))

GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def golden():
    return GOLDEN


@pytest.fixture
def spread4():
    from cdc import read_code

    return read_code(GOLDEN / "spread4.cdc")


@pytest.fixture
def spread5():
    from cdc import read_code

    return read_code(GOLDEN / "spread5.cdc")
