import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture
def problems():
    return pathlib.Path(os.environ.get("CODESIGN_PROBLEMS", ROOT / "problems"))


@pytest.fixture
def cli():
    path = os.environ.get("CODESIGN_CLI")
    if not path:
        pytest.skip("CODESIGN_CLI not set")
    return path
