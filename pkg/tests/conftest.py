from pathlib import Path

import pytest

from asseopf.config import builtin_case_path
from asseopf.grid import load_case


@pytest.fixture(scope="session")
def case9_path() -> Path:
    return builtin_case_path("case9")


@pytest.fixture(scope="session")
def case9(case9_path):
    return load_case(case9_path)


@pytest.fixture(scope="session")
def repro_config_path() -> Path:
    import importlib.resources

    return Path(str(importlib.resources.files("asseopf.data") / "repro9bus.yaml"))
