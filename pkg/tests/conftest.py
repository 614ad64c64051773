from __future__ import annotations

import pytest

from annobench.prompts import load_fewshots, load_templates
from annobench.schema import load_reference_schema


@pytest.fixture(scope="session")
def ref_schema():
    return load_reference_schema()


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture(scope="session")
def fewshots():
    return load_fewshots()
