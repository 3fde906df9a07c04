import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
sys.path.insert(0, str(Path(__file__).resolve().parent))

from errml.composer import compose  # noqa: E402
from errml.instance import instantiate  # noqa: E402
from errml.parser import parse_file  # noqa: E402

FIXTURE_FILES = sorted(FIXTURES.glob("*.errml"))
LAM, MU, P = 1e-3, 1e-1, 0.5


def load(name: str):
    return parse_file(FIXTURES / name)


def build(name: str, iteration=None, **params):
    parsed = load(name)
    return instantiate(parsed.architecture, parsed.library, iteration, params)


def chain(name: str, iteration=None, **params):
    return compose(build(name, iteration, **params))


@pytest.fixture(params=FIXTURE_FILES, ids=lambda p: p.name)
def fixture_path(request):
    return request.param
