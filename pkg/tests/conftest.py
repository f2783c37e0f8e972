import json

import pytest

from twistorkit.bundles import line_sum
from twistorkit.hypercomplex import flat_twistor_data
from twistorkit.jsonio import SCHEMA
from twistorkit.rng import SplitMix64
from twistorkit.scalars import EXACT


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch):
    """Keep a developer's .env and shell overrides out of the tests."""
    monkeypatch.delenv("TWISTORKIT_BACKEND", raising=False)
    monkeypatch.delenv("TWISTORKIT_CONFIG", raising=False)
    monkeypatch.setattr("twistorkit.config.load_dotenv", lambda *a, **k: False)


@pytest.fixture
def rng():
    return SplitMix64(7)


@pytest.fixture
def o1_sum():
    """O(1) + O(1), the bundle whose total space is the flat twistor space for n = 1."""
    return line_sum([1, 1])


@pytest.fixture(scope="session")
def flat_data():
    return flat_twistor_data(1, EXACT)


@pytest.fixture
def gaussian():
    """Shorthand for exact Gaussian rationals: gaussian(1, "1/2") == 1 + i/2."""
    return EXACT.from_parts


@pytest.fixture
def write_doc(tmp_path):
    def _write(name, payload, raw=False):
        path = tmp_path / name
        if raw:
            path.write_text(payload)
        else:
            path.write_text(json.dumps(payload))
        return path

    return _write


@pytest.fixture
def bundle_doc():
    def _doc(rank, entries):
        return {"schema": SCHEMA, "kind": "bundle", "rank": rank, "entries": entries}

    return _doc
