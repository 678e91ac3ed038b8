import pytest

from hidsim.kdd import parse_kdd
from hidsim.synthetic import generate_lines, write_corpus


@pytest.fixture(scope="session")
def corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "demo_kdd.csv"
    return write_corpus(path)


@pytest.fixture(scope="session")
def corpus_records(corpus_path):
    return parse_kdd(corpus_path)


@pytest.fixture(scope="session")
def small_corpus_records():
    """Smaller corpus for protocol-level tests that do not need 5k records."""
    lines = generate_lines(seed=11, n_normal=900, n_dos=500, n_probe=400,
                           n_excluded=20)
    return parse_kdd(("\n".join(lines)).encode())
