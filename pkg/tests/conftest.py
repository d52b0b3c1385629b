import pytest

from dulac.precision import set_precision


@pytest.fixture(autouse=True)
def _default_precision():
    """Every test starts from the default 50-digit working precision."""
    set_precision(50)
    yield
