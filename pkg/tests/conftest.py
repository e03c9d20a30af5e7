import pytest

from ssgauss.models import make_model

# canonical parameter choices used across the suite; alpha < 1.5 throughout
CATALOG_CASES = [
    ("fbm", {"H": 0.35}),
    ("subfbm", {"H": 0.35}),
    ("bifbm", {"H": 0.6, "K": 0.5}),
    ("swanson", {}),
    ("dw-z1", {"alpha": 0.5}),
    ("dw-z2", {"alpha": 0.5}),
]


@pytest.fixture(scope="session")
def catalog_models():
    return [make_model(name, **kw) for name, kw in CATALOG_CASES]


@pytest.fixture(scope="session")
def fbm_half():
    return make_model("fbm", H=0.5)


@pytest.fixture(scope="session")
def swanson():
    return make_model("swanson")
