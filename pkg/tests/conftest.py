import json
import pathlib

import numpy as np
import pytest

from trialbench import ColumnSchema, Dataset, d1, generate, load_dataset

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURE_CSV = REPO_ROOT / "data" / "d1_fixture.csv"
FIXTURE_SCHEMA = ColumnSchema(s="S", a="A", y="Y", x=("X1",))


@pytest.fixture(scope="session")
def fixture_dataset() -> Dataset:
    """The shipped benchmark dataset: (10000, 10000), seed 7."""
    return load_dataset(str(FIXTURE_CSV), FIXTURE_SCHEMA)


@pytest.fixture(scope="session")
def small_dataset() -> Dataset:
    """A quick benchmark draw for tests that refit many times."""
    return generate(d1(), (2000, 2000), seed=11)


@pytest.fixture()
def toy_dataset() -> Dataset:
    """Tiny handmade dataset covering all four study-by-treatment cells."""
    rng = np.random.default_rng(42)
    n = 400
    x = rng.integers(0, 2, n).astype(float)[:, None]
    s = np.repeat([1, 0], n // 2)
    a = rng.integers(0, 2, n)
    y = 1.0 + x[:, 0] + 2.0 * a + rng.normal(size=n)
    return Dataset(x=x, s=s, a=a, y=y, covariate_names=("X1",))


@pytest.fixture()
def write_config(tmp_path):
    def _write(payload: dict, name: str = "config.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)

    return _write
