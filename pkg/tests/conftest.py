from collections.abc import Generator

import pytest

from btembed.dependencies import deps
from btembed.field_tower import FieldLayer, base_layer, make_quadratic_extension
from btembed.herm_forms import EpsilonHermitianForm
from btembed.scenarios import CATALOG, ScenarioContext
from btembed.settings import Settings


@pytest.fixture(scope="function", autouse=True)
def fiddle_settings() -> Generator[None, None, None]:
    """Fiddle misc settings for consistency in testing."""
    settings = Settings(
        enable_stderr_logging=False,
        enable_log_file=False,
        search_workers=1,
        property_samples=2,
    )
    with deps.override(settings_partial=settings):
        yield


@pytest.fixture
def q3() -> FieldLayer:
    return base_layer(3)


@pytest.fixture
def ramified3(q3: FieldLayer) -> FieldLayer:
    """Q(sqrt 3) over Q_3."""
    return make_quadratic_extension(q3, 3)


@pytest.fixture
def unramified3(q3: FieldLayer) -> FieldLayer:
    """Q(sqrt 2) over Q_3."""
    return make_quadratic_extension(q3, 2)


@pytest.fixture
def symplectic2(q3: FieldLayer) -> EpsilonHermitianForm:
    return EpsilonHermitianForm(q3, ((0, 1), (-1, 0)), -1)


@pytest.fixture
def sp2_ramified() -> ScenarioContext:
    return CATALOG["sp2-ramified"].build()
