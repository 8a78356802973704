# tests/conftest.py
import shutil

import pytest

from app import create_app
from config import BEST_KNOWN_TABLE
from services.billiards_service import SimParams


@pytest.fixture
def fast_params():
    """Loose jam test; refinement takes the result the rest of the way"""
    return SimParams(
        growth_rate=0.01,
        initial_speed_scale=1.0,
        jam_rel_growth_tol=1e-7,
        jam_free_path_tol=1e-3,
        event_window=2000,
        max_events=3_000_000,
    )


@pytest.fixture
def table_path(tmp_path):
    path = tmp_path / "best_known.csv"
    shutil.copy(BEST_KNOWN_TABLE, path)
    return str(path)


@pytest.fixture
def client():
    app = create_app()
    app.config["TESTING"] = True
    with app.test_client() as test_client:
        yield test_client
