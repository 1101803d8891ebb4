import os

import pytest
from fastapi.testclient import TestClient

# Force use of test settings
os.environ["APP_ENV"] = "test"

from app.core.config_test import test_settings
from app.main import app
from tests.fixtures.track_fixtures import *


@pytest.fixture(scope="function")
def override_settings():
    """Remplace les réglages de l'application par les réglages de test"""
    from app.core import config

    original_settings = config.settings
    config.settings = test_settings
    yield test_settings
    config.settings = original_settings


@pytest.fixture(scope="function")
def client(override_settings):
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(test_settings.SEED)
