# tests/conftest.py
import numpy as np
import pytest

from app import create_app


@pytest.fixture
def app():
    app = create_app('testing')
    yield app


@pytest.fixture
def app_ctx(app):
    with app.app_context():
        yield app


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def runner(app):
    return app.test_cli_runner(mix_stderr=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
