import json

import pytest

from flow import FlowConfig
from hamiltonian import perturbed_spec, radial_spec, trivial_spec


@pytest.fixture
def fast_flow():
    return FlowConfig(128)


@pytest.fixture
def trivial():
    return trivial_spec()


@pytest.fixture
def radial():
    return radial_spec(1.0)


@pytest.fixture
def perturbed():
    return perturbed_spec()


@pytest.fixture
def write_config(tmp_path):
    """Записывает конфигурацию JSON в tmp_path и возвращает путь к ней."""
    def write(data, name="experiment.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)
    return write
