from __future__ import annotations

import pytest

from scenforge.bundled import bundled_map, bundled_registry
from scenforge.gateway import Gateway, MemoryCache
from scenforge.pipeline import PipelineConfig


@pytest.fixture(scope="session")
def registry():
    return bundled_registry()


@pytest.fixture(scope="session")
def cross4():
    return bundled_map("cross4")


@pytest.fixture(scope="session")
def straight():
    return bundled_map("straight")


@pytest.fixture
def config(registry, cross4):
    return PipelineConfig(registry=registry, network=cross4, seed=7)


@pytest.fixture
def memory_gateway():
    def build(backend, **kw):
        return Gateway(backend, cache=MemoryCache(), **kw)

    return build
