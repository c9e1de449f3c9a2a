"""
Shared test fixtures for modattach.
"""
from typing import Callable

import pytest

from catalog import ModuleCatalog, parse_catalog
from hardware import HardwareInventory
from loader import LoadCost, Strategy, StrategyConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: exhaustive sweeps that take tens of seconds")
    config.addinivalue_line("markers", "perf: timing-direction checks that depend on the machine")


@pytest.fixture
def make_catalog() -> Callable[..., ModuleCatalog]:
    """Build a catalog from record lines, header added."""
    def _make(*lines: str) -> ModuleCatalog:
        return parse_catalog("MODCAT v1\n" + "\n".join(lines) + "\n")
    return _make


@pytest.fixture
def chain_catalog(make_catalog) -> ModuleCatalog:
    """c depends on b, b depends on a."""
    return make_catalog("c|30|b|", "b|20|a|", "a|10||")


@pytest.fixture
def diamond_catalog(make_catalog) -> ModuleCatalog:
    """d depends on b and c, both depend on a."""
    return make_catalog("a|10||", "b|20|a|", "c|30|a|", "d|40|b,c|")


@pytest.fixture
def shared_dep_catalog(make_catalog) -> ModuleCatalog:
    """Two roots sharing one dependency; the smallest race fixture."""
    return make_catalog("a|5||", "b|5|a|", "c|5|a|")


@pytest.fixture
def empty_inventory() -> HardwareInventory:
    return HardwareInventory()


@pytest.fixture
def instant() -> Callable[..., StrategyConfig]:
    """Zero-cost strategy config factory for ordering tests."""
    def _config(strategy: str = "stage0", workers: int = 1) -> StrategyConfig:
        return StrategyConfig(Strategy(strategy), workers, LoadCost())
    return _config
