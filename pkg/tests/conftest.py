from __future__ import annotations

from pathlib import Path

import pytest

from trustprop import clean, derive_network_trust, parse_store, build_network

FIXTURES = Path(__file__).parent / "fixtures"
DEMO = FIXTURES / "demo"


@pytest.fixture(scope="session")
def demo_paths() -> dict[str, Path]:
    return {
        "doctors": DEMO / "doctors.csv",
        "hospitals": DEMO / "hospitals.csv",
        "departments": DEMO / "departments.csv",
        "config": DEMO / "config.json",
    }


@pytest.fixture(scope="session")
def demo_store(demo_paths):
    return clean(parse_store(demo_paths["doctors"], demo_paths["hospitals"],
                             demo_paths["departments"]))


@pytest.fixture(scope="session")
def demo_network(demo_store):
    return build_network(demo_store)


@pytest.fixture(scope="session")
def demo_trust(demo_network):
    return derive_network_trust(demo_network)
