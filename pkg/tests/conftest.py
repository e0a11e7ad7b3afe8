from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

STORE_DIR = os.path.join(os.path.dirname(__file__), "..", "data", "store")


@pytest.fixture(scope="session")
def store():
    from nervecert.experiments import InvariantStore

    if not os.path.exists(os.path.join(STORE_DIR, "null.csv")):
        pytest.fail(
            "precomputed invariant store missing; run "
            "`nervecert simulate build-store --out data/store --count 400 --seed 20260808`"
        )
    return InvariantStore.load(STORE_DIR)
