import random

import pytest

import doubleblind as db


class ScriptedRng:
    """Randomness source returning a scripted sequence of raw draws."""

    def __init__(self, values):
        self.values = list(values)

    def randrange(self, n):
        return self.values.pop(0)

    def getrandbits(self, k):
        return self.values.pop(0)


@pytest.fixture
def rng():
    return random.Random(0xD0B1E)


@pytest.fixture
def mock_backend():
    return db.MockBackend()


@pytest.fixture
def small_backend():
    return db.MockBackend(101)


@pytest.fixture(scope="session")
def prod_backend():
    return db.production_backend()
