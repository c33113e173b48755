import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from dwelljsr.dwell import DwellSystem
from dwelljsr.linalg import logm
from dwelljsr.mixed import MixedSystem
from dwelljsr.weighted import WeightedSystem

settings.register_profile("repo", deadline=None, derandomize=True, print_blob=True)
settings.load_profile("repo")

DATA = Path(__file__).resolve().parent.parent / "data"

A1 = np.array([[1.0, 1.0], [0.0, 1.0]])
A2 = 0.8 * np.array([[1.0, 0.0], [1.0, 1.0]])
RHO_EX1_W12 = 1.314496347291999
RHO_EX1_W11 = 1 + np.sqrt(5) / 5


def example1(weights=(1, 2)) -> WeightedSystem:
    return WeightedSystem((A1, A2), weights)


def example2() -> MixedSystem:
    A = np.array([[0.0, -1.4], [1.4, 0.0]])
    B1 = logm(np.array([[1.0, 1.0], [-1.0, 1.0]]))
    B2 = logm(np.array([[1.0, 1.0], [-1.0, 0.0]]))
    return MixedSystem(((A, 1.0),), (B1, B2))


def dwell_two_modes() -> DwellSystem:
    B1 = np.array([[0.0, 0.0], [1.0, 0.0]])
    B2 = logm(np.array([[1.0, 1.0], [-1.0, 0.0]]))
    return DwellSystem((B1, B2), (Fraction(1, 2), Fraction(1)))


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture
def ex2():
    return example2()


@pytest.fixture
def dwell_sys():
    return dwell_two_modes()


@pytest.fixture
def data_dir():
    return DATA


def load(name):
    return json.loads((DATA / name).read_text())
