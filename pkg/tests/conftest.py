"""Shared fixtures for the okapair test suite."""

import random

import numpy as np
import pytest
from loguru import logger

from src.controllers.atlas_controller import builtin_atlas
from src.models.painleve import PAINLEVE_VARS
from src.models.ratfunc import VarTable
from src.utils.config import IntegratorSettings
from src.utils.expr_parser import parse_expr


@pytest.fixture(scope='session')
def e7():
    return builtin_atlas('E7')


@pytest.fixture(scope='session')
def d8():
    return builtin_atlas('D8')


@pytest.fixture
def xyt():
    return VarTable(['x', 'y', 't', 'alpha'])


@pytest.fixture
def pv():
    return PAINLEVE_VARS


@pytest.fixture
def parse(xyt):
    return lambda text: parse_expr(text, xyt)


@pytest.fixture
def settings():
    return IntegratorSettings()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def pyrng():
    return random.Random(1234)


@pytest.fixture
def log_messages():
    """Messages logged through loguru while the test runs."""
    messages = []
    sink = logger.add(lambda m: messages.append(m.record), level='DEBUG')
    yield messages
    logger.remove(sink)
