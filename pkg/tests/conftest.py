import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from isoflow.catalog import standard_suite

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("seedless", parent=settings.get_profile("default"), derandomize=True)
settings.load_profile("seedless" if os.environ.get("ISOFLOW_SEEDLESS", "") not in ("", "0") else "default")

SUITE = standard_suite()
SUITE_IDS = [e.name for e in SUITE]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def suite_params():
    return pytest.mark.parametrize("entry", SUITE, ids=SUITE_IDS)


def angle_of(x):
    return math.atan2(x[1], x[0])
