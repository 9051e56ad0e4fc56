import math

import numpy as np
import pytest

from radtrack.model import LinearTrajectory, ParabolicTrajectory
from radtrack.signal import DetectionConfig, EmissionModel, calibrated

REF_LINE = LinearTrajectory(-1000.0, 500.0, 30.0, math.pi / 4)
REF_PARABOLA = ParabolicTrajectory(-1000.0, -1000.0, 29.89, 2.61, 0.82)
REF_RADIUS = 170.0


def ref_emission(lambda_T=10.0, window=1.0):
    dc = DetectionConfig(lambda_T, window=window)
    return calibrated(EmissionModel(None, 0.0068, 1.0), dc, REF_RADIUS), dc


def wrap(angle):
    return (angle + math.pi) % (2 * math.pi) - math.pi


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
