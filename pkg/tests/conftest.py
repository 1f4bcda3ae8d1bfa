import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cathsynth.profiles import CrossSectionSpec, TubeKind, render_cross_section


@pytest.fixture(scope="session")
def default_spec():
    return CrossSectionSpec()


@pytest.fixture(scope="session")
def default_field(default_spec):
    return render_cross_section(default_spec)


@pytest.fixture(scope="session")
def plain_spec():
    return CrossSectionSpec(kind=TubeKind.PLAIN)


@pytest.fixture(scope="session")
def plain_field(plain_spec):
    return render_cross_section(plain_spec)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def synthetic_background():
    gen = np.random.default_rng(4242)
    yy, xx = np.mgrid[0:240, 0:220]
    img = 0.4 + 0.18 * np.sin(xx / 37.0) + 0.12 * np.cos(yy / 53.0)
    img += gen.normal(0.0, 0.02, img.shape)
    return np.clip(img, 0.0, 1.0)
