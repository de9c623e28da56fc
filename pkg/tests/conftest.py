import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from protract.expr import parse
from protract.tensor import TensorField
from protract.geometry import ChartGeometry


def _geom(dim, entries):
    return ChartGeometry(TensorField(dim, 0, 2,
                                     [parse(s, dim) for s in entries]))


@pytest.fixture(scope="session")
def flat2():
    return _geom(2, ["1", "0", "0", "1"])


@pytest.fixture(scope="session")
def flat3():
    return _geom(3, ["1", "0", "0", "0", "1", "0", "0", "0", "1"])


@pytest.fixture(scope="session")
def sphere2():
    f = "4/(1+x0^2+x1^2)^2"
    return _geom(2, [f, "0", "0", f])


@pytest.fixture(scope="session")
def sphere3():
    f = "4/(1+x0^2+x1^2+x2^2)^2"
    return _geom(3, [f, "0", "0", "0", f, "0", "0", "0", f])


@pytest.fixture(scope="session")
def non_einstein2():
    return _geom(2, ["1", "0", "0", "1+x0^2"])


@pytest.fixture(scope="session")
def non_einstein3():
    return _geom(3, ["1", "0", "0", "0", "1+x0^2", "0", "0", "0", "1"])
