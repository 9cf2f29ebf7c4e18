import pytest

from twistcoh.core.field import RationalField
from twistcoh.services.qexterior import QExterior, QExteriorParams, build

Q_VALUES = ("2", "3", "1/2")


@pytest.fixture(scope="session", params=Q_VALUES)
def lq(request: pytest.FixtureRequest) -> QExterior:
    return build(QExteriorParams.create(request.param, RationalField()))


@pytest.fixture(scope="session")
def lq2() -> QExterior:
    return build(QExteriorParams.create("2", RationalField()))
