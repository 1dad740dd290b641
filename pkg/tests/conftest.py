from dataclasses import dataclass

import pytest

from randomhorizon.deflator import DeflatorBundle, build_deflator
from randomhorizon.enlargement import AzemaBundle, azema, enlarge
from randomhorizon.io import Scenario, load_builtin
from randomhorizon.space import Filtration


@dataclass(frozen=True)
class Ctx:
    sc: Scenario
    bundle: AzemaBundle
    enlarged: Filtration
    deflators: DeflatorBundle

    @property
    def space(self):
        return self.sc.space

    @property
    def filt(self):
        return self.sc.filtration

    @property
    def tau(self):
        return self.sc.tau

    @property
    def price(self):
        return self.sc.price


def _ctx(name):
    sc = load_builtin(name)
    bundle = azema(sc.filtration, sc.tau, sc.space)
    enlarged = enlarge(sc.filtration, sc.tau, sc.space)
    deflators = build_deflator(bundle, sc.filtration, enlarged, sc.tau, sc.space)
    return Ctx(sc, bundle, enlarged, deflators)


@pytest.fixture(scope="session")
def ex1():
    return _ctx("ex1")


@pytest.fixture(scope="session")
def ex2():
    return _ctx("ex2")
