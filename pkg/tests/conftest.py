# -*- coding: utf-8 -*-
import pytest

from cayley import GroupSpec, build_ball


@pytest.fixture(scope="session")
def f2():
    return GroupSpec.free_group(2)


@pytest.fixture(scope="session")
def f3():
    return GroupSpec.free_group(3)


@pytest.fixture(scope="session")
def z2z3():
    return GroupSpec.free_product([2, 3])


@pytest.fixture(scope="session")
def f2_ball3(f2):
    return build_ball(f2, 3)


@pytest.fixture(scope="session")
def f2_ball5(f2):
    return build_ball(f2, 5)


@pytest.fixture(scope="session")
def f2_ball8(f2):
    return build_ball(f2, 8)


@pytest.fixture(scope="session")
def z2z3_ball(z2z3):
    return build_ball(z2z3, 10)
