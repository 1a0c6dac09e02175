from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import settings

from degenlab import (assemble_form_operator, build_grid, eigendecompose, make_cutoff, make_field,
                      shift_identity)

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")


@dataclass
class Setup:
    space: object
    field: object
    A: object
    H: object
    decomp: object
    cutoff: object


def plateau_setup(N=512, L=32.0):
    sp = build_grid(1, L, N, "periodic")
    c = L / 2
    fld = make_field("plateau_bump", {"center": c, "radius": 6.0, "width": 4.0}, 1)
    A = assemble_form_operator(sp, fld)
    H = shift_identity(A, 1.0)
    chi = make_cutoff("plateau", {"center": c, "inner": 3.0, "outer": 5.0}, sp)
    return Setup(sp, fld, A, H, eigendecompose(H), chi)


def free_setup(N=256, L=16.0, eps=1.0):
    sp = build_grid(1, L, N, "periodic")
    fld = make_field("identity", {}, 1)
    A = assemble_form_operator(sp, fld)
    H = shift_identity(A, eps)
    return Setup(sp, fld, A, H, eigendecompose(H), None)


@pytest.fixture(scope="session")
def plateau1d():
    return plateau_setup()


@pytest.fixture(scope="session")
def free1d():
    return free_setup()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance
    if test_acceptance.LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.LINES):
            terminalreporter.write_line(test_acceptance.LINES[n])
