"""Shared heavyweight fixtures (computed once per session)."""

import pytest

from relbosons import eigensolver, kg_fields, variational
from relbosons.potentials import INFINITY, spec_spin0, spec_spin1

SWEEP_D = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, INFINITY]


@pytest.fixture(scope="session")
def demo_scan():
    params = kg_fields.demo_packet()
    return kg_fields.scan_density(params, kg_fields.default_radii())


@pytest.fixture(scope="session")
def sweep_curves():
    return {
        0: eigensolver.gamma_curve(spec_spin0(0.0), SWEEP_D),
        1: eigensolver.gamma_curve(spec_spin1(0.0), SWEEP_D),
    }


@pytest.fixture(scope="session")
def transverse_state():
    return variational.minimize_transverse_massless()
