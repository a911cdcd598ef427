from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import CHART, C, J, T, X, random_form
from varphase.biform import BiForm, d_h, wedge
from varphase.cps import StructureMismatch, cps_symplectic, verify_potential_structure
from varphase.evaluator import evaluate_bilinear
from varphase.harness import gallery
from varphase.symbolic import fiber, jet
from varphase.variational import BulkSplit, Theory, boundary_split, bulk_split

seeds = st.integers(min_value=0, max_value=2**32 - 1)
half = C(Fraction(1, 2))
dx = BiForm.dx(CHART, 1)


def dq(mu):
    return BiForm.dvar(CHART, fiber(0, mu, (0,)))


def theory(density):
    return Theory("t", CHART, ("phi",), (), BiForm.volume(CHART) * density)


def omega_s(th, t0=None):
    bulk = bulk_split(th)
    return cps_symplectic(bulk, boundary_split(th, bulk), t0)


def test_free_scalar_integrand():
    spec = gallery()["scalar_robin"]
    omega = omega_s(spec.theory)
    assert omega.bulk == wedge(dx, wedge(dq(1), dq(0)))
    assert all(not b for b in omega.boundary.values())


def test_higher_order_integrand():
    omega = omega_s(theory(-half * J(2, 0) ** 2))
    assert omega.bulk == wedge(dx, wedge(dq(3), dq(0)) - wedge(dq(2), dq(1)))


def test_zero_theory():
    assert omega_s(theory(C(0))).is_zero()


def test_free_scalar_pairing_closed_form():
    # Omega_S(d1, d2) = int (D_t d1 d2 - D_t d2 d1) dx at t0 = 0, d1 = x, d2 = t x
    omega = omega_s(gallery()["scalar_neumann"].theory)
    value = evaluate_bilinear(omega, [C(0)], [X], [T * X], 0).value
    # d1_t = 0, d2_t = x: integrand 0 * 0 - x * x
    assert value == Fraction(-1, 3)


@pytest.mark.parametrize("name", ["scalar_robin", "scalar_neumann", "two_field", "higher_order"])
def test_potential_structure_gallery(name):
    th = gallery()[name].theory
    bulk = bulk_split(th)
    ps = verify_potential_structure(th, bulk)
    assert ps.total == bulk.potential
    assert not d_h(ps.remainder)


def test_potential_structure_pieces():
    th = theory(-half * J(2, 0) ** 2)
    ps = verify_potential_structure(th, bulk_split(th))
    assert ps.hatted and not ps.remainder


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_remainder_absorbs_exact_shift(seed):
    rng = np.random.default_rng(seed)
    th = gallery()["scalar_robin"].theory
    bulk = bulk_split(th)
    rho = random_form(rng, 0, 1, order=1)
    shifted = BulkSplit(bulk.euler, bulk.potential + d_h(rho))
    ps = verify_potential_structure(th, shifted)
    assert ps.total == shifted.potential
    assert not d_h(ps.remainder)


def test_structure_mismatch_detected():
    th = gallery()["scalar_neumann"].theory
    bulk = bulk_split(th)
    not_closed = wedge(BiForm.scalar(CHART, J(0, 0), (1,)), BiForm.dvar(CHART, jet(0, (0, 0))))
    with pytest.raises(StructureMismatch):
        verify_potential_structure(th, BulkSplit(bulk.euler, bulk.potential + not_closed))
