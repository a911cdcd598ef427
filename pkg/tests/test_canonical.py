import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import CHART, C, J, P, random_polynomial
from varphase.biform import BiForm, wedge
from varphase.canonical import (
    canonical_split,
    canonical_symplectic,
    canonical_symplectic_first_order,
    decompose_theory,
    momenta,
    time_derivative,
)
from varphase.evaluator import canonical_action, evaluate_bilinear, integrate_slice, spacetime_action
from varphase.harness import gallery
from varphase.symbolic import Expression, fiber
from varphase.variational import Theory

seeds = st.integers(min_value=0, max_value=2**32 - 1)
half = C(Fraction(1, 2))
vol = BiForm.volume(CHART)
dx = BiForm.dx(CHART, 1)


def q(mu, a=0):
    return Expression.var(fiber(0, mu, (a,)))


def dq(mu):
    return BiForm.dvar(CHART, fiber(0, mu, (0,)))


def slice_form(e, h=(1,)):
    return BiForm.scalar(CHART, e, h)


def theory(density, boundary=None, params=()):
    return Theory("t", CHART, ("phi",), params, vol * density, boundary or {})


def test_decomposition():
    beta = P("b")
    th = theory(J(1, 0) * J(0, 1), {"x1": BiForm.scalar(CHART, half * beta * J(0, 0) ** 2, (0,))}, ("b",))
    ct = decompose_theory(th)
    assert ct.bulk == slice_form(q(1) * q(0, 1))
    assert ct.boundary["x1"] == slice_form(-half * beta * q(0) ** 2, ())
    assert not ct.boundary["x0"]


def test_free_scalar_canonical_split():
    m = P("m")
    th = theory(half * (J(1, 0) ** 2 - J(0, 1) ** 2 - m**2 * J(0, 0) ** 2), params=("m",))
    cs = canonical_split(decompose_theory(th))
    assert cs.K == 1
    assert cs.A[0][1] == slice_form(q(1))
    assert cs.A[0][0] == slice_form(-m**2 * q(0) + q(0, 2))
    # spatial integration by parts gives Theta tilde = -q_x dq, so B^(0) = q_x at both faces
    assert cs.B["x1"][0][0] == slice_form(q(0, 1), ())
    assert cs.B["x0"][0][0] == slice_form(q(0, 1), ())


def test_boundary_lagrangian_enters_b():
    beta = P("b")
    th = theory(half * J(1, 0) ** 2, {"x1": BiForm.scalar(CHART, half * beta * J(0, 0) ** 2, (0,))}, ("b",))
    cs = canonical_split(decompose_theory(th))
    assert cs.B["x1"][0][0] == slice_form(-beta * q(0), ())


def test_higher_order_split_and_momenta():
    th = theory(-half * J(2, 0) ** 2)
    cs = canonical_split(decompose_theory(th))
    assert cs.K == 2
    assert cs.A[0][2] == slice_form(-q(2))
    assert not cs.A[0][1] and not cs.A[0][0]
    assert momenta(cs, 2).bulk[0] == slice_form(-q(2))
    assert momenta(cs, 1).bulk[0] == slice_form(q(3))
    with pytest.raises(ValueError):
        momenta(cs, 0)
    with pytest.raises(ValueError):
        momenta(cs, 3)


def test_first_order_momentum():
    cs = canonical_split(decompose_theory(theory(half * J(1, 0) ** 2)))
    assert momenta(cs, 1).bulk[0] == slice_form(q(1))


def test_constraint_momentum_vanishes():
    # psi has no velocity in the two-field theory, so its momentum is a constraint
    cs = canonical_split(decompose_theory(gallery()["two_field"].theory))
    p = momenta(cs, 1)
    assert p.bulk[1] == BiForm.zero(CHART)
    assert p.bulk[0] == slice_form(Expression.var(fiber(1, 0, (0,))))


def test_symplectic_assembly_examples():
    cs = canonical_split(decompose_theory(theory(half * J(1, 0) ** 2)))
    omega = canonical_symplectic(cs)
    assert omega.bulk == wedge(dx, wedge(dq(1), dq(0)))
    assert all(not b for b in omega.boundary.values())
    cs = canonical_split(decompose_theory(theory(-half * J(2, 0) ** 2)))
    omega = canonical_symplectic(cs)
    assert omega.bulk == wedge(dx, wedge(dq(3), dq(0)) - wedge(dq(2), dq(1)))
    assert canonical_symplectic(canonical_split(decompose_theory(theory(C(0))))).is_zero()


def test_first_order_assembly_rejects_higher_order():
    cs = canonical_split(decompose_theory(theory(-half * J(2, 0) ** 2)))
    with pytest.raises(ValueError):
        canonical_symplectic_first_order(cs)


@pytest.mark.parametrize("name", ["scalar_robin", "scalar_neumann", "two_field"])
def test_first_order_assembly_matches(name):
    cs = canonical_split(decompose_theory(gallery()[name].theory))
    assert canonical_symplectic(cs) == canonical_symplectic_first_order(cs)


def test_dynamical_equation_on_mode_solution():
    # A^(0) - d/dt A^(1) vanishes on slice data of a space-time solution
    th = gallery()["scalar_neumann"].theory
    cs = canonical_split(decompose_theory(th))
    eq = cs.A[0][0] - time_derivative(cs.A[0][1])
    # phi = cos(pi x) cos(pi t) evaluated through its jets: q_(mu)_x^k
    t0, xs = 0.3, np.linspace(0, 1, 7)
    env = {}
    for v in eq.coefficient((1,)).variables():
        mu, k = v[2], v[3][0]
        env[v] = math.pi ** (mu + k) * np.cos(math.pi * t0 + mu * math.pi / 2) * np.cos(math.pi * xs + k * math.pi / 2)
    assert np.allclose(eq.coefficient((1,)).evaluate(env), 0, atol=1e-12)


def test_fubini_sign():
    th = gallery()["scalar_robin"].theory
    rng = np.random.default_rng(5)
    params = {"m": Fraction(3, 2), "b": Fraction(-2, 3)}
    config = [random_polynomial(rng)]
    for T in (Fraction(1), Fraction(2, 3)):
        assert spacetime_action(th, config, T, params) == canonical_action(decompose_theory(th), config, T, params)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_antisymmetry_and_momentum_linearity(seed):
    rng = np.random.default_rng(seed)
    cs = canonical_split(decompose_theory(gallery()["higher_order"].theory))
    omega = canonical_symplectic(cs)
    config, d1, d2 = ([random_polynomial(rng)] for _ in range(3))
    params = {"c": Fraction(2)}
    a = evaluate_bilinear(omega, config, d1, d2, 0, params).value
    b = evaluate_bilinear(omega, config, d2, d1, 0, params).value
    assert a == -b
    kernel = momenta(cs, 1).bulk[0]
    w1, w2 = random_polynomial(rng), random_polynomial(rng)

    def p(w):
        return integrate_slice(kernel.map_coefficients(lambda c: c * w), config, 0, params)

    assert p(w1 * 3 + w2 * -2) == 3 * p(w1) - 2 * p(w2)
