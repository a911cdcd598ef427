from fractions import Fraction

import numpy as np
import pytest

from helpers import C, J, P, mangle, random_document
from varphase.dsl import DSLError, parse_theory, print_theory
from varphase.harness import GALLERY_SOURCES, gallery

FREE = "theory s { dim 2 coords t x fields phi params m L: 1/2*(dt(phi)^2 - dx(phi)^2 - m^2*phi^2) }"


def test_free_scalar_document():
    th = parse_theory(FREE).theory
    assert th.K == 1
    half = C(Fraction(1, 2))
    assert th.density == half * (J(1, 0) ** 2 - J(0, 1) ** 2 - P("m") ** 2 * J(0, 0) ** 2)
    assert th.params == ("m",) and th.fields == ("phi",)


def test_robin_document():
    src = FREE.replace("params m", "params m b").replace(" }", " l[x1]: 1/2*b*phi^2 }")
    th = parse_theory(src).theory
    assert set(th.boundary) == {"x1"}
    assert th.boundary["x1"].coefficient((0,)) == C(Fraction(1, 2)) * P("b") * J(0, 0) ** 2


def test_order_detection():
    th = parse_theory("theory s { dim 2 coords t x fields phi L: dt(dt(phi))^2 }").theory
    assert th.K == 2


def test_derivatives_of_expressions():
    th = parse_theory("theory s { dim 2 coords t x fields phi L: dx(phi^2) + dt(x*phi) }").theory
    assert th.density == C(2) * J(0, 0) * J(0, 1) + parse_theory(
        "theory s { dim 2 coords t x fields phi L: x*dt(phi) }").theory.density


def test_param_values_and_comments():
    th = parse_theory("""# comment
theory s {
  dim 2 coords t x fields phi params m=-3/4 b   # trailing
  L: m*phi^2
}""").theory
    assert th.param_values == {"m": Fraction(-3, 4)}


@pytest.mark.parametrize("src, where, fragment", [
    ("theory s { dim 2 coords t x fields phi L: psi }", (1, 43), "undeclared"),
    ("theory s { dim 2 coords t x fields phi L: phi +", (1, 48), "unexpected"),
    ("theory s { dim 3 coords t x fields phi L: phi }", (1, 16), "dim 3"),
    ("theory s {\n dim 2 coords t x fields phi\n L: dt(dt(dt(dt(dt(dt(dt(phi))))))) }", (3, 5), "jet order"),
    ("theory s { dim 2 coords t x fields phi L: phi l[y1]: phi }", (1, 49), "unknown face"),
    ("theory s { dim 2 coords t x fields phi L: phi/phi }", (1, 46), "non-constant"),
    ("theory s { dim 2 coords t x fields phi L: phi/0 }", (1, 46), "zero"),
    ("theory s { dim 2 coords t x fields phi L: phi^99 }", (1, 47), "exponent"),
    ("theory s { dim 2 coords t x fields dt L: 1 }", (1, 36), "derivative operator"),
    ("theory s { dim 2 coords t x fields phi L: 1 } extra", (1, 47), "after theory"),
    ("theory s { dim 2 coords t x fields phi L: @ }", (1, 43), "character"),
])
def test_errors_carry_positions(src, where, fragment):
    with pytest.raises(DSLError) as info:
        parse_theory(src)
    assert (info.value.line, info.value.col) == where
    assert fragment in info.value.message


def test_deep_nesting_is_a_diagnostic():
    src = "theory s { dim 2 coords t x fields phi L: " + "(" * 3000 + "phi" + ")" * 3000 + " }"
    with pytest.raises(DSLError, match="nested"):
        parse_theory(src)


def test_non_utf8():
    with pytest.raises(DSLError):
        parse_theory(b"\xff\xfe theory")


@pytest.mark.parametrize("name", list(GALLERY_SOURCES))
def test_gallery_round_trip(name):
    th = gallery()[name].theory
    again = parse_theory(print_theory(th)).theory
    assert again == th
    assert print_theory(again) == print_theory(th)


def test_fuzzed_round_trip():
    for i in range(200):
        th = parse_theory(random_document(np.random.default_rng([i, 1]), i)).theory
        assert parse_theory(print_theory(parse_theory(print_theory(th)).theory)).theory == th


def test_mangled_inputs_never_crash():
    for i in range(300):
        rng = np.random.default_rng([i, 2])
        data = mangle(rng, random_document(rng, i))
        try:
            parse_theory(data)
        except DSLError:
            pass
