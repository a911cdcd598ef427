import json
from fractions import Fraction

import numpy as np
import pytest

from varphase.harness import (
    EquivalenceReport,
    corrupt_first_momentum,
    derive,
    first_order_agrees,
    gallery,
    gallery_spec,
    random_theory_spec,
    run_check,
    run_equivalence,
    run_invariance,
    run_slice_independence,
)
from varphase.evaluator import TrigField, evaluate_bilinear
from varphase.variational import NotGoodVariationalPrinciple
from varphase.dsl import parse_theory
from varphase.harness import TheorySpec


def test_gallery_metadata():
    specs = gallery()
    assert list(specs) == ["scalar_robin", "scalar_neumann", "two_field", "higher_order"]
    for spec in specs.values():
        assert spec.theory.K == spec.expected_K
    with pytest.raises(KeyError):
        gallery_spec("nope")


@pytest.mark.parametrize("name", ["scalar_robin", "two_field", "higher_order"])
def test_equivalence_small(name):
    report = run_equivalence(gallery()[name], seed=3, trials=5)
    assert report.verdict == "equal" and not report.failures


def test_equivalence_off_slice_and_numeric_backends():
    spec = gallery()["scalar_robin"]
    assert run_equivalence(spec, 1, 3, t0=Fraction(-2, 7)).verdict == "equal"
    assert run_equivalence(spec, 1, 2, backend="grid", t0=Fraction(1, 2)).verdict == "equal"
    assert run_equivalence(spec, 1, 2, backend="quadrature", t0=Fraction(1, 3)).verdict == "equal"


def test_parallel_trials_match_serial():
    spec = gallery()["two_field"]
    a = run_equivalence(spec, 9, 4)
    b = run_equivalence(spec, 9, 4, workers=2)
    assert a.to_json() == b.to_json()


def test_mutation_is_detected():
    spec = gallery()["scalar_robin"]
    report = run_equivalence(spec, 7, 5, mutate=lambda cs: corrupt_first_momentum(cs, 1))
    assert report.verdict == "not_equal"
    assert len(report.failures) == 5


def test_first_order_agreement():
    for name in ("scalar_robin", "scalar_neumann", "two_field"):
        assert first_order_agrees(gallery()[name])


def test_invariance_small():
    out = run_invariance(gallery()["scalar_robin"], seed=4, trials=4)
    assert out["lagrangian_shift"]["passed"] and out["potential_shift"]["passed"]


def test_slice_independence():
    spec = gallery()["scalar_neumann"]
    out = run_slice_independence(spec, seed=2, trials=3)
    assert out["passed"] and out["max_abs_diff"] <= 1e-10
    with pytest.raises(ValueError):
        run_slice_independence(gallery()["two_field"])


def test_single_mode_constant_across_slices():
    # a-variation vs b-variation of the k=1 mode: constant nonzero value
    omega = derive(gallery()["scalar_neumann"].theory).omega_s
    config = [TrigField.neumann_modes({1: (0.3, 0.1)})]
    a, b = [TrigField.neumann_modes({1: (1.0, 0.0)})], [TrigField.neumann_modes({1: (0.0, 1.0)})]
    values = [evaluate_bilinear(omega, config, a, b, t, {}, "quadrature", 401).value for t in (0, 0.2, Fraction(1, 3))]
    # closed form: int_0^1 cos^2(pi x) dx * (a_t b - b_t a) = 1/2 * (-pi) per unit amplitudes
    assert np.allclose(values, -np.pi / 2, atol=1e-12)
    assert evaluate_bilinear(omega, config, a, a, 0.2, {}, "quadrature").value == 0


def test_random_theories():
    accepted, skipped = 0, 0
    for seed in range(12):
        spec, diagnostic = random_theory_spec(seed)
        if spec is None:
            skipped += 1
            assert "not splittable" in diagnostic
            continue
        accepted += 1
        assert run_equivalence(spec, seed, 3).verdict == "equal"
    assert accepted and skipped


def test_not_good_vp_propagates():
    th = parse_theory("theory bad { dim 2 coords t x fields phi L: dx(dx(phi))^2 }").theory
    with pytest.raises(NotGoodVariationalPrinciple):
        run_equivalence(TheorySpec(th), 0, 1)


def test_report_schema():
    report = run_check(gallery()["scalar_neumann"], seed=5, trials=2)
    data = json.loads(report.to_json())
    assert list(data) == ["theory", "seed", "trials", "backend", "verdict", "failures",
                          "invariance", "slice_independence", "timings_ms"]
    assert data["timings_ms"] is None
    assert data["slice_independence"]["passed"]
    assert report.passed
    timed = run_check(gallery()["two_field"], seed=5, trials=1, timings=True)
    assert set(timed.timings_ms) == {"equivalence", "invariance", "slice_independence"}
    with pytest.raises(ValueError):
        run_equivalence(gallery()["two_field"], 0, 0)
    assert not EquivalenceReport("x", 0, 1, "exact", "not_equal").passed
