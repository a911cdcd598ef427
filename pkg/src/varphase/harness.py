"""Theory gallery and the seeded equivalence / invariance campaign."""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .biform import BiForm, ChartContext, d_h, pullback_boundary, wedge
from .canonical import (
    CanonicalSplit,
    canonical_split,
    canonical_symplectic,
    canonical_symplectic_first_order,
    decompose_theory,
)
from .cps import cps_symplectic
from .dsl import parse_theory
from .evaluator import GridField, PolynomialField, TrigField, evaluate_bilinear
from .symbolic import Expression, coord, fiber, jet
from .variational import (
    BoundarySplit,
    BulkSplit,
    NotGoodVariationalPrinciple,
    Theory,
    boundary_split,
    bulk_split,
)

GALLERY_SOURCES = {
    "scalar_robin": """theory scalar_robin {
  dim 2
  coords t x
  fields phi
  params m b
  L: 1/2*dt(phi)^2 - 1/2*dx(phi)^2 - 1/2*m^2*phi^2
  l[x0]: -1/2*b*phi^2
  l[x1]: 1/2*b*phi^2
}
""",
    "scalar_neumann": """theory scalar_neumann {
  dim 2
  coords t x
  fields phi
  L: 1/2*dt(phi)^2 - 1/2*dx(phi)^2
}
""",
    "two_field": """theory two_field {
  dim 2
  coords t x
  fields phi psi
  L: dt(phi)*psi - 1/2*psi^2 - 1/2*dx(phi)^2
}
""",
    "higher_order": """theory higher_order {
  dim 2
  coords t x
  fields phi
  params c
  L: -1/2*dt(dt(phi))^2 + 1/2*c*dx(phi)^2
}
""",
}

EXPECTED_K = {"scalar_robin": 1, "scalar_neumann": 1, "two_field": 1, "higher_order": 2}

GRID_POINTS = 201
QUADRATURE_POINTS = 401
FLOAT_RTOL = 1e-8


@dataclass(frozen=True)
class TheorySpec:
    theory: Theory
    source: str = ""
    expected_K: int | None = None
    good_vp: bool = True
    solution_family: str | None = None  # "neumann_modes" or None

    @property
    def name(self) -> str:
        return self.theory.name


def gallery() -> dict:
    out = {}
    for name, src in GALLERY_SOURCES.items():
        family = "neumann_modes" if name == "scalar_neumann" else None
        out[name] = TheorySpec(parse_theory(src).theory, src, EXPECTED_K[name], True, family)
    return out


def gallery_spec(name: str) -> TheorySpec:
    specs = gallery()
    if name not in specs:
        raise KeyError(f"unknown gallery theory {name!r}; available: {', '.join(specs)}")
    return specs[name]


# -- random data ---------------------------------------------------------------

def random_rational(rng, nonzero=False) -> Fraction:
    while True:
        value = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10)))
        if value or not nonzero:
            return value


def random_polynomial(rng, coords=("t", "x"), degree=4) -> Expression:
    """Polynomial with degree <= ``degree`` in each coordinate and random rational coefficients."""
    t, x = (Expression.var(coord(c)) for c in coords[:2])
    acc = Expression.const(0)
    for i in range(degree + 1):
        for j in range(degree + 1):
            acc = acc + Expression.const(random_rational(rng)) * t**i * x**j
    return acc


def random_params(theory: Theory, rng) -> dict:
    out = {}
    for p in theory.params:
        out[p] = theory.param_values[p] if p in theory.param_values else random_rational(rng, nonzero=True)
    return out


def random_theory_spec(seed: int, max_terms: int = 4) -> tuple:
    """A random bulk-only second-order scalar theory; returns (spec or None, diagnostic)."""
    rng = np.random.default_rng([seed, 0x7E0])
    pool = [(1, 0), (0, 1), (0, 0), (2, 0), (1, 1), (0, 2)]
    density = Expression.const(0)
    while not density:
        for _ in range(int(rng.integers(2, max_terms + 1))):
            k = int(rng.integers(1, 4))
            mono = Expression.const(random_rational(rng, nonzero=True))
            for _ in range(k):
                mono = mono * Expression.var(jet(0, pool[int(rng.integers(0, len(pool)))]))
            density = density + mono
    chart = ChartContext.box()
    theory = Theory(f"random_{seed}", chart, ("phi",), (), BiForm.volume(chart) * density)
    try:
        boundary_split(theory, bulk_split(theory))
    except NotGoodVariationalPrinciple as exc:
        return None, str(exc)
    return TheorySpec(theory, "", None, True, None), ""


# -- derivation bundle -----------------------------------------------------------

@dataclass(frozen=True)
class Derivation:
    bulk: BulkSplit
    boundary: BoundarySplit
    canonical: CanonicalSplit
    omega_s: object
    omega_l: object


def derive(theory: Theory, mutate=None) -> Derivation:
    bulk = bulk_split(theory)
    bnd = boundary_split(theory, bulk)
    cs = canonical_split(decompose_theory(theory))
    if mutate is not None:
        cs = mutate(cs)
    return Derivation(bulk, bnd, cs, cps_symplectic(bulk, bnd), canonical_symplectic(cs))


def corrupt_first_momentum(cs: CanonicalSplit, seed: int) -> CanonicalSplit:
    """Add c * q_(1) to one A^(1) coefficient, with c and the field drawn from ``seed``."""
    rng = np.random.default_rng([seed, 0xBAD])
    chart = cs.chart
    i = int(rng.integers(0, len(cs.A)))
    c = random_rational(rng, nonzero=True)
    vol = BiForm.volume(chart, chart.spatial)
    bump = vol * (Expression.const(c) * Expression.var(fiber(i, 1, (0,) * (chart.n - 1))))
    A = [list(row) for row in cs.A]
    A[i][1] = A[i][1] + bump
    return replace(cs, A=tuple(tuple(row) for row in A))


# -- trials ----------------------------------------------------------------------

def _trial_data(theory: Theory, seed: int, trial: int):
    rng = np.random.default_rng([seed, trial])
    params = random_params(theory, rng)
    coords = theory.chart.coords
    nf = len(theory.fields)
    config = [random_polynomial(rng, coords) for _ in range(nf)]
    d1 = [random_polynomial(rng, coords) for _ in range(nf)]
    d2 = [random_polynomial(rng, coords) for _ in range(nf)]
    return params, config, d1, d2


def _as_backend(data, backend, coords):
    if backend == "grid":
        return [GridField.from_expression(e, coords, GRID_POINTS) for e in data]
    if backend == "quadrature":
        return [PolynomialField(e, coords) for e in data]
    return data


def _run_trial(args):
    theory, deriv, seed, trial, backend, t0 = args
    params, config, d1, d2 = _trial_data(theory, seed, trial)
    coords = theory.chart.coords
    c, a, b = (_as_backend(x, backend, coords) for x in (config, d1, d2))
    s = evaluate_bilinear(deriv.omega_s, c, a, b, t0, params, backend, QUADRATURE_POINTS).value
    l = evaluate_bilinear(deriv.omega_l, c, a, b, t0, params, backend, QUADRATURE_POINTS).value
    if backend == "exact":
        return trial, s == l, str(s - l), s
    diff = abs(s - l)
    return trial, diff <= FLOAT_RTOL * max(1.0, abs(s)), repr(float(diff)), s


def _map(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


@dataclass
class EquivalenceReport:
    theory: str
    seed: int
    trials: int
    backend: str
    verdict: str = "equal"
    failures: list = field(default_factory=list)
    invariance: dict | None = None
    slice_independence: dict | None = None
    timings_ms: dict | None = None

    @property
    def passed(self) -> bool:
        ok = self.verdict == "equal"
        if self.invariance:
            ok = ok and all(v.get("passed", True) for v in self.invariance.values())
        if self.slice_independence:
            ok = ok and self.slice_independence.get("passed", True)
        return ok

    def to_dict(self) -> dict:
        return {
            "theory": self.theory,
            "seed": self.seed,
            "trials": self.trials,
            "backend": self.backend,
            "verdict": self.verdict,
            "failures": self.failures,
            "invariance": self.invariance,
            "slice_independence": self.slice_independence,
            "timings_ms": self.timings_ms,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def run_equivalence(spec: TheorySpec, seed: int, trials: int, backend: str = "exact", t0=0,
                    mutate=None, workers: int | None = None) -> EquivalenceReport:
    """Compare Omega_S and Omega_L on ``trials`` seeded random configurations and variations."""
    if trials < 1:
        raise ValueError("trials must be positive")
    theory = spec.theory
    deriv = derive(theory, mutate)
    jobs = [(theory, deriv, seed, k, backend, Fraction(t0)) for k in range(trials)]
    results = _map(_run_trial, jobs, workers)
    failures = [{"trial": k, "delta": delta} for k, ok, delta, _ in results if not ok]
    verdict = "equal" if not failures else "not_equal"
    return EquivalenceReport(theory.name, seed, trials, backend, verdict, failures)


def first_order_agrees(spec: TheorySpec) -> bool:
    """K = 1: the first-order and double-sum assemblies are identical after normalization."""
    cs = canonical_split(decompose_theory(spec.theory))
    return canonical_symplectic(cs) == canonical_symplectic_first_order(cs)


# -- invariance --------------------------------------------------------------------

def _random_jet_polynomial(rng, theory: Theory, terms=3) -> Expression:
    n = theory.chart.n
    atoms = [Expression.var(coord(c)) for c in theory.chart.coords]
    for i in range(len(theory.fields)):
        atoms.append(Expression.var(jet(i, (0,) * n)))
        for mu in range(n):
            atoms.append(Expression.var(jet(i, tuple(int(m == mu) for m in range(n)))))
    acc = Expression.const(0)
    for _ in range(terms):
        mono = Expression.const(random_rational(rng, nonzero=True))
        for _ in range(int(rng.integers(1, 3))):
            mono = mono * atoms[int(rng.integers(0, len(atoms)))]
        acc = acc + mono
    return acc


def random_horizontal_shift(theory: Theory, rng) -> BiForm:
    """Random (n-1, 0)-form with first-order polynomial coefficients."""
    chart = theory.chart
    n = chart.n
    out = BiForm.zero(chart)
    for skip in range(n):
        basis = tuple(i for i in range(n) if i != skip)
        out = out + BiForm.scalar(chart, _random_jet_polynomial(rng, theory), basis)
    return out


def random_potential_shift(theory: Theory, rng) -> BiForm:
    """Random (n-2, 1)-form."""
    chart = theory.chart
    n = chart.n
    out = BiForm.zero(chart)
    vars_ = [jet(i, (0,) * n) for i in range(len(theory.fields))]
    vars_ += [jet(i, tuple(int(m == mu) for m in range(n))) for i in range(len(theory.fields)) for mu in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            basis = tuple(i for i in range(n) if i not in (a, b))
            for _ in range(2):
                u = vars_[int(rng.integers(0, len(vars_)))]
                coeff = BiForm.scalar(chart, _random_jet_polynomial(rng, theory), basis)
                out = out + wedge(coeff, BiForm.dvar(chart, u))
    return out


def shift_lagrangian(theory: Theory, Y: BiForm) -> Theory:
    """L -> L + d_h Y and lbar -> lbar + j*Y on every face."""
    chart = theory.chart
    boundary = {}
    for face in chart.faces:
        lbar = theory.boundary_lagrangian(face) + pullback_boundary(Y, face)
        if lbar:
            boundary[face.name] = lbar
    return replace(theory, bulk=theory.bulk + d_h(Y), boundary=boundary)


def shift_potentials(bulk: BulkSplit, bnd: BoundarySplit, rho: BiForm):
    """Theta -> Theta + d_h rho and thetabar -> thetabar + j*rho."""
    chart = rho.chart
    new_bulk = BulkSplit(bulk.euler, bulk.potential + d_h(rho))
    potential = {f.name: bnd.potential[f.name] + pullback_boundary(rho, f) for f in chart.faces}
    return new_bulk, BoundarySplit(bnd.bval, potential)


def run_invariance(spec: TheorySpec, seed: int, trials: int = 50, t0=0) -> dict:
    theory = spec.theory
    base = derive(theory)
    lag_fail, pot_fail = [], []
    for k in range(trials):
        rng = np.random.default_rng([seed, k, 0x1A])
        params, config, d1, d2 = _trial_data(theory, seed, k)
        reference = evaluate_bilinear(base.omega_s, config, d1, d2, t0, params).value

        shifted = shift_lagrangian(theory, random_horizontal_shift(theory, rng))
        b2 = bulk_split(shifted)
        omega = cps_symplectic(b2, boundary_split(shifted, b2))
        value = evaluate_bilinear(omega, config, d1, d2, t0, params).value
        if value != reference:
            lag_fail.append({"trial": k, "delta": str(value - reference)})

        nb, nbd = shift_potentials(base.bulk, base.boundary, random_potential_shift(theory, rng))
        value = evaluate_bilinear(cps_symplectic(nb, nbd), config, d1, d2, t0, params).value
        if value != reference:
            pot_fail.append({"trial": k, "delta": str(value - reference)})
    return {
        "lagrangian_shift": {"trials": trials, "passed": not lag_fail, "failures": lag_fail},
        "potential_shift": {"trials": trials, "passed": not pot_fail, "failures": pot_fail},
    }


# -- slice independence ------------------------------------------------------------

def neumann_solution(rng, modes=(1, 2)) -> TrigField:
    """Free-scalar solution with Neumann faces: sum_k cos(k pi x)(a_k cos(k pi t) + b_k sin(k pi t))."""
    return TrigField.neumann_modes({k: (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))) for k in modes})


def run_slice_independence(spec: TheorySpec, seed: int = 0, trials: int = 10, t0=0, t1=Fraction(1, 3),
                           points: int = QUADRATURE_POINTS, tol: float = 1e-10) -> dict:
    if spec.solution_family != "neumann_modes":
        raise ValueError(f"theory {spec.name} has no analytic solution family")
    deriv = derive(spec.theory)
    worst = 0.0
    for k in range(trials):
        rng = np.random.default_rng([seed, k, 0x51])
        config = [neumann_solution(rng)]
        d1, d2 = [neumann_solution(rng)], [neumann_solution(rng)]
        v0 = evaluate_bilinear(deriv.omega_s, config, d1, d2, t0, {}, "quadrature", points).value
        v1 = evaluate_bilinear(deriv.omega_s, config, d1, d2, t1, {}, "quadrature", points).value
        worst = max(worst, abs(v0 - v1))
    return {"t0": str(Fraction(t0)), "t1": str(Fraction(t1)), "trials": trials, "points": points,
            "max_abs_diff": float(f"{worst:.3e}"), "passed": worst <= tol}


def run_check(spec: TheorySpec, seed: int, trials: int, backend: str = "exact", t0=0,
              timings: bool = False, workers: int | None = None) -> EquivalenceReport:
    """Equivalence, invariance and (when available) slice independence in one report."""
    clock = time.perf_counter()
    report = run_equivalence(spec, seed, trials, backend, t0, workers=workers)
    t_eq = time.perf_counter()
    report.invariance = run_invariance(spec, seed, min(trials, 50), t0)
    t_inv = time.perf_counter()
    if spec.solution_family:
        report.slice_independence = run_slice_independence(spec, seed)
    t_end = time.perf_counter()
    if timings:
        report.timings_ms = {
            "equivalence": round((t_eq - clock) * 1000, 1),
            "invariance": round((t_inv - t_eq) * 1000, 1),
            "slice_independence": round((t_end - t_inv) * 1000, 1),
        }
    return report
