"""(1, n-1) decomposition, canonical splits, Ostrogradsky momenta and the canonical form.

Slice objects reuse the space-time chart: they never carry dt, their jets are
fiber coordinates q^I_(mu) with spatial multi-indices, and the total time
derivative acts on them as the fiber shift q_(mu) -> q_(mu+1) (plus explicit
time dependence, which is kept symbolic until evaluation).
"""
from __future__ import annotations

from dataclasses import dataclass

from .biform import (
    BiForm,
    ChartContext,
    contract_time,
    lie_derivative,
    pullback_boundary,
    pullback_slice,
    vary,
    wedge,
)
from .symbolic import ZERO, fiber, time_count
from .variational import (
    NotGoodVariationalPrinciple,
    Theory,
    collect_residual,
    integrate_by_parts,
    jet_namer,
)


@dataclass(frozen=True)
class CanonicalTheory:
    name: str
    chart: ChartContext
    fields: tuple
    params: tuple
    bulk: BiForm  # (n-1, 0) on the slice
    boundary: dict  # face name -> (n-2, 0)
    param_values: dict

    @property
    def K(self) -> int:
        forms = [self.bulk] + list(self.boundary.values())
        return max((time_count(v) for f in forms for _, c in f.items() for v in c.variables() if v[0] == "q"), default=0)

    def namer(self):
        return jet_namer(self.chart, self.fields)


@dataclass(frozen=True)
class CanonicalSplit:
    theory: CanonicalTheory
    K: int
    A: tuple  # A[I][mu], (n-1, 0)-forms
    B: dict  # face -> B[I][mu], (n-2, 0)-forms
    potential: BiForm  # Theta tilde, (n-2, 1)
    boundary_potential: dict  # face -> theta tilde, (n-3, 1)

    @property
    def chart(self):
        return self.theory.chart


@dataclass(frozen=True)
class SymplecticBilinear:
    """Bulk (n-1, 2) integrand over Sigma and (n-2, 2) integrands over the faces of Sigma.

    The value on a pair of variations is  int_Sigma bulk - oint_dSigma boundary.
    """

    chart: ChartContext
    bulk: BiForm
    boundary: dict

    def is_zero(self) -> bool:
        return not self.bulk and not any(self.boundary.values())


@dataclass(frozen=True)
class MomentumDensity:
    order: int
    bulk: BiForm  # (n-1, 0) kernel, paired by multiplication with a test function
    boundary: dict  # face -> (n-2, 0) kernel


def decompose_theory(theory: Theory) -> CanonicalTheory:
    """Canonical Lagrangians L = iota_dt L and l = -iota_dt lbar, read on the slice."""
    chart = theory.chart
    bulk = pullback_slice(contract_time(theory.bulk))
    boundary = {}
    for face in chart.faces:
        lbar = pullback_boundary(theory.boundary_lagrangian(face), face)
        boundary[face.name] = pullback_slice(-contract_time(lbar))
    return CanonicalTheory(theory.name, chart, theory.fields, theory.params, bulk, boundary, dict(theory.param_values))


def _base(i: int, mu: int, chart: ChartContext):
    return fiber(i, mu, (0,) * (chart.n - 1))


def canonical_bulk_split(ct: CanonicalTheory):
    """A^(mu)_I and Theta tilde from vary(L) by spatial integration by parts."""
    chart = ct.chart
    top = chart.spatial
    K = ct.K
    residual, theta = integrate_by_parts(collect_residual(vary(ct.bulk), top), top, top, chart)
    vol = BiForm.volume(chart, top)
    A = tuple(tuple(vol * residual.pop(_base(i, mu, chart), ZERO) for mu in range(K + 1)) for i in range(len(ct.fields)))
    if residual:
        raise AssertionError(f"unstripped canonical residual {residual}")
    return A, theta


def canonical_split(ct: CanonicalTheory) -> CanonicalSplit:
    chart = ct.chart
    K = ct.K
    A, theta = canonical_bulk_split(ct)
    B, thetas = {}, {}
    for face in chart.faces:
        residual = vary(ct.boundary.get(face.name, BiForm.zero(chart))) - pullback_boundary(theta, face)
        values, potential = _split_slice_face(residual, face, chart.slice_face_top(face), ct, K)
        B[face.name] = values
        thetas[face.name] = potential
    return CanonicalSplit(ct, K, A, B, theta, thetas)


def _split_slice_face(residual, face, top, ct, K):
    chart = ct.chart
    nf = len(ct.fields)
    res, piece = integrate_by_parts(collect_residual(residual, top), top, top, chart)
    top_form = BiForm.volume(chart, top)
    values = tuple(tuple(top_form * res.pop(_base(i, mu, chart), ZERO) for mu in range(K + 1)) for i in range(nf))
    if res:
        raise NotGoodVariationalPrinciple(face.name, sorted(res.items()), ct.namer(), "canonical boundary")
    return values, -piece


def time_derivative(a: BiForm, times: int = 1, sign: int = 1) -> BiForm:
    """(sign * d/dt)^times on slice forms (fiber shift plus explicit time dependence)."""
    for _ in range(times):
        a = lie_derivative(a, 0) * sign
    return a


def momenta(cs: CanonicalSplit, mu: int) -> MomentumDensity:
    """p^(mu) = sum_{k=mu}^K (-d/dt)^(k-mu) { int A^(k) . - oint B^(k) . }, per field summed kernels."""
    if not 1 <= mu <= cs.K:
        raise ValueError(f"momentum order {mu} outside 1..{cs.K}")
    chart = cs.chart
    bulk = []
    for Ai in cs.A:
        acc = BiForm.zero(chart)
        for k in range(mu, cs.K + 1):
            acc = acc + time_derivative(Ai[k], k - mu, -1)
        bulk.append(acc)
    boundary = {}
    for face, Bf in cs.B.items():
        per = []
        for Bi in Bf:
            acc = BiForm.zero(chart)
            for k in range(mu, cs.K + 1):
                acc = acc + time_derivative(Bi[k], k - mu, -1)
            per.append(acc)
        boundary[face] = tuple(per)
    return MomentumDensity(mu, tuple(bulk), boundary)


def canonical_symplectic(cs: CanonicalSplit) -> SymplecticBilinear:
    """Double-sum assembly sum_k sum_{mu<k} vary((-d/dt)^(k-1-mu) A^(k)) ^ dq_(mu), same for B."""
    chart = cs.chart

    def assemble(coeffs):
        out = BiForm.zero(chart)
        for i, Ci in enumerate(coeffs):
            for k in range(1, cs.K + 1):
                for mu in range(k):
                    term = vary(time_derivative(Ci[k], k - 1 - mu, -1))
                    out = out + wedge(term, BiForm.dvar(chart, _base(i, mu, chart)))
        return out

    return SymplecticBilinear(chart, assemble(cs.A), {f: assemble(Bf) for f, Bf in cs.B.items()})


def canonical_symplectic_first_order(cs: CanonicalSplit) -> SymplecticBilinear:
    """First-order assembly int vary(A^(1)) ^ dq - oint vary(B^(1)) ^ dq."""
    if cs.K > 1:
        raise ValueError("first-order assembly needs K <= 1")
    chart = cs.chart

    def assemble(coeffs):
        out = BiForm.zero(chart)
        if cs.K < 1:
            return out
        for i, Ci in enumerate(coeffs):
            out = out + wedge(vary(Ci[1]), BiForm.dvar(chart, _base(i, 0, chart)))
        return out

    return SymplecticBilinear(chart, assemble(cs.A), {f: assemble(Bf) for f, Bf in cs.B.items()})
