"""Euler-Lagrange forms and symplectic potentials by integration by parts.

The bulk identity is

    vary(L) = sum_I E_I ^ dphi^I + d_h Theta

and on every boundary face

    vary(lbar) - j* Theta = sum_I b_I ^ dphi^I - d_h thetabar.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .biform import BiForm, ChartContext, Face, d_h, pullback_boundary, vary, wedge
from .symbolic import (
    ZERO,
    Expression,
    direction_count,
    format_expression,
    jet,
    shift_var,
    time_count,
    total_derivative_index,
    var_order,
)


class NotGoodVariationalPrinciple(Exception):
    """The boundary residual keeps variations of normal-derivative jets."""

    def __init__(self, face: str, offending, namer=None, where: str = "boundary"):
        self.face = face
        self.offending = list(offending)
        self.where = where
        names = namer or (lambda v: str(v))
        listed = ", ".join(f"({format_expression(c, names)}) δ{names(v)}" for v, c in self.offending)
        super().__init__(f"{where} residual at face {face} not splittable: {listed}")


@dataclass(frozen=True, eq=True)
class Theory:
    name: str
    chart: ChartContext
    fields: tuple
    params: tuple
    bulk: BiForm
    boundary: dict = field(default_factory=dict, hash=False)
    param_values: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        n = self.chart.n
        if self.bulk and self.bulk.bidegree != (n, 0):
            raise ValueError("bulk Lagrangian must be a horizontal top form")
        for name, lbar in self.boundary.items():
            face = self.chart.face(name)
            if lbar and lbar.bidegree != (n - 1, 0):
                raise ValueError(f"boundary Lagrangian at {name} must be an (n-1, 0)-form")
            if face.coord in {i for (h, _), _ in lbar.items() for i in h}:
                raise ValueError(f"boundary Lagrangian at {name} carries the normal differential")

    def boundary_lagrangian(self, face: Face) -> BiForm:
        return self.boundary.get(face.name, BiForm.zero(self.chart))

    @property
    def density(self) -> Expression:
        """L / vol_M."""
        return self.bulk.coefficient(tuple(range(self.chart.n)))

    @property
    def K(self) -> int:
        forms = [self.bulk] + list(self.boundary.values())
        orders = [time_count(v) for f in forms for _, c in f.items() for v in c.variables() if v[0] == "j"]
        return max(orders, default=0)

    def namer(self):
        return jet_namer(self.chart, self.fields)


def jet_namer(chart: ChartContext, fields):
    """Readable names: phi_tx for jets, phi(2)_x for slice fiber coordinates."""
    coords = chart.coords

    def name(v):
        kind = v[0]
        if kind in ("c", "p"):
            return v[1]
        if kind == "j":
            sub = "".join(c * k for c, k in zip(coords, v[2]))
            return fields[v[1]] + (f"_{sub}" if sub else "")
        sub = "".join(c * k for c, k in zip(coords[1:], v[3]))
        return f"{fields[v[1]]}({v[2]})" + (f"_{sub}" if sub else "")

    return name


@dataclass(frozen=True)
class BulkSplit:
    euler: tuple  # per field, (n, 0)-forms
    potential: BiForm  # (n-1, 1)


@dataclass(frozen=True)
class BoundarySplit:
    bval: dict  # face name -> per-field (n-1, 0)-forms
    potential: dict  # face name -> (n-2, 1)-form


@dataclass(frozen=True)
class GoodVPCertificate:
    theory: str
    bulk: BulkSplit
    boundary: BoundarySplit
    faces: tuple


def collect_residual(form: BiForm, top: tuple) -> dict:
    """Read ``form = sum_u dx^top ^ c_u du`` into the mapping u -> c_u."""
    residual: dict = {}
    for (h, v), c in form.items():
        if h != top or len(v) != 1:
            raise ValueError(f"unexpected term shape {(h, v)} in a splitting residual")
        residual[v[0]] = residual.get(v[0], ZERO) + c
    return residual


def integrate_by_parts(residual: dict, top: tuple, directions: tuple, chart: ChartContext):
    """Strip derivatives along ``directions`` from every du, highest order first.

    Uses dx^top ^ c d(D_mu w) = d_h(iota_mu dx^top ^ c dw) - dx^top ^ (D_mu c) dw;
    returns the stripped residual and the accumulated potential P, so that
    the input equals ``sum dx^top ^ c du + d_h P`` with d_h along ``directions``.
    Time derivatives go before spatial ones, both in the visiting order and in
    the choice of the stripped derivative.
    """
    residual = {u: c for u, c in residual.items() if c}
    pieces: dict = {}

    def stripable(u):
        return any(direction_count(u, mu) for mu in directions)

    while True:
        pending = [u for u in residual if stripable(u)]
        if not pending:
            break
        u = min(pending, key=lambda w: (-var_order(w), -time_count(w), w))
        c = residual.pop(u)
        if not c:
            continue
        mu = next(m for m in directions if direction_count(u, m))
        lower = shift_var(u, mu, -1)
        p = top.index(mu)
        key = (top[:p] + top[p + 1:], (lower,))
        term = c * (-1) ** p
        pieces[key] = pieces[key] + term if key in pieces else term
        residual[lower] = residual.get(lower, ZERO) - total_derivative_index(c, mu, chart.coords, chart.max_order)
    return {u: c for u, c in residual.items() if c}, BiForm(chart, pieces)


def bulk_split(theory: Theory) -> BulkSplit:
    chart = theory.chart
    top = tuple(range(chart.n))
    residual, theta = integrate_by_parts(collect_residual(vary(theory.bulk), top), top, top, chart)
    vol = BiForm.volume(chart)
    euler = []
    for i in range(len(theory.fields)):
        base = jet(i, (0,) * chart.n)
        euler.append(vol * residual.pop(base, ZERO))
    if residual:
        raise AssertionError(f"unstripped bulk residual {residual}")
    return BulkSplit(tuple(euler), theta)


def euler_operator(L: BiForm, field_index: int) -> BiForm:
    """E_I = sum_alpha (-D)^alpha dF/dphi^I_alpha, the closed-form Euler operator."""
    chart = L.chart
    top = tuple(range(chart.n))
    F = L.coefficient(top)
    total = ZERO
    for v in sorted(w for w in F.variables() if w[0] == "j" and w[1] == field_index):
        term = F.diff(v)
        for mu, count in enumerate(v[2]):
            for _ in range(count):
                term = -total_derivative_index(term, mu, chart.coords, chart.max_order)
        total = total + term
    return BiForm.volume(chart) * total


def split_face(residual_form: BiForm, face: Face, top: tuple, directions: tuple, nfields: int, base_var, namer=None, where="boundary"):
    """Shared face splitting: returns (per-field coefficient forms, potential) or raises."""
    chart = residual_form.chart
    residual, piece = integrate_by_parts(collect_residual(residual_form, top), top, directions, chart)
    top_form = BiForm.volume(chart, top)
    values = []
    for i in range(nfields):
        values.append(top_form * residual.pop(base_var(i), ZERO))
    if residual:
        raise NotGoodVariationalPrinciple(face.name, sorted(residual.items()), namer, where)
    return tuple(values), -piece


def boundary_split(theory: Theory, bulk: BulkSplit) -> BoundarySplit:
    chart = theory.chart
    bval, potential = {}, {}
    for face in chart.faces:
        lbar = pullback_boundary(theory.boundary_lagrangian(face), face)
        residual = vary(lbar) - pullback_boundary(bulk.potential, face)
        top = chart.face_top(face)
        values, theta_bar = split_face(
            residual, face, top, top, len(theory.fields),
            lambda i: jet(i, (0,) * chart.n), theory.namer(),
        )
        bval[face.name] = values
        potential[face.name] = theta_bar
    return BoundarySplit(bval, potential)


def good_vp_check(theory: Theory) -> GoodVPCertificate:
    bulk = bulk_split(theory)
    bnd = boundary_split(theory, bulk)
    return GoodVPCertificate(theory.name, bulk, bnd, tuple(f.name for f in theory.chart.faces))


def check_bulk_reconstruction(theory: Theory, split: BulkSplit) -> bool:
    chart = theory.chart
    rhs = d_h(split.potential)
    for i, e in enumerate(split.euler):
        rhs = rhs + _wedge_dphi(e, i, chart)
    return vary(theory.bulk) == rhs


def check_boundary_reconstruction(theory: Theory, bulk: BulkSplit, bnd: BoundarySplit) -> bool:
    chart = theory.chart
    for face in chart.faces:
        lbar = pullback_boundary(theory.boundary_lagrangian(face), face)
        lhs = vary(lbar) - pullback_boundary(bulk.potential, face)
        rhs = -d_h(bnd.potential[face.name], chart.face_top(face))
        for i, b in enumerate(bnd.bval[face.name]):
            rhs = rhs + _wedge_dphi(b, i, chart)
        if lhs != rhs:
            return False
    return True


def _wedge_dphi(form: BiForm, i: int, chart: ChartContext) -> BiForm:
    return wedge(form, BiForm.dvar(chart, jet(i, (0,) * chart.n)))
