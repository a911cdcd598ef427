"""Bigraded forms on space-time x field space.

A term is ``coefficient * dx^H ^ dV`` with the horizontal basis ``H`` (strictly
increasing coordinate indices, placed first) followed by the vertical basis
``V`` (strictly increasing tuple of jet/fiber variables).  Signs follow the
total degree, so the horizontal and vertical differentials anticommute.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .symbolic import (
    ZERO,
    Expression,
    default_max_order,
    format_expression,
    default_namer,
    is_vertical,
    shift_var,
    total_derivative_index,
)


@dataclass(frozen=True)
class Face:
    """A boundary face of the spatial box: ``coords[coord] == value``."""

    name: str
    coord: int
    value: Fraction
    sign: int  # outward normal is sign * d/dx^coord


@dataclass(frozen=True)
class ChartContext:
    coords: tuple
    bounds: tuple  # (lo, hi) per spatial coordinate
    faces: tuple = ()
    max_order: int = field(default_factory=default_max_order)

    @classmethod
    def box(cls, coords=("t", "x"), periodic: bool = False, max_order: int | None = None) -> ChartContext:
        coords = tuple(coords)
        if len(coords) < 1:
            raise ValueError("need at least the time coordinate")
        if len(set(coords)) != len(coords):
            raise ValueError("coordinate names must be unique")
        bounds = tuple((Fraction(0), Fraction(1)) for _ in coords[1:])
        faces = []
        if not periodic:
            for i, name in enumerate(coords[1:], start=1):
                faces.append(Face(f"{name}0", i, Fraction(0), -1))
                faces.append(Face(f"{name}1", i, Fraction(1), +1))
        return cls(coords, bounds, tuple(faces), default_max_order() if max_order is None else max_order)

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def spatial(self) -> tuple:
        return tuple(range(1, self.n))

    def face(self, name: str) -> Face:
        for f in self.faces:
            if f.name == name:
                return f
        raise KeyError(f"unknown face {name!r}")

    def face_top(self, face: Face) -> tuple:
        """Horizontal top basis of a face of M (all coordinates except the normal one)."""
        return tuple(i for i in range(self.n) if i != face.coord)

    def slice_face_top(self, face: Face) -> tuple:
        return tuple(i for i in self.spatial if i != face.coord)

    def slice_face_orientation(self, face: Face) -> int:
        """Sign of the ascending basis of a face of Sigma relative to the boundary orientation.

        vol_dSigma = iota_nu vol_Sigma with nu the outward normal.
        """
        pos = self.spatial.index(face.coord)
        return face.sign * (-1) ** pos

    def boundary_orientation(self, face: Face) -> int:
        """Sign of the ascending basis of a face of M relative to vol_dM = iota_V vol_M."""
        vol = BiForm(self, {(tuple(range(self.n)), ()): Expression.const(1)})
        contracted = interior(vol, face.coord) * face.sign
        [(key, c)] = contracted.items()
        return int(c.constant_value())


def _merge_sign(a: tuple, b: tuple):
    """Sign and sorted result of concatenating two strictly sorted tuples; None on repeats."""
    if set(a) & set(b):
        return 0, None
    inversions = 0
    for x in a:
        for y in b:
            if y < x:
                inversions += 1
    return (-1) ** inversions, tuple(sorted(a + b))


def _sort_sign(seq: tuple):
    if len(set(seq)) != len(seq):
        return 0, None
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[j] < seq[i])
    return (-1) ** inversions, tuple(sorted(seq))


class BiForm:
    """Sum of terms ``Expression * dx^H ^ dV`` in normal form.  Immutable."""

    __slots__ = ("chart", "_terms")

    def __init__(self, chart: ChartContext, terms=None):
        self.chart = chart
        acc: dict = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for key, c in items:
                c = Expression.lift(c)
                if c:
                    acc[key] = acc[key] + c if key in acc else c
        self._terms = tuple(sorted((k, c) for k, c in acc.items() if c))

    # -- constructors
    @classmethod
    def zero(cls, chart) -> BiForm:
        return cls(chart)

    @classmethod
    def scalar(cls, chart, expr, horizontal=()) -> BiForm:
        return cls(chart, {(tuple(horizontal), ()): Expression.lift(expr)})

    @classmethod
    def dx(cls, chart, mu: int) -> BiForm:
        return cls(chart, {((mu,), ()): Expression.const(1)})

    @classmethod
    def dvar(cls, chart, var: tuple) -> BiForm:
        if not is_vertical(var):
            raise ValueError(f"{var} has no vertical differential")
        return cls(chart, {((), (var,)): Expression.const(1)})

    @classmethod
    def volume(cls, chart, indices=None) -> BiForm:
        return cls.scalar(chart, 1, tuple(range(chart.n)) if indices is None else tuple(indices))

    # -- inspection
    def items(self):
        return self._terms

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def bidegree(self):
        degs = {(len(h), len(v)) for (h, v), _ in self._terms}
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError(f"inhomogeneous form with bidegrees {sorted(degs)}")
        return degs.pop()

    def coefficient(self, horizontal=(), vertical=()) -> Expression:
        for key, c in self._terms:
            if key == (tuple(horizontal), tuple(vertical)):
                return c
        return ZERO

    def vertical_vars(self) -> set:
        out = set()
        for (h, v), c in self._terms:
            out.update(v)
            out.update(w for w in c.variables() if is_vertical(w))
        return out

    # -- algebra
    def _check(self, other):
        if not isinstance(other, BiForm):
            raise TypeError("expected a BiForm")
        if other.chart != self.chart:
            raise ValueError("forms live on different charts")

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        self._check(other)
        acc = dict(self._terms)
        for k, c in other._terms:
            acc[k] = acc[k] + c if k in acc else c
        return BiForm(self.chart, acc)

    __radd__ = __add__

    def __neg__(self):
        return BiForm(self.chart, {k: -c for k, c in self._terms})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        s = Expression.lift(scalar)
        return BiForm(self.chart, {k: c * s for k, c in self._terms})

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, BiForm) and self.chart == other.chart and self._terms == other._terms

    def __hash__(self):
        return hash(self._terms)

    def __reduce__(self):
        return (BiForm, (self.chart, dict(self._terms)))

    def map_coefficients(self, fn) -> BiForm:
        return BiForm(self.chart, {k: fn(c) for k, c in self._terms})

    def map_vars(self, fn) -> BiForm:
        """Relabel variables in coefficients and vertical factors (re-sorting with sign)."""
        acc: dict = {}
        for (h, v), c in self._terms:
            sign, sv = _sort_sign(tuple(fn(w) for w in v))
            if not sign:
                continue
            key = (h, sv)
            term = c.rename(fn) * sign
            acc[key] = acc[key] + term if key in acc else term
        return BiForm(self.chart, acc)

    def __repr__(self):
        return f"BiForm({format_biform(self)})"


def wedge(a: BiForm, b: BiForm) -> BiForm:
    a._check(b)
    acc: dict = {}
    for (h1, v1), c1 in a.items():
        for (h2, v2), c2 in b.items():
            sh, h = _merge_sign(h1, h2)
            if not sh:
                continue
            sv, v = _merge_sign(v1, v2)
            if not sv:
                continue
            sign = sh * sv * (-1) ** (len(v1) * len(h2))
            key = (h, v)
            term = c1 * c2 * sign
            acc[key] = acc[key] + term if key in acc else term
    return BiForm(a.chart, acc)


def lie_derivative(a: BiForm, mu: int) -> BiForm:
    """Lie derivative along the total vector field D_mu (coefficients and vertical factors)."""
    chart = a.chart
    acc: dict = {}

    def put(key, term):
        if term:
            acc[key] = acc[key] + term if key in acc else term

    for (h, v), c in a.items():
        put((h, v), total_derivative_index(c, mu, chart.coords, chart.max_order))
        for k, w in enumerate(v):
            sign, sv = _sort_sign(v[:k] + (shift_var(w, mu, 1, chart.max_order),) + v[k + 1:])
            if sign:
                put((h, sv), c * sign)
    return BiForm(chart, acc)


def d_h(a: BiForm, directions=None) -> BiForm:
    """Horizontal differential sum_mu dx^mu ^ L_{D_mu}; ``directions`` restricts to a face."""
    chart = a.chart
    dirs = range(chart.n) if directions is None else directions
    out = BiForm.zero(chart)
    for mu in dirs:
        out = out + wedge(BiForm.dx(chart, mu), lie_derivative(a, mu))
    return out


def d_v(a: BiForm) -> BiForm:
    """Vertical differential, a graded derivation of total degree one (anticommutes with d_h)."""
    chart = a.chart
    acc: dict = {}
    for (h, v), c in a.items():
        for w in sorted(x for x in c.variables() if is_vertical(x)):
            sv, vv = _merge_sign((w,), v)
            if not sv:
                continue
            term = c.diff(w) * (sv * (-1) ** len(h))
            key = (h, vv)
            acc[key] = acc[key] + term if key in acc else term
    return BiForm(chart, acc)


def vary(a: BiForm) -> BiForm:
    """The variation with horizontal factors held on the left: (-1)^r d_v on (r, s)-forms.

    This is the field-space differential of the splitting identities and of
    the symplectic assemblies; it commutes with horizontal factors.
    """
    chart = a.chart
    acc: dict = {}
    for (h, v), c in a.items():
        for w in sorted(x for x in c.variables() if is_vertical(x)):
            sv, vv = _merge_sign((w,), v)
            if not sv:
                continue
            key = (h, vv)
            term = c.diff(w) * sv
            acc[key] = acc[key] + term if key in acc else term
    return BiForm(chart, acc)


def interior(a: BiForm, mu: int) -> BiForm:
    """Contraction with the coordinate vector field d/dx^mu."""
    acc: dict = {}
    for (h, v), c in a.items():
        if mu not in h:
            continue
        p = h.index(mu)
        key = (h[:p] + h[p + 1:], v)
        term = c * (-1) ** p
        acc[key] = acc[key] + term if key in acc else term
    return BiForm(a.chart, acc)


def contract_time(a: BiForm) -> BiForm:
    return interior(a, 0)


def tangential_part(a: BiForm) -> BiForm:
    """alpha^T = iota_dt(dt ^ alpha), so that alpha = dt ^ alpha_perp + alpha^T."""
    return contract_time(wedge(BiForm.dx(a.chart, 0), a))


def pullback_boundary(a: BiForm, face) -> BiForm:
    chart = a.chart
    if isinstance(face, str):
        face = chart.face(face)
    elif face not in chart.faces:
        raise KeyError(f"unknown face {face!r}")
    sub = {("c", chart.coords[face.coord]): face.value}
    return BiForm(chart, {(h, v): c.subs(sub) for (h, v), c in a.items() if face.coord not in h})


def to_slice_var(v: tuple) -> tuple:
    if v[0] == "j":
        return ("q", v[1], v[2][0], v[2][1:])
    return v


def from_slice_var(v: tuple) -> tuple:
    if v[0] == "q":
        return ("j", v[1], (v[2],) + v[3])
    return v


def pullback_slice(a: BiForm, t0=None) -> BiForm:
    """Pull back to the slice t = t0: drop dt, relabel time jets as fiber coordinates.

    With ``t0=None`` explicit time dependence is kept symbolic (time-dependent
    canonical data).
    """
    chart = a.chart
    kept = BiForm(chart, {(h, v): c for (h, v), c in a.items() if 0 not in h})
    out = kept.map_vars(to_slice_var)
    if t0 is not None:
        sub = {("c", chart.coords[0]): Fraction(t0)}
        out = out.map_coefficients(lambda c: c.subs(sub))
    return out


def lift_slice(a: BiForm) -> BiForm:
    """Inverse relabeling: fiber coordinates q_(mu) back to time jets on M."""
    return a.map_vars(from_slice_var)


# -- printing ------------------------------------------------------------------

def format_biform(a: BiForm, namer=default_namer) -> str:
    if not a:
        return "0"
    coords = a.chart.coords
    parts = []
    for (h, v), c in a.items():
        basis = [f"d{coords[i]}" for i in h] + [f"δ({namer(w)})" for w in v]
        coef = format_expression(c, namer)
        if basis:
            parts.append(f"({coef}) " + "^".join(basis))
        else:
            parts.append(f"({coef})")
    return " + ".join(parts)
