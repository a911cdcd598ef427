"""Evaluation of forms, actions and symplectic bilinears on concrete fields.

Three kinds of field data are understood:

* ``Expression`` polynomials in the coordinates (exact backend),
* :class:`GridField` samples on a uniform [0, T] x [0, 1] grid (grid backend),
* :class:`TrigField` closed-form sums of separable sines (quadrature backend).

Numeric backends are implemented for n = 2 only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

import numpy as np
from scipy.integrate import simpson

from .biform import BiForm, ChartContext
from .canonical import CanonicalTheory, SymplecticBilinear
from .symbolic import ZERO, Expression, is_vertical, total_derivative_index
from .variational import Theory

BACKENDS = ("exact", "grid", "quadrature")


@dataclass(frozen=True)
class PairingResult:
    value: object  # Fraction (exact) or float
    backend: str
    bulk: object
    faces: dict = field(default_factory=dict)  # face name -> signed contribution

    @property
    def total(self):
        return self.bulk + sum(self.faces.values())


def _perm_sign(p) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[j] < p[i]:
                sign = -sign
    return sign


# -- exact backend -----------------------------------------------------------------

def _derive(expr: Expression, var: tuple, coords: tuple) -> Expression:
    """Value of jet/fiber variable ``var`` for a field given as a polynomial in the coordinates."""
    if var[0] == "j":
        counts = var[2]
    else:
        counts = (var[2],) + tuple(var[3])
    out = expr
    for mu, k in enumerate(counts):
        for _ in range(k):
            out = total_derivative_index(out, mu, coords, max_order=10**6)
    return out


def contract_vertical(form: BiForm, variations) -> BiForm:
    """Insert polynomial variations into the vertical slots (alternating, prolonged).

    ``variations`` is a list with one entry per vertical slot; each entry is a
    sequence of per-field Expressions in the coordinates.
    """
    chart = form.chart
    coords = chart.coords
    acc: dict = {}
    for (h, v), c in form.items():
        if len(v) != len(variations):
            raise ValueError(f"form has vertical degree {len(v)}, got {len(variations)} variations")
        total = ZERO
        for perm in permutations(range(len(v))):
            term = Expression.const(_perm_sign(perm))
            for slot, w in zip(perm, v):
                term = term * _derive(variations[slot][w[1]], w, coords)
            total = total + term
        key = (h, ())
        acc[key] = acc[key] + c * total if key in acc else c * total
    return BiForm(chart, acc)


def _integrate_box(expr: Expression, bounds: dict) -> Expression:
    """Exact integral over a box, ``bounds`` maps coordinate variables to (lo, hi)."""
    acc: dict = {}
    for mono, c in expr.items():
        rest = []
        factor = Fraction(1)
        for v, p in mono:
            if v in bounds:
                lo, hi = bounds[v]
                factor *= (Fraction(hi) ** (p + 1) - Fraction(lo) ** (p + 1)) / (p + 1)
            else:
                rest.append((v, p))
        for v, (lo, hi) in bounds.items():
            if v not in dict(mono):
                factor *= Fraction(hi) - Fraction(lo)
        key = tuple(rest)
        acc[key] = acc.get(key, 0) + c * factor
    return Expression(acc)


def _param_map(params) -> dict:
    return {("p", k): Fraction(v) for k, v in (params or {}).items()}


def _field_substitution(exprs, config, coords: tuple, t0) -> dict:
    mapping = {}
    for e in exprs:
        for v in e.variables():
            if is_vertical(v) and v not in mapping:
                mapping[v] = _derive(config[v[1]], v, coords)
    if t0 is not None:
        tsub = {("c", coords[0]): Fraction(t0)}
        mapping = {v: e.subs(tsub) for v, e in mapping.items()}
    return mapping


def _exact_value(expr: Expression, config, chart: ChartContext, t0, params) -> Expression:
    out = expr.subs(_field_substitution([expr], config, chart.coords, t0))
    out = out.subs(_param_map(params))
    if t0 is not None:
        out = out.subs({("c", chart.coords[0]): Fraction(t0)})
    return out


def integrate_slice(form: BiForm, config, t0=0, params=None, backend: str = "exact", face=None):
    """int_Sigma of a horizontal slice (n-1)-form, or oint over one face of a (n-2)-form.

    Returns the oriented value (exact Fraction).  With ``t0=None`` the result
    is a polynomial in time.
    """
    if backend != "exact":
        raise ValueError("integrate_slice supports the exact backend; use evaluate_bilinear for numeric data")
    chart = form.chart
    for e in config:
        if not isinstance(e, Expression):
            raise TypeError("exact backend needs polynomial field data")
    if face is None:
        top = chart.spatial
        bounds = {("c", chart.coords[i]): chart.bounds[i - 1] for i in chart.spatial}
        orient = 1
    else:
        face = chart.face(face) if isinstance(face, str) else face
        top = chart.slice_face_top(face)
        bounds = {("c", chart.coords[i]): chart.bounds[i - 1] for i in top}
        orient = chart.slice_face_orientation(face)
    total = ZERO
    for (h, v), c in form.items():
        if v:
            raise ValueError("contract vertical slots before integrating")
        if h != top:
            raise ValueError(f"form is not a top form on the integration domain: {h}")
        val = _exact_value(c, config, chart, t0, params)
        if face is not None:
            val = val.subs({("c", chart.coords[face.coord]): face.value})
        total = total + _integrate_box(val, bounds)
    total = total * orient
    if t0 is not None:
        if not total.is_constant():
            raise ValueError(f"integral is not a number: undetermined symbols {sorted(total.variables())}")
        return total.constant_value()
    return total


# -- numeric field data ------------------------------------------------------------

def fd_weights(offsets, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative on integer ``offsets``."""
    offsets = np.asarray(offsets, dtype=float)
    s = len(offsets)
    if s <= order:
        raise ValueError("stencil too small for the derivative order")
    V = np.vander(offsets, s, increasing=True).T
    rhs = np.zeros(s)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def _stencil(i: int, N: int, size: int):
    start = min(max(i - size // 2, 0), N - size)
    idx = np.arange(start, start + size)
    return idx, idx - i


def _derivative_along(values: np.ndarray, order: int, h: float, accuracy: int) -> np.ndarray:
    """Derivative along the last axis; centered in the interior, one-sided near the ends."""
    if order == 0:
        return values
    N = values.shape[-1]
    size = order + accuracy
    if size % 2 == 0:
        size += 1
    if N < size:
        raise ValueError(f"grid of {N} points too coarse for a derivative of order {order}")
    out = np.empty_like(values, dtype=float)
    cache = {}
    for i in range(N):
        idx, off = _stencil(i, N, size)
        key = tuple(off)
        w = cache.get(key)
        if w is None:
            w = cache[key] = fd_weights(off, order) / h**order
        out[..., i] = values[..., idx] @ w
    return out


class GridField:
    """Samples of one field on a uniform grid over [0, T] x [0, 1]."""

    def __init__(self, samples, T: float = 1.0, accuracy: int = 6):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2 or min(samples.shape) < 5:
            raise ValueError("grid needs at least 5 points per axis")
        self.samples = samples
        self.T = float(T)
        self.accuracy = accuracy
        self.t = np.linspace(0.0, self.T, samples.shape[0])
        self.x = np.linspace(0.0, 1.0, samples.shape[1])

    @classmethod
    def from_expression(cls, expr: Expression, coords=("t", "x"), N: int = 201, T: float = 1.0, accuracy: int = 6):
        t = np.linspace(0.0, T, N)
        x = np.linspace(0.0, 1.0, N)
        tt, xx = np.meshgrid(t, x, indexing="ij")
        vals = expr.evaluate({("c", coords[0]): tt, ("c", coords[1]): xx}) + np.zeros_like(tt)
        return cls(vals, T, accuracy)

    def time_index(self, t0) -> int:
        pos = float(t0) / self.T * (len(self.t) - 1)
        i = round(pos)
        if abs(pos - i) > 1e-9 or not 0 <= i < len(self.t):
            raise ValueError(f"slice time {t0} is not a grid node")
        return i

    def slice_jet(self, mu: int, ax: int, t0, xs=None) -> np.ndarray:
        i = self.time_index(t0)
        ht = self.t[1] - self.t[0]
        hx = self.x[1] - self.x[0]
        if mu:
            size = mu + self.accuracy
            size += size % 2 == 0
            idx, off = _stencil(i, len(self.t), size)
            row = fd_weights(off, mu) @ self.samples[idx] / ht**mu
        else:
            row = self.samples[i]
        return _derivative_along(row, ax, hx, self.accuracy)


class TrigField:
    """sum_k amp_k sin(wt_k t + pt_k) sin(wx_k x + px_k), differentiable in closed form."""

    def __init__(self, terms):
        self.terms = [tuple(float(v) for v in term) for term in terms]

    @classmethod
    def neumann_modes(cls, coeffs):
        """sum_k cos(k pi x) (a_k cos(k pi t) + b_k sin(k pi t)) from ``{k: (a_k, b_k)}``."""
        half = math.pi / 2
        terms = []
        for k, (a, b) in coeffs.items():
            w = k * math.pi
            terms.append((a, w, half, w, half))
            terms.append((b, w, 0.0, w, half))
        return cls(terms)

    def derivative(self, a: int, b: int, t, x):
        half = math.pi / 2
        total = 0.0
        for amp, wt, pt, wx, px in self.terms:
            total = total + amp * wt**a * wx**b * np.sin(wt * t + pt + a * half) * np.sin(wx * x + px + b * half)
        return total

    def values(self, t, x):
        return self.derivative(0, 0, t, x)

    def slice_jet(self, mu: int, ax: int, t0, xs) -> np.ndarray:
        return self.derivative(mu, ax, float(t0), xs) + np.zeros_like(xs)


class PolynomialField:
    """Numeric view of a polynomial field, for quadrature on exact data."""

    def __init__(self, expr: Expression, coords=("t", "x")):
        self.expr = expr
        self.coords = coords

    def derivative(self, a: int, b: int, t, x):
        d = _derive(self.expr, ("j", 0, (a, b)), self.coords)
        return d.evaluate({("c", self.coords[0]): t, ("c", self.coords[1]): x})

    def values(self, t, x):
        return self.derivative(0, 0, t, x)

    def slice_jet(self, mu, ax, t0, xs):
        return self.derivative(mu, ax, float(t0), xs) + np.zeros_like(xs)


# -- bilinear evaluation -------------------------------------------------------------

def _backend_of(data) -> str:
    kinds = set()
    for f in data:
        if isinstance(f, Expression):
            kinds.add("exact")
        elif isinstance(f, GridField):
            kinds.add("grid")
        elif hasattr(f, "slice_jet"):
            kinds.add("quadrature")
        else:
            raise TypeError(f"unsupported field data {type(f).__name__}")
    if len(kinds) != 1:
        raise ValueError(f"mixed field data kinds {sorted(kinds)}")
    return kinds.pop()


def evaluate_bilinear(omega: SymplecticBilinear, config, delta1, delta2, t0=0, params=None,
                      backend: str = "exact", points: int = 401) -> PairingResult:
    """Omega(delta1, delta2) = int_Sigma bulk - oint_dSigma boundary at the slice t0."""
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    kinds = {_backend_of(config), _backend_of(delta1), _backend_of(delta2)}
    if backend == "exact" and kinds != {"exact"}:
        raise ValueError("exact backend needs polynomial configuration and variations")
    if backend == "grid" and kinds != {"grid"}:
        raise ValueError("grid backend needs grid configuration and variations")
    if backend == "quadrature" and kinds - {"quadrature"}:
        raise ValueError("quadrature backend needs closed-form field data")
    if backend == "exact":
        return _evaluate_exact(omega, config, delta1, delta2, t0, params)
    return _evaluate_numeric(omega, config, delta1, delta2, t0, params, backend, points)


def _evaluate_exact(omega, config, delta1, delta2, t0, params):
    chart = omega.chart
    if omega.bulk:
        bulk = integrate_slice(contract_vertical(omega.bulk, [delta1, delta2]), config, t0, params)
    else:
        bulk = Fraction(0)
    faces = {}
    for face in chart.faces:
        form = omega.boundary.get(face.name)
        if form:
            faces[face.name] = -integrate_slice(contract_vertical(form, [delta1, delta2]), config, t0, params, face=face)
        else:
            faces[face.name] = Fraction(0)
    value = bulk + sum(faces.values())
    return PairingResult(value, "exact", bulk, faces)


def _numeric_env(expr_vars, data, t0, xs, chart, params, cache):
    env = {("c", chart.coords[0]): float(t0), ("c", chart.coords[1]): xs}
    for k, v in (params or {}).items():
        env[("p", k)] = float(v)
    for v in expr_vars:
        if is_vertical(v) and v not in env:
            env[v] = _numeric_jet(data, v, t0, xs, cache)
    return env


def _numeric_jet(data, v, t0, xs, cache):
    if v[0] != "q":
        raise ValueError("numeric evaluation works on slice forms")
    key = (id(data), v)
    if key not in cache:
        cache[key] = data[v[1]].slice_jet(v[2], v[3][0], t0, xs)
    return cache[key]


def _evaluate_numeric(omega, config, delta1, delta2, t0, params, backend, points):
    chart = omega.chart
    if chart.n != 2:
        raise NotImplementedError("numeric backends are implemented for n = 2")
    xs = config[0].x if backend == "grid" else np.linspace(0.0, 1.0, points)
    cache: dict = {}

    def integrand(form):
        total = np.zeros_like(xs)
        for (h, v), c in form.items():
            env = _numeric_env(c.variables(), config, t0, xs, chart, params, cache)
            u, w = v
            d1u, d1w = _numeric_jet(delta1, u, t0, xs, cache), _numeric_jet(delta1, w, t0, xs, cache)
            d2u, d2w = _numeric_jet(delta2, u, t0, xs, cache), _numeric_jet(delta2, w, t0, xs, cache)
            total = total + c.evaluate(env) * (d1u * d2w - d2u * d1w)
        return total

    bulk = float(simpson(integrand(omega.bulk), x=xs)) if omega.bulk else 0.0
    faces = {}
    for face in chart.faces:
        form = omega.boundary.get(face.name)
        if not form:
            faces[face.name] = 0.0
            continue
        vals = integrand(form)
        at = vals[0] if face.value == 0 else vals[-1]
        faces[face.name] = -float(chart.slice_face_orientation(face) * at)
    return PairingResult(bulk + sum(faces.values()), backend, bulk, faces)


# -- actions (Fubini checks) -------------------------------------------------------

def spacetime_action(theory: Theory, config, T, params=None) -> Fraction:
    """S = int_M L - int_dM lbar over [0, T] x Sigma, exactly."""
    chart = theory.chart
    bounds = {("c", chart.coords[0]): (0, Fraction(T))}
    bounds.update({("c", chart.coords[i]): chart.bounds[i - 1] for i in chart.spatial})
    F = _exact_value(theory.density, config, chart, None, params)
    total = _integrate_box(F, bounds)
    for face in chart.faces:
        lbar = theory.boundary_lagrangian(face)
        top = chart.face_top(face)
        f = _exact_value(lbar.coefficient(top), config, chart, None, params)
        f = f.subs({("c", chart.coords[face.coord]): face.value})
        fb = {("c", chart.coords[i]): bounds[("c", chart.coords[i])] for i in top}
        total = total - chart.boundary_orientation(face) * _integrate_box(f, fb)
    return total.constant_value()


def canonical_action(ct: CanonicalTheory, config, T, params=None) -> Fraction:
    """int_0^T ( int_Sigma L - oint_dSigma l ) dt, exactly."""
    chart = ct.chart
    inner = integrate_slice(ct.bulk, config, None, params)
    for face in chart.faces:
        form = ct.boundary.get(face.name)
        if form:
            inner = inner - integrate_slice(form, config, None, params, face=face)
    total = _integrate_box(Expression.lift(inner), {("c", chart.coords[0]): (0, Fraction(T))})
    return total.constant_value()


# -- finite-difference oracle ------------------------------------------------------

@dataclass
class FDResiduals:
    t: np.ndarray
    x: np.ndarray
    interior: list  # per field, (N, N) with NaN off the interior
    faces: dict  # face name -> per field arrays over t (NaN at the time ends)


def _cell_jets(phi, ht, hx):
    a, b, c, d = phi[:-1, :-1], phi[1:, :-1], phi[:-1, 1:], phi[1:, 1:]
    avg = (a + b + c + d) / 4
    pt = ((b - a) + (d - c)) / (2 * ht)
    px = ((c - a) + (d - b)) / (2 * hx)
    return avg, pt, px


def fd_action_gradient(theory: Theory, config, N: int, T: float = 1.0, params=None, eps: float = 1e-5) -> FDResiduals:
    """Gradient of a discretized action, rescaled to Euler-Lagrange and boundary densities.

    The bulk action is a box scheme (cell-averaged values, cell-centered
    differences), the boundary action a midpoint rule along each face.  Only
    first-order bulk jets and boundary jets in (phi, phi_t) are supported.
    ``config`` holds one object per field with a ``values(t, x)`` method.
    """
    chart = theory.chart
    if chart.n != 2:
        raise NotImplementedError("finite-difference oracle is implemented for n = 2")
    if N < 5:
        raise ValueError(f"h too large: need at least 5 points per axis, got {N}")
    t = np.linspace(0.0, T, N)
    x = np.linspace(0.0, 1.0, N)
    ht, hx = t[1] - t[0], x[1] - x[0]
    tt, xx = np.meshgrid(t, x, indexing="ij")
    phis = [np.asarray(f.values(tt, xx), dtype=float) + np.zeros_like(tt) for f in config]
    nf = len(phis)
    pvals = {("p", k): float(v) for k, v in (params or {}).items()}
    tc = ("c", chart.coords[0])
    xc = ("c", chart.coords[1])

    F = theory.density
    for v in F.variables():
        if v[0] == "j" and sum(v[2]) > 1:
            raise ValueError("finite-difference oracle supports first-order Lagrangians only")

    env = dict(pvals)
    env[tc] = (tt[:-1, :-1] + tt[1:, 1:]) / 2
    env[xc] = (xx[:-1, :-1] + xx[1:, 1:]) / 2
    cells = []
    for i, phi in enumerate(phis):
        avg, pt, px = _cell_jets(phi, ht, hx)
        cells.append((avg, pt, px))
        env[("j", i, (0, 0))], env[("j", i, (1, 0))], env[("j", i, (0, 1))] = avg, pt, px

    grads = [np.zeros_like(tt) for _ in range(nf)]
    w = ht * hx
    for i in range(nf):
        for slot, var in enumerate([("j", i, (0, 0)), ("j", i, (1, 0)), ("j", i, (0, 1))]):
            base = env[var]
            env[var] = base + eps
            fp = F.evaluate(env)
            env[var] = base - eps
            fm = F.evaluate(env)
            env[var] = base
            dF = w * (np.asarray(fp) - np.asarray(fm)) / (2 * eps) + np.zeros_like(base)
            g = grads[i]
            if slot == 0:
                for sl in ((slice(None, -1), slice(None, -1)), (slice(1, None), slice(None, -1)),
                           (slice(None, -1), slice(1, None)), (slice(1, None), slice(1, None))):
                    g[sl] += dF / 4
            elif slot == 1:
                g[:-1, :-1] -= dF / (2 * ht)
                g[:-1, 1:] -= dF / (2 * ht)
                g[1:, :-1] += dF / (2 * ht)
                g[1:, 1:] += dF / (2 * ht)
            else:
                g[:-1, :-1] -= dF / (2 * hx)
                g[1:, :-1] -= dF / (2 * hx)
                g[:-1, 1:] += dF / (2 * hx)
                g[1:, 1:] += dF / (2 * hx)

    for face in chart.faces:
        col = 0 if face.value == 0 else N - 1
        lbar = theory.boundary_lagrangian(face)
        f = lbar.coefficient(chart.face_top(face))
        if not f:
            continue
        for v in f.variables():
            if v[0] == "j" and (v[2][1] > 0 or v[2][0] > 1):
                raise ValueError("boundary Lagrangian may depend on phi and phi_t only")
        benv = dict(pvals)
        benv[tc] = (t[:-1] + t[1:]) / 2
        benv[xc] = float(face.value)
        for i, phi in enumerate(phis):
            line = phi[:, col]
            benv[("j", i, (0, 0))] = (line[:-1] + line[1:]) / 2
            benv[("j", i, (1, 0))] = (line[1:] - line[:-1]) / ht
        factor = -chart.boundary_orientation(face) * ht
        for i in range(nf):
            for slot, var in enumerate([("j", i, (0, 0)), ("j", i, (1, 0))]):
                base = benv[var]
                benv[var] = base + eps
                fp = f.evaluate(benv)
                benv[var] = base - eps
                fm = f.evaluate(benv)
                benv[var] = base
                df = factor * (np.asarray(fp) - np.asarray(fm)) / (2 * eps) + np.zeros_like(base)
                if slot == 0:
                    grads[i][:-1, col] += df / 2
                    grads[i][1:, col] += df / 2
                else:
                    grads[i][:-1, col] -= df / ht
                    grads[i][1:, col] += df / ht

    interior = []
    faces = {face.name: [] for face in chart.faces}
    for i in range(nf):
        E = np.full_like(tt, np.nan)
        E[1:-1, 1:-1] = grads[i][1:-1, 1:-1] / (ht * hx)
        interior.append(E)
        for face in chart.faces:
            if face.value == 0:
                col, ext = 0, 2 * E[:, 1] - E[:, 2]
            else:
                col, ext = N - 1, 2 * E[:, N - 2] - E[:, N - 3]
            b = np.full_like(t, np.nan)
            orient = chart.boundary_orientation(face)
            b[1:-1] = -(grads[i][1:-1, col] / ht - hx / 2 * ext[1:-1]) / orient
            faces[face.name].append(b)
    return FDResiduals(t, x, interior, faces)
