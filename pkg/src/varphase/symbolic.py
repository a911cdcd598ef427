"""Exact polynomial expressions over coordinates, parameters and jet variables.

Variables are plain tuples so that they hash, sort and pickle cheaply:

    ('c', name)                     space-time coordinate
    ('p', name)                     constant parameter
    ('j', field, alpha)             jet coordinate, alpha counts per coordinate
    ('q', field, order, alpha)      slice fiber coordinate q^I_(order) with a
                                    purely spatial multi-index alpha

An :class:`Expression` is always stored in normal form: monomials sorted, like
terms merged, zero coefficients dropped.  Two expressions are equal as
polynomials iff their normal forms are identical.
"""
from __future__ import annotations

import os
from fractions import Fraction
from numbers import Rational

DEFAULT_MAX_JET_ORDER = 6


class JetOrderError(ValueError):
    """A derivative pushed a jet variable past the configured maximal order."""


def default_max_order() -> int:
    value = os.environ.get("VARPHASE_MAX_JET_ORDER")
    if value is None:
        return DEFAULT_MAX_JET_ORDER
    try:
        order = int(value)
    except ValueError:
        raise ValueError(f"VARPHASE_MAX_JET_ORDER must be an integer, got {value!r}")
    if order < 1:
        raise ValueError("VARPHASE_MAX_JET_ORDER must be positive")
    return order


# -- variables -----------------------------------------------------------------

def coord(name: str) -> tuple:
    return ("c", name)


def param(name: str) -> tuple:
    return ("p", name)


def jet(field: int, alpha) -> tuple:
    return ("j", field, tuple(alpha))


def fiber(field: int, order: int, alpha) -> tuple:
    return ("q", field, order, tuple(alpha))


def is_vertical(var: tuple) -> bool:
    """Jet and fiber variables carry a vertical differential; coordinates and parameters do not."""
    return var[0] in ("j", "q")


def var_order(var: tuple) -> int:
    if var[0] == "j":
        return sum(var[2])
    if var[0] == "q":
        return var[2] + sum(var[3])
    return 0


def time_count(var: tuple) -> int:
    if var[0] == "j":
        return var[2][0]
    if var[0] == "q":
        return var[2]
    return 0


def add_multi_index(alpha, beta) -> tuple:
    return tuple(a + b for a, b in zip(alpha, beta))


def unit_index(n: int, i: int) -> tuple:
    return tuple(1 if k == i else 0 for k in range(n))


def direction_count(var: tuple, mu: int) -> int:
    """Number of derivatives of ``var`` along coordinate index ``mu`` (0 is time)."""
    if var[0] == "j":
        return var[2][mu]
    if var[0] == "q":
        return var[2] if mu == 0 else var[3][mu - 1]
    return 0


def shift_var(var: tuple, mu: int, by: int = 1, max_order: int | None = None) -> tuple:
    """Raise (or lower, with negative ``by``) the derivative count of ``var`` along ``mu``.

    For fiber variables a time shift moves ``q_(k)`` to ``q_(k+by)``.
    """
    if var[0] == "j":
        alpha = list(var[2])
        alpha[mu] += by
        if alpha[mu] < 0:
            raise ValueError(f"cannot lower {var} along {mu}")
        new = ("j", var[1], tuple(alpha))
    elif var[0] == "q":
        if mu == 0:
            if var[2] + by < 0:
                raise ValueError(f"cannot lower {var} in time")
            new = ("q", var[1], var[2] + by, var[3])
        else:
            alpha = list(var[3])
            alpha[mu - 1] += by
            if alpha[mu - 1] < 0:
                raise ValueError(f"cannot lower {var} along {mu}")
            new = ("q", var[1], var[2], tuple(alpha))
    else:
        raise TypeError(f"{var} has no derivatives")
    limit = default_max_order() if max_order is None else max_order
    if by > 0 and var_order(new) > limit:
        raise JetOrderError(f"jet order {var_order(new)} exceeds maximum {limit}")
    return new


# -- expressions -----------------------------------------------------------------

def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    powers = dict(a)
    for v, e in b:
        powers[v] = powers.get(v, 0) + e
    return tuple(sorted(powers.items()))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    raise TypeError(f"exact coefficients only, got {type(c).__name__}")


class Expression:
    """Polynomial with exact rational coefficients.  Immutable."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        acc: dict[tuple, Fraction] = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for mono, c in items:
                c = _as_fraction(c)
                if c:
                    acc[mono] = acc.get(mono, 0) + c
        self._terms = tuple(sorted((m, c) for m, c in acc.items() if c))
        self._hash = None

    @classmethod
    def _raw(cls, acc: dict) -> Expression:
        # trusted path: monomials already canonical
        obj = cls.__new__(cls)
        obj._terms = tuple(sorted((m, c) for m, c in acc.items() if c))
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c) -> Expression:
        c = _as_fraction(c)
        return cls._raw({(): c}) if c else ZERO

    @classmethod
    def var(cls, v: tuple) -> Expression:
        return cls._raw({((v, 1),): Fraction(1)})

    @staticmethod
    def lift(x) -> Expression:
        if isinstance(x, Expression):
            return x
        return Expression.const(x)

    # -- inspection
    def items(self):
        return self._terms

    def __iter__(self):
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and self._terms[0][0] == ())

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("expression is not constant")
        return self._terms[0][1] if self._terms else Fraction(0)

    def variables(self) -> set:
        return {v for mono, _ in self._terms for v, _ in mono}

    def degree(self) -> int:
        return max((sum(e for _, e in mono) for mono, _ in self._terms), default=0)

    # -- arithmetic
    def __add__(self, other):
        other = Expression.lift(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        acc = dict(self._terms)
        for m, c in other._terms:
            acc[m] = acc.get(m, 0) + c
        return Expression._raw(acc)

    __radd__ = __add__

    def __neg__(self):
        return Expression._raw({m: -c for m, c in self._terms})

    def __sub__(self, other):
        return self + (-Expression.lift(other))

    def __rsub__(self, other):
        return Expression.lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Expression):
            c = _as_fraction(other)
            if not c:
                return ZERO
            return Expression._raw({m: v * c for m, v in self._terms})
        if not self._terms or not other._terms:
            return ZERO
        acc: dict = {}
        for m1, c1 in self._terms:
            for m2, c2 in other._terms:
                m = _mono_mul(m1, m2)
                acc[m] = acc.get(m, 0) + c1 * c2
        return Expression._raw(acc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = _as_fraction(other.constant_value() if isinstance(other, Expression) else other)
        if not c:
            raise ZeroDivisionError("division by zero")
        return self * (1 / c)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        result = ONE
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Expression):
            return self._terms == other._terms
        try:
            return self._terms == Expression.const(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._terms)
        return self._hash

    def __repr__(self):
        return f"Expression({format_expression(self)})"

    def __reduce__(self):
        return (Expression, (dict(self._terms),))

    # -- calculus and substitution
    def diff(self, v: tuple) -> Expression:
        """Formal partial derivative, every variable treated as independent."""
        acc: dict = {}
        for mono, c in self._terms:
            for k, (w, e) in enumerate(mono):
                if w == v:
                    rest = mono[:k] + (((w, e - 1),) if e > 1 else ()) + mono[k + 1:]
                    acc[rest] = acc.get(rest, 0) + c * e
                    break
        return Expression._raw(acc)

    def coefficient(self, v: tuple, power: int = 1) -> Expression:
        """Coefficient of ``v**power`` (other powers of ``v`` excluded)."""
        acc: dict = {}
        for mono, c in self._terms:
            found = dict(mono).get(v, 0)
            if found == power:
                rest = tuple((w, e) for w, e in mono if w != v)
                acc[rest] = acc.get(rest, 0) + c
        return Expression._raw(acc)

    def subs(self, mapping: dict) -> Expression:
        """Simultaneous substitution of variables by expressions (or numbers)."""
        if not mapping:
            return self
        lifted = {v: Expression.lift(e) for v, e in mapping.items()}
        powers: dict = {}
        result: dict = {}
        for mono, c in self._terms:
            rest = []
            factor = None
            for v, e in mono:
                if v in lifted:
                    key = (v, e)
                    p = powers.get(key)
                    if p is None:
                        p = powers[key] = lifted[v] ** e
                    factor = p if factor is None else factor * p
                else:
                    rest.append((v, e))
            rest = tuple(rest)
            if factor is None:
                result[rest] = result.get(rest, 0) + c
            else:
                for m, fc in factor._terms:
                    mm = _mono_mul(rest, m)
                    result[mm] = result.get(mm, 0) + c * fc
        return Expression._raw(result)

    def rename(self, fn) -> Expression:
        """Apply a variable-to-variable relabeling ``fn``."""
        acc: dict = {}
        for mono, c in self._terms:
            powers: dict = {}
            for v, e in mono:
                w = fn(v)
                powers[w] = powers.get(w, 0) + e
            m = tuple(sorted(powers.items()))
            acc[m] = acc.get(m, 0) + c
        return Expression._raw(acc)

    def evaluate(self, env: dict):
        """Numeric evaluation; ``env`` maps every variable to a float or numpy array."""
        total = 0.0
        for mono, c in self._terms:
            term = float(c)
            for v, e in mono:
                term = term * env[v] ** e
            total = total + term
        return total


ZERO = Expression._raw({})
ONE = Expression._raw({(): Fraction(1)})


def normalize(e: Expression) -> Expression:
    # construction already normalizes; rebuilding from raw terms is a cheap idempotent check
    return Expression(dict(e.items()))


def total_derivative(e: Expression, coord_name: str, coords: tuple, max_order: int | None = None) -> Expression:
    """Total derivative D_mu: explicit coordinate dependence plus the chain rule through jets.

    On slice fiber variables the time direction acts as the fiber shift
    q_(k) -> q_(k+1).
    """
    mu = coords.index(coord_name)
    return total_derivative_index(e, mu, coords, max_order)


def total_derivative_index(e: Expression, mu: int, coords: tuple, max_order: int | None = None) -> Expression:
    x = ("c", coords[mu])
    acc: dict = {}
    for mono, c in e.items():
        for k, (v, p) in enumerate(mono):
            if v == x:
                target = None
            elif is_vertical(v):
                target = shift_var(v, mu, 1, max_order)
            else:
                continue
            rest = mono[:k] + (((v, p - 1),) if p > 1 else ()) + mono[k + 1:]
            if target is not None:
                rest = _mono_mul(rest, ((target, 1),))
            acc[rest] = acc.get(rest, 0) + c * p
    return Expression._raw(acc)


def partial_jet(e: Expression, j: tuple) -> Expression:
    return e.diff(j)


# -- formatting ----------------------------------------------------------------

def default_namer(v: tuple) -> str:
    kind = v[0]
    if kind in ("c", "p"):
        return v[1]
    if kind == "j":
        return f"u{v[1]}" + ("_" + "".join(str(a) for a in v[2]) if any(v[2]) else "")
    return f"q{v[1]}({v[2]})" + ("_" + "".join(str(a) for a in v[3]) if any(v[3]) else "")


def _format_fraction(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_expression(e: Expression, namer=default_namer) -> str:
    """Deterministic rendering in normal-form order, e.g. ``1/2*x^2 - 3*u0_10``."""
    if not e:
        return "0"
    parts = []
    for mono, c in e.items():
        sign = "-" if c < 0 else "+"
        a = abs(c)
        factors = [namer(v) + (f"^{p}" if p > 1 else "") for v, p in mono]
        if not factors:
            body = _format_fraction(a)
        elif a == 1:
            body = "*".join(factors)
        else:
            body = _format_fraction(a) + "*" + "*".join(factors)
        parts.append((sign, body))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out
