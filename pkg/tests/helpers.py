"""Seeded generators shared by the test modules."""
from fractions import Fraction

from varphase.biform import BiForm, ChartContext, wedge
from varphase.symbolic import Expression, coord, jet, param

CHART = ChartContext.box()
T = Expression.var(coord("t"))
X = Expression.var(coord("x"))


def J(*alpha, field=0):
    return Expression.var(jet(field, tuple(alpha)))


def C(value):
    return Expression.const(Fraction(value))


def P(name):
    return Expression.var(param(name))


def jets_up_to(order, n=2, fields=1):
    out = []
    for i in range(fields):
        for a in range(order + 1):
            for b in range(order + 1 - a):
                out.append(jet(i, (a, b)))
    return out


def random_expression(rng, order=3, degree=3, terms=3, fields=1, coords=True):
    atoms = [Expression.var(v) for v in jets_up_to(order, fields=fields)]
    if coords:
        atoms += [T, X]
    acc = Expression.const(0)
    for _ in range(terms):
        mono = Expression.const(Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10))))
        for _ in range(int(rng.integers(0, degree + 1))):
            mono = mono * atoms[int(rng.integers(0, len(atoms)))]
        acc = acc + mono
    return acc


def random_form(rng, r, s, order=2, chart=CHART, terms=2):
    """Random (r, s)-form with polynomial coefficients in jets of order <= ``order``."""
    n = chart.n
    jets = jets_up_to(order)
    out = BiForm.zero(chart)
    for _ in range(terms):
        h = tuple(sorted(rng.choice(n, size=r, replace=False).tolist())) if r else ()
        term = BiForm.scalar(chart, random_expression(rng, order), h)
        for _ in range(s):
            term = wedge(term, BiForm.dvar(chart, jets[int(rng.integers(0, len(jets)))]))
        out = out + term
    return out


def random_polynomial(rng, degree=3):
    acc = Expression.const(0)
    for i in range(degree + 1):
        for j in range(degree + 1):
            acc = acc + C(Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10)))) * T**i * X**j
    return acc


def random_expression_text(rng, fields, params, depth=0):
    """Random well-formed DSL expression text."""
    choice = int(rng.integers(0, 9 if depth < 3 else 3))
    leaf = fields + params + ["t", "x"]
    if choice == 0:
        return str(int(rng.integers(0, 20)))
    if choice in (1, 2):
        return leaf[int(rng.integers(0, len(leaf)))]
    sub = lambda: random_expression_text(rng, fields, params, depth + 1)
    if choice == 3:
        return f"{sub()} + {sub()}"
    if choice == 4:
        return f"{sub()} - {sub()}"
    if choice == 5:
        return f"{sub()}*{sub()}"
    if choice == 6:
        return f"({sub()})^{int(rng.integers(0, 3))}"
    if choice == 7:
        return f"{sub()}/{int(rng.integers(1, 9))}"
    return f"d{'tx'[int(rng.integers(0, 2))]}({sub()})"


def random_document(rng, index=0):
    nf = int(rng.integers(1, 3))
    fields = ["phi", "psi"][:nf]
    params = [p for p in ("m", "b", "c") if rng.random() < 0.5]
    decl = " ".join(f"{p}={int(rng.integers(-5, 6))}/{int(rng.integers(1, 5))}" if rng.random() < 0.5 else p for p in params)
    lines = [f"theory fuzz{index} {{", "  dim 2", "  coords t x", f"  fields {' '.join(fields)}"]
    if params:
        lines.append(f"  params {decl}")
    lines.append(f"  L: {random_expression_text(rng, fields, params)}")
    for face in ("x0", "x1"):
        if rng.random() < 0.5:
            lines.append(f"  l[{face}]: {random_expression_text(rng, fields, params, 2)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def mangle(rng, text: str) -> bytes:
    """Random corruption of a document: deletions, insertions and raw bytes."""
    data = bytearray(text.encode())
    for _ in range(int(rng.integers(1, 6))):
        op = int(rng.integers(0, 3))
        pos = int(rng.integers(0, len(data) + 1))
        if op == 0 and data:
            del data[min(pos, len(data) - 1)]
        elif op == 1:
            data.insert(pos, int(rng.integers(0, 256)))
        else:
            data[pos:pos] = rng.choice([b"(", b")", b"^", b"{", b"l[", b"dt(", b"99999", b"/0", b":"])
    return bytes(data)
