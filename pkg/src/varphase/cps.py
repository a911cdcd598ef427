"""Covariant phase space symplectic form at a slice and the structure of Theta."""
from __future__ import annotations

from dataclasses import dataclass

from .biform import BiForm, d_h, lift_slice, pullback_slice, vary, wedge
from .canonical import SymplecticBilinear, canonical_bulk_split, decompose_theory, time_derivative
from .symbolic import jet
from .variational import BoundarySplit, BulkSplit, Theory


class StructureMismatch(AssertionError):
    """The Theta remainder is not d_h-closed; this signals an engine bug."""


@dataclass(frozen=True)
class PotentialStructure:
    hatted: BiForm  # sum_k sum_mu (-L_dt)^(k-1-mu) A^(k) ^ d(L_dt)^mu q, lifted to M
    dt_part: BiForm  # -dt ^ lifted Theta tilde
    remainder: BiForm  # d_h-closed

    @property
    def total(self) -> BiForm:
        return self.hatted + self.dt_part + self.remainder


def cps_symplectic(bulk: BulkSplit, bnd: BoundarySplit, t0=None) -> SymplecticBilinear:
    chart = bulk.potential.chart
    integrand = vary(pullback_slice(bulk.potential, t0))
    faces = {}
    for face in chart.faces:
        theta_bar = bnd.potential.get(face.name, BiForm.zero(chart))
        faces[face.name] = vary(pullback_slice(theta_bar, t0))
    return SymplecticBilinear(chart, integrand, faces)


def verify_potential_structure(theory: Theory, bulk: BulkSplit) -> PotentialStructure:
    """Split Theta into canonical blocks, a dt-part and a remainder; certify d_h(remainder) = 0.

    The closed remainder is exact on the jet space by the local exactness of
    d_h in positive vertical degree; no preimage is constructed.
    """
    chart = theory.chart
    ct = decompose_theory(theory)
    A, theta_tilde = canonical_bulk_split(ct)
    K = ct.K
    hatted = BiForm.zero(chart)
    for i, Ai in enumerate(A):
        for k in range(1, K + 1):
            block = lift_slice(Ai[k])
            for mu in range(k):
                coeff = time_derivative(block, k - 1 - mu, -1)
                alpha = (mu,) + (0,) * (chart.n - 1)
                hatted = hatted + wedge(coeff, BiForm.dvar(chart, jet(i, alpha)))
    dt_part = -wedge(BiForm.dx(chart, 0), lift_slice(theta_tilde))
    remainder = bulk.potential - hatted - dt_part
    if d_h(remainder):
        raise StructureMismatch("symplectic potential remainder is not d_h-closed")
    return PotentialStructure(hatted, dt_part, remainder)
