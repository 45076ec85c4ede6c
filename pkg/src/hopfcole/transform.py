"""The change of variables m = phi^r between the MFG system and the r-Laplace problem.

Forward: (u, m, lambda) -> (phi, lambda) with phi = m^(1/r), allowed when the
flux nu Dm + h0 m |Du|^(r'-2) Du vanishes. Inverse: (phi, lambda) ->
(u, m, lambda), rebuilding u from

    b = -nu r Dphi / (h0 phi) = -nu Dm / (h0 m),
    u' = |b|^((2-r')/(r'-1)) b = sign(b) |b|^(r-1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (GridFunction, HamiltonianParams, differentiate, integrate,
                   midpoint_mean, require_same_grid)
from .errors import AlignmentError, DomainError, PositivityError, PreconditionError

DEFAULT_ALIGNMENT_TOL = 1e-4
NORMALIZATION_TOL = 1e-8


@dataclass(frozen=True)
class MFGSolution:
    u: GridFunction
    m: GridFunction
    lam: float

    def __post_init__(self):
        require_same_grid(self.u, self.m)

    @property
    def domain(self):
        return self.u.domain

    @property
    def n(self):
        return self.u.n

    def validate(self, tol: float = NORMALIZATION_TOL) -> "MFGSolution":
        if not np.all(self.m.values > 0):
            raise PositivityError(f"density not positive: min m = {self.m.values.min():.3e}")
        mass = integrate(self.m)
        if abs(mass - 1.0) > tol:
            raise PreconditionError(f"density mass {mass!r} differs from 1 by more than {tol}")
        return self


@dataclass(frozen=True)
class PhiSolution:
    phi: GridFunction
    lam: float

    @property
    def domain(self):
        return self.phi.domain

    @property
    def n(self):
        return self.phi.n

    def validate(self, r: float, tol: float = NORMALIZATION_TOL) -> "PhiSolution":
        if not np.all(self.phi.values > 0):
            raise PositivityError(f"phi not positive: min phi = {self.phi.values.min():.3e}")
        mass = integrate(self.phi.with_values(self.phi.values ** r))
        if abs(mass - 1.0) > tol:
            raise PreconditionError(f"integral of phi^r is {mass!r}, not 1")
        return self


@dataclass(frozen=True)
class AlignmentReport:
    flux: np.ndarray          # at the n-1 cell midpoints
    midpoints: np.ndarray
    sup_norm: float
    rel_sup_norm: float

    def as_dict(self) -> dict:
        return {"kind": "alignment-flux", "sup_norm": self.sup_norm,
                "rel_sup_norm": self.rel_sup_norm, "count": int(self.flux.size)}


def check_gradient_alignment(sol: MFGSolution, params: HamiltonianParams) -> AlignmentReport:
    """Evaluate F = nu Dm + h0 m |Du|^(r'-2) Du at cell midpoints.

    Derivatives are midpoint differences and m is the arithmetic mean of
    its two neighbouring nodes.
    """
    require_same_grid(sol.u, sol.m)
    du = differentiate(sol.u)
    dm = differentiate(sol.m)
    m_mid = midpoint_mean(sol.m)
    diffusive = params.nu * dm
    transport = m_mid * params.drift(du)
    flux = diffusive + transport
    sup = float(np.max(np.abs(flux)))
    scale = max(float(np.max(np.abs(diffusive))), float(np.max(np.abs(transport))), 1e-300)
    return AlignmentReport(flux=flux, midpoints=sol.u.midpoints, sup_norm=sup,
                           rel_sup_norm=sup / scale)


def forward_transform(sol: MFGSolution, params: HamiltonianParams,
                      tol: float = DEFAULT_ALIGNMENT_TOL) -> PhiSolution:
    if not np.all(sol.m.values > 0):
        raise PositivityError(f"density not positive: min m = {sol.m.values.min():.3e}")
    report = check_gradient_alignment(sol, params)
    if report.rel_sup_norm > tol:
        raise AlignmentError(
            f"alignment flux too large: relative sup norm {report.rel_sup_norm:.3e} > {tol:.1e}",
            report)
    phi = sol.m.values ** (1.0 / params.r)
    return PhiSolution(sol.m.with_values(phi), sol.lam)


def drift_potential_slope(b, r_conj: float):
    """|b|^((2-r')/(r'-1)) b in the division-free form sign(b)|b|^(1/(r'-1))."""
    return np.sign(b) * np.abs(b) ** (1.0 / (r_conj - 1.0))


def inverse_transform(phi_sol: PhiSolution, params: HamiltonianParams) -> MFGSolution:
    """Rebuild (u, m, lambda) from (phi, lambda).

    b = -nu r Dphi / (h0 phi) is evaluated at midpoints in the equivalent
    form -nu D(phi^r) / (h0 mean(phi^r)), the same stencil the alignment
    check uses, so the rebuilt pair is aligned up to rounding. u is the
    exact cumulative integral of the piecewise constant slope, gauged by
    u = 0 at the left endpoint (rho = 0 on a ball).
    """
    phi = phi_sol.phi
    if not np.all(phi.values > 0):
        raise PositivityError(f"phi not positive: min phi = {phi.values.min():.3e}")
    m = phi.with_values(phi.values ** params.r)
    b = -params.nu * differentiate(m) / (params.h0 * midpoint_mean(m))
    slope = drift_potential_slope(b, params.r_conj)
    u = np.concatenate(([0.0], np.cumsum(slope * phi.h)))
    return MFGSolution(phi.with_values(u), m, phi_sol.lam)


def quadratic_hopfcole_reference(u: GridFunction, params: HamiltonianParams) -> GridFunction:
    """Normalized Gibbs density exp(-h0 u / nu) / integral(exp(-h0 u / nu)); needs r = 2."""
    if params.r != 2.0:
        raise DomainError(f"the exponential reference needs r = 2, got r={params.r!r}")
    expo = -params.h0 * u.values / params.nu
    w = np.exp(expo - expo.max())
    return u.with_values(w / integrate(u.with_values(w)))


def regauge(u: GridFunction, how: str = "left") -> GridFunction:
    """Shift u so that u(left end) = 0 ("left") or its integral mean vanishes ("mean")."""
    if how == "left":
        return u.with_values(u.values - u.values[0])
    if how == "mean":
        vol = integrate(u.with_values(np.ones(u.n)))
        return u.with_values(u.values - integrate(u) / vol)
    raise ValueError(f"unknown gauge {how!r}")
