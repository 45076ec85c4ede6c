"""Residual reports and cross-checks between the coupled and decoupled paths."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .core import (Coupling, GridFunction, HamiltonianParams, differentiate,
                   weak_divergence)
from .errors import DomainError, NonconvergenceError
from .oracle import hjb_residual, kolmogorov_weak_residual, solve_coupled
from .rlaplace import solve_rlaplace
from .solverconfig import SolverConfig
from .transform import (MFGSolution, PhiSolution, check_gradient_alignment,
                        forward_transform, inverse_transform)

HJB = "hjb-pointwise"
KOLMOGOROV = "kolmogorov-weak"
RLAPLACE = "rlaplace-weak"
ALIGNMENT = "alignment-flux"
KINDS = (HJB, KOLMOGOROV, RLAPLACE, ALIGNMENT)


@dataclass
class ResidualReport:
    kind: str
    values: np.ndarray
    sup_norm: float
    l2_norm: float
    n: int
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, kind, values, n, **meta):
        values = np.asarray(values, dtype=float)
        return cls(kind, values, float(np.max(np.abs(values))),
                   float(np.sqrt(np.sum(values**2))), n, meta)

    @property
    def measure(self) -> float:
        """The number compared with the tolerance class (relative for the flux)."""
        return self.meta.get("rel_sup_norm", self.sup_norm)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "sup_norm": self.sup_norm, "l2_norm": self.l2_norm,
                "n": self.n, **self.meta}


def hjb_report(sol: MFGSolution, params, f) -> ResidualReport:
    res = hjb_residual(sol.u, sol.m, sol.lam, params, f)
    return ResidualReport.from_values(HJB, res.values, sol.n)


def kolmogorov_report(sol: MFGSolution, params) -> ResidualReport:
    return ResidualReport.from_values(KOLMOGOROV, kolmogorov_weak_residual(sol.u, sol.m, params),
                                      sol.n)


def alignment_report(sol: MFGSolution, params) -> ResidualReport:
    rep = check_gradient_alignment(sol, params)
    return ResidualReport.from_values(ALIGNMENT, rep.flux, sol.n, rel_sup_norm=rep.rel_sup_norm)


def rlaplace_weak_residual(phi_sol: PhiSolution, params: HamiltonianParams,
                           f: Coupling) -> ResidualReport:
    """Weak residual of the r-Laplace problem against every hat function.

    The flux |Dphi|^(r-2) Dphi is exact (no regularization); the reaction
    term uses the same lumped quadrature as the solver.
    """
    phi = phi_sol.phi
    dom, n, r = phi.domain, phi.n, params.r
    v = phi.values
    dphi = differentiate(phi)
    flux = np.sign(dphi) * np.abs(dphi) ** (r - 1.0)
    reaction = dom.node_weights(n) * (f(phi.nodes, v**r) - phi_sol.lam) * v ** (r - 1.0)
    return ResidualReport.from_values(RLAPLACE, params.mu * weak_divergence(dom, n, flux) + reaction, n)


def accuracy_order(params: HamiltonianParams) -> int:
    """Expected order of the dual-path discrepancies: 2 for the quadratic case, else 1."""
    return 2 if params.r == 2.0 else 1


def tolerance(kind: str, params: HamiltonianParams, h: float) -> float:
    if kind not in KINDS:
        raise DomainError(f"unknown residual kind {kind!r}")
    return 10.0 * h ** accuracy_order(params)


def residual_reports(sol: MFGSolution, phi_sol: PhiSolution, params, f) -> dict:
    return {
        HJB: hjb_report(sol, params, f),
        KOLMOGOROV: kolmogorov_report(sol, params),
        ALIGNMENT: alignment_report(sol, params),
        RLAPLACE: rlaplace_weak_residual(phi_sol, params, f),
    }


def proof_identity_suite(params_or_r, samples: int = 64, seed: int = 0) -> dict:
    """Deviations of the exponent identities behind the change of variables.

    Checks 1/r' = (r-1)/r, 1/r + 1/r' = 1, (r'-1)(r-2) + r' - 2 = 0 and the
    composite power chain |DH(p)|^(r-2) DH(p) = p (for h0 = 1) on sampled p.
    """
    r = params_or_r.r if isinstance(params_or_r, HamiltonianParams) else float(params_or_r)
    rc = r / (r - 1.0)
    p = np.random.default_rng(seed).uniform(-3.0, 3.0, samples)
    drift = np.sign(p) * np.abs(p) ** (rc - 1.0)
    chain = np.sign(drift) * np.abs(drift) ** (r - 1.0)
    out = {
        "inverse_conjugate": abs(1.0 / rc - (r - 1.0) / r),
        "holder_pair": abs(1.0 / r + 1.0 / rc - 1.0),
        "gradient_exponent": abs((rc - 1.0) * (r - 2.0) + rc - 2.0),
        "composite_chain": float(np.max(np.abs(chain - p) / np.maximum(1.0, np.abs(p)))),
    }
    out["max_deviation"] = max(out.values())
    return out


def linear_eigen_iteration(domain, params: HamiltonianParams, f: Coupling, n: int,
                           tol: float = 1e-13, max_outer: int = 500, mixing: float = 1.0):
    """Independent route for r = 2: shifted inverse power iteration for the
    lowest eigenpair of -mu phi'' + V phi = lambda phi, refreshing
    V = f(x, phi^2) until self-consistent. Returns (phi, lambda) as arrays/float.
    """
    if params.r != 2.0:
        raise DomainError("the linear eigenvalue route exists only for r = 2")
    h = domain.spacing(n)
    x = domain.nodes(n)
    q = domain.node_weights(n)
    k = params.mu * domain.cell_weights(n) / h**2
    # symmetric scaling by q^(-1/2) turns the lumped generalized problem into a standard one
    s = 1.0 / np.sqrt(q)
    off = -k * s[:-1] * s[1:]
    stiff_diag = np.zeros(n)
    stiff_diag[:-1] += k
    stiff_diag[1:] += k
    stiff_diag *= s * s

    psi = np.sqrt(q) * np.full(n, 1.0 / np.sqrt(q.sum()))
    V = f(x, (psi * s) ** 2)
    lam = 0.0
    for outer in range(max_outer):
        shift = float(V.min()) - 1.0
        ab = np.zeros((3, n))
        ab[0, 1:] = off
        ab[1] = stiff_diag + V - shift
        ab[2, :-1] = off
        w = psi.copy()
        for _ in range(200):
            w_new = solve_banded((1, 1), ab, w)
            w_new /= np.linalg.norm(w_new)
            if np.max(np.abs(w_new - w)) < 1e-15:
                w = w_new
                break
            w = w_new
        Aw = stiff_diag * w + V * w
        Aw[1:] += off * w[:-1]
        Aw[:-1] += off * w[1:]
        lam = float(w @ Aw)
        change = float(np.max(np.abs(w - psi)))
        psi = w
        if change < tol:
            return psi * s, lam
        V = (1.0 - mixing) * V + mixing * f(x, (psi * s) ** 2)
    raise NonconvergenceError(f"self-consistent eigen iteration stalled (last change {change:.2e})")


@dataclass
class CrossValidation:
    n: int
    h: float
    lambda_oracle: float
    lambda_rlaplace: float
    m_error: float
    lambda_error: float
    du_error: float
    oracle: MFGSolution
    rlaplace: PhiSolution
    reports: dict

    def errors(self) -> dict:
        return {"m_sup": self.m_error, "lambda": self.lambda_error, "du_sup": self.du_error}

    def as_dict(self) -> dict:
        return {"n": self.n, "h": self.h, "lambda_oracle": self.lambda_oracle,
                "lambda_rlaplace": self.lambda_rlaplace, **self.errors(),
                "reports": {k: v.as_dict() for k, v in self.reports.items()}}


def cross_validate(domain, params: HamiltonianParams, f: Coupling,
                   cfg: SolverConfig = SolverConfig(), align_tol: float = np.inf) -> CrossValidation:
    """Solve both ways on one grid and compare.

    Reports are keyed "oracle/<kind>" (oracle solution and its forward
    transform) and "rlaplace/<kind>" (r-Laplace solution and its inverse
    transform).
    """
    sol, _ = solve_coupled(domain, params, f, cfg)
    phi_sol, _ = solve_rlaplace(domain, params, f, cfg)
    fwd = forward_transform(sol, params, tol=align_tol)
    back = inverse_transform(phi_sol, params)
    reports = {}
    for prefix, (s, p) in (("oracle", (sol, fwd)), ("rlaplace", (back, phi_sol))):
        for kind, rep in residual_reports(s, p, params, f).items():
            reports[f"{prefix}/{kind}"] = rep
    m_err = float(np.max(np.abs(sol.m.values - phi_sol.phi.values ** params.r)))
    du_err = float(np.max(np.abs(differentiate(sol.u) - differentiate(back.u))))
    return CrossValidation(
        n=cfg.n, h=domain.spacing(cfg.n), lambda_oracle=sol.lam, lambda_rlaplace=phi_sol.lam,
        m_error=m_err, lambda_error=abs(sol.lam - phi_sol.lam), du_error=du_err,
        oracle=sol, rlaplace=phi_sol, reports=reports)


def fitted_order(hs, errors, exact_floor: float = 1e-13):
    """Least-squares slope of log(error) against log(h); "exact" if all errors vanish."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.all(errors <= exact_floor):
        return "exact"
    if np.any(errors <= 0):
        return float("nan")
    slope, _ = np.polyfit(np.log(hs), np.log(errors), 1)
    return float(slope)
