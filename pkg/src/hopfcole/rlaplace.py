"""Constrained energy descent for the decoupled r-Laplace problem.

The discrete energy

    E_eps(phi) = mu/r sum_c W_c (|Dphi_c|^2 + eps^2)^(r/2) + 1/r sum_i q_i F(x_i, phi_i^r)

is minimized on the sphere sum(q phi^r) = 1. Its gradient is the assembled
weak form of -mu Delta_r phi + f(x, phi^r) phi^(r-1) against hat functions;
the multiplier of the constraint is lambda. Each iteration takes a bordered
Newton direction in the tangent space (or, when that is not a descent
direction, a preconditioned projected gradient), backtracks on the energy
of the renormalized trial point and commits only non-increasing steps.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .core import Coupling, GridFunction, HamiltonianParams, weak_divergence
from .errors import NonconvergenceError, PreconditionError, SolverFailure
from .solverconfig import SolverConfig, SolveTrace
from .transform import NORMALIZATION_TOL, PhiSolution

log = logging.getLogger(__name__)

ARMIJO = 1e-4


def _flux_coefficient(dphi, eps, r):
    """(|Dphi|^2 + eps^2)^((r-2)/2); eps = 0 is evaluated without dividing by zero."""
    if eps > 0:
        return (dphi * dphi + eps * eps) ** (0.5 * (r - 2.0))
    if r >= 2.0:
        return np.abs(dphi) ** (r - 2.0)
    out = np.zeros_like(dphi)
    nz = dphi != 0
    out[nz] = np.abs(dphi[nz]) ** (r - 2.0)
    return out


def discrete_energy(phi: GridFunction, params: HamiltonianParams, f: Coupling,
                    eps: float = 0.0) -> float:
    dom, n, r = phi.domain, phi.n, params.r
    v = phi.values
    dphi = np.diff(v) / phi.h
    if eps > 0:
        grad_part = (dphi * dphi + eps * eps) ** (0.5 * r)
    else:
        grad_part = np.abs(dphi) ** r
    pot = f.primitive(phi.nodes, v ** r)
    return float(params.mu / r * (dom.cell_weights(n) @ grad_part)
                 + (dom.node_weights(n) @ pot) / r)


def energy_gradient(phi: GridFunction, params: HamiltonianParams, f: Coupling,
                    eps: float = 0.0) -> np.ndarray:
    """Gradient of discrete_energy: the weak r-Laplace form without the lambda term."""
    dom, n, r = phi.domain, phi.n, params.r
    v = phi.values
    dphi = np.diff(v) / phi.h
    flux = _flux_coefficient(dphi, eps, r) * dphi
    reaction = dom.node_weights(n) * f(phi.nodes, v ** r) * v ** (r - 1.0)
    return params.mu * weak_divergence(dom, n, flux) + reaction


def lambda_from_phi(phi: GridFunction, params: HamiltonianParams, f: Coupling) -> float:
    """lambda = mu int |Dphi|^r + int f(x, phi^r) phi^r, valid for normalized phi."""
    dom, n, r = phi.domain, phi.n, params.r
    q = dom.node_weights(n)
    m = phi.values ** r
    mass = float(q @ m)
    if abs(mass - 1.0) > NORMALIZATION_TOL:
        raise PreconditionError(f"phi is not normalized: integral of phi^r = {mass!r}")
    dphi = np.diff(phi.values) / phi.h
    return float(params.mu * (dom.cell_weights(n) @ np.abs(dphi) ** r)
                 + q @ (f(phi.nodes, m) * m))


class _Problem:
    def __init__(self, domain, n, params, f):
        self.domain, self.n, self.params, self.f = domain, n, params, f
        self.h = domain.spacing(n)
        self.x = domain.nodes(n)
        self.q = domain.node_weights(n)
        self.W = domain.cell_weights(n)

    def gf(self, v):
        return GridFunction(self.domain, v)

    def normalize(self, v):
        return v / (self.q @ v ** self.params.r) ** (1.0 / self.params.r)

    def energy(self, v, eps):
        return discrete_energy(self.gf(v), self.params, self.f, eps)

    def gradient(self, v, eps):
        return energy_gradient(self.gf(v), self.params, self.f, eps)

    def stiffness(self, v, eps):
        """Hessian of the gradient part of the energy (tridiagonal, SPD on non-constants)."""
        r, h = self.params.r, self.h
        dphi = np.diff(v) / h
        s = dphi * dphi + eps * eps
        kappa = self.params.mu * self.W / h**2 * s ** (0.5 * (r - 4.0)) * ((r - 1.0) * dphi**2 + eps**2)
        diag = np.zeros(self.n)
        diag[:-1] += kappa
        diag[1:] += kappa
        return sparse.diags([-kappa, diag, -kappa], [-1, 0, 1], format="csc")

    def reaction_curvature(self, v, lam):
        r = self.params.r
        m = v ** r
        fm = self.f.dm(self.x, m)
        fv = self.f(self.x, m)
        return self.q * (r * fm * v ** (2 * r - 2) + (r - 1.0) * (fv - lam) * v ** (r - 2.0))

    def bordered_direction(self, A, normal, R):
        """Solve [A n; n^T 0][d; eta] = [-R; 0] for a tangent direction d."""
        size = self.n + 1
        K = sparse.bmat([[A, sparse.csc_matrix(normal.reshape(-1, 1))],
                         [sparse.csc_matrix(normal.reshape(1, -1)), None]], format="csc")
        rhs = np.concatenate((-R, [0.0]))
        try:
            sol = splu(K).solve(rhs)
        except RuntimeError:
            return None
        d = sol[: size - 1]
        return d if np.all(np.isfinite(d)) else None


def _max_step_positive(v, d):
    """Largest s <= 1 with v + s d >= v / 2 at every node."""
    neg = d < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(0.5 * v[neg] / -d[neg])))


def _power_increment(base, delta, p):
    """(base + delta)^p - base^p without cancellation, for base > 0."""
    return base ** p * np.expm1(p * np.log1p(delta / base))


_GL_T, _GL_W = np.polynomial.legendre.leggauss(6)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


def energy_change(phi_old: GridFunction, phi_new: GridFunction, params: HamiltonianParams,
                  f: Coupling, eps: float = 0.0, multiplier: float | None = None) -> float:
    """discrete_energy(phi_new) - discrete_energy(phi_old), computed without cancellation.

    Large changes are taken as a plain difference; small ones are summed
    term by term so that decreases far below the rounding level of E
    itself are still resolved. With ``multiplier`` (lambda) the change is
    corrected to first order for the rounding drift of sum(q phi^r) away
    from 1, i.e. it compares the exactly normalized points.
    """
    direct = (discrete_energy(phi_new, params, f, eps)
              - discrete_energy(phi_old, params, f, eps))
    E_scale = abs(discrete_energy(phi_old, params, f, eps))
    if abs(direct) > 1e-6 * max(E_scale, 1e-300):
        if multiplier is None:
            return direct
        dC = phi_old.domain.node_weights(phi_old.n) @ (phi_new.values ** params.r
                                                        - phi_old.values ** params.r)
        return direct - multiplier / params.r * float(dC)
    dom, n, r, h = phi_old.domain, phi_old.n, params.r, phi_old.h
    v = phi_old.values
    delta = phi_new.values - v
    D = np.diff(v) / h
    dD = np.diff(delta) / h
    S = D * D + eps * eps
    dS = dD * (2.0 * D + dD)
    dA = np.empty_like(S)
    pos = S > 0
    dA[pos] = _power_increment(S[pos], dS[pos], 0.5 * r)
    dA[~pos] = np.abs(dD[~pos]) ** r
    m = v ** r
    dm = _power_increment(v, delta, r)
    x = phi_old.nodes
    dF = dm * sum(w * f(x, m + t * dm) for t, w in zip(_GL_T, _GL_W))
    q = dom.node_weights(n)
    if multiplier is not None:
        dF = dF - multiplier * dm
    return float(params.mu / r * (dom.cell_weights(n) @ dA) + (q @ dF) / r)


def _descend_stage(prob: _Problem, v, eps, cfg: SolverConfig, trace: SolveTrace, stage: int,
                   iters_left):
    """Run descent at fixed eps until the projected gradient is below grad_tol."""
    E = prob.energy(v, eps)
    trace.energies.append(E)
    trace.stages.append(stage)
    gd_step = cfg.step0
    for it in range(iters_left):
        g = prob.gradient(v, eps)
        lam = float(v @ g)
        normal = prob.q * v ** (prob.params.r - 1.0)
        R = g - lam * normal
        res = float(np.max(np.abs(R)))
        if res <= cfg.grad_tol:
            return v, res, it
        curvature = prob.reaction_curvature(v, lam)
        K = prob.stiffness(v, eps)
        candidates = []
        d = prob.bordered_direction((K + sparse.diags(curvature)).tocsc(), normal, R)
        if d is not None and R @ d < 0:
            candidates.append(("newton", d, 1.0))
        # SPD fallback: drop negative curvature, add a mass shift
        P = K + sparse.diags(np.abs(curvature) + prob.q)
        d_pg = prob.bordered_direction(P.tocsc(), normal, R)
        if d_pg is not None and R @ d_pg < 0:
            candidates.append(("gradient", d_pg, gd_step))
        if not candidates:
            raise SolverFailure("no descent direction available", trace)
        committed = False
        for kind, d, s0 in candidates:
            s = min(s0, _max_step_positive(v, d))
            slope = float(R @ d)
            while s > 1e-14:
                trial = prob.normalize(v + s * d)
                if np.min(trial) > cfg.positivity_floor:
                    dE = energy_change(prob.gf(v), prob.gf(trial), prob.params, prob.f, eps,
                                       multiplier=lam)
                    if dE <= ARMIJO * s * slope:
                        committed = True
                        break
                s *= 0.5
            if committed:
                if kind == "gradient":
                    gd_step = min(1.0, 2.0 * s)
                break
        if not committed:
            if res <= 1e3 * cfg.grad_tol:
                trace.flags.append(f"stage {stage}: stopped at rounding level, residual {res:.2e}")
                return v, res, it
            if np.min(v) <= 2 * cfg.positivity_floor:
                raise SolverFailure("positivity floor reached during line search", trace)
            raise SolverFailure(f"line search failed at residual {res:.3e}", trace)
        v, E = trial, E + dE
        trace.iterations += 1
        trace.energies.append(E)
        trace.stages.append(stage)
        trace.lambdas.append(lam)
        trace.residuals.append(res)
        log.debug("eps=%.1e it=%d %s s=%.3g E=%.16e res=%.3e", eps, it, kind, s, E, res)
    raise NonconvergenceError(
        f"no convergence at eps={eps:.1e} within {iters_left} iterations", trace)


def solve_rlaplace(domain, params: HamiltonianParams, f: Coupling,
                   cfg: SolverConfig = SolverConfig(), initial=None):
    """Solve -mu Delta_r phi + (f(x, phi^r) - lambda) phi^(r-1) = 0, int phi^r = 1.

    Returns (PhiSolution, SolveTrace). Zero-flux conditions hold at both
    ends of an interval and at the rim of a ball; the origin of a ball is
    a regular point of the radial weight.
    """
    n = cfg.n
    prob = _Problem(domain, n, params, f)
    trace = SolveTrace(eps_stages=list(cfg.eps_schedule))
    if not f.monotone:
        trace.flags.append("uniqueness not guaranteed")
    if initial is None:
        v = np.full(n, prob.q.sum() ** (-1.0 / params.r))
    else:
        v = prob.normalize(np.asarray(initial, dtype=float))
    res = float("nan")
    for stage, eps in enumerate(cfg.eps_schedule):
        v, res, used = _descend_stage(prob, v, eps, cfg, trace, stage, cfg.max_iters)
    trace.final_residual = res
    if params.r < 2.0:
        # the singular flux is only resolved where |Dphi| >> eps
        small = int(np.sum(np.abs(np.diff(v)) / prob.h < 10.0 * cfg.final_eps))
        if small:
            trace.flags.append(f"eps-limited: |Dphi| < 10*eps in {small} cells")
    phi = prob.gf(v)
    lam = lambda_from_phi(phi, params, f)
    trace.lambdas.append(lam)
    return PhiSolution(phi, lam), trace
