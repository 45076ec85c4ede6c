"""Direct Newton solver for the coupled stationary MFG system.

Unknowns are z = (u_0..u_{n-1}, m_0..m_{n-1}, lambda). The rows are

* n pointwise HJB equations  -nu Lap u + H(Du) + lambda - f(x, m) = 0,
* n Kolmogorov rows tested against hat functions, the middle one replaced
  by the mass constraint sum(q m) = 1,
* the gauge sum(q u) = 0.

The Kolmogorov rows are conservative flux differences, so at a converged
solution the discrete flux nu Dm + mbar DH(Du) vanishes in every cell.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import MatrixRankWarning, splu

from .core import (Coupling, GridFunction, HamiltonianParams, central_gradient,
                   differentiate, laplacian_matrix, midpoint_mean, power_coupling,
                   require_same_grid, weak_divergence)
from .errors import (NonconvergenceError, SingularJacobianError, SolverFailure)
from .solverconfig import SolverConfig, SolveTrace
from .transform import MFGSolution

log = logging.getLogger(__name__)

SMOOTH = "smooth"
SINGULAR_DRIFT = "singular-drift"


def smooth_hamiltonian_guard(params: HamiltonianParams) -> str:
    """'smooth' when r' >= 2, otherwise 'singular-drift' (DH is only Hoelder at 0)."""
    return SMOOTH if params.r_conj >= 2.0 else SINGULAR_DRIFT


def hjb_residual(u: GridFunction, m: GridFunction, lam: float,
                 params: HamiltonianParams, f: Coupling) -> GridFunction:
    require_same_grid(u, m)
    lap = laplacian_matrix(u.domain, u.n) @ u.values
    p = central_gradient(u.values, u.h)
    res = -params.nu * lap + params.hamiltonian(p) + lam - f(u.nodes, m.values)
    return u.with_values(res)


def _kolmogorov_flux(u, m, h, params):
    du = np.diff(u) / h
    return params.nu * np.diff(m) / h + 0.5 * (m[1:] + m[:-1]) * params.drift(du)


def kolmogorov_weak_residual(u: GridFunction, m: GridFunction,
                             params: HamiltonianParams) -> np.ndarray:
    """Weak Kolmogorov residuals against all n hat functions (boundary hats included)."""
    require_same_grid(u, m)
    flux = _kolmogorov_flux(u.values, m.values, u.h, params)
    return weak_divergence(u.domain, u.n, flux)


class _CoupledSystem:
    """Residual and sparse Jacobian of the stacked system on one grid."""

    def __init__(self, domain, n, params, f, jac_eps):
        self.domain, self.n, self.params, self.f = domain, n, params, f
        self.h = domain.spacing(n)
        self.x = domain.nodes(n)
        self.q = domain.node_weights(n)
        self.W = domain.cell_weights(n)
        self.L = laplacian_matrix(domain, n)
        self.jac_eps = jac_eps
        self.k = n // 2       # Kolmogorov row traded for the mass constraint

    def split(self, z):
        n = self.n
        return z[:n], z[n:2 * n], z[2 * n]

    def residual(self, z):
        u, m, lam = self.split(z)
        p, h, n = self.params, self.h, self.n
        hjb = (-p.nu * (self.L @ u) + p.hamiltonian(central_gradient(u, h))
               + lam - self.f(self.x, m))
        kol = weak_divergence(self.domain, n, _kolmogorov_flux(u, m, h, p))
        kol[self.k] = self.q @ m - 1.0
        return np.concatenate((hjb, kol, [self.q @ u]))

    def drift_slope(self, du):
        p = self.params
        if p.r_conj >= 2.0:
            return p.h0 * (p.r_conj - 1.0) * np.abs(du) ** (p.r_conj - 2.0)
        return p.h0 * (p.r_conj - 1.0) * (du * du + self.jac_eps**2) ** (0.5 * (p.r_conj - 2.0))

    def jacobian(self, z):
        u, m, lam = self.split(z)
        p, h, n = self.params, self.h, self.n
        rows, cols, vals = [], [], []

        def add(r, c, v):
            r, c, v = np.broadcast_arrays(r, c, v)
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(v.ravel())

        # HJB block
        Lc = (-p.nu * self.L).tocoo()
        add(Lc.row, Lc.col, Lc.data)
        grad = central_gradient(u, h)
        hp = p.drift(grad)   # H'(p) = DH(p)
        i = np.arange(1, n - 1)
        add(i, i + 1, hp[1:-1] / (2 * h))
        add(i, i - 1, -hp[1:-1] / (2 * h))
        add(np.arange(n), n + np.arange(n), -self.f.dm(self.x, m))
        add(np.arange(n), 2 * n, 1.0)

        # Kolmogorov block: cell c couples nodes c and c+1
        c = np.arange(n - 1)
        du = np.diff(u) / h
        mbar = 0.5 * (m[1:] + m[:-1])
        dr = p.drift(du)
        ds = self.drift_slope(du)
        # derivative of the cell flux w.r.t. each neighbouring unknown
        dF = [(c, -mbar * ds / h),
              (c + 1, mbar * ds / h),
              (n + c, -p.nu / h + 0.5 * dr),
              (n + c + 1, p.nu / h + 0.5 * dr)]
        scale = self.W / h
        kr, kc, kv = [], [], []
        for col, d in dF:
            kr += [n + c, n + c + 1]
            kc += [col, col]
            kv += [-scale * d, scale * d]
        kr, kc, kv = (np.concatenate(a) for a in (kr, kc, kv))
        keep = kr != n + self.k
        add(kr[keep], kc[keep], kv[keep])
        add(n + self.k, n + np.arange(n), self.q)
        add(2 * n, np.arange(n), self.q)

        size = 2 * n + 1
        return sparse.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(size, size))


def _solve_linear(J, rhs, trace):
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            step = splu(J).solve(rhs)
        except (RuntimeError, MatrixRankWarning) as exc:
            raise SingularJacobianError(
                "Newton Jacobian is singular; the coupling may violate monotonicity "
                f"({exc})", trace) from exc
    if not np.all(np.isfinite(step)):
        raise SingularJacobianError("Newton step is not finite; Jacobian nearly singular", trace)
    return step


def _newton(system: _CoupledSystem, z, cfg: SolverConfig, trace: SolveTrace):
    n = system.n
    tol = cfg.newton_tol
    R = system.residual(z)
    res = float(np.max(np.abs(R)))
    trace.residuals.append(res)
    trace.lambdas.append(float(z[2 * n]))
    for it in range(cfg.newton_max_iters):
        if res <= tol:
            return z, res
        step = _solve_linear(system.jacobian(z), -R, trace)
        dm = step[n:2 * n]
        m = z[n:2 * n]
        shrinking = dm < 0
        tau = 1.0
        if np.any(shrinking):
            tau = min(1.0, 0.95 * float(np.min(m[shrinking] / -dm[shrinking])))
        norm0 = np.linalg.norm(R)
        for _ in range(40):
            trial = z + tau * step
            R_trial = system.residual(trial)
            if np.all(trial[n:2 * n] > 0) and np.linalg.norm(R_trial) <= (1 - 1e-4 * tau) * norm0:
                break
            tau *= 0.5
        else:
            # no decrease: accept only if we are sitting at the rounding floor
            if _at_roundoff(step, z):
                trace.flags.append("converged at rounding level")
                return z, res
            raise SolverFailure(
                "damped Newton could not reduce the residual while keeping m > 0", trace)
        z, R = trial, R_trial
        res = float(np.max(np.abs(R)))
        trace.iterations += 1
        trace.residuals.append(res)
        trace.lambdas.append(float(z[2 * n]))
        log.debug("newton it=%d tau=%.3g res=%.3e", it, tau, res)
        if res > tol and tau == 1.0 and _at_roundoff(step, z):
            trace.flags.append("converged at rounding level")
            return z, res
    if res <= tol:
        return z, res
    raise NonconvergenceError(
        f"Newton did not reach residual {tol:.1e} in {cfg.newton_max_iters} iterations "
        f"(last {res:.3e})", trace)


def _at_roundoff(step, z):
    return float(np.max(np.abs(step))) <= 1e-12 * max(1.0, float(np.max(np.abs(z))))


def _initial_state(domain, n, f):
    q = domain.node_weights(n)
    x = domain.nodes(n)
    m0 = np.full(n, 1.0 / q.sum())
    lam0 = float(q @ f(x, m0) / q.sum())
    return np.concatenate((np.zeros(n), m0, [lam0]))


def _blend(f: Coupling, theta: float) -> Coupling:
    base = power_coupling(1.0, 1.0)
    return Coupling(
        eval=lambda x, m: theta * f(x, m) + (1 - theta) * base(x, m),
        primitive=lambda x, m: theta * f.primitive(x, m) + (1 - theta) * base.primitive(x, m),
        monotone=f.monotone,
        deriv=lambda x, m: theta * f.dm(x, m) + (1 - theta) * base.dm(x, m),
        name=f"blend({f.name},{theta:.3g})")


def solve_coupled(domain, params: HamiltonianParams, f: Coupling,
                  cfg: SolverConfig = SolverConfig()):
    """Solve the coupled system; returns (MFGSolution, SolveTrace).

    The output satisfies sum(q m) = 1 and sum(q u) = 0. If Newton fails
    from the constant initial guess, it is retried by continuation from
    f = m towards the requested coupling.
    """
    n = cfg.n
    trace = SolveTrace(eps_stages=[cfg.final_eps])
    regime = smooth_hamiltonian_guard(params)
    if regime == SINGULAR_DRIFT:
        trace.flags.append("singular-drift: first-order accurate")
    if not f.monotone:
        trace.flags.append("uniqueness not guaranteed")
    system = _CoupledSystem(domain, n, params, f, cfg.final_eps)
    z0 = _initial_state(domain, n, f)
    try:
        z, res = _newton(system, z0, cfg, trace)
    except (SolverFailure, NonconvergenceError) as exc:
        log.info("cold-start Newton failed (%s); continuing in coupling strength", exc)
        trace.flags.append("continuation")
        z = _initial_state(domain, n, power_coupling(1.0, 1.0))
        for theta in np.linspace(0.0, 1.0, 11)[1:]:
            z, res = _newton(_CoupledSystem(domain, n, params, _blend(f, theta), cfg.final_eps),
                             z, cfg, trace)
    trace.final_residual = res
    u, m, lam = system.split(z)
    if not np.all(m > 0):
        raise SolverFailure("density lost positivity", trace)
    sol = MFGSolution(GridFunction(domain, u), GridFunction(domain, m), float(lam))
    return sol, trace


def newton_jacobian_check(domain, n, params, f, z, eps=1e-7):
    """Max abs difference between the analytic Jacobian and central differences (for tests)."""
    system = _CoupledSystem(domain, n, params, f, 0.0)
    J = system.jacobian(z).toarray()
    J_fd = np.empty_like(J)
    for j in range(z.size):
        e = np.zeros_like(z)
        e[j] = eps
        J_fd[:, j] = (system.residual(z + e) - system.residual(z - e)) / (2 * eps)
    return float(np.max(np.abs(J - J_fd)))


def residual_vector(domain, n, params, f, z):
    return _CoupledSystem(domain, n, params, f, 0.0).residual(z)


def flux_at_midpoints(sol: MFGSolution, params: HamiltonianParams) -> np.ndarray:
    return params.nu * differentiate(sol.m) + midpoint_mean(sol.m) * params.drift(differentiate(sol.u))
