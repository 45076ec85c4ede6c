"""Solver settings and iteration traces shared by both solvers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import DomainError


@dataclass(frozen=True)
class SolverConfig:
    n: int = 257
    eps_schedule: tuple = (1e-2, 1e-4, 1e-6, 1e-8)
    step0: float = 0.1
    max_iters: int = 50000
    grad_tol: float = 1e-10
    positivity_floor: float = 1e-12
    newton_tol: float = 1e-11
    newton_max_iters: int = 100

    def __post_init__(self):
        object.__setattr__(self, "eps_schedule", tuple(float(e) for e in self.eps_schedule))
        eps = self.eps_schedule
        if not eps or any(e <= 0 for e in eps):
            raise DomainError("eps_schedule must be a nonempty sequence of positive numbers")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise DomainError("eps_schedule must be strictly decreasing")
        if int(self.n) != self.n or self.n < 17:
            raise DomainError(f"need at least 17 grid nodes, got n={self.n!r}")
        if not 0 < self.step0:
            raise DomainError("step0 must be positive")

    @property
    def final_eps(self) -> float:
        return self.eps_schedule[-1]

    def with_n(self, n: int) -> "SolverConfig":
        return replace(self, n=int(n))


@dataclass
class SolveTrace:
    """Per-iteration history of a solve.

    ``energies`` and ``stages`` are parallel: entry k is the energy of the
    k-th committed iterate and the index of the eps stage it belongs to.
    The oracle leaves them empty and fills ``residuals`` instead.
    """

    energies: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    eps_stages: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    iterations: int = 0
    final_residual: float = float("nan")
    flags: list = field(default_factory=list)

    def stage_energies(self, stage: int) -> list:
        return [e for e, s in zip(self.energies, self.stages) if s == stage]

    def as_dict(self) -> dict:
        return {"iterations": self.iterations, "final_residual": self.final_residual,
                "eps_stages": list(self.eps_stages), "flags": list(self.flags)}
