"""Parameter algebra, domains, grid functions and couplings.

Everything here is immutable and shared by the solvers. Grids are uniform;
the radial ball is represented on ``[0, R]`` with ``rho = 0`` at node 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, GridMismatchError


def conjugate_exponent(r: float) -> float:
    """Return r' = r / (r - 1)."""
    if not r > 1:
        raise DomainError(f"exponent must exceed 1, got r={r!r}")
    return r / (r - 1.0)


def mu_coefficient(nu: float, r: float, h0: float) -> float:
    """Diffusivity of the transformed problem, nu * (nu r / h0)^(r-1)."""
    if not nu > 0:
        raise DomainError(f"nu must be positive, got {nu!r}")
    if not h0 > 0:
        raise DomainError(f"h0 must be positive, got {h0!r}")
    if not r > 1:
        raise DomainError(f"exponent must exceed 1, got r={r!r}")
    return nu * (nu * r / h0) ** (r - 1.0)


@dataclass(frozen=True)
class HamiltonianParams:
    """Coefficients of H(p) = h0/r' |p|^r' and the derived constants.

    Construct with either ``h0`` or ``l0`` (then h0 = l0^(1-r')). Use
    :meth:`build` to pass the conjugate exponent instead of ``r``.
    """

    nu: float
    r: float
    h0: Optional[float] = None
    l0: Optional[float] = None
    r_conj: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        if not self.nu > 0:
            raise DomainError(f"nu must be positive, got {self.nu!r}")
        r_conj = conjugate_exponent(self.r)
        if (self.h0 is None) == (self.l0 is None):
            raise DomainError("exactly one of h0 and l0 must be given")
        if self.l0 is not None:
            if not self.l0 > 0:
                raise DomainError(f"l0 must be positive, got {self.l0!r}")
            object.__setattr__(self, "h0", self.l0 ** (1.0 - r_conj))
        object.__setattr__(self, "r_conj", r_conj)
        object.__setattr__(self, "mu", mu_coefficient(self.nu, self.r, self.h0))

    @classmethod
    def build(cls, nu, r=None, r_conj=None, h0=None, l0=None) -> "HamiltonianParams":
        if (r is None) == (r_conj is None):
            raise DomainError("exactly one of r and r_conj must be given")
        if r is None:
            r = conjugate_exponent(r_conj)  # the map is an involution
        return cls(nu=float(nu), r=float(r),
                   h0=None if h0 is None else float(h0),
                   l0=None if l0 is None else float(l0))

    def hamiltonian(self, p):
        return self.h0 / self.r_conj * np.abs(p) ** self.r_conj

    def drift(self, p):
        """DH(p) = h0 |p|^(r'-2) p, written without a division at p = 0."""
        return self.h0 * np.sign(p) * np.abs(p) ** (self.r_conj - 1.0)

    def as_dict(self) -> dict:
        return {"nu": self.nu, "r": self.r, "r_conj": self.r_conj,
                "h0": self.h0, "l0": self.l0, "mu": self.mu}


def unit_sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class Interval:
    """The interval (a, b) with Neumann conditions at both ends."""

    a: float = 0.0
    b: float = 1.0
    kind: str = field(default="Interval", init=False)

    def __post_init__(self):
        if not self.b - self.a > 0:
            raise DomainError(f"need a < b, got a={self.a!r}, b={self.b!r}")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def volume(self) -> float:
        return self.b - self.a

    def nodes(self, n: int) -> np.ndarray:
        return np.linspace(self.a, self.b, n)

    def spacing(self, n: int) -> float:
        return (self.b - self.a) / (n - 1)

    def weight(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def node_weights(self, n: int) -> np.ndarray:
        q = np.full(n, self.spacing(n))
        q[0] *= 0.5
        q[-1] *= 0.5
        return q

    def cell_weights(self, n: int) -> np.ndarray:
        return np.full(n - 1, self.spacing(n))

    def mirror(self, x):
        return self.a + self.b - x

    def as_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class RadialBall:
    """The ball |x| < R in R^d, for functions of rho = |x| only.

    Weights carry the full angular factor so that integrals are true
    d-dimensional integrals.
    """

    R: float = 1.0
    d: int = 2
    kind: str = field(default="RadialBall", init=False)

    def __post_init__(self):
        if not self.R > 0 or not math.isfinite(self.R):
            raise DomainError(f"radius must be positive and finite, got {self.R!r}")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be an integer >= 1, got {self.d!r}")

    @property
    def length(self) -> float:
        return self.R

    @property
    def angular_constant(self) -> float:
        return unit_sphere_area(self.d)

    @property
    def volume(self) -> float:
        return self.angular_constant * self.R ** self.d / self.d

    def nodes(self, n: int) -> np.ndarray:
        return np.linspace(0.0, self.R, n)

    def spacing(self, n: int) -> float:
        return self.R / (n - 1)

    def weight(self, rho):
        return self.angular_constant * np.asarray(rho, dtype=float) ** (self.d - 1)

    def node_weights(self, n: int) -> np.ndarray:
        """Volumes of the shells between neighbouring cell midpoints.

        These equal S rho^(d-1) h up to O(h^3) away from the origin, sum to
        the exact ball volume and give the origin the ball of radius h/2.
        """
        h = self.spacing(n)
        edges = np.concatenate(([0.0], self.nodes(n)[:-1] + 0.5 * h, [self.R]))
        return self.angular_constant / self.d * np.diff(edges ** self.d)

    def cell_weights(self, n: int) -> np.ndarray:
        h = self.spacing(n)
        return self.weight(self.nodes(n)[:-1] + 0.5 * h) * h

    def as_dict(self) -> dict:
        return {"kind": self.kind, "R": self.R, "d": self.d}


DomainSpec = Interval | RadialBall


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values on the uniform grid of ``domain``."""

    domain: DomainSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise DomainError("a grid function needs a 1-D array of at least 3 nodes")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return self.domain.spacing(self.n)

    @property
    def nodes(self) -> np.ndarray:
        return self.domain.nodes(self.n)

    @property
    def midpoints(self) -> np.ndarray:
        x = self.nodes
        return 0.5 * (x[1:] + x[:-1])

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.domain, values)

    def same_grid(self, other: "GridFunction") -> bool:
        return self.domain == other.domain and self.n == other.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def sample(domain: DomainSpec, n: int, func) -> GridFunction:
    return GridFunction(domain, func(domain.nodes(n)))


def require_same_grid(*gs: GridFunction):
    first = gs[0]
    for g in gs[1:]:
        if not first.same_grid(g):
            raise GridMismatchError(
                f"grid functions live on different grids: {first.domain}/{first.n} "
                f"vs {g.domain}/{g.n}")


def integrate(g: GridFunction) -> float:
    """Trapezoidal quadrature of g against the volume weight of its domain."""
    return float(np.dot(g.domain.node_weights(g.n), g.values))


def differentiate(g: GridFunction) -> np.ndarray:
    """Derivative at the n-1 cell midpoints, (g[i+1] - g[i]) / h."""
    return np.diff(g.values) / g.h


def differentiate_nodal(g: GridFunction) -> GridFunction:
    """Central differences inside, one-sided second-order stencils at the ends."""
    return g.with_values(np.gradient(g.values, g.h, edge_order=2))


def midpoint_mean(g: GridFunction) -> np.ndarray:
    return 0.5 * (g.values[1:] + g.values[:-1])


@dataclass(frozen=True)
class Coupling:
    """The running cost f(x, m) with its antiderivative in m.

    ``deriv`` is df/dm; when absent a central difference is used.
    """

    eval: Callable
    primitive: Callable
    monotone: bool
    deriv: Optional[Callable] = None
    name: str = "custom"
    description: dict = field(default_factory=dict, compare=False)

    def __call__(self, x, m):
        return self.eval(x, m)

    def dm(self, x, m):
        if self.deriv is not None:
            return self.deriv(x, m)
        m = np.asarray(m, dtype=float)
        step = 1e-6 * np.maximum(1.0, np.abs(m))
        return (self.eval(x, m + step) - self.eval(x, m - step)) / (2.0 * step)


def _zero_potential(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def power_coupling(coef: float = 1.0, exponent: float = 1.0, potential=None,
                   name: str = "power") -> Coupling:
    """f(x, m) = coef * m^exponent + V(x); nondecreasing in m iff coef >= 0."""
    if not exponent > 0:
        raise DomainError(f"power coupling needs a positive exponent, got {exponent!r}")
    V = potential if potential is not None else _zero_potential
    a, c = float(exponent), float(coef)

    def f(x, m):
        return c * np.asarray(m, dtype=float) ** a + V(x)

    def F(x, m):
        m = np.asarray(m, dtype=float)
        return c * m ** (a + 1.0) / (a + 1.0) + V(x) * m

    def df(x, m):
        m = np.asarray(m, dtype=float)
        if a == 1.0:
            return np.full_like(m, c)
        return c * a * m ** (a - 1.0)

    return Coupling(f, F, monotone=c >= 0, deriv=df, name=name,
                    description={"name": name, "coef": c, "exponent": a})


def zero_coupling() -> Coupling:
    def f(x, m):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(m)).shape)

    return Coupling(f, f, monotone=True, deriv=f, name="zero",
                    description={"name": "zero"})


def linear_coupling(coef: float = 1.0, potential=None) -> Coupling:
    name = "linear" if potential is None else "linear-plus-potential"
    return power_coupling(coef, 1.0, potential, name=name)


def check_primitive(f: Coupling, x, m, delta: float = 1e-6) -> float:
    """Largest relative error of the forward difference of f.primitive against f."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    approx = (f.primitive(x, m + delta) - f.primitive(x, m)) / delta
    exact = f.eval(x, m)
    return float(np.max(np.abs(approx - exact) / np.maximum(1.0, np.abs(exact))))


def weak_divergence(domain: DomainSpec, n: int, flux: np.ndarray) -> np.ndarray:
    """Integrals of flux * dxi_i against every hat function xi_i, boundary hats included.

    ``flux`` holds one value per cell; the result is
    (W[i-1/2] F[i-1/2] - W[i+1/2] F[i+1/2]) / h with W the cell volumes.
    """
    wf = domain.cell_weights(n) * flux / domain.spacing(n)
    out = np.zeros(n)
    out[1:] += wf
    out[:-1] -= wf
    return out


def laplacian_matrix(domain: DomainSpec, n: int):
    """Sparse finite-volume Laplacian with zero flux through the boundary.

    Interior rows are the usual three-point (radial) stencil; the origin
    of a ball gets d * 2 (u1 - u0) / h^2.
    """
    from scipy import sparse

    h = domain.spacing(n)
    q = domain.node_weights(n)
    W = domain.cell_weights(n) / h**2
    lower = W / q[1:]       # (i, i-1)
    upper = W / q[:-1]      # (i, i+1)
    diag = np.zeros(n)
    diag[:-1] -= upper
    diag[1:] -= lower
    return sparse.diags([lower, diag, upper], [-1, 0, 1], format="csr")


def central_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """Central differences with zero slope at both ends (mirror ghost nodes)."""
    p = np.zeros_like(values)
    p[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    return p
