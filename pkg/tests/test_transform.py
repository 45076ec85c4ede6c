import numpy as np
import pytest

from hopfcole import (AlignmentError, DomainError, GridFunction, HamiltonianParams, Interval,
                      MFGSolution, PhiSolution, PositivityError, PreconditionError, RadialBall,
                      check_gradient_alignment, forward_transform, integrate, inverse_transform,
                      quadratic_hopfcole_reference, sample)
from hopfcole.transform import drift_potential_slope, regauge
from hopfcole.verify import fitted_order, rlaplace_weak_residual

UNIT = Interval(0.0, 1.0)
QUAD = HamiltonianParams(1.0, 2.0, h0=1.0)


def gibbs_pair(n):
    u = sample(UNIT, n, lambda x: x)
    m = sample(UNIT, n, lambda x: np.exp(-x) / (1 - np.exp(-1)))
    return MFGSolution(u, m, 0.0)


def test_alignment_trivial():
    sol = MFGSolution(sample(UNIT, 17, np.zeros_like), sample(UNIT, 17, np.ones_like), 0.3)
    for params in (QUAD, HamiltonianParams(0.3, 3.0, h0=2.0)):
        rep = check_gradient_alignment(sol, params)
        assert rep.sup_norm == 0 and rep.rel_sup_norm == 0
        assert rep.flux.size == 16


def test_alignment_gibbs_second_order():
    hs, rels = [], []
    for n in (65, 129, 257):
        rep = check_gradient_alignment(gibbs_pair(n), QUAD)
        hs.append(UNIT.spacing(n))
        rels.append(rep.rel_sup_norm)
    assert abs(fitted_order(hs, rels) - 2) < 0.1


def test_alignment_pure_transport():
    sol = MFGSolution(sample(UNIT, 33, lambda x: x), sample(UNIT, 33, np.ones_like), 0.0)
    rep = check_gradient_alignment(sol, QUAD)
    assert np.allclose(rep.flux, 1.0)
    assert rep.rel_sup_norm == pytest.approx(1.0)


def test_forward_constant():
    sol = MFGSolution(sample(UNIT, 17, np.zeros_like), sample(UNIT, 17, np.ones_like), 0.7)
    phi = forward_transform(sol, QUAD)
    assert np.all(phi.phi.values == 1.0) and phi.lam == 0.7


def test_forward_rejects_misaligned_and_nonpositive():
    sol = MFGSolution(sample(UNIT, 33, lambda x: x), sample(UNIT, 33, np.ones_like), 0.0)
    with pytest.raises(AlignmentError) as info:
        forward_transform(sol, QUAD)
    assert info.value.report.rel_sup_norm > 0.5
    assert isinstance(info.value, PreconditionError)
    bad = MFGSolution(sample(UNIT, 17, np.zeros_like), sample(UNIT, 17, lambda x: x - 0.5), 0.0)
    with pytest.raises(PositivityError):
        forward_transform(bad, QUAD)


def test_forward_of_quadratic_oracle(quadratic_solutions, quadratic_instance):
    dom, params, f = quadratic_instance
    sol, h = quadratic_solutions["sol"], quadratic_solutions["h"]
    phi = forward_transform(sol, params)
    assert integrate(phi.phi.with_values(phi.phi.values ** 2)) == pytest.approx(1.0, abs=1e-12)
    assert rlaplace_weak_residual(phi, params, f).sup_norm <= 10 * h**2


def test_inverse_constant():
    phi = PhiSolution(sample(UNIT, 17, np.ones_like), 2.5)
    sol = inverse_transform(phi, QUAD)
    assert np.all(sol.u.values == 0) and np.all(sol.m.values == 1) and sol.lam == 2.5


def test_inverse_exponential_profile():
    for n in (65, 257):
        phi = sample(UNIT, n, lambda x: 3.0 * np.exp(-x / 2))
        sol = inverse_transform(PhiSolution(phi, 0.0), QUAD)
        h = UNIT.spacing(n)
        assert np.max(np.abs(sol.u.values - sol.u.nodes)) <= 10 * h**2
        assert sol.u.values[0] == 0.0


def test_inverse_rejects_nonpositive():
    with pytest.raises(PositivityError):
        inverse_transform(PhiSolution(sample(UNIT, 17, lambda x: x), 0.0), QUAD)


def test_inverse_matches_log_formula():
    for n in (65, 129, 257):
        phi = sample(UNIT, n, lambda x: 1.0 + 0.3 * np.cos(3 * x) + 0.2 * x**2)
        nu, h0 = 0.7, 1.4
        params = HamiltonianParams(nu, 2.0, h0=h0)
        u = inverse_transform(PhiSolution(phi, 0.0), params).u.values
        ref = -(2 * nu / h0) * np.log(phi.values / phi.values[0])
        assert np.max(np.abs(u - ref)) <= 10 * UNIT.spacing(n) ** 2


def test_inverse_radial_starts_at_origin():
    ball = RadialBall(1.0, 3)
    phi = sample(ball, 65, lambda x: np.exp(-x**2))
    sol = inverse_transform(PhiSolution(phi, 0.0), HamiltonianParams(1.0, 3.0, h0=1.0))
    assert sol.u.values[0] == 0.0
    assert np.all(np.diff(sol.u.values) > 0)     # phi decreasing means u increasing


def test_scale_invariance_and_gauge(rng):
    phi = sample(UNIT, 65, lambda x: 1.2 + np.sin(4 * x))
    for r in (1.5, 2.0, 3.0):
        params = HamiltonianParams(0.8, r, h0=1.1)
        a = inverse_transform(PhiSolution(phi, 0.0), params)
        b = inverse_transform(PhiSolution(phi.with_values(7.5 * phi.values), 0.0), params)
        assert np.allclose(a.u.values, b.u.values, rtol=1e-13, atol=1e-14)
        shifted = MFGSolution(a.u.with_values(a.u.values + 3.0), a.m, a.lam)
        fa = check_gradient_alignment(a, params).flux
        fb = check_gradient_alignment(shifted, params).flux
        assert np.allclose(fa, fb, rtol=0, atol=1e-12)


def test_round_trip(rng):
    for r in (1.5, 2.0, 3.0, 4.0):
        params = HamiltonianParams(1.0, r, h0=1.0)
        v = np.exp(rng.normal(size=65) * 0.3)
        v /= integrate(GridFunction(UNIT, v**r)) ** (1 / r)
        phi = PhiSolution(GridFunction(UNIT, v), 0.42)
        back = forward_transform(inverse_transform(phi, params), params)
        assert np.max(np.abs(back.phi.values - v)) <= 1e-12
        assert back.lam == 0.42


def test_drift_potential_slope_continuous_at_zero():
    b = np.array([-1e-8, 0.0, 1e-8])
    for rc in (1.5, 2.0, 3.0):
        s = drift_potential_slope(b, rc)
        assert s[1] == 0.0 and s[0] == -s[2]


def test_quadratic_reference():
    u0 = sample(UNIT, 33, np.zeros_like)
    assert np.allclose(quadratic_hopfcole_reference(u0, QUAD).values, 1.0)
    for n in (65, 257):
        u = sample(UNIT, n, lambda x: x)
        m = quadratic_hopfcole_reference(u, QUAD).values
        exact = np.exp(-u.nodes) / (1 - np.exp(-1))
        assert np.max(np.abs(m - exact)) <= 10 * UNIT.spacing(n) ** 2
    with pytest.raises(DomainError):
        quadratic_hopfcole_reference(u0, HamiltonianParams(1.0, 3.0, h0=1.0))


def test_quadratic_reference_matches_oracle(quadratic_solutions, quadratic_instance):
    sol, h = quadratic_solutions["sol"], quadratic_solutions["h"]
    m = quadratic_hopfcole_reference(sol.u, quadratic_instance[1]).values
    assert np.max(np.abs(m - sol.m.values)) <= 10 * h**2


def test_regauge():
    u = sample(UNIT, 33, lambda x: x + 2)
    assert regauge(u, "left").values[0] == 0
    assert integrate(regauge(u, "mean")) == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        regauge(u, "right")


def test_solution_validation():
    u = sample(UNIT, 17, np.zeros_like)
    MFGSolution(u, sample(UNIT, 17, np.ones_like), 0).validate()
    with pytest.raises(PreconditionError):
        MFGSolution(u, sample(UNIT, 17, lambda x: 2 + 0 * x), 0).validate()
    with pytest.raises(PositivityError):
        PhiSolution(sample(UNIT, 17, lambda x: x), 0).validate(2.0)
