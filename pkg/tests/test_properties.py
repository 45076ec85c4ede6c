import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hopfcole import (GridFunction, HamiltonianParams, Interval, MFGSolution, PhiSolution,
                      RadialBall, check_gradient_alignment, forward_transform, integrate,
                      inverse_transform, proof_identity_suite)
from hopfcole.verify import ResidualReport

exponents = st.floats(1.05, 10.0)
positive = st.floats(0.1, 5.0)
domains = st.one_of(
    st.builds(Interval, st.floats(-2, 0), st.floats(0.5, 3)),
    st.builds(RadialBall, st.floats(0.5, 3), st.integers(1, 4)),
)


def profiles(n):
    return arrays(np.float64, n, elements=st.floats(0.2, 5.0))


@given(exponents, positive, positive, positive)
def test_parameter_identities(r, nu, h0, l0):
    p = HamiltonianParams(nu, r, h0=h0)
    assert abs(p.r_conj - r / (r - 1)) <= 1e-14 * p.r_conj
    assert abs(1 / r + 1 / p.r_conj - 1) <= 1e-14
    assert abs(p.mu - nu * (nu * r / h0) ** (r - 1)) <= 1e-14 * p.mu
    q = HamiltonianParams(nu, r, l0=l0)
    assert abs(q.h0 - l0 ** (1 - q.r_conj)) <= 1e-14 * q.h0


@given(st.floats(1.01, 50.0))
def test_proof_identities(r):
    assert proof_identity_suite(r)["max_deviation"] <= 1e-12


@settings(max_examples=50, deadline=None)
@given(domains, st.sampled_from([1.5, 2.0, 3.0, 4.0]), positive, positive, profiles(33),
       st.floats(-5, 5))
def test_round_trip_and_alignment(domain, r, nu, h0, values, lam):
    params = HamiltonianParams(nu, r, h0=h0)
    phi = GridFunction(domain, values)
    phi = phi.with_values(values / integrate(phi.with_values(values**r)) ** (1 / r))
    sol = inverse_transform(PhiSolution(phi, lam), params)
    assert check_gradient_alignment(sol, params).rel_sup_norm <= 1e-12
    back = forward_transform(sol, params)
    assert np.max(np.abs(back.phi.values - phi.values)) <= 1e-12 * np.max(phi.values)
    assert back.lam == lam
    assert abs(integrate(sol.m) - 1) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([1.5, 2.0, 3.0]), profiles(17))
def test_power_map_exact(r, values):
    dom = Interval(0, 1)
    m = values**r
    phi = forward_transform(MFGSolution(GridFunction(dom, np.zeros(17)), GridFunction(dom, m), 0.0),
                            HamiltonianParams(1.0, r, h0=1.0), tol=np.inf).phi.values
    ulp = np.spacing(values)
    assert np.all(np.abs(phi - values) <= 2 * ulp)


@given(domains, arrays(np.float64, 21, elements=st.floats(0, 10)))
def test_quadrature_positive(domain, values):
    assert integrate(GridFunction(domain, values)) >= 0


@given(arrays(np.float64, st.integers(1, 60), elements=st.floats(-1e6, 1e6)))
def test_report_norm_relation(values):
    rep = ResidualReport.from_values("kolmogorov-weak", values, values.size)
    assert rep.sup_norm >= 0 and rep.l2_norm >= 0
    assert rep.l2_norm <= np.sqrt(values.size) * rep.sup_norm * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(profiles(33), positive, st.sampled_from([1.5, 2.0, 3.0]))
def test_inverse_scale_invariant(values, c, r):
    params = HamiltonianParams(1.0, r, h0=1.0)
    dom = Interval(0, 1)
    a = inverse_transform(PhiSolution(GridFunction(dom, values), 0.0), params).u.values
    b = inverse_transform(PhiSolution(GridFunction(dom, c * values), 0.0), params).u.values
    assert np.allclose(a, b, rtol=1e-10, atol=1e-10)
