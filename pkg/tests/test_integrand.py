import numpy as np
import pytest

from unfold_homog import IntegrandSpec, convex_envelope_1d, evaluate, grad_xi, growth_check
from unfold_homog.errors import DataError, DomainError
from unfold_homog.integrand import (
    coefficient_constant,
    coefficient_piecewise,
    coefficient_trig,
    finite_difference_grad_xi,
    lipschitz_diagnostic,
    potential_double_well,
    potential_power,
    potential_quadratic,
    relax_potential,
)
from unfold_homog.young import power


def test_evaluate_examples(double_well_spec):
    spec = IntegrandSpec(coefficient_constant(1.0), potential_power(2))
    assert evaluate(spec, 0.2, 3.0) == 9.0
    assert evaluate(double_well_spec, 0.0, 1.0) == 0.0
    assert evaluate(double_well_spec, 0.0, -1.0) == 0.0
    assert evaluate(double_well_spec, 0.0, 0.0) == 1.0
    two_phase = IntegrandSpec(coefficient_piecewise([0.0, 0.5], [1.0, 4.0]),
                              potential_power(2))
    assert evaluate(two_phase, 0.75, 2.0) == 16.0


def test_periodicity_exact_at_dyadic_points():
    spec = IntegrandSpec(coefficient_piecewise([0.0, 0.5], [1.0, 4.0]),
                         potential_power(2))
    ys = np.arange(0, 1, 0.0625)
    for y in ys:
        for shift in (1.0, 2.0, -1.0):
            assert evaluate(spec, y + shift, 1.5) == evaluate(spec, y, 1.5)


def test_trig_coefficient_bounds():
    with pytest.raises(DomainError):
        coefficient_trig(base=1.0, amplitude=1.0)
    a = coefficient_trig(base=2.0, amplitude=0.5, freq=2)
    assert a.a_min == 1.5 and a.a_max == 2.5


def test_grad_examples():
    p2 = IntegrandSpec(coefficient_constant(1.0), potential_power(2))
    assert grad_xi(p2, 0.1, 3.0) == pytest.approx(6.0, rel=1e-14)
    dw = IntegrandSpec(coefficient_constant(1.0), potential_double_well())
    assert grad_xi(dw, 0.0, 1.0) == 0.0
    quad = IntegrandSpec(coefficient_constant(1.0),
                         potential_quadratic(np.diag([1.0, 4.0])), dims=(1, 2))
    g = grad_xi(quad, np.zeros((1, 1)), np.array([[1.0], [1.0]]))
    assert np.allclose(g.ravel(), [2.0, 8.0])


@pytest.mark.parametrize("potential,dims", [
    (potential_power(2), (1, 1)),
    (potential_power(3), (1, 1)),
    (potential_double_well(), (1, 1)),
    (potential_quadratic(np.array([[2.0, 0.5], [0.5, 1.0]])), (1, 2)),
])
def test_grad_consistency_with_finite_differences(potential, dims):
    spec = IntegrandSpec(coefficient_trig(2.0, 0.7, 1), potential, dims=dims)
    rng = np.random.default_rng(0)
    for _ in range(100):
        y = rng.random(dims[0])
        xi = rng.uniform(-3, 3, (dims[1], dims[0]))
        if float(np.sqrt(np.sum(xi * xi))) < 0.2:
            continue  # fd step degrades near the potential's critical points
        a = np.asarray(grad_xi(spec, y, xi))
        b = finite_difference_grad_xi(spec, y, xi)
        assert np.allclose(a, b, rtol=1e-5, atol=1e-7)


def test_growth_check_equality_case():
    spec = IntegrandSpec(coefficient_constant(1.0), potential_power(2),
                         growth_B=power(2), growth_M=1.0, growth_a_bound=0.0)
    rep = growth_check(spec, power(2))
    assert rep.lower_ok and rep.upper_ok
    assert rep.fitted_M == pytest.approx(1.0, rel=1e-12)
    assert rep.fitted_a_bound == 0.0


def test_growth_check_two_phase_fits_sup():
    spec = IntegrandSpec(coefficient_piecewise([0.0, 0.5], [1.0, 4.0]),
                         potential_power(2), growth_B=power(2),
                         growth_M=4.0, growth_a_bound=0.0)
    rep = growth_check(spec, power(2))
    assert rep.lower_ok and rep.upper_ok
    assert rep.fitted_M == pytest.approx(4.0, rel=1e-12)


def test_growth_check_double_well_rejected(double_well_spec):
    # the lower bound B(|xi|) <= f(y, xi) fails at the wells |xi| = 1 for
    # every Young function (f vanishes there, B cannot); no scaling fixes it
    for B in (power(2), power(4, scale=1.0 / 8.0)):
        rep = growth_check(double_well_spec, B,
                           xi_samples=np.linspace(-3, 3, 61).reshape(-1, 1, 1))
        assert not rep.lower_ok


def test_growth_check_needs_samples(double_well_spec):
    with pytest.raises(DataError):
        growth_check(double_well_spec, power(2), xi_samples=np.zeros((0, 1, 1)))


def test_convex_envelope_convex_function_is_identity():
    env = convex_envelope_1d(potential_power(2), (-2, 2), 101)
    xs = np.linspace(-2, 2, 101)
    assert np.allclose(env(xs), xs ** 2, atol=1e-12)


def test_convex_envelope_double_well():
    env = convex_envelope_1d(potential_double_well(), (-2, 2), 401)
    inside = np.linspace(-1, 1, 21)
    assert np.all(np.abs(env(inside)) <= 1e-4)
    outside = np.array([-1.8, 1.5, 2.0])
    assert np.allclose(env(outside), (outside ** 2 - 1.0) ** 2, atol=1e-4)
    # convexity: second differences of the hull are nonnegative
    k, v = env.knots, env.values
    slopes = np.diff(v) / np.diff(k)
    assert np.all(np.diff(slopes) >= -1e-12)


def test_convex_envelope_two_parabolas():
    W = lambda s: np.minimum((s - 1.0) ** 2, (s + 1.0) ** 2)
    env = convex_envelope_1d(W, (-2.5, 2.5), 501)
    inside = np.linspace(-1, 1, 11)
    assert np.all(np.abs(env(inside)) <= 1e-4)


def test_convex_envelope_below_samples():
    rng = np.random.default_rng(3)
    W = lambda s: np.cos(3 * s) + 0.2 * s ** 4
    env = convex_envelope_1d(W, (-3, 3), 301)
    xs = np.linspace(-3, 3, 301)
    assert np.all(env(xs) <= W(xs) + 1e-12)
    del rng


def test_convex_envelope_validation():
    with pytest.raises(DomainError):
        convex_envelope_1d(potential_power(2), (1.0, -1.0), 101)
    with pytest.raises(DomainError):
        convex_envelope_1d(potential_power(2), (-1.0, 1.0), 2)
    with pytest.raises(DataError):
        convex_envelope_1d(lambda s: np.where(s > 0, np.inf, 0.0), (-1, 1), 11)


def test_relax_potential_scalar_only(double_well_spec):
    relaxed = relax_potential(double_well_spec, (-2, 2))
    assert evaluate(relaxed, 0.3, 0.0) == pytest.approx(0.0, abs=1e-4)
    spec2d = IntegrandSpec(coefficient_constant(1.0),
                           potential_quadratic(np.eye(2)), dims=(2, 1))
    with pytest.raises(DomainError):
        relax_potential(spec2d, (-2, 2))


def test_lipschitz_diagnostic_finite(two_phase_spec):
    C = lipschitz_diagnostic(two_phase_spec, power(2))
    assert np.isfinite(C) and C > 0


def test_spec_json_round_trip(two_phase_spec):
    back = IntegrandSpec.from_json(two_phase_spec.to_json())
    ys = np.linspace(0, 1, 7)
    for y in ys:
        assert evaluate(back, y, 1.3) == evaluate(two_phase_spec, y, 1.3)
    assert back.growth_M == two_phase_spec.growth_M
