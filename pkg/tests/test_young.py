import numpy as np
import pytest

from unfold_homog import (
    CertificateError,
    DomainError,
    GridField,
    Grid,
    Box,
    complementary,
    delta2_certificate,
    eval_B,
    luxemburg_norm,
    modular,
    nabla2_certificate,
    sample,
)
from unfold_homog.errors import DataError, DegenerateYoungFunctionError
from unfold_homog.young import YoungFunction, exp_minus_linear, power, power_log


def unit_grid(res):
    return Grid(Box((0.0,), (1.0,)), (res,))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_eval_power():
    assert eval_B(power(2), 3.0) == 9.0
    assert eval_B(power(2), 0.0) == 0.0
    assert eval_B(power_log(2), 0.0) == 0.0
    assert eval_B(exp_minus_linear(), 0.0) == 0.0


def test_eval_power_log_closed_form():
    # cross-checked against quadrature of the density
    val = eval_B(power_log(2), 1.0)
    assert val == pytest.approx(np.log(np.e + 1.0), rel=1e-14)
    t = np.linspace(0, 1, 20001)
    quad = np.trapezoid(power_log(2).density(t), t)
    assert val == pytest.approx(quad, rel=1e-8)


def test_eval_rejects_bad_domain():
    with pytest.raises(DomainError):
        eval_B(power(2), -1.0)
    with pytest.raises(DomainError):
        eval_B(power(2), np.inf)


def test_validate_builtins():
    for B in (power(1.5), power(2), power(3), power_log(2), exp_minus_linear()):
        assert B.validate()


def test_json_round_trip():
    for B in (power(3, scale=0.5), power_log(2), exp_minus_linear()):
        back = YoungFunction.from_json(B.to_json())
        t = np.geomspace(1e-3, 1e3, 11)
        assert np.array_equal(back.value(t), B.value(t))


# ---------------------------------------------------------------------------
# complementary function
# ---------------------------------------------------------------------------

def test_complementary_quadratics():
    # t^2/2 is self-dual; t^2 pairs with t^2/4
    half = complementary(power(2, scale=0.5))
    squared = complementary(power(2))
    for t in (0.5, 1.0, 2.0):
        assert float(half.value(t)) == pytest.approx(t * t / 2, rel=1e-6)
        assert float(squared.value(t)) == pytest.approx(t * t / 4, rel=1e-6)


def test_complementary_power_conjugate_exponent():
    # t^p/p pairs with t^q/q, q = p/(p-1); oracle is the brute-force sup
    B = power(3, scale=1.0 / 3.0)
    Bt = complementary(B)
    q = 1.5
    s_grid = np.geomspace(1e-6, 1e6, 100_000)
    for t in (0.5, 1.0, 2.0):
        brute = np.max(s_grid * t - np.asarray(B.value(s_grid)))
        assert float(Bt.value(t)) == pytest.approx(t ** q / q, rel=1e-6)
        assert float(Bt.value(t)) == pytest.approx(brute, rel=1e-6)


def test_complementary_is_valid_young_function():
    Bt = complementary(power(3))
    assert Bt.kind == "sampled_density"
    assert float(Bt.value(0.0)) == 0.0
    assert Bt.validate()


def test_complementary_refuses_unstable_range():
    # the slope of t^1.5 at the top of the s-grid cannot certify t ~ 1e6
    with pytest.raises(CertificateError):
        complementary(power(1.5), t_grid=np.geomspace(1e-2, 1e6, 64))


def test_young_inequality_never_undershoots():
    rng = np.random.default_rng(1)
    for B in (power(1.5), power(2), power(3), power_log(2)):
        Bt = complementary(B)
        s = np.concatenate([np.geomspace(1e-3, 40.0, 150), rng.uniform(0, 40, 150)])
        t = np.concatenate([np.geomspace(1e-3, 40.0, 150), rng.uniform(0, 40, 150)])
        S, T = np.meshgrid(s, t)
        slack = np.asarray(B.value(S)) + np.asarray(Bt.value(T)) - S * T
        assert float(slack.min()) >= -1e-8


# ---------------------------------------------------------------------------
# doubling certificates
# ---------------------------------------------------------------------------

def test_delta2_power_alpha_exact():
    for p in (1.5, 2.0, 3.0):
        cert = delta2_certificate(power(p))
        assert cert.passed
        assert cert.alpha_or_beta == pytest.approx(2.0 ** p, rel=1e-12)


def test_delta2_exp_fails():
    cert = delta2_certificate(exp_minus_linear(), t0=1.0, t_max=1e3)
    assert not cert.passed


def test_delta2_power_log():
    cert = delta2_certificate(power_log(2), t0=1.0, t_max=1e6)
    assert cert.passed
    assert cert.alpha_or_beta <= 8.0


def test_delta2_rejects_degenerate():
    flat = YoungFunction("sampled_density", (),
                         np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.0, 1.0]))
    with pytest.raises(DegenerateYoungFunctionError):
        delta2_certificate(flat, t0=0.5, t_max=2.0)


def test_nabla2_power():
    cert = nabla2_certificate(power(2), beta_grid=[1.5, 2.0, 4.0])
    assert cert.passed and cert.alpha_or_beta == 2.0
    cert3 = nabla2_certificate(power(3), beta_grid=np.geomspace(1.05, 8.0, 400))
    assert cert3.passed
    assert cert3.alpha_or_beta == pytest.approx(2.0 ** 0.5, rel=0.02)


def test_nabla2_near_linear_fails():
    # t log(e + t) is near linear; its complement grows exponentially
    tlog = YoungFunction("power_log", (1.0 + 1e-9,))
    cert = nabla2_certificate(tlog, t0=1.01, t_max=1e6,
                              beta_grid=np.geomspace(1.01, 1e4, 120))
    assert not cert.passed


def test_nabla2_requires_threshold_above_one():
    with pytest.raises(DomainError):
        nabla2_certificate(power(2), t0=0.5)


# ---------------------------------------------------------------------------
# modular and Luxemburg norm
# ---------------------------------------------------------------------------

def test_modular_examples():
    B = power(2)
    g = unit_grid(64)
    zero = sample(lambda x: 0.0 * x, g, bc="free")
    assert modular(B, zero) == 0.0
    two = sample(lambda x: 2.0 + 0.0 * x, g, bc="free")
    assert modular(B, two) == pytest.approx(4.0, rel=1e-14)
    lin = sample(lambda x: x, unit_grid(1024), bc="free")
    assert modular(B, lin) == pytest.approx(1.0 / 3.0, abs=1e-4)


def test_modular_rejects_nonfinite():
    g = unit_grid(8)
    field = sample(lambda x: x, g, bc="free")
    field.values[3] = np.inf
    with pytest.raises(DataError):
        modular(power(2), field)


def test_luxemburg_zero_and_constant():
    B = power(2)
    g = unit_grid(64)
    assert luxemburg_norm(B, sample(lambda x: 0.0 * x, g)) == 0.0
    assert luxemburg_norm(B, sample(lambda x: 3.0 + 0.0 * x, g)) == \
        pytest.approx(3.0, rel=1e-9)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_luxemburg_matches_lp_quadrature(p):
    B = power(p)
    rng = np.random.default_rng(42)
    g = unit_grid(256)
    u = GridField(g, rng.uniform(-2, 2, 257), bc="free")
    mags, w = u.quadrature_samples()
    lp = float(np.sum(mags ** p) * w) ** (1.0 / p)
    assert luxemburg_norm(B, u) == pytest.approx(lp, rel=1e-8)


def test_luxemburg_homogeneity():
    B = power(3)
    rng = np.random.default_rng(5)
    g = unit_grid(128)
    u = GridField(g, rng.uniform(-1, 1, 129), bc="free")
    tol = 1e-6
    base = luxemburg_norm(B, u, tol=tol)
    for c in (0.25, 3.0, -7.5):
        scaled = luxemburg_norm(B, u * c, tol=tol)
        assert abs(scaled - abs(c) * base) <= 2 * tol * max(1.0, abs(c) * base)


def test_luxemburg_triangle_inequality():
    B = power(2)
    rng = np.random.default_rng(11)
    g = unit_grid(128)
    tol = 1e-8
    for _ in range(5):
        u = GridField(g, rng.uniform(-1, 1, 129), bc="free")
        v = GridField(g, rng.uniform(-1, 1, 129), bc="free")
        lhs = luxemburg_norm(B, u + v, tol=tol)
        rhs = luxemburg_norm(B, u, tol=tol) + luxemburg_norm(B, v, tol=tol)
        assert lhs <= rhs + 4 * tol


def test_convexity_spot_checks():
    rng = np.random.default_rng(2)
    t = np.sort(rng.uniform(0.01, 50.0, 80))
    for B in (power(1.5), power(3), power_log(2)):
        a, b = t[:-1], t[1:]
        lam = rng.uniform(0.1, 0.9, a.shape)
        lhs = np.asarray(B.value(lam * a + (1 - lam) * b))
        rhs = lam * np.asarray(B.value(a)) + (1 - lam) * np.asarray(B.value(b))
        assert np.all(lhs <= rhs + 1e-10)
