import numpy as np
import pytest

from unfold_homog import (
    IntegrandSpec,
    SolverConfig,
    dirichlet_minimize,
    eps_sweep_affine,
    hom_table,
    manufactured_unfolding_check,
    relaxation_equivalence_check,
)
from unfold_homog.errors import DomainError, ExtrapolationError
from unfold_homog.harness import (
    datum_affine,
    datum_quadratic,
    datum_sine,
    manufactured_cases,
)
from unfold_homog.integrand import coefficient_constant, potential_power
from unfold_homog.young import power


@pytest.fixture(scope="module")
def two_phase_table():
    from unfold_homog.integrand import coefficient_piecewise
    spec = IntegrandSpec(coefficient_piecewise([0.0, 0.5], [1.0, 4.0]),
                         potential_power(2), growth_B=power(2),
                         growth_M=4.0, growth_a_bound=0.0)
    cfg = SolverConfig(restarts=2, seed=0)
    return spec, hom_table(spec, np.arange(-2.0, 2.25, 0.25), (1, 2), 32, cfg), cfg


def test_sweep_equals_cell_value(two_phase_spec, fast_cfg):
    rep = eps_sweep_affine(two_phase_spec, 1.0, (0.5, 0.25), 32, fast_cfg,
                           reference=1.6)
    for row in rep.rows:
        assert row["crosscheck_defect"] <= 1e-10
        assert row["gap"] == pytest.approx(0.0, abs=1e-6)


def test_sweep_gaps_non_increasing(two_phase_spec, fast_cfg):
    rep = eps_sweep_affine(two_phase_spec, 1.0, (0.5, 0.25, 0.125), 32, fast_cfg)
    gaps = [r["gap"] for r in rep.rows]
    noise = 1e-4 * (1.0 + abs(rep.reference))
    assert all(b <= a + noise for a, b in zip(gaps[:-1], gaps[1:]))


def test_sweep_constant_in_y_exact(fast_cfg):
    spec = IntegrandSpec(coefficient_constant(1.0), potential_power(2),
                         growth_B=power(2), growth_M=1.0, growth_a_bound=0.0)
    rep = eps_sweep_affine(spec, 1.5, (0.5, 0.25), 16, fast_cfg, reference=1.5 ** 2)
    for row in rep.rows:
        assert abs(row["gap"]) <= 1e-7


def test_sweep_rejects_non_reciprocal_eps(two_phase_spec, fast_cfg):
    with pytest.raises(DomainError):
        eps_sweep_affine(two_phase_spec, 1.0, (0.3,), 16, fast_cfg, reference=1.6)


def test_dirichlet_quadratic_datum(two_phase_table):
    spec, table, cfg = two_phase_table
    u, du = datum_quadratic()
    rep = dirichlet_minimize(spec, u, du, table, (0.5, 0.25, 0.125), 32, config=cfg)
    assert rep.rows[-1]["rel_gap"] <= 0.05
    gaps = [abs(r["gap"]) for r in rep.rows]
    assert gaps[-1] <= gaps[0]


def test_dirichlet_affine_reduces_to_sweep(two_phase_table):
    spec, table, cfg = two_phase_table
    u, du = datum_affine([[1.0]])
    rep = dirichlet_minimize(spec, u, du, table, (0.5, 0.25), 32, config=cfg)
    sweep = eps_sweep_affine(spec, 1.0, (0.5, 0.25), 32, cfg, reference=1.6)
    for ra, rs in zip(rep.rows, sweep.rows):
        assert ra["discrete_min"] == pytest.approx(rs["discrete_min"], abs=1e-9)


def test_dirichlet_sine_datum_constant_coefficient(fast_cfg):
    # the 1% band needs a table finer than the 0.25 default: piecewise-linear
    # interpolation of xi^2 at that spacing already costs 1.9 percent
    spec = IntegrandSpec(coefficient_constant(1.0), potential_power(2),
                         growth_B=power(2), growth_M=1.0, growth_a_bound=0.0)
    table = hom_table(spec, np.arange(-1.5, 1.5625, 0.0625), (1,), 16, fast_cfg)
    u, du = datum_sine()
    rep = dirichlet_minimize(spec, u, du, table, (0.125, 0.0625), 16, config=fast_cfg)
    assert rep.rows[-1]["rel_gap"] <= 0.01


def test_dirichlet_refuses_extrapolation(two_phase_table):
    spec, table, cfg = two_phase_table
    u, du = datum_affine([[5.0]])  # outside the tabulated range [-2, 2]
    with pytest.raises(ExtrapolationError):
        dirichlet_minimize(spec, u, du, table, (0.5,), 16, config=cfg)


def test_manufactured_corrector_free():
    case = manufactured_cases()["corrector-free"]
    rep = manufactured_unfolding_check(case)
    errs = [r["luxemburg_error"] for r in rep.rows]
    assert all(b < a for a, b in zip(errs[:-1], errs[1:]))
    assert rep.observed_order >= 0.9


def test_manufactured_separated_corrector_first_order():
    case = manufactured_cases()["separated-corrector"]
    rep = manufactured_unfolding_check(case)
    assert rep.observed_order >= 0.9
    first = rep.rows[0]
    c = first["luxemburg_error"] / first["epsilon"]
    for row in rep.rows:
        assert row["luxemburg_error"] <= 1.2 * c * row["epsilon"]


def test_manufactured_pure_oscillation_exact():
    case = manufactured_cases()["pure-oscillation"]
    rep = manufactured_unfolding_check(case)
    for row in rep.rows:
        assert row["reindex_defect"] <= 1e-10


def test_relaxation_convex_potential_is_identity(fast_cfg):
    spec = IntegrandSpec(coefficient_constant(1.0), potential_power(2))
    rep = relaxation_equivalence_check(spec, [0.0, 1.0, -2.0], (1, 2), 16, fast_cfg)
    for r in rep.rows:
        assert r["abs_diff"] <= 1e-6 * (1.0 + abs(r["f_hom_raw"]))


def test_relaxation_rejects_vector_case(fast_cfg):
    spec = IntegrandSpec(coefficient_constant(1.0),
                         potential_power(2), dims=(2, 1))
    with pytest.raises(DomainError):
        relaxation_equivalence_check(spec, [0.0], (1,), 16, fast_cfg)


def test_report_serialization(tmp_path, two_phase_spec, fast_cfg):
    rep = eps_sweep_affine(two_phase_spec, 1.0, (0.5, 0.25), 16, fast_cfg,
                           reference=1.6)
    csv = tmp_path / "sweep.csv"
    rep.to_csv(csv)
    lines = csv.read_text().strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("epsilon,")
    payload = rep.to_json()
    assert payload["kind"] == "eps_sweep_affine"
    assert len(payload["rows"]) == 2
