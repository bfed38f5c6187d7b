import numpy as np
import pytest

from unfold_homog import (
    AlignmentError,
    Box,
    Grid,
    GridField,
    decompose,
    integrate,
    limit_pairing,
    mean_value,
    modular_identity_report,
    sample,
    sample_cells,
    two_scale_pairing,
    uci_defect,
    unfold,
)
from unfold_homog.unfold import (
    alignment_factor,
    strong_convergence_report,
    two_scale_dictionary,
)
from unfold_homog.young import power

UNIT = Box((0.0,), (1.0,))
UNIT2 = Box((0.0, 0.0), (1.0, 1.0))


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------

def test_decompose_aligned():
    dec = decompose(UNIT, 0.25)
    assert dec.xi_set.ravel().tolist() == [0, 1, 2, 3]
    assert dec.measure_lambda == 0.0
    assert not dec.empty


def test_decompose_strip():
    dec = decompose(UNIT, 0.3)
    assert dec.xi_set.ravel().tolist() == [0, 1, 2]
    assert dec.measure_lambda == pytest.approx(0.1, abs=1e-12)


def test_decompose_2d():
    dec = decompose(UNIT2, 0.5)
    assert dec.num_interior == 4
    assert dec.measure_lambda == 0.0


def test_decompose_empty_is_flagged():
    dec = decompose(UNIT, 2.0)
    assert dec.empty and dec.num_interior == 0
    assert dec.measure_lambda == pytest.approx(1.0)


def test_alignment_factor():
    grid = Grid(UNIT, (64,))
    assert alignment_factor(grid, 0.25) == 16
    assert alignment_factor(grid, 0.3) is None
    assert alignment_factor(Grid(UNIT, (10,)), 0.3) == 3


# ---------------------------------------------------------------------------
# the unfolding operator
# ---------------------------------------------------------------------------

def test_unfold_affine_values():
    # eps = 1/2 on (0,1): cell 0 holds y/2, cell 1 holds 1/2 + y/2
    grid = Grid(UNIT, (8,))
    w = sample(lambda x: x, grid, bc="free")
    dec = decompose(UNIT, 0.5)
    T = unfold(w, dec, 4)
    y = np.arange(5) / 4.0
    assert np.allclose(T.values[0], y / 2.0, atol=1e-15)
    assert np.allclose(T.values[1], 0.5 + y / 2.0, atol=1e-15)
    assert T.aligned


def test_unfold_product_rule_bitwise():
    rng = np.random.default_rng(8)
    grid = Grid(UNIT, (32,))
    v = GridField(grid, rng.standard_normal(33), bc="free")
    w = GridField(grid, rng.standard_normal(33), bc="free")
    dec = decompose(UNIT, 0.25)
    Tv, Tw, Tvw = (unfold(f, dec, 8) for f in (v, w, v * w))
    assert np.array_equal(Tvw.values, Tv.values * Tw.values)


def test_unfold_periodic_sample_identity_bitwise():
    f = lambda y: np.sin(2 * np.pi * (y - np.floor(y)))
    for eps, res in ((0.5, 32), (0.25, 32), (0.125, 64)):
        m = int(eps * res)
        grid = Grid(UNIT, (res,))
        w = sample(lambda x: f(x / eps), grid, bc="free")
        dec = decompose(UNIT, eps)
        T = unfold(w, dec, m)
        expected = f(np.arange(m + 1) / m)
        for i in range(dec.num_interior):
            assert np.array_equal(T.values[i], expected)


def test_unfold_misaligned_flags_approximation():
    grid = Grid(UNIT, (32,))
    w = sample(lambda x: x, grid, bc="free")
    dec = decompose(UNIT, 0.3)
    T = unfold(w, dec, 8)  # 0.3/h is not an integer
    assert not T.aligned
    assert T.values.shape[0] == dec.lattice_shape[0]


def test_unfold_vanishes_on_boundary_layer():
    grid = Grid(UNIT, (10,))
    w = sample(lambda x: 1.0 + x, grid, bc="free")
    dec = decompose(UNIT, 0.3)
    T = unfold(w, dec, 3)
    assert np.all(T.values[-1] == 0.0)  # the cell (0.9, 1.2) is boundary layer


# ---------------------------------------------------------------------------
# integral identities
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("eps,res", [(0.25, 64), (0.125, 64)])
def test_modular_identity_exact(eps, res):
    rng = np.random.default_rng(1)
    grid = Grid(UNIT, (res,))
    w = GridField(grid, rng.uniform(-2, 2, res + 1), bc="free")
    dec = decompose(UNIT, eps, grid)
    rep = modular_identity_report(power(2), w, dec)
    assert rep.defect <= 1e-12 * (1.0 + abs(rep.rhs_interior))
    assert rep.lambda_gap == pytest.approx(0.0, abs=1e-15)
    assert rep.norm_defect <= 3e-10
    assert rep.estimate_ok


def test_modular_identity_strip_gap():
    grid = Grid(UNIT, (10,))
    w = sample(lambda x: 1.0 + x * x, grid, bc="free")
    dec = decompose(UNIT, 0.3, grid)
    rep = modular_identity_report(power(2), w, dec)
    assert rep.defect <= 1e-12 * (1.0 + abs(rep.rhs_interior))
    # the strip (0.9, 1) carries exactly the full-minus-interior modular
    strip = rep.rhs_full - rep.rhs_interior
    assert rep.lambda_gap == pytest.approx(strip, abs=1e-15)


def test_modular_identity_refuses_misaligned():
    grid = Grid(UNIT, (32,))
    w = sample(lambda x: x, grid, bc="free")
    dec = decompose(UNIT, 0.3, grid)
    with pytest.raises(AlignmentError):
        modular_identity_report(power(2), w, dec)


def test_mean_value_examples():
    grid = Grid(UNIT, (32,))
    dec = decompose(UNIT, 0.25)
    w = sample(lambda x: 2.5 + 0.0 * x, grid, bc="free")
    mv = mean_value(unfold(w, dec, 8))
    assert np.allclose(mv.values, 2.5, atol=1e-14)
    # midpoint mean of a full sine period cancels to rounding
    osc = sample_cells(lambda x: np.sin(2 * np.pi * x / 0.25), grid)
    mv2 = mean_value(unfold(osc, dec, 8))
    assert np.max(np.abs(mv2.values)) <= 1e-12


def test_uci_records():
    B = power(2)
    ones = lambda res: sample(lambda x: 1.0 + 0.0 * x, Grid(UNIT, (res,)), bc="free")
    recs = uci_defect(B, [(0.5, ones(16)), (0.25, ones(16)), (0.125, ones(16))])
    for r in recs:
        assert r["lambda_mass"] == 0.0 and r["gap"] == 0.0
    strip = uci_defect(B, [(0.3, ones(10))])[0]
    assert strip["lambda_mass"] == pytest.approx(0.1, abs=1e-12)
    assert strip["gap"] == pytest.approx(0.1, abs=1e-12)


def test_uci_gap_bounded_by_mass():
    B = power(2)
    lin = lambda res: sample(lambda x: x, Grid(UNIT, (res,)), bc="free")
    for eps, res in ((0.5, 16), (0.25, 16), (0.125, 32)):
        rec = uci_defect(B, [(eps, lin(res))])[0]
        assert rec["gap"] <= rec["lambda_mass"] + 1e-15


# ---------------------------------------------------------------------------
# strong convergence and pairings
# ---------------------------------------------------------------------------

def test_strong_convergence_lipschitz_bound():
    B = power(2)
    grid = Grid(UNIT, (128,))
    w = sample(lambda x: np.abs(x - 0.3), grid, bc="free")
    prev = None
    for eps in (0.5, 0.25, 0.125):
        rep = strong_convergence_report(w, decompose(UNIT, eps), int(eps * 128), B)
        assert rep["sup_gap"] <= 1.0 * eps
        if prev is not None:
            assert rep["luxemburg_distance"] < prev
        prev = rep["luxemburg_distance"]


def test_two_scale_pairing_full_periods():
    grid = Grid(UNIT, (512,))
    v = sample_cells(lambda x: np.sin(2 * np.pi * x / 0.125) ** 2, grid)
    got = two_scale_pairing(v, lambda x, y: np.ones(x.shape[:-1]), 0.125)
    assert got == pytest.approx(0.5, abs=1e-12)


def test_two_scale_pairing_constant_sequence():
    # v = c pairs with h(y) to c * mean(h) in the limit
    c = 1.7
    h = lambda y: 1.0 + 0.25 * np.cos(2 * np.pi * y)
    grid = Grid(UNIT, (1024,))
    want = c * 1.0  # mean of h over the period
    for eps in (0.125, 0.0625):
        v = sample_cells(lambda x: c + 0.0 * x, grid)
        got = two_scale_pairing(v, lambda x, y: h(y[..., 0]), eps)
        assert got == pytest.approx(want, abs=1e-10)


def test_limit_pairing_matches_tensor_quadrature():
    phi = lambda x, y: x[..., 0] * np.sin(2 * np.pi * y[..., 0])
    v0 = lambda x, y: np.sin(2 * np.pi * y[..., 0])
    got = limit_pairing(v0, phi, UNIT)
    assert got == pytest.approx(0.5 * 0.5, abs=1e-4)  # int x dx * int sin^2 dy


def test_dictionary_shape():
    entries = two_scale_dictionary()
    assert len(entries) == 3 * (1 + 2 * 3)
    x = np.zeros((4, 1))
    y = np.full((4, 1), 0.25)
    for name, phi in entries:
        assert np.asarray(phi(x, y)).shape == (4,)


def test_unfolded_integral_matches_interior():
    rng = np.random.default_rng(9)
    grid = Grid(UNIT, (30,))
    w = GridField(grid, rng.uniform(0.5, 1.5, 31), bc="free")
    dec = decompose(UNIT, 0.3)
    T = unfold(w, dec, 9)
    mask = dec.interior_cell_mask(grid)
    interior = float(np.sum(np.where(mask, w.cell_values(), 0.0)) * grid.cell_volume)
    assert T.integral() == pytest.approx(interior, abs=1e-14)
    assert integrate(w) - T.integral() == pytest.approx(
        float(np.sum(np.where(mask, 0.0, w.cell_values())) * grid.cell_volume),
        abs=1e-14)
