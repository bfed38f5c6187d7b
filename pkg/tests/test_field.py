import numpy as np
import pytest

from unfold_homog import Box, Grid, GridField, gradient, integrate, sample, sample_cells
from unfold_homog.errors import DataError, DomainError


def test_box_validation():
    with pytest.raises(DomainError):
        Box((0.0,), (0.0,))
    with pytest.raises(DomainError):
        Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))  # 3-d unsupported
    assert Box((0.0, -1.0), (2.0, 1.0)).volume == 4.0


def test_grid_spacing():
    g = Grid(Box((0.0,), (1.0,)), (4,))
    assert g.spacing == (0.25,)
    with pytest.raises(DomainError):
        Grid(Box((0.0,), (1.0,)), (1,))


def test_sample_constant_and_nodes():
    g = Grid(Box((0.0,), (1.0,)), (8,))
    u = sample(lambda x: 1.0 + 0.0 * x, g, bc="free")
    assert np.all(u.values == 1.0)
    v = sample(lambda x: x, Grid(Box((0.0,), (1.0,)), (4,)), bc="free")
    assert np.array_equal(v.values, [0.0, 0.25, 0.5, 0.75, 1.0])


def test_sample_periodic_wraps():
    g = Grid(Box((0.0, 0.0), (1.0, 1.0)), (8, 8))
    u = sample(lambda x, y: np.sin(2 * np.pi * x), g, bc="periodic")
    assert u.values.shape == (8, 8)
    assert np.array_equal(u.values[:, 0], u.values[:, 5])


def test_zero_bc_enforced():
    g = Grid(Box((0.0,), (1.0,)), (4,))
    with pytest.raises(DataError):
        GridField(g, np.ones(5), bc="zero")
    GridField(g, np.array([0.0, 1.0, -2.0, 3.0, 0.0]), bc="zero")


def test_gradient_constant_and_affine():
    g = Grid(Box((0.0,), (1.0,)), (16,))
    c = sample(lambda x: 5.0 + 0.0 * x, g, bc="free")
    assert np.all(gradient(c).values == 0.0)
    aff = sample(lambda x: 3.0 * x - 1.0, g, bc="free")
    assert np.allclose(gradient(aff).values, 3.0, atol=1e-13)
    g2 = Grid(Box((0.0, 0.0), (1.0, 1.0)), (8, 8))
    aff2 = sample(lambda x, y: 2.0 * x - 3.0 * y, g2, bc="free")
    G = gradient(aff2).values
    assert np.allclose(G[..., 0, 0], 2.0, atol=1e-13)
    assert np.allclose(G[..., 0, 1], -3.0, atol=1e-13)


def test_gradient_first_order_on_sine():
    errs = []
    for res in (64, 128, 256):
        g = Grid(Box((0.0,), (1.0,)), (res,))
        u = sample(lambda x: np.sin(2 * np.pi * x), g, bc="periodic")
        centers = g.cell_centers()[..., 0]
        exact = 2 * np.pi * np.cos(2 * np.pi * centers)
        errs.append(float(np.max(np.abs(gradient(u).values[..., 0, 0] - exact))))
    orders = [np.log2(a / b) for a, b in zip(errs[:-1], errs[1:])]
    assert min(orders) >= 0.9


def test_periodic_gradient_zero_mean():
    rng = np.random.default_rng(0)
    g = Grid(Box((0.0, 0.0), (1.0, 1.0)), (16, 16))
    u = GridField(g, rng.standard_normal((16, 16)), bc="periodic")
    G = gradient(u).values
    assert abs(G[..., 0, 0].mean()) < 1e-14
    assert abs(G[..., 0, 1].mean()) < 1e-14


def test_integrate_examples():
    g2 = Grid(Box((0.0, 0.0), (1.0, 1.0)), (8, 8))
    one = sample(lambda x, y: 1.0 + 0.0 * x, g2, bc="free")
    assert integrate(one) == pytest.approx(1.0, rel=1e-15)
    lin = sample(lambda x: x, Grid(Box((0.0,), (1.0,)), (2,)), bc="free")
    assert integrate(lin) == 0.5
    sq = sample(lambda x: x * x, Grid(Box((0.0,), (1.0,)), (1024,)), bc="free")
    assert integrate(sq) == pytest.approx(1.0 / 3.0, abs=1e-6)


def test_integrate_linearity():
    rng = np.random.default_rng(7)
    g = Grid(Box((0.0,), (2.0,)), (32,))
    u = GridField(g, rng.standard_normal(33), bc="free")
    v = GridField(g, rng.standard_normal(33), bc="free")
    lhs = integrate(u * 2.0 + v * (-3.0))
    rhs = 2.0 * integrate(u) - 3.0 * integrate(v)
    assert lhs == pytest.approx(rhs, abs=1e-13)


def test_cell_sampling_matches_midpoint():
    g = Grid(Box((0.0,), (1.0,)), (8,))
    u = sample_cells(lambda x: x, g)
    assert np.array_equal(u.values, (np.arange(8) + 0.5) / 8)
    assert integrate(u) == pytest.approx(0.5, rel=1e-15)


def test_sample_rejects_nonfinite():
    g = Grid(Box((0.0,), (1.0,)), (8,))
    with pytest.raises(DataError):
        sample(lambda x: np.where(x > 0.5, np.inf, 0.0), g, bc="free")


def test_dump_values_round_trip(tmp_path):
    g = Grid(Box((0.0,), (1.0,)), (4,))
    u = sample(lambda x: x * x, g, bc="free")
    csv = tmp_path / "u.csv"
    u.dump_values(csv, fmt="csv")
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "value"
    assert [float(s) for s in lines[1:]] == u.values.tolist()
    binp = tmp_path / "u.bin"
    u.dump_values(binp, fmt="bin")
    back = np.fromfile(binp)
    assert np.array_equal(back, u.values.ravel())
