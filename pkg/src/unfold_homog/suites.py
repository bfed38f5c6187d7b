"""Named verification suites behind ``unfold-homog verify``.

Each suite runs a battery of assertions with measured values and bounds
and returns a machine-readable report; the CLI exit code is nonzero iff
any assertion failed.  Defaults are chosen so every suite runs in well
under its documented time budget on a laptop.
"""

from __future__ import annotations

import numpy as np

from .cell import SolverConfig, hom_table
from .field import Grid, GridField, sample, sample_cells, unit_box
from .harness import (
    datum_affine,
    datum_quadratic,
    dirichlet_minimize,
    eps_sweep_affine,
    manufactured_cases,
    manufactured_unfolding_check,
    relaxation_equivalence_check,
)
from .integrand import (
    IntegrandSpec,
    coefficient_constant,
    coefficient_piecewise,
    convex_envelope_1d,
    potential_double_well,
    potential_power,
)
from .unfold import (
    decompose,
    limit_pairing,
    mean_value,
    modular_identity_report,
    strong_convergence_report,
    two_scale_pairing,
    unfold,
)
from .young import power

SUITES = ("unfold", "two-scale", "sweep", "relaxation")


class _Assertions:
    def __init__(self):
        self.rows = []

    def check(self, name, measured, bound, ok=None):
        if ok is None:
            ok = bool(measured <= bound)
        self.rows.append({"name": name, "measured": float(measured),
                          "bound": float(bound), "passed": bool(ok)})

    def report(self, suite):
        return {"suite": suite, "passed": all(r["passed"] for r in self.rows),
                "assertions": self.rows}


def _two_phase_quadratic():
    return IntegrandSpec(coefficient_piecewise([0.0, 0.5], [1.0, 4.0]),
                         potential_power(2), growth_B=power(2),
                         growth_M=4.0, growth_a_bound=0.0)


def suite_unfold(config=None):
    """Exact aligned-grid identities of the unfolding operator."""
    config = config or {}
    B = power(2)
    out = _Assertions()
    rng = np.random.default_rng(int(config.get("seed", 0)))
    for dim, res in ((1, 64), (2, 32)):
        box = unit_box(dim)
        grid = Grid(box, (res,) * dim)
        if dim == 1:
            smooth = sample(lambda x: np.cos(3 * x) + x * x, grid, bc="free")
        else:
            smooth = sample(lambda x, y: np.cos(3 * x) + x * y, grid, bc="free")
        noise = GridField(grid, rng.uniform(-2.0, 2.0,
                                            tuple(r + 1 for r in grid.resolution)),
                          bc="free")
        for eps in (0.5, 0.25, 0.125):
            m = int(round(eps * res))
            dec = decompose(box, eps, grid)
            for label, w in (("smooth", smooth), ("random", noise)):
                rep = modular_identity_report(B, w, dec, m)
                scale = 1.0 + abs(rep.rhs_interior)
                out.check(f"modular-identity {dim}d eps={eps} {label}",
                          rep.defect / scale, 1e-12)
                out.check(f"norm-identity {dim}d eps={eps} {label}",
                          rep.norm_defect, 3e-10)
                out.check(f"unfolding-estimate {dim}d eps={eps} {label}",
                          0.0, 1.0, ok=rep.estimate_ok)
                other = noise if label == "smooth" else smooth
                Tv = unfold(w, dec, m)
                Tw = unfold(other, dec, m)
                Tvw = unfold(w * other, dec, m)
                prod_defect = float(np.max(np.abs(Tvw.values - Tv.values * Tw.values)))
                out.check(f"product-rule {dim}d eps={eps} {label}", prod_defect, 0.0)
            # periodic sample identity, wrapped representative
            if dim == 1:
                fper = lambda y: np.sin(2 * np.pi * (y - np.floor(y)))
                w = sample(lambda x: fper(x / eps), grid, bc="free")
                expected = fper(np.arange(m + 1) / m)
            else:
                fper = lambda y1, y2: (np.sin(2 * np.pi * (y1 - np.floor(y1)))
                                       + np.cos(2 * np.pi * (y2 - np.floor(y2))))
                w = sample(lambda x, y: fper(x / eps, y / eps), grid, bc="free")
                yn = np.arange(m + 1) / m
                expected = fper(*np.meshgrid(yn, yn, indexing="ij"))
            T = unfold(w, dec, m)
            worst = 0.0
            for xi in dec.xi_set:
                rel = tuple(int(xi[ax] - dec.lattice_origin[ax]) for ax in range(dim))
                worst = max(worst, float(np.max(np.abs(T.values[rel] - expected))))
            out.check(f"periodic-sample-identity {dim}d eps={eps}", worst, 0.0)
            # mean value composition on cellwise constants; the y-average of
            # a constant block rounds at odd multiples, so the identity holds
            # to correct rounding rather than bitwise
            const = rng.uniform(1.0, 2.0, dec.lattice_shape)
            fine = np.repeat(const, m, axis=0)
            if dim == 2:
                fine = np.repeat(fine, m, axis=1)
            wc = GridField(grid, fine, centering="cell")
            comp = mean_value(unfold(wc, dec, m))
            out.check(f"mean-value-composition {dim}d eps={eps}",
                      float(np.max(np.abs(comp.values - fine))), 1e-15 * 2.0)
    # boundary-layer bookkeeping on the misaligned-epsilon strip
    g10 = Grid(unit_box(1), (10,))
    dec03 = decompose(unit_box(1), 0.3, g10)
    out.check("strip measure eps=0.3", abs(dec03.measure_lambda - 0.1), 1e-12)
    w10 = sample(lambda x: 1.0 + 0.0 * x, g10, bc="free")
    rep = modular_identity_report(B, w10, dec03)
    out.check("strip lambda gap eps=0.3", abs(rep.lambda_gap - 0.1), 1e-12)
    return out.report("unfold")


def suite_two_scale(config=None):
    """Strong-convergence, pairing, dictionary and manufactured checks."""
    config = config or {}
    B = power(2)
    out = _Assertions()
    box = unit_box(1)
    res = 256
    grid = Grid(box, (res,))
    # the half sine avoids period-epsilon resonance, which would tie the
    # Luxemburg distances between the first two ladder rungs
    lipschitz_fields = [
        ("abs-kink", lambda x: np.abs(x - 0.3), 1.0),
        ("half-sine", lambda x: np.sin(np.pi * x), np.pi),
        ("affine", lambda x: 0.5 * x + 0.2, 0.5),
        ("exp", lambda x: np.exp(x), np.e),
        ("tent", lambda x: np.minimum(x, 1.0 - x), 1.0),
    ]
    ladder = (0.5, 0.25, 0.125, 0.0625)
    for name, fn, lip in lipschitz_fields:
        w = sample(fn, grid, bc="free")
        prev = None
        for eps in ladder:
            dec = decompose(box, eps)
            rep = strong_convergence_report(w, dec, int(round(eps * res)), B)
            out.check(f"sup-gap {name} eps={eps}", rep["sup_gap"],
                      lip * np.sqrt(1) * eps)
            if prev is not None:
                out.check(f"lux-decreasing {name} eps={eps}",
                          rep["luxemburg_distance"], prev,
                          ok=rep["luxemburg_distance"] < prev)
            prev = rep["luxemburg_distance"]

    # pairing oracles
    vres = 512
    vg = Grid(box, (vres,))
    v = sample_cells(lambda x: np.sin(2 * np.pi * x / 0.125) ** 2, vg)
    pair = two_scale_pairing(v, lambda x, y: np.ones(x.shape[:-1]), 0.125)
    out.check("pairing sin^2 -> 1/2", abs(pair - 0.5), 1e-12)
    errs = []
    for eps in (0.25, 0.125, 0.0625, 0.03125):
        v = sample_cells(lambda x: np.sin(2 * np.pi * x / eps), vg)
        phi = lambda x, y: x[..., 0] ** 2 * np.sin(2 * np.pi * y[..., 0])
        got = two_scale_pairing(v, phi, eps)
        want = limit_pairing(lambda x, y: np.sin(2 * np.pi * y[..., 0]), phi, box)
        errs.append(abs(got - want))
    order = np.mean([np.log2(a / b) for a, b in zip(errs[:-1], errs[1:])])
    out.check("pairing order g(x)sin", 0.9, order, ok=order >= 0.9)

    # weak limit of g(x) f(x/eps) against the dictionary surrogate
    gfun = lambda x: 1.0 + 0.5 * x
    ffun = lambda y: np.cos(2 * np.pi * y)
    phi = lambda x, y: x[..., 0] * np.sin(2 * np.pi * y[..., 0])
    want = limit_pairing(lambda x, y: gfun(x[..., 0]) * ffun(y[..., 0]), phi, box)
    errs = []
    for eps in (0.25, 0.125, 0.0625, 0.03125):
        v = sample_cells(lambda x: gfun(x) * ffun(x / eps - np.floor(x / eps)), vg)
        errs.append(abs(two_scale_pairing(v, phi, eps) - want))
    order = np.mean([np.log2(a / b) for a, b in zip(errs[:-1], errs[1:])])
    out.check("weak-limit order g(x)f(x/eps)", 0.9, order, ok=order >= 0.9)

    # mean value of the unfolded sequence tends to g(x) * mean(1 + f) = g(x)
    fmean = 1.0
    errs = []
    for eps in (0.25, 0.125, 0.0625, 0.03125):
        m = int(round(eps * vres))
        v = sample_cells(lambda x: gfun(x) * (1.0 + ffun(x / eps - np.floor(x / eps))),
                         vg)
        dec = decompose(box, eps)
        mv = mean_value(unfold(v, dec, m))
        centers = vg.cell_centers()[..., 0]
        target = gfun(centers) * fmean
        errs.append(float(np.max(np.abs(mv.values - target))))
    order = np.mean([np.log2(a / b) for a, b in zip(errs[:-1], errs[1:])])
    out.check("mean-value weak limit order", 0.9, order, ok=order >= 0.9)

    # manufactured unfolding checks
    for name, case in manufactured_cases().items():
        rep = manufactured_unfolding_check(case)
        if case.exact_reindex:
            worst = max(r["reindex_defect"] for r in rep.rows)
            out.check(f"manufactured reindex {name}", worst, 1e-10)
        else:
            out.check(f"manufactured order {name}", 0.9, rep.observed_order,
                      ok=rep.observed_order >= 0.9)
            errors = [r["luxemburg_error"] for r in rep.rows]
            out.check(f"manufactured decreasing {name}", errors[-1], errors[0],
                      ok=all(b < a for a, b in zip(errors[:-1], errors[1:])))
    return out.report("two-scale")


def suite_sweep(config=None):
    """Affine sweeps against cell values and anchored Dirichlet data."""
    config = config or {}
    cfg = SolverConfig(restarts=int(config.get("restarts", 2)),
                       seed=int(config.get("seed", 0)))
    res = int(config.get("resolution", 32))
    out = _Assertions()
    spec = _two_phase_quadratic()
    sweep = eps_sweep_affine(spec, 1.0, (0.5, 0.25, 0.125), res, cfg)
    for row in sweep.rows:
        out.check(f"sweep-crosscheck eps={row['epsilon']}",
                  row["crosscheck_defect"], 1e-10)
    gaps = [r["gap"] for r in sweep.rows]
    noise = 1e-4 * (1.0 + abs(sweep.reference))
    out.check("sweep gaps non-increasing", max(np.diff(gaps)) if len(gaps) > 1 else 0.0,
              noise)
    out.check("sweep gap vs harmonic mean", abs(sweep.rows[-1]["discrete_min"] - 1.6),
              0.016)

    convex = IntegrandSpec(coefficient_constant(1.0), potential_power(2),
                           growth_B=power(2), growth_M=1.0, growth_a_bound=0.0)
    sweep_c = eps_sweep_affine(convex, 1.5, (0.5, 0.25), res, cfg, reference=1.5 ** 2)
    for row in sweep_c.rows:
        out.check(f"constant-in-y exact eps={row['epsilon']}", abs(row["gap"]), 1e-7)

    table = hom_table(spec, np.arange(-2.0, 2.25, 0.25), t_ladder=(1, 2),
                      resolution=res, config=cfg)
    u, du = datum_quadratic()
    rep = dirichlet_minimize(spec, u, du, table, (0.5, 0.25, 0.125),
                             resolution=res, config=cfg)
    out.check("dirichlet x^2/2 gap at eps=1/8", rep.rows[-1]["rel_gap"], 0.05)

    ua, dua = datum_affine([[1.0]])
    rep_a = dirichlet_minimize(spec, ua, dua, table, (0.5, 0.25), resolution=res,
                               config=cfg)
    sweep_a = eps_sweep_affine(spec, 1.0, (0.5, 0.25), res, cfg, reference=1.6)
    for ra, rs in zip(rep_a.rows, sweep_a.rows):
        out.check(f"dirichlet-affine consistency eps={ra['epsilon']}",
                  abs(ra["discrete_min"] - rs["discrete_min"]), 1e-9)
    return out.report("sweep")


def suite_relaxation(config=None):
    """Non-convex relaxation: f and its convex envelope homogenize alike."""
    config = config or {}
    cfg = SolverConfig(restarts=int(config.get("restarts", 6)),
                       seed=int(config.get("seed", 0)))
    t_ladder = tuple(config.get("t_ladder", (1, 2, 4)))
    res = int(config.get("resolution", 64))
    out = _Assertions()

    spec = IntegrandSpec(coefficient_constant(1.0), potential_double_well())
    xi = [0.0, 0.5, -0.5, 1.0, -1.0, 1.5, -1.5]
    rep = relaxation_equivalence_check(spec, xi, t_ladder, res, cfg)
    env = convex_envelope_1d(potential_double_well(), (-3.5, 3.5), 2801)
    by_xi = {r["xi"]: r for r in rep.rows}
    out.check("double-well f_hom(0)", by_xi[0.0]["f_hom_raw"], 1e-2)
    for x, r in by_xi.items():
        want = float(env(x))
        out.check(f"envelope match xi={x}", abs(r["f_hom_raw"] - want),
                  max(0.02 * abs(want), 1e-2))
        out.check(f"pipelines agree xi={x}", r["rel_diff"], 0.02)

    convex = IntegrandSpec(coefficient_constant(1.0), potential_power(2))
    rep_c = relaxation_equivalence_check(convex, [0.0, 1.0, -2.0], (1, 2), res, cfg)
    for r in rep_c.rows:
        out.check(f"convex identity xi={r['xi']}", r["abs_diff"],
                  1e-6 * (1.0 + abs(r["f_hom_raw"])))

    two_phase = IntegrandSpec(coefficient_piecewise([0.0, 0.5], [1.0, 2.0]),
                              potential_double_well())
    rep2 = relaxation_equivalence_check(two_phase, [0.0, 0.5, 1.5], t_ladder, res, cfg)
    for r in rep2.rows:
        out.check(f"two-phase pipelines agree xi={r['xi']}", r["rel_diff"], 0.02)
    return out.report("relaxation")


def run_suite(name, config=None):
    if name == "unfold":
        return suite_unfold(config)
    if name == "two-scale":
        return suite_two_scale(config)
    if name == "sweep":
        return suite_sweep(config)
    if name == "relaxation":
        return suite_relaxation(config)
    raise KeyError(name)
