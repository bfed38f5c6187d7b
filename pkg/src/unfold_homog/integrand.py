"""Periodic energy densities f(y, xi) and their growth certificates.

Built-in integrands are separable: f(y, xi) = a(y) * W(xi) with a
Y-periodic coefficient a bounded away from zero and a potential W from a
small structured family (power, double well, quadratic form, sampled
piecewise-linear).  Structured built-ins keep growth verification and
analytic gradients trustworthy; there is no runtime expression parser.

The scalar convex-envelope oracle lives here too: in the scalar
one-dimensional case the quasiconvex envelope coincides with the convex
envelope, computed as the lower convex hull of samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError
from .young import YoungFunction


# ---------------------------------------------------------------------------
# Coefficients a(y)
# ---------------------------------------------------------------------------

class Coefficient:
    """Y-periodic coefficient; subclasses implement _eval on wrapped y."""

    kind = "abstract"

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return self._eval(y - np.floor(y))

    def _eval(self, y):  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def a_min(self):
        raise NotImplementedError

    @property
    def a_max(self):
        raise NotImplementedError


class ConstantCoefficient(Coefficient):
    kind = "constant"

    def __init__(self, value=1.0):
        if not value > 0:
            raise DomainError("coefficient must be positive")
        self.value = float(value)

    def _eval(self, y):
        return np.full(y.shape[:-1], self.value)

    a_min = property(lambda self: self.value)
    a_max = property(lambda self: self.value)

    def to_json(self):
        return {"kind": "constant", "value": self.value}


class PiecewiseCoefficient(Coefficient):
    """Piecewise-constant in the first cell coordinate (a laminate).

    ``breaks`` are the phase boundaries in [0, 1) starting at 0;
    ``values`` the per-phase values.  Grids aligned to the breaks sample
    it exactly cellwise-constant.
    """

    kind = "piecewise"

    def __init__(self, breaks, values):
        breaks = np.asarray(breaks, dtype=float)
        values = np.asarray(values, dtype=float)
        if breaks.ndim != 1 or breaks.shape != values.shape:
            raise DataError("breaks and values must be matching 1-d arrays")
        if breaks[0] != 0.0 or np.any(np.diff(breaks) <= 0) or breaks[-1] >= 1.0:
            raise DataError("breaks must start at 0 and increase within [0, 1)")
        if np.any(values <= 0):
            raise DomainError("coefficient must be positive")
        self.breaks = breaks
        self.values = values

    def _eval(self, y):
        idx = np.searchsorted(self.breaks, y[..., 0], side="right") - 1
        return self.values[idx]

    a_min = property(lambda self: float(np.min(self.values)))
    a_max = property(lambda self: float(np.max(self.values)))

    def to_json(self):
        return {"kind": "piecewise", "breaks": self.breaks.tolist(),
                "values": self.values.tolist()}


class TrigCoefficient(Coefficient):
    """a(y) = base + amplitude * cos(2 pi freq y_1), base > |amplitude|."""

    kind = "trig"

    def __init__(self, base=2.0, amplitude=1.0, freq=1):
        if not base > abs(amplitude):
            raise DomainError("trig coefficient needs base > |amplitude|")
        self.base = float(base)
        self.amplitude = float(amplitude)
        self.freq = int(freq)

    def _eval(self, y):
        return self.base + self.amplitude * np.cos(2.0 * np.pi * self.freq * y[..., 0])

    a_min = property(lambda self: self.base - abs(self.amplitude))
    a_max = property(lambda self: self.base + abs(self.amplitude))

    def to_json(self):
        return {"kind": "trig", "base": self.base, "amplitude": self.amplitude,
                "freq": self.freq}


def coefficient_constant(value=1.0):
    return ConstantCoefficient(value)


def coefficient_piecewise(breaks, values):
    return PiecewiseCoefficient(breaks, values)


def coefficient_trig(base=2.0, amplitude=1.0, freq=1):
    return TrigCoefficient(base, amplitude, freq)


def coefficient_from_json(obj):
    kind = obj["kind"]
    if kind == "constant":
        return ConstantCoefficient(obj.get("value", 1.0))
    if kind == "piecewise":
        return PiecewiseCoefficient(obj["breaks"], obj["values"])
    if kind == "trig":
        return TrigCoefficient(obj.get("base", 2.0), obj.get("amplitude", 1.0),
                               obj.get("freq", 1))
    raise DataError(f"unknown coefficient kind {kind!r}")


# ---------------------------------------------------------------------------
# Potentials W(xi)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSpec:
    """A potential on d x N gradient matrices.

    kinds: ``power`` (|xi|^p, p > 1), ``double_well`` ((|xi|^2 - 1)^2),
    ``quadratic`` (xi^T A xi on the flattened gradient, A symmetric
    positive definite), ``sampled1d`` (piecewise-linear scalar potential,
    linear extension beyond the knot range).
    """

    kind: str
    params: dict

    def __post_init__(self):
        if self.kind == "power":
            if not self.params.get("p", 0) > 1:
                raise DomainError("power potential requires p > 1")
        elif self.kind == "quadratic":
            A = np.asarray(self.params["A"], dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise DataError("quadratic potential needs a square matrix")
            if not np.allclose(A, A.T, atol=1e-12):
                raise DataError("quadratic potential needs a symmetric matrix")
            if np.any(np.linalg.eigvalsh(A) <= 0):
                raise DataError("quadratic potential needs a positive definite matrix")
        elif self.kind == "sampled1d":
            k = np.asarray(self.params["knots"], dtype=float)
            v = np.asarray(self.params["values"], dtype=float)
            if k.ndim != 1 or k.shape != v.shape or k.size < 2:
                raise DataError("sampled potential needs matching knot/value arrays")
            if np.any(np.diff(k) <= 0) or not np.all(np.isfinite(v)):
                raise DataError("sampled potential needs increasing knots, finite values")
        elif self.kind != "double_well":
            raise DomainError(f"unknown potential kind {self.kind!r}")

    def value(self, xi):
        """W evaluated on an array of shape (..., d, N)."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "power":
            p = self.params["p"]
            mag = np.sqrt(np.sum(xi * xi, axis=(-2, -1)))
            return mag ** p
        if self.kind == "double_well":
            mag2 = np.sum(xi * xi, axis=(-2, -1))
            return (mag2 - 1.0) ** 2
        if self.kind == "quadratic":
            A = np.asarray(self.params["A"], dtype=float)
            flat = xi.reshape(xi.shape[:-2] + (-1,))
            return np.einsum("...i,ij,...j->...", flat, A, flat)
        k = np.asarray(self.params["knots"], dtype=float)
        v = np.asarray(self.params["values"], dtype=float)
        s = xi.reshape(xi.shape[:-2])
        return _pwl_value(k, v, s)

    def grad(self, xi):
        """dW/dxi, same shape as xi (analytic for every built-in kind)."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "power":
            p = self.params["p"]
            mag = np.sqrt(np.sum(xi * xi, axis=(-2, -1)))
            with np.errstate(divide="ignore", invalid="ignore"):
                factor = np.where(mag > 0, p * mag ** (p - 2.0), 0.0)
            return factor[..., None, None] * xi
        if self.kind == "double_well":
            mag2 = np.sum(xi * xi, axis=(-2, -1))
            return (4.0 * (mag2 - 1.0))[..., None, None] * xi
        if self.kind == "quadratic":
            A = np.asarray(self.params["A"], dtype=float)
            flat = xi.reshape(xi.shape[:-2] + (-1,))
            g = 2.0 * np.einsum("ij,...j->...i", A, flat)
            return g.reshape(xi.shape)
        k = np.asarray(self.params["knots"], dtype=float)
        v = np.asarray(self.params["values"], dtype=float)
        s = xi.reshape(xi.shape[:-2])
        return _pwl_slope(k, v, s).reshape(xi.shape)

    def to_json(self):
        params = dict(self.params)
        if "A" in params:
            params["A"] = np.asarray(params["A"]).tolist()
        for key in ("knots", "values"):
            if key in params:
                params[key] = np.asarray(params[key]).tolist()
        return {"kind": self.kind, **params}

    @staticmethod
    def from_json(obj):
        kind = obj["kind"]
        params = {k: v for k, v in obj.items() if k != "kind"}
        if kind == "quadratic":
            params["A"] = np.asarray(params["A"], dtype=float)
        return PotentialSpec(kind, params)


def _pwl_value(knots, values, s):
    idx = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, knots.size - 2)
    slope = (values[idx + 1] - values[idx]) / (knots[idx + 1] - knots[idx])
    return values[idx] + slope * (s - knots[idx])


def _pwl_slope(knots, values, s):
    idx = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, knots.size - 2)
    return (values[idx + 1] - values[idx]) / (knots[idx + 1] - knots[idx])


def potential_power(p=2.0):
    return PotentialSpec("power", {"p": float(p)})


def potential_double_well():
    return PotentialSpec("double_well", {})


def potential_quadratic(A):
    return PotentialSpec("quadratic", {"A": np.asarray(A, dtype=float)})


# ---------------------------------------------------------------------------
# Integrand specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegrandSpec:
    """A separable periodic energy density a(y) * W(xi) with growth metadata.

    ``growth_B`` together with (``growth_M``, ``growth_a_bound``) declares
    the two-sided growth bounds B(|xi|) <= f(y, xi) <= a_bound + M B(|xi|)
    that solvers require; ``growth_check`` verifies them on samples.
    A constant coefficient models the y-independent case.
    """

    coefficient: Coefficient
    potential: PotentialSpec
    dims: tuple = (1, 1)  # (N, d)
    growth_B: YoungFunction | None = None
    growth_M: float | None = None
    growth_a_bound: float | None = None

    @property
    def N(self):
        return self.dims[0]

    @property
    def d(self):
        return self.dims[1]

    def to_json(self):
        form = "constant_in_y" if self.coefficient.kind == "constant" else "separable"
        obj = {
            "form": form,
            "coefficient": self.coefficient.to_json(),
            "potential": self.potential.to_json(),
            "dims": {"N": self.N, "d": self.d},
        }
        if self.growth_B is not None:
            obj["growth"] = {"B": self.growth_B.to_json(),
                             "M": self.growth_M, "a_bound": self.growth_a_bound}
        return obj

    @staticmethod
    def from_json(obj):
        growth = obj.get("growth") or {}
        B = YoungFunction.from_json(growth["B"]) if "B" in growth else None
        dims = (int(obj["dims"]["N"]), int(obj["dims"]["d"])) if "dims" in obj else (1, 1)
        return IntegrandSpec(
            coefficient=coefficient_from_json(obj["coefficient"]),
            potential=PotentialSpec.from_json(obj["potential"]),
            dims=dims,
            growth_B=B,
            growth_M=growth.get("M"),
            growth_a_bound=growth.get("a_bound"),
        )


def _as_points(y, N):
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        if N != 1:
            raise DomainError("scalar y only valid in dimension 1")
        return y.reshape(1, 1), True
    if y.shape[-1] != N:
        if y.ndim == 1 and N == 1:
            return y.reshape(-1, 1), False
        raise DomainError(f"y must have trailing axis of length N={N}")
    return y, False


def _as_matrices(xi, d, N):
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        if (d, N) != (1, 1):
            raise DomainError("scalar xi only valid for d = N = 1")
        return xi.reshape(1, 1, 1), True
    if xi.shape[-2:] != (d, N):
        if xi.shape[-1:] == (d * N,):
            return xi.reshape(xi.shape[:-1] + (d, N)), False
        raise DomainError(f"xi must have trailing shape (d, N) = ({d}, {N})")
    return xi, False


def evaluate(spec: IntegrandSpec, y, xi):
    """f(y, xi) = a(y) * W(xi); y is wrapped into the unit cell first."""
    ypts, y_scalar = _as_points(y, spec.N)
    ximat, xi_scalar = _as_matrices(xi, spec.d, spec.N)
    out = spec.coefficient(ypts) * spec.potential.value(ximat)
    if y_scalar and xi_scalar:
        return float(out.reshape(()))
    return out


def grad_xi(spec: IntegrandSpec, y, xi):
    """df/dxi, analytic for the built-in families."""
    ypts, y_scalar = _as_points(y, spec.N)
    ximat, xi_scalar = _as_matrices(xi, spec.d, spec.N)
    out = spec.coefficient(ypts)[..., None, None] * spec.potential.grad(ximat)
    if y_scalar and xi_scalar:
        return float(out.reshape(()))
    return out


def finite_difference_grad_xi(spec: IntegrandSpec, y, xi, rel_step=1e-6):
    """Central-difference fallback gradient, for consistency checks."""
    ximat, _ = _as_matrices(xi, spec.d, spec.N)
    step = rel_step * (1.0 + float(np.sqrt(np.sum(ximat * ximat))))
    out = np.zeros_like(ximat, dtype=float)
    for i in range(spec.d):
        for j in range(spec.N):
            plus = ximat.copy()
            minus = ximat.copy()
            plus[..., i, j] += step
            minus[..., i, j] -= step
            out[..., i, j] = (np.asarray(evaluate(spec, y, plus))
                              - np.asarray(evaluate(spec, y, minus))) / (2 * step)
    return out


# ---------------------------------------------------------------------------
# Growth verification
# ---------------------------------------------------------------------------

@dataclass
class GrowthReport:
    lower_ok: bool
    upper_ok: bool
    worst_lower_margin: float
    worst_upper_margin: float
    declared_M: float | None
    declared_a_bound: float | None
    fitted_M: float
    fitted_a_bound: float
    n_samples: int

    def to_json(self):
        return dict(self.__dict__)


def growth_check(spec: IntegrandSpec, B: YoungFunction, y_samples=None,
                 xi_samples=None, radius=10.0, tol=1e-9):
    """Verify B(|xi|) <= f(y, xi) <= a_bound + M B(|xi|) on sample grids.

    The lower bound has no tunable constant: when it fails the spec is
    rejected for solver use by the callers that gate on it.  For the
    upper bound the report also fits the smallest passing constants
    (a_bound first, then M) when the declared ones fail.
    """
    N, d = spec.N, spec.d
    if y_samples is None:
        per_axis = 64 if N == 1 else 16
        axes = [np.linspace(0.0, 1.0, per_axis, endpoint=False) + 0.5 / per_axis
                for _ in range(N)]
        mesh = np.meshgrid(*axes, indexing="ij")
        y_samples = np.stack(mesh, axis=-1).reshape(-1, N)
    y_samples = np.asarray(y_samples, dtype=float).reshape(-1, N)
    if xi_samples is None:
        xi_samples = _default_xi_samples(d, N, radius)
    xi_samples = np.asarray(xi_samples, dtype=float).reshape(-1, d, N)
    if y_samples.size == 0 or xi_samples.size == 0:
        raise DataError("growth check needs nonempty sample grids")

    f = evaluate(spec, y_samples[:, None, :], xi_samples[None, :, :, :])
    mags = np.sqrt(np.sum(xi_samples * xi_samples, axis=(-2, -1)))
    Bm = np.asarray(B.value(mags), dtype=float)[None, :]

    lower_margin = f - Bm
    worst_lower = float(np.min(lower_margin))
    lower_ok = worst_lower >= -tol

    a_decl = spec.growth_a_bound if spec.growth_a_bound is not None else 0.0
    M_decl = spec.growth_M if spec.growth_M is not None else 1.0
    upper_margin = a_decl + M_decl * Bm - f
    worst_upper = float(np.min(upper_margin))
    upper_ok = worst_upper >= -tol

    small = Bm <= tol
    fitted_a = float(np.max(np.where(small, f, 0.0))) if np.any(small) else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(~small, (f - fitted_a) / np.where(small, 1.0, Bm), 0.0)
    fitted_M = float(max(np.max(need), 0.0))

    return GrowthReport(
        lower_ok=lower_ok,
        upper_ok=upper_ok,
        worst_lower_margin=worst_lower,
        worst_upper_margin=worst_upper,
        declared_M=spec.growth_M,
        declared_a_bound=spec.growth_a_bound,
        fitted_M=fitted_M,
        fitted_a_bound=fitted_a,
        n_samples=int(f.size),
    )


def _default_xi_samples(d, N, radius):
    mags = np.linspace(0.0, radius, 81)
    if d * N == 1:
        dirs = np.array([[[1.0]], [[-1.0]]])
    else:
        rng = np.random.default_rng(12345)
        raw = rng.standard_normal((16, d, N))
        dirs = raw / np.sqrt(np.sum(raw * raw, axis=(-2, -1)))[:, None, None]
    return (mags[:, None, None, None] * dirs[None, :, :, :]).reshape(-1, d, N)


def lipschitz_diagnostic(spec: IntegrandSpec, B: YoungFunction, n_pairs=200, radius=5.0,
                         seed=7):
    """Fit C in |f(y,xi1) - f(y,xi2)| <= C (1 + b(1 + |xi1| + |xi2|)) |xi1 - xi2|.

    A solver diagnostic, not a proven bound: the constant is not explicit
    for general integrands, and the estimate is only known for relaxed
    (quasiconvex) densities.
    """
    rng = np.random.default_rng(seed)
    d, N = spec.d, spec.N
    y = rng.random((n_pairs, N))
    xi1 = rng.uniform(-radius, radius, (n_pairs, d, N))
    xi2 = rng.uniform(-radius, radius, (n_pairs, d, N))
    f1 = evaluate(spec, y, xi1)
    f2 = evaluate(spec, y, xi2)
    m1 = np.sqrt(np.sum(xi1 * xi1, axis=(-2, -1)))
    m2 = np.sqrt(np.sum(xi2 * xi2, axis=(-2, -1)))
    dist = np.sqrt(np.sum((xi1 - xi2) ** 2, axis=(-2, -1)))
    envelope = (1.0 + np.asarray(B.density(1.0 + m1 + m2), dtype=float)) * dist
    keep = envelope > 1e-12
    return float(np.max(np.abs(f1 - f2)[keep] / envelope[keep]))


# ---------------------------------------------------------------------------
# Scalar convex envelope
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Envelope1D:
    """The lower convex hull of sampled potential values (piecewise linear)."""

    knots: np.ndarray
    values: np.ndarray

    def __call__(self, s):
        return _pwl_value(self.knots, self.values, np.asarray(s, dtype=float))

    def slope(self, s):
        return _pwl_slope(self.knots, self.values, np.asarray(s, dtype=float))

    def as_potential(self):
        return PotentialSpec("sampled1d", {"knots": self.knots, "values": self.values})


def convex_envelope_1d(W, bounds, n=401):
    """Convex envelope of a scalar potential on an interval.

    In the scalar d = N = 1 case this is the quasiconvex envelope.  The
    hull is computed by a single sorted monotone-chain sweep over n
    samples; the result is convex, lies below W at every sample and
    touches W on the contact set.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if not (n >= 3 and lo < hi):
        raise DomainError("need n >= 3 samples and lo < hi")
    xs = np.linspace(lo, hi, int(n))
    if isinstance(W, PotentialSpec):
        ys = np.asarray(W.value(xs.reshape(-1, 1, 1)), dtype=float)
    elif isinstance(W, Envelope1D):
        ys = W(xs)
    else:
        ys = np.asarray(W(xs), dtype=float)
    if not np.all(np.isfinite(ys)):
        raise DataError("potential samples must be finite")
    hull = []
    for i in range(xs.size):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = ((xs[a] - xs[o]) * (ys[i] - ys[o])
                     - (ys[a] - ys[o]) * (xs[i] - xs[o]))
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.asarray(hull, dtype=int)
    return Envelope1D(xs[idx], ys[idx])


def relax_potential(spec: IntegrandSpec, bounds, n=2001):
    """Replace the potential by its convex envelope (scalar case only).

    For separable scalar integrands the y-wise quasiconvex envelope of
    a(y) W(xi) is a(y) times the convex envelope of W, since a > 0.
    """
    if (spec.N, spec.d) != (1, 1):
        raise DomainError("potential relaxation is implemented for d = N = 1 only")
    env = convex_envelope_1d(spec.potential, bounds, n)
    return IntegrandSpec(
        coefficient=spec.coefficient,
        potential=env.as_potential(),
        dims=spec.dims,
        growth_B=spec.growth_B,
        growth_M=spec.growth_M,
        growth_a_bound=spec.growth_a_bound,
    )
