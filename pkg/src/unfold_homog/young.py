"""Young-function calculus.

A Young function is a continuous convex B : [0, inf) -> [0, inf) with
B(0) = 0, B(t)/t -> 0 as t -> 0+ and B(t)/t -> inf as t -> inf.  It plays
the role of the growth profile t^p in all norms and growth bounds of the
package.  This module provides

* closed-form families (``power``, ``power_log``, ``exp_minus_linear``)
  and a generic ``sampled_density`` kind (density b sampled on knots,
  B obtained by exact integration of the monotone linear interpolant),
* the complementary (convex-conjugate) function,
* finite-scan doubling certificates for the Delta_2 and Nabla_2
  conditions (evidence on a scan range, not proofs),
* modulars and Luxemburg norms of discrete fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CertificateError,
    DataError,
    DegenerateYoungFunctionError,
    DomainError,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# Young functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class YoungFunction:
    """A Young function given by a closed-form kind or a sampled density.

    ``kind`` is one of ``"power"`` (params (p,) or (p, scale) for
    scale * t**p), ``"power_log"`` (params (p,) for t**p * log(e + t)),
    ``"exp_minus_linear"`` (exp(t) - t - 1, the classic non-doubling
    example) or ``"sampled_density"`` (knots/density arrays).

    For the sampled kind the density is interpolated linearly between
    knots and B is the exact integral of the interpolant, which keeps B
    convex whenever the density samples are nondecreasing.
    """

    kind: str
    params: tuple = ()
    knots: np.ndarray | None = field(default=None, repr=False)
    density_samples: np.ndarray | None = field(default=None, repr=False)
    _cumulative: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("power", "power_log", "exp_minus_linear", "sampled_density"):
            raise DomainError(f"unknown Young function kind {self.kind!r}")
        if self.kind == "sampled_density":
            k = np.asarray(self.knots, dtype=float)
            b = np.asarray(self.density_samples, dtype=float)
            if k.ndim != 1 or k.shape != b.shape or k.size < 2:
                raise DataError("sampled density needs matching 1-d knot/density arrays")
            if k[0] != 0.0 or np.any(np.diff(k) <= 0):
                raise DataError("knots must start at 0 and increase strictly")
            if np.any(b < 0) or not np.all(np.isfinite(b)) or not np.all(np.isfinite(k)):
                raise DataError("density samples must be finite and nonnegative")
            scale = max(float(b[-1]), 1.0)
            if np.any(np.diff(b) < -1e-12 * scale):
                raise DataError("density samples must be nondecreasing")
            b = np.maximum.accumulate(b)  # clean float dust
            # exact integral of the piecewise-linear density at the knots
            seg = 0.5 * (b[1:] + b[:-1]) * np.diff(k)
            cum = np.concatenate([[0.0], np.cumsum(seg)])
            object.__setattr__(self, "knots", k)
            object.__setattr__(self, "density_samples", b)
            object.__setattr__(self, "_cumulative", cum)

    # -- evaluation ---------------------------------------------------------

    def value(self, t):
        """B(t) for scalar or array t >= 0."""
        t = _check_domain(t)
        if self.kind == "power":
            p, scale = self._power_params()
            return scale * t ** p
        if self.kind == "power_log":
            (p,) = self.params
            return t ** p * np.log(math.e + t)
        if self.kind == "exp_minus_linear":
            with np.errstate(over="ignore"):
                return np.expm1(t) - t
        return self._sampled_value(t)

    def density(self, t):
        """The right-continuous density b with B(t) = integral of b on [0, t]."""
        t = _check_domain(t)
        if self.kind == "power":
            p, scale = self._power_params()
            with np.errstate(divide="ignore", invalid="ignore"):
                out = scale * p * np.where(t > 0, t, 1.0) ** (p - 1.0)
            return np.where(t > 0, out, 0.0 if p < 1 else (0.0 if p > 1 else scale * p))
        if self.kind == "power_log":
            (p,) = self.params
            out = np.where(t > 0, t, 1.0)
            out = p * out ** (p - 1.0) * np.log(math.e + t) + t ** p / (math.e + t)
            return np.where(t > 0, out, 0.0)
        if self.kind == "exp_minus_linear":
            with np.errstate(over="ignore"):
                return np.expm1(t)
        return self._sampled_density(t)

    def _power_params(self):
        if len(self.params) == 1:
            return float(self.params[0]), 1.0
        p, scale = self.params
        return float(p), float(scale)

    def _sampled_value(self, t):
        k, b, cum = self.knots, self.density_samples, self._cumulative
        idx = np.clip(np.searchsorted(k, t, side="right") - 1, 0, k.size - 2)
        slope = (b[idx + 1] - b[idx]) / (k[idx + 1] - k[idx])
        s = t - k[idx]
        bt = b[idx] + slope * s  # linear extension beyond the last knot
        return cum[idx] + 0.5 * (b[idx] + bt) * s

    def _sampled_density(self, t):
        k, b = self.knots, self.density_samples
        idx = np.clip(np.searchsorted(k, t, side="right") - 1, 0, k.size - 2)
        slope = (b[idx + 1] - b[idx]) / (k[idx + 1] - k[idx])
        return np.maximum(b[idx] + slope * (t - k[idx]), 0.0)

    # -- validation ---------------------------------------------------------

    def validate(self, t_min=1e-6, t_max=1e6, samples=121):
        """Check the Young-function axioms on a geometric ladder.

        Raises DataError on violation.  The superlinearity limits are
        certified by endpoint values and a monotone trend of B(t)/t on
        the ladder; this is scan evidence, not a proof.
        """
        if float(np.asarray(self.value(0.0))) != 0.0:
            raise DataError("B(0) must be 0")
        t = np.geomspace(t_min, t_max, samples)
        with np.errstate(over="ignore"):
            vals = np.asarray(self.value(t), dtype=float)
        if np.any(vals < 0):
            raise DataError("B must be nonnegative")
        finite = np.isfinite(vals)
        if np.any(np.diff(vals[finite]) < -1e-12 * np.abs(vals[finite][1:])):
            raise DataError("B must be nondecreasing")
        ratio = vals / t
        fin_ratio = ratio[np.isfinite(ratio)]
        if fin_ratio[0] > 0.5:
            raise DataError("B(t)/t does not vanish at the small end of the scan")
        if fin_ratio.size and fin_ratio[-1] < 2.0 and finite.all():
            raise DataError("B(t)/t does not diverge at the large end of the scan")
        drops = np.diff(fin_ratio)
        if np.any(drops < -1e-9 * np.maximum(fin_ratio[1:], 1e-300)):
            raise DataError("B(t)/t is not monotone on the scan ladder")
        # convexity spot check (midpoint inequality on ladder pairs)
        a, b = t[:-2], t[2:]
        mid = 0.5 * (a + b)
        with np.errstate(over="ignore"):
            lhs = np.asarray(self.value(mid), dtype=float)
            rhs = 0.5 * (np.asarray(self.value(a), dtype=float)
                         + np.asarray(self.value(b), dtype=float))
        ok = np.isfinite(lhs) & np.isfinite(rhs)
        if np.any(lhs[ok] > rhs[ok] + 1e-10 * np.maximum(rhs[ok], 1.0)):
            raise DataError("B fails the midpoint convexity check")
        if self.kind == "sampled_density":
            self._check_density_consistency()
        return True

    def _check_density_consistency(self, refine=16, rtol=1e-8):
        """Independent quadrature of the density must reproduce B at the knots."""
        k, b = self.knots, self.density_samples
        total = 0.0
        for i, target in enumerate(self._cumulative):
            if i > 0:
                sub = np.linspace(k[i - 1], k[i], refine + 1)
                total += np.trapezoid(self._sampled_density(sub), sub)
            if abs(total - target) > rtol * max(abs(target), 1e-12):
                raise DataError("sampled density does not integrate back to B")

    # -- serialization ------------------------------------------------------

    def to_json(self):
        obj = {"kind": self.kind, "params": list(self.params)}
        if self.kind == "sampled_density":
            obj["knots"] = self.knots.tolist()
            obj["density"] = self.density_samples.tolist()
        return obj

    @staticmethod
    def from_json(obj):
        kind = obj["kind"]
        if kind == "sampled_density":
            return YoungFunction(kind, (), np.asarray(obj["knots"], dtype=float),
                                 np.asarray(obj["density"], dtype=float))
        return YoungFunction(kind, tuple(float(x) for x in obj.get("params", ())))


def power(p, scale=1.0):
    """B(t) = scale * t**p with p > 1."""
    if not p > 1.0:
        raise DomainError("power kind requires p > 1")
    if not scale > 0.0:
        raise DomainError("power kind requires scale > 0")
    return YoungFunction("power", (float(p),) if scale == 1.0 else (float(p), float(scale)))


def power_log(p):
    """B(t) = t**p * log(e + t)."""
    if not p > 1.0:
        raise DomainError("power_log kind requires p > 1")
    return YoungFunction("power_log", (float(p),))


def exp_minus_linear():
    """B(t) = exp(t) - t - 1; superlinear but not doubling at infinity."""
    return YoungFunction("exp_minus_linear")


def sampled_density(knots, density):
    return YoungFunction("sampled_density", (), np.asarray(knots, dtype=float),
                         np.asarray(density, dtype=float))


def eval_B(B: YoungFunction, t):
    """Evaluate B(t); rejects negative or non-finite arguments."""
    return B.value(t)


def _check_domain(t):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)) or np.any(t < 0):
        raise DomainError("Young functions are defined for finite t >= 0 only")
    return t


# ---------------------------------------------------------------------------
# Complementary function (convex conjugate)
# ---------------------------------------------------------------------------

def complementary(B: YoungFunction, t_grid=None, s_grid=None, refine_iters=80):
    """The complementary Young function  sup_{s >= 0} (s*t - B(s)).

    The supremum is bracketed by the slope breakpoints of B on a geometric
    s-grid and then sharpened per knot by vectorized golden-section search,
    so the conjugate density (the argmax) is recovered to near machine
    precision.  The returned sampled-density function is lifted by the
    measured chord gaps of the density so that it dominates the true
    conjugate pointwise on the knot span: the Young inequality
    s*t <= B(s) + ~B(t) then holds with no negative slack.

    Raises CertificateError when the requested t range reaches slopes the
    s-grid cannot certify (the sup has not stabilized on the scan range).
    """
    if s_grid is None:
        s_grid = np.geomspace(1e-6, 1e6, 100_000)
    s_grid = np.asarray(s_grid, dtype=float)
    with np.errstate(over="ignore"):
        Bs = np.asarray(B.value(s_grid), dtype=float)
    slopes = np.diff(Bs) / np.diff(s_grid)
    slopes = np.maximum.accumulate(slopes)  # convexity up to float dust
    finite_top = slopes[np.isfinite(slopes)]
    if finite_top.size == 0:
        raise CertificateError("B overflows on the whole s-grid")
    slope_top = float(finite_top[-1])

    if t_grid is None:
        pos = slopes[slopes > 0]
        if pos.size == 0:
            raise CertificateError("B has no positive slope on the s-grid")
        t_lo = max(float(pos[0]), 1e-12)
        t_hi = 0.5 * slope_top
        if not t_hi > t_lo:
            raise CertificateError("conjugate sup does not stabilize on the scan range")
        t_grid = np.geomspace(t_lo, t_hi, 16_384)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] <= 0 or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t grid must be positive and strictly increasing")
    if t_grid[-1] >= slope_top:
        raise CertificateError(
            "conjugate sup does not stabilize on the scan range: "
            f"t={t_grid[-1]:g} exceeds the certified slope {slope_top:g}")

    knots = t_grid
    mids = 0.5 * (knots[:-1] + knots[1:])
    dens_knots = _conjugate_argmax(B, s_grid, slopes, knots, refine_iters)
    dens_mids = _conjugate_argmax(B, s_grid, slopes, mids, refine_iters)

    # dominate the (possibly concave) true density: lift knot values by the
    # measured chord gap at interval midpoints, with a safety factor
    gap = np.maximum(dens_mids - 0.5 * (dens_knots[:-1] + dens_knots[1:]), 0.0)
    lift = np.zeros_like(dens_knots)
    lift[:-1] = np.maximum(lift[:-1], 1.5 * gap)
    lift[1:] = np.maximum(lift[1:], 1.5 * gap)
    dens = np.maximum.accumulate(dens_knots + lift)

    return sampled_density(np.concatenate([[0.0], knots]),
                           np.concatenate([[0.0], dens]))


def _conjugate_argmax(B, s_grid, slopes, t, iters):
    """argmax_{s in [s_grid range]} (s*t - B(s)), vectorized over t."""
    j = np.clip(np.searchsorted(slopes, t), 1, s_grid.size - 2)
    lo = s_grid[j - 1]
    hi = s_grid[j + 1]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(iters):
            m1 = hi - _GOLDEN * (hi - lo)
            m2 = lo + _GOLDEN * (hi - lo)
            f1 = m1 * t - np.asarray(B.value(m1), dtype=float)
            f2 = m2 * t - np.asarray(B.value(m2), dtype=float)
            move_lo = ~(f1 > f2)  # NaN-safe: treat non-finite f1 as smaller
            lo = np.where(move_lo, m1, lo)
            hi = np.where(move_lo, hi, m2)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Doubling certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthCertificate:
    """Finite-scan evidence for a doubling-type condition on B.

    ``condition`` is ``"delta2"`` (B(2t) <= alpha B(t) for t >= t0) or
    ``"nabla2"`` (B(t) <= B(beta t) / (2 beta) for t >= t0).  ``passed``
    means the defining inequality held at every scanned point with a
    finite constant; it is evidence on [t0, t_max], not a proof.
    """

    condition: str
    t0: float
    alpha_or_beta: float
    sup_ratio_observed: float
    passed: bool
    scan_range: tuple
    samples: int

    def to_json(self):
        return {
            "condition": self.condition,
            "t0": self.t0,
            "alpha_or_beta": self.alpha_or_beta,
            "sup_ratio_observed": self.sup_ratio_observed,
            "passed": self.passed,
            "scan_range": list(self.scan_range),
            "samples": self.samples,
        }


def delta2_certificate(B: YoungFunction, t0=1.0, t_max=1e6, samples=800):
    """Scan B(2t)/B(t) on a geometric ladder and certify boundedness.

    ``passed`` is False when the ratio sequence diverges monotonically
    across the last decade of the scan (doubling fails at infinity).
    """
    if not (0 < t0 < t_max):
        raise DomainError("need 0 < t0 < t_max")
    t = np.geomspace(t0, t_max, samples)
    with np.errstate(over="ignore"):
        num = np.asarray(B.value(2.0 * t), dtype=float)
        den = np.asarray(B.value(t), dtype=float)
    if np.any(den == 0.0):
        raise DegenerateYoungFunctionError("B vanishes at scanned t > 0")
    with np.errstate(invalid="ignore"):
        ratio = num / den  # inf/inf occurs once B overflows; counts as divergence
    alpha = float(np.max(ratio[np.isfinite(ratio)])) if np.any(np.isfinite(ratio)) \
        else math.inf
    if np.any(~np.isfinite(ratio)):
        alpha = math.inf
    last = ratio[t >= t_max / 10.0]
    finite_last = last[np.isfinite(last)]
    diverging = bool(np.any(~np.isfinite(last)))
    if not diverging and finite_last.size >= 2:
        increasing = np.all(np.diff(finite_last) > 0)
        grew = finite_last[-1] > finite_last[0] * (1.0 + 1e-3)
        diverging = bool(increasing and grew)
    return GrowthCertificate("delta2", float(t0), alpha, alpha,
                             not diverging, (float(t0), float(t_max)), int(samples))


def nabla2_certificate(B: YoungFunction, t0=1.01, t_max=1e6, beta_grid=None, samples=800):
    """Search a beta ladder for B(t) <= B(beta t)/(2 beta) on the whole scan.

    Records the smallest passing beta; ``passed`` is False when no beta on
    the grid satisfies the inequality at every scanned t.  The condition is
    stated for thresholds t0 > 1, which is enforced here.
    """
    if not t0 > 1.0:
        raise DomainError("nabla2 scans require t0 > 1")
    if not t_max > t0:
        raise DomainError("need t_max > t0")
    if beta_grid is None:
        beta_grid = np.geomspace(1.01, 1e4, 240)
    beta_grid = np.asarray(beta_grid, dtype=float)
    if np.any(beta_grid <= 1.0):
        raise DomainError("beta grid must lie in (1, inf)")
    t = np.geomspace(t0, t_max, samples)
    with np.errstate(over="ignore"):
        Bt = np.asarray(B.value(t), dtype=float)
    best_worst = math.inf
    for beta in np.sort(beta_grid):
        with np.errstate(over="ignore", invalid="ignore"):
            Bbt = np.asarray(B.value(beta * t), dtype=float)
            worst = np.max(np.where(np.isfinite(Bbt), 2.0 * beta * Bt / Bbt, 0.0))
        best_worst = min(best_worst, float(worst))
        if worst <= 1.0 + 1e-12:
            return GrowthCertificate("nabla2", float(t0), float(beta), float(worst),
                                     True, (float(t0), float(t_max)), int(samples))
    return GrowthCertificate("nabla2", float(t0), math.nan, best_worst,
                             False, (float(t0), float(t_max)), int(samples))


# ---------------------------------------------------------------------------
# Modulars and Luxemburg norms
# ---------------------------------------------------------------------------

def _quadrature_samples(u, weight):
    """Magnitudes and quadrature weights of a field-like object.

    Accepts anything exposing ``quadrature_samples()`` (GridField,
    UnfoldedField, weighted sample bundles) or a raw array plus an
    explicit scalar/array weight.
    """
    if hasattr(u, "quadrature_samples"):
        mags, w = u.quadrature_samples()
    else:
        if weight is None:
            raise DataError("raw arrays need an explicit quadrature weight")
        mags, w = np.abs(np.asarray(u, dtype=float)).ravel(), weight
    mags = np.asarray(mags, dtype=float)
    if not np.all(np.isfinite(mags)):
        raise DataError("field contains non-finite values")
    return mags, w


def modular(B: YoungFunction, u, weight=None):
    """The modular  integral of B(|u|)  by the field's own quadrature rule.

    Zero exactly when u vanishes identically.
    """
    mags, w = _quadrature_samples(u, weight)
    return float(np.sum(B.value(mags) * w))


def luxemburg_norm(B: YoungFunction, u, tol=1e-10, weight=None, max_doublings=600):
    """inf { k > 0 : modular(u / k) <= 1 }, by bisection on the modular.

    Returns k with |modular(u/k) - 1| <= tol, or 0 for the zero field
    (the infimum is then not attained and the norm is 0 by convention).
    The bracket is grown geometrically from k = 1; failure to bring the
    modular below 1 before the growth bound signals a non-finite norm.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    mags, w = _quadrature_samples(u, weight)
    if not np.any(mags > 0):
        return 0.0

    def mod_at(k):
        return float(np.sum(B.value(mags / k) * w))

    k_hi = 1.0
    m_hi = mod_at(k_hi)
    doublings = 0
    while m_hi > 1.0:
        k_hi *= 2.0
        m_hi = mod_at(k_hi)
        doublings += 1
        if doublings > max_doublings:
            raise CertificateError("luxemburg norm did not become finite on the bracket")
    if abs(m_hi - 1.0) <= tol:
        return k_hi
    k_lo = k_hi
    m_lo = m_hi
    while m_lo <= 1.0:
        k_lo *= 0.5
        with np.errstate(over="ignore"):
            m_lo = mod_at(k_lo)
        doublings += 1
        if doublings > max_doublings:  # pragma: no cover - needs denormal fields
            raise CertificateError("luxemburg bracket collapsed below float range")
    for _ in range(400):
        k = 0.5 * (k_lo + k_hi)
        with np.errstate(over="ignore"):
            m = mod_at(k)
        if abs(m - 1.0) <= tol:
            return k
        if m > 1.0:
            k_lo = k
        else:
            k_hi = k
        if (k_hi - k_lo) <= 1e-16 * k_hi:
            return 0.5 * (k_lo + k_hi)
    return 0.5 * (k_lo + k_hi)
