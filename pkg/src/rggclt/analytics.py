"""Analytic quantities of the circle geometric graph model.

Exact (quadrature-level) subgraph probabilities, the centering ratio mu_n,
its quadratic expansion, the regime classification, the three standardizing
scalings, the centered triple kernel h, and a localized Monte Carlo
estimator for the second-projection variance sigma2n^2.

All probabilities are evaluated through the density's exact antiderivative,
so agreement with the power-series expansions can be measured down to the
remainder order without quadrature noise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .density import constants as density_constants
from .density import integrate_periodic_adaptive
from .sampler import circle_distance

TRIANGLE_RADIUS_LIMIT = 0.25

# Gauss-Legendre rule for the inner (non-periodic) integrals; the integrands
# are analytic on each subinterval, so a fixed high order is machine-exact.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)

# Reserved replication index for the sigma2n estimation stream, far outside
# the range of experiment replication indices.
SIGMA2N_STREAM_INDEX = 1 << 63


def edge_probability_given(density, r, x1):
    """P(two vertices are adjacent | one of them sits at x1): an arc mass."""
    _check_r(r, 0.5)
    x = np.asarray(x1, dtype=float)
    out = density.arc_mass(x - r, x + r)
    return float(out) if np.ndim(x1) == 0 else out


def edge_probability_expansion(density, r, x1):
    """Quadratic-in-r expansion 2 r f(x1) + f''(x1) r^3 / 3 of the arc mass."""
    return 2.0 * r * density.evaluate(x1) + density.evaluate(x1, 2) * r ** 3 / 3.0


def exact_twopath_probability(density, r):
    """P(vertex 1 is adjacent to both 2 and 3) = E[arc(X)^2], exactly."""
    _check_r(r, 0.5)
    if r == 0.0:
        return 0.0

    def integrand(x):
        return density.arc_mass(x - r, x + r) ** 2 * density.evaluate(x)

    return integrate_periodic_adaptive(integrand, rel_tol=1e-13, abs_tol=0.0)


def twopath_probability_expansion(density, r, mom):
    """Leading expansion 4 r^2 E[f^2] + (4 r^4 / 3) E[f f'']."""
    return 4.0 * r ** 2 * mom.e_f2 + (4.0 * r ** 4 / 3.0) * mom.e_ffpp


def triangle_probability_given(density, r, x1):
    """P(a mutually adjacent triple | one vertex at x1), r <= 1/4.

    Nested representation over the periodic extension g with antiderivative
    G: conditioning on the anchor x1, the second vertex ranges over one side
    of the arc and the third over the overlap of both neighborhoods,

        int_{x1-r}^{x1} g(y) (G(y+r) - G(x1-r)) dy
      + int_{x1}^{x1+r} g(y) (G(x1+r) - G(y-r)) dy.

    Within a half-width 2r <= 0.5 window, circle distances coincide with
    line distances, which is what makes the one-period representation exact.
    """
    _check_r(r, TRIANGLE_RADIUS_LIMIT)
    x = np.atleast_1d(np.asarray(x1, dtype=float))
    half = 0.5 * r
    # side y in [x - r, x]
    ya = x[:, None] + (_GL_NODES - 1.0) * half
    inner_a = density.cumulative(ya + r) - density.cumulative(x - r)[:, None]
    side_a = (density.evaluate(ya) * inner_a) @ _GL_WEIGHTS * half
    # side y in [x, x + r]
    yb = x[:, None] + (_GL_NODES + 1.0) * half
    inner_b = density.cumulative(x + r)[:, None] - density.cumulative(yb - r)
    side_b = (density.evaluate(yb) * inner_b) @ _GL_WEIGHTS * half
    out = side_a + side_b
    return float(out[0]) if np.ndim(x1) == 0 else out


def exact_triangle_probability(density, r):
    """P(three vertices are mutually adjacent), exactly, for r <= 1/4."""
    _check_r(r, TRIANGLE_RADIUS_LIMIT)
    if r == 0.0:
        return 0.0

    def integrand(x):
        return triangle_probability_given(density, r, x) * density.evaluate(x)

    return integrate_periodic_adaptive(integrand, rel_tol=1e-13, abs_tol=0.0)


def triangle_probability_expansion(density, r, mom):
    """Leading expansion 3 r^2 E[f^2] + (5 r^4 / 12) E[(f')^2 + 2 f f'']."""
    return 3.0 * r ** 2 * mom.e_f2 + (5.0 * r ** 4 / 12.0) * mom.e_fp2_2ffpp


@dataclass(frozen=True)
class RegimeConstants:
    """Centering and variance quantities for one (density, r) pair.

    ``sigma2n_sq`` is filled only when a Monte Carlo estimate has been made;
    it carries (estimate, standard_error).
    """
    r: float
    mu_n_exact: float
    mu_n_expansion: float
    sigma1_sq: float
    sigma3n_sq_leading: float
    e_f2: float
    sigma2n_sq: Optional[tuple] = None


def mu_n(density, r, asymptotic_constants=None):
    """Exact centering ratio E[triangle] / E[2-path] plus its expansion.

    The exact ratio tends to 3/4 as r -> 0 for every admissible density and
    equals 3/4 identically for the uniform one.
    """
    _check_r(r, TRIANGLE_RADIUS_LIMIT, exclusive_zero=True)
    const = asymptotic_constants or density_constants(density)
    mom = const.moments
    exact = exact_triangle_probability(density, r) / exact_twopath_probability(density, r)
    expansion = (3.0 + r ** 2 * const.a_f) / (4.0 + r ** 2 * const.b_f)
    return RegimeConstants(
        r=r,
        mu_n_exact=exact,
        mu_n_expansion=expansion,
        sigma1_sq=const.sigma1_sq,
        sigma3n_sq_leading=3.0 * r ** 2 / 8.0 * mom.e_f2,
        e_f2=mom.e_f2,
    )


class RegimeKind(enum.Enum):
    DENSE_I = "dense_i"
    INTERMEDIATE_II = "intermediate_ii"
    SPARSE_III = "sparse_iii"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class RegimeThresholds:
    """Finite-n stand-ins for the asymptotic regime conditions."""
    dense_nr5: float = 10.0
    intermediate_nr: float = 10.0
    intermediate_nr5: float = 0.1
    sparse_nr: float = 0.1
    sparse_n3r2: float = 10.0


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    diagnostics: dict


def classify_regime(n, r, density, thresholds=None, asymptotic_constants=None):
    """Map (n, r, density) to a regime; ambiguity reports as DEGENERATE.

    The dense regime additionally requires sigma1_sq > 0 (it never applies
    to the uniform density); the intermediate regime accepts the uniform
    density regardless of n r^5.
    """
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 0.0 < r <= 0.5:
        raise ValueError(f"r must lie in (0, 0.5], got {r}")
    th = thresholds or RegimeThresholds()
    const = asymptotic_constants or density_constants(density)
    nr5 = n * r ** 5
    nr = n * r
    n3r2 = n ** 3 * r ** 2
    diag = {"n_r5": nr5, "n_r": nr, "n3_r2": n3r2, "sigma1_sq": const.sigma1_sq}
    if nr5 >= th.dense_nr5 and const.sigma1_sq > 0.0:
        kind = RegimeKind.DENSE_I
    elif nr >= th.intermediate_nr and (nr5 <= th.intermediate_nr5 or density.is_uniform):
        kind = RegimeKind.INTERMEDIATE_II
    elif nr <= th.sparse_nr and n3r2 >= th.sparse_n3r2:
        kind = RegimeKind.SPARSE_III
    else:
        kind = RegimeKind.DEGENERATE
    return Regime(kind=kind, diagnostics=diag)


def scaling_factor(kind, n, r, e_f2, sigma1=None, sigma2n=None):
    """Multiplier that standardizes C_n - mu_n in the given regime."""
    if kind == RegimeKind.DENSE_I:
        if sigma1 is None or sigma1 <= 0.0:
            raise ValueError("dense-regime scaling needs sigma1 > 0")
        return 16.0 * math.sqrt(n) * e_f2 / (3.0 * r ** 2 * sigma1)
    if kind == RegimeKind.INTERMEDIATE_II:
        if sigma2n is None or sigma2n <= 0.0:
            raise ValueError("intermediate-regime scaling needs a sigma2n estimate")
        return 2.0 * math.sqrt(2.0) * n * r ** 2 * e_f2 / (3.0 * sigma2n)
    if kind == RegimeKind.SPARSE_III:
        return 8.0 * n * math.sqrt(n) * r * math.sqrt(e_f2) / 3.0
    raise ValueError(f"no standardization in regime {kind}")


def standardize(c_n, n, r, kind, mu_n_exact, e_f2, sigma1=None, sigma2n=None):
    """Standardized statistic z = scaling * (C_n - mu_n)."""
    return scaling_factor(kind, n, r, e_f2, sigma1, sigma2n) * (c_n - mu_n_exact)


def scaling_identity_sides(kind, n, r, e_f2, sigma1=None, sigma2n=None):
    """Both sides of the algebraic identity linking each regime's scaling to
    its projection-level normalization.

    The left side divides the 2-path concentration constant 4 n^3 r^2 E[f^2]
    by the normalization under which the dominant projection sum is
    asymptotically standard normal; the right side is the closed-form
    scaling used by :func:`scaling_factor`.  The two are equal by algebra.
    """
    numerator = 4.0 * n ** 3 * r ** 2 * e_f2
    if kind == RegimeKind.DENSE_I:
        lhs = numerator / (3.0 * n ** 2 * (math.sqrt(n) * r ** 4 * sigma1 / 4.0))
    elif kind == RegimeKind.INTERMEDIATE_II:
        lhs = numerator / (3.0 * n * (2.0 * n * sigma2n / math.sqrt(2.0)))
    elif kind == RegimeKind.SPARSE_III:
        sigma3n_leading = math.sqrt(3.0 * r ** 2 * e_f2 / 8.0)
        lhs = numerator / (math.sqrt(6.0) * n * math.sqrt(n) * sigma3n_leading)
    else:
        raise ValueError(f"no scaling identity in regime {kind}")
    rhs = scaling_factor(kind, n, r, e_f2, sigma1, sigma2n)
    return lhs, rhs


@dataclass(frozen=True)
class KernelValue:
    """Centered triple statistic h = triangle - (mu_n/3) * (sum of 2-paths)."""
    value: float
    triangle: int
    path_indicators: tuple


def kernel_h(x1, x2, x3, r, mu_n_value):
    """Evaluate the centered kernel at three concrete positions."""
    a12 = 1 if circle_distance(x1, x2) <= r else 0
    a13 = 1 if circle_distance(x1, x3) <= r else 0
    a23 = 1 if circle_distance(x2, x3) <= r else 0
    triangle = a12 * a13 * a23
    paths = (a12 * a13, a12 * a23, a13 * a23)
    value = triangle - (mu_n_value / 3.0) * sum(paths)
    return KernelValue(value=value, triangle=triangle, path_indicators=paths)


def _kernel_batch(d12, d13, d23, r, mu_n_value):
    a12 = d12 <= r
    a13 = d13 <= r
    a23 = d23 <= r
    triangle = (a12 & a13 & a23).astype(float)
    paths = ((a12 & a13).astype(float) + (a12 & a23).astype(float)
             + (a13 & a23).astype(float))
    return triangle - (mu_n_value / 3.0) * paths


def sigma2n_sq_mc(density, r, mu_n_value, m_samples, stream, batch_size=1 << 17):
    """Monte Carlo estimate of sigma2n^2 = E[h(X1,X2,X3) h(X1,X2,X4)].

    Naive sampling wastes all but a Theta(r^3) fraction of draws, so the
    estimator localizes: any nonzero product forces X2, X3, X4 within 2r of
    X1, hence they are drawn from the density restricted to that arc and the
    sample is reweighted by the cube of the arc mass.  The localization is
    exact, not an approximation.

    Returns (estimate, standard_error).
    """
    if not 0.0 < r <= 0.1:
        raise ValueError(f"sigma2n estimation expects r in (0, 0.1], got {r}")
    if m_samples < 100_000:
        raise ValueError(f"m_samples must be >= 1e5, got {m_samples}")
    sup = density.sup_f
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < m_samples:
        m = min(batch_size, m_samples - done)
        x1 = _rejection_batch(density, m, stream, 0.0, 1.0, sup)
        lo = x1 - 2.0 * r
        weight = density.arc_mass(lo, x1 + 2.0 * r) ** 3
        x2 = _rejection_arc(density, stream, lo, 4.0 * r, sup)
        x3 = _rejection_arc(density, stream, lo, 4.0 * r, sup)
        x4 = _rejection_arc(density, stream, lo, 4.0 * r, sup)
        d12 = circle_distance(x1 % 1.0, x2)
        h123 = _kernel_batch(d12, circle_distance(x1 % 1.0, x3),
                             circle_distance(x2, x3), r, mu_n_value)
        h124 = _kernel_batch(d12, circle_distance(x1 % 1.0, x4),
                             circle_distance(x2, x4), r, mu_n_value)
        vals = h123 * h124 * weight
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        done += m
    mean = total / m_samples
    var = max(total_sq / m_samples - mean ** 2, 0.0)
    stderr = math.sqrt(var / m_samples)
    return mean, stderr


def _rejection_batch(density, m, stream, lo, width, sup):
    """m draws from the density restricted to [lo, lo+width), unwrapped."""
    out = np.empty(m)
    filled = 0
    while filled < m:
        need = m - filled
        draw = max(need + 16, int(1.2 * need * sup * width) + 16)
        proposals = lo + width * stream.uniforms(draw)
        u = stream.uniforms(draw)
        accepted = proposals[u * sup <= density.evaluate(proposals)]
        take = min(accepted.size, need)
        out[filled:filled + take] = accepted[:take]
        filled += take
    return out


def _rejection_arc(density, stream, lo, width, sup):
    """One restricted draw per arc [lo_i, lo_i + width), vectorized and wrapped."""
    m = lo.size
    out = np.empty(m)
    pending = np.arange(m)
    while pending.size:
        proposals = lo[pending] + width * stream.uniforms(pending.size)
        u = stream.uniforms(pending.size)
        ok = u * sup <= density.evaluate(proposals)
        out[pending[ok]] = proposals[ok]
        pending = pending[~ok]
    return out % 1.0


def sigma2n_sq_quadrature(density, r, mu_n_value):
    """Deterministic sigma2n^2 by exact two-variable reduction.

    Conditioned on (X1, X2), the inner expectation of h has a closed form in
    arc masses, so sigma2n^2 = E[(E[h | X1, X2])^2] is a 2-d integral.  The
    inner variable is split at the kink radii and handled by Gauss-Legendre
    on each smooth piece.  Serves as the independent cross-check for the
    Monte Carlo estimator.
    """
    if not 0.0 < r <= 0.1:
        raise ValueError(f"quadrature reduction expects r in (0, 0.1], got {r}")

    def h2(x1, t):
        # t = signed offset of x2 from x1, |t| <= 2r
        x2 = x1 + t
        adjacent = np.abs(t) <= r
        lo = np.maximum(x1, x2) - r
        hi = np.minimum(x1, x2) + r
        overlap = np.where(hi >= lo, density.arc_mass(lo, np.maximum(hi, lo)), 0.0)
        arcs = (density.arc_mass(x1 - r, x1 + r)
                + density.arc_mass(x2 - r, x2 + r))
        return adjacent * overlap - (mu_n_value / 3.0) * (adjacent * arcs + overlap)

    pieces = [(-2.0 * r, -r), (-r, 0.0), (0.0, r), (r, 2.0 * r)]

    def outer(x1):
        x1 = np.atleast_1d(x1)
        acc = np.zeros_like(x1)
        for a, b in pieces:
            half = 0.5 * (b - a)
            t = a + (_GL_NODES + 1.0) * half
            vals = density.evaluate(x1[:, None] + t) * h2(x1[:, None], t) ** 2
            acc += (vals @ _GL_WEIGHTS) * half
        return acc * density.evaluate(x1)

    return integrate_periodic_adaptive(outer, rel_tol=1e-12, abs_tol=0.0)


def h1_leading(density, x, c_f):
    """Density-level factor of the first projection's leading term.

    Returns -3 c_f f(x)^2 - 2 f(x) f''(x) - (f'(x))^2; callers multiply by
    r^4 / 4.  Its squared f-weighted integral is sigma1_sq.  Vanishes
    identically for the uniform density.
    """
    fx = density.evaluate(x)
    return (-3.0 * c_f * fx ** 2 - 2.0 * fx * density.evaluate(x, 2)
            - density.evaluate(x, 1) ** 2)


def kernel_h1_exact(density, r, x, mu_n_value):
    """Exact first projection E[h | X1 = x], for r <= 1/4.

    Combines the exact conditional triangle probability with the three
    conditional 2-path probabilities: the anchor is the path center in one
    orientation (arc mass squared) and an endpoint in the other two (an
    arc-weighted arc integral each).
    """
    _check_r(r, TRIANGLE_RADIUS_LIMIT)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    tri = triangle_probability_given(density, r, xa)
    arc_x = density.arc_mass(xa - r, xa + r)
    y = xa[:, None] + _GL_NODES * r
    arc_y = density.cumulative(y + r) - density.cumulative(y - r)
    endpoint_path = (density.evaluate(y) * arc_y) @ _GL_WEIGHTS * r
    out = tri - (mu_n_value / 3.0) * (arc_x ** 2 + 2.0 * endpoint_path)
    return float(out[0]) if np.ndim(x) == 0 else out


def h_second_moment_exact(density, r, mu_n_value):
    """Exact E[h^2] from the triangle and 2-path probabilities.

    Expanding h^2 and using that every product of two distinct 2-path
    indicators on a triple is the triangle indicator gives
    E[h^2] = (1 - 2 mu + 2 mu^2 / 3) E[triangle] + (mu^2 / 3) E[2-path];
    its leading term is (3 r^2 / 8) E[f^2].
    """
    tri = exact_triangle_probability(density, r)
    path = exact_twopath_probability(density, r)
    mu = mu_n_value
    return (1.0 - 2.0 * mu + 2.0 * mu ** 2 / 3.0) * tri + mu ** 2 / 3.0 * path


def _check_r(r, upper, exclusive_zero=False):
    lo_ok = r > 0.0 if exclusive_zero else r >= 0.0
    if not (lo_ok and r <= upper):
        lo = "(0" if exclusive_zero else "[0"
        raise ValueError(f"r must lie in {lo}, {upper}], got {r}")
