"""Smooth period-1 probability densities on the unit circle.

Three density families are supported, all with closed-form derivatives:

* ``uniform`` : f(x) = 1
* ``von_mises`` : f(x) = exp(kappa * cos(2 pi (x - mu))) / I0, with I0 the
  periodic normalizer computed by quadrature
* ``fourier`` : f(x) = 1 + sum_m a_m cos(2 pi m x) + b_m sin(2 pi m x),
  accepted only if provably positive

Besides point evaluation, every density exposes ``cumulative`` (the
antiderivative of its periodic extension) and ``arc_mass`` (mass of a
circular arc), which the subgraph-probability integrals are built on.
Derivatives are always analytic, never finite-differenced, so remainder
measurements downstream are not polluted by differentiation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Positivity audit grid for fourier densities.
_POSITIVITY_GRID = 10_000


class QuadratureError(RuntimeError):
    """Raised when panel doubling fails to converge or samples are not finite."""


def integrate_periodic(integrand, panels):
    """Uniform-grid quadrature of a period-1 function over one period.

    For a periodic integrand the left-rectangle and trapezoid rules coincide,
    and the error decays faster than any power of 1/panels once the integrand
    is smooth.
    """
    if panels < 8:
        raise ValueError(f"panels must be >= 8, got {panels}")
    x = np.arange(panels) / panels
    y = np.asarray(integrand(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    if not np.all(np.isfinite(y)):
        raise QuadratureError("integrand produced a non-finite sample")
    return float(np.mean(y))


def integrate_periodic_adaptive(integrand, rel_tol=1e-12, abs_tol=1e-12,
                                start_panels=64, max_panels=1 << 20):
    """Panel-doubling quadrature for smooth period-1 integrands.

    Doubles the panel count until successive values agree to
    ``max(abs_tol, rel_tol * |I|)`` or until the change is indistinguishable
    from summation roundoff.  Large-magnitude integrands (the variance
    constant for concentrated densities reaches ~1e7) make a purely absolute
    threshold unattainable in double precision, hence the magnitude-aware
    stopping rule.
    """
    n = start_panels
    x = np.arange(n) / n
    y = np.asarray(integrand(x), dtype=float)
    if not np.all(np.isfinite(y)):
        raise QuadratureError("integrand produced a non-finite sample")
    value = float(np.mean(y))
    mag = float(np.mean(np.abs(y)))
    while n < max_panels:
        mid = (np.arange(n) + 0.5) / n
        ym = np.asarray(integrand(mid), dtype=float)
        if not np.all(np.isfinite(ym)):
            raise QuadratureError("integrand produced a non-finite sample")
        refined = 0.5 * (value + float(np.mean(ym)))
        mag = max(mag, float(np.mean(np.abs(ym))))
        change = abs(refined - value)
        n *= 2
        roundoff_floor = 8.0 * np.finfo(float).eps * mag
        if change <= max(abs_tol, rel_tol * abs(refined), roundoff_floor):
            return refined
        value = refined
    raise QuadratureError(f"no convergence within {max_panels} panels")


def normalizer_I0(kappa):
    """Periodic normalizer (1/2pi) * integral of exp(kappa cos t) over [0, 2pi].

    Computed by quadrature to relative accuracy 1e-12; always >= 1.
    """
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    return integrate_periodic_adaptive(
        lambda u: np.exp(kappa * np.cos(TWO_PI * u)), rel_tol=1e-13, abs_tol=0.0)


class CircularDensity:
    """A period-1 density with analytic derivatives and exact arc integrals.

    Instances are immutable after construction and safe to share across
    threads.  Construct through :meth:`uniform`, :meth:`von_mises`,
    :meth:`fourier`, or :meth:`from_spec`.
    """

    def __init__(self, kind, kappa=0.0, mu=0.0, cos_coeffs=(), sin_coeffs=()):
        if kind not in ("uniform", "von_mises", "fourier"):
            raise ValueError(f"unknown density kind {kind!r}")
        self.kind = kind
        self.kappa = float(kappa)
        self.mu = float(mu)
        self.cos_coeffs = np.asarray(cos_coeffs, dtype=float)
        self.sin_coeffs = np.asarray(sin_coeffs, dtype=float)
        self._series = None  # lazy (a_m, b_m) expansion of f - 1, for cumulative()

        if kind == "uniform":
            self.normalizer = 1.0
            self.sup_f = 1.0
            self.inf_f = 1.0
        elif kind == "von_mises":
            if self.kappa < 0:
                raise ValueError(f"kappa must be >= 0, got {kappa}")
            if not 0.0 <= self.mu < 1.0:
                raise ValueError(f"mu must lie in [0, 1), got {mu}")
            self.normalizer = normalizer_I0(self.kappa)
            self.sup_f = math.exp(self.kappa) / self.normalizer
            self.inf_f = math.exp(-self.kappa) / self.normalizer
        else:
            if self.cos_coeffs.ndim != 1 or self.sin_coeffs.ndim != 1:
                raise ValueError("fourier coefficients must be 1-d sequences")
            m = max(self.cos_coeffs.size, self.sin_coeffs.size)
            self.cos_coeffs = np.pad(self.cos_coeffs, (0, m - self.cos_coeffs.size))
            self.sin_coeffs = np.pad(self.sin_coeffs, (0, m - self.sin_coeffs.size))
            self.normalizer = 1.0
            self.inf_f, self.sup_f = self._fourier_bounds()
            if self.inf_f <= 0.0:
                raise ValueError(
                    "fourier density is not provably positive "
                    f"(lower bound {self.inf_f:.3e})")
        self._check_normalized()

    # -- constructors ------------------------------------------------------

    @classmethod
    def uniform(cls):
        return cls("uniform")

    @classmethod
    def von_mises(cls, kappa, mu=0.0):
        return cls("von_mises", kappa=kappa, mu=mu)

    @classmethod
    def fourier(cls, cos_coeffs=(), sin_coeffs=()):
        return cls("fourier", cos_coeffs=cos_coeffs, sin_coeffs=sin_coeffs)

    @classmethod
    def from_spec(cls, spec):
        """Build a density from its config-file description.

        Accepted forms: ``{"kind": "uniform"}``,
        ``{"kind": "von_mises", "kappa": K, "mu": M}``,
        ``{"kind": "fourier", "cos": [...], "sin": [...]}``.
        Unknown keys are rejected.
        """
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ValueError(f"density spec must be a dict with a 'kind' key: {spec!r}")
        kind = spec["kind"]
        allowed = {"uniform": set(), "von_mises": {"kappa", "mu"},
                   "fourier": {"cos", "sin"}}
        if kind not in allowed:
            raise ValueError(f"unknown density kind {kind!r}")
        extra = set(spec) - {"kind"} - allowed[kind]
        if extra:
            raise ValueError(f"unknown keys in density spec: {sorted(extra)}")
        if kind == "uniform":
            return cls.uniform()
        if kind == "von_mises":
            return cls.von_mises(spec.get("kappa", 0.0), spec.get("mu", 0.0))
        return cls.fourier(spec.get("cos", ()), spec.get("sin", ()))

    def spec(self):
        """Config-file description of this density (round-trips from_spec)."""
        if self.kind == "uniform":
            return {"kind": "uniform"}
        if self.kind == "von_mises":
            return {"kind": "von_mises", "kappa": self.kappa, "mu": self.mu}
        return {"kind": "fourier", "cos": list(self.cos_coeffs),
                "sin": list(self.sin_coeffs)}

    @property
    def is_uniform(self):
        return self.kind == "uniform"

    def __repr__(self):
        return f"CircularDensity({self.spec()!r})"

    # -- evaluation --------------------------------------------------------

    def evaluate(self, x, order=0):
        """Value of f, f' or f'' at x (any real, reduced mod 1)."""
        if order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {order}")
        xa = np.asarray(x, dtype=float)
        scalar = xa.ndim == 0
        xa = np.mod(xa, 1.0)
        if self.kind == "uniform":
            out = np.ones_like(xa) if order == 0 else np.zeros_like(xa)
        elif self.kind == "von_mises":
            theta = TWO_PI * (xa - self.mu)
            base = np.exp(self.kappa * np.cos(theta)) / self.normalizer
            if order == 0:
                out = base
            elif order == 1:
                out = -TWO_PI * self.kappa * np.sin(theta) * base
            else:
                out = (TWO_PI ** 2 * self.kappa
                       * (self.kappa * np.sin(theta) ** 2 - np.cos(theta)) * base)
        else:
            out = self._fourier_eval(xa, order)
        return float(out) if scalar else out

    def _fourier_eval(self, xa, order):
        m = np.arange(1, self.cos_coeffs.size + 1, dtype=float)
        ang = TWO_PI * np.multiply.outer(xa, m)
        c, s = np.cos(ang), np.sin(ang)
        if order == 0:
            return 1.0 + c @ self.cos_coeffs + s @ self.sin_coeffs
        w = TWO_PI * m
        if order == 1:
            return s @ (-w * self.cos_coeffs) + c @ (w * self.sin_coeffs)
        return c @ (-(w ** 2) * self.cos_coeffs) + s @ (-(w ** 2) * self.sin_coeffs)

    # -- arc integrals -----------------------------------------------------

    def cumulative(self, t):
        """Antiderivative G(t) of the periodic extension, with G(0) = 0.

        G(t + 1) = G(t) + 1, so arc masses on the circle are plain
        differences of G regardless of wraparound.
        """
        ta = np.asarray(t, dtype=float)
        scalar = ta.ndim == 0
        if self.kind == "uniform":
            out = ta.copy()
        else:
            a, b = self._deviation_series()
            m = np.arange(1, a.size + 1, dtype=float)
            ang = TWO_PI * np.multiply.outer(ta, m)
            out = ta + (np.sin(ang) @ (a / (TWO_PI * m))
                        + (1.0 - np.cos(ang)) @ (b / (TWO_PI * m)))
        return float(out) if scalar else out

    def arc_mass(self, a, b):
        """Mass of the (possibly wrapping) arc from a to b, b >= a."""
        return self.cumulative(b) - self.cumulative(a)

    def _deviation_series(self):
        """Cosine/sine coefficients of f - 1, used for exact arc integrals."""
        if self._series is not None:
            return self._series
        if self.kind == "fourier":
            self._series = (self.cos_coeffs, self.sin_coeffs)
            return self._series
        # von Mises: trigonometric interpolation of the deviation.  The
        # coefficients decay super-exponentially, so a modest grid already
        # resolves them to machine precision; double until the tail is dead.
        size = 256
        while True:
            xs = np.arange(size) / size
            coef = np.fft.rfft(self.evaluate(xs) - 1.0) / size
            head = np.max(np.abs(coef[1:])) if coef.size > 1 else 0.0
            tail = np.max(np.abs(coef[size // 4:]))
            if tail <= 1e-16 * max(1.0, head) or size >= (1 << 16):
                break
            size *= 2
        a = 2.0 * coef[1:].real
        b = -2.0 * coef[1:].imag
        keep = np.nonzero(np.maximum(np.abs(a), np.abs(b))
                          > 1e-17 * max(1.0, head))[0]
        last = keep[-1] + 1 if keep.size else 1
        self._series = (np.ascontiguousarray(a[:last]),
                        np.ascontiguousarray(b[:last]))
        return self._series

    # -- construction checks -----------------------------------------------

    def _fourier_bounds(self):
        """Rigorous (inf, sup) bounds: grid extrema widened by a slope bound."""
        m = np.arange(1, self.cos_coeffs.size + 1, dtype=float)
        slope = TWO_PI * float(np.sum(m * (np.abs(self.cos_coeffs)
                                           + np.abs(self.sin_coeffs))))
        xs = np.arange(_POSITIVITY_GRID) / _POSITIVITY_GRID
        vals = self._fourier_eval(xs, 0)
        slack = slope / (2.0 * _POSITIVITY_GRID)
        return float(np.min(vals)) - slack, float(np.max(vals)) + slack

    def _check_normalized(self):
        total = integrate_periodic_adaptive(self.evaluate, rel_tol=1e-13, abs_tol=0.0)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"density does not integrate to 1 (got {total!r})")


@dataclass(frozen=True)
class DensityMoments:
    """Moment integrals of a circular density that enter every expansion
    constant.

    e_f2          = int f^3           (the second moment E[f^2(X)])
    e_fp2         = int (f')^2 f      (E[(f'(X))^2])
    e_ffpp        = int f^2 f''       (E[f(X) f''(X)])
    e_fp2_2ffpp   = int ((f')^2 + 2 f f'') f
    """
    e_f2: float
    e_fp2: float
    e_ffpp: float
    e_fp2_2ffpp: float


@dataclass(frozen=True)
class AsymptoticConstants:
    """Density-level constants of the clustering-coefficient expansions.

    ``a_f`` and ``b_f`` are the quadratic-in-r correction coefficients of the
    triangle and 2-path probabilities, ``c_f = E[(f')^2]/E[f^2]``, and
    ``sigma1_sq`` is the variance constant of the dense-regime projection:
    sigma1_sq = E[(-3 c_f f^2 - 2 f f'' - (f')^2)^2].  All vanish for the
    uniform density.
    """
    a_f: float
    b_f: float
    c_f: float
    sigma1_sq: float
    moments: DensityMoments


def moments(density):
    """Compute all four moment integrals by converged panel doubling."""
    f = density.evaluate
    e_f2 = integrate_periodic_adaptive(lambda x: f(x) ** 3,
                                       rel_tol=1e-13, abs_tol=0.0)
    e_fp2 = integrate_periodic_adaptive(lambda x: f(x, 1) ** 2 * f(x),
                                        rel_tol=1e-13, abs_tol=1e-15)
    e_ffpp = integrate_periodic_adaptive(lambda x: f(x) ** 2 * f(x, 2),
                                         rel_tol=1e-13, abs_tol=1e-15)
    e_mix = integrate_periodic_adaptive(
        lambda x: (f(x, 1) ** 2 + 2.0 * f(x) * f(x, 2)) * f(x),
        rel_tol=1e-13, abs_tol=1e-15)
    return DensityMoments(e_f2=e_f2, e_fp2=e_fp2, e_ffpp=e_ffpp,
                          e_fp2_2ffpp=e_mix)


def constants(density, density_moments=None):
    """Asymptotic constants a_f, b_f, c_f and sigma1_sq for a density."""
    mom = density_moments if density_moments is not None else moments(density)
    a_f = 5.0 * mom.e_fp2_2ffpp / (12.0 * mom.e_f2)
    b_f = 4.0 * mom.e_ffpp / (3.0 * mom.e_f2)
    c_f = mom.e_fp2 / mom.e_f2
    f = density.evaluate

    def integrand(x):
        fx, fpx, fppx = f(x), f(x, 1), f(x, 2)
        return (-3.0 * c_f * fx ** 2 - 2.0 * fx * fppx - fpx ** 2) ** 2 * fx

    sigma1_sq = integrate_periodic_adaptive(integrand, rel_tol=1e-13, abs_tol=1e-15)
    return AsymptoticConstants(a_f=a_f, b_f=b_f, c_f=c_f,
                               sigma1_sq=max(sigma1_sq, 0.0), moments=mom)
