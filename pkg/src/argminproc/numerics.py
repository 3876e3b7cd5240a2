"""
Numerical building blocks: special functions, singularity-aware quadrature,
grid convolution, Laplace transforms (forward and inverse) and
goodness-of-fit statistics.

All routines are pure functions.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as _spint
from scipy import special as _sp
from scipy import stats as _st

from .errors import EmptySample, GridMismatch, InvalidGrid, NonConvergence, UnstableInversion

# zeta(1/2); enters the generalised Euler-Maclaurin correction for
# inverse-square-root endpoint singularities.
ZETA_HALF = -1.4603545088095868


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def erf(x):
    """Error function, vectorised; ``erf(x) = 2/sqrt(pi) int_0^x exp(-t^2) dt``."""
    return _sp.erf(x)


def erfc(x):
    """Complementary error function ``1 - erf(x)`` without cancellation."""
    return _sp.erfc(x)


def erf_sq_minus_one(x):
    """``erf(x)**2 - 1`` evaluated as ``-erfc(x) * (1 + erf(x))``.

    The naive form loses all significant digits once ``erf(x)`` is within
    machine epsilon of one (x larger than about 4.5).
    """
    return -_sp.erfc(x) * (1.0 + _sp.erf(x))


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def integrate(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
              points: Optional[Sequence[float]] = None, singular: bool = True,
              limit: int = 400, power: float = 2, end_powers: Optional[dict] = None,
              f_local: Optional[Callable[[float, float], float]] = None) -> float:
    """
    Adaptive quadrature of ``f`` over ``(a, b)`` with absolute error ``tol``.

    The interval is cut at ``points`` (kinks or singularities in the
    interior); on every piece ``[c, d]`` the substitutions ``x = c + u^k``
    (left half) and ``x = d - u^k`` (right half), ``k = power``, turn
    endpoint singularities of type ``(x - c)^{-p}`` into bounded integrands
    when ``k (1 - p) >= 1`` (``k = 2`` covers inverse square roots and
    square-root kinks).  Each transformed piece is handed to QUADPACK.

    Parameters
    ----------
    f : callable
        Scalar integrand; never evaluated exactly at a piece endpoint when
        ``singular`` is true.
    a, b : float
        Finite limits, ``a <= b``.
    tol : float
        Target absolute error for the whole integral.
    points : sequence of float, optional
        Interior break points.
    singular : bool
        Apply the endpoint substitutions (default) or integrate directly.
    limit : int
        Subdivision budget per piece.
    power : float
        Exponent ``k`` of the endpoint substitution.
    end_powers : dict, optional
        Per-endpoint override ``{location: k}``; with ``k = 1/(1-p)`` a
        singular factor ``(x - c)^{-p}`` becomes exactly constant in ``u``.
    f_local : callable(anchor, offset), optional
        Same integrand evaluated at ``anchor + offset``, used inside the
        substituted pieces.  Lets the caller form ``x - anchor`` exactly,
        which matters once ``u^k`` drops below the spacing of floats
        near the anchor.

    Raises
    ------
    NonConvergence
        If QUADPACK's error estimate on any piece exceeds its share of
        ``tol`` after ``limit`` subdivisions.
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integrate needs finite limits")
    if b < a:
        return -integrate(f, b, a, tol, points, singular, limit, power, end_powers, f_local)
    if b == a:
        return 0.0
    cuts = [a]
    if points is not None:
        cuts += sorted(float(p) for p in points if a < p < b)
    cuts.append(b)
    pieces = [(c, d) for c, d in zip(cuts[:-1], cuts[1:]) if d > c]
    nsub = 2 * len(pieces) if singular else len(pieces)
    ep = {} if end_powers is None else {float(k): v for k, v in end_powers.items()}
    if f_local is None:
        f_local = lambda anchor, off: f(anchor + off)  # noqa: E731
    ptol = tol / nsub
    total = 0.0
    for c, d in pieces:
        if singular:
            mid = 0.5 * (c + d)
            k = float(ep.get(c, power))
            r = (mid - c) ** (1.0 / k)
            total += _quad(lambda u, c=c, k=k: k * u ** (k - 1) * f_local(c, u ** k), 0.0, r, ptol, limit)
            k = float(ep.get(d, power))
            r = (d - mid) ** (1.0 / k)
            total += _quad(lambda u, d=d, k=k: k * u ** (k - 1) * f_local(d, -u ** k), 0.0, r, ptol, limit)
        else:
            total += _quad(f, c, d, ptol, limit)
    return total


def _quad(g, lo, hi, tol, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _spint.IntegrationWarning)
        val, err = _spint.quad(g, lo, hi, epsabs=tol, epsrel=0.0, limit=limit)[:2]
    if not math.isfinite(val) or err > tol:
        raise NonConvergence(
            f"quadrature on [{lo:.6g}, {hi:.6g}] reached error {err:.3g} > {tol:.3g}")
    return val


# ---------------------------------------------------------------------------
# grid functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridFunction:
    """Samples of a function at ``start + k * step``, ``k = 0..n-1``."""

    start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if not (self.step > 0):
            raise InvalidGrid("step must be positive")
        if v.ndim != 1 or v.shape[0] < 2:
            raise InvalidGrid("a grid function needs at least two samples")
        if not np.all(np.isfinite(v)):
            raise InvalidGrid("grid values must be finite")

    @classmethod
    def from_callable(cls, f, start, stop, step):
        n = int(round((stop - start) / step)) + 1
        t = start + step * np.arange(n)
        return cls(float(start), float(step), np.asarray(f(t), dtype=np.float64))

    def __len__(self):
        return self.values.shape[0]

    @property
    def times(self):
        return self.start + self.step * np.arange(len(self))

    @property
    def stop(self):
        return self.start + self.step * (len(self) - 1)

    def __call__(self, t):
        return np.interp(t, self.times, self.values, left=0.0, right=0.0)

    def integral(self):
        return float(np.trapezoid(self.values, dx=self.step))

    def cumulative(self):
        """Running trapezoid integral, same grid."""
        v = self.values
        c = np.empty_like(v)
        c[0] = 0.0
        np.cumsum(0.5 * self.step * (v[1:] + v[:-1]), out=c[1:])
        return GridFunction(self.start, self.step, c)

    def moment(self, k=1):
        return float(np.trapezoid(self.times ** k * self.values, dx=self.step))

    def mean(self):
        return self.moment(1) / self.integral()

    def __mul__(self, c):
        return GridFunction(self.start, self.step, self.values * float(c))

    __rmul__ = __mul__


def _check_steps(f: GridFunction, g: GridFunction):
    if abs(f.step - g.step) > 1e-12 * max(f.step, g.step):
        raise GridMismatch(f"grid steps differ: {f.step!r} vs {g.step!r}")


def convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """
    Trapezoid-rule convolution ``(f * g)(t) = int f(s) g(t-s) ds``.

    Both inputs are taken to vanish outside their grids.  Direct (not FFT)
    summation, so the cost is ``O(len(f) * len(g))``.
    """
    _check_steps(f, g)
    h = f.step
    fv, gv = f.values, g.values
    c = np.convolve(fv, gv)
    k = np.arange(c.shape[0])
    fk = np.where(k < fv.shape[0], fv[np.minimum(k, fv.shape[0] - 1)], 0.0)
    gk = np.where(k < gv.shape[0], gv[np.minimum(k, gv.shape[0] - 1)], 0.0)
    c = h * (c - 0.5 * fv[0] * gk - 0.5 * fk * gv[0])
    return GridFunction(f.start + g.start, h, c)


# ---------------------------------------------------------------------------
# Laplace transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpTail:
    """Tail model ``f(t) ~ amplitude * exp(-rate * (t - t_end))`` for ``t > t_end``."""

    amplitude: float
    rate: float


@dataclass
class LaplaceValue:
    value: float
    truncation: float
    coverage_warning: bool
    meta: dict = field(default_factory=dict)

    def __float__(self):
        return self.value


def laplace_eval(f: GridFunction, lam: float, tail: Optional[ExpTail] = None,
                 sqrt_edge: bool = False, full_output: bool = False):
    """
    ``int exp(-lam t) f(t) dt`` over the grid by the trapezoid rule.

    Parameters
    ----------
    f : GridFunction
    lam : float
        Transform variable, ``lam > 0``.
    tail : ExpTail, optional
        Analytic continuation of ``f`` beyond the last grid point; its
        contribution ``A exp(-lam t_end) / (lam + rate)`` is added.
    sqrt_edge : bool
        The integrand behaves like ``c / sqrt(t - start)`` at the left end
        (its grid value there is ignored).  The leading generalised
        Euler-Maclaurin correction ``-zeta(1/2) c sqrt(step)`` is added with
        ``c`` extrapolated from the first two interior samples.
    full_output : bool
        Return a :class:`LaplaceValue` with a grid-coverage flag instead of
        a float.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    t = f.times
    w = np.exp(-lam * t) * f.values
    h = f.step
    if sqrt_edge:
        w = w.copy()
        w[0] = 0.0
        s = np.sqrt(t[1:3] - t[0])
        phi1, phi2 = w[1] * s[0], w[2] * s[1]
        c = 2.0 * phi1 - phi2
        val = float(np.trapezoid(w, dx=h)) - ZETA_HALF * c * math.sqrt(h)
    else:
        val = float(np.trapezoid(w, dx=h))
    last = abs(w[-1])
    if tail is not None:
        val += tail.amplitude * math.exp(-lam * f.stop) / (lam + tail.rate)
        trunc = 0.0
    else:
        # crude size of what lies beyond the grid if f stayed at its last value
        trunc = last / lam
    warn = tail is None and trunc > 1e-8 * max(abs(val), 1e-300)
    if full_output:
        return LaplaceValue(val, trunc, warn)
    return val


@lru_cache(maxsize=None)
def stehfest_coefficients(order: int) -> tuple:
    """Gaver-Stehfest weights ``V_1..V_N`` computed exactly in rationals."""
    if order % 2 or order < 2:
        raise ValueError("Stehfest order must be a positive even integer")
    half = order // 2
    V = []
    for k in range(1, order + 1):
        s = Fraction(0)
        for j in range((k + 1) // 2, min(k, half) + 1):
            s += Fraction(j ** half * math.factorial(2 * j),
                          math.factorial(half - j) * math.factorial(j)
                          * math.factorial(j - 1) * math.factorial(k - j)
                          * math.factorial(2 * j - k))
        V.append((-1) ** (k + half) * s)
    return tuple(V)


def _stehfest(phi, t, order):
    a = math.log(2.0) / t
    V = stehfest_coefficients(order)
    return a * math.fsum(float(V[k - 1]) * float(phi(k * a)) for k in range(1, order + 1))


@dataclass(frozen=True)
class InversionResult:
    value: float
    spread: float       # |f_N - f_{N-2}| / |f_N|
    order: int
    widened: bool = False

    def __float__(self):
        return self.value


def laplace_invert(phi: Callable[[float], float], t: float, order: int = 16,
                   full_output: bool = False, max_spread: float = 0.10):
    """
    Gaver-Stehfest inversion of a Laplace transform at ``t > 0``.

    The estimate at ``order`` is compared with the one at ``order - 2``;
    their relative difference is returned as an error proxy.

    Parameters
    ----------
    phi : callable
        Laplace transform, evaluated at real positive arguments only.
    t : float
    order : int
        Even, 8..20.  Double precision limits useful orders to about 18.
    full_output : bool
        Return :class:`InversionResult` instead of a float.
    max_spread : float
        Relative spread above which :class:`UnstableInversion` is raised.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    order = int(order)
    if order % 2 or not 8 <= order <= 20:
        raise ValueError("order must be even and within 8..20")
    v = _stehfest(phi, t, order)
    v2 = _stehfest(phi, t, order - 2)
    spread = abs(v - v2) / max(abs(v), 1e-300)
    if not math.isfinite(v) or spread > max_spread:
        raise UnstableInversion(
            f"Stehfest spread {spread:.3g} at t={t:g} (order {order}) exceeds {max_spread:g}")
    if full_output:
        return InversionResult(v, spread, order)
    return v


# ---------------------------------------------------------------------------
# goodness of fit
# ---------------------------------------------------------------------------

@dataclass
class FitReport:
    statistic_name: str
    value: float
    sample_size: int
    threshold: float
    passed: bool = field(init=False)

    def __post_init__(self):
        if self.statistic_name not in ("KS", "chi_square", "mean_diff"):
            raise ValueError(f"unknown statistic {self.statistic_name!r}")
        self.value = float(self.value)
        self.threshold = float(self.threshold)
        self.sample_size = int(self.sample_size)
        self.passed = bool(self.value <= self.threshold)

    def to_dict(self):
        return {"statistic_name": self.statistic_name, "value": self.value,
                "sample_size": self.sample_size, "threshold": self.threshold,
                "pass": self.passed}


def ks_statistic(samples, cdf: Callable, resolution: float = 0.0) -> float:
    """
    Kolmogorov-Smirnov distance between the empirical CDF and ``cdf``.

    Parameters
    ----------
    samples : array_like
        Observations (sorted or not).
    cdf : callable
        Vectorised model CDF.
    resolution : float
        Grid spacing of the observations.  A value recorded at grid point
        ``x`` stands for the cell ``(x - r/2, x + r/2]``, so the empirical
        CDF is compared against ``cdf(x + r/2)`` from the right and
        ``cdf(x - r/2)`` from the left.  ``0`` gives the classical statistic.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = x.shape[0]
    if n == 0:
        raise EmptySample("KS statistic of an empty sample")
    half = 0.5 * float(resolution)
    i = np.arange(1, n + 1)
    if half > 0:
        hi = np.asarray(cdf(x + half), dtype=np.float64)
        lo = np.asarray(cdf(x - half), dtype=np.float64)
    else:
        hi = lo = np.asarray(cdf(x), dtype=np.float64)
    d_plus = np.max(i / n - hi)
    d_minus = np.max(lo - (i - 1) / n)
    return float(min(1.0, max(0.0, d_plus, d_minus)))


def ks_2samp(x, y) -> float:
    """Two-sample KS statistic."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise EmptySample("two-sample KS needs two nonempty samples")
    return float(_st.ks_2samp(x, y).statistic)
