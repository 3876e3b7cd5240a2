"""
Renewal structure of the (a,b)-minima of Brownian motion and the Laplace
transforms attached to it.

Notation
--------
J
    First descending ladder time from which an excursion above the running
    minimum of length > 1 starts.
Delta
    Generic gap between consecutive (1,1)-minima.
T1
    First (1,1)-minimum of a Brownian path started at 0.
D - G
    Middle piece of the T/G/D decomposition of a gap.

All transforms are vectorised over ``lam`` and use the cancellation-free
form ``erf(x)^2 - 1 = -erfc(x) (1 + erf(x))``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import DomainError, GridTooCoarse
from .numerics import (GridFunction, InversionResult, convolve, erf, erf_sq_minus_one,
                       integrate, laplace_invert)

SQRT_PI = math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# h_{a,b} and the gap density
# ---------------------------------------------------------------------------

def h_ab(a: float, b: float, t: float) -> float:
    """
    Kernel of the gap law:
    ``(1/(pi t)) (sqrt((t-b)_+/b) + sqrt((t-a)_+/a))`` below ``a+b``, and
    ``1/(pi sqrt(ab))`` from ``a+b`` on.
    """
    if not (a > 0 and b > 0):
        raise DomainError("a and b must be positive")
    if not t > 0:
        raise DomainError("t must be positive")
    if t >= a + b:
        return 1.0 / (math.pi * math.sqrt(a * b))
    return (math.sqrt(max(t - b, 0.0) / b) + math.sqrt(max(t - a, 0.0) / a)) / (math.pi * t)


def h_ab_grid(a: float, b: float, t: np.ndarray) -> np.ndarray:
    """Vectorised :func:`h_ab`, with value 0 at ``t <= 0``."""
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    v = (np.sqrt(np.maximum(tp - b, 0.0) / b) + np.sqrt(np.maximum(tp - a, 0.0) / a)) / (np.pi * tp)
    v = np.where(tp >= a + b, 1.0 / (np.pi * math.sqrt(a * b)), v)
    out[pos] = v
    return out


@dataclass(frozen=True)
class RenewalLaw:
    """Gap density ``g``, its kernel ``h`` and the stationary delay density."""

    a: float
    b: float
    h: GridFunction
    g: GridFunction
    f_delay: GridFunction
    horizon: float
    n_terms_used: int
    method: str = "volterra"

    @property
    def G(self) -> GridFunction:
        """Gap CDF on the grid."""
        return self.g.cumulative()

    def gap_cdf(self, t):
        G = self.G
        return np.clip(np.interp(t, G.times, G.values, left=0.0, right=G.values[-1]), 0.0, 1.0)

    def delay_cdf(self, t):
        F = self.f_delay.cumulative()
        return np.clip(np.interp(t, F.times, F.values, left=0.0, right=F.values[-1]), 0.0, 1.0)

    def to_csv(self, precision: int = 12, every: int = 1) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "h", "g", "f_delay"])
        fmt = f"{{:.{precision}g}}"
        t = self.g.times
        for k in range(0, t.shape[0], every):
            w.writerow([fmt.format(t[k]), fmt.format(self.h.values[k]),
                        fmt.format(self.g.values[k]), fmt.format(self.f_delay.values[k])])
        return buf.getvalue()


def build_renewal_law(a: float = 1.0, b: float = 1.0, horizon: float = 30.0, dt: float = 1e-3,
                      method: str = "volterra") -> RenewalLaw:
    """
    Tabulate ``g_{a,b} = sum_{n>=1} (-1)^{n-1} h^{*n}`` on ``[0, horizon]``.

    Because ``h`` vanishes on ``[0, min(a,b))``, ``h^{*n}`` vanishes on
    ``[0, n min(a,b))`` and the series is a finite sum on the grid.

    Parameters
    ----------
    method : {'volterra', 'series'}
        ``'volterra'`` solves ``g = h - h * g`` step by step (the alternating
        series in closed form, ``O(n^2 / 2)``); ``'series'`` sums the
        convolution powers explicitly (slower, used as a cross-check).
        With the same trapezoid convolution both give the same numbers.

    Raises
    ------
    GridTooCoarse
        If ``dt > 1e-3 min(a, b)``.
    """
    if not (a > 0 and b > 0):
        raise DomainError("a and b must be positive")
    if horizon < a + b:
        raise DomainError("horizon must be at least a+b")
    if dt > 1e-3 * min(a, b) * (1 + 1e-9):
        raise GridTooCoarse(f"dt={dt} exceeds 1e-3 * min(a,b)")
    n = int(round(horizon / dt))
    t = dt * np.arange(n + 1)
    h = h_ab_grid(a, b, t)
    n_terms = int(math.ceil(horizon / min(a, b)))
    if method == "volterra":
        g = _kernels.volterra_renewal(h, dt)
    elif method == "series":
        hg = GridFunction(0.0, dt, h)
        term = hg
        g = h.copy()
        for k in range(2, n_terms + 1):
            term = GridFunction(0.0, dt, convolve(term, hg).values[: n + 1])
            g += (-1) ** (k - 1) * term.values
    else:
        raise ValueError(f"unknown method {method!r}")
    gf = GridFunction(0.0, dt, g)
    G = gf.cumulative().values
    fd = (1.0 - G) / (math.pi * math.sqrt(a * b))
    return RenewalLaw(a, b, GridFunction(0.0, dt, h), gf, GridFunction(0.0, dt, fd),
                      float(horizon), n_terms, method)


# ---------------------------------------------------------------------------
# Laplace transforms
# ---------------------------------------------------------------------------

def _lam(lam):
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(~(lam > 0)):
        raise DomainError("lambda must be positive")
    return lam


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def phi_J(lam):
    """``E exp(-lam J) = 1 / (sqrt(pi lam) erf(sqrt lam) + exp(-lam))``."""
    lam = _lam(lam)
    r = np.sqrt(lam)
    return _out(1.0 / (SQRT_PI * r * erf(r) + np.exp(-lam)))


def phi_T1(lam):
    """``E exp(-lam T1) = exp(-lam) phi_J(lam)^2``."""
    lam = _lam(lam)
    return _out(np.exp(-lam) * np.asarray(phi_J(lam)) ** 2)


def _psi(lam):
    r = np.sqrt(lam)
    e = erf(r)
    return erf_sq_minus_one(r) + 2.0 * np.exp(-lam) * e / (SQRT_PI * r) + np.exp(-2.0 * lam) / (np.pi * lam)


def phi_DG(lam):
    """``E exp(-lam (D-G)) = pi lam (erf^2 - 1) + 2 sqrt(pi lam) exp(-lam) erf + exp(-2 lam)``."""
    lam = _lam(lam)
    r = np.sqrt(lam)
    e = erf(r)
    return _out(np.pi * lam * erf_sq_minus_one(r) + 2.0 * SQRT_PI * r * np.exp(-lam) * e
                + np.exp(-2.0 * lam))


def phi_Delta(lam, form: str = "decomposition"):
    """
    ``E exp(-lam Delta)`` in one of three algebraically equal forms.

    The default ``'decomposition'`` keeps full relative accuracy for large
    ``lam``; ``'closed'`` and ``'series'`` subtract nearly equal numbers
    there and bottom out at the rounding level (about ``1e-16``) while the
    transform itself decays like ``exp(-2 lam)``.

    closed
        ``1 - pi lam phi_J^2``
    series
        ``Psi / (1 + Psi)``, the summed transform of the alternating
        convolution series, where ``Psi`` is the Laplace transform of
        ``h_{1,1}`` written through ``erf``
    decomposition
        ``phi_J^2 phi_DG`` (independent G-T, D-G, T_next-D)
    """
    lam = _lam(lam)
    if form == "closed":
        return _out(1.0 - np.pi * lam * np.asarray(phi_J(lam)) ** 2)
    if form == "series":
        psi = _psi(lam)
        return _out(psi / (1.0 + psi))
    if form == "decomposition":
        return _out(np.asarray(phi_J(lam)) ** 2 * np.asarray(phi_DG(lam)))
    raise ValueError(f"unknown form {form!r}")


TRANSFORMS = {"J": phi_J, "T1": phi_T1, "Delta": phi_Delta, "DG": phi_DG}


def mean_from_transform(phi, lam0: float = 1e-5) -> float:
    """``-phi'(lam0)`` by central differences with step ``lam0 / 2``."""
    h = 0.5 * lam0
    return -(float(phi(lam0 + h)) - float(phi(lam0 - h))) / (2.0 * h)


def stationary_delay_defect(lam) -> float:
    """
    ``|(1 - phi_Delta(lam)) / (pi lam) - exp(lam) phi_T1(lam)|`` with
    ``phi_Delta`` in its series form.

    The left side is the transform of the stationary delay density
    ``(1 - G) / pi`` (mean gap ``pi``); the right side is the transform of
    ``T1 - 1``.  ``1 - Psi/(1+Psi)`` is formed as ``1/(1+Psi)``.
    """
    lam = float(_lam(lam))
    lhs = 1.0 / ((1.0 + float(_psi(lam))) * math.pi * lam)
    return abs(lhs - math.exp(lam) * float(phi_T1(lam)))


def transform_consistency(lams) -> dict:
    """
    Maximum defects over ``lams`` of the algebraic relations between the
    transforms: agreement of the three forms of ``phi_Delta``,
    ``phi_T1 = exp(-lam) phi_J^2`` and the stationary-delay identity.
    """
    lams = np.atleast_1d(_lam(lams))
    c = np.asarray(phi_Delta(lams, "closed"))
    forms = max(float(np.max(np.abs(c - np.asarray(phi_Delta(lams, f)))))
                for f in ("series", "decomposition"))
    t1 = float(np.max(np.abs(np.asarray(phi_T1(lams))
                             - np.exp(-lams) * np.asarray(phi_J(lams)) ** 2)))
    delay = max(stationary_delay_defect(l) for l in lams)
    return {"delta_forms": forms, "T1_product": t1, "stationary_delay": delay}


def tabulate_transforms(lams, precision: int = 12) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "phi_J", "phi_T1", "phi_Delta", "phi_DG"])
    fmt = f"{{:.{precision}g}}"
    for lam in lams:
        w.writerow([fmt.format(lam)] + [fmt.format(float(f(lam))) for f in
                                        (phi_J, phi_T1, phi_Delta, phi_DG)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# D - G
# ---------------------------------------------------------------------------

def density_DG(t):
    """``(2-t) / (t^2 sqrt(t-1))`` on ``(1, 2)``, zero elsewhere."""
    t = np.asarray(t, dtype=np.float64)
    inside = (t > 1.0) & (t < 2.0)
    ts = np.where(inside, t, 1.5)
    return _out(np.where(inside, (2.0 - ts) / (ts * ts * np.sqrt(ts - 1.0)), 0.0))


def cdf_DG(t):
    """``2 sqrt(t-1) / t`` on ``[1, 2]``."""
    t = np.clip(np.asarray(t, dtype=np.float64), 1.0, 2.0)
    return _out(2.0 * np.sqrt(t - 1.0) / t)


# ---------------------------------------------------------------------------
# analytic identities
# ---------------------------------------------------------------------------

def identity_sides(which: str, lam: float, tol: float = 1e-13):
    """
    ``(lhs, rhs)`` of the two integral identities behind the D-G law
    (``r = sqrt(lam)``):

    sqrt_kernel
        ``int_0^1 e^{-lam t} sqrt(t) / (1+t) dt
        = (pi/2) e^lam (erf(r)^2 - 1) + sqrt(pi/lam) erf(r)``
    dg_kernel
        ``int_0^1 e^{-lam t} (1-t) / (sqrt(t) (1+t)^2) dt
        = pi lam e^lam (erf(r)^2 - 1) + 2 sqrt(pi lam) erf(r) + e^{-lam}``
    """
    lam = float(lam)
    if not lam > 0:
        raise DomainError("lambda must be positive")
    r = math.sqrt(lam)
    e = float(erf(r))
    em1 = float(erf_sq_minus_one(r))
    if which == "sqrt_kernel":
        lhs = integrate(lambda t: math.exp(-lam * t) * math.sqrt(t) / (t + 1.0), 0.0, 1.0, tol)
        rhs = 0.5 * math.pi * math.exp(lam) * em1 + math.sqrt(math.pi / lam) * e
    elif which == "dg_kernel":
        lhs = integrate(lambda t: math.exp(-lam * t) * (1.0 - t) / (math.sqrt(t) * (1.0 + t) ** 2),
                        0.0, 1.0, tol)
        rhs = math.pi * lam * math.exp(lam) * em1 + 2.0 * math.sqrt(math.pi * lam) * e + math.exp(-lam)
    else:
        raise ValueError(f"unknown identity {which!r}")
    return lhs, rhs


def verify_identity(which: str, lam: float, tol: float = 1e-13) -> float:
    """``|lhs - rhs|`` for ``which`` in ``{'sqrt_kernel', 'dg_kernel'}``."""
    lhs, rhs = identity_sides(which, lam, tol)
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# the law of J
# ---------------------------------------------------------------------------

def density_J(t: float, order: int = 16, full_output: bool = False):
    """
    Density of ``J``: ``1/(pi sqrt t)`` on ``(0, 1]``; for ``t > 1`` a
    Gaver-Stehfest inversion of :func:`phi_J`.

    At ``t = 1`` the left value ``1/pi`` is returned; the inversion smooths
    the kink, so values just above 1 carry a wider error (see the spread in
    the full output).
    """
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    if t <= 1.0:
        v = 1.0 / (math.pi * math.sqrt(t))
        return InversionResult(v, 0.0, 0) if full_output else v
    res = laplace_invert(phi_J, t, order, full_output=True)
    return res if full_output else res.value


def _abel_cdf(tmax, h):
    # F(t) + int_0^t nubar(t-s) dF(s) = 1 with nubar(x) = (x^{-1/2} - 1) 1{x<1}
    n = int(round(tmax / h))
    k = np.arange(n + 2)
    x = np.minimum(k * h, 1.0)
    W = 2.0 * np.sqrt(x) - x
    # cell m weight: h (from F itself) + int over [mh, (m+1)h] of nubar
    A = h + (W[1:] - W[:-1])
    f = _kernels.cell_volterra(A, 1.0)
    return np.cumsum(f) * h


@lru_cache(maxsize=8)
def _j_table(tmax=15.0, h=1e-3):
    F1 = _abel_cdf(tmax, h)
    F2 = _abel_cdf(tmax, h / 2)[::2]
    F = np.clip(2.0 * F2 - F1, 0.0, 1.0)       # Richardson: the scheme is first order
    t = h * np.arange(F.shape[0])
    # exponential tail beyond tmax from the last unit of the table
    k1 = int(round((tmax - 1.0) / h))
    rate = math.log((1.0 - F[k1]) / (1.0 - F[-1])) / (t[-1] - t[k1])
    return t, F, rate


def cdf_J(t, method: str = "volterra"):
    """
    CDF of ``J``.

    ``2 sqrt(t) / pi`` on ``[0, 1]``.  Beyond 1, ``'volterra'`` solves
    ``F(t) + int_0^t nubar(t-s) dF(s) = 1``, ``nubar(x) = x^{-1/2} - 1`` on
    ``(0,1)`` (the renewal equation equivalent to the transform of J) by
    product integration with Richardson extrapolation, tabulated to 15
    with an exponential tail; ``'inversion'`` inverts ``phi_J / lam``.
    """
    tt = np.asarray(t, dtype=np.float64)
    out = np.empty_like(tt)
    flat = tt.ravel()
    res = out.ravel()
    small = flat <= 1.0
    res[small] = 2.0 * np.sqrt(np.clip(flat[small], 0.0, None)) / np.pi
    big = ~small
    if np.any(big):
        if method == "volterra":
            tab_t, tab_F, rate = _j_table()
            tb = flat[big]
            v = np.interp(tb, tab_t, tab_F)
            beyond = tb > tab_t[-1]
            v[beyond] = 1.0 - (1.0 - tab_F[-1]) * np.exp(-rate * (tb[beyond] - tab_t[-1]))
            res[big] = v
        elif method == "inversion":
            res[big] = [laplace_invert(lambda l: float(phi_J(l)) / l, float(s), 16) for s in flat[big]]
        else:
            raise ValueError(f"unknown method {method!r}")
    return _out(out)


def j_tail_rate() -> float:
    """Exponential decay rate of ``P(J > t)`` read off the tabulated law."""
    return _j_table()[2]
