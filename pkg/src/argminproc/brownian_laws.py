"""
Closed-form laws of the Brownian argmin process and of its stable-Levy
generalisation.

The transition kernel ``Q_t(x, dy)`` of ``alpha`` has three regimes:

* ``t > 1``: the window has moved past the old minimum; ``Q_t(x, .)`` is the
  stationary arcsine law.
* ``0 < t <= x``: with probability ``s(x, x-t)`` there was no jump and
  ``alpha_t = x - t`` (an atom); otherwise the process jumped to 1 and
  drifted, landing in ``(1-t, 1)``.
* ``x < t <= 1``: the old minimum left the window; density on ``(0, 1)``.

All kernels are returned as :class:`MixedKernel` objects: an optional atom
plus a density callable, so that quadrature can see the exact kinks.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, SubordinatorRejected
from .numerics import integrate
from .pathsim import positivity_parameter

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass
class MixedKernel:
    """
    Law on ``[0, 1]``: ``mass * delta_{location} + density(y) dy``.

    ``breakpoints`` lists interior points where the density has a kink or
    an integrable singularity; quadrature routines split there.
    """

    density: Callable[[float], float]
    support_lo: float = 0.0
    support_hi: float = 1.0
    atom_location: Optional[float] = None
    atom_mass: float = 0.0
    breakpoints: tuple = ()
    meta: dict = field(default_factory=dict)
    sub_power: float = 2
    end_powers: Optional[dict] = None
    density_local: Optional[Callable[[float, float], float]] = None

    @property
    def atom(self):
        if self.atom_location is None or self.atom_mass == 0.0:
            return None
        return (self.atom_location, self.atom_mass)

    def __call__(self, y):
        """Density at ``y`` (zero off the support)."""
        return self.density(y)

    def density_mass(self, tol: float = 1e-10) -> float:
        if self.support_hi <= self.support_lo:
            return 0.0
        return integrate(self.density, self.support_lo, self.support_hi, tol,
                         points=self.breakpoints, power=self.sub_power, end_powers=self.end_powers,
                         f_local=self.density_local)

    def total_mass(self, tol: float = 1e-10) -> float:
        return self.atom_mass + self.density_mass(tol)

    def cdf(self, y: float, tol: float = 1e-10) -> float:
        """``Q([0, y])`` including the atom when ``location <= y``."""
        y = min(max(float(y), self.support_lo), self.support_hi)
        lo = self.support_lo
        c = 0.0
        if y > lo:
            c = integrate(self.density, lo, y, tol, points=[p for p in self.breakpoints if lo < p < y],
                          power=self.sub_power, end_powers=self.end_powers,
                         f_local=self.density_local)
        if self.atom is not None and self.atom_location <= y:
            c += self.atom_mass
        return c

    def continuous_cdf(self, tol: float = 1e-8):
        """Vectorised CDF of the normalised absolutely continuous part."""
        total = self.density_mass(tol)
        knots = np.unique(np.concatenate([
            [self.support_lo, self.support_hi], np.asarray(self.breakpoints, dtype=float)]))
        knots = knots[(knots >= self.support_lo) & (knots <= self.support_hi)]
        # On each piece [a, b] the nodes are y = a + (b - a)(1 - cos(pi s))/2,
        # and the CDF is interpolated linearly in u = piece + s.  Near a knot
        # y - a ~ s^2, so square-root edges of the CDF become linear in s.
        s = np.linspace(0.0, 1.0, 257)
        ys, us = [], []
        for k in range(knots.shape[0] - 1):
            a, b = knots[k], knots[k + 1]
            ys.append(a + (b - a) * 0.5 * (1.0 - np.cos(np.pi * s[:-1])))
            us.append(k + s[:-1])
        ys.append(knots[-1:])
        us.append(np.array([knots.shape[0] - 1.0]))
        grid, unode = np.concatenate(ys), np.concatenate(us)
        vals = np.zeros_like(grid)
        for k in range(1, grid.shape[0]):
            vals[k] = vals[k - 1] + integrate(self.density, grid[k - 1], grid[k], tol / grid.shape[0],
                                              power=self.sub_power, end_powers=self.end_powers,
                                              f_local=self.density_local)
        vals /= total

        def F(x):
            x = np.asarray(x, dtype=float)
            xc = np.clip(x, knots[0], knots[-1])
            k = np.clip(np.searchsorted(knots, xc, side="right") - 1, 0, knots.shape[0] - 2)
            a, b = knots[k], knots[k + 1]
            r = np.clip(1.0 - 2.0 * (xc - a) / (b - a), -1.0, 1.0)
            u = k + np.arccos(r) / np.pi
            out = np.interp(u, unode, vals)
            return np.where(x < knots[0], 0.0, np.where(x > knots[-1], 1.0, out))

        return F


# ---------------------------------------------------------------------------
# scalar laws
# ---------------------------------------------------------------------------

def _open_unit(x, name="x"):
    if not 0.0 < x < 1.0:
        raise DomainError(f"{name}={x!r} must lie in (0,1)")


def arcsine_density(x: float) -> float:
    """Stationary density ``1 / (pi sqrt(x (1-x)))`` of ``alpha``."""
    _open_unit(x)
    return 1.0 / (math.pi * math.sqrt(x * (1.0 - x)))


def arcsine_cdf(x):
    """``(2/pi) arcsin(sqrt(x))``, vectorised and clipped to ``[0, 1]``."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return 2.0 / np.pi * np.arcsin(np.sqrt(x))


def survival_no_jump(x: float, y: float) -> float:
    """Probability that ``alpha`` drifts from ``x`` down to ``y`` without a jump."""
    if not 0.0 <= y <= x <= 1.0:
        raise DomainError(f"need 0 <= y <= x <= 1, got x={x!r}, y={y!r}")
    if y == 1.0:
        return 1.0
    return math.sqrt((1.0 - x) / (1.0 - y))


def jump_rate_to_one(x: float) -> float:
    """Rate ``1 / (2 (1-x))`` of jumps from level ``x`` to 1."""
    _open_unit(x)
    return 0.5 / (1.0 - x)


def levy_measure_from_zero(y: float) -> float:
    """Density ``1/sqrt(2 pi y^3 (1-y))`` of jumps from 0 per unit local time at 0."""
    _open_unit(y, "y")
    return 1.0 / math.sqrt(2.0 * math.pi * y ** 3 * (1.0 - y))


def jump_balance_defect(y: float) -> float:
    """
    ``|levy_measure_from_zero(y) / sqrt(2 pi) - f(1-y) jump_rate_to_one(1-y)|``.

    Jumps ``0 -> y`` (local-time clock at 0, rate ``1/sqrt(2 pi)`` per unit
    time under the arcsine law) must balance the time-reversed jumps
    ``1-y -> 1``.
    """
    _open_unit(y, "y")
    lhs = levy_measure_from_zero(y) / math.sqrt(2.0 * math.pi)
    rhs = arcsine_density(1.0 - y) * jump_rate_to_one(1.0 - y)
    return abs(lhs - rhs)


def hit_one_density(x: float, t: float) -> float:
    """Density in ``t`` of the first jump to 1 when started from ``x``."""
    if not (0.0 < x < 1.0 and 0.0 < t <= x):
        raise DomainError(f"need 0 < t <= x < 1, got x={x!r}, t={t!r}")
    return 0.5 / (1.0 - x + t) * math.sqrt((1.0 - x) / (1.0 - x + t))


# ---------------------------------------------------------------------------
# Brownian transition kernel
# ---------------------------------------------------------------------------

# t within this distance above x is treated as t == x: the third-regime
# density then carries the atom as a spike of width t - x, which no
# quadrature rule can resolve.
SNAP = 1e-12


def _check_xt(x, t):
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x!r} must lie in [0,1]")
    if not t > 0.0:
        raise DomainError(f"t={t!r} must be positive")
    if t <= 1.0:
        # make 1 - t exact, so that the support [1 - t, 1] has length t
        # as seen from either end
        t = 1.0 - (1.0 - t)
    if x < t <= x + SNAP:
        t = x
    return t


def _regime3_breaks(x, t):
    return tuple(sorted({p for p in (1.0 - t, t - x) if 0.0 < p < 1.0}))


def kernel_density(x: float, t: float, y: float) -> float:
    """Density part ``q_t(x, y)`` of the Brownian kernel (zero off support)."""
    if not 0.0 < y < 1.0:
        return 0.0
    if t > 1.0:
        return 1.0 / (math.pi * math.sqrt(y * (1.0 - y)))
    p = y + t - 1.0
    if t <= x:
        if p <= 0.0:
            return 0.0
        return math.sqrt(p) / (math.pi * (y + (t - x)) * math.sqrt(1.0 - y))
    num = math.sqrt((1.0 - x) * (t - x)) + (math.sqrt(y * p) if p > 0.0 else 0.0)
    return num / (math.pi * (y + (t - x)) * math.sqrt(y * (1.0 - y)))


def transition_kernel(x: float, t: float) -> MixedKernel:
    """``Q_t(x, dy)`` for the Brownian argmin process."""
    x = float(x)
    t = _check_xt(x, float(t))
    dens = lambda y: kernel_density(x, t, y)  # noqa: E731
    if t > 1.0:
        return MixedKernel(dens, 0.0, 1.0, meta={"x": x, "t": t, "regime": 1})
    # offsets from the piece ends are formed exactly (same formulas at rho = 1/2)
    loc = _stable_local(0.5, x, t, False)
    if t <= x:
        return MixedKernel(dens, 1.0 - t, 1.0, x - t, survival_no_jump(x, x - t),
                           meta={"x": x, "t": t, "regime": 2}, density_local=loc)
    return MixedKernel(dens, 0.0, 1.0, breakpoints=_regime3_breaks(x, t),
                       meta={"x": x, "t": t, "regime": 3}, density_local=loc)


def _kernel_z_breaks(x, s, t):
    pts = {t, 1.0 - s, x - s}
    return tuple(sorted(p for p in pts if 0.0 < p < 1.0))


def chapman_kolmogorov_defect(x: float, s: float, t: float, grid: int = 200,
                              tol: float = 1e-10, density=None, kernel=None) -> float:
    """
    ``sup_y |(Q_s Q_t)(x, dy)/dy - Q_{s+t}(x, dy)/dy|`` over a midpoint grid,
    together with the mismatch of the atoms.

    The composed density collects four flows: density -> density,
    atom -> density, density -> atom (the drift branch of ``Q_t`` applied to
    the density of ``Q_s``), and the atom -> atom mass.
    """
    if not (s > 0 and t > 0):
        raise DomainError("s and t must be positive")
    density = kernel_density if density is None else density
    kernel = transition_kernel if kernel is None else kernel
    Qs = kernel(x, s)
    Qst = kernel(x, s + t)
    defect = 0.0
    # atom -> atom
    comp_atom = 0.0
    if Qs.atom is not None and Qs.atom_location >= t:
        comp_atom = Qs.atom_mass * kernel(Qs.atom_location, t).atom_mass
    ref_atom = Qst.atom_mass if Qst.atom is not None else 0.0
    defect = max(defect, abs(comp_atom - ref_atom))
    zb = _kernel_z_breaks(x, s, t)
    for k in range(grid):
        y = (k + 0.5) / grid
        if any(abs(y - p) < 1e-9 for p in (1.0 - t, 1.0 - s - t, x - s - t)):
            continue
        val = 0.0
        if Qs.atom is not None:
            val += Qs.atom_mass * density(Qs.atom_location, t, y)
        lo, hi = Qs.support_lo, Qs.support_hi
        if hi > lo:
            val += integrate(lambda z: density(x, s, z) * density(z, t, y), lo, hi, tol,
                             points=[p for p in zb + (y + t,) if lo < p < hi])
        z = y + t
        if z < 1.0 and t <= z and lo < z < hi:
            val += density(x, s, z) * kernel(z, t).atom_mass
        defect = max(defect, abs(val - density(x, s + t, y)))
    return defect


def stationarity_defect(t: float, y: float, tol: float = 1e-11,
                        density=None, kernel=None, f=None) -> float:
    """``|int f(x) q_t(x, y) dx + f(y+t) Q_t(y+t, {y}) - f(y)|``."""
    density = kernel_density if density is None else density
    kernel = transition_kernel if kernel is None else kernel
    f = arcsine_density if f is None else f
    pts = [p for p in (t, y + t, 1.0 - t) if 0.0 < p < 1.0]
    val = integrate(lambda x: f(x) * density(x, t, y), 0.0, 1.0, tol, points=pts)
    z = y + t
    if z < 1.0 and t <= z:
        val += f(z) * kernel(z, t).atom_mass
    return abs(val - f(y))


def reversal_defect(x: float, y: float, t: float) -> float:
    """
    Detailed flow balance under time reversal:
    ``|f(x) q_t(x, y) - f(1-y) q_t(1-y, 1-x)|`` for the density parts.
    """
    f = arcsine_density
    return abs(f(x) * kernel_density(x, t, y) - f(1.0 - y) * kernel_density(1.0 - y, t, 1.0 - x))


def reversal_atom_defect(x: float, t: float) -> float:
    """``|f(x) s(x, x-t) - f(1-x+t) s(1-x+t, 1-x)|`` for ``0 < t < x < 1``."""
    f = arcsine_density
    z = 1.0 - x + t
    return abs(f(x) * survival_no_jump(x, x - t) - f(z) * survival_no_jump(z, 1.0 - x))


def intertwining_gap(t: float, tol: float = 1e-12):
    """
    The two sides of the intertwining test for the meander endpoint.

    Returns ``(lhs, rhs)`` with ``lhs = sqrt(pi (1-t) / 2)`` and
    ``rhs = lhs + (2 pi)^{-1/2} int_{1-t}^1 sqrt(y+t-1) / sqrt(y (1-y)) dy``;
    ``rhs > lhs`` for every ``t`` in ``(0, 1]``, so the Markov property fails
    to transfer through the intertwining.
    """
    if not 0.0 < t <= 1.0:
        raise DomainError("t must lie in (0,1]")
    lhs = math.sqrt(math.pi * (1.0 - t) / 2.0)
    # y = 1 - t v keeps 1 - y exact for small t
    extra = t * integrate(lambda v: math.sqrt((1.0 - v) / (v * (1.0 - t * v))), 0.0, 1.0, tol)
    return lhs, lhs + extra / SQRT_2PI


# ---------------------------------------------------------------------------
# stable generalisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float
    rho: float = field(init=False)

    def __post_init__(self):
        rho = positivity_parameter(self.alpha, self.beta)
        if not 0.0 < rho < 1.0:
            raise SubordinatorRejected(f"rho={rho} is degenerate")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_rho(cls, rho: float) -> "StableParams":
        """Parameters with positivity ``rho`` (alpha=1.5 unless rho=1/2)."""
        if not 0.0 < rho < 1.0:
            raise DomainError("rho must lie in (0,1)")
        if rho == 0.5:
            return cls(2.0, 0.0)
        alpha = 1.5
        beta = math.tan((rho - 0.5) * math.pi * alpha) / math.tan(math.pi * alpha / 2.0)
        if abs(beta) > 1.0:
            raise DomainError(f"rho={rho} not reachable with alpha={alpha}")
        return cls(alpha, beta)


def stable_stationary_density(rho: float, x: float) -> float:
    """Generalised arcsine density ``(sin pi rho / pi) x^{-rho} (1-x)^{rho-1}``."""
    _open_unit(x)
    return math.sin(math.pi * rho) / math.pi * x ** (-rho) * (1.0 - x) ** (rho - 1.0)


def stable_jump_rate(rho: float, x: float) -> float:
    """Rate ``(1 - rho) / (1 - x)`` of jumps to 1 from level ``x``."""
    _open_unit(x)
    return (1.0 - rho) / (1.0 - x)


def stable_kernel_density(rho: float, x: float, t: float, y: float, printed: bool = False) -> float:
    """
    Density part of the stable kernel.

    In the drift regime ``t <= x`` the landing density after a jump to 1 is
    ``c (1-y)^{rho-1} (y+t-1)_+^{1-rho} / (y+t-x)``, which is the
    ``x -> t`` limit of the third-regime density and gives total mass one.
    ``printed=True`` uses the exponent ``rho`` on ``(y+t-1)_+`` instead; that
    variant is only normalised at ``rho = 1/2`` and is kept for diagnostics.
    """
    if not 0.0 < y < 1.0:
        return 0.0
    return _stable_density_parts(rho, x, t, y, 1.0 - y, y + t - 1.0, printed)


def _stable_density_parts(rho, x, t, y, one_minus_y, p, printed):
    # kernel density from y, 1-y and p = y+t-1 supplied separately
    if not (0.0 < y and one_minus_y > 0.0):
        return 0.0
    c = math.sin(math.pi * rho) / math.pi
    if t > 1.0:
        return c * y ** (-rho) * one_minus_y ** (rho - 1.0)
    if t <= x:
        if p <= 0.0:
            return 0.0
        e = rho if printed else 1.0 - rho
        # y + t - x = p + (1 - x)
        return c * one_minus_y ** (rho - 1.0) * p ** e / (p + (1.0 - x))
    bracket = (t - x) ** rho * (1.0 - x) ** (1.0 - rho)
    if p > 0.0:
        bracket += y ** rho * p ** (1.0 - rho)
    return c / (y + (t - x)) * y ** (-rho) * one_minus_y ** (rho - 1.0) * bracket


def _stable_local(rho, x, t, printed):
    def f(anchor, off):
        y = anchor + off
        if anchor == 1.0:
            omy = -off
        else:
            omy = (1.0 - anchor) - off
        if t <= 1.0:
            # 1 - t is exact (see _check_xt), so this difference is too
            # whenever anchor is near 1 - t
            p = (anchor - (1.0 - t)) + off
        else:
            p = (anchor + t - 1.0) + off
        return _stable_density_parts(rho, x, t, y, omy, p, printed)
    return f


def stable_transition_kernel(params, x: float, t: float, printed: bool = False) -> MixedKernel:
    """
    ``Q_t(x, dy)`` for the argmin process of a stable process with
    positivity parameter ``rho``; ``params`` is a :class:`StableParams`
    or a bare ``rho``.
    """
    rho = params.rho if isinstance(params, StableParams) else float(params)
    if not 0.0 < rho < 1.0:
        raise SubordinatorRejected(f"rho={rho} is degenerate")
    x = float(x)
    t = _check_xt(x, float(t))
    dens = lambda y: stable_kernel_density(rho, x, t, y, printed)  # noqa: E731
    meta = {"x": x, "t": t, "rho": rho, "printed": printed}
    # y^{-rho} at 0 and (1-y)^{rho-1} at 1 become constants in the
    # substituted variable with these exponents
    ends = {0.0: 1.0 / (1.0 - rho), 1.0: 1.0 / rho}
    loc = _stable_local(rho, x, t, printed)
    if t > 1.0:
        return MixedKernel(dens, 0.0, 1.0, meta=dict(meta, regime=1), end_powers=ends,
                           density_local=loc)
    if t <= x:
        mass = ((1.0 - x) / (1.0 - x + t)) ** (1.0 - rho)
        # at y = 1-t the density behaves like (y+t-1)^e, one power lower when x = 1
        e = (rho if printed else 1.0 - rho) - (1.0 if x == 1.0 else 0.0)
        if e < 0.0:
            ends = dict(ends)
            ends[1.0 - t] = 1.0 / (1.0 + e)
        return MixedKernel(dens, 1.0 - t, 1.0, x - t, mass, meta=dict(meta, regime=2), end_powers=ends,
                           density_local=loc)
    return MixedKernel(dens, 0.0, 1.0, breakpoints=_regime3_breaks(x, t),
                       meta=dict(meta, regime=3), end_powers=ends, density_local=loc)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def tabulate_kernel(xs: Sequence[float], ts: Sequence[float], ys: Sequence[float],
                    rho: Optional[float] = None, precision: int = 12):
    """
    Tabulate kernels for all ``(x, t)`` pairs.

    Returns ``(csv_text, atoms)`` where the CSV has columns
    ``x, t, y, density`` and ``atoms`` is a list of
    ``{x, t, location, mass}`` records.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "t", "y", "density"])
    fmt = f"{{:.{precision}g}}"
    atoms = []
    for x in xs:
        for t in ts:
            K = transition_kernel(x, t) if rho is None or rho == 0.5 else stable_transition_kernel(rho, x, t)
            for y in ys:
                w.writerow([fmt.format(x), fmt.format(t), fmt.format(y), fmt.format(K(y))])
            if K.atom is not None:
                atoms.append({"x": float(x), "t": float(t), "location": float(K.atom_location),
                              "mass": float(K.atom_mass)})
    return buf.getvalue(), atoms


def atoms_json(atoms, indent=None) -> str:
    return json.dumps(atoms, indent=indent, sort_keys=True)
