"""
Path functionals of the argmin process.

Given a sampled path, compute the argmin trajectory ``alpha`` (position of
the last minimum inside a sliding unit window), its jumps, the set of
``(a,b)``-minima with the left/right meander ends LE / RE, the
T / G / D decomposition of the renewal gaps, and first long ladder times.

Grid conventions
----------------
* A window of length ``w`` covers ``m = w/dt`` steps, i.e. ``m + 1`` samples.
* Ties inside a window are resolved toward the largest index (the ``sup``
  in the definition of the argmin).
* A point is in LE (RE) when it is the *strict* minimum of the ``b``-window
  to its right (``a``-window to its left); T = LE ∩ RE.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import HorizonTooShort, NonIntegerWindow, NotFound, WindowTooLarge
from .pathsim import SampledPath

ZERO_TO_INTERIOR = 0
INTERIOR_TO_ONE = 1
ANOMALY = 2
JUMP_KINDS = {ZERO_TO_INTERIOR: "zero_to_interior", INTERIOR_TO_ONE: "interior_to_one",
              ANOMALY: "anomaly"}

JUMP_DTYPE = np.dtype([("time", "f8"), ("from_level", "f8"), ("to_level", "f8"), ("kind", "i1")])


def window_steps(window: float, dt: float, minimum: int = 1) -> int:
    """Number of grid steps in ``window``; raises unless it is an integer."""
    r = window / dt
    m = int(round(r))
    if abs(r - m) > 1e-9 * max(1.0, r) or m < minimum:
        raise NonIntegerWindow(f"window {window!r} is not a multiple (>= {minimum}) of dt={dt!r}")
    return m


# ---------------------------------------------------------------------------
# argmin trajectory
# ---------------------------------------------------------------------------

@dataclass
class ArgminTrajectory:
    """
    ``alpha`` sampled at the grid times ``t0 + k dt``.

    Attributes
    ----------
    dt : float
    samples : ndarray
        ``alpha_{t_k}`` in ``[0, window]`` (``[0, 1]`` for a unit window).
    offsets : ndarray of int64
        The same in grid steps.
    window : float
    jumps : structured ndarray (JUMP_DTYPE)
    """

    dt: float
    samples: np.ndarray
    offsets: np.ndarray
    window: float = 1.0
    t0: float = 0.0
    jumps: np.ndarray = field(default_factory=lambda: np.zeros(0, JUMP_DTYPE))

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.samples.shape[0])

    @property
    def n_anomalies(self) -> int:
        return int(np.count_nonzero(self.jumps["kind"] == ANOMALY))


def argmin_trajectory(path: SampledPath, window: float = 1.0, with_jumps: bool = True) -> ArgminTrajectory:
    """
    ``alpha_t = dt * (last i in [0, m] minimising path over [t, t + window])``.

    Computed for every grid ``t`` whose window fits in the path, with a
    monotone-deque sliding minimum (O(n)).

    Raises
    ------
    NonIntegerWindow
        ``window / dt`` is not an integer ``>= 2``.
    WindowTooLarge
        The path is shorter than one window.
    """
    m = window_steps(window, path.dt, minimum=2)
    if m > path.n:
        raise WindowTooLarge(f"window of {m} steps exceeds path of {path.n} steps")
    off = _kernels.sliding_last_argmin(path.values, m)
    traj = ArgminTrajectory(path.dt, off * path.dt, off, float(window), path.t0)
    if with_jumps:
        traj.jumps = detect_jumps(traj)
    return traj


def detect_jumps(traj: ArgminTrajectory) -> np.ndarray:
    """
    Jumps of a sampled trajectory and their classification.

    A jump is recorded at step ``k`` when ``samples[k+1] - (samples[k] - dt)
    > 2 dt``.  It is ``zero_to_interior`` when it starts within ``2 dt`` of 0,
    ``interior_to_one`` when it ends within ``2 dt`` of the window length,
    and ``anomaly`` when it is neither -- or both, i.e. a jump across the
    whole window, which has probability zero for a continuous path.
    """
    s = np.asarray(traj.samples, dtype=np.float64)
    dt = traj.dt
    w = traj.window
    if s.shape[0] < 2:
        return np.zeros(0, JUMP_DTYPE)
    k = np.flatnonzero(s[1:] - (s[:-1] - dt) > 2.0 * dt)
    lo = s[k]
    hi = s[k + 1]
    from_zero = lo <= 2.0 * dt
    to_one = hi >= w - 2.0 * dt
    kind = np.full(k.shape[0], ANOMALY, np.int8)
    kind[from_zero & ~to_one] = ZERO_TO_INTERIOR
    kind[to_one & ~from_zero] = INTERIOR_TO_ONE
    out = np.empty(k.shape[0], JUMP_DTYPE)
    out["time"] = traj.t0 + (k + 1) * dt
    out["from_level"] = lo
    out["to_level"] = hi
    out["kind"] = kind
    return out


# ---------------------------------------------------------------------------
# left / right ends and (a,b)-minima
# ---------------------------------------------------------------------------

def left_ends(values: np.ndarray, m: int) -> np.ndarray:
    """Mask of indices that are strict minima of the next ``m`` steps."""
    n1 = values.shape[0]
    mask = np.zeros(n1, np.bool_)
    mask[: n1 - m] = _kernels.sliding_last_argmin(values, m) == 0
    return mask


def right_ends(values: np.ndarray, m: int) -> np.ndarray:
    """Mask of indices that are strict minima of the previous ``m`` steps."""
    n1 = values.shape[0]
    mask = np.zeros(n1, np.bool_)
    rev = _kernels.sliding_last_argmin(values[::-1].copy(), m) == 0
    mask[m:] = rev[::-1]
    return mask


@dataclass
class ExtremaDecomposition:
    """
    (a,b)-minima of a path and, when ``a == b``, the T / G / D
    decomposition of every complete gap.

    Times are absolute path times.  Per-gap arrays have ``len(T) - 1``
    entries; ``N`` counts ladder trials of the gap construction and is
    ``-1`` where unavailable (``a != b``).
    """

    a: float
    b: float
    dt: float
    T: np.ndarray
    G: np.ndarray
    D: np.ndarray
    LE: np.ndarray
    RE: np.ndarray
    delta: np.ndarray
    N: np.ndarray
    H: np.ndarray
    T_idx: np.ndarray = field(repr=False, default=None)
    construction_ok: np.ndarray = field(repr=False, default=None)

    @property
    def n_gaps(self) -> int:
        return self.delta.shape[0]

    def to_csv(self, fh=None, precision: int = 12) -> Optional[str]:
        """Columns ``i, T, G, D, delta, N, H``; returns text if ``fh`` is None."""
        own = fh is None
        buf = io.StringIO() if own else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "T", "G", "D", "delta", "N", "H"])
        fmt = f"{{:.{precision}g}}"
        have_gd = self.G.shape[0] == self.n_gaps
        for i in range(self.n_gaps):
            w.writerow([i, fmt.format(self.T[i]),
                        fmt.format(self.G[i]) if have_gd else "",
                        fmt.format(self.D[i]) if have_gd else "",
                        fmt.format(self.delta[i]), int(self.N[i]), fmt.format(self.H[i])])
        return buf.getvalue() if own else None


def extract_ab_minima(path: SampledPath, a: float = 1.0, b: float = 1.0,
                      trials: bool = True) -> ExtremaDecomposition:
    """
    ``(a,b)``-minima: grid times ``t`` whose value is the strict minimum of
    the path over ``[t - a, t + b]``.

    For ``a == b`` the gap structure is filled in as well: for the gap
    ``(T_i, T_{i+1}]``, ``D_i`` is the first right end after ``T_i``,
    ``G_i`` the last left end before ``D_i``, ``N_i`` the number of ladder
    trials the step-by-step construction needs to reach ``T_{i+1}``
    (set ``trials=False`` to skip it) and ``H_i = B(T_{i+1}) - B(T_i)``.

    Raises
    ------
    HorizonTooShort
        If the path horizon does not exceed ``a + b``.
    """
    x = path.values
    ma = window_steps(a, path.dt)
    mb = window_steps(b, path.dt)
    if path.n <= ma + mb:
        raise HorizonTooShort(f"horizon {path.horizon} must exceed a+b={a + b}")
    le = left_ends(x, mb)
    re = right_ends(x, ma)
    t_idx = np.flatnonzero(le & re)
    to_t = lambda idx: path.t0 + path.dt * idx  # noqa: E731
    delta = np.diff(t_idx) * path.dt
    H = np.diff(x[t_idx])
    ngap = delta.shape[0]
    if ma != mb:
        empty = np.zeros(0)
        return ExtremaDecomposition(a, b, path.dt, to_t(t_idx), empty, empty, empty, empty,
                                    delta, np.full(ngap, -1, np.int64), H, t_idx, None)
    le_idx = np.flatnonzero(le)
    re_idx = np.flatnonzero(re)
    if ngap:
        d_idx = re_idx[np.searchsorted(re_idx, t_idx[:-1], side="right")]
        g_idx = le_idx[np.searchsorted(le_idx, d_idx, side="left") - 1]
    else:
        d_idx = g_idx = np.zeros(0, np.int64)
    if trials and ngap:
        N, ok = _kernels.construction_trials(x, le, re, t_idx, mb)
    else:
        N, ok = np.full(ngap, -1, np.int64), None
    return ExtremaDecomposition(a, b, path.dt, to_t(t_idx), to_t(g_idx), to_t(d_idx),
                                to_t(le_idx), to_t(re_idx), delta, N, H, t_idx, ok)


GAP_DTYPE = np.dtype([("delta", "f8"), ("GT", "f8"), ("DG", "f8"), ("TD", "f8"),
                      ("N", "i8"), ("H", "f8")])


def gap_statistics(dec: ExtremaDecomposition) -> np.ndarray:
    """
    Per-gap record: ``delta``, ``GT = G - T``, ``DG = D - G``,
    ``TD = T_next - D``, trial count ``N`` and increment ``H``.
    """
    if dec.a != dec.b:
        raise ValueError("the T/G/D decomposition is defined for a == b")
    n = dec.n_gaps
    out = np.empty(n, GAP_DTYPE)
    out["delta"] = dec.delta
    out["GT"] = dec.G - dec.T[:n]
    out["DG"] = dec.D - dec.G
    out["TD"] = dec.T[1:n + 1] - dec.D
    out["N"] = dec.N
    out["H"] = dec.H
    return out


# ---------------------------------------------------------------------------
# ladder times
# ---------------------------------------------------------------------------

@dataclass
class LadderRecord:
    """First long ladder time ``J`` and the unit-length meander that follows."""

    J: float
    meander_segment: SampledPath


def extract_first_long_ladder(path: SampledPath, window: float = 1.0) -> LadderRecord:
    """
    First time ``J`` at which the path sits at its running minimum and then
    stays strictly above it for a full ``window``.

    Raises
    ------
    NotFound
        If no such time exists with the whole following window on the path.
    """
    x = path.values
    m = window_steps(window, path.dt)
    if m > path.n:
        raise NotFound("path shorter than one window")
    le = left_ends(x, m)
    u = int(_kernels.first_ladder_points(x, le, np.zeros(1, np.int64))[0])
    if u < 0:
        raise NotFound("no ladder time followed by a complete excursion of the window length")
    seg = x[u:u + m + 1] - x[u]
    return LadderRecord(path.t0 + u * path.dt, SampledPath(0.0, path.dt, seg))


def ladder_samples(path: SampledPath, starts: np.ndarray, window: float = 1.0,
                   le: Optional[np.ndarray] = None) -> np.ndarray:
    """
    ``J`` measured from each start index: by the Markov property each
    sample has the law of the first long ladder time of a fresh path.
    Starts with no ladder point before the path end are dropped.
    """
    m = window_steps(window, path.dt)
    if le is None:
        le = left_ends(path.values, m)
    starts = np.asarray(starts, dtype=np.int64)
    u = _kernels.first_ladder_points(path.values, le, starts)
    keep = u >= 0
    return (u[keep] - starts[keep]) * path.dt
