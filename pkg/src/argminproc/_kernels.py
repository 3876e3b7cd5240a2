"""
Hot loops of the Monte Carlo core, in two flavours.

Each kernel exists as a numba ``@njit`` function and as a pure-numpy
equivalent with identical output.  The numba path is used by default; set
``ARGMINPROC_DISABLE_NUMBA=1`` in the environment (or call
:func:`set_backend`) to force the numpy path, e.g. on platforms without
numba or to cross-check the two implementations.

Kernels
-------
sliding_last_argmin
    Offset of the *last* minimiser of every window ``x[i : i+m+1]``.
first_ladder_points
    First descending ladder point, restricted to a marked subset, after
    each of a batch of start indices.
construction_trials
    Number of ladder trials needed to get from one (1,1)-minimum to the
    next in the step-by-step construction of the renewal gap.
volterra_renewal
    Trapezoid solution of ``g = h - h * g`` on a uniform grid.
transition_tally
    One-step transition counts of an integer state sequence.
cell_volterra
    Product-integration solve of a first-kind Volterra equation.
"""
import contextlib
import os

import numpy as np

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


ENV_FLAG = "ARGMINPROC_DISABLE_NUMBA"


def _flag_disables(value):
    return str(value).strip().lower() in ("1", "true", "yes", "on")


_BACKEND = "numpy" if (_flag_disables(os.environ.get(ENV_FLAG, "0"))
                       or not HAVE_NUMBA) else "numba"


def get_backend():
    """Name of the active backend, ``'numba'`` or ``'numpy'``."""
    return _BACKEND


def set_backend(name):
    """Select the backend globally; returns the previous one."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable in this environment")
    prev, _BACKEND = _BACKEND, name
    return prev


@contextlib.contextmanager
def use_backend(name):
    prev = set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


# --------------------------------------------------------------------------
# sliding-window last argmin
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _sliding_last_argmin_nb(x, m):
    n = x.shape[0]
    out = np.empty(n - m, np.int64)
    dq = np.empty(n, np.int64)
    head = 0
    tail = 0
    for k in range(n):
        v = x[k]
        # ">=" evicts equal values, so the deque front is the last minimiser
        while tail > head and x[dq[tail - 1]] >= v:
            tail -= 1
        dq[tail] = k
        tail += 1
        i = k - m
        if i >= 0:
            while dq[head] < i:
                head += 1
            out[i] = dq[head] - i
    return out


def _sliding_last_argmin_np(x, m):
    # Sparse-table doubling: level j holds the last argmin of x[i : i+2^j].
    # Only the current level is kept, so memory is O(n).
    n = x.shape[0]
    L = m + 1
    cur = np.arange(n, dtype=np.int64)
    span = 1
    while 2 * span <= L:
        left = cur[: n - 2 * span + 1]
        right = cur[span: n - span + 1]
        cur = np.where(x[right] <= x[left], right, left)
        span *= 2
    nout = n - m
    left = cur[:nout]
    right = cur[L - span: L - span + nout]
    best = np.where(x[right] <= x[left], right, left)
    return best - np.arange(nout, dtype=np.int64)


def sliding_last_argmin(x, m):
    """
    Offset of the last minimiser in each window of ``m+1`` points.

    Parameters
    ----------
    x : ndarray of float64, shape (n,)
    m : int
        Window length in steps; windows are ``x[i], ..., x[i+m]``.

    Returns
    -------
    ndarray of int64, shape (n-m,)
        ``out[i]`` in ``[0, m]``; ties resolve to the largest index.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    m = int(m)
    if m < 0 or m >= x.shape[0]:
        raise ValueError("window must satisfy 0 <= m < len(x)")
    if _BACKEND == "numba":
        return _sliding_last_argmin_nb(x, m)
    return _sliding_last_argmin_np(x, m)


# --------------------------------------------------------------------------
# ladder search
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _first_ladder_nb(path, mark, start, stop):
    run = np.inf
    for u in range(start, stop):
        v = path[u]
        if v <= run:
            run = v
            if mark[u]:
                return u
    return -1


@njit(cache=True, nogil=True)
def _first_ladder_points_nb(path, mark, starts, stop):
    out = np.empty(starts.shape[0], np.int64)
    for j in range(starts.shape[0]):
        out[j] = _first_ladder_nb(path, mark, starts[j], stop)
    return out


def _first_ladder_np(path, mark, start, stop, chunk=4096):
    run = np.inf
    s = start
    while s < stop:
        e = min(stop, s + chunk)
        seg = path[s:e]
        rm = np.minimum.accumulate(np.minimum(seg, run))
        hit = (seg <= rm) & mark[s:e]
        if hit.any():
            return s + int(np.argmax(hit))
        run = rm[-1]
        s = e
        chunk *= 2
    return -1


def _first_ladder_points_np(path, mark, starts, stop):
    return np.array([_first_ladder_np(path, mark, int(s), stop)
                     for s in starts], dtype=np.int64)


def first_ladder_points(path, mark, starts, stop=None):
    """
    For each start index s, the first u >= s with ``path[u] == min(path[s:u+1])``
    and ``mark[u]`` true, or -1 if none exists before ``stop``.
    """
    path = np.ascontiguousarray(path, dtype=np.float64)
    mark = np.ascontiguousarray(mark, dtype=np.bool_)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    stop = path.shape[0] if stop is None else int(stop)
    if _BACKEND == "numba":
        return _first_ladder_points_nb(path, mark, starts, stop)
    return _first_ladder_points_np(path, mark, starts, stop)


@njit(cache=True, nogil=True)
def _construction_trials_nb(path, le, re, t_idx, skip):
    ngap = t_idx.shape[0] - 1
    counts = np.zeros(ngap, np.int64)
    ok = np.zeros(ngap, np.bool_)
    n = path.shape[0]
    for i in range(ngap):
        s = t_idx[i] + skip
        target = t_idx[i + 1]
        c = 0
        while s < n:
            u = _first_ladder_nb(path, le, s, n)
            if u < 0 or u > target:
                break
            c += 1
            if re[u]:
                ok[i] = u == target
                break
            s = u + skip
        counts[i] = c
    return counts, ok


def _construction_trials_np(path, le, re, t_idx, skip):
    ngap = t_idx.shape[0] - 1
    counts = np.zeros(ngap, np.int64)
    ok = np.zeros(ngap, np.bool_)
    n = path.shape[0]
    for i in range(ngap):
        s = int(t_idx[i]) + skip
        target = int(t_idx[i + 1])
        c = 0
        while s < n:
            u = _first_ladder_np(path, le, s, n)
            if u < 0 or u > target:
                break
            c += 1
            if re[u]:
                ok[i] = u == target
                break
            s = u + skip
        counts[i] = c
    return counts, ok


def construction_trials(path, le, re, t_idx, skip):
    """
    Trial counts of the ladder construction between consecutive minima.

    Starting just after ``T_i`` (``skip`` steps later), look for the first
    descending ladder point that is a left end (``le``).  Each such point is
    one trial; the construction stops at the first trial that is also a
    right end (``re``), which must then coincide with ``T_{i+1}``.

    Returns
    -------
    counts : ndarray of int64, shape (len(t_idx)-1,)
    ok : ndarray of bool
        True where the construction terminated exactly at ``T_{i+1}``.
    """
    path = np.ascontiguousarray(path, dtype=np.float64)
    le = np.ascontiguousarray(le, dtype=np.bool_)
    re = np.ascontiguousarray(re, dtype=np.bool_)
    t_idx = np.ascontiguousarray(t_idx, dtype=np.int64)
    if t_idx.shape[0] < 2:
        return np.zeros(0, np.int64), np.zeros(0, np.bool_)
    if _BACKEND == "numba":
        return _construction_trials_nb(path, le, re, t_idx, int(skip))
    return _construction_trials_np(path, le, re, t_idx, int(skip))


# --------------------------------------------------------------------------
# renewal (Volterra) equation
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _volterra_renewal_nb(h, dt):
    n = h.shape[0]
    g = np.empty(n)
    d = 1.0 + 0.5 * dt * h[0]
    g[0] = h[0] / d
    for k in range(1, n):
        acc = 0.5 * h[k] * g[0]
        for j in range(1, k):
            acc += h[j] * g[k - j]
        g[k] = (h[k] - dt * acc) / d
    return g


def _volterra_renewal_np(h, dt):
    n = h.shape[0]
    g = np.empty(n)
    d = 1.0 + 0.5 * dt * h[0]
    g[0] = h[0] / d
    nz = np.flatnonzero(h)
    j0 = int(nz[0]) if nz.size else n
    j0 = max(j0, 1)
    for k in range(1, n):
        acc = 0.5 * h[k] * g[0]
        if k > j0:
            # sum_{j=j0}^{k-1} h[j] g[k-j]
            acc += np.dot(h[j0:k], g[k - j0:0:-1])
        g[k] = (h[k] - dt * acc) / d
    return g


def volterra_renewal(h, dt):
    """
    Solve ``g = h - (h * g)`` with trapezoid convolution on a uniform grid.

    ``g`` is the density whose Laplace transform is ``H / (1 + H)``; with
    ``h`` the (signed) kernel this is the alternating convolution series
    ``sum (-1)^(n-1) h^{*n}`` summed in closed form.
    """
    h = np.ascontiguousarray(h, dtype=np.float64)
    if _BACKEND == "numba":
        return _volterra_renewal_nb(h, float(dt))
    return _volterra_renewal_np(h, float(dt))


@njit(cache=True, nogil=True)
def _transition_tally_nb(states, nstates):
    counts = np.zeros((nstates, nstates), np.int64)
    for k in range(states.shape[0] - 1):
        counts[states[k], states[k + 1]] += 1
    return counts


def _transition_tally_np(states, nstates):
    flat = states[:-1] * nstates + states[1:]
    return np.bincount(flat, minlength=nstates * nstates).reshape(
        nstates, nstates).astype(np.int64)


def transition_tally(states, nstates):
    """Matrix of one-step transition counts of an integer state sequence."""
    states = np.ascontiguousarray(states, dtype=np.int64)
    if states.shape[0] < 2:
        return np.zeros((nstates, nstates), np.int64)
    if _BACKEND == "numba":
        return _transition_tally_nb(states, int(nstates))
    return _transition_tally_np(states, int(nstates))


@njit(cache=True, nogil=True)
def _cell_volterra_nb(A, rhs):
    n = A.shape[0]
    f = np.zeros(n)
    for k in range(1, n):
        s = 0.0
        for j in range(1, k):
            s += f[j] * A[k - j]
        f[k] = (rhs - s) / A[0]
    return f


def _cell_volterra_np(A, rhs):
    n = A.shape[0]
    f = np.zeros(n)
    for k in range(1, n):
        s = np.dot(f[1:k], A[k - 1:0:-1]) if k > 1 else 0.0
        f[k] = (rhs - s) / A[0]
    return f


def cell_volterra(A, rhs=1.0):
    """
    Cell values ``f_1..f_{n-1}`` solving ``sum_{j<=k} f_j A[k-j] = rhs``
    for every ``k`` (``f_0 = 0``): a product-integration discretisation of
    a first-kind Volterra equation with kernel cell weights ``A``.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    if _BACKEND == "numba":
        return _cell_volterra_nb(A, float(rhs))
    return _cell_volterra_np(A, float(rhs))
