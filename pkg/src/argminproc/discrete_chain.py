"""
The argmin chain of a random walk.

For a walk ``S`` and a window of ``N`` steps, ``A_N(n)`` is the last index
``i in {0, ..., N}`` at which ``S_{n+i}`` attains ``min(S_n, ..., S_{n+N})``.
It is a stationary Markov chain whose law is driven by the persistence
probabilities

    p_n = P(S_1 >= 0, ..., S_n >= 0),    p~_n = P(S_1 > 0, ..., S_n > 0),
    p-_n = P(S_1 <= 0, ..., S_n <= 0),

themselves obtained from the one-dimensional marginals ``P(S_n >= 0)`` and
``P(S_n > 0)`` through the Sparre Andersen recursion

    n p_n = sum_{k=1}^{n} P(S_k >= 0) p_{n-k},    p_0 = 1,

and its analogues with ``P(S_k > 0)`` and ``P(S_k <= 0) = 1 - P(S_k > 0)``.

Seen backwards from the window minimum, the walk has increments ``-X``, so
the stationary law is ``pi(k) = p-_k p~_{N-k}`` and the exits from state 0
are governed by ``p-``.  For walks with ``P(S_n >= 0) = P(S_n <= 0)`` (in
particular all symmetric walks) ``p- = p`` and this is the familiar discrete
arcsine law ``p_k p~_{N-k}``; for asymmetric walks the product ``p_k
p~_{N-k}`` is not a probability vector (for the continuous ``theta`` family
it sums to ``(2 theta)_N / N!``), see :func:`compare_theta_printed_forms`.

The general formulas (``chain_law``) are the source of truth; the closed
forms for the continuous ``theta`` family and the simple symmetric walk are
cross-checks.  Simple-symmetric-walk quantities are dyadic rationals and are
carried as :class:`fractions.Fraction` so that comparisons are exact.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DomainError, ModelMismatch, TooLarge
from .pathsim import IncrementModel, as_seed, positivity_parameter


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WalkLawInput:
    """
    One-dimensional marginals of the walk.

    Attributes
    ----------
    prob_ge : sequence
        ``P(S_n >= 0)`` for ``n = 1..M``.
    prob_gt : sequence
        ``P(S_n > 0)`` for ``n = 1..M``.
    exact : bool
        True when the entries are :class:`~fractions.Fraction` instances.
    """

    prob_ge: tuple
    prob_gt: tuple
    exact: bool = False

    def __post_init__(self):
        ge, gt = tuple(self.prob_ge), tuple(self.prob_gt)
        if len(ge) != len(gt) or len(ge) == 0:
            raise DomainError("prob_ge and prob_gt must be nonempty and of equal length")
        for a, b in zip(ge, gt):
            if not (0 <= b <= a <= 1):
                raise DomainError("need 0 <= P(S_n > 0) <= P(S_n >= 0) <= 1")
        exact = all(isinstance(v, (Fraction, int)) for v in ge + gt)
        if not exact:
            ge = tuple(float(v) for v in ge)
            gt = tuple(float(v) for v in gt)
        else:
            ge = tuple(Fraction(v) for v in ge)
            gt = tuple(Fraction(v) for v in gt)
        object.__setattr__(self, "prob_ge", ge)
        object.__setattr__(self, "prob_gt", gt)
        object.__setattr__(self, "exact", exact)

    @property
    def M(self) -> int:
        return len(self.prob_ge)

    @classmethod
    def ssrw(cls, M: int, exact: bool = True) -> "WalkLawInput":
        """Simple symmetric walk: ``P(S_2m = 0) = C(2m,m) 4^-m``, odd times ½."""
        half = Fraction(1, 2)
        ge, gt = [], []
        for n in range(1, int(M) + 1):
            if n % 2:
                ge.append(half)
                gt.append(half)
            else:
                m = n // 2
                z = Fraction(math.comb(2 * m, m), 4 ** m)
                ge.append(half * (1 + z))
                gt.append(half * (1 - z))
        if not exact:
            ge = [float(v) for v in ge]
            gt = [float(v) for v in gt]
        return cls(tuple(ge), tuple(gt))

    @classmethod
    def theta(cls, theta: float, M: int) -> "WalkLawInput":
        """Continuous increments with ``P(S_n > 0) = theta`` for every ``n``."""
        if not 0.0 < theta < 1.0:
            raise DomainError("theta must lie in (0,1)")
        v = (float(theta),) * int(M)
        return cls(v, v)

    @classmethod
    def from_model(cls, model: IncrementModel, M: int) -> "WalkLawInput":
        if model.kind == "rademacher":
            return cls.ssrw(M)
        if model.kind == "gaussian":
            return cls.theta(0.5, M)
        if model.kind == "generic_continuous":
            return cls.theta(model.theta, M)
        return cls.theta(positivity_parameter(model.alpha, model.beta), M)


def ladder_probs(inp: WalkLawInput):
    """
    Persistence probabilities ``p_0..p_M`` and ``p~_0..p~_M``.

    Returns lists of Fractions when the input is exact, float arrays
    otherwise.
    """
    p, pt = _persistence(inp.prob_ge, inp.exact), _persistence(inp.prob_gt, inp.exact)
    if inp.exact:
        return p, pt
    return np.array(p), np.array(pt)


def _persistence(a, exact):
    one = Fraction(1) if exact else 1.0
    p = [one]
    for n in range(1, len(a) + 1):
        s = sum((a[k - 1] * p[n - k] for k in range(1, n + 1)), 0 * one)
        p.append(s / n)
    return p


def reversed_persistence(inp: WalkLawInput):
    """
    ``p-_0..p-_M`` with ``p-_n = P(S_1 <= 0, ..., S_n <= 0)``, the weak
    persistence of the reversed walk ``-S``.
    """
    p = _persistence([1 - g for g in inp.prob_gt], inp.exact)
    return p if inp.exact else np.array(p)


# ---------------------------------------------------------------------------
# chain law
# ---------------------------------------------------------------------------

def _fmt(v, precision):
    if isinstance(v, Fraction):
        return str(v)
    return float(f"{float(v):.{precision}g}")


@dataclass
class ChainLaw:
    """
    Law of the argmin chain on ``{0, ..., N}``.

    ``p`` / ``p_tilde`` / ``p_minus`` hold indices ``0..N+1`` (empty for
    empirical laws; ``p_minus`` is ``None`` when it was not computed).  In
    exact mode the arrays have object dtype holding Fractions.
    """

    N: int
    p: np.ndarray
    p_tilde: np.ndarray
    pi: np.ndarray
    P: np.ndarray
    exact: bool = False
    meta: dict = field(default_factory=dict)
    p_minus: Optional[np.ndarray] = None

    def row_sums(self):
        return self.P.sum(axis=1)

    def stationarity_defect(self):
        """``max |pi P - pi|`` (an exact Fraction in rational mode)."""
        d = self.pi.dot(self.P) - self.pi
        return max(abs(v) for v in d)

    def check(self, tol: float = 1e-12) -> bool:
        if self.exact:
            return (all(s == 1 for s in self.row_sums()) and sum(self.pi) == 1
                    and self.stationarity_defect() == 0)
        return (np.max(np.abs(self.row_sums() - 1.0)) <= tol
                and abs(float(np.sum(self.pi)) - 1.0) <= tol
                and float(self.stationarity_defect()) <= tol)

    def as_float(self) -> "ChainLaw":
        if not self.exact:
            return self
        f = lambda a: np.array(a, dtype=np.float64)
        pm = None if self.p_minus is None else f(self.p_minus)
        return ChainLaw(self.N, f(self.p), f(self.p_tilde), f(self.pi), f(self.P), False,
                        dict(self.meta), pm)

    def to_dict(self, precision: int = 12):
        d = {"N": int(self.N), "exact": bool(self.exact),
             "pi": [_fmt(v, precision) for v in self.pi],
             "P": [[_fmt(v, precision) for v in row] for row in self.P]}
        if len(self.p):
            d["p"] = [_fmt(v, precision) for v in self.p]
            d["p_tilde"] = [_fmt(v, precision) for v in self.p_tilde]
        if self.p_minus is not None and len(self.p_minus):
            d["p_minus"] = [_fmt(v, precision) for v in self.p_minus]
        if self.meta:
            d["meta"] = self.meta
        return d

    def to_json(self, precision: int = 12, indent=None) -> str:
        return json.dumps(self.to_dict(precision), indent=indent, sort_keys=True)


def _array(values, exact):
    return np.array(values, dtype=object if exact else np.float64)


def chain_law(inp: WalkLawInput, N: int) -> ChainLaw:
    """
    Stationary law and transition matrix from the persistence probabilities:

    * ``pi(k) = p-_k p~_{N-k}``;
    * ``P(i, i-1) = p~_{N+1-i} / p~_{N-i}``, ``P(i, N) = 1 - P(i, i-1)``, ``0 < i <= N``;
    * ``P(0, j) = (p-_j - p-_{j+1}) p~_{N-j} / p~_N`` for ``j < N``,
      ``P(0, N) = 1 - sum_{j<N} P(0, j)``.

    ``p-`` (weak persistence below 0) replaces ``p`` in the factors that
    describe the walk before its window minimum; the two coincide whenever
    ``P(S_n >= 0) = P(S_n <= 0)``, e.g. for every symmetric walk.
    """
    N = int(N)
    if N < 1:
        raise DomainError("N must be at least 1")
    if inp.M < N + 1:
        raise DomainError(f"input covers n <= {inp.M}, need n <= N+1 = {N + 1}")
    p, pt = ladder_probs(inp)
    p, pt = list(p[:N + 2]), list(pt[:N + 2])
    pm = list(reversed_persistence(inp)[:N + 2])
    exact = inp.exact
    zero = Fraction(0) if exact else 0.0
    if pt[N] == 0:
        raise DomainError("P(S_1 > 0, ..., S_N > 0) = 0: state 0 is never visited")
    pi = [pm[k] * pt[N - k] for k in range(N + 1)]
    P = [[zero] * (N + 1) for _ in range(N + 1)]
    for i in range(1, N + 1):
        down = pt[N + 1 - i] / pt[N - i]
        P[i][i - 1] = down
        P[i][N] = P[i][N] + (1 - down)
    for j in range(N):
        P[0][j] = (pm[j] - pm[j + 1]) * pt[N - j] / pt[N]
    P[0][N] = 1 - sum(P[0][:N], zero)
    return ChainLaw(N, _array(p, exact), _array(pt, exact), _array(pi, exact),
                    _array(P, exact), exact, {}, _array(pm, exact))


def _rpoch(x, n):
    """``(x)_k / k!`` for ``k = 0..n`` by recurrence (no factorial overflow)."""
    out = [1.0]
    for k in range(1, n + 1):
        out.append(out[-1] * (x + k - 1) / k)
    return out


def chain_law_theta(theta: float, N: int) -> ChainLaw:
    """
    Closed forms for continuous increments with ``P(S_n > 0) = theta``.

    Here ``p_n = p~_n = (theta)_n / n!`` and ``p-_n = (1 - theta)_n / n!``
    (rising factorials), which gives

    * ``pi(k) = (1-theta)_k (theta)_{N-k} / (k! (N-k)!)``;
    * ``P(i, N) = (1-theta)/(N+1-i)``, ``P(i, i-1) = (N+theta-i)/(N+1-i)``;
    * ``P(0, j) = theta/(j+1) C(N,j) (1-theta)_j (theta)_{N-j} / (theta)_N``;
    * ``P(0, N) = [1 - theta + theta (1-theta)_N / (theta)_N] / (N+1)``,

    the last one from ``sum_j p-_j p~_{N-j} = 1`` (coefficients of
    ``(1-s)^{-(1-theta)} (1-s)^{-theta} = (1-s)^{-1}``).  At ``theta = 1/2``
    these reduce to the symmetric forms, e.g. ``P(0, N) = 1/(N+1)``.
    """
    theta = float(theta)
    N = int(N)
    if not 0.0 < theta < 1.0:
        raise DomainError("theta must lie in (0,1)")
    if N < 1:
        raise DomainError("N must be at least 1")
    pn = _rpoch(theta, N + 1)
    pm = _rpoch(1.0 - theta, N + 1)
    pi = np.array([pm[k] * pn[N - k] for k in range(N + 1)])
    P = np.zeros((N + 1, N + 1))
    for i in range(1, N + 1):
        P[i, N] += (1.0 - theta) / (N + 1 - i)
        P[i, i - 1] = (N + theta - i) / (N + 1 - i)
    # C(N,j) (1-theta)_j (theta)_{N-j} / (theta)_N = p-_j p~_{N-j} / p~_N
    for j in range(N):
        P[0, j] = theta / (j + 1) * pm[j] * pn[N - j] / pn[N]
    P[0, N] = (1.0 - theta + theta * pm[N] / pn[N]) / (N + 1)
    return ChainLaw(N, np.array(pn), np.array(pn), pi, P, False,
                    {"theta": theta, "source": "closed_form"}, np.array(pm))


def theta_printed_forms(theta: float, N: int) -> dict:
    """
    The reference ``theta``-family closed forms, evaluated literally.

    They follow from substituting ``p_n = p~_n = (theta)_n / n!`` into
    ``pi(k) = p_k p~_{N-k}`` and ``P(0, j) = (p_j - p_{j+1}) p~_{N-j} / p~_N``,
    which is exact only at ``theta = 1/2``.  Returns float ``pi``,
    ``P_0j`` (``j < N``) and ``P_0N``.
    """
    theta = float(theta)
    N = int(N)
    pn = _rpoch(theta, N)
    pi = [pn[k] * pn[N - k] for k in range(N + 1)]
    P_0j = [(1.0 - theta) / (j + 1) * pn[j] * pn[N - j] / pn[N] for j in range(N)]
    # (2 theta)_N / (theta)_N as a ratio of normalised rising factorials
    P_0N = (2.0 * (1.0 - theta) / (N + 1)
            - (1.0 - 2.0 * theta) * _rpoch(2.0 * theta, N)[N] / ((N + 1) * pn[N]))
    return {"pi": pi, "P_0j": P_0j, "P_0N": P_0N}


def theta_zero_to_N_identity(theta: float, N: int):
    """
    Both sides of the algebraic identity behind the printed ``P(0, N)``:

        1 - sum_{j<N} (p_j - p_{j+1}) p_{N-j} / p_N
            = 2(1-theta)/(N+1) - (1-2 theta)(2 theta)_N / ((N+1)(theta)_N)

    with ``p_n = (theta)_n / n!``.  The identity holds for every ``theta``;
    it is the chain's ``P(0, N)`` only at ``theta = 1/2``.
    """
    theta = float(theta)
    N = int(N)
    p = _rpoch(theta, N + 1)
    lhs = 1.0 - sum((p[j] - p[j + 1]) * p[N - j] for j in range(N)) / p[N]
    rhs = theta_printed_forms(theta, N)["P_0N"]
    return lhs, rhs


def compare_theta_printed_forms(theta: float, N: int, tol: float = 1e-12) -> list:
    """
    Compare the reference ``theta``-family closed forms with the general law
    :func:`chain_law` on ``WalkLawInput.theta``.

    Returns one record per family (``stationary_law``, ``from_zero``,
    ``zero_to_N``) with the verdict, the max-abs deviation and, for the
    stationary law, the total mass of the printed vector.
    """
    law = chain_law(WalkLawInput.theta(theta, int(N) + 1), N)
    pf = theta_printed_forms(theta, N)
    N = int(N)
    fam = [("stationary_law", np.abs(np.array(pf["pi"]) - law.pi)),
           ("from_zero", np.abs(np.array(pf["P_0j"]) - law.P[0, :N])),
           ("zero_to_N", np.abs(np.array([pf["P_0N"] - law.P[0, N]])))]
    out = []
    for name, dev in fam:
        rec = {"family": name, "theta": float(theta), "N": N,
               "max_abs_deviation": float(dev.max()),
               "verdict": "agrees" if dev.max() <= tol else "disagrees"}
        if name == "stationary_law":
            rec["printed_total_mass"] = float(sum(pf["pi"]))
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# simple symmetric walk
# ---------------------------------------------------------------------------

def _rpoch_half(n):
    """``(1/2)_n / n!`` as a Fraction."""
    return Fraction(math.comb(2 * n, n), 4 ** n)


def ssrw_closed_forms(N: int) -> dict:
    """
    The reference simple-symmetric-walk closed forms, evaluated literally.

    Returns a dict of Fraction-valued ``pi``, ``P_iN`` and ``P_i_down``
    (indexed by ``i = 1..N``), ``P_0j`` (``j < N``) and ``P_0N``.
    """
    N = int(N)
    pi = [_rpoch_half((k + 1) // 2) * _rpoch_half((N - k) // 2) / 2 for k in range(N + 1)]
    P_iN = {}
    for i in range(1, N + 1):
        P_iN[i] = Fraction(N - i, N + 1 - i) if (N - i) % 2 else Fraction(1)
    P_down = {i: 1 - v for i, v in P_iN.items()}
    h = N // 2
    P_0j = {}
    for j in range(N):
        if j % 2:
            P_0j[j] = Fraction(0)
        else:
            P_0j[j] = Fraction(math.comb(j, j // 2) * math.comb(2 * h - j, h - j // 2),
                               (j + 2) * math.comb(2 * h, h))
    P_0N = Fraction(1, N + 1) if N % 2 else Fraction(2, N + 2)
    return {"pi": pi, "P_iN": P_iN, "P_i_down": P_down, "P_0j": P_0j, "P_0N": P_0N}


def compare_ssrw_closed_forms(N: int, reference: Optional[ChainLaw] = None) -> list:
    """
    Compare each closed-form family with an exact reference law.

    The reference defaults to the enumeration oracle for ``N <= 12`` and to
    the general formulas beyond.  Returns one record per family with a
    verdict and the list of mismatching entries.
    """
    N = int(N)
    if reference is None:
        reference = enumerate_ssrw_oracle(N) if N <= 12 else chain_law_ssrw(N, report=False)
    ref_name = reference.meta.get("source", "general_formulas")
    cf = ssrw_closed_forms(N)
    Pr, pir = reference.P, reference.pi
    families = [
        ("stationary_law", [((k,), cf["pi"][k], pir[k]) for k in range(N + 1)]),
        ("jump_to_N", [((i, N), cf["P_iN"][i], Pr[i][N]) for i in range(1, N + 1)]),
        ("step_down", [((i, i - 1), cf["P_i_down"][i], Pr[i][i - 1]) for i in range(1, N + 1)]),
        ("from_zero", [((0, j), cf["P_0j"][j], Pr[0][j]) for j in range(N)]),
        ("zero_to_N", [((0, N), cf["P_0N"], Pr[0][N])]),
    ]
    out = []
    for name, entries in families:
        bad = [{"index": list(idx), "closed_form": str(c), "reference": str(r)}
               for idx, c, r in entries if c != r]
        out.append({"family": name, "N": N, "reference": ref_name,
                    "verdict": "agrees" if not bad else "disagrees", "mismatches": bad})
    return out


def chain_law_ssrw(N: int, report: bool = True) -> ChainLaw:
    """
    Exact argmin-chain law of the simple symmetric walk.

    Computed from the general formulas with rational inputs; when
    ``report`` is set, ``meta['closed_form_report']`` holds the comparison
    with the reference closed forms (see :func:`compare_ssrw_closed_forms`).
    """
    N = int(N)
    law = chain_law(WalkLawInput.ssrw(N + 1, exact=True), N)
    law.meta["source"] = "general_formulas"
    if report:
        law.meta["closed_form_report"] = compare_ssrw_closed_forms(
            N, law if N > 12 else None)
    return law


def _argmin_last(S):
    """Last argmin along axis 1 of an integer array."""
    rev = S[:, ::-1]
    return S.shape[1] - 1 - np.argmin(rev, axis=1)


def enumerate_ssrw_oracle(N: int) -> ChainLaw:
    """
    Exact law of the argmin chain by enumerating all ``2^(N+1)`` sign
    sequences of the simple symmetric walk.

    ``pi`` is the law of ``A_N(0)`` and ``P(i, j)`` the conditional law of
    ``A_N(1)`` given ``A_N(0) = i`` (last argmin over indices ``0..N``).
    """
    N = int(N)
    if N < 1:
        raise DomainError("N must be at least 1")
    if N > 14:
        raise TooLarge(f"enumeration over 2^{N + 1} sequences refused for N={N} > 14")
    n = N + 1
    codes = np.arange(2 ** n, dtype=np.int64)
    steps = 2 * ((codes[:, None] >> np.arange(n)) & 1) - 1
    S = np.zeros((codes.size, n + 1), dtype=np.int64)
    np.cumsum(steps, axis=1, out=S[:, 1:])
    a0 = _argmin_last(S[:, :N + 1])
    a1 = _argmin_last(S[:, 1:N + 2])
    joint = np.zeros((N + 1, N + 1), dtype=np.int64)
    np.add.at(joint, (a0, a1), 1)
    total = 2 ** n
    row = joint.sum(axis=1)
    pi = [Fraction(int(r), total) for r in row]
    P = [[Fraction(int(joint[i, j]), int(row[i])) if row[i] else Fraction(0)
          for j in range(N + 1)] for i in range(N + 1)]
    return ChainLaw(N, np.array([], dtype=object), np.array([], dtype=object),
                    _array(pi, True), _array(P, True), True, {"source": "enumeration"})


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def simulate_chain(model: IncrementModel, N: int, steps: int, seed,
                   segment: int = 1 << 21) -> ChainLaw:
    """
    Empirical argmin-chain law from one long walk.

    The walk is generated in segments, each with its own child stream of
    ``seed``; the last ``N`` values carry over so that the chain is
    continuous across segment boundaries.

    Returns
    -------
    ChainLaw
        ``pi`` are visit frequencies of ``A_N(0..steps-1)``, ``P`` the
        row-normalised transition counts; ``meta`` holds the raw counts.
    """
    if model.kind == "stable":
        raise ModelMismatch("simulate_chain takes random-walk increment models")
    N = int(N)
    steps = int(steps)
    if N < 1:
        raise DomainError("N must be at least 1")
    if steps < 1000:
        raise DomainError("steps must be at least 1000")
    seed = as_seed(seed)
    visits = np.zeros(N + 1, dtype=np.int64)
    trans = np.zeros((N + 1, N + 1), dtype=np.int64)
    carry = np.zeros(1)
    last_state = -1
    done = 0
    k = 0
    while done < steps:
        # states produced by this segment: one per new increment, minus the
        # N needed to fill the first window
        need = steps - done
        ninc = min(segment, need + N - carry.size)
        inc = model.draw(seed.child(k).generator(), ninc)
        vals = np.empty(carry.size + ninc)
        vals[:carry.size] = carry
        np.cumsum(inc, out=vals[carry.size:])
        vals[carry.size:] += carry[-1]
        vals -= vals[0]
        if vals.size - 1 >= N:
            states = _kernels.sliding_last_argmin(vals, N)[:need]
            visits += np.bincount(states, minlength=N + 1)
            if last_state >= 0:
                trans[last_state, states[0]] += 1
            trans += _kernels.transition_tally(states, N + 1)
            last_state = int(states[-1])
            done += states.size
            carry = vals[states.size:]
        else:
            carry = vals
        k += 1
    pi = visits / steps
    rows = trans.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        P = np.where(rows > 0, trans / np.maximum(rows, 1), 0.0)
    return ChainLaw(N, np.array([]), np.array([]), pi, P, False,
                    {"source": "simulation", "steps": steps, "seed": seed.to_dict(),
                     "model": model.kind})
