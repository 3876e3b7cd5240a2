"""
Seeded simulation of Brownian motion, random walks and strictly stable
Levy processes on uniform time grids.

Randomness comes from counter-based Philox streams keyed by
``(master_seed, stream_index, *sub)``, so independent replicas can be
generated in any order (or in parallel) with bit-identical results.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InvalidGrid, ModelMismatch, SubordinatorRejected


# ---------------------------------------------------------------------------
# seeds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeedSpec:
    """Address of one random stream.

    ``sub`` extends the spawn key, which lets an experiment hand every
    replica (and every piece inside a replica) its own stream.
    """

    master_seed: int
    stream_index: int = 0
    sub: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise DomainError("master_seed must be a 64-bit unsigned integer")
        if int(self.stream_index) < 0:
            raise DomainError("stream_index must be nonnegative")

    def child(self, *keys) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.stream_index, self.sub + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed),
                                    spawn_key=(int(self.stream_index),) + self.sub)
        return np.random.Generator(np.random.Philox(ss))

    def to_dict(self):
        d = {"master_seed": int(self.master_seed), "stream_index": int(self.stream_index)}
        if self.sub:
            d["sub"] = list(self.sub)
        return d


def as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    if isinstance(seed, (tuple, list)):
        return SeedSpec(*seed)
    return SeedSpec(int(seed))


# ---------------------------------------------------------------------------
# paths and increment models
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<ddQ")


@dataclass
class SampledPath:
    """Values of a process at times ``t0 + k * dt``, ``k = 0..n``."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if not self.dt > 0:
            raise InvalidGrid("dt must be positive")
        if self.values.ndim != 1 or self.values.shape[0] < 1:
            raise InvalidGrid("path needs at least one value")

    @property
    def n(self) -> int:
        """Number of steps (one less than the number of samples)."""
        return self.values.shape[0] - 1

    @property
    def horizon(self) -> float:
        return self.n * self.dt

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.values.shape[0])

    def increments(self):
        return np.diff(self.values)

    def save(self, fname):
        """Little-endian dump: (t0 f8, dt f8, n u8) then n+1 f8 values."""
        with open(fname, "wb") as fh:
            fh.write(_HEADER.pack(float(self.t0), float(self.dt), int(self.n)))
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def load(cls, fname) -> "SampledPath":
        with open(fname, "rb") as fh:
            t0, dt, n = _HEADER.unpack(fh.read(_HEADER.size))
            vals = np.frombuffer(fh.read(8 * (n + 1)), dtype="<f8")
        if vals.shape[0] != n + 1:
            raise InvalidGrid("truncated path file")
        return cls(t0, dt, vals.astype(np.float64))


@dataclass(frozen=True)
class IncrementModel:
    """
    Law of the increments of a walk or of a Levy process.

    kind : {'gaussian', 'rademacher', 'generic_continuous', 'stable'}
    sampler : callable(rng, size) -> ndarray, for ``generic_continuous``
    theta : P(S_n > 0) for ``generic_continuous`` (assumed constant in n)
    alpha, beta : stable index and skewness
    """

    kind: str
    sampler: Optional[Callable] = field(default=None, compare=False)
    theta: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "rademacher", "generic_continuous", "stable"):
            raise DomainError(f"unknown increment model {self.kind!r}")
        if self.kind == "generic_continuous":
            if self.sampler is None:
                raise DomainError("generic_continuous needs a sampler")
            if self.theta is None or not 0.0 < self.theta < 1.0:
                raise DomainError("theta must lie in (0,1)")
        if self.kind == "stable":
            validate_stable(self.alpha, self.beta)

    @classmethod
    def gaussian(cls):
        return cls("gaussian", theta=0.5)

    @classmethod
    def rademacher(cls):
        return cls("rademacher")

    @classmethod
    def generic_continuous(cls, sampler, theta):
        return cls("generic_continuous", sampler=sampler, theta=float(theta))

    @classmethod
    def stable(cls, alpha, beta):
        return cls("stable", alpha=float(alpha), beta=float(beta))

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        if self.kind == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size).astype(np.float64) - 1.0
        if self.kind == "generic_continuous":
            return np.asarray(self.sampler(rng, size), dtype=np.float64)
        return stable_standard(self.alpha, self.beta, size, rng)


# ---------------------------------------------------------------------------
# stable parameters
# ---------------------------------------------------------------------------

def _raw_rho(alpha, beta):
    if alpha == 2.0:
        return 0.5
    return 0.5 + math.atan(beta * math.tan(math.pi * alpha / 2.0)) / (math.pi * alpha)


def validate_stable(alpha, beta):
    """Check the parameter square and reject (negative) subordinators."""
    if alpha is None or beta is None:
        raise DomainError("stable model needs alpha and beta")
    if not (0.0 < alpha <= 2.0) or not (-1.0 <= beta <= 1.0):
        raise DomainError(f"stable parameters out of range: alpha={alpha}, beta={beta}")
    if alpha < 1.0 and abs(beta) == 1.0:
        raise SubordinatorRejected(
            f"alpha={alpha} < 1 with beta={beta}: the process or its negative is a subordinator")


def positivity_parameter(alpha: float, beta: float) -> float:
    """
    ``rho = P(X_1 > 0) = 1/2 + arctan(beta tan(pi alpha / 2)) / (pi alpha)``.

    Raises
    ------
    DomainError
        Outside ``(0,2] x [-1,1]``, and for ``alpha = 1, beta != 0`` where the
        process is not strictly stable and ``P(X_t > 0)`` depends on ``t``.
    SubordinatorRejected
        When ``rho`` is 0 or 1.
    """
    alpha = float(alpha)
    beta = float(beta)
    if not (0.0 < alpha <= 2.0) or not (-1.0 <= beta <= 1.0):
        raise DomainError(f"stable parameters out of range: alpha={alpha}, beta={beta}")
    if alpha == 1.0 and beta != 0.0:
        raise DomainError("alpha=1 with beta != 0 has no constant positivity parameter")
    validate_stable(alpha, beta)
    rho = _raw_rho(alpha, beta)
    if not 0.0 < rho < 1.0:
        # beta within rounding of +-1 at alpha < 1
        raise SubordinatorRejected(f"alpha={alpha}, beta={beta} gives degenerate rho={rho}")
    return rho


def stable_standard(alpha, beta, size, rng):
    """
    Chambers-Mallows-Stuck draws of ``S_alpha(1, beta, 0)``.

    The scale is that of characteristic exponent
    ``|l|^alpha (1 - i beta sgn(l) tan(pi alpha/2))`` (``alpha != 1``) and
    ``|l| (1 + i beta (2/pi) sgn(l) log|l|)`` (``alpha = 1``); in particular
    ``alpha = 2`` gives variance 2.
    """
    V = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    W = rng.standard_exponential(size)
    if alpha == 1.0:
        hp = 0.5 * math.pi
        bv = hp + beta * V
        return (bv * np.tan(V) - beta * np.log(hp * W * np.cos(V) / bv)) / hp
    if alpha == 2.0:
        # the general formula degenerates to 2 sqrt(W) sin(V); same law
        return 2.0 * np.sqrt(W) * np.sin(V)
    t = beta * math.tan(0.5 * math.pi * alpha)
    B = math.atan(t) / alpha
    S = (1.0 + t * t) ** (0.5 / alpha)
    aVB = alpha * (V + B)
    return (S * np.sin(aVB) / np.cos(V) ** (1.0 / alpha)
            * (np.cos(V - aVB) / W) ** ((1.0 - alpha) / alpha))


# ---------------------------------------------------------------------------
# simulators
# ---------------------------------------------------------------------------

def _n_steps(horizon, dt):
    if not dt > 0:
        raise InvalidGrid("dt must be positive")
    if not horizon >= dt:
        raise InvalidGrid("horizon must be at least dt")
    return int(math.ceil(horizon / dt - 1e-9))


def _cumulate(inc):
    out = np.empty(inc.shape[0] + 1)
    out[0] = 0.0
    np.cumsum(inc, out=out[1:])
    return out


def simulate_brownian(horizon: float, dt: float, seed) -> SampledPath:
    """Standard Brownian motion on ``[0, horizon]`` sampled every ``dt``."""
    n = _n_steps(horizon, dt)
    rng = as_seed(seed).generator()
    return SampledPath(0.0, dt, _cumulate(math.sqrt(dt) * rng.standard_normal(n)))


def simulate_walk(model: IncrementModel, n: int, seed) -> SampledPath:
    """Partial sums ``S_0 = 0, ..., S_n`` of i.i.d. increments (``dt = 1``)."""
    if model.kind == "stable":
        raise ModelMismatch("simulate_walk takes non-stable increment models")
    n = int(n)
    if n < 1:
        raise InvalidGrid("walk needs at least one step")
    rng = as_seed(seed).generator()
    return SampledPath(0.0, 1.0, _cumulate(model.draw(rng, n)))


def simulate_stable(alpha: float, beta: float, horizon: float, dt: float, seed) -> SampledPath:
    """
    Strictly stable (or, for ``alpha = 1``, Cauchy with skewness) Levy
    process on a grid: increments are ``dt^{1/alpha}`` times CMS draws,
    plus the deterministic ``(2/pi) beta dt log dt`` shift when
    ``alpha = 1``.
    """
    alpha = float(alpha)
    beta = float(beta)
    validate_stable(alpha, beta)
    n = _n_steps(horizon, dt)
    rng = as_seed(seed).generator()
    inc = stable_standard(alpha, beta, n, rng)
    if alpha == 1.0:
        inc = dt * inc + (2.0 / math.pi) * beta * dt * math.log(dt)
    else:
        inc = dt ** (1.0 / alpha) * inc
    return SampledPath(0.0, dt, _cumulate(inc))
