"""Noise channels for pooled tests: sampling, likelihoods, capacity, separation.

All channels are binary-input.  Discrete channels carry explicit output
laws (mu0, mu1); the AWGN channel maps 0 -> +1, 1 -> -1 (BPSK) and adds
Gaussian noise.  Log-likelihoods and KL divergences are in nats; capacity
is reported in bits per test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

LN2 = math.log(2.0)

#: Blahut iteration stops when the capacity bracket is this tight (bits).
BLAHUT_TOL_BITS = 1e-12
BLAHUT_MAX_ITER = 1_000_000

#: AWGN integrals run over [-1 - AWGN_TAIL*sigma, +1 + AWGN_TAIL*sigma].
AWGN_TAIL = 8.0
AWGN_QUAD_ABSTOL = 1e-10


class NumericsError(RuntimeError):
    """A numeric routine (capacity iteration, quadrature) failed to converge."""


class DegenerateChannelError(ValueError):
    """mu0 = mu1: the channel cannot separate the team hypotheses."""


def bsc_capacity(p: float) -> float:
    """Closed-form BSC capacity 1 + p*log2(p) + (1-p)*log2(1-p), p in [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"crossover probability {p} outside [0, 1]")
    c = 1.0
    if p > 0.0:
        c += p * math.log2(p)
    if p < 1.0:
        c += (1.0 - p) * math.log2(1.0 - p)
    return c


def bernoulli_kl(a: float, b: float) -> float:
    """KL(Bern(a) || Bern(b)) in nats, with the 0*log0 = 0 convention."""
    kl = 0.0
    for pa, pb in ((a, b), (1.0 - a, 1.0 - b)):
        if pa == 0.0:
            continue
        if pb == 0.0:
            return math.inf
        # log difference, not log of the ratio: pa/pb can overflow for tiny pb
        kl += pa * (math.log(pa) - math.log(pb))
    return kl


def discrete_kl(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) in nats for probability rows on a shared alphabet."""
    kl = 0.0
    for pi, qi in zip(p, q):
        if pi == 0.0:
            continue
        if qi == 0.0:
            return math.inf
        kl += pi * (math.log(pi) - math.log(qi))
    return kl


def _check_law(row: np.ndarray, name: str) -> None:
    if np.any(row < 0.0):
        raise ValueError(f"{name} has negative entries")
    if abs(float(row.sum()) - 1.0) > 1e-12:
        raise ValueError(f"{name} does not sum to 1 (got {row.sum()!r})")


@dataclass(frozen=True)
class TabulatedChannel:
    """Binary-input discrete channel given by output rows mu0 and mu1.

    The alphabet is a sorted tuple of integer output symbols; ``mu0[i]`` is
    the probability of emitting ``alphabet[i]`` on input 0.
    """

    alphabet: tuple[int, ...]
    mu0: tuple[float, ...]
    mu1: tuple[float, ...]
    _rows: np.ndarray = field(init=False, repr=False, compare=False)
    _cdfs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        symbols = np.asarray(self.alphabet)
        if symbols.ndim != 1 or len(symbols) == 0:
            raise ValueError("alphabet must be a nonempty 1-d sequence")
        if np.any(np.diff(symbols) <= 0):
            raise ValueError("alphabet must be strictly increasing")
        rows = np.array([self.mu0, self.mu1], dtype=float)
        if rows.shape != (2, len(symbols)):
            raise ValueError("mu0/mu1 must match the alphabet length")
        _check_law(rows[0], "mu0")
        _check_law(rows[1], "mu1")
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "_cdfs", np.cumsum(rows, axis=1))

    # -- basic facts ---------------------------------------------------

    @property
    def is_discrete(self) -> bool:
        return True

    @property
    def spec(self) -> str:
        sym = ",".join(str(s) for s in self.alphabet)
        m0 = ",".join(repr(v) for v in self.mu0)
        m1 = ",".join(repr(v) for v in self.mu1)
        return f"table:{sym}:{m0}:{m1}"

    def law(self, bit: int) -> np.ndarray:
        return self._rows[bit]

    # -- sampling ------------------------------------------------------

    def sample_bits(self, bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One output symbol per input bit, iid given the stream."""
        bits = np.asarray(bits)
        u = rng.random(bits.shape)
        idx0 = np.searchsorted(self._cdfs[0], u, side="right")
        idx1 = np.searchsorted(self._cdfs[1], u, side="right")
        idx = np.where(bits != 0, idx1, idx0)
        return np.asarray(self.alphabet)[np.minimum(idx, len(self.alphabet) - 1)]

    def sample(self, input_bit: int, rng: np.random.Generator):
        if input_bit not in (0, 1):
            raise ValueError("input bit must be 0 or 1")
        return int(self.sample_bits(np.array([input_bit]), rng)[0])

    # -- likelihoods ---------------------------------------------------

    def symbol_index(self, observations: np.ndarray) -> np.ndarray:
        symbols = np.asarray(self.alphabet)
        idx = np.searchsorted(symbols, observations)
        idx = np.clip(idx, 0, len(symbols) - 1)
        if np.any(symbols[idx] != observations):
            raise ValueError("observation outside the channel alphabet")
        return idx

    def mixture_log_likelihood(self, observations, w0: float, w1: float) -> np.ndarray:
        """Elementwise log(w0*mu0(obs) + w1*mu1(obs)), -inf where the mixture is 0."""
        mix = w0 * self._rows[0] + w1 * self._rows[1]
        with np.errstate(divide="ignore"):
            log_mix = np.log(mix)
        return log_mix[self.symbol_index(np.asarray(observations))]

    def log_density(self, observations, bit: int) -> np.ndarray:
        return self.mixture_log_likelihood(observations, 1.0 - bit, float(bit))

    # -- information quantities ----------------------------------------

    def capacity(self) -> float:
        """Capacity in bits via Blahut iteration over the binary input law."""
        return _blahut_arimoto(self._rows)


def _blahut_arimoto(rows: np.ndarray) -> float:
    """Capacity (bits) of a binary-input discrete channel by Blahut iteration."""
    p = np.array([0.5, 0.5])
    tol_nats = BLAHUT_TOL_BITS * LN2
    for _ in range(BLAHUT_MAX_ITER):
        q = p @ rows
        d = np.zeros(2)
        for x in (0, 1):
            mask = rows[x] > 0.0
            d[x] = float(np.sum(rows[x][mask] * np.log(rows[x][mask] / q[mask])))
        lower = float(p @ d)
        upper = float(d.max())
        if upper - lower <= tol_nats:
            return upper / LN2
        p = p * np.exp(d - d.max())
        p /= p.sum()
    raise NumericsError("Blahut iteration did not converge")


@dataclass(frozen=True)
class BscChannel:
    """Binary symmetric channel: each test outcome flips with probability p."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p < 0.5:
            raise ValueError(f"BSC crossover must lie in [0, 1/2), got {self.p}")

    @property
    def is_discrete(self) -> bool:
        return True

    @property
    def spec(self) -> str:
        return f"bsc:{self.p!r}"

    @property
    def alphabet(self) -> tuple[int, int]:
        return (0, 1)

    def law(self, bit: int) -> np.ndarray:
        if bit:
            return np.array([self.p, 1.0 - self.p])
        return np.array([1.0 - self.p, self.p])

    def as_tabulated(self) -> TabulatedChannel:
        """The same channel routed through the generic discrete code path."""
        return TabulatedChannel((0, 1), (1.0 - self.p, self.p), (self.p, 1.0 - self.p))

    def sample_bits(self, bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        flips = (rng.random(bits.shape) < self.p).astype(np.uint8)
        return bits ^ flips

    def sample(self, input_bit: int, rng: np.random.Generator) -> int:
        if input_bit not in (0, 1):
            raise ValueError("input bit must be 0 or 1")
        return int(self.sample_bits(np.array([input_bit]), rng)[0])

    def symbol_index(self, observations: np.ndarray) -> np.ndarray:
        obs = np.asarray(observations)
        if np.any((obs != 0) & (obs != 1)):
            raise ValueError("BSC observations must be bits")
        return obs.astype(np.intp)

    def mixture_log_likelihood(self, observations, w0: float, w1: float) -> np.ndarray:
        mix1 = w0 * self.p + w1 * (1.0 - self.p)
        mix = np.array([1.0 - mix1, mix1])
        with np.errstate(divide="ignore"):
            log_mix = np.log(mix)
        return log_mix[self.symbol_index(observations)]

    def log_density(self, observations, bit: int) -> np.ndarray:
        return self.mixture_log_likelihood(observations, 1.0 - bit, float(bit))

    def capacity(self) -> float:
        return bsc_capacity(self.p)


def z_channel(q: float) -> TabulatedChannel:
    """Z-channel: 0 passes clean, 1 decays to 0 with probability q."""
    if not 0.0 <= q < 1.0:
        raise ValueError(f"Z-channel decay must lie in [0, 1), got {q}")
    return TabulatedChannel((0, 1), (1.0, 0.0), (q, 1.0 - q))


@dataclass(frozen=True)
class AwgnChannel:
    """Binary-input additive Gaussian channel with BPSK mapping 0 -> +1, 1 -> -1."""

    sigma: float

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def is_discrete(self) -> bool:
        return False

    @property
    def spec(self) -> str:
        return f"awgn:{self.sigma!r}"

    def mean(self, bit: int) -> float:
        return 1.0 - 2.0 * bit

    def sample_bits(self, bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        bits = np.asarray(bits)
        return (1.0 - 2.0 * bits) + self.sigma * rng.standard_normal(bits.shape)

    def sample(self, input_bit: int, rng: np.random.Generator) -> float:
        if input_bit not in (0, 1):
            raise ValueError("input bit must be 0 or 1")
        return float(self.sample_bits(np.array([input_bit]), rng)[0])

    def log_density(self, observations, bit: int) -> np.ndarray:
        obs = np.asarray(observations, dtype=float)
        z = (obs - self.mean(bit)) / self.sigma
        return -0.5 * z * z - math.log(self.sigma) - 0.5 * math.log(2.0 * math.pi)

    def density(self, y: float, bit: int) -> float:
        return math.exp(float(self.log_density(np.array([y]), bit)[0]))

    def mixture_log_likelihood(self, observations, w0: float, w1: float) -> np.ndarray:
        terms = []
        if w0 > 0.0:
            terms.append(math.log(w0) + self.log_density(observations, 0))
        if w1 > 0.0:
            terms.append(math.log(w1) + self.log_density(observations, 1))
        if not terms:
            raise ValueError("mixture weights are both zero")
        if len(terms) == 1:
            return terms[0]
        return np.logaddexp(terms[0], terms[1])

    def integration_bounds(self) -> tuple[float, float]:
        return (-1.0 - AWGN_TAIL * self.sigma, 1.0 + AWGN_TAIL * self.sigma)

    def capacity(self) -> float:
        """Mutual information at uniform input (optimal by symmetry), in bits."""
        lo, hi = self.integration_bounds()

        def integrand(y: float) -> float:
            d0 = self.density(y, 0)
            d1 = self.density(y, 1)
            m = 0.5 * (d0 + d1)
            if m <= 0.0:
                return 0.0
            total = 0.0
            for d in (d0, d1):
                if d > 0.0:
                    total += 0.5 * d * math.log2(d / m)
            return total

        value, err = quad(integrand, lo, hi, epsabs=AWGN_QUAD_ABSTOL,
                          limit=400, points=[-1.0, 0.0, 1.0])
        if not math.isfinite(value):
            raise NumericsError("AWGN capacity quadrature failed")
        return value


Channel = BscChannel | AwgnChannel | TabulatedChannel


def parse_channel_spec(spec: str) -> Channel:
    """Build a channel from a spec string like ``bsc:0.05``, ``awgn:0.8``, ``z:0.1``.

    Tabulated channels use ``table:<symbols>:<mu0>:<mu1>`` with comma-separated
    entries, e.g. ``table:0,1,2:0.9,0.1,0:0,0.1,0.9``.
    """
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "bsc":
        return BscChannel(float(rest))
    if kind == "awgn":
        return AwgnChannel(float(rest))
    if kind == "z":
        return z_channel(float(rest))
    if kind == "table":
        parts = rest.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad tabulated channel spec {spec!r}")
        symbols = tuple(int(s) for s in parts[0].split(","))
        mu0 = tuple(float(s) for s in parts[1].split(","))
        mu1 = tuple(float(s) for s in parts[2].split(","))
        return TabulatedChannel(symbols, mu0, mu1)
    raise ValueError(f"unknown channel spec {spec!r}")


# -- module-level operation surface ------------------------------------


def sample(channel: Channel, input_bit: int, rng: np.random.Generator):
    """One draw from the output law of ``input_bit``."""
    return channel.sample(input_bit, rng)


def log_likelihood(channel: Channel, observation, weights: tuple[float, float]) -> float:
    """log(w0*dmu0(obs) + w1*dmu1(obs)) in nats; -inf if the mixture vanishes."""
    w0, w1 = weights
    if w0 < 0.0 or w1 < 0.0 or abs(w0 + w1 - 1.0) > 1e-12:
        raise ValueError(f"weights {weights} are not a probability pair")
    return float(channel.mixture_log_likelihood(np.asarray([observation]), w0, w1)[0])


def capacity(channel: Channel) -> float:
    """Capacity C(Z) in bits per test."""
    return channel.capacity()


def hypothesis_weights(f: float) -> tuple[tuple[float, float], ...]:
    """Mixture weights (w0, w1) of the empty / exact / twoplus team hypotheses.

    A test includes each member independently with probability f, so a team
    with one sick member fires with probability f and a team with two sick
    members with probability 1 - (1-f)^2 = 2f - f^2.  Teams with three or
    more sick members put even more weight on mu1; the likelihood classifier
    still prefers the twoplus hypothesis over the exact one for them.
    """
    if not 0.0 < f < 1.0:
        raise ValueError(f"inclusion fraction must lie in (0, 1), got {f}")
    return ((1.0, 0.0), (1.0 - f, f), ((1.0 - f) ** 2, 2.0 * f - f * f))


def _mixture_kl(channel: Channel, wa: tuple[float, float], wb: tuple[float, float]) -> float:
    """KL divergence (nats) between two input-mixture output laws."""
    if channel.is_discrete:
        rows = np.array([channel.law(0), channel.law(1)], dtype=float)
        pa = wa[0] * rows[0] + wa[1] * rows[1]
        pb = wb[0] * rows[0] + wb[1] * rows[1]
        return discrete_kl(pa, pb)

    lo, hi = channel.integration_bounds()

    def integrand(y: float) -> float:
        da = wa[0] * channel.density(y, 0) + wa[1] * channel.density(y, 1)
        db = wb[0] * channel.density(y, 0) + wb[1] * channel.density(y, 1)
        if da <= 0.0:
            return 0.0
        return da * math.log(da / db)

    value, _ = quad(integrand, lo, hi, epsabs=AWGN_QUAD_ABSTOL,
                    limit=400, points=[-1.0, 0.0, 1.0])
    return value


def separation_divergences(channel: Channel, inclusion_fraction: float = 0.5) -> tuple[float, float, float, float]:
    """The four pairwise KL divergences between adjacent team hypotheses (nats)."""
    h0, h1, h2 = hypothesis_weights(inclusion_fraction)
    return (
        _mixture_kl(channel, h0, h1),
        _mixture_kl(channel, h1, h0),
        _mixture_kl(channel, h1, h2),
        _mixture_kl(channel, h2, h1),
    )


def separation_exponent(channel: Channel, inclusion_fraction: float = 0.5) -> float:
    """D(Z): the minimum of the four hypothesis KL divergences, in nats per test."""
    kls = separation_divergences(channel, inclusion_fraction)
    d = min(kls)
    if d <= 1e-15:
        raise DegenerateChannelError(
            "channel output laws coincide; hypotheses are not separable")
    return d
