"""Brute-force reference implementations used only to cross-check the library.

These deliberately share no helper code with the main code paths: densities,
KL divergences, and decoding criteria are rewritten from scratch in plain
Python so that agreement between the two routes is evidence rather than a
tautology.  They may be much slower than the main paths.
"""

from __future__ import annotations

import math

import numpy as np

from .channels import AwgnChannel, BscChannel, TabulatedChannel
from .population import TeamLabel


def _plain_symbol_logprob(channel, obs, bit: int) -> float:
    """log P(obs | input bit), written out per channel family."""
    if isinstance(channel, BscChannel):
        prob = (1.0 - channel.p) if int(obs) == bit else channel.p
        return math.log(prob) if prob > 0.0 else -math.inf
    if isinstance(channel, AwgnChannel):
        mean = 1.0 if bit == 0 else -1.0
        sig = channel.sigma
        return (-((float(obs) - mean) ** 2) / (2.0 * sig * sig)
                - math.log(sig) - 0.5 * math.log(2.0 * math.pi))
    if isinstance(channel, TabulatedChannel):
        row = channel.mu1 if bit else channel.mu0
        prob = row[channel.alphabet.index(int(obs))]
        return math.log(prob) if prob > 0.0 else -math.inf
    raise TypeError(f"unsupported channel type {type(channel).__name__}")


#: kept equal to the main decoder's tolerance so both break the same ties
_TIE_TOLERANCE = 1e-9


def exhaustive_ml_decode(codebook, observations, channel) -> int:
    """Scan every codeword, sum per-symbol log-probabilities, take the argmax.

    Scores within the tie tolerance count as equal and resolve to the lowest
    member index, matching the main decoder's contract.
    """
    best_index = 0
    best_score = -math.inf
    for i in range(codebook.team_size):
        score = 0.0
        for pos in range(codebook.block_length):
            score += _plain_symbol_logprob(channel, observations[pos],
                                           int(codebook.words[i, pos]))
        if score > best_score + _TIE_TOLERANCE:
            best_score = score
            best_index = i
    return best_index


_LABELS = (TeamLabel.EMPTY, TeamLabel.EXACT, TeamLabel.TWOPLUS)


def bsc_hypothesis_means(p: float, f: float = 0.5) -> tuple[float, float, float]:
    """Positive-test rates of the empty / exact / twoplus hypotheses on BSC(p)."""
    m0 = p
    m1 = (1.0 - f) * p + f * (1.0 - p)
    w2 = 2.0 * f - f * f
    m2 = (1.0 - w2) * p + w2 * (1.0 - p)
    return m0, m1, m2


def _count_decision(c: int, s: int, means) -> TeamLabel:
    """ML label for c positives out of s, ties toward the larger sick count."""
    best = 0
    best_ll = -math.inf
    for h, m in enumerate(means):
        ll = 0.0
        if c > 0:
            ll += c * math.log(m) if m > 0.0 else -math.inf
        if c < s:
            ll += (s - c) * math.log(1.0 - m) if m < 1.0 else -math.inf
        if ll >= best_ll:
            best_ll = ll
            best = h
    return _LABELS[best]


def _binom_pmf(c: int, s: int, m: float) -> float:
    if m == 0.0:
        return 1.0 if c == 0 else 0.0
    if m == 1.0:
        return 1.0 if c == s else 0.0
    log_pmf = (math.lgamma(s + 1) - math.lgamma(c + 1) - math.lgamma(s - c + 1)
               + c * math.log(m) + (s - c) * math.log(1.0 - m))
    return math.exp(log_pmf)


def exact_classifier_error(channel: BscChannel, s: int, true_label: TeamLabel,
                           f: float = 0.5) -> float:
    """Exact misclassification probability of the count classifier on BSC(p).

    Enumerates the binomial law of the positive count over the region where
    the per-count ML decision differs from the true hypothesis.
    """
    if not isinstance(channel, BscChannel):
        raise TypeError("exact enumeration is defined for the BSC only")
    if s > 10**4:
        raise ValueError("enumeration capped at s <= 10^4")
    means = bsc_hypothesis_means(channel.p, f)
    true_mean = means[_LABELS.index(true_label)]
    return sum(_binom_pmf(c, s, true_mean)
               for c in range(s + 1)
               if _count_decision(c, s, means) is not true_label)


def hoeffding_bound(p: float, s: int) -> float:
    """The classifier's design bound: 4 exp(-(1-2p)^2 s / 32)."""
    return 4.0 * math.exp(-((1.0 - 2.0 * p) ** 2) * s / 32.0)


def _plain_bernoulli_kl(a: float, b: float) -> float:
    total = 0.0
    for x, y in ((a, b), (1.0 - a, 1.0 - b)):
        if x == 0.0:
            continue
        if y == 0.0:
            return math.inf
        total += x * math.log(x / y)
    return total


def closed_form_bsc_quantities(p: float, f: float = 0.5):
    """(capacity in bits, four hypothesis KL divergences in nats) for BSC(p)."""
    if not 0.0 <= p < 0.5:
        raise ValueError("p must lie in [0, 1/2)")
    cap = 1.0
    if p > 0.0:
        cap += p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p)
    m0, m1, m2 = bsc_hypothesis_means(p, f)
    kls = (
        _plain_bernoulli_kl(m0, m1),
        _plain_bernoulli_kl(m1, m0),
        _plain_bernoulli_kl(m1, m2),
        _plain_bernoulli_kl(m2, m1),
    )
    return cap, kls


def awgn_capacity_quadrature(sigma: float, grid_points: int = 400_001) -> float:
    """BPSK/AWGN capacity by brute-force Simpson integration on a dense grid."""
    if grid_points % 2 == 0:
        grid_points += 1
    lo, hi = -1.0 - 10.0 * sigma, 1.0 + 10.0 * sigma
    y = np.linspace(lo, hi, grid_points)
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    d0 = norm * np.exp(-((y - 1.0) ** 2) / (2.0 * sigma * sigma))
    d1 = norm * np.exp(-((y + 1.0) ** 2) / (2.0 * sigma * sigma))
    mid = 0.5 * (d0 + d1)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(d0 > 0, 0.5 * d0 * np.log2(d0 / mid), 0.0) \
            + np.where(d1 > 0, 0.5 * d1 * np.log2(d1 / mid), 0.0)
    h = (hi - lo) / (grid_points - 1)
    weights = np.ones(grid_points)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.sum(weights * integrand))
