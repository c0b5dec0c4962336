import math

import numpy as np
import pytest

from groupsieve import channels, oracles
from groupsieve.channels import AwgnChannel, BscChannel
from groupsieve.isolation import bsc_labels_by_count
from groupsieve.population import TeamLabel


def test_hypothesis_means_half_inclusion():
    m0, m1, m2 = oracles.bsc_hypothesis_means(0.05)
    assert m0 == pytest.approx(0.05)
    assert m1 == pytest.approx(0.5)
    assert m2 == pytest.approx(0.725)


def test_hypothesis_means_general_f():
    m0, m1, m2 = oracles.bsc_hypothesis_means(0.0, f=0.3)
    assert m0 == 0.0
    assert m1 == pytest.approx(0.3)
    assert m2 == pytest.approx(2 * 0.3 - 0.09)


def test_hoeffding_bound_values():
    assert oracles.hoeffding_bound(0.0, 0) == pytest.approx(4.0)
    assert oracles.hoeffding_bound(0.1, 200) == pytest.approx(
        4.0 * math.exp(-0.64 * 200 / 32))


def test_exact_error_decreases_with_s():
    ch = BscChannel(0.1)
    errs = [oracles.exact_classifier_error(ch, s, TeamLabel.EXACT)
            for s in (50, 100, 200, 400)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert all(e < oracles.hoeffding_bound(0.1, s)
               for e, s in zip(errs, (50, 100, 200, 400)))


def test_exact_error_agrees_with_monte_carlo():
    ch = BscChannel(0.1)
    s, trials = 120, 10**5
    rng = np.random.default_rng(0)
    table = bsc_labels_by_count(ch, s)
    means = oracles.bsc_hypothesis_means(ch.p)
    for mean, label in zip(means, (TeamLabel.EMPTY, TeamLabel.EXACT,
                                   TeamLabel.TWOPLUS)):
        exact = oracles.exact_classifier_error(ch, s, label)
        counts = rng.binomial(s, mean, size=trials)
        empirical = np.mean([table[c] is not label for c in counts])
        sigma = math.sqrt(max(exact * (1 - exact), 1e-12) / trials)
        assert abs(empirical - exact) <= 4 * sigma + 1e-4


def test_exact_error_guards():
    with pytest.raises(TypeError):
        oracles.exact_classifier_error(AwgnChannel(1.0), 10, TeamLabel.EXACT)
    with pytest.raises(ValueError):
        oracles.exact_classifier_error(BscChannel(0.1), 10**5, TeamLabel.EXACT)


def test_count_decision_matches_main_classifier():
    # oracle per-count decisions agree with the library classifier everywhere
    ch = BscChannel(0.05)
    s = 300
    table = bsc_labels_by_count(ch, s)
    means = oracles.bsc_hypothesis_means(ch.p)
    for c in range(s + 1):
        assert oracles._count_decision(c, s, means) is table[c]


def test_closed_form_quantities_vs_library():
    for p in (0.0, 0.05, 0.11, 0.3):
        cap, kls = oracles.closed_form_bsc_quantities(p)
        ch = BscChannel(p)
        assert cap == pytest.approx(ch.capacity(), abs=1e-12)
        lib = channels.separation_divergences(ch)
        for a, b in zip(kls, lib):
            if math.isinf(a):
                assert math.isinf(b)
            else:
                assert a == pytest.approx(b, abs=1e-12)


def test_closed_form_known_point():
    cap, kls = oracles.closed_form_bsc_quantities(0.0)
    assert cap == 1.0
    assert kls[0] == pytest.approx(math.log(2.0))
    assert math.isinf(kls[1])
    assert kls[2] == pytest.approx(0.5 * math.log(4.0 / 3.0))
    assert kls[3] == pytest.approx(0.75 * math.log(1.5) + 0.25 * math.log(0.5))


def test_awgn_quadrature_matches_library():
    for sigma in (0.5, 0.8, 1.5):
        brute = oracles.awgn_capacity_quadrature(sigma)
        assert brute == pytest.approx(AwgnChannel(sigma).capacity(), abs=1e-6)


def test_awgn_quadrature_limits():
    assert oracles.awgn_capacity_quadrature(0.1) == pytest.approx(1.0, abs=1e-6)
    assert oracles.awgn_capacity_quadrature(20.0) < 0.01


def test_binom_pmf_normalizes():
    for m in (0.0, 0.3, 1.0):
        total = sum(oracles._binom_pmf(c, 20, m) for c in range(21))
        assert total == pytest.approx(1.0, abs=1e-12)
