import math

import numpy as np
import pytest

from heterodyne import (CutoffTooLarge, DetectorConfig, EmptySample, HeterodyneSampleSet, IndexOutOfRange,
                        Mixture, Number, Superposition, build_state, choose_cutoff, reconstruct,
                        sample_heterodyne)
from heterodyne.reconstruction import element_kernel, upper_element_kernel

from oracles import ROOT_HALF, laguerre_exact

PSI = Superposition([ROOT_HALF, 0, 1j * ROOT_HALF])
MIX = Mixture([(0.5, Number(0)), (0.5, Number(2))])
ALPHA = np.array([0.0, 0.4 - 0.3j, 1.1 + 0.9j, -2.2j, 3.1])


def draw(spec, eta, n, seed=0):
    return sample_heterodyne(build_state(spec), DetectorConfig(eta, n, seed))


def _kernel_reference(n, k, N, eta, alpha):
    # direct transcription in exact rational Laguerre coefficients
    from fractions import Fraction
    total = np.zeros_like(alpha, dtype=complex)
    for p in range(N - n - k + 1):
        lag = np.array([float(laguerre_exact(p + n, k, Fraction(eta * abs(a) ** 2).limit_denominator(10 ** 12)))
                        for a in alpha])
        total += math.comb(p + n, p) * eta ** (-p) * lag
    return (-1) ** n / eta ** n * math.sqrt(math.factorial(n) / math.factorial(n + k)) * alpha ** k * total


def test_kernel_examples():
    np.testing.assert_allclose(element_kernel(0, 0, 0, 0.7, ALPHA), 1.0)
    # the sum over p stops at N - n - k = 0, leaving alpha L_0^1 = alpha
    np.testing.assert_allclose(element_kernel(0, 1, 1, 1.0, ALPHA), ALPHA, atol=1e-12)
    np.testing.assert_allclose(element_kernel(1, 0, 1, 1.0, ALPHA), np.abs(ALPHA) ** 2 - 1, atol=1e-12)


@pytest.mark.parametrize("eta", [0.6, 0.9, 1.0])
def test_kernel_matches_reference(eta):
    for N in range(5):
        for k in range(N + 1):
            for n in range(N - k + 1):
                np.testing.assert_allclose(element_kernel(n, k, N, eta, ALPHA),
                                           _kernel_reference(n, k, N, eta, ALPHA), rtol=1e-9, atol=1e-9)


def test_kernel_index_checks():
    with pytest.raises(IndexOutOfRange):
        element_kernel(2, 2, 3, 0.9, ALPHA)
    with pytest.raises(IndexOutOfRange):
        element_kernel(-1, 0, 3, 0.9, ALPHA)
    with pytest.raises(CutoffTooLarge):
        element_kernel(0, 0, 21, 0.9, ALPHA)


def test_hermiticity_kernel_identity():
    s = draw(PSI, 0.9, 20_000, seed=1)
    result = reconstruct(s, 4)
    for k in range(1, 5):
        for n in range(5 - k):
            upper = upper_element_kernel(n, k, 4, 0.9, s.outcomes).mean()
            assert abs(upper - np.conj(result.elements[n + k, n])) <= 1e-12
            assert result.elements[n, n + k] == np.conj(result.elements[n + k, n])
    assert np.all(result.half_widths_re >= 0) and np.all(result.half_widths_im >= 0)


def test_vacuum_example():
    result = reconstruct(draw(Number(0), 0.9, 100_000, seed=2), 2)
    truth = np.zeros((3, 3))
    truth[0, 0] = 1
    for m in range(3):
        for n in range(3):
            assert result.estimate(m, n).covers(truth[m, n], 4)


def test_reconstruction_example_scale():
    result = reconstruct(draw(PSI, 0.9, 1_000_000, seed=3), 4)
    assert result.dim == 5 and result.cutoff == 4 and result.n_samples == 1_000_000
    rho = build_state(PSI).elements
    for m in range(5):
        for n in range(5):
            assert result.estimate(m, n).covers(rho[m, n], 4)
    # half-widths of the order of a few hundredths
    for m, n in [(0, 0), (1, 1), (2, 2), (2, 0), (3, 3)]:
        assert 1e-3 < result.estimate(m, n).half_width < 0.1


def test_number_state_example():
    result = reconstruct(draw(Number(1), 0.7, 1_000_000, seed=4), 3)
    truth = np.zeros((4, 4))
    truth[1, 1] = 1
    for m in range(4):
        for n in range(4):
            assert result.estimate(m, n).covers(truth[m, n], 4)


def test_errors():
    s = draw(Number(0), 1.0, 200)
    with pytest.raises(CutoffTooLarge):
        reconstruct(s, 21)
    with pytest.raises(IndexOutOfRange):
        reconstruct(s, -1)
    with pytest.raises(EmptySample):
        reconstruct(HeterodyneSampleSet(np.array([], dtype=complex), 0.9), 2)


@pytest.mark.parametrize("spec", [Number(0), Number(1), Number(2), PSI, MIX])
def test_trace(spec):
    result = reconstruct(draw(spec, 0.5, 1_000_000, seed=5), 3)
    assert result.trace_estimate.covers(1.0, 4)
    assert np.trace(result.elements).real == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("spec", [PSI, MIX])
def test_oracle_agreement(spec):
    rho = build_state(spec).elements
    hits = np.zeros((5, 5))
    for seed in range(100):
        result = reconstruct(draw(spec, 0.9, 100_000, seed=1000 + seed), 4)
        for m in range(5):
            for n in range(5):
                hits[m, n] += result.estimate(m, n).covers(rho[m, n], 4)
    assert hits.min() >= 95


def test_variance_growth():
    diag_own = {}
    fixed = {}
    for eta in (0.5, 0.7, 0.9, 1.0):
        samples = [draw(PSI, eta, 20_000, seed=s) for s in range(20)]
        # rho_nn at the smallest cutoff holding it, N = n
        diag_own[eta] = np.median([[reconstruct(x, n).half_widths_re[n, n] for n in range(5)]
                                   for x in samples], axis=0)
        fixed[eta] = np.median([reconstruct(x, 4).half_widths_re for x in samples], axis=0)
    for eta, diag in diag_own.items():
        assert np.all(np.diff(diag[1:]) > 0), (eta, diag)
    for lo, hi in [(0.5, 0.7), (0.7, 0.9), (0.9, 1.0)]:
        assert np.all(diag_own[lo][1:] > diag_own[hi][1:])
        assert np.all(fixed[lo] > fixed[hi])


def test_mixture_reconstruction():
    result = reconstruct(draw(MIX, 0.9, 1_000_000, seed=6), 2)
    assert result.estimate(2, 0).covers(0.0, 4)
    assert result.estimate(0, 0).covers(0.5, 4)
    assert result.estimate(2, 2).covers(0.5, 4)


def test_choose_cutoff_superposition():
    for seed in range(3):
        choice = choose_cutoff(draw(PSI, 0.9, 1_000_000, seed=10 + seed), 8)
        assert choice.cutoff in (2, 3, 4) and not choice.unstable


def test_choose_cutoff_vacuum():
    choice = choose_cutoff(draw(Number(0), 0.9, 100_000, seed=7), 5)
    assert choice.cutoff in (0, 1) and not choice.unstable


def test_choose_cutoff_vacuum_frequency():
    cutoffs = [choose_cutoff(draw(Number(0), 0.9, 100_000, seed=100 + s), 5).cutoff for s in range(40)]
    assert np.mean(np.isin(cutoffs, (0, 1))) >= 0.85


def test_choose_cutoff_tiny_sample_is_unstable():
    choice = choose_cutoff(draw(PSI, 0.9, 100, seed=8), 8, n_blocks=10)
    assert choice.unstable and choice.cutoff == 8


def test_choose_cutoff_limits():
    s = draw(Number(0), 1.0, 1000)
    with pytest.raises(CutoffTooLarge):
        choose_cutoff(s, 21)
    with pytest.raises(IndexOutOfRange):
        choose_cutoff(s, 1)
