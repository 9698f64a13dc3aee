"""Fock-basis density-matrix reconstruction for states of finite support.

For a state with no population above level N, the matrix element
rho_{n+k,n} is the average over heterodyne outcomes of

    (-1)^n / eta^n * sqrt(n!/(n+k)!) * alpha^k
        * sum_{p=0}^{N-n-k} C(p+n, p) eta^{-p} L_{p+n}^k(eta |alpha|^2).

Writing q = p + n, each kernel is a fixed linear combination of the
functions alpha^k L_q^k(eta |alpha|^2) with q <= N - k.  Their sample
means (globally and per block) are computed once, after which every
element at every cutoff is a cheap weighted sum.  That is what makes the
cutoff scan in :func:`choose_cutoff` affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import NamedTuple

import numpy as np

from .detector import HeterodyneSampleSet
from .errors import CutoffTooLarge, EmptySample, IndexOutOfRange, InvalidSpec
from .estimators import DEFAULT_BLOCKS, EstimateWithCI, _block_result, _blocks, laguerre_sequence

MAX_CUTOFF = 20


def _check_indices(n, k, cutoff):
    if n < 0 or k < 0:
        raise IndexOutOfRange(f"indices must be nonnegative, got n={n}, k={k}")
    if n + k > cutoff:
        raise IndexOutOfRange(f"n + k = {n + k} exceeds the cutoff N = {cutoff}")
    if cutoff > MAX_CUTOFF:
        raise CutoffTooLarge(f"cutoff N = {cutoff} exceeds the supported maximum {MAX_CUTOFF}")


def _weights(n, k, cutoff, eta):
    """Coefficient of alpha^k L_q^k for q = n..cutoff-k in the (n, k) kernel."""
    root = math.sqrt(math.factorial(n) / math.factorial(n + k))
    sign = -1 if n % 2 else 1
    return {q: sign * root * math.comb(q, n) * eta ** (-q) for q in range(n, cutoff - k + 1)}


def element_kernel(n: int, k: int, N: int, eta: float, alpha):
    """Kernel whose mean over outcomes estimates rho_{n+k,n} under cutoff N."""
    _check_indices(n, k, N)
    if not 0 < eta <= 1:
        raise InvalidSpec(f"quantum efficiency must lie in (0, 1], got {eta!r}")
    alpha = np.asarray(alpha, dtype=complex)
    lag = laguerre_sequence(N - k, k, eta * np.abs(alpha) ** 2)
    total = sum(w * lag[q] for q, w in _weights(n, k, N, eta).items())
    return alpha ** k * total


def upper_element_kernel(n: int, k: int, N: int, eta: float, alpha):
    """Kernel for rho_{n,n+k}, built from conj(alpha)^k.

    Equal to the conjugate of :func:`element_kernel`; kept as an
    independent route for the hermiticity check.
    """
    _check_indices(n, k, N)
    alpha = np.asarray(alpha, dtype=complex)
    lag = laguerre_sequence(N - k, k, eta * np.abs(alpha) ** 2)
    total = sum(w * lag[q] for q, w in _weights(n, k, N, eta).items())
    return np.conj(alpha) ** k * total


class _LaguerreMoments:
    """Global and per-block means of alpha^k L_q^k(eta |alpha|^2), q + k <= n_max."""

    def __init__(self, alpha, eta, n_max, n_blocks):
        self.eta = eta
        self.n = alpha.size
        slices = _blocks(alpha.size, n_blocks)
        x = eta * np.abs(alpha) ** 2
        self.mean = {}
        self.blocks = {}
        power = np.ones_like(alpha)
        for k in range(n_max + 1):
            for q, lag in enumerate(laguerre_sequence(n_max - k, k, x)):
                values = power * lag
                self.mean[k, q] = complex(values.mean())
                self.blocks[k, q] = np.array([values[s].mean() for s in slices])
            power = power * alpha

    def element(self, n, k, cutoff):
        """(value, block values) of the rho_{n+k,n} estimate at ``cutoff``."""
        value = 0j
        blocks = 0j
        for q, w in _weights(n, k, cutoff, self.eta).items():
            value += w * self.mean[k, q]
            blocks = blocks + w * self.blocks[k, q]
        return value, blocks


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Reconstructed (N+1) x (N+1) block of the density matrix.

    Only the lower triangle rho_{n+k,n} is estimated; the upper triangle is
    its conjugate.  ``half_widths_re``/``half_widths_im`` hold the block
    confidence half-widths of the real and imaginary parts.
    """

    elements: np.ndarray
    half_widths_re: np.ndarray
    half_widths_im: np.ndarray
    cutoff: int
    eta: float
    n_samples: int
    trace_estimate: EstimateWithCI

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    def estimate(self, row: int, col: int) -> EstimateWithCI:
        hw_re = float(self.half_widths_re[row, col])
        hw_im = float(self.half_widths_im[row, col])
        return EstimateWithCI(complex(self.elements[row, col]), math.hypot(hw_re, hw_im),
                              self.n_samples, self.trace_estimate.method, hw_re, hw_im)


def _fill(moments, cutoff, n_samples):
    dim = cutoff + 1
    elements = np.zeros((dim, dim), dtype=complex)
    hw_re = np.zeros((dim, dim))
    hw_im = np.zeros((dim, dim))
    trace_value = 0j
    trace_blocks = 0j
    for k in range(dim):
        for n in range(dim - k):
            value, blocks = moments.element(n, k, cutoff)
            est = _block_result(value, blocks, n_samples)
            if k == 0:
                value = complex(value.real, 0.0)
                trace_value += value
                trace_blocks = trace_blocks + blocks.real
            elements[n + k, n] = value
            elements[n, n + k] = np.conj(value)
            hw_re[n + k, n] = hw_re[n, n + k] = est.half_width_re
            hw_im[n + k, n] = hw_im[n, n + k] = 0.0 if k == 0 else est.half_width_im
    trace = _block_result(trace_value, trace_blocks, n_samples)
    return elements, hw_re, hw_im, trace


def _alpha(samples):
    alpha = samples.outcomes
    if alpha.size == 0:
        raise EmptySample("no heterodyne outcomes to reconstruct from")
    return alpha


def reconstruct(samples: HeterodyneSampleSet, N: int, n_blocks: int = DEFAULT_BLOCKS) -> ReconstructionResult:
    """Estimate rho_{m,n} for m, n <= N with block confidence intervals."""
    if int(N) != N or N < 0:
        raise IndexOutOfRange(f"cutoff must be a nonnegative integer, got {N!r}")
    if N > MAX_CUTOFF:
        raise CutoffTooLarge(f"cutoff N = {N} exceeds the supported maximum {MAX_CUTOFF}")
    alpha = _alpha(samples)
    moments = _LaguerreMoments(alpha, samples.eta, int(N), n_blocks)
    elements, hw_re, hw_im, trace = _fill(moments, int(N), alpha.size)
    return ReconstructionResult(elements, hw_re, hw_im, int(N), samples.eta, alpha.size, trace)


class CutoffChoice(NamedTuple):
    cutoff: int
    unstable: bool


def _family_z(n_checks, level=0.05):
    """Two-sided Bonferroni critical value for ``n_checks`` comparisons, at least 2."""
    return max(2.0, NormalDist().inv_cdf(1 - level / (2 * max(n_checks, 1))))


def choose_cutoff(samples: HeterodyneSampleSet, N_max: int,
                  n_blocks: int = DEFAULT_BLOCKS) -> CutoffChoice:
    """Smallest cutoff at which the reconstruction has stabilised.

    A candidate N* (0 <= N* <= N_max - 2) is accepted when

    * every element with n + k <= N* changes by no more than z paired
      standard errors when recomputed with cutoff N* + 1 and N* + 2, and
    * every diagonal element rho_jj with N* < j <= N_max, estimated at
      cutoff j (unbiased whenever the support ends below j, and far less
      noisy than at cutoff N_max), is within z half-widths of zero, with
      z times its half-width below 1/(N_max + 1), the population of a level
      in the maximally mixed state on N_max + 1 levels.

    z is the Bonferroni-corrected two-sided 95% critical value for all
    checks made at that candidate (never below 2).  If no candidate
    qualifies, ``N_max`` is returned with ``unstable=True``.
    """
    if N_max > MAX_CUTOFF:
        raise CutoffTooLarge(f"N_max = {N_max} exceeds the supported maximum {MAX_CUTOFF}")
    if N_max < 2:
        raise IndexOutOfRange("N_max must be at least 2 to compare successive cutoffs")
    alpha = _alpha(samples)
    moments = _LaguerreMoments(alpha, samples.eta, N_max, n_blocks)
    n = alpha.size
    tail_estimates = {j: _block_result(*moments.element(j, 0, j), n) for j in range(1, N_max + 1)}
    resolution = 1.0 / (N_max + 1)

    for cand in range(N_max - 1):
        pairs = [(i, k) for k in range(cand + 1) for i in range(cand + 1 - k)]
        tails = range(cand + 1, N_max + 1)
        z = _family_z(2 * 2 * len(pairs) + len(tails))
        if _is_stable(moments, cand, pairs, z, n) and _tail_empty(tail_estimates, tails, z, resolution):
            return CutoffChoice(cand, False)
    return CutoffChoice(N_max, True)


def _is_stable(moments, cand, pairs, z, n):
    for i, k in pairs:
        base, base_blocks = moments.element(i, k, cand)
        for other in (cand + 1, cand + 2):
            value, blocks = moments.element(i, k, other)
            diff = _block_result(value - base, blocks - base_blocks, n)
            if abs(diff.value.real) > z * diff.half_width_re + 1e-12:
                return False
            if abs(diff.value.imag) > z * diff.half_width_im + 1e-12:
                return False
    return True


def _tail_empty(tail_estimates, tails, z, resolution):
    for j in tails:
        est = tail_estimates[j]
        bound = z * est.half_width_re
        if abs(est.value.real) > bound or bound >= resolution:
            return False
    return True
