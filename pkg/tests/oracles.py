"""Independent reference values for the test suite.

Nothing here calls into the estimators or the sampler.  Values come from
closed forms, exact rational arithmetic, or direct summation, and the frozen
constants at the bottom were derived by hand.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

# -- exact special functions ----------------------------------------------------


def laguerre_exact(n: int, k: int, x: Fraction) -> Fraction:
    """L_n^k(x) = sum_j (-1)^j C(n+k, n-j) x^j / j!, in exact arithmetic."""
    x = Fraction(x)
    return sum(Fraction((-1) ** j * math.comb(n + k, n - j), math.factorial(j)) * x ** j
               for j in range(n + 1))


# -- closed-form states ------------------------------------------------------------


def coherent_populations(alpha: complex, dim: int) -> np.ndarray:
    """Poisson weights e^{-|a|^2} |a|^{2n} / n! by a running product."""
    mean = abs(alpha) ** 2
    p = np.empty(dim)
    p[0] = math.exp(-mean)
    for n in range(1, dim):
        p[n] = p[n - 1] * mean / n
    return p


def squeezed_vacuum_ket(r: float, theta: float, dim: int) -> np.ndarray:
    """psi_{2m} = (-e^{i theta} tanh r)^m sqrt((2m)!) / (2^m m!) / sqrt(cosh r)."""
    psi = np.zeros(dim, dtype=complex)
    t = -np.exp(1j * theta) * math.tanh(r)
    for m in range(dim // 2 + dim % 2):
        if 2 * m >= dim:
            break
        log_c = 0.5 * math.lgamma(2 * m + 1) - m * math.log(2) - math.lgamma(m + 1)
        psi[2 * m] = t ** m * math.exp(log_c) / math.sqrt(math.cosh(r))
    return psi


def gaussian_moments(alpha: complex, r: float, theta: float):
    """<a>, <a^dag a>, <a^2> of D(alpha) S(r e^{i theta}) |0>."""
    sh, ch = math.sinh(r), math.cosh(r)
    return alpha, abs(alpha) ** 2 + sh ** 2, alpha ** 2 - np.exp(1j * theta) * sh * ch


def moments_from_ket(psi: np.ndarray, n: int, d: int) -> complex:
    """<psi| a^dag^n a^(n+d) |psi> by summing over Fock amplitudes."""
    total = 0j
    for j in range(n + d, psi.size):
        # a^(n+d)|j> = sqrt(j!/(j-n-d)!) |j-n-d>, then a^n acting on the bra side
        m = j - d
        coeff = math.sqrt(math.factorial(j) / math.factorial(j - n - d)) * \
            math.sqrt(math.factorial(m) / math.factorial(m - n))
        total += np.conj(psi[m]) * psi[j] * coeff
    return complex(total)


def moment_from_rho(rho: np.ndarray, n: int, d: int) -> complex:
    """tr(rho a^dag^n a^(n+d)) = sum_j rho_{j, j-d} * sqrt(j!/(j-n-d)!) sqrt((j-d)!/(j-d-n)!)."""
    total = 0j
    for j in range(n + d, rho.shape[0]):
        m = j - d
        coeff = math.exp(0.5 * (math.lgamma(j + 1) - math.lgamma(j - n - d + 1)
                                + math.lgamma(m + 1) - math.lgamma(m - n + 1)))
        total += rho[j, m] * coeff
    return complex(total)


# -- detector model ------------------------------------------------------------------


def loss_channel(rho: np.ndarray, eta: float) -> np.ndarray:
    """Beam-splitter loss: rho'_{m,n} = sum_k sqrt(C(m+k,k) C(n+k,k)) eta^((m+n)/2) (1-eta)^k rho_{m+k,n+k}."""
    dim = rho.shape[0]
    out = np.zeros_like(rho, dtype=complex)
    for m in range(dim):
        for n in range(dim):
            for k in range(dim - max(m, n)):
                w = math.sqrt(math.comb(m + k, k) * math.comb(n + k, k))
                out[m, n] += w * eta ** ((m + n) / 2) * (1 - eta) ** k * rho[m + k, n + k]
    return out


def phase_bin_masses(rho: np.ndarray, eta: float, n_bins: int) -> np.ndarray:
    """Exact probability that arg(alpha) falls in each of ``n_bins`` bins.

    Efficiency-eta heterodyne equals ideal heterodyne of the state after a
    loss channel, with outcomes rescaled by 1/sqrt(eta); the rescaling does
    not change the phase.  Integrating the lossy Q-function over the radius
    leaves sum_{m,n} rho'_{mn} Gamma((m+n)/2 + 1) / (2 pi sqrt(m! n!))
    times the angular integral of e^{i(m-n)phi}.
    """
    lossy = loss_channel(rho, eta)
    dim = rho.shape[0]
    edges = np.linspace(-np.pi, np.pi, n_bins + 1)
    masses = np.zeros(n_bins)
    for m in range(dim):
        for n in range(dim):
            if lossy[m, n] == 0:
                continue
            radial = math.exp(math.lgamma((m + n) / 2 + 1) - 0.5 * (math.lgamma(m + 1) + math.lgamma(n + 1)))
            j = n - m
            if j == 0:
                ang = np.diff(edges)
            else:
                ang = (np.exp(1j * j * edges[1:]) - np.exp(1j * j * edges[:-1])) / (1j * j)
            masses += (lossy[m, n] * radial * ang).real / (2 * np.pi)
    return masses


def s_ordered_from_normal(normal, n: int, d: int, s: float) -> complex:
    """{a^dag^n a^(n+d)}_s from normal-ordered moments normal[k] = <a^dag^k a^(k+d)>.

    Each step of the ordering change contracts one a^dag a pair with weight
    (1 - s)/2, giving sum_k C(n,k) (n+d)!/(k+d)! ((1-s)/2)^(n-k) normal[k].
    """
    return complex(sum(math.comb(n, k) * math.factorial(n + d) / math.factorial(k + d)
                       * ((1 - s) / 2) ** (n - k) * normal[k] for k in range(n + 1)))


# -- frozen constants --------------------------------------------------------------

R_SQZ = math.asinh(math.sqrt(0.5))             # sinh^2 r = 1/2
SQZ_VAR_SQUEEZED = 0.066987298107780677        # e^{-2r}/4 = (sqrt(3/2) - sqrt(1/2))^2 / 4
SQZ_VAR_ANTISQUEEZED = 0.93301270189221941     # e^{2r}/4
NUMBER1_VAR = 0.75                               # (2n + 1)/4
VACUUM_VAR = 0.25
L_2_0_AT_1 = -0.5
SHIFT_COHERENT1_PHI03 = complex(0.91486351509509061, 0.27851606207883480)  # exp(e^{0.3 i} - 1)
ROOT_HALF = 0.70710678118654752
