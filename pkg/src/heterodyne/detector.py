"""Simulated heterodyne and direct photodetection with quantum efficiency eta.

Heterodyne outcomes follow the Gaussian-smoothed Q-function: an ideal
outcome beta is drawn from Q(beta) = <beta|rho|beta> by rejection sampling,
then complex Gaussian noise with E|nu|^2 = (1 - eta)/eta is added.  The
outcomes are not rescaled by eta, so <|alpha|^2> = <n> + 1/eta.

All randomness comes from numpy's Philox4x64 counter-based generator seeded
with the 64-bit ``seed`` of the :class:`DetectorConfig`, so identical inputs
give bit-identical outcomes on every platform numpy supports.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import EnvelopeFailure, InvalidSpec
from .states import DensityMatrix, fock_amplitudes, quadrature_moments

MIN_ACCEPTANCE = 0.01
ENVELOPE_SAFETY = 1.2
SEARCH_DEPTH = 36.0
_CHUNK = 1 << 16
_MAX_CHUNK = 1 << 20


def make_rng(seed: int) -> np.random.Generator:
    """Philox4x64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True)
class DetectorConfig:
    eta: float
    n_samples: int
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.eta <= 1):
            raise InvalidSpec(f"quantum efficiency must lie in (0, 1], got {self.eta!r}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise InvalidSpec(f"n_samples must be a positive integer, got {self.n_samples!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise InvalidSpec(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def s(self) -> float:
        """Ordering parameter of the measured quasiprobability, 1 - 2/eta."""
        return 1.0 - 2.0 / self.eta


@dataclass(frozen=True, eq=False)
class HeterodyneSampleSet:
    outcomes: np.ndarray
    eta: float
    seed: int = 0
    state_label: str = ""

    def __post_init__(self):
        out = np.array(self.outcomes, dtype=complex, copy=True).ravel()
        out.setflags(write=False)
        object.__setattr__(self, "outcomes", out)

    def __len__(self):
        return self.outcomes.size

    @property
    def s(self) -> float:
        return 1.0 - 2.0 / self.eta


@dataclass(frozen=True, eq=False)
class CountSampleSet:
    counts: np.ndarray
    eta: float
    seed: int = 0

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True).ravel()
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def __len__(self):
        return self.counts.size


class QSampler:
    """Rejection sampler for the Q-function of a truncated state.

    The proposal is an isotropic complex Gaussian centred on <a> whose
    per-quadrature variance is 1.5 times the largest principal variance of
    Q.  Q of a truncated state is a polynomial times exp(-|beta|^2), so any
    proposal wider than the vacuum dominates it; the bound ``M`` on Q/g is
    found by grid search plus local refinement and padded by 20%.
    """

    def __init__(self, rho: DensityMatrix):
        support = rho.support(tol=1e-40)
        self.factors = _pivoted_cholesky(rho.elements[:support, :support])
        self.dim = support

        mean, n_mean, second = quadrature_moments(rho)
        spread = n_mean + 1.0 - abs(mean) ** 2
        skew = second - mean ** 2
        self.center = complex(mean)
        self.width = 1.5 * (spread + abs(skew))  # c in exp(-|beta - mu|^2 / c)
        self.bound = ENVELOPE_SAFETY * self._max_ratio()

    def q(self, beta):
        v = fock_amplitudes(beta, self.dim)
        overlaps = v.conj() @ self.factors
        return np.sum(np.abs(overlaps) ** 2, axis=-1)

    def ratio(self, beta):
        """Q(beta)/pi divided by the proposal density at beta."""
        dist2 = np.abs(np.asarray(beta) - self.center) ** 2
        return self.width * self.q(beta) * np.exp(dist2 / self.width)

    def _max_ratio(self):
        # Search the disc holding all but exp(-SEARCH_DEPTH) of the proposal
        # mass; a candidate outside it that still violates the bound is
        # reported by draw() rather than silently accepted.
        radius = np.sqrt(SEARCH_DEPTH * self.width)
        axis = np.linspace(-radius, radius, 161)
        offsets = (axis[:, None] + 1j * axis[None, :]).ravel()
        grid = self.center + offsets[np.abs(offsets) <= radius]
        values = self.ratio(grid)
        best = float(values.max())

        def objective(p):
            beta = complex(p[0], p[1])
            if abs(beta - self.center) > radius:
                return 0.0
            return -float(self.ratio(beta))

        for idx in np.argsort(values)[-8:]:
            start = grid[idx]
            res = minimize(objective, [start.real, start.imag], method="Nelder-Mead",
                           options={"xatol": 1e-8, "fatol": 1e-12})
            best = max(best, -float(res.fun))
        return best

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty(n, dtype=complex)
        filled = 0
        proposed = 0
        sigma = np.sqrt(self.width / 2)
        while filled < n:
            batch = int(min(_MAX_CHUNK, max(_CHUNK, 1.1 * self.bound * (n - filled))))
            z = rng.standard_normal((2, batch))
            beta = self.center + sigma * (z[0] + 1j * z[1])
            u = rng.random(batch)
            ratio = self.ratio(beta)
            if np.any(ratio > self.bound):
                raise EnvelopeFailure(
                    f"Q/g reached {ratio.max():.4g}, above the envelope bound {self.bound:.4g}")
            accepted = beta[u * self.bound < ratio]
            take = min(accepted.size, n - filled)
            out[filled:filled + take] = accepted[:take]
            filled += take
            proposed += batch
            if proposed >= 10 * _CHUNK and filled < MIN_ACCEPTANCE * proposed:
                raise EnvelopeFailure(f"acceptance rate {filled / proposed:.4f} below {MIN_ACCEPTANCE}")
        return out


def _pivoted_cholesky(rho, tol=1e-15):
    """Columns c_j with rho = sum_j c_j c_j^dag.

    Unlike an eigendecomposition this keeps tiny high-Fock amplitudes
    accurate relative to their size (a pure state comes out exactly as its
    ket), which matters because Q/g amplifies them far from the origin.
    """
    residual = np.array(rho, dtype=complex)
    cols = []
    while True:
        diag = residual.diagonal().real
        k = int(np.argmax(diag))
        if diag[k] <= tol:
            break
        col = residual[:, k] / np.sqrt(diag[k])
        cols.append(col)
        residual = residual - np.outer(col, col.conj())
    return np.array(cols).T


_sampler_cache: dict[bytes, QSampler] = {}


def _sampler_for(rho):
    key = hashlib.sha1(rho.elements.tobytes()).digest()
    sampler = _sampler_cache.get(key)
    if sampler is None:
        if len(_sampler_cache) > 64:
            _sampler_cache.clear()
        sampler = _sampler_cache[key] = QSampler(rho)
    return sampler


def sample_heterodyne(rho: DensityMatrix, cfg: DetectorConfig) -> HeterodyneSampleSet:
    """Draw ``cfg.n_samples`` heterodyne outcomes at efficiency ``cfg.eta``."""
    rng = make_rng(cfg.seed)
    beta = _sampler_for(rho).draw(rng, cfg.n_samples)
    if cfg.eta < 1:
        sigma = np.sqrt((1 - cfg.eta) / (2 * cfg.eta))
        z = rng.standard_normal((2, cfg.n_samples))
        beta = beta + sigma * (z[0] + 1j * z[1])
    return HeterodyneSampleSet(beta, cfg.eta, cfg.seed, rho.label)


def sample_direct(rho: DensityMatrix, cfg: DetectorConfig) -> CountSampleSet:
    """Photon counts: n ~ rho_nn, then each photon survives with probability eta."""
    rng = make_rng(cfg.seed)
    p = np.clip(rho.photon_distribution, 0.0, None)
    n = rng.choice(p.size, size=cfg.n_samples, p=p / p.sum())
    counts = rng.binomial(n, cfg.eta)
    return CountSampleSet(counts, cfg.eta, cfg.seed)
