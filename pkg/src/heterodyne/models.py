"""scikit-learn style estimators over heterodyne outcomes.

Each class takes its settings in ``__init__`` (so ``get_params``/``set_params``
and ``sklearn.base.clone`` work) and learns from outcomes in ``fit``.  ``X``
is either a :class:`~heterodyne.detector.HeterodyneSampleSet`, a 1-D complex
array, or a real array of shape (n_samples, 2) holding (Re, Im) pairs.  For
raw arrays the quantum efficiency must be given as ``eta``.

Fitted attributes end in an underscore, as in scikit-learn.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .detector import DetectorConfig, HeterodyneSampleSet, sample_heterodyne
from .estimators import (DEFAULT_BLOCKS, DEFAULT_PHASE_BINS, estimate_mean_photon,
                         estimate_normal_moment, estimate_photon_fluctuations,
                         estimate_photon_second_moment, estimate_quadrature, phase_histogram)
from .reconstruction import choose_cutoff, reconstruct


def check_outcomes(X, eta=None) -> HeterodyneSampleSet:
    """Validate heterodyne input and return it as a sample set."""
    if isinstance(X, HeterodyneSampleSet):
        if eta is not None and not np.isclose(eta, X.eta):
            raise ValueError(f"eta={eta!r} disagrees with the sample set's eta={X.eta!r}")
        return X
    if eta is None:
        raise ValueError("eta is required when fitting on a raw outcome array")
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta!r}")
    arr = np.asarray(X)
    if np.iscomplexobj(arr):
        arr = np.ravel(arr)
        if not np.all(np.isfinite(arr)):
            raise ValueError("outcomes contain NaN or infinity")
        if arr.size < 2:
            raise ValueError("need at least 2 outcomes")
        alpha = arr
    else:
        arr = check_array(X, ensure_min_samples=2)
        if arr.shape[1] != 2:
            raise ValueError(f"real input must have shape (n_samples, 2), got {arr.shape}")
        alpha = arr[:, 0] + 1j * arr[:, 1]
    return HeterodyneSampleSet(alpha, float(eta))


class HeterodyneDetector(BaseEstimator):
    """Simulated heterodyne detector; ``sample(rho)`` draws outcomes."""

    def __init__(self, eta=1.0, n_samples=10_000, seed=0):
        self.eta = eta
        self.n_samples = n_samples
        self.seed = seed

    def sample(self, rho) -> HeterodyneSampleSet:
        return sample_heterodyne(rho, DetectorConfig(self.eta, self.n_samples, self.seed))


class PhotonStatistics(BaseEstimator):
    """Mean photon number and number variance.

    Attributes
    ----------
    mean_, variance_, second_moment_ : float
    mean_ci_, variance_ci_, second_moment_ci_ : float
        Confidence half-widths; the mean uses the plug-in interval unless
        ``block_mean=True``, the variance always uses blocks.
    """

    def __init__(self, eta=None, n_blocks=DEFAULT_BLOCKS, block_mean=False):
        self.eta = eta
        self.n_blocks = n_blocks
        self.block_mean = block_mean

    def fit(self, X, y=None):
        samples = check_outcomes(X, self.eta)
        mean = estimate_mean_photon(samples, self.n_blocks if self.block_mean else None)
        second = estimate_photon_second_moment(samples)
        var = estimate_photon_fluctuations(samples, self.n_blocks)
        self.mean_, self.mean_ci_ = mean.value.real, mean.half_width
        self.second_moment_, self.second_moment_ci_ = second.value.real, second.half_width
        self.variance_, self.variance_ci_ = var.value.real, var.half_width
        self.n_samples_ = len(samples)
        return self


class QuadratureStatistics(BaseEstimator):
    """Mean and variance of x_phi for each angle in ``angles``."""

    def __init__(self, angles=(0.0, np.pi / 2), eta=None, n_blocks=DEFAULT_BLOCKS):
        self.angles = angles
        self.eta = eta
        self.n_blocks = n_blocks

    def fit(self, X, y=None):
        samples = check_outcomes(X, self.eta)
        stats = [estimate_quadrature(samples, phi, self.n_blocks) for phi in self.angles]
        self.mean_ = np.array([m.value.real for m, _ in stats])
        self.mean_ci_ = np.array([m.half_width for m, _ in stats])
        self.variance_ = np.array([v.value.real for _, v in stats])
        self.variance_ci_ = np.array([v.half_width for _, v in stats])
        return self

    def uncertainty_product(self):
        """Product of the first two fitted variances."""
        check_is_fitted(self, "variance_")
        return float(self.variance_[0] * self.variance_[1])


class NormalMomentEstimator(BaseEstimator):
    """Normal-ordered moments <a^dag^n a^(n+d)> for each (n, d) in ``orders``."""

    def __init__(self, orders=((1, 0),), eta=None):
        self.orders = orders
        self.eta = eta

    def fit(self, X, y=None):
        samples = check_outcomes(X, self.eta)
        est = [estimate_normal_moment(samples, n, d) for n, d in self.orders]
        self.moments_ = np.array([e.value for e in est])
        self.half_widths_re_ = np.array([e.half_width_re for e in est])
        self.half_widths_im_ = np.array([e.half_width_im for e in est])
        return self


class DensityMatrixReconstructor(BaseEstimator):
    """Fock-basis reconstruction for states of finite support.

    Parameters
    ----------
    cutoff : int or None
        Fixed cutoff N.  ``None`` picks it with the stability scan up to
        ``n_max``.
    n_max : int
        Largest cutoff examined when ``cutoff`` is None.
    """

    def __init__(self, cutoff=None, n_max=8, eta=None, n_blocks=DEFAULT_BLOCKS):
        self.cutoff = cutoff
        self.n_max = n_max
        self.eta = eta
        self.n_blocks = n_blocks

    def fit(self, X, y=None):
        samples = check_outcomes(X, self.eta)
        if self.cutoff is None:
            choice = choose_cutoff(samples, self.n_max, self.n_blocks)
            cutoff, self.unstable_ = choice.cutoff, choice.unstable
        else:
            cutoff, self.unstable_ = int(self.cutoff), False
        self.result_ = reconstruct(samples, cutoff, self.n_blocks)
        self.cutoff_ = cutoff
        self.density_matrix_ = self.result_.elements
        self.half_widths_re_ = self.result_.half_widths_re
        self.half_widths_im_ = self.result_.half_widths_im
        return self

    def photon_distribution(self):
        check_is_fitted(self, "density_matrix_")
        return self.density_matrix_.diagonal().real.copy()


class PhaseDistribution(TransformerMixin, BaseEstimator):
    """Binned heterodyne phase marginal.

    ``transform`` maps outcomes to their bin index, which makes the
    estimator usable as a discretising step in a pipeline.
    """

    def __init__(self, n_bins=DEFAULT_PHASE_BINS, eta=None):
        self.n_bins = n_bins
        self.eta = eta

    def fit(self, X, y=None):
        samples = check_outcomes(X, self.eta)
        self.histogram_ = phase_histogram(samples, self.n_bins)
        self.bin_masses_ = self.histogram_.bin_masses
        self.bin_edges_ = self.histogram_.edges
        return self

    def transform(self, X):
        check_is_fitted(self, "bin_masses_")
        # phase binning does not depend on eta
        alpha = X.outcomes if isinstance(X, HeterodyneSampleSet) else check_outcomes(X, 1.0).outcomes
        phase = np.where(np.abs(alpha) < 1e-12, 0.0, np.angle(alpha))
        idx = np.floor((phase + np.pi) / (2 * np.pi) * self.n_bins).astype(np.int64) % self.n_bins
        return idx.reshape(-1, 1)
