"""Finite Fock-basis states and their exact (oracle) properties.

Everything here is deterministic linear algebra in a truncated number basis.
The statistical estimators elsewhere in the package are validated against
these values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import expm
from scipy.special import gammainc

from .errors import IndexBeyondTruncation, InvalidSpec, TruncationTooSmall

TAIL_TOLERANCE = 1e-8
DEFAULT_FINITE_DIM = 8
DEFAULT_GAUSSIAN_DIM = 64
MAX_DIM = 512

_HERMITIAN_TOL = 1e-12
_TRACE_TOL = 1e-9
_PSD_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density operator in the truncated number basis.

    ``elements[m, n]`` is the matrix element between Fock states m and n.
    The array is copied and made read-only on construction.
    """

    elements: np.ndarray
    label: str = ""

    def __post_init__(self):
        rho = np.array(self.elements, dtype=complex, copy=True)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
            raise InvalidSpec(f"density matrix must be square and non-empty, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > _HERMITIAN_TOL:
            raise InvalidSpec("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > _TRACE_TOL:
            raise InvalidSpec(f"density matrix trace is {np.trace(rho).real!r}, expected 1")
        if np.linalg.eigvalsh(rho)[0] < -_PSD_TOL:
            raise InvalidSpec("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "elements", rho)

    @classmethod
    def from_ket(cls, psi, label=""):
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()), label=label)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def photon_distribution(self) -> np.ndarray:
        return self.elements.diagonal().real.copy()

    def support(self, tol: float = 1e-15) -> int:
        """Number of leading Fock levels carrying population above ``tol``."""
        occupied = np.nonzero(self.photon_distribution > tol)[0]
        return int(occupied[-1]) + 1 if occupied.size else 1


# -- state specifications ---------------------------------------------------


@dataclass(frozen=True)
class StateSpec:
    """Base class of the state recipes accepted by :func:`build_state`.

    ``dim=None`` lets the constructor pick a truncation: a small fixed size
    for finite superpositions, and the smallest adequate size (at least 64)
    for coherent and squeezed states.
    """

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Coherent(StateSpec):
    amplitude: complex = 0.0
    dim: int | None = None

    def describe(self):
        return f"coherent(alpha={_fmt_complex(self.amplitude)})"


@dataclass(frozen=True)
class Number(StateSpec):
    n: int = 0
    dim: int | None = None

    def describe(self):
        return f"number(n={self.n})"


@dataclass(frozen=True)
class SqueezedCoherent(StateSpec):
    """Displaced squeezed vacuum D(amplitude) S(r, phase)|0>.

    With ``phase=0`` the quadrature ``x_0 = (a + a^dag)/2`` is squeezed.
    """

    amplitude: complex = 0.0
    r: float = 0.0
    phase: float = 0.0
    dim: int | None = None

    def describe(self):
        return (f"squeezed(alpha={_fmt_complex(self.amplitude)}, r={self.r:.6g}, "
                f"theta={self.phase:.6g})")


@dataclass(frozen=True)
class Superposition(StateSpec):
    coefficients: tuple = ()
    dim: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))

    def describe(self):
        terms = ", ".join(_fmt_complex(c) for c in self.coefficients)
        return f"superposition([{terms}])"


@dataclass(frozen=True)
class Mixture(StateSpec):
    components: tuple = ()
    dim: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "components",
                           tuple((float(w), s) for w, s in self.components))

    def describe(self):
        return "mixture(" + " + ".join(f"{w:.6g}*{s.describe()}" for w, s in self.components) + ")"


def squeezed_vacuum(r: float, phase: float = 0.0, dim: int | None = None) -> SqueezedCoherent:
    return SqueezedCoherent(0.0, r, phase, dim)


def _fmt_complex(z) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.6g}"
    return f"{z.real:.6g}{z.imag:+.6g}j"


# -- construction ----------------------------------------------------------


def build_state(spec: StateSpec) -> DensityMatrix:
    """Build the density matrix described by ``spec``.

    Raises
    ------
    TruncationTooSmall
        If an explicit ``dim`` leaves more than 1e-8 probability outside
        the truncated space.
    InvalidSpec
        For malformed recipes (negative weights, empty coefficient lists,
        number states outside the truncation, ...).
    """
    rho = _build(spec, getattr(spec, "dim", None))
    return DensityMatrix(rho, label=spec.describe())


def _build(spec, dim):
    if dim is not None and (int(dim) != dim or dim < 1):
        raise InvalidSpec(f"dim must be a positive integer, got {dim!r}")
    if isinstance(spec, Number):
        return _ket_to_rho(_number_ket(spec.n, dim))
    if isinstance(spec, Superposition):
        return _ket_to_rho(_superposition_ket(spec.coefficients, dim))
    if isinstance(spec, Coherent):
        return _ket_to_rho(_gaussian_ket(complex(spec.amplitude), 0.0, 0.0, dim))
    if isinstance(spec, SqueezedCoherent):
        if spec.r < 0:
            raise InvalidSpec("squeeze magnitude r must be nonnegative")
        return _ket_to_rho(_gaussian_ket(complex(spec.amplitude), float(spec.r),
                                         float(spec.phase), dim))
    if isinstance(spec, Mixture):
        return _mixture(spec, dim)
    raise InvalidSpec(f"unknown state specification {spec!r}")


def _ket_to_rho(psi):
    return np.outer(psi, psi.conj())


def _number_ket(n, dim):
    if int(n) != n or n < 0:
        raise InvalidSpec(f"photon number must be a nonnegative integer, got {n!r}")
    n = int(n)
    dim = max(n + 1, DEFAULT_FINITE_DIM) if dim is None else dim
    if n >= dim:
        raise InvalidSpec(f"number state |{n}> does not fit in dim={dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[n] = 1.0
    return psi


def _superposition_ket(coefficients, dim):
    coeffs = np.asarray(coefficients, dtype=complex)
    if coeffs.size == 0:
        raise InvalidSpec("superposition needs at least one coefficient")
    norm = np.linalg.norm(coeffs)
    if norm == 0:
        raise InvalidSpec("superposition coefficients are all zero")
    dim = max(coeffs.size, DEFAULT_FINITE_DIM) if dim is None else dim
    if coeffs.size > dim:
        raise InvalidSpec(f"{coeffs.size} coefficients do not fit in dim={dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[:coeffs.size] = coeffs / norm
    return psi


def _mixture(spec, dim):
    if not spec.components:
        raise InvalidSpec("mixture needs at least one component")
    weights = np.array([w for w, _ in spec.components], dtype=float)
    if np.any(weights < 0):
        raise InvalidSpec("mixture weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise InvalidSpec(f"mixture weights sum to {weights.sum()!r}, expected 1")
    if dim is None:
        # every component is built at its own default size, then padded
        parts = [_build(s, getattr(s, "dim", None)) for _, s in spec.components]
        dim = max(p.shape[0] for p in parts)
    else:
        parts = [_build(s, dim) for _, s in spec.components]
    rho = np.zeros((dim, dim), dtype=complex)
    for w, part in zip(weights, parts):
        d = part.shape[0]
        if d > dim:
            raise TruncationTooSmall(f"mixture component needs dim={d}, mixture has dim={dim}")
        rho[:d, :d] += w * part
    return rho / np.trace(rho).real


def _ladder(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def _gaussian_ket(alpha, r, theta, dim):
    """Fock amplitudes of D(alpha) S(r e^{i theta}) |0>, truncated to ``dim``."""
    auto = dim is None
    dim = DEFAULT_GAUSSIAN_DIM if auto else int(dim)
    while True:
        if r == 0:
            psi_full, tail = _coherent_ket(alpha, dim)
        else:
            psi_full, tail = _squeezed_ket(alpha, r, theta, dim)
        if tail < TAIL_TOLERANCE:
            break
        if not auto or dim >= MAX_DIM:
            raise TruncationTooSmall(
                f"dim={dim} leaves probability {tail:.3g} beyond the cutoff "
                f"(limit {TAIL_TOLERANCE:g})")
        dim += 32
    psi = psi_full[:dim]
    return psi / np.linalg.norm(psi)


def _coherent_ket(alpha, dim):
    n = np.arange(dim)
    mean = abs(alpha) ** 2
    if alpha == 0:
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
        return psi, 0.0
    # log-space keeps large |alpha| and n from overflowing
    log_mag = -mean / 2 + n * math.log(abs(alpha)) - 0.5 * np.array([math.lgamma(k + 1) for k in n])
    psi = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    tail = float(gammainc(dim, mean))
    return psi, tail


def _squeezed_ket(alpha, r, theta, dim):
    # Work in a padded space so truncation artefacts of the exponentials
    # stay far above the levels that are kept.
    work = 2 * dim
    while True:
        a = _ladder(work)
        ad = a.conj().T
        xi = r * np.exp(1j * theta)
        squeeze = expm(0.5 * (np.conj(xi) * (a @ a) - xi * (ad @ ad)))
        vac = np.zeros(work, dtype=complex)
        vac[0] = 1.0
        psi = squeeze @ vac
        if alpha != 0:
            psi = expm(alpha * ad - np.conj(alpha) * a) @ psi
        top = np.sum(np.abs(psi[3 * work // 4:]) ** 2)
        if top < 1e-14 or work >= 4 * MAX_DIM:
            break
        work *= 2
    tail = float(np.sum(np.abs(psi[dim:]) ** 2))
    return psi, tail


# -- exact evaluation --------------------------------------------------------


def fock_amplitudes(beta, dim: int) -> np.ndarray:
    """Return <n|beta> for n < dim, stacked on a trailing axis."""
    beta = np.asarray(beta, dtype=complex)
    factors = np.empty(beta.shape + (dim,), dtype=complex)
    factors[..., 0] = np.exp(-0.5 * np.abs(beta) ** 2)
    if dim > 1:
        factors[..., 1:] = beta[..., None] / np.sqrt(np.arange(1, dim))
    return np.cumprod(factors, axis=-1)


def q_function(rho: DensityMatrix, beta):
    """Husimi function <beta|rho|beta>, without the 1/pi prefactor.

    ``beta`` may be a scalar or an array; the result has the same shape.
    """
    v = fock_amplitudes(beta, rho.dim)
    w = v @ rho.elements.T
    q = np.einsum("...m,...m->...", v.conj(), w).real
    q = np.clip(q, 0.0, None)
    return float(q) if q.ndim == 0 else q


def canonical_phase_distribution(rho: DensityMatrix, phi):
    """Canonical phase density <phi|rho|phi> with |phi> = sum_n e^{i n phi}|n> / sqrt(2 pi).

    With ``elements[m, n] = <m|rho|n>`` this is
    (1/2pi) sum_{m,n} e^{i(n-m)phi} elements[m, n], so a coherent state with
    argument theta peaks at phi = theta, like the heterodyne phase marginal.
    """
    phi = np.asarray(phi, dtype=float)
    e = np.exp(1j * phi[..., None] * np.arange(rho.dim))
    p = np.einsum("...m,mn,...n->...", e.conj(), rho.elements, e).real / (2 * np.pi)
    return float(p) if p.ndim == 0 else p


def _moment(rho, n, d):
    dim = rho.dim
    if n + d >= dim:
        return 0j
    a = _ladder(dim)
    op = np.linalg.matrix_power(a.conj().T, n) @ np.linalg.matrix_power(a, n + d)
    return complex(np.trace(rho.elements @ op))


def exact_moment(rho: DensityMatrix, n: int, d: int) -> complex:
    """Normal-ordered moment <a^dag^n a^(n+d)> by ladder-operator algebra.

    The truncated product is exact because every intermediate state stays
    inside the kept levels.
    """
    if n < 0 or d < 0:
        raise IndexBeyondTruncation("moment orders must be nonnegative")
    if n + d >= rho.dim:
        raise IndexBeyondTruncation(f"n + d = {n + d} needs dim > {n + d}, state has dim={rho.dim}")
    return _moment(rho, n, d)


def exact_quadrature_stats(rho: DensityMatrix, phi: float) -> tuple[float, float]:
    """Mean and variance of x_phi = (a e^{-i phi} + a^dag e^{i phi}) / 2."""
    if rho.dim < 3:
        raise IndexBeyondTruncation("quadrature statistics need dim >= 3")
    a1 = exact_moment(rho, 0, 1)
    a2 = exact_moment(rho, 0, 2)
    n1 = exact_moment(rho, 1, 0).real
    mean = (a1 * np.exp(-1j * phi)).real
    second = (2 * (a2 * np.exp(-2j * phi)).real + 2 * n1 + 1) / 4
    return float(mean), float(second - mean ** 2)


def quadrature_moments(rho: DensityMatrix) -> tuple[complex, float, complex]:
    """Return <a>, <a^dag a>, <a^2> (zero beyond the truncation)."""
    return _moment(rho, 0, 1), _moment(rho, 1, 0).real, _moment(rho, 0, 2)


State = Union[Coherent, Number, SqueezedCoherent, Superposition, Mixture]
