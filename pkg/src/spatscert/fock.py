"""Photon-number-space model of single-photon-added thermal states under loss.

The state family is a thermal state of mean photon number ``nbar`` with one
photon added (creation operator applied and renormalized), sent through a
loss channel of transmission ``eta``.  Photon-number distributions are dense
arrays ``probs[0..cutoff]``; constructors extend the cutoff until the
truncated tail mass is below ``TAIL_TOL``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

TAIL_TOL = 1e-10
MAX_CUTOFF = 100_000


@dataclass(frozen=True)
class StateParams:
    """Parameters of a lossy single-photon-added thermal state.

    Attributes:
        nbar: Mean photon number of the underlying thermal state, >= 0.
        eta: Transmission of the loss channel, in [0, 1].
    """

    nbar: float
    eta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.nbar) and self.nbar >= 0):
            raise ValueError(f"nbar must be finite and >= 0, got {self.nbar}")
        if not (math.isfinite(self.eta) and 0 <= self.eta <= 1):
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")

    @property
    def mean_photon(self) -> float:
        """Mean photon number eta*(2*nbar + 1) of the lossy added-photon state."""
        return self.eta * (2 * self.nbar + 1)


@dataclass(frozen=True, eq=False)
class PhotonNumberDistribution:
    """Probabilities over Fock levels 0..cutoff.

    Entries are nonnegative and sum to 1 up to a truncation tail below
    ``TAIL_TOL``; ``probs[n]`` is the weight of Fock level ``n``.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("probs must be a 1-d array with at least two entries")
        if not np.all(np.isfinite(p)):
            raise ValueError("probs must be finite")
        if np.any(p < -1e-12):
            raise ValueError("probs must be nonnegative")
        total = float(p.sum())
        if not (1 - TAIL_TOL <= total <= 1 + 1e-9):
            raise ValueError(
                f"probs must sum to 1 within the truncation tolerance, got {total!r}"
            )

    @property
    def cutoff(self) -> int:
        return self.probs.size - 1

    def mean(self) -> float:
        return mean_photon(self)

    def variance(self) -> float:
        return photon_variance(self)


def default_cutoff_hint(nbar: float) -> int:
    """Default truncation hint, generous enough for moments and loss composition."""
    return 20 + math.ceil(12 * (nbar + 1))


def _truncate(raw: np.ndarray, cutoff_hint: int) -> np.ndarray:
    """Cut ``raw`` at max(cutoff_hint, smallest N with tail below TAIL_TOL)."""
    c = np.cumsum(raw)
    if 1 - c[-1] >= TAIL_TOL:
        raise ValueError("internal: raw array too short for the tail tolerance")
    n_tail = int(np.searchsorted(c, 1 - TAIL_TOL))
    return raw[: max(cutoff_hint, n_tail, 1) + 1]


def _thermal_raw(nbar: float, size: int) -> np.ndarray:
    k = np.arange(size)
    q = nbar / (nbar + 1)
    return q**k / (nbar + 1)


def thermal_dist(nbar: float, cutoff_hint: int | None = None) -> PhotonNumberDistribution:
    """Thermal photon-number distribution p_k = nbar^k / (nbar+1)^(k+1).

    Args:
        nbar: Mean photon number, >= 0.
        cutoff_hint: Lower bound on the cutoff; the cutoff extends past it
            until the truncated tail is below ``TAIL_TOL``.
    """
    if not (math.isfinite(nbar) and nbar >= 0):
        raise ValueError(f"nbar must be finite and >= 0, got {nbar}")
    if cutoff_hint is None:
        cutoff_hint = default_cutoff_hint(nbar)
    size = max(2 * cutoff_hint + 2, 64)
    while True:
        raw = _thermal_raw(nbar, size)
        if 1 - raw.sum() < TAIL_TOL:
            return PhotonNumberDistribution(_truncate(raw, cutoff_hint))
        size *= 2
        if size > MAX_CUTOFF:
            raise ValueError(f"cutoff exceeds {MAX_CUTOFF} for nbar={nbar}")


def spats_dist(nbar: float, cutoff_hint: int | None = None) -> PhotonNumberDistribution:
    """Single-photon-added thermal distribution.

    Adding one photon to a thermal state maps the thermal weight of level k
    to level k+1 with weight (k+1) p_k / (nbar+1); the vacuum weight is 0.

    Args:
        nbar: Mean photon number of the underlying thermal state.
        cutoff_hint: Lower bound on the cutoff, extended as needed.
    """
    if not (math.isfinite(nbar) and nbar >= 0):
        raise ValueError(f"nbar must be finite and >= 0, got {nbar}")
    if cutoff_hint is None:
        cutoff_hint = default_cutoff_hint(nbar)
    size = max(2 * cutoff_hint + 2, 64)
    while True:
        th = _thermal_raw(nbar, size)
        raw = np.zeros(size + 1)
        raw[1:] = (np.arange(size) + 1) * th / (nbar + 1)
        if 1 - raw.sum() < TAIL_TOL:
            return PhotonNumberDistribution(_truncate(raw, cutoff_hint))
        size *= 2
        if size > MAX_CUTOFF:
            raise ValueError(f"cutoff exceeds {MAX_CUTOFF} for nbar={nbar}")


def loss_matrix(cutoff: int, eta: float) -> np.ndarray:
    """Binomial loss channel matrix L[m, n] = C(n, m) eta^m (1-eta)^(n-m).

    Computed in log space so binomial coefficients stay finite past n ~ 170.
    """
    if not (math.isfinite(eta) and 0 <= eta <= 1):
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    n_levels = cutoff + 1
    if eta == 1:
        return np.eye(n_levels)
    L = np.zeros((n_levels, n_levels))
    if eta == 0:
        L[0, :] = 1.0
        return L
    m, n = np.triu_indices(n_levels)
    log_binom = gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1)
    L[m, n] = np.exp(log_binom + m * math.log(eta) + (n - m) * math.log1p(-eta))
    return L


def apply_loss(dist: PhotonNumberDistribution, eta: float) -> PhotonNumberDistribution:
    """Send a photon-number distribution through a loss channel.

    Args:
        dist: Input distribution.
        eta: Transmission in [0, 1]; eta = 1 is the identity.

    Returns:
        Output distribution on the same cutoff (loss never raises the
        photon number); total mass is preserved.
    """
    out = loss_matrix(dist.cutoff, eta) @ dist.probs
    return PhotonNumberDistribution(out)


def lossy_spats_dist(
    params: StateParams, cutoff_hint: int | None = None
) -> PhotonNumberDistribution:
    """Lossy single-photon-added thermal distribution for the given parameters."""
    return apply_loss(spats_dist(params.nbar, cutoff_hint), params.eta)


def pgf_eval(params: StateParams, z):
    """Probability generating function of the lossy added-photon family.

    The lossless family has Phi(z) = z / (nbar + 1 - nbar z)^2; loss composes
    as Phi_eta(z) = Phi(1 - eta + eta z).  This closed form is independent of
    the Fock-space pipeline and serves as its cross-check.

    Args:
        params: State parameters.
        z: Evaluation point(s), real or complex with |z| <= 1.

    Returns:
        Phi_eta(z), scalar or array matching ``z``.
    """
    z = np.asarray(z)
    if np.any(np.abs(z) > 1 + 1e-12):
        raise ValueError("pgf_eval requires |z| <= 1")
    zz = 1 - params.eta + params.eta * z
    out = zz / (params.nbar + 1 - params.nbar * zz) ** 2
    return out if out.ndim else out.item()


def mean_photon(dist: PhotonNumberDistribution) -> float:
    """Mean photon number of a distribution (normalized by its total mass)."""
    p = dist.probs
    return float(np.arange(p.size) @ p / p.sum())


def photon_variance(dist: PhotonNumberDistribution) -> float:
    """Photon-number variance of a distribution."""
    p = dist.probs
    n = np.arange(p.size)
    mass = p.sum()
    m1 = n @ p / mass
    return float((n * n) @ p / mass - m1 * m1)


def mandel_q(dist: PhotonNumberDistribution) -> float:
    """Mandel Q parameter, variance/mean - 1; negative Q is nonclassical.

    Raises:
        ValueError: If the mean photon number vanishes (Q undefined).
    """
    m = mean_photon(dist)
    if m <= 0:
        raise ValueError("Mandel Q is undefined for a state with zero mean photon number")
    return photon_variance(dist) / m - 1


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Density matrix in the Fock basis, Hermitian with near-unit trace."""

    mat: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.mat, dtype=complex)
        object.__setattr__(self, "mat", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError("mat must be a square matrix of dimension >= 2")
        if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
            raise ValueError("mat must be finite")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("mat must be Hermitian within 1e-12")
        if np.min(m.diagonal().real) < -1e-14:
            raise ValueError("diagonal entries must be >= -1e-14")
        tr = float(m.trace().real)
        if not (1 - TAIL_TOL <= tr <= 1 + 1e-9):
            raise ValueError(f"trace must be 1 within the truncation tolerance, got {tr!r}")

    @property
    def cutoff(self) -> int:
        return self.mat.shape[0] - 1


def coherent_amplitudes(beta: complex, cutoff: int) -> np.ndarray:
    """Fock amplitudes <n|beta> = exp(-|beta|^2/2) beta^n / sqrt(n!), n <= cutoff."""
    c = np.zeros(cutoff + 1, dtype=complex)
    c[0] = math.exp(-abs(beta) ** 2 / 2)
    for n in range(cutoff):
        c[n + 1] = c[n] * beta / math.sqrt(n + 1)
    return c


def coherent_matrix(beta: complex, cutoff: int) -> FockDensityMatrix:
    """Coherent-state density matrix |beta><beta| truncated at ``cutoff``.

    Raises:
        ValueError: If the truncated norm falls below 1 - TAIL_TOL, i.e. the
            cutoff is too small for the requested amplitude.
    """
    c = coherent_amplitudes(beta, cutoff)
    norm = float(np.vdot(c, c).real)
    if norm < 1 - TAIL_TOL:
        raise ValueError(
            f"cutoff {cutoff} too small for |beta| = {abs(beta):.3f}: "
            f"truncated norm {norm!r}"
        )
    return FockDensityMatrix(np.outer(c, c.conj()))


def diag_to_matrix(dist: PhotonNumberDistribution) -> FockDensityMatrix:
    """Embed a photon-number distribution as a diagonal density matrix."""
    return FockDensityMatrix(np.diag(dist.probs.astype(complex)))


def diagonal_dist(rho: FockDensityMatrix) -> PhotonNumberDistribution:
    """Photon-number distribution on the diagonal of a density matrix."""
    return PhotonNumberDistribution(np.clip(rho.mat.diagonal().real, 0, None))
