"""Wigner and Husimi phase-space functions evaluated in the Fock basis.

Conventions: alpha = (x + i p)/sqrt(2), so the vacuum quadrature variance is
1/2; the Wigner function integrates to 1 over d^2(alpha) and obeys
|W| <= 2/pi; the Husimi function is <alpha|rho|alpha>/pi, in [0, 1/pi].

Fock-basis kernels (m >= n, x = 4|alpha|^2):

    W_mn(alpha) = (2/pi) (-1)^n sqrt(n!/m!) (2 conj(alpha))^(m-n)
                  exp(-x/2) L_n^(m-n)(x)

with the diagonal case W_nn = (2/pi) (-1)^n exp(-x/2) L_n(x).  Laguerre
values are generated by the three-term recurrence run directly on the
exponentially scaled product exp(-x/2) L_n^k(x), which stays within double
range on the whole domain.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .fock import FockDensityMatrix, PhotonNumberDistribution

ALPHA_MAX = 8.0
WIGNER_BOUND = 2 / math.pi
HUSIMI_BOUND = 1 / math.pi
_IMAG_TOL = 1e-8


def _as_alpha_array(alpha):
    """Validate the evaluation point(s) and return (array, was_scalar)."""
    a = np.asarray(alpha, dtype=complex)
    scalar = a.ndim == 0
    a = np.atleast_1d(a)
    if not np.all(np.isfinite(a)):
        raise ValueError("alpha must be finite")
    if np.any(np.abs(a) > ALPHA_MAX + 1e-9):
        raise ValueError(f"|alpha| must not exceed alpha_max = {ALPHA_MAX}")
    return a, scalar


def _scaled_laguerre_series(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Sum_n coeffs[n] * exp(-x/2) * L_n(x), vectorized over x."""
    m_prev = np.exp(-x / 2)
    total = coeffs[0] * m_prev
    if coeffs.size == 1:
        return total
    m_curr = (1 - x) * m_prev
    total = total + coeffs[1] * m_curr
    for n in range(2, coeffs.size):
        m_next = ((2 * n - 1 - x) * m_curr - (n - 1) * m_prev) / n
        total += coeffs[n] * m_next
        m_prev, m_curr = m_curr, m_next
    return total


def wigner_diag(dist: PhotonNumberDistribution, alpha):
    """Wigner function of a phase-invariant (diagonal) state.

    Args:
        dist: Photon-number distribution.
        alpha: Complex point or array of points, |alpha| <= ALPHA_MAX.

    Returns:
        W(alpha) as float or float array; depends on |alpha| only.
    """
    a, scalar = _as_alpha_array(alpha)
    x = 4 * np.abs(a) ** 2
    signs = np.where(np.arange(dist.probs.size) % 2 == 0, 1.0, -1.0)
    out = (2 / math.pi) * _scaled_laguerre_series(dist.probs * signs, x)
    return float(out[0]) if scalar else out.reshape(np.shape(alpha))


def husimi_diag(dist: PhotonNumberDistribution, alpha):
    """Husimi function of a diagonal state: (1/pi) e^{-|a|^2} sum p_n |a|^{2n}/n!."""
    a, scalar = _as_alpha_array(alpha)
    r2 = np.abs(a) ** 2
    term = np.exp(-r2)
    total = dist.probs[0] * term
    for n in range(1, dist.probs.size):
        term = term * r2 / n
        total = total + dist.probs[n] * term
    out = total / math.pi
    return float(out[0]) if scalar else out.reshape(np.shape(alpha))


def _rho_of(state) -> np.ndarray:
    if isinstance(state, FockDensityMatrix):
        return state.mat
    m = np.asarray(state, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square density matrix")
    return m


def _real_or_raise(values: np.ndarray, what: str) -> np.ndarray:
    resid = float(np.max(np.abs(values.imag)))
    if resid > _IMAG_TOL:
        raise ValueError(
            f"{what} produced imaginary residue {resid:.3e}; "
            "the input matrix is not consistently Hermitian"
        )
    return values.real


def wigner_full(state, alpha):
    """Wigner function of a general Fock-basis density matrix.

    Accepts a FockDensityMatrix or a raw square array.  Off-diagonal bands
    are summed in conjugate pairs; a Hermitian input therefore yields a real
    result up to rounding, and a residual imaginary part above 1e-8 raises.

    Args:
        state: Density matrix (validated or raw).
        alpha: Complex point or array of points, |alpha| <= ALPHA_MAX.

    Returns:
        W(alpha) as float or float array.
    """
    rho = _rho_of(state)
    a, scalar = _as_alpha_array(alpha)
    n_dim = rho.shape[0]
    x = 4 * np.abs(a) ** 2
    z = 2 * np.conj(a)  # conjugation fixed by the coherent-state convention checks
    lg = gammaln(np.arange(n_dim) + 1)

    total = np.zeros(a.shape, dtype=complex)
    z_pow = np.ones_like(a)
    for k in range(n_dim):
        if k > 0:
            z_pow = z_pow * z
        # scaled recurrence on exp(-x/2) L_n^k(x) over n = 0..n_dim-1-k
        m_prev = np.exp(-x / 2)
        m_curr = None
        band = np.zeros(a.shape, dtype=complex)
        for n in range(n_dim - k):
            if n == 0:
                m_val = m_prev
            elif n == 1:
                m_curr = (1 + k - x) * m_prev
                m_val = m_curr
            else:
                m_next = ((2 * (n - 1) + 1 + k - x) * m_curr - (n - 1 + k) * m_prev) / n
                m_prev, m_curr = m_curr, m_next
                m_val = m_next
            sign = -1.0 if n % 2 else 1.0
            ratio = math.exp(0.5 * (lg[n] - lg[n + k]))
            term = sign * ratio * m_val
            if k == 0:
                band += rho[n, n] * term
            else:
                band += (rho[n + k, n] * z_pow + rho[n, n + k] * np.conj(z_pow)) * term
        total += band
    out = (2 / math.pi) * _real_or_raise(total, "wigner_full")
    return float(out[0]) if scalar else out.reshape(np.shape(alpha))


def husimi_full(state, alpha):
    """Husimi function <alpha|rho|alpha>/pi of a general density matrix."""
    rho = _rho_of(state)
    a, scalar = _as_alpha_array(alpha)
    n_dim = rho.shape[0]
    # coherent amplitudes <n|alpha> per point, built by the stable recurrence
    c = np.zeros((n_dim,) + a.shape, dtype=complex)
    c[0] = np.exp(-np.abs(a) ** 2 / 2)
    for n in range(n_dim - 1):
        c[n + 1] = c[n] * a / math.sqrt(n + 1)
    vals = np.einsum("m...,mn,n...->...", c.conj(), rho, c)
    out = np.clip(_real_or_raise(np.atleast_1d(vals), "husimi_full"), 0, None) / math.pi
    return float(out[0]) if scalar else out.reshape(np.shape(alpha))


def wigner_eval(state):
    """Wigner evaluator callable for a distribution or a density matrix."""
    if isinstance(state, PhotonNumberDistribution):
        return lambda alpha: wigner_diag(state, alpha)
    return lambda alpha: wigner_full(state, alpha)


def husimi_eval(state):
    """Husimi evaluator callable for a distribution or a density matrix."""
    if isinstance(state, PhotonNumberDistribution):
        return lambda alpha: husimi_diag(state, alpha)
    return lambda alpha: husimi_full(state, alpha)


def wigner_norm_check(dist: PhotonNumberDistribution, alpha_max: float = ALPHA_MAX) -> float:
    """Radial normalization integral 2 pi * int_0^alpha_max W(r) r dr.

    For a phase-invariant state this equals the full d^2(alpha) integral up
    to the truncated tail, so the result should be 1 within 1e-8.

    Raises:
        ValueError: If the quadrature does not converge to that accuracy.
    """
    val, err = quad(
        lambda r: wigner_diag(dist, r) * r, 0.0, alpha_max, epsabs=1e-11, epsrel=1e-11, limit=200
    )
    if err > 1e-8:
        raise ValueError(f"normalization quadrature did not converge: error {err:.2e}")
    return 2 * math.pi * val


def quadrature_marginal(dist: PhotonNumberDistribution, x: float) -> float:
    """Marginal (1/2) int W((x + i p)/sqrt(2)) dp of a diagonal state.

    The 1/2 is the Jacobian of alpha = (x + i p)/sqrt(2); the result equals
    the quadrature probability density at x.
    """
    p_lim = math.sqrt(max(2 * ALPHA_MAX**2 - x * x, 0.0))
    val, err = quad(
        lambda p: wigner_diag(dist, (x + 1j * p) / math.sqrt(2)),
        -p_lim,
        p_lim,
        epsabs=1e-10,
        epsrel=1e-10,
        limit=200,
    )
    if err > 1e-7:
        raise ValueError(f"marginal quadrature did not converge: error {err:.2e}")
    return val / 2
