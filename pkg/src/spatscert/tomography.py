"""Maximum-likelihood reconstruction from phase-randomized quadrature data.

The default path reconstructs the photon-number distribution with the
diagonal expectation-maximization fixed point

    p_n <- p_n * sum_j (f_j / Pr_j) Pi[j, n],    Pr_j = sum_n Pi[j, n] p_n,

where Pi[j, n] = integral of psi_n(x)^2 over bin j: phase-averaged homodyne
POVMs are diagonal in the Fock basis, so phase-randomized data carries no
off-diagonal information.  A full iterative R rho R reconstruction over
phase-binned projectors is provided for general (phase-resolved) data and
cross-validation.  Parameter estimates come from fitting the lossy
added-photon model to the reconstruction, and uncertainties from a seeded
bootstrap over resampled datasets.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .fock import (
    FockDensityMatrix,
    PhotonNumberDistribution,
    StateParams,
    lossy_spats_dist,
)
from .homodyne import QuadratureDataset, wavefunctions

DEFAULT_BINS = 256
DEFAULT_CUTOFF = 30
MIN_BINS = 16
MIN_PHASE_BINS = 8
GL_NODES = 12
LOGLIK_GAIN_TOL = 1e-10  # per sample
PROB_CHANGE_TOL = 1e-7
MAX_ITERATIONS = 10_000
COMPLETENESS_TOL = 1e-6
COVERAGE_TOL = 1e-12
OCCUPANCY_FRACTION = 1e-9  # bins below this share of the data are ignored
MISMATCH_RESIDUAL = 0.05


@dataclass(eq=False)
class BinnedData:
    """Histogrammed quadrature data on uniform bins over [-x_max, x_max].

    ``counts`` is the x-marginal histogram; when the data was also split over
    phase bins, ``phase_counts`` holds the (phase, x) table whose marginal
    reproduces ``counts``.
    """

    edges: np.ndarray
    counts: np.ndarray
    phase_edges: np.ndarray | None = None
    phase_counts: np.ndarray | None = None

    def __post_init__(self) -> None:
        edges = np.asarray(self.edges, dtype=float)
        counts = np.asarray(self.counts)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be a strictly increasing 1-d array")
        if counts.shape != (edges.size - 1,) or np.any(counts < 0):
            raise ValueError("counts must be nonnegative with one entry per bin")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)
        if (self.phase_edges is None) != (self.phase_counts is None):
            raise ValueError("phase_edges and phase_counts must be given together")
        if self.phase_counts is not None:
            pe = np.asarray(self.phase_edges, dtype=float)
            pc = np.asarray(self.phase_counts)
            if pc.shape != (pe.size - 1, counts.size):
                raise ValueError("phase_counts shape must be (phase bins, x bins)")
            if not np.array_equal(pc.sum(axis=0), counts):
                raise ValueError("phase_counts must marginalize to counts")
            object.__setattr__(self, "phase_edges", pe)
            object.__setattr__(self, "phase_counts", pc)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def bin_data(
    ds: QuadratureDataset,
    n_bins: int | None = None,
    x_max: float | None = None,
    phase_bins: int | None = None,
) -> BinnedData:
    """Histogram a dataset on uniform bins.

    Args:
        ds: Dataset to bin.
        n_bins: Number of x bins, >= 16; defaults to the dataset's bin hint
            or 256.
        x_max: Half-range; defaults to the dataset's nominal support.  When
            samples fall outside, the range widens to cover them and a
            warning is emitted.
        phase_bins: When given, also accumulate a (phase, x) table over
            uniform phase bins on [0, pi).

    Returns:
        BinnedData conserving the total count.
    """
    if n_bins is None:
        n_bins = ds.bin_hint if ds.bin_hint is not None else DEFAULT_BINS
    if n_bins < MIN_BINS:
        raise ValueError(f"n_bins must be >= {MIN_BINS}, got {n_bins}")
    if x_max is None:
        x_max = ds.x_max
    top = float(np.max(np.abs(ds.x)))
    if top > x_max:
        outside = int(np.sum(np.abs(ds.x) > x_max))
        warnings.warn(
            f"{outside} sample(s) outside [-{x_max}, {x_max}]; widening bin range",
            stacklevel=2,
        )
        x_max = top * (1 + 1e-12)
    edges = np.linspace(-x_max, x_max, n_bins + 1)
    counts, _ = np.histogram(ds.x, bins=edges)
    if counts.sum() != ds.count:
        raise AssertionError("binning lost samples")
    phase_edges = phase_counts = None
    if phase_bins is not None:
        if phase_bins < 1:
            raise ValueError(f"phase_bins must be >= 1, got {phase_bins}")
        phase_edges = np.linspace(0.0, math.pi, phase_bins + 1)
        phase_counts, _, _ = np.histogram2d(ds.theta, ds.x, bins=(phase_edges, edges))
        phase_counts = phase_counts.astype(np.int64)
    return BinnedData(
        edges=edges, counts=counts, phase_edges=phase_edges, phase_counts=phase_counts
    )


def recommended_x_max(ds: QuadratureDataset, cutoff: int) -> float:
    """Bin half-range covering both the data and every psi_n up to cutoff.

    The POVM completeness requirement needs the range to extend past the
    classical turning point sqrt(2 cutoff + 1) of the highest retained Fock
    state; the dataset's own support rule covers the data side.
    """
    return max(ds.x_max, math.sqrt(2.0 * cutoff + 1.0) + 4.0)


def _overlap_tensor(edges: np.ndarray, cutoff: int) -> np.ndarray:
    """G[j, m, n] = integral over bin j of psi_m(x) psi_n(x) dx."""
    nodes, weights = np.polynomial.legendre.leggauss(GL_NODES)
    lo = edges[:-1]
    h = np.diff(edges)
    x = lo[:, None] + (nodes[None, :] + 1) * (h[:, None] / 2)
    psi = wavefunctions(cutoff, x)  # (cutoff+1, n_bins, GL_NODES)
    return np.einsum("mjk,njk,k->jmn", psi, psi, weights) * (h[:, None, None] / 2)


def povm_matrix(edges: np.ndarray, cutoff: int) -> np.ndarray:
    """Diagonal POVM elements Pi[j, n] = integral of psi_n^2 over bin j."""
    nodes, weights = np.polynomial.legendre.leggauss(GL_NODES)
    lo = edges[:-1]
    h = np.diff(edges)
    x = lo[:, None] + (nodes[None, :] + 1) * (h[:, None] / 2)
    psi = wavefunctions(cutoff, x)
    return np.einsum("njk,k->jn", psi**2, weights) * (h[:, None] / 2)


def _check_completeness(pi: np.ndarray, occupied: np.ndarray, cutoff: int) -> None:
    """Bidirectional POVM completeness guard.

    The bin range must resolve every retained Fock state (column sums close
    to one), and every occupied bin must be reachable by some retained state
    (otherwise its likelihood contribution is identically zero and the
    cutoff is too low for the data).
    """
    col = pi.sum(axis=0)
    n_bad = int(np.argmin(col))
    if col[n_bad] < 1 - COMPLETENESS_TOL:
        raise ValueError(
            f"POVM completeness deficit: sum_j Pi[j, n] = {col[n_bad]:.6f} for "
            f"n = {n_bad}; widen the bin range or lower the cutoff"
        )
    reach = pi.max(axis=1)
    dead = occupied & (reach < COVERAGE_TOL)
    if np.any(dead):
        j = int(np.argmax(dead))
        raise ValueError(
            f"POVM completeness deficit: occupied bin {j} is beyond the reach "
            f"of every Fock state up to cutoff {cutoff}; raise the cutoff or "
            f"narrow the bin range"
        )


@dataclass(frozen=True)
class MLEResult:
    """Reconstruction output: the state, the log-likelihood trace, and
    whether the stopping rule (rather than the iteration cap) fired."""

    state: PhotonNumberDistribution | FockDensityMatrix
    loglik_trace: np.ndarray
    iterations: int
    converged: bool


def mle_diagonal(
    binned: BinnedData,
    cutoff: int = DEFAULT_CUTOFF,
    max_iter: int = MAX_ITERATIONS,
    init: np.ndarray | None = None,
) -> MLEResult:
    """Maximum-likelihood photon-number distribution from binned data.

    Expectation-maximization on the multinomial bin likelihood; each step
    multiplies p_n by the back-projected count ratio, which cannot decrease
    the likelihood.  Iteration stops when the log-likelihood gain drops
    below 1e-10 per sample, the distribution change falls below 1e-7
    relative, or after ``max_iter`` steps (then ``converged`` is False).

    Args:
        binned: Histogrammed data; only the x-marginal is used.
        cutoff: Highest retained Fock state, >= 4.
        max_iter: Iteration cap.
        init: Optional starting distribution over 0..cutoff (default
            uniform); normalized internally.

    Raises:
        ValueError: On an empty histogram, a cutoff below 4, or a POVM
            completeness deficit in either direction.
    """
    if cutoff < 4:
        raise ValueError(f"cutoff must be >= 4, got {cutoff}")
    counts = np.asarray(binned.counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("binned data is empty")
    pi = povm_matrix(binned.edges, cutoff)
    occ = counts > OCCUPANCY_FRACTION * total
    _check_completeness(pi, occ, cutoff)

    if init is None:
        p = np.full(cutoff + 1, 1.0 / (cutoff + 1))
    else:
        p = np.asarray(init, dtype=float).copy()
        if p.shape != (cutoff + 1,) or np.any(p < 0) or p.sum() <= 0:
            raise ValueError("init must be a nonnegative distribution over 0..cutoff")
        p /= p.sum()

    f_occ = counts[occ]
    pi_occ = pi[occ]

    def loglik(prob: np.ndarray) -> float:
        pr = pi_occ @ prob
        return float(f_occ @ np.log(pr))

    trace = [loglik(p)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        pr = pi_occ @ p
        p_new = p * (pi_occ.T @ (f_occ / pr)) / total
        p_new /= p_new.sum()
        trace.append(loglik(p_new))
        gain = trace[-1] - trace[-2]
        change = np.max(np.abs(p_new - p)) / np.max(p_new)
        p = p_new
        if gain < LOGLIK_GAIN_TOL * total or change < PROB_CHANGE_TOL:
            converged = True
            break
    dist = PhotonNumberDistribution(np.clip(p, 0.0, None))
    return MLEResult(
        state=dist,
        loglik_trace=np.asarray(trace),
        iterations=iterations,
        converged=converged,
    )


def mle_full(
    binned: BinnedData,
    cutoff: int = DEFAULT_CUTOFF,
    max_iter: int = MAX_ITERATIONS,
) -> MLEResult:
    """Full density-matrix reconstruction by the iterative R rho R fixed point.

    Projectors |x_j, theta_k> are taken at the phase-bin centers with
    <n|x, theta> = exp(i n theta) psi_n(x); x-integrals over each bin use
    Gauss-Legendre quadrature.  When a full step would lower the likelihood
    (possible for R rho R, unlike the diagonal EM), the step is diluted
    toward the identity until it does not.  The returned matrix is projected
    onto the positive-semidefinite cone and renormalized.

    Args:
        binned: Histogrammed data with at least 8 phase bins.
        cutoff: Highest retained Fock state, >= 4.
        max_iter: Iteration cap.
    """
    if cutoff < 4:
        raise ValueError(f"cutoff must be >= 4, got {cutoff}")
    if binned.phase_counts is None:
        raise ValueError("full reconstruction requires phase-binned data")
    n_phase = binned.phase_counts.shape[0]
    if n_phase < MIN_PHASE_BINS:
        raise ValueError(
            f"full reconstruction requires >= {MIN_PHASE_BINS} phase bins, got {n_phase}"
        )
    freq = np.asarray(binned.phase_counts, dtype=float)
    total = freq.sum()
    if total <= 0:
        raise ValueError("binned data is empty")
    g = _overlap_tensor(binned.edges, cutoff)  # (n_bins, C+1, C+1)
    pi = np.einsum("jnn->jn", g)
    marginal = freq.sum(axis=0)
    _check_completeness(pi, marginal > OCCUPANCY_FRACTION * total, cutoff)

    centers = (binned.phase_edges[:-1] + binned.phase_edges[1:]) / 2
    n_idx = np.arange(cutoff + 1)
    u = np.exp(1j * np.outer(centers, n_idx))  # (K, C+1), phases e^{i n theta_k}
    # E_{kj} = c_k diag(u_k) G_j diag(u_k)^dagger with c_k the phase-bin weight
    c = np.diff(binned.phase_edges) / math.pi

    occ = freq > OCCUPANCY_FRACTION * total

    def probabilities(rho: np.ndarray) -> np.ndarray:
        # Tr(rho E_{kj}) with E = c_k D_k G_j D_k^dagger: rotate rho by D^dagger
        rot = np.conj(u)[:, :, None] * rho[None, :, :] * u[:, None, :]
        pr = np.einsum("kmn,jmn->kj", rot, g).real * c[:, None]
        return pr

    def loglik(rho: np.ndarray) -> float:
        pr = probabilities(rho)
        return float(freq[occ] @ np.log(pr[occ]))

    def r_operator(rho: np.ndarray) -> np.ndarray:
        pr = probabilities(rho)
        w = np.zeros_like(pr)
        w[occ] = freq[occ] / (total * pr[occ])
        mix = np.einsum("kj,jmn->kmn", w * c[:, None], g)
        return np.einsum("km,kmn,kn->mn", u, mix, np.conj(u))

    rho = np.eye(cutoff + 1, dtype=complex) / (cutoff + 1)
    trace = [loglik(rho)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        r = r_operator(rho)
        stepped = None
        for dilution in (1.0, 0.1, 0.01):
            op = r if dilution == 1.0 else (
                dilution * r + (1 - dilution) * np.eye(cutoff + 1)
            )
            cand = op @ rho @ np.conj(op).T
            cand = (cand + np.conj(cand).T) / 2
            cand /= np.trace(cand).real
            ll = loglik(cand)
            if ll >= trace[-1] - 1e-12 * total:
                stepped = (cand, ll)
                break
        if stepped is None:
            converged = True
            iterations -= 1
            break
        cand, ll = stepped
        gain = ll - trace[-1]
        change = np.max(np.abs(cand - rho)) / np.max(np.abs(cand))
        trace.append(ll)
        rho = cand
        if gain < LOGLIK_GAIN_TOL * total or change < PROB_CHANGE_TOL:
            converged = True
            break

    evals, evecs = np.linalg.eigh(rho)
    if evals[0] < 0:
        evals = np.clip(evals, 0.0, None)
        rho = (evecs * evals) @ np.conj(evecs).T
        rho /= np.trace(rho).real
    return MLEResult(
        state=FockDensityMatrix(rho),
        loglik_trace=np.asarray(trace),
        iterations=iterations,
        converged=converged,
    )


@dataclass(frozen=True)
class FitResult:
    """Lossy added-photon model fit to a reconstructed distribution.

    ``residual`` is the Euclidean distance between the distribution and the
    best model; ``model_mismatch`` flags residuals too large for the model
    family to explain.
    """

    params: StateParams
    residual: float
    model_mismatch: bool


def _model_distance(target: np.ndarray, nbar: float, eta: float) -> float:
    model = lossy_spats_dist(StateParams(nbar, eta), cutoff_hint=target.size - 1).probs
    size = max(target.size, model.size)
    a = np.zeros(size)
    b = np.zeros(size)
    a[: target.size] = target
    b[: model.size] = model
    return float(np.sum((a - b) ** 2))


def fit_params(
    dist: PhotonNumberDistribution,
    nbar_max: float = 4.0,
    grid_steps: int = 60,
    init: StateParams | None = None,
) -> FitResult:
    """Estimate (nbar, eta) by least squares against the lossy model family.

    A coarse grid over [0, nbar_max] x [0, 1] seeds a Nelder-Mead
    refinement.  ``init`` skips the grid and refines from the given
    parameters instead; bootstrap pipelines warm-start from the full-data
    fit this way.

    Returns:
        FitResult; ``model_mismatch`` is set when the residual exceeds 0.05.
    """
    target = dist.probs / dist.probs.sum()
    if init is not None:
        best = (_model_distance(target, init.nbar, init.eta), init.nbar, init.eta)
    else:
        nbars = np.linspace(0.0, nbar_max, grid_steps)
        etas = np.linspace(0.0, 1.0, grid_steps)
        best = (math.inf, 0.0, 0.0)
        for nb in nbars:
            for et in etas:
                d2 = _model_distance(target, nb, et)
                if d2 < best[0]:
                    best = (d2, nb, et)

    def objective(t: np.ndarray) -> float:
        nb, et = t
        if nb < 0 or nb > nbar_max or et < 0 or et > 1:
            return 1e6 + nb**2 + et**2
        return _model_distance(target, float(nb), float(et))

    res = minimize(
        objective,
        np.array([best[1], best[2]]),
        method="Nelder-Mead",
        options={"maxiter": 400, "xatol": 1e-7, "fatol": 1e-16},
    )
    d2, nb, et = best
    if res.fun <= d2:
        d2, nb, et = res.fun, float(res.x[0]), float(res.x[1])
    residual = math.sqrt(max(d2, 0.0))
    return FitResult(
        params=StateParams(nb, et),
        residual=residual,
        model_mismatch=residual > MISMATCH_RESIDUAL,
    )


def fit_eta(
    dist: PhotonNumberDistribution,
    nbar: float,
    init: float | None = None,
) -> FitResult:
    """Estimate eta alone, with nbar pinned to its calibrated value.

    Datasets declare the source's thermal occupation as nominal metadata
    (calibrated independently of the loss channel); fixing it breaks the
    near-degenerate (nbar, eta) ridge of the joint fit and leaves the
    efficiency as the single free parameter.  ``init`` narrows the search
    bracket; bootstrap pipelines warm-start from the full-data estimate.

    Returns:
        FitResult; ``model_mismatch`` is set when the residual exceeds 0.05.
    """
    if not (math.isfinite(nbar) and nbar >= 0):
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    target = dist.probs / dist.probs.sum()

    def objective(et: float) -> float:
        return _model_distance(target, nbar, min(max(et, 0.0), 1.0))

    if init is not None:
        lo, hi = max(init - 0.05, 0.0), min(init + 0.05, 1.0)
    else:
        lo, hi = 0.0, 1.0
    res = minimize_scalar(
        objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
    )
    et = float(min(max(res.x, 0.0), 1.0))
    residual = math.sqrt(max(float(res.fun), 0.0))
    return FitResult(
        params=StateParams(nbar, et),
        residual=residual,
        model_mismatch=residual > MISMATCH_RESIDUAL,
    )


class BootstrapResult(NamedTuple):
    value: float | np.ndarray
    sigma: float | np.ndarray
    samples: tuple


def bootstrap(
    ds: QuadratureDataset,
    pipeline: Callable[[QuadratureDataset], float],
    n_resamples: int = 50,
    seed: int = 0,
) -> BootstrapResult:
    """Resampling uncertainty for any dataset-to-value analysis pipeline.

    Draws ``n_resamples`` datasets of the original size with replacement
    (per-resample RNGs spawned from one seed sequence, so results are
    reproducible and independent of evaluation order) and reruns the
    pipeline on each.

    Args:
        ds: Source dataset.
        pipeline: Deterministic map from a dataset to a real value; a
            pipeline may also return a 1-d array to share one expensive
            reconstruction across several derived quantities.
        n_resamples: Number of resampled datasets, >= 2.
        seed: Seed for the resampling RNG.

    Returns:
        (value, sigma, samples): mean, unbiased standard deviation, and the
        individual pipeline outputs (floats or tuples, matching the
        pipeline's output shape).
    """
    if n_resamples < 2:
        raise ValueError(f"n_resamples must be >= 2, got {n_resamples}")
    children = np.random.SeedSequence(seed).spawn(n_resamples)
    outputs = []
    for child in children:
        rng = np.random.default_rng(child)
        idx = rng.integers(0, ds.count, size=ds.count)
        resampled = QuadratureDataset(
            theta=ds.theta[idx],
            x=ds.x[idx],
            count=ds.count,
            seed=None,
            params=ds.params,
            bin_hint=ds.bin_hint,
            x_max=ds.x_max,
        )
        outputs.append(pipeline(resampled))
    values = np.asarray(outputs, dtype=float)
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1)
    if values.ndim == 1:
        return BootstrapResult(
            value=float(mean), sigma=float(std), samples=tuple(map(float, values))
        )
    return BootstrapResult(
        value=mean, sigma=std, samples=tuple(tuple(map(float, row)) for row in values)
    )
