"""Phase-randomized homodyne simulation.

Closed-form quadrature distributions for phase-invariant states, seeded
sampling through a tabulated inverse CDF, and a plain-text dataset format
(header line plus one "theta,x" record per line).

Convention: x is the dimensionless quadrature with vacuum variance 1/2, so
<x^2> = <n> + 1/2 for phase-invariant states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator

from .fock import PhotonNumberDistribution, StateParams, mean_photon

DATASET_TAG = "quadrature-v1"
CDF_GRID_SIZE = 4096


class ParseError(ValueError):
    """Malformed dataset file; the message carries the offending line number."""


def wavefunctions(n_max: int, x) -> np.ndarray:
    """Harmonic-oscillator eigenfunctions psi_0 .. psi_n_max at real x.

    Uses the stable two-term recurrence
    psi_{n+1} = x sqrt(2/(n+1)) psi_n - sqrt(n/(n+1)) psi_{n-1}
    with psi_0 = pi^{-1/4} exp(-x^2/2).

    Returns:
        Array of shape (n_max + 1,) + shape(x).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = math.pi ** (-0.25) * np.exp(-(x**2) / 2)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = x * math.sqrt(2.0 / (n + 1)) * out[n] - math.sqrt(
            n / (n + 1)
        ) * out[n - 1]
    return out


def quad_pdf(dist: PhotonNumberDistribution, x):
    """Quadrature probability density of a phase-invariant state.

    pr(x) = sum_n p_n psi_n(x)^2; the phase drops out for diagonal states.

    Args:
        dist: Photon-number distribution.
        x: Real value or array.

    Returns:
        Density with the shape of ``x`` (float for scalar input).
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    probs = dist.probs
    psi_prev = math.pi ** (-0.25) * np.exp(-(arr**2) / 2)
    total = probs[0] * psi_prev**2
    psi_curr = math.sqrt(2.0) * arr * psi_prev
    if probs.size > 1:
        total = total + probs[1] * psi_curr**2
    for n in range(1, probs.size - 1):
        psi_next = arr * math.sqrt(2.0 / (n + 1)) * psi_curr - math.sqrt(
            n / (n + 1)
        ) * psi_prev
        psi_prev, psi_curr = psi_curr, psi_next
        total = total + probs[n + 1] * psi_curr**2
    if scalar:
        return float(total[0])
    return total.reshape(np.shape(x))


def default_x_max(mean: float) -> float:
    """Quadrature support bound 5 sqrt(2 <n> + 1) + 2; tail mass < 1e-9."""
    return 5.0 * math.sqrt(2.0 * mean + 1.0) + 2.0


@dataclass(eq=False)
class QuadratureDataset:
    """Phase-randomized quadrature records with their generation metadata.

    ``x_max`` is the nominal support used for sampling and binning; when not
    given it is derived from ``params`` (or, lacking those, from the data).
    ``bin_hint`` optionally carries a preferred histogram resolution to the
    reconstruction stage; it is not serialized.
    """

    theta: np.ndarray
    x: np.ndarray
    count: int
    seed: int | None = None
    params: StateParams | None = None
    bin_hint: int | None = None
    x_max: float | None = None

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if theta.ndim != 1 or x.ndim != 1 or theta.size != x.size:
            raise ValueError("theta and x must be 1-d arrays of equal length")
        if self.count != theta.size or self.count < 1:
            raise ValueError(f"count {self.count} does not match {theta.size} records")
        if not np.all(np.isfinite(x)):
            raise ValueError("quadrature values must be finite")
        if theta.size and (theta.min() < 0 or theta.max() >= math.pi):
            raise ValueError("phases must lie in [0, pi)")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "x", x)
        if self.x_max is None:
            if self.params is not None:
                x_max = default_x_max(self.params.mean_photon)
            else:
                x_max = max(5.0, float(np.max(np.abs(x))) + 2.0)
            object.__setattr__(self, "x_max", x_max)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuadratureDataset):
            return NotImplemented
        return (
            self.count == other.count
            and self.seed == other.seed
            and self.params == other.params
            and np.array_equal(self.theta, other.theta)
            and np.array_equal(self.x, other.x)
        )


def sample(
    dist: PhotonNumberDistribution,
    count: int,
    seed: int,
    params: StateParams | None = None,
) -> QuadratureDataset:
    """Draw a seeded phase-randomized homodyne dataset from a state.

    Phases are uniform on [0, pi); quadratures come from the closed-form
    density through a tabulated inverse CDF (CDF_GRID_SIZE points on
    [-x_max, x_max], monotone cubic interpolation), so a given seed fully
    determines the dataset.

    Args:
        dist: State to sample.
        count: Number of records, >= 1.
        seed: RNG seed.
        params: Generating family parameters, stored in the dataset metadata
            and used for the x_max rule when given.

    Returns:
        QuadratureDataset with ``count`` records.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    mean = params.mean_photon if params is not None else mean_photon(dist)
    x_max = default_x_max(mean)
    grid = np.linspace(-x_max, x_max, CDF_GRID_SIZE)
    pdf = quad_pdf(dist, grid)
    cdf = cumulative_trapezoid(pdf, grid, initial=0.0)
    cdf /= cdf[-1]
    keep = np.diff(cdf, prepend=-1.0) > 0  # drop knots where the tail underflows
    cdf_knots, x_knots = cdf[keep], grid[keep]
    if cdf_knots[-1] < 1.0:
        cdf_knots = np.append(cdf_knots, 1.0)
        x_knots = np.append(x_knots, x_max)
    inverse = PchipInterpolator(cdf_knots, x_knots)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, math.pi, count)
    u = rng.uniform(0.0, 1.0, count)
    x = np.asarray(inverse(u), dtype=float)
    return QuadratureDataset(
        theta=theta, x=x, count=count, seed=seed, params=params, x_max=x_max
    )


def write_dataset(ds: QuadratureDataset, path) -> None:
    """Write a dataset in the quadrature-v1 plain-text format.

    The header records count, seed and the generating (nbar, eta); datasets
    without those cannot be serialized.
    """
    if ds.params is None:
        raise ValueError("dataset has no state params; the file header requires nbar and eta")
    if ds.seed is None:
        raise ValueError("dataset has no seed; the file header requires one")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# {DATASET_TAG} count={ds.count} seed={ds.seed} "
            f"nbar={repr(float(ds.params.nbar))} eta={repr(float(ds.params.eta))}\n"
        )
        for t, x in zip(ds.theta, ds.x):
            fh.write(f"{repr(float(t))},{repr(float(x))}\n")


def _parse_header(line: str) -> tuple[int, int, float, float]:
    tokens = line[1:].split()
    if not tokens or tokens[0] != DATASET_TAG:
        raise ParseError(f"line 1: missing header '# {DATASET_TAG} ...'")
    fields = {}
    for tok in tokens[1:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise ParseError(f"line 1: malformed header token {tok!r}")
        fields[key] = value
    try:
        count = int(fields["count"])
        seed = int(fields["seed"])
        nbar = float(fields["nbar"])
        eta = float(fields["eta"])
    except KeyError as exc:
        raise ParseError(f"line 1: header missing key {exc.args[0]}") from None
    except ValueError:
        raise ParseError("line 1: non-numeric header value") from None
    return count, seed, nbar, eta


def read_dataset(path) -> QuadratureDataset:
    """Read a quadrature-v1 dataset file.

    Raises:
        ParseError: On a missing or malformed header, a non-numeric or
            non-finite record, an out-of-range phase, or a count mismatch;
            the message names the offending line.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith("#"):
        raise ParseError(f"line 1: missing header '# {DATASET_TAG} ...'")
    count, seed, nbar, eta = _parse_header(lines[0])
    theta = np.empty(len(lines) - 1)
    x = np.empty(len(lines) - 1)
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"line {i}: expected 'theta,x', got {line!r}")
        try:
            t, v = float(parts[0]), float(parts[1])
        except ValueError:
            raise ParseError(f"line {i}: non-numeric record {line!r}") from None
        if not (math.isfinite(t) and math.isfinite(v)):
            raise ParseError(f"line {i}: non-finite record {line!r}")
        if not 0 <= t < math.pi:
            raise ParseError(f"line {i}: phase {t} outside [0, pi)")
        theta[i - 2] = t
        x[i - 2] = v
    if theta.size != count:
        raise ParseError(
            f"line {len(lines)}: header declares count={count}, found {theta.size} records"
        )
    return QuadratureDataset(
        theta=theta, x=x, count=count, seed=seed, params=StateParams(nbar, eta)
    )
