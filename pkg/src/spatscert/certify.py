"""Nonclassicality certifiers: phase-space inequalities and moment baselines.

Two phase-space conditions are evaluated alongside two textbook baselines:

* multi-point-wigner: the two-point product condition
  W(a1) W(a2) - exp(-|a2 - a1|^2) W((a1 + a2)/2)^2, negative only for
  nonclassical states;
* wigner-vs-q: the single-point condition W(a) - 2 pi Q(a)^2;
* wigner-negativity: the minimum of the Wigner function;
* mandel-q: the Mandel Q parameter.

A certifier "detects" when value + k * sigma < 0 for the reported
statistical uncertainty sigma (zero for analytic evaluation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize

from .fock import (
    FockDensityMatrix,
    PhotonNumberDistribution,
    StateParams,
    diagonal_dist,
    lossy_spats_dist,
    mandel_q,
)
from .phasespace import ALPHA_MAX, husimi_diag, husimi_full, wigner_diag, wigner_eval, wigner_full

DETECTION_K = 2.0
MIN_SEPARATION = 1e-6
_PENALTY = 1e6


class CertifierKind(str, Enum):
    MULTI_POINT_WIGNER = "multi-point-wigner"
    WIGNER_VS_Q = "wigner-vs-q"
    WIGNER_NEGATIVITY = "wigner-negativity"
    MANDEL_Q = "mandel-q"


_ALIASES = {
    "multi-point-wigner": CertifierKind.MULTI_POINT_WIGNER,
    "multi-point": CertifierKind.MULTI_POINT_WIGNER,
    "two-point": CertifierKind.MULTI_POINT_WIGNER,
    "eq1": CertifierKind.MULTI_POINT_WIGNER,
    "wigner-vs-q": CertifierKind.WIGNER_VS_Q,
    "single-point": CertifierKind.WIGNER_VS_Q,
    "eq2": CertifierKind.WIGNER_VS_Q,
    "wigner-negativity": CertifierKind.WIGNER_NEGATIVITY,
    "negativity": CertifierKind.WIGNER_NEGATIVITY,
    "wmin": CertifierKind.WIGNER_NEGATIVITY,
    "mandel-q": CertifierKind.MANDEL_Q,
    "mandel": CertifierKind.MANDEL_Q,
}

_POINT_COUNT = {
    CertifierKind.MULTI_POINT_WIGNER: 2,
    CertifierKind.WIGNER_VS_Q: 1,
    CertifierKind.WIGNER_NEGATIVITY: 1,
    CertifierKind.MANDEL_Q: 0,
}


def parse_certifier(name: str) -> CertifierKind:
    """Resolve a certifier name or alias to its kind.

    Raises:
        ValueError: For unknown names, listing the valid canonical names.
    """
    kind = _ALIASES.get(name.strip().lower())
    if kind is None:
        valid = ", ".join(k.value for k in CertifierKind)
        raise ValueError(f"unknown certifier {name!r}: valid names are {valid}")
    return kind


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of one certifier evaluation.

    ``detected`` must equal ``value + confidence_k * sigma < 0`` and the
    number of phase-space points is fixed by the certifier kind (two for the
    pair condition, one for the single-point and negativity conditions, none
    for Mandel Q).
    """

    kind: CertifierKind
    value: float
    sigma: float
    detected: bool
    points: tuple = ()
    params: StateParams | None = None
    confidence_k: float = DETECTION_K

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not math.isfinite(self.value):
            raise ValueError(f"value must be finite, got {self.value}")
        expected = _POINT_COUNT[self.kind]
        if len(self.points) != expected:
            raise ValueError(
                f"{self.kind.value} reports {expected} phase-space point(s), "
                f"got {len(self.points)}"
            )
        if self.detected != (self.value + self.confidence_k * self.sigma < 0):
            raise ValueError("detected flag inconsistent with value + k * sigma < 0")


def make_report(
    kind: CertifierKind,
    value: float,
    sigma: float = 0.0,
    points: tuple = (),
    params: StateParams | None = None,
    confidence_k: float = DETECTION_K,
) -> CertificateReport:
    """Build a CertificateReport with the detection flag filled in."""
    return CertificateReport(
        kind=kind,
        value=float(value),
        sigma=float(sigma),
        detected=bool(value + confidence_k * sigma < 0),
        points=tuple(complex(p) for p in points),
        params=params,
        confidence_k=confidence_k,
    )


def _check_pair(a1: complex, a2: complex, alpha_max: float) -> None:
    if abs(a2 - a1) < MIN_SEPARATION:
        raise ValueError(f"phase-space points must be separated by at least {MIN_SEPARATION}")
    if abs(a1) > alpha_max + 1e-9 or abs(a2) > alpha_max + 1e-9:
        raise ValueError(f"|alpha| must not exceed alpha_max = {alpha_max}")


def two_point_value(wigner, a1: complex, a2: complex, alpha_max: float = ALPHA_MAX) -> float:
    """Two-point Wigner product condition at a pair of phase-space points.

    Args:
        wigner: Wigner evaluator callable, or a state accepted by
            ``phasespace.wigner_eval``.
        a1: First point, |a1| <= alpha_max, distinct from a2.
        a2: Second point.

    Returns:
        W(a1) W(a2) - exp(-|a2 - a1|^2) W((a1 + a2)/2)^2; a negative value
        certifies nonclassicality.
    """
    a1 = complex(a1)
    a2 = complex(a2)
    _check_pair(a1, a2, alpha_max)
    w = wigner if callable(wigner) else wigner_eval(wigner)
    mid = (a1 + a2) / 2
    return float(w(a1) * w(a2) - math.exp(-abs(a2 - a1) ** 2) * w(mid) ** 2)


def single_point_value(state, alpha: complex) -> float:
    """Single-point condition W(alpha) - 2 pi Q(alpha)^2.

    Negative values certify nonclassicality; classical states satisfy the
    bound with equality only for coherent states.
    """
    if isinstance(state, PhotonNumberDistribution):
        w = wigner_diag(state, alpha)
        q = husimi_diag(state, alpha)
    else:
        w = wigner_full(state, alpha)
        q = husimi_full(state, alpha)
    return float(w - 2 * math.pi * q**2)


@dataclass(frozen=True)
class TwoPointResult:
    """Optimized pair condition: the points, the value there, convergence flag."""

    points: tuple
    value: float
    converged: bool


def _pair_grid_best(wigner_line: np.ndarray, rs: np.ndarray) -> tuple[int, int, float]:
    """Best collinear pair on a uniform grid; midpoints land on the half-step grid."""
    n = rs.size
    w_half = wigner_line  # evaluated on the half-step grid, size 2n-1
    w = wigner_line[::2]
    idx = np.add.outer(np.arange(n), np.arange(n))
    sep = rs[None, :] - rs[:, None]
    vals = w[:, None] * w[None, :] - np.exp(-(sep**2)) * w_half[idx] ** 2
    np.fill_diagonal(vals, np.inf)
    flat = int(np.argmin(vals))
    i, j = divmod(flat, n)
    return i, j, float(vals[i, j])


def optimize_two_point(
    state,
    alpha_max: float = ALPHA_MAX,
    grid_radius: float = 4.0,
    grid_step: float = 0.1,
    refine_maxiter: int = 500,
) -> TwoPointResult:
    """Minimize the two-point condition over pairs with |alpha| <= alpha_max.

    A coarse collinear grid (both points on the real axis, step
    ``grid_step`` out to ``grid_radius``) seeds a Nelder-Mead refinement
    over (r1, r2, relative angle); for phase-invariant states that
    parametrization covers all pairs up to a global rotation.  If the
    refinement fails to converge the best grid pair is returned with
    ``converged=False``.
    """
    rs = np.arange(-grid_radius, grid_radius + grid_step / 2, grid_step)
    half = np.arange(-grid_radius, grid_radius + grid_step / 4, grid_step / 2)
    w_exact = wigner_eval(state)
    w_half = np.asarray(w_exact(half), dtype=float)
    i, j, _ = _pair_grid_best(w_half, rs)
    a1g, a2g = complex(rs[i]), complex(rs[j])
    grid_value = two_point_value(w_exact, a1g, a2g, alpha_max)

    if isinstance(state, PhotonNumberDistribution):
        # radial spline: cheap surrogate, exact evaluator reused at the end
        r_knots = np.linspace(0.0, alpha_max, 1601)
        spline = CubicSpline(r_knots, wigner_diag(state, r_knots))
        w_refine = lambda a: float(spline(abs(a)))
    else:
        w_refine = w_exact

    def objective(t: np.ndarray) -> float:
        r1, r2, phi = t
        a1 = complex(r1)
        a2 = r2 * complex(math.cos(phi), math.sin(phi))
        sep = abs(a2 - a1)
        excess = max(abs(r1), abs(r2)) - alpha_max
        if excess > 0:
            return _PENALTY * (1 + excess)
        if sep < MIN_SEPARATION:
            return _PENALTY
        mid = (a1 + a2) / 2
        return w_refine(a1) * w_refine(a2) - math.exp(-(sep**2)) * w_refine(mid) ** 2

    x0 = np.array([rs[i], rs[j], 0.0])
    simplex = np.array(
        [x0, x0 + [0.08, 0, 0], x0 + [0, 0.08, 0], x0 + [0, 0, 0.35]]
    )
    res = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": refine_maxiter,
            "xatol": 1e-7,
            "fatol": 1e-15,
            "initial_simplex": simplex,
        },
    )

    converged = bool(res.success)
    a1, a2, value = a1g, a2g, grid_value
    if converged:
        r1, r2, phi = res.x
        c1 = complex(r1)
        c2 = r2 * complex(math.cos(phi), math.sin(phi))
        if abs(c2 - c1) >= MIN_SEPARATION and max(abs(c1), abs(c2)) <= alpha_max:
            refined_value = two_point_value(w_exact, c1, c2, alpha_max)
            if refined_value < value:
                a1, a2, value = c1, c2, refined_value
    return TwoPointResult(points=(a1, a2), value=value, converged=converged)


def optimal_single_point(
    state, step: float = 0.1, alpha_max: float = ALPHA_MAX
) -> tuple[complex, float]:
    """Grid minimizer of the single-point condition.

    Phase-invariant states are scanned along a radial grid, general matrices
    over the full 2-d grid; ties resolve to the first grid point in
    row-major order.

    Returns:
        (alpha, value) at the grid minimum.
    """
    if isinstance(state, PhotonNumberDistribution):
        rr = np.arange(0.0, alpha_max + step / 2, step)
        w = wigner_diag(state, rr)
        q = husimi_diag(state, rr)
        vals = w - 2 * math.pi * q**2
        k = int(np.argmin(vals))
        return complex(rr[k]), float(vals[k])
    axis = np.arange(-alpha_max, alpha_max + step / 2, step)
    re, im = np.meshgrid(axis, axis, indexing="ij")
    pts = (re + 1j * im).ravel()
    keep = np.abs(pts) <= alpha_max + 1e-12
    pts = pts[keep]
    vals = wigner_full(state, pts) - 2 * math.pi * husimi_full(state, pts) ** 2
    k = int(np.argmin(vals))
    return complex(pts[k]), float(vals[k])


def _golden_min(f, lo: float, hi: float, tol: float = 1e-9) -> tuple[float, float]:
    """Golden-section minimum of a unimodal scalar function on [lo, hi]."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = c if fc < fd else d
    return x, min(fc, fd)


def wigner_min(
    dist: PhotonNumberDistribution, step: float = 0.05, alpha_max: float = ALPHA_MAX
) -> tuple[complex, float]:
    """Minimum of the Wigner function of a phase-invariant state.

    A radial grid locates the basin and golden-section refinement polishes
    the radius.

    Returns:
        (alpha, value) at the minimum; value < 0 certifies nonclassicality.
    """
    rr = np.arange(0.0, alpha_max + step / 2, step)
    w = wigner_diag(dist, rr)
    k = int(np.argmin(w))
    lo = max(rr[k] - step, 0.0)
    hi = min(rr[k] + step, alpha_max)
    r_opt, val = _golden_min(lambda r: wigner_diag(dist, r), lo, hi)
    if w[k] < val:
        r_opt, val = float(rr[k]), float(w[k])
    return complex(r_opt), float(val)


def certifier_value(kind: CertifierKind, state) -> tuple[float, tuple]:
    """Evaluate one certifier on a state, returning (value, phase-space points).

    Matrix states are reduced to their diagonal for the two phase-insensitive
    baselines (Wigner negativity on the radial profile and Mandel Q).
    """
    if kind is CertifierKind.MULTI_POINT_WIGNER:
        res = optimize_two_point(state)
        return res.value, res.points
    if kind is CertifierKind.WIGNER_VS_Q:
        alpha, value = optimal_single_point(state)
        return value, (alpha,)
    dist = state if isinstance(state, PhotonNumberDistribution) else diagonal_dist(state)
    if kind is CertifierKind.WIGNER_NEGATIVITY:
        alpha, value = wigner_min(dist)
        return value, (alpha,)
    if kind is CertifierKind.MANDEL_Q:
        return mandel_q(dist), ()
    raise ValueError(f"unknown certifier kind {kind!r}")


@dataclass(frozen=True)
class ThresholdResult:
    """Critical efficiency of a certifier at fixed nbar.

    ``eta`` is the smallest transmission at which the certifier value turns
    negative (None when the certifier detects everywhere or nowhere on the
    bracket); ``scan`` records the post-hoc monotonicity scan and
    ``monotone`` whether it shows a single sign change.
    """

    kind: CertifierKind
    nbar: float
    eta: float | None
    status: str  # "threshold", "detects-everywhere" or "detects-nowhere"
    monotone: bool
    scan: tuple = field(default=())


def critical_eta(
    kind: CertifierKind,
    nbar: float,
    tol: float = 1e-3,
    eta_lo: float = 1e-4,
    eta_hi: float = 1.0,
    scan_points: int = 20,
    cutoff_hint: int | None = None,
) -> ThresholdResult:
    """Bisect for the smallest loss-channel transmission a certifier detects.

    The certifier value is evaluated on the lossy added-photon family state
    at fixed ``nbar``.  Bisection assumes a single sign change on
    [eta_lo, eta_hi]; the assumption is checked afterwards on a
    ``scan_points``-point scan and reported via ``monotone``.
    """

    def value_at(eta: float) -> float:
        dist = lossy_spats_dist(StateParams(nbar, eta), cutoff_hint)
        return certifier_value(kind, dist)[0]

    etas = np.linspace(eta_lo, eta_hi, scan_points)
    scan = tuple((float(e), value_at(float(e))) for e in etas)
    flags = [v < 0 for _, v in scan]
    monotone = all(a <= b for a, b in zip(flags, flags[1:]))

    v_lo, v_hi = scan[0][1], scan[-1][1]
    if v_hi >= 0:
        return ThresholdResult(kind, nbar, None, "detects-nowhere", monotone, scan)
    if v_lo < 0:
        return ThresholdResult(kind, nbar, None, "detects-everywhere", monotone, scan)
    lo, hi = eta_lo, eta_hi
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if value_at(mid) < 0:
            hi = mid
        else:
            lo = mid
    return ThresholdResult(kind, nbar, float(hi), "threshold", monotone, scan)


LABEL_BASELINE = "detected-by-baselines"
LABEL_PHASE_SPACE = "detected-only-by-phase-space-inequality"
LABEL_NONE = "undetected"
LABEL_TOL = 1e-10  # classical optimizer noise floor; keeps eta = 0 rows clean


@dataclass(frozen=True)
class ScanRow:
    """One parameter-space point with all four certifier values and its label."""

    nbar: float
    eta: float
    eq1: float
    eq2: float
    wmin: float
    mandel: float
    label: str


def region_scan(
    nbar_values, eta_values, cutoff_hint: int | None = None
) -> list[ScanRow]:
    """Evaluate all four certifiers over a parameter grid.

    Each grid point is labeled ``detected-by-baselines`` when Wigner
    negativity or Mandel Q already flags it, ``detected-only-by-
    phase-space-inequality`` when only the pair or single-point condition
    does, and ``undetected`` otherwise.  Values within LABEL_TOL of zero
    count as non-detections so that classical states (eta = 0 reduces every
    grid point to vacuum) are never labeled from rounding noise.  Mandel Q
    is reported as NaN for the zero-mean state at eta = 0.
    """
    rows = []
    for nbar in nbar_values:
        for eta in eta_values:
            dist = lossy_spats_dist(StateParams(float(nbar), float(eta)), cutoff_hint)
            eq1 = optimize_two_point(dist).value
            eq2 = optimal_single_point(dist, step=0.05)[1]
            wmin_val = wigner_min(dist)[1]
            try:
                mandel = mandel_q(dist)
            except ValueError:
                mandel = math.nan
            if wmin_val < -LABEL_TOL or mandel < -LABEL_TOL:
                label = LABEL_BASELINE
            elif eq1 < -LABEL_TOL or eq2 < -LABEL_TOL:
                label = LABEL_PHASE_SPACE
            else:
                label = LABEL_NONE
            rows.append(
                ScanRow(float(nbar), float(eta), eq1, eq2, wmin_val, mandel, label)
            )
    return rows


SCAN_CSV_HEADER = "nbar,eta,eq1,eq2,wmin,mandel,label"


def write_scan_csv(rows, path) -> None:
    """Write scan rows as CSV with full float precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SCAN_CSV_HEADER + "\n")
        for r in rows:
            fields = [r.nbar, r.eta, r.eq1, r.eq2, r.wmin, r.mandel]
            fh.write(",".join(repr(float(v)) for v in fields) + f",{r.label}\n")
