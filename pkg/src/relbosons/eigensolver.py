"""Ground-state solver for -u'' + W(q) u = lam u on (0, inf).

Two independent routes are provided and cross-checked against each
other: Numerov shooting with a power-series start at the origin, and a
dense finite-difference matrix whose lowest eigenvalue is extracted by
Sturm-sequence bisection (with Richardson extrapolation over h and h/2).

Only gamma = lam / 2 crosses module boundaries.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .numkernel import BracketError, TridiagProblem, tridiag_ground, tridiag_ground_vector
from .potentials import (INFINITY, OriginBehavior, PotentialSpec, effective_potential,
                         origin_behavior, regular_expansion, spec_spin0, spec_spin1)

GOLDEN_GAMMA = 1.0 + math.sqrt(5.0) / 2.0          # massless limit, both spins
ALPHA_GOLDEN = 0.5 * (1.0 + math.sqrt(5.0))        # origin exponent at d = inf

# shooting starts its outward Numerov sweep no closer to the origin than
# this; below it the series expansion of u is used directly
_SERIES_EDGE = 0.05
# discrete residuals of origin-singular eigenfunctions are reported away
# from the coordinate singularity, where u'''' is bounded
_RESIDUAL_EDGE = 0.2


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid for the canonical radial problem.

    ``q_min`` is the series-start point of the shooting method; the
    finite-difference matrix always places its Dirichlet wall at q = 0
    (the regular solution obeys u(0) = 0 for every channel here, and a
    wall at q_min > 0 would bias the u ~ q channels by O(q_min)).
    ``q_max`` must sit far inside the Gaussian-decay region.
    """

    q_min: float = 1e-4
    q_max: float = 12.0
    n: int = 8000

    def __post_init__(self):
        if not (0.0 < self.q_min < self.q_max):
            raise ValueError("need 0 < q_min < q_max")
        if self.n < 100:
            raise ValueError("n must be at least 100")

    @property
    def q(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n)

    @property
    def step(self) -> float:
        return (self.q_max - self.q_min) / (self.n - 1)


@dataclass
class EigenResult:
    gamma: float
    lam: float
    q_samples: np.ndarray
    u_samples: np.ndarray
    residual: float
    method: str
    spec: PotentialSpec
    meta: dict = field(default_factory=dict)


def _fd_problem(spec: PotentialSpec, q_max: float, n: int) -> tuple:
    """Three-point discretization with Dirichlet walls at 0 and q_max."""
    q = np.linspace(0.0, q_max, n)
    h = q[1] - q[0]
    qi = q[1:-1]
    diag = 2.0 / h**2 + effective_potential(qi, spec)
    off = np.full(len(qi) - 1, -1.0 / h**2)
    return TridiagProblem(diag, off, h), qi


def solve_ground_fd(spec: PotentialSpec, grid: RadialGrid = RadialGrid()) -> EigenResult:
    """Lowest eigenvalue via the finite-difference matrix.

    ``gamma`` is the Richardson extrapolation of the h and h/2 matrices;
    both raw values are kept in ``meta``.  The eigenvector (computed at
    the base resolution) is normalized to sum(u^2) h = 1.
    """
    prob, qi = _fd_problem(spec, grid.q_max, grid.n)
    lam_h = float(tridiag_ground(prob, 1)[0])
    prob2, _ = _fd_problem(spec, grid.q_max, 2 * (grid.n - 1) + 1)
    lam_h2 = float(tridiag_ground(prob2, 1)[0])
    lam = (4.0 * lam_h2 - lam_h) / 3.0

    u = tridiag_ground_vector(prob, lam_h)
    resid = _matrix_residual(prob, lam_h, u)
    meta = {"lambda_h": lam_h, "lambda_h_half": lam_h2,
            "richardson": lam, "h": prob.grid_step}
    return EigenResult(lam / 2.0, lam, qi, u, resid, "fd_matrix", spec, meta)


def _matrix_residual(prob: TridiagProblem, lam: float, u: np.ndarray) -> float:
    au = prob.diagonal * u
    au[:-1] += prob.off_diagonal * u[1:]
    au[1:] += prob.off_diagonal * u[:-1]
    return float(np.max(np.abs(au - lam * u)) / np.max(np.abs(u)))


def _series_start(spec: PotentialSpec, q: np.ndarray, lam: float) -> np.ndarray:
    """Regular solution u = q^alpha (1 + b2 q^2 + b4 q^4) near the origin."""
    ob = origin_behavior(spec)
    w0, w2 = regular_expansion(spec)
    a = ob.exponent_alpha
    b2 = (w0 - lam) / (4.0 * a + 2.0)
    b4 = ((w0 - lam) * b2 + w2) / (8.0 * a + 12.0)
    return q**a * (1.0 + b2 * q * q + b4 * q**4)


def _numerov_mismatch(spec: PotentialSpec, grid: RadialGrid, lam: float,
                      W: np.ndarray, i0: int, im: int):
    """Cross mismatch uL[im] uR[im+1] - uL[im+1] uR[im] of the two sweeps.

    Zero exactly when one Numerov solution satisfies both boundary
    conditions, i.e. at the discretized eigenvalues.
    """
    q = grid.q
    n = grid.n
    h = grid.step
    f = h * h / 12.0
    T = W - lam

    uL = np.empty(im + 2)
    uL[: i0 + 2] = _series_start(spec, q[: i0 + 2], lam)
    for i in range(i0 + 1, im + 1):
        uL[i + 1] = (2.0 * (1.0 + 5.0 * f * T[i]) * uL[i]
                     - (1.0 - f * T[i - 1]) * uL[i - 1]) / (1.0 - f * T[i + 1])

    nu = 0.5 * (lam - 1.0)
    uR = np.empty(n)
    uR[-1] = q[-1] ** nu * math.exp(-0.5 * q[-1] ** 2)
    uR[-2] = q[-2] ** nu * math.exp(-0.5 * q[-2] ** 2)
    for i in range(n - 2, im - 1, -1):
        uR[i - 1] = (2.0 * (1.0 + 5.0 * f * T[i]) * uR[i]
                     - (1.0 - f * T[i + 1]) * uR[i + 1]) / (1.0 - f * T[i - 1])

    return uL[im] * uR[im + 1] - uL[im + 1] * uR[im], uL, uR


def solve_ground_shooting(spec: PotentialSpec, grid: RadialGrid = RadialGrid(),
                          tol: float = 1e-10) -> EigenResult:
    """Ground state by bidirectional Numerov shooting.

    The outward sweep starts from the origin power series, the inward
    sweep from the Gaussian envelope q^((lam-1)/2) exp(-q^2/2); lam is
    bisected on the sign change of the matching mismatch until the
    bracket is narrower than ``tol``.  The initial bracket comes from a
    coarse finite-difference estimate +- 0.5.

    Raises
    ------
    BracketError
        If the bracket fails to straddle a sign change.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = grid.q
    W = effective_potential(q, spec)
    i0 = max(1, int(np.searchsorted(q, max(grid.q_min, _SERIES_EDGE))))
    im = int(np.argmin(W))
    if q[im] < 0.5 or q[im] > 0.5 * grid.q_max:
        im = int(np.searchsorted(q, 1.0))
    im = min(max(im, i0 + 2), grid.n - 3)

    coarse = _fd_problem(spec, grid.q_max, 1600)[0]
    lam_est = float(tridiag_ground(coarse, 1)[0])
    if W[-1] < lam_est + 20.0:
        raise ValueError(
            f"q_max = {grid.q_max} too small: W(q_max) = {W[-1]:.3f} must "
            f"exceed the eigenvalue estimate {lam_est:.3f} by 20 so the "
            "inward sweep starts in the Gaussian-decay region")
    lo, hi = lam_est - 0.5, lam_est + 0.5

    g_lo, _, _ = _numerov_mismatch(spec, grid, lo, W, i0, im)
    g_hi, _, _ = _numerov_mismatch(spec, grid, hi, W, i0, im)
    if g_lo == 0.0:
        lo, hi = lo, lo
    elif g_hi == 0.0:
        lo, hi = hi, hi
    elif g_lo * g_hi > 0.0:
        raise BracketError(
            f"mismatch does not change sign on [{lo:.6f}, {hi:.6f}] "
            f"for {spec} (values {g_lo:.3e}, {g_hi:.3e})")
    iters = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid, _, _ = _numerov_mismatch(spec, grid, mid, W, i0, im)
        if g_lo * g_mid <= 0.0:
            hi = mid
        else:
            lo, g_lo = mid, g_mid
        iters += 1
        if iters > 200:
            break
    lam = 0.5 * (lo + hi)

    _, uL, uR = _numerov_mismatch(spec, grid, lam, W, i0, im)
    u = np.empty(grid.n)
    u[: im + 1] = uL[: im + 1]
    u[im:] = uR[im:] * (uL[im] / uR[im])
    u /= math.sqrt(np.sum(u * u) * grid.step)
    if u[np.argmax(np.abs(u))] < 0:
        u = -u

    resid = _discrete_residual(q, u, W, lam, origin_behavior(spec))
    meta = {"bracket": (lo, hi), "bisections": iters, "q_match": q[im],
            "fd_estimate": lam_est, "series_start": q[i0]}
    return EigenResult(lam / 2.0, lam, q, u, resid, "shooting", spec, meta)


def _discrete_residual(q, u, W, lam, ob: OriginBehavior) -> float:
    """Max |(-D^2 + W - lam) u| / (lam max|u|) over admissible interior points.

    For origin-singular channels (c > 0) the first points are excluded:
    u ~ q^alpha with fractional alpha has unbounded u'''' there and the
    three-point defect is dominated by that, not by solution quality.
    """
    h = q[1] - q[0]
    d2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    res = -d2 + (W[1:-1] - lam) * u[1:-1]
    qi = q[1:-1]
    mask = qi >= (_RESIDUAL_EDGE if ob.singular_strength > 0 else q[0])
    return float(np.max(np.abs(res[mask])) / (abs(lam) * np.max(np.abs(u))))


@dataclass
class GammaPoint:
    d: float
    gamma: float = math.nan
    residual: float = math.nan
    method: str = "shooting"
    gamma_fd: float = math.nan
    gamma_shooting: float = math.nan
    ok: bool = True
    message: str = ""


@dataclass
class GammaCurve:
    spec_template: PotentialSpec
    points: list

    @property
    def all_ok(self) -> bool:
        return all(p.ok for p in self.points)


def gamma_curve(spec_template: PotentialSpec, d_values: Sequence[float],
                grid: RadialGrid = RadialGrid(), workers: int = 1) -> GammaCurve:
    """gamma(d) for a family of potentials, shooting with FD cross-check.

    Each point records gamma from shooting, the Richardson FD value, and
    their difference as the per-point residual.  Failures are recorded
    per point and the sweep continues; results are ordered by d.
    """
    ds = list(d_values)
    if any((not math.isinf(d)) and d < 0 for d in ds):
        raise ValueError("d values must be nonnegative")

    def solve_one(d):
        spec = PotentialSpec(spec_template.spin, spec_template.channel, d,
                             spec_template.angular_index)
        point = GammaPoint(d=d)
        try:
            fd = solve_ground_fd(spec, grid)
            sh = solve_ground_shooting(spec, grid)
            point.gamma = sh.gamma
            point.gamma_fd = fd.gamma
            point.gamma_shooting = sh.gamma
            point.residual = abs(sh.gamma - fd.gamma)
        except Exception as exc:  # recorded, sweep continues
            point.ok = False
            point.message = str(exc)
        return point

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(solve_one, ds))
    else:
        points = [solve_one(d) for d in ds]
    points.sort(key=lambda p: (math.inf if math.isinf(p.d) else p.d))
    return GammaCurve(spec_template, points)


# ----------------------------------------------------------------------
# closed-form limiting eigenfunctions
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticCase:
    label: str
    spec: PotentialSpec
    gamma: float
    u: Callable  # canonical u(q) = q * f(q), unnormalized
    q_min: float  # residual grid start (offset for singular exponents)
    tol: float


def analytic_cases() -> list:
    """The four closed-form ground states of the limiting potentials."""
    phi = ALPHA_GOLDEN
    return [
        AnalyticCase("spin0 d=0", spec_spin0(0.0), 1.5,
                     lambda q: q * np.exp(-q * q / 2.0), 1e-4, 1e-6),
        AnalyticCase("spin0 d=inf", spec_spin0(INFINITY), GOLDEN_GAMMA,
                     lambda q: q**phi * np.exp(-q * q / 2.0), _RESIDUAL_EDGE, 1e-5),
        AnalyticCase("spin1 d=0", spec_spin1(0.0), 2.5,
                     lambda q: q * q * np.exp(-q * q / 2.0), 1e-4, 1e-6),
        AnalyticCase("spin1 d=inf", spec_spin1(INFINITY), GOLDEN_GAMMA,
                     lambda q: q**phi * np.exp(-q * q / 2.0), _RESIDUAL_EDGE, 1e-5),
    ]


@dataclass
class AnalyticCheck:
    label: str
    residual: float
    tol: float
    passed: bool
    n: int


def verify_analytic_limits(n: int = 8000, q_max: float = 12.0) -> list:
    """Apply the discrete operator to each closed-form eigenfunction.

    Reports max |(-D^2 + W - lam) u| / (lam max|u|) on a uniform grid of
    ``n`` points; the d = inf cases start at an origin offset because
    their fractional power makes u'''' blow up at q = 0.  Residuals
    decrease as h^2 under grid refinement.
    """
    checks = []
    for case in analytic_cases():
        q = np.linspace(case.q_min, q_max, n)
        u = case.u(q)
        W = effective_potential(q, case.spec)
        lam = 2.0 * case.gamma
        h = q[1] - q[0]
        d2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
        res = np.max(np.abs(-d2 + (W[1:-1] - lam) * u[1:-1]))
        res = float(res / (lam * np.max(np.abs(u))))
        checks.append(AnalyticCheck(case.label, res, case.tol, res <= case.tol, n))
    return checks


def expectation_q2(result: EigenResult) -> float:
    """<q^2> of a normalized ground state (the q^2 f^2 measure)."""
    u, q = result.u_samples, result.q_samples
    return float(np.sum(q * q * u * u) / np.sum(u * u))
