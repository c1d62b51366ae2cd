"""Shared numeric primitives.

Three building blocks used throughout the package:

* adaptive quadrature for exponentially damped (optionally oscillatory)
  integrands on the half line,
* extraction of the lowest eigenvalues of symmetric tridiagonal matrices
  by Sturm-sequence bisection,
* projected gradient descent with a backtracking line search for
  normalized discrete functionals.

Everything here is a pure function of its inputs and safe to call from
concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; carries the best estimate so far."""

    def __init__(self, message, value, error):
        super().__init__(message)
        self.value = value
        self.error = error


class BracketError(RuntimeError):
    """An eigenvalue bracket failed to straddle a sign change."""


class MinimizationError(RuntimeError):
    """Descent stagnated before the gradient tolerance was reached."""

    def __init__(self, message, state, grad_norm):
        super().__init__(message)
        self.state = state
        self.grad_norm = grad_norm


# ----------------------------------------------------------------------
# adaptive quadrature on [0, inf) with a damped envelope
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and panelling controls for :func:`integrate_damped`.

    ``oscillation_wavelength`` caps the initial panel width at half a
    wavelength so that sin(p r)-type kernels never alias across a panel.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_panels: int = 20000
    oscillation_wavelength: Optional[float] = None

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_panels < 1:
            raise ValueError("max_panels must be >= 1")
        if self.oscillation_wavelength is not None and self.oscillation_wavelength <= 0:
            raise ValueError("oscillation_wavelength must be positive")


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float
    n_eval: int
    p_max: float

    def __iter__(self):
        yield self.value
        yield self.error


def _envelope_peak(kernel, damping_rate, probe_span):
    """Estimate max of |kernel(p)| * exp(damping*p) on a coarse probe grid."""
    p = np.linspace(0.0, probe_span, 257)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.abs(np.asarray(kernel(p), dtype=complex)) * np.exp(damping_rate * p)
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0
    return float(np.max(vals))


def integrate_damped(kernel: Callable, damping_rate: float,
                     spec: QuadratureSpec = QuadratureSpec()) -> QuadratureResult:
    """Integrate ``kernel`` over [0, inf).

    The kernel must already contain its damping factor; ``damping_rate``
    only controls where the integral is truncated: the envelope bound
    exp(-damping_rate * p) guarantees the tail beyond
    ``p_max = log(peak/abs_tol)/damping_rate`` is below ``abs_tol``.
    ``kernel`` must accept numpy arrays and may return complex values.

    Returns a :class:`QuadratureResult`; its reported error is at most
    ``max(abs_tol, rel_tol * |value|)`` on success.

    Raises
    ------
    QuadratureError
        If the panel budget is exhausted first.  The exception carries
        the best estimate and its error bound.
    """
    if damping_rate <= 0:
        raise ValueError("damping_rate must be positive")
    peak = _envelope_peak(kernel, damping_rate, 60.0 / damping_rate)
    if peak == 0.0:
        return QuadratureResult(0.0, 0.0, 257, 0.0)
    p_max = math.log(peak / spec.abs_tol) / damping_rate if peak > spec.abs_tol else 1.0 / damping_rate
    width = p_max / 8.0
    if spec.oscillation_wavelength is not None:
        width = min(width, 0.5 * spec.oscillation_wavelength)
    width = min(width, 2.0 / damping_rate)
    p_max += width  # one panel of margin beyond the envelope cutoff
    tail_bound = peak * math.exp(-damping_rate * p_max) / damping_rate

    n0 = max(4, int(math.ceil(p_max / width)))
    edges_a = np.linspace(0.0, p_max, n0 + 1)[:-1]
    edges_b = np.linspace(0.0, p_max, n0 + 1)[1:]

    n_eval = 257
    total = 0.0 + 0.0j
    err_accepted = 0.0

    def _simpson_pair(a, b):
        """Coarse Simpson and its two-half refinement on each panel."""
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        pts = np.concatenate([a, lm, m, rm, b])
        vals = np.asarray(kernel(pts), dtype=complex).reshape(5, -1)
        fa, flm, fm, frm, fb = vals
        h = b - a
        coarse = h / 6.0 * (fa + 4.0 * fm + fb)
        fine = h / 12.0 * (fa + 4.0 * flm + 2.0 * fm + 4.0 * frm + fb)
        return coarse, fine, len(pts)

    for _ in range(64):
        coarse, fine, used = _simpson_pair(edges_a, edges_b)
        n_eval += used
        # |fine - coarse| is ~15x the asymptotic error of the fine sum;
        # budgeting on it keeps the reported error safely conservative
        # even on panels where the Richardson assumption fails
        panel_err = np.abs(fine - coarse)
        budget = (spec.abs_tol + spec.rel_tol * abs(total + fine.sum())) \
            * (edges_b - edges_a) / p_max
        ok = panel_err <= budget
        total += fine[ok].sum()
        err_accepted += panel_err[ok].sum()
        if np.all(ok):
            err = err_accepted + tail_bound
            return QuadratureResult(_as_scalar(total), float(err), n_eval, p_max)
        edges_a, edges_b = edges_a[~ok], edges_b[~ok]
        # split every rejected panel in two
        mid = 0.5 * (edges_a + edges_b)
        edges_a = np.concatenate([edges_a, mid])
        edges_b = np.concatenate([mid, edges_b])
        if len(edges_a) > spec.max_panels:
            best = total + fine[~ok].sum()
            err = err_accepted + panel_err[~ok].sum() + tail_bound
            raise QuadratureError(
                f"no convergence within {spec.max_panels} panels "
                f"(best estimate {best:.6e}, error bound {err:.2e})",
                _as_scalar(best), float(err))
    raise QuadratureError("refinement depth exhausted", _as_scalar(total),
                          float(err_accepted + tail_bound))


def _as_scalar(z):
    z = complex(z)
    return z.real if z.imag == 0.0 else z


# ----------------------------------------------------------------------
# symmetric tridiagonal ground eigenvalues
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TridiagProblem:
    """Symmetric tridiagonal matrix with its originating grid step."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray
    grid_step: float

    def __post_init__(self):
        d = np.asarray(self.diagonal, dtype=float)
        e = np.asarray(self.off_diagonal, dtype=float)
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "off_diagonal", e)
        if len(e) != len(d) - 1:
            raise ValueError("off_diagonal must be one shorter than diagonal")
        if self.grid_step <= 0:
            raise ValueError("grid_step must be positive")


def sturm_count(problem: TridiagProblem, shift: float) -> int:
    """Number of eigenvalues strictly below ``shift`` (Sturm sequence).

    Reference implementation of the negative-pivot count of the shifted
    LDL^T recurrence; used to cross-check the LAPACK bisection backend.
    """
    d = problem.diagonal
    e2 = problem.off_diagonal ** 2
    count = 0
    t = d[0] - shift
    if t < 0:
        count += 1
    tiny = np.finfo(float).tiny
    for i in range(1, len(d)):
        if t == 0.0:
            t = tiny
        t = (d[i] - shift) - e2[i - 1] / t
        if t < 0:
            count += 1
    return count


def tridiag_ground(problem: TridiagProblem, count: int = 1) -> np.ndarray:
    """Lowest ``count`` eigenvalues, ascending.

    Backed by LAPACK's ?stebz, which brackets each eigenvalue by
    Sturm-sequence bisection; the requested interval width is
    1e-12 * max(1, |eigenvalue scale|).
    """
    n = len(problem.diagonal)
    if count < 1 or count > n:
        raise ValueError("count must be in [1, matrix dimension]")
    # tol = 0 lets LAPACK bisect each bracket down to ulp width, well
    # inside the contractual 1e-12 * eigenvalue scale
    vals = eigh_tridiagonal(
        problem.diagonal, problem.off_diagonal, eigvals_only=True,
        select="i", select_range=(0, count - 1),
        lapack_driver="stebz", tol=0.0)
    return np.sort(vals)


def tridiag_ground_vector(problem: TridiagProblem, eigenvalue: float,
                          sweeps: int = 3) -> np.ndarray:
    """Eigenvector for an isolated eigenvalue by inverse iteration.

    Returned vector is normalized to sum(u^2) * grid_step = 1 and made
    nonnegative at its largest component (ground states are nodeless).
    """
    n = len(problem.diagonal)
    ab = np.zeros((3, n))
    # small shift off the eigenvalue keeps the factorization regular
    shift = eigenvalue * (1.0 + 1e-13) + 1e-13
    ab[0, 1:] = problem.off_diagonal
    ab[1] = problem.diagonal - shift
    ab[2, :-1] = problem.off_diagonal
    rng = np.random.default_rng(12345)
    u = rng.standard_normal(n)
    for _ in range(sweeps):
        u = solve_banded((1, 1), ab, u)
        u /= np.linalg.norm(u)
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    u /= math.sqrt(np.sum(u * u) * problem.grid_step)
    return u


# ----------------------------------------------------------------------
# projected descent for normalized functionals
# ----------------------------------------------------------------------

@dataclass
class StepControl:
    init_step: float = 1.0
    grad_tol: float = 1e-6
    max_iter: int = 2000
    min_step: float = 1e-15
    grow: float = 2.0
    max_step: float = 8.0
    fd_probe: bool = True


@dataclass
class MinimizeResult:
    state: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    history: list = field(default_factory=list, repr=False)


def minimize_functional(energy: Callable, gradient: Callable, init: np.ndarray,
                        control: StepControl = None,
                        inner: Callable = None,
                        precondition: Callable = None) -> MinimizeResult:
    """Minimize a normalized functional by projected gradient descent.

    ``energy(u)`` maps a state to a float; ``gradient(u)`` must return the
    metric gradient, i.e. d energy = inner(gradient(u), du).  The iterate
    is kept on the unit sphere of ``inner`` at every step, the functional
    value decreases monotonically (backtracking halving line search), and
    iteration stops once the projected gradient norm drops below
    ``control.grad_tol``.

    ``precondition``, when given, must be symmetric positive definite in
    ``inner``; the preconditioned gradient is then still a descent
    direction, so the monotone-decrease contract is unchanged.

    Raises
    ------
    MinimizationError
        On stagnation (line search underflow or iteration budget) before
        the gradient tolerance is met; carries the last state.
    """
    control = control or StepControl()
    if inner is None:
        inner = lambda a, b: float(np.vdot(a, b).real)

    def _normalize(u):
        return u / math.sqrt(inner(u, u))

    u = _normalize(np.asarray(init, dtype=float))

    if control.fd_probe:
        _probe_gradient(energy, gradient, u, inner)

    e = energy(u)
    step = control.init_step
    history = []
    g_norm = math.inf
    for it in range(control.max_iter):
        g = gradient(u)
        g = g - inner(g, u) * u
        g_norm = math.sqrt(inner(g, g))
        history.append((e, g_norm))
        if g_norm <= control.grad_tol:
            return MinimizeResult(u, e, g_norm, it, history)
        d = precondition(g) if precondition is not None else g
        d = d - inner(d, u) * u
        slope = inner(g, d)  # > 0 for an SPD preconditioner
        ls = step
        while ls >= control.min_step:
            candidate = _normalize(u - ls * d)
            e_new = energy(candidate)
            # sufficient decrease; the stiff constant rejects the
            # sign-flipping steps near ls = 2/curvature that stall
            # plain backtracking on quadratics
            if e_new <= e - 0.2 * ls * slope:
                break
            ls *= 0.5
        else:
            raise MinimizationError(
                f"line search stagnated at iteration {it} "
                f"(gradient norm {g_norm:.3e} > tol {control.grad_tol:.1e})",
                u, g_norm)
        u, e = candidate, e_new
        step = min(ls * control.grow, control.max_step)
    raise MinimizationError(
        f"no convergence in {control.max_iter} iterations "
        f"(gradient norm {g_norm:.3e} > tol {control.grad_tol:.1e})",
        u, g_norm)


def _probe_gradient(energy, gradient, u, inner, rel_tol=1e-3):
    """Finite-difference consistency check of gradient against energy."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(np.shape(u))
    v = v / math.sqrt(inner(v, v))
    eps = 1e-6
    fd = (energy(u + eps * v) - energy(u - eps * v)) / (2.0 * eps)
    an = inner(gradient(u), v)
    scale = max(abs(fd), abs(an), 1e-12)
    if abs(fd - an) > rel_tol * scale + 1e-12:
        raise ValueError(
            f"gradient inconsistent with energy: directional derivative "
            f"{an:.6e} vs finite difference {fd:.6e}")
