"""Klein-Gordon wavepacket densities in position space.

The packet is the positive-frequency radial solution

    phi(r, t) = (1/r) int_0^inf dp p sin(p r) f(p) exp(-(a + i t) E_p),

with E_p = sqrt(m^2 + p^2).  The module evaluates phi and its time and
radial derivatives, forms the charge density rho = -Im(phi* dphi/dt)
(not positive definite: the central point of the whole exercise) and the
positive energy density eps = |dphi/dt|^2 + |dphi/dr|^2 + m^2 |phi|^2,
scans them on radial grids, detects negative-charge shells, and provides
the position-space dispersion that cross-checks the momentum-space
formulas in :mod:`relbosons.variational`.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .numkernel import QuadratureSpec, integrate_damped

# strict-sign dead band for shell detection; suppresses spurious shells
# at quadrature-roundoff scale
RHO_DEADBAND = 1e-12


class TailWarning(UserWarning):
    """A radial integral's outer grid region is not yet negligible."""


# ----------------------------------------------------------------------
# spectral profiles f(p)
# ----------------------------------------------------------------------

class CosineProfile:
    """f(p) = cos(p/m) / sqrt(m^2 + p^2), the packet behind the density map."""

    name = "cosine"

    def __init__(self, mass: float = 1.0):
        self.mass = mass

    def __call__(self, p):
        return np.cos(p / self.mass) / np.sqrt(self.mass**2 + p**2)


class GaussianProfile:
    """f(p) = exp(-p^2 / (2 sigma^2))."""

    name = "gaussian"

    def __init__(self, sigma: float = 1.0):
        self.sigma = sigma

    def __call__(self, p):
        return np.exp(-np.asarray(p) ** 2 / (2.0 * self.sigma**2))


class TabulatedProfile:
    """Cubic interpolation of (p, f) samples, zero beyond the last node."""

    name = "tabulated"

    def __init__(self, p_nodes, f_nodes):
        p_nodes = np.asarray(p_nodes, dtype=float)
        f_nodes = np.asarray(f_nodes, dtype=float)
        if p_nodes.ndim != 1 or np.any(np.diff(p_nodes) <= 0):
            raise ValueError("p_nodes must be strictly increasing")
        self._spline = CubicSpline(p_nodes, f_nodes, extrapolate=False)
        self._p_hi = p_nodes[-1]

    def __call__(self, p):
        out = self._spline(np.asarray(p, dtype=float))
        return np.nan_to_num(out, nan=0.0)


@dataclass(frozen=True)
class WavepacketParams:
    """Mass, damping a, time t and the spectral profile f(p)."""

    mass: float
    damping_a: float
    time_t: float
    profile: Callable

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.damping_a <= 0:
            raise ValueError("damping_a must be positive (integral convergence)")
        probe = np.asarray(self.profile(np.array([0.0, 0.7, 2.3])))
        if np.iscomplexobj(probe) and np.any(np.abs(probe.imag) > 0):
            raise ValueError("profile must be real-valued on [0, inf)")

    def energy(self, p):
        return np.sqrt(self.mass**2 + np.asarray(p, dtype=float) ** 2)


def demo_packet(time_t: float = 0.05, mass: float = 1.0,
                 damping_a: float = 0.5) -> WavepacketParams:
    """The parameter set used for the negative-density demonstration."""
    return WavepacketParams(mass, damping_a, time_t, CosineProfile(mass))


# ----------------------------------------------------------------------
# pointwise field samples
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class FieldSample:
    """phi, its time derivative and its radial derivative at one point."""

    phi: complex
    dt_phi: complex
    dr_phi: complex


def field_sample(r: float, params: WavepacketParams,
                 quad: QuadratureSpec = QuadratureSpec()) -> FieldSample:
    """Evaluate the packet fields at radius r >= 0.

    r = 0 uses the analytic kernel limits sin(pr)/r -> p (and a vanishing
    radial derivative); no division by r ever happens there.  Quadrature
    failures propagate as :class:`QuadratureError`.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    a, t = params.damping_a, params.time_t

    def base(p):
        E = params.energy(p)
        return p * params.profile(p) * np.exp(-(a + 1j * t) * E)

    if quad.oscillation_wavelength is None:
        quad = dataclasses.replace(
            quad, oscillation_wavelength=2.0 * math.pi / max(r, 1.0))

    if r == 0.0:
        phi = integrate_damped(lambda p: p * base(p), a, quad).value
        dt_phi = integrate_damped(
            lambda p: p * (-1j * params.energy(p)) * base(p), a, quad).value
        return FieldSample(complex(phi), complex(dt_phi), 0.0j)

    i_sin = integrate_damped(lambda p: base(p) * np.sin(p * r), a, quad).value
    i_sin_e = integrate_damped(
        lambda p: -1j * params.energy(p) * base(p) * np.sin(p * r), a, quad).value
    i_cos = integrate_damped(lambda p: p * base(p) * np.cos(p * r), a, quad).value
    return FieldSample(complex(i_sin / r), complex(i_sin_e / r),
                       complex(i_cos / r - i_sin / r**2))


def charge_density(sample: FieldSample) -> float:
    """rho = (i/2)(phi* dphi - phi dphi*) computed as -Im(phi* dphi/dt)."""
    return float(-np.imag(np.conj(sample.phi) * sample.dt_phi))


def energy_density(sample: FieldSample, mass: float) -> float:
    """eps = |dphi/dt|^2 + |dphi/dr|^2 + m^2 |phi|^2 (>= 0 by construction)."""
    return float(abs(sample.dt_phi) ** 2 + abs(sample.dr_phi) ** 2
                 + mass**2 * abs(sample.phi) ** 2)


# ----------------------------------------------------------------------
# vectorized radial transforms
# ----------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(15)


def _panel_nodes(p_max: float, panels: int):
    edges = np.linspace(0.0, p_max, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    nodes = (mid + half * _GL_X[None, :]).ravel()
    wts = (half * np.broadcast_to(_GL_W, (panels, 15))).ravel()
    return nodes, wts


def _sin_cos_transforms(weights, radii, p_max, need_cos, quad: QuadratureSpec,
                        base_panels=None, chunk=400):
    """I_sin[k](r) = int w_k(p) sin(pr) dp and optionally the cos partner.

    GL-15 composite panels, doubled until every output is stable within
    the quadrature tolerances.  Radii whose entries fail to settle are
    reported back (the caller records them and carries on).
    """
    radii = np.asarray(radii, dtype=float)
    freq = max(float(np.max(radii)), 1.0)
    if quad.oscillation_wavelength is not None:
        freq = max(freq, 2.0 * math.pi / quad.oscillation_wavelength)
    if base_panels is None:
        base_panels = max(8, int(math.ceil(p_max * freq / 4.0)))

    def evaluate(panels):
        p, w = _panel_nodes(p_max, panels)
        wk = [np.asarray(wfun(p), dtype=complex) * w for wfun in weights]
        sins = [np.empty(len(radii), dtype=complex) for _ in weights]
        coss = [np.empty(len(radii), dtype=complex) for _ in weights] if need_cos else None
        for lo in range(0, len(radii), chunk):
            sl = slice(lo, lo + chunk)
            pr = np.outer(radii[sl], p)
            s = np.sin(pr)
            for k, wv in enumerate(wk):
                sins[k][sl] = s @ wv
            if need_cos:
                c = np.cos(pr)
                for k, wv in enumerate(wk):
                    coss[k][sl] = c @ (p * wv)
            del pr, s
        return sins, coss

    prev_s, prev_c = evaluate(base_panels)
    panels = base_panels
    for _ in range(6):
        panels *= 2
        cur_s, cur_c = evaluate(panels)
        diffs = [np.abs(a - b) for a, b in zip(cur_s, prev_s)]
        if need_cos:
            diffs += [np.abs(a - b) for a, b in zip(cur_c, prev_c)]
        scale = max(max(float(np.max(np.abs(v))) for v in cur_s), 1e-300)
        bad = np.zeros(len(radii), dtype=bool)
        for dcol in diffs:
            bad |= dcol > (quad.abs_tol + quad.rel_tol * scale)
        prev_s, prev_c = cur_s, cur_c
        if not bad.any():
            return cur_s, cur_c, np.array([], dtype=float)
    return prev_s, prev_c, radii[bad]


def packet_fields(params: WavepacketParams, radii,
                  quad: QuadratureSpec = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9),
                  need_dr: bool = True):
    """(phi, dt_phi, dr_phi, failed_radii) on an array of radii.

    ``need_dr=False`` skips the cosine transform behind the radial
    derivative (halves the cost of charge-only scans) and returns None
    in its place.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be ascending and positive")
    a, t = params.damping_a, params.time_t

    def b0(p):
        return p * params.profile(p) * np.exp(-(a + 1j * t) * params.energy(p))

    def b1(p):
        return -1j * params.energy(p) * b0(p)

    p_max = _packet_p_max(params, quad)
    sins, coss, failed = _sin_cos_transforms([b0, b1], radii, p_max, need_dr, quad)
    s0, s1 = sins
    phi = s0 / radii
    dt_phi = s1 / radii
    dr_phi = coss[0] / radii - s0 / radii**2 if need_dr else None
    return phi, dt_phi, dr_phi, failed


def _packet_p_max(params: WavepacketParams, quad: QuadratureSpec) -> float:
    a = params.damping_a
    p = np.linspace(0.0, 60.0 / a, 257)
    env = np.abs(p * np.asarray(params.profile(p))) * np.exp(
        a * (p - params.energy(p)))
    peak = max(float(np.max(env)), 1e-30)
    return math.log(peak / quad.abs_tol) / a + 2.0 / a


# ----------------------------------------------------------------------
# density scans and shells
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Shell:
    """Maximal contiguous radius interval where rho < -deadband."""

    r_min: float
    r_max: float
    rho_min: float


@dataclass
class DensityField:
    radii: np.ndarray
    rho: np.ndarray
    eps: np.ndarray
    negative_shells: list
    failed_radii: np.ndarray = field(default_factory=lambda: np.array([]))


def find_negative_shells(radii, rho, deadband: float = RHO_DEADBAND) -> list:
    """Contiguous grid runs with rho < -deadband, as Shell intervals."""
    neg = np.asarray(rho) < -deadband
    idx = np.flatnonzero(neg)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.r_[idx[0], idx[breaks + 1]]
    ends = np.r_[idx[breaks], idx[-1]]
    shells = []
    for s, e in zip(starts, ends):
        shells.append(Shell(float(radii[s]), float(radii[e]),
                            float(np.min(rho[s:e + 1]))))
    return shells


def scan_density(params: WavepacketParams, radii,
                 quad: QuadratureSpec = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9)
                 ) -> DensityField:
    """Sample rho and eps on a radial grid and detect negative shells."""
    phi, dt_phi, dr_phi, failed = packet_fields(params, radii, quad)
    rho = -np.imag(np.conj(phi) * dt_phi)
    eps = (np.abs(dt_phi) ** 2 + np.abs(dr_phi) ** 2
           + params.mass**2 * np.abs(phi) ** 2)
    shells = find_negative_shells(radii, rho)
    return DensityField(np.asarray(radii, dtype=float), rho, eps, shells,
                        np.asarray(failed))


def default_radii(r_max: float = 6.0, dr: float = 0.01) -> np.ndarray:
    """The (0, r_max] grid of the density demonstration."""
    n = int(round(r_max / dr))
    return dr * np.arange(1, n + 1)


def planar_map(fieldmap: DensityField, n: int = 121):
    """(x, z, rho) on a square grid by rotational symmetry.

    The radial profile is evaluated once and mapped by
    rho(x, 0, z) = rho(sqrt(x^2 + z^2)); beyond the scanned radius the
    density is taken as zero.
    """
    r_max = float(fieldmap.radii[-1])
    x = np.linspace(-r_max, r_max, n)
    z = np.linspace(-r_max, r_max, n)
    rr = np.hypot(x[:, None], z[None, :])
    rho = np.interp(rr.ravel(), fieldmap.radii, fieldmap.rho,
                    left=float(fieldmap.rho[0]), right=0.0).reshape(rr.shape)
    return x, z, rho


def shells_json(fieldmap: DensityField) -> str:
    return json.dumps([{"r_min": s.r_min, "r_max": s.r_max, "rho_min": s.rho_min}
                       for s in fieldmap.negative_shells], indent=2)


# ----------------------------------------------------------------------
# integral charges, energies, dispersions
# ----------------------------------------------------------------------

def _tail_check(radii, integrand, total, rel_tol, what):
    lo = 0.9 * radii[-1]
    tail = np.trapezoid(np.where(radii >= lo, integrand, 0.0), radii)
    if abs(tail) > rel_tol * max(abs(total), 1e-300):
        warnings.warn(
            f"{what}: outer 10% of the grid contributes "
            f"{abs(tail):.2e} (total {total:.6e}); extend the grid",
            TailWarning, stacklevel=3)


def total_charge(params: WavepacketParams, radii=None, rel_tol: float = 1e-6,
                 quad: QuadratureSpec = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9)
                 ) -> float:
    """Q = int rho 4 pi r^2 dr over the grid (default reaches r = 45).

    Positive for a positive-frequency packet even when rho has negative
    shells.  Emits :class:`TailWarning` when the outer 10% of the grid
    still contributes more than ``rel_tol`` of the total.
    """
    if radii is None:
        radii = default_radii(45.0, 0.02)
    phi, dt_phi, _, _ = packet_fields(params, radii, quad, need_dr=False)
    rho = -np.imag(np.conj(phi) * dt_phi)
    integrand = 4.0 * np.pi * rho * radii**2
    q = float(np.trapezoid(integrand, radii))
    _tail_check(radii, integrand, q, rel_tol, "total_charge")
    return q


def charge_momentum_space(params: WavepacketParams,
                          quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Momentum-space oracle: Q = 2 pi^2 int p^2 E_p f^2 e^{-2 a E_p} dp."""
    a = params.damping_a

    def kern(p):
        E = params.energy(p)
        return p * p * E * np.asarray(params.profile(p)) ** 2 * np.exp(-2.0 * a * E)

    return float(np.real(2.0 * np.pi**2 * integrate_damped(kern, 2.0 * a, quad).value))


def energy_momentum_space(params: WavepacketParams,
                          quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Total energy of the packet by momentum quadrature (= N^2 below)."""
    a = params.damping_a

    def kern(p):
        E = params.energy(p)
        return (p * E * np.asarray(params.profile(p))) ** 2 * np.exp(-2.0 * a * E)

    return float(np.real(4.0 * np.pi**2 * integrate_damped(kern, 2.0 * a, quad).value))


def packet_momentum_profile(params: WavepacketParams) -> Callable:
    """The t = 0 momentum amplitude of the packet in the canonical gauge.

    With phi and pi represented as d^3p integrals over
    f~(p) / (sqrt(2) (2 pi)^{3/2} E_p) and -i f~(p) / (sqrt(2) (2 pi)^{3/2}),
    the packet corresponds to
    f~(p) = sqrt(2) (2 pi)^{3/2} E_p f(p) e^{-a E_p} / (4 pi), so that
    int |f~|^2 d^3p equals the position-space energy integral.
    """
    a = params.damping_a
    coef = math.sqrt(2.0) * (2.0 * math.pi) ** 1.5 / (4.0 * math.pi)

    def ftil(p):
        E = params.energy(p)
        return coef * E * np.asarray(params.profile(p)) * np.exp(-a * E)

    return ftil


def momentum_norm(f: Callable, p_max: float = 60.0, n: int = 6000) -> float:
    """N^2 = int |f|^2 d^3p for a radial profile by panel quadrature."""
    p, w = _panel_nodes(p_max, max(8, n // 15))
    return float(4.0 * np.pi * np.sum(w * p * p * np.asarray(f(p)) ** 2))


def state_fields_from_momentum(f: Callable, mass: float, radii, p_max: float = 60.0,
                               panels: Optional[int] = None, chunk: int = 400):
    """Position-space (phi, pi, dphi/dr) of the state defined by f~ at t = 0.

    Panels are sized so each holds under one sin(p r_max) oscillation;
    radii are processed in chunks to bound the kernel-matrix memory.
    """
    radii = np.asarray(radii, dtype=float)
    if panels is None:
        panels = max(64, int(math.ceil(p_max * float(radii[-1]) / 4.0)))
    p, w = _panel_nodes(p_max, panels)
    E = np.sqrt(mass**2 + p * p)
    kap = 1.0 / math.sqrt(math.pi)
    a_phi = w * p * np.asarray(f(p)) / E
    a_pi = w * p * np.asarray(f(p))
    phi = np.empty(len(radii))
    pi = np.empty(len(radii))
    dphi = np.empty(len(radii))
    for lo in range(0, len(radii), chunk):
        sl = slice(lo, lo + chunk)
        pr = np.outer(radii[sl], p)
        s, c = np.sin(pr), np.cos(pr)
        s_phi = s @ a_phi
        phi[sl] = kap * s_phi / radii[sl]
        pi[sl] = kap * (s @ a_pi) / radii[sl]
        dphi[sl] = kap * ((c @ (p * a_phi)) / radii[sl] - s_phi / radii[sl] ** 2)
        del pr, s, c
    return phi, -1j * pi, dphi


def energy_position_space(f: Callable, mass: float, r_max: float = 45.0,
                          dr: float = 0.01, p_max: float = 60.0) -> float:
    """int eps 4 pi r^2 dr of the f~ state; equals int |f~|^2 d^3p."""
    radii = dr * np.arange(1, int(round(r_max / dr)) + 1)
    phi, pi, dphi = state_fields_from_momentum(f, mass, radii, p_max)
    eps = np.abs(pi) ** 2 + np.abs(dphi) ** 2 + mass**2 * np.abs(phi) ** 2
    integrand = 4.0 * np.pi * eps * radii**2
    total = float(np.trapezoid(integrand, radii))
    _tail_check(radii, integrand, total, 1e-8, "energy_position_space")
    return total


def position_dispersion_direct(f: Callable, mass: float, r_max: float = 45.0,
                               dr: float = 0.01, p_max: float = 60.0,
                               rel_tol: float = 1e-7) -> float:
    """Delta r^2 = (1/N^2) int r^2 eps d^3r by position-space quadrature.

    The independent oracle for the momentum-space dispersion formula
    (see :func:`relbosons.variational.position_dispersion_momentum`);
    N^2 is evaluated in momentum space.  Warns on unconverged tails.
    """
    radii = dr * np.arange(1, int(round(r_max / dr)) + 1)
    phi, pi, dphi = state_fields_from_momentum(f, mass, radii, p_max)
    eps = np.abs(pi) ** 2 + np.abs(dphi) ** 2 + mass**2 * np.abs(phi) ** 2
    integrand = 4.0 * np.pi * radii**4 * eps
    num = float(np.trapezoid(integrand, radii))
    _tail_check(radii, integrand, num, rel_tol, "position_dispersion_direct")
    return num / momentum_norm(f, p_max)
