"""Effective radial potentials for the boson uncertainty eigenproblems.

Both spin channels are cast into the one canonical form

    -u''(q) + W(q) u(q) = lam u(q),      lam = 2 gamma,  u = q * f,

so a single solver covers the scalar (spin-0) and longitudinal (spin-1)
problems.  The relativity parameter ``d`` interpolates between the
nonrelativistic (d = 0) and massless (d = inf) regimes; the two limits
use their exact closed forms rather than a large float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INFINITY = math.inf

SPIN0 = 0
SPIN1 = 1
CHANNEL_SCALAR = "scalar"
CHANNEL_LONGITUDINAL = "longitudinal"


@dataclass(frozen=True)
class PotentialSpec:
    """Selects one effective radial potential W(q).

    ``angular_index`` is l for spin 0 and j for spin 1; only the 0 value
    matters for the uncertainty bound (the centrifugal barrier raises
    every level) but any value is accepted.
    """

    spin: int
    channel: str
    d: float
    angular_index: int = 0

    def __post_init__(self):
        if self.spin not in (SPIN0, SPIN1):
            raise ValueError("spin must be 0 or 1")
        if self.channel not in (CHANNEL_SCALAR, CHANNEL_LONGITUDINAL):
            raise ValueError("channel must be 'scalar' or 'longitudinal'")
        if self.spin == SPIN0 and self.channel != CHANNEL_SCALAR:
            raise ValueError("spin 0 supports only the scalar channel")
        if self.spin == SPIN1 and self.channel != CHANNEL_LONGITUDINAL:
            raise ValueError("spin 1 supports only the longitudinal channel")
        if not (self.d >= 0.0):
            raise ValueError("d must be nonnegative (or INFINITY)")
        if self.angular_index < 0 or self.angular_index != int(self.angular_index):
            raise ValueError("angular_index must be a nonnegative integer")


def spec_spin0(d: float, l: int = 0) -> PotentialSpec:
    return PotentialSpec(SPIN0, CHANNEL_SCALAR, d, l)


def spec_spin1(d: float, j: int = 0) -> PotentialSpec:
    return PotentialSpec(SPIN1, CHANNEL_LONGITUDINAL, d, j)


@dataclass(frozen=True)
class OriginBehavior:
    """Small-q structure of W: W ~ c/q^2, regular solution u ~ q^alpha."""

    singular_strength: float
    exponent_alpha: float


def effective_potential(q, spec: PotentialSpec):
    """W(q) in the canonical -u'' + W u = lam u form.  Requires q > 0.

    Vectorized over numpy arrays.  At d = INFINITY the exact limiting
    forms 1/q^2 + q^2 (either spin) are used; at d = 0 the formulas
    reduce exactly to q^2 (spin 0) and 2/q^2 + q^2 (spin 1).
    """
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0.0):
        raise ValueError("q must be positive")
    lterm = spec.angular_index * (spec.angular_index + 1)
    if math.isinf(spec.d):
        w = 1.0 / q**2 + q**2
    elif spec.spin == SPIN0:
        x = (spec.d * q) ** 2
        w = spec.d**2 / (1.0 + x) + spec.d**2 / (2.0 * (1.0 + x) ** 2) + q**2
    else:
        x = (spec.d * q) ** 2
        w = (q**2 + 1.0 / q**2 + 1.0 / (q**2 * (1.0 + x))
             + spec.d**2 / (2.0 * (1.0 + x) ** 2))
    if lterm:
        w = w + lterm / q**2
    return w if w.shape else float(w)


def origin_behavior(spec: PotentialSpec) -> OriginBehavior:
    """Strength of the 1/q^2 singularity and the regular-solution power.

    c collects the centrifugal term plus the channel contribution:
    0 for spin 0 at finite d, 1 for either d = INFINITY limit, and 2 for
    spin 1 at any finite d (its two 1/q^2 terms coincide at the origin).
    alpha solves alpha (alpha - 1) = c with alpha >= 1.
    """
    c = float(spec.angular_index * (spec.angular_index + 1))
    if math.isinf(spec.d):
        c += 1.0
    elif spec.spin == SPIN1:
        c += 2.0
    alpha = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * c))
    return OriginBehavior(c, alpha)


def regular_expansion(spec: PotentialSpec):
    """Taylor coefficients (w0, w2) of W - c/q^2 = w0 + w2 q^2 + O(q^4)."""
    if math.isinf(spec.d):
        return 0.0, 1.0
    d2 = spec.d**2
    if spec.spin == SPIN0:
        return 1.5 * d2, 1.0 - 2.0 * d2**2
    return -0.5 * d2, 1.0


def d_parameter(delta_p2: float, delta_r2: float, mass: float) -> float:
    """Dimensionless relativity measure (1/m)(dp^2/dr^2)^(1/4), hbar=c=1."""
    if delta_p2 <= 0 or delta_r2 <= 0 or mass <= 0:
        raise ValueError("dispersions and mass must be positive")
    return (delta_p2 / delta_r2) ** 0.25 / mass
