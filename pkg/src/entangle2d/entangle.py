"""Leading-order entanglement quantities for two-body 2D scattering.

The purity deficit created by a low-energy collision is governed by a
universal coefficient E(mu1) that depends only on the mass fractions
mu_i = m_i / (m1 + m2).  It combines two ingredients:

* J(mu1, mu2): a four-dimensional Gaussian-Bessel overlap integral,
  reduced here to an outer radial integral of the squared inner amplitude
  I(r) by rotational invariance,
* L(mu1, mu2): a two-dimensional Laplace-type integral with the closed
  form 1 / sqrt(1 + (2 mu1 - 1)^2).

E(mu1) = 2 pi^2 L (1 + L) - (2/pi) [J(mu1, mu2) + J(mu2, mu1)],

which vanishes at equal masses and grows to ~2.64 for mu1 -> 1.

The growing Bessel factor I0 is always evaluated in scaled form with the
exponent combined analytically; the combined exponent is negative
definite, which an assertion guards at every node.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .quadrature import IntegralResult, angular_rule, converge, radial_rule
from .specfun import bessel_i0_scaled

PI = math.pi

#: Radial decay scales (in units of the Gaussian width) of the inner and
#: outer integrands; the combined exponent decays at least like
#: exp(-s^2/2), i.e. a Gaussian of scale sqrt(2).
_INNER_SCALE = math.sqrt(2.0)
_OUTER_SCALE = math.sqrt(2.0)

#: Per-level rule sizes for J: (outer radial, inner radial, inner angular)
#: all double with each level.
_J_BASE = 16

#: Chunk of outer radial nodes processed at once (bounds peak memory).
_J_CHUNK = 64


@dataclass(frozen=True)
class MassPartition:
    """Mass fractions mu1 = m1/(m1+m2) and mu2 = 1 - mu1."""

    mu1: float

    def __post_init__(self):
        if not (np.isfinite(self.mu1) and 0.0 <= self.mu1 <= 1.0):
            raise DomainError("mass fraction mu1 must lie in [0, 1]")

    @property
    def mu2(self):
        return 1.0 - self.mu1

    @classmethod
    def from_masses(cls, m1, m2):
        if not (m1 > 0 and m2 > 0):
            raise DomainError("masses must be positive")
        return cls(mu1=m1 / (m1 + m2))

    def swapped(self):
        return MassPartition(mu1=self.mu2)


@dataclass(frozen=True)
class EntanglementRow:
    """One table entry: mass fraction, coefficient, quadrature error."""

    mu1: float
    E: float
    err: float


def inner_amplitude(r, masses, nr=64, ntheta=64):
    """Inner Gaussian-Bessel amplitude I(r) at second-momentum radius r.

    I(r) is the 2D integral over q1 of

        exp[-(mu1^2+mu2^2)(q1+q2)^2/2 - (mu2 q1 - mu1 q2)^2 - q1^2/2]
        * I0(|mu1-mu2| |q1+q2| |mu2 q1 - mu1 q2|)

    with q2 = (r, 0); by rotational invariance the value depends on |q2|
    only.  Evaluated in polar coordinates with the Bessel factor in scaled
    form, exp(Q + z) * i0e(z), whose combined exponent is <= -q1^2/2.

    Accepts a scalar or an array of radii (evaluated elementwise).
    """
    mu1 = masses.mu1
    mu2 = masses.mu2
    b = abs(mu1 - mu2)
    msq = mu1 * mu1 + mu2 * mu2
    rad = radial_rule(nr, _INNER_SCALE, include_jacobian=True)
    ang = angular_rule(ntheta)

    rv = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(rv)) or np.any(rv < 0):
        raise DomainError("inner_amplitude requires finite r >= 0")
    rr = rv.reshape(rv.shape + (1, 1))
    s = rad.nodes[:, None]
    cth = np.cos(ang.nodes)[None, :]

    a2 = s * s + 2.0 * s * rr * cth + rr * rr          # |q1+q2|^2
    b2 = mu2 * mu2 * s * s - 2.0 * mu1 * mu2 * s * rr * cth + mu1 * mu1 * rr * rr
    expo = -0.5 * msq * a2 - b2 - 0.5 * s * s
    z = b * np.sqrt(a2 * b2)
    net = expo + z
    if net.size and net.max() > 1e-9:
        raise AssertionError(
            "combined exponent must be negative definite; "
            f"max={net.max():.3e}"
        )
    vals = np.exp(net) * bessel_i0_scaled(z)
    out = (vals @ ang.weights) @ rad.weights
    if np.ndim(r) == 0:
        return float(out)
    return out


def _j_level_value(masses, level):
    n = _J_BASE << level
    outer = radial_rule(n, _OUTER_SCALE, include_jacobian=True)
    total = 0.0
    for lo in range(0, n, _J_CHUNK):
        hi = min(lo + _J_CHUNK, n)
        amp = inner_amplitude(outer.nodes[lo:hi], masses, nr=n, ntheta=n)
        total += float(outer.weights[lo:hi] @ (amp * amp))
    return 2.0 * PI * total


@lru_cache(maxsize=1024)
def _coeff_J_cached(mu1, tol, max_level):
    masses = MassPartition(mu1)
    return converge(lambda lvl: _j_level_value(masses, lvl), tol, max_level)


def coeff_J(masses, tol=1e-8, max_level=5):
    """Gaussian-Bessel overlap J(mu1, mu2) = 2 pi * int I(r)^2 r dr.

    Converged by doubling all rule sizes per level until consecutive
    levels agree to ``tol`` (relative for values above 1).  Anchors:
    J(1/2, 1/2) = pi^3 and J(1, 0) = pi^2 K(1/4) = 16.63769.
    """
    return _coeff_J_cached(masses.mu1, float(tol), int(max_level))


def closed_form_L(masses):
    """Closed form of the Laplace pair integral: 1/sqrt(1+(2 mu1 - 1)^2)."""
    d = 2.0 * masses.mu1 - 1.0
    return 1.0 / math.sqrt(1.0 + d * d)


def _l_level_value(masses, level):
    # substitute lambda = x^2, rho = y^2; integrand is then analytic and
    # decays at least like exp(-0.38 (x^2+y^2)) for every mass split
    n = 24 << level
    mu1, mu2 = masses.mu1, masses.mu2
    b = abs(mu1 - mu2)
    c = mu1 * mu1 + mu2 * mu2
    rx = radial_rule(n, 1.7, include_jacobian=True)
    ry = radial_rule(n, 1.7, include_jacobian=True)
    x = rx.nodes[:, None]
    y = ry.nodes[None, :]
    z = b * x * y
    net = -2.0 * x * x - c * y * y + 2.0 * z
    vals = np.exp(net) * bessel_i0_scaled(z) ** 2
    return 4.0 * float(rx.weights @ vals @ ry.weights)


def coeff_L(masses, tol=1e-10, max_level=4):
    """Laplace pair integral L(mu1, mu2) by 2D quadrature.

    Returns ``(result, closed)`` where ``closed`` is the closed form
    1/sqrt(1+(2 mu1-1)^2); the quadrature exists to validate it and is
    asserted against it in the tests at 1e-8 relative.
    """
    result = converge(lambda lvl: _l_level_value(masses, lvl), tol, max_level)
    return result, closed_form_L(masses)


def coeff_E(mu1, tol=1e-8):
    """Universal entanglement coefficient E(mu1).

    Uses the closed form of L (so the first term is
    2 pi^2 (1 + sqrt(1+(2 mu1-1)^2)) / (1+(2 mu1-1)^2)) and quadrature for
    both mass orderings of J.  The reported err adds the two J error
    estimates, scaled by their 2/pi prefactor.
    """
    masses = MassPartition(mu1)
    j12 = coeff_J(masses, tol)
    j21 = coeff_J(masses.swapped(), tol)
    lcf = closed_form_L(masses)
    value = 2.0 * PI**2 * lcf * (1.0 + lcf) - (2.0 / PI) * (j12.value + j21.value)
    err = (2.0 / PI) * (j12.error_estimate + j21.error_estimate)
    return EntanglementRow(mu1=mu1, E=value, err=err)


def table(mu1_values, tol=1e-8):
    """EntanglementRow for each mass fraction, in input order.

    A failure aborts the computation; the raised exception carries the
    rows finished so far as ``partial_rows``.
    """
    rows = []
    for mu1 in mu1_values:
        try:
            rows.append(coeff_E(float(mu1), tol))
        except Exception as exc:
            exc.partial_rows = rows
            raise
    return rows


# --- direct evaluation of the purity terms (independent oracle) ---------

#: Half-width of the per-axis Gauss-Legendre grid used for the direct
#: tensor-product evaluation; the unit Gaussian weight is ~5e-22 there.
_DIRECT_QMAX = 7.0
_DIRECT_BASE = 10
_DIRECT_NTHETA_BASE = 64
_DIRECT_CHUNK = 32

TERM_IDS = (11, 12, 13, 2)


def _direct_grid(n_axis):
    from .quadrature import gauss_legendre_rule, map_to_interval

    rule = map_to_interval(gauss_legendre_rule(n_axis), -_DIRECT_QMAX, _DIRECT_QMAX)
    gx, gy = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    points = np.stack([gx.ravel(), gy.ravel()], axis=1)
    weights = np.outer(rule.weights, rule.weights).ravel()
    return points, weights


@lru_cache(maxsize=32)
def _purity_terms_level(mu1, level):
    """All four purity terms on one tensor grid level.

    The isotropic projection of the product state is taken *numerically*
    (uniform angular average over the relative-momentum direction), so
    this path shares no reduction with coeff_J / coeff_L.
    """
    masses = MassPartition(mu1)
    mu2 = masses.mu2
    n_axis = _DIRECT_BASE << level
    ntheta = _DIRECT_NTHETA_BASE << (level - 1)
    points, weights = _direct_grid(n_axis)
    n_pts = points.shape[0]

    phis = 2.0 * PI * np.arange(ntheta) / ntheta
    cos_p = np.cos(phis)
    sin_p = np.sin(phis)

    # one-particle Gaussian psi(q) = exp(-q^2/2)/sqrt(pi) on the grid
    psi = np.exp(-0.5 * np.einsum("id,id->i", points, points)) / math.sqrt(PI)

    proj = np.empty((n_pts, n_pts))
    for lo in range(0, n_pts, _DIRECT_CHUNK):
        hi = min(lo + _DIRECT_CHUNK, n_pts)
        p1 = points[lo:hi]
        cmx = p1[:, 0][:, None] + points[:, 0][None, :]
        cmy = p1[:, 1][:, None] + points[:, 1][None, :]
        relx = mu2 * p1[:, 0][:, None] - mu1 * points[:, 0][None, :]
        rely = mu2 * p1[:, 1][:, None] - mu1 * points[:, 1][None, :]
        t = np.hypot(relx, rely)
        cm2 = cmx * cmx + cmy * cmy
        # angular average of the product state over the direction of the
        # relative momentum, at fixed |rel| and fixed total momentum
        expo = (
            -0.5 * (mu1 * mu1 + mu2 * mu2) * cm2[..., None]
            - (t * t)[..., None]
            - (mu1 - mu2)
            * t[..., None]
            * (cmx[..., None] * cos_p + cmy[..., None] * sin_p)
        )
        proj[lo:hi] = np.exp(expo).mean(axis=-1) / PI
    wp = weights * psi
    inner_over_first = proj.T @ wp    # function of the second argument
    inner_over_second = proj @ wp     # function of the first argument
    overlap = float(wp @ inner_over_second)

    term2 = 2.0 * PI**2 * overlap
    term13 = 2.0 * PI**2 * overlap**2
    term11 = -2.0 * PI**2 * float(weights @ (inner_over_first**2))
    term12 = -2.0 * PI**2 * float(weights @ (inner_over_second**2))
    return {11: term11, 12: term12, 13: term13, 2: term2}


def purity_term_direct(term, masses, tol=1e-6, max_level=2):
    """Direct tensor-grid value of one second-order purity term.

    ``term`` is 11, 12 or 13 for the three pieces quartic in the state and
    2 for the quadratic piece.  Expected identities (validated in tests):
    term 11 = -(2/pi) J(mu1, mu2), term 12 = -(2/pi) J(mu2, mu1),
    term 13 = 2 pi^2 L^2 and term 2 = 2 pi^2 L.
    """
    if term not in TERM_IDS:
        raise DomainError(f"unknown purity term id {term}; expected one of {TERM_IDS}")
    return converge(
        lambda lvl: _purity_terms_level(masses.mu1, lvl)[term], tol, max_level
    )
