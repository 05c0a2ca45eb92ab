"""Brute-force purity verification on a discrete momentum grid.

The analytic prediction says the post-collision purity of an initially
factorized two-particle Gaussian behaves like 1 - E(mu1)/(ln sigma)^2 for
small momentum width sigma.  This module checks that claim from the other
end: build the truncated outgoing amplitude on a tensor momentum grid,
form the one-particle reduced density matrix, take Tr rho^2 directly, and
sweep sigma to recover the coefficient.

Everything is computed in scaled momenta q = p / sigma, which makes the
grid sigma-independent; sigma enters only through ln sigma + ln|q_rel| in
the multiplier argument, so there is no underflow anywhere.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .entangle import MassPartition, coeff_E
from .errors import DomainError, GridResolutionError
from .quadrature import gauss_legendre_rule, map_to_interval
from .specfun import bessel_i0_scaled

PI = math.pi

#: Half-width of the scaled per-axis momentum grid.  The unit Gaussian
#: weight at the edge is exp(-36) ~ 2e-16.
DEFAULT_QMAX = 6.0
DEFAULT_GRID_N = 24

#: Discrete-norm slack accepted before a purity value is considered a
#: resolution failure rather than quadrature noise.
PURITY_SLACK = 1e-6


@dataclass(frozen=True)
class GaussianParams:
    """Momentum width sigma and mean relative momentum p0 of the in-state.

    Units have hbar = 1; p0 is the physical (unscaled) 2-vector, so the
    scaled grid sees q0 = p0 / sigma.
    """

    sigma: float
    p0: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError("sigma must be positive and finite")
        p0 = np.asarray(self.p0, dtype=float)
        if p0.shape != (2,) or not np.all(np.isfinite(p0)):
            raise DomainError("p0 must be a finite 2-vector")

    @property
    def q0(self):
        return np.asarray(self.p0, dtype=float) / self.sigma


@dataclass(frozen=True)
class MomentumGridState:
    """Two-particle amplitude sampled on a tensor momentum grid.

    ``amplitudes[i, k]`` is the value at (first-particle point i,
    second-particle point k); both indices run over the flattened 2D
    per-particle grid.  States are normalized on construction so that the
    discrete norm is 1 to rounding.
    """

    axis_nodes: np.ndarray
    axis_weights: np.ndarray
    points: np.ndarray           # (N, 2) flattened grid
    point_weights: np.ndarray    # (N,)
    masses: MassPartition
    params: GaussianParams
    amplitudes: np.ndarray = field(repr=False)   # (N, N) complex

    @property
    def grid_size(self):
        return self.points.shape[0]


def _per_particle_grid(grid_n, q_max):
    rule = map_to_interval(gauss_legendre_rule(grid_n), -q_max, q_max)
    gx, gy = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    points = np.stack([gx.ravel(), gy.ravel()], axis=1)
    weights = np.outer(rule.weights, rule.weights).ravel()
    return rule, points, weights


def out_state_amplitude(q1, q2, masses, params, mult):
    """Truncated outgoing amplitude at scaled momenta (q1, q2).

    The in-state factor is exp-of-a-quadratic in center-of-mass and
    relative momenta; the scattered part multiplies the isotropic average
    of the in-state over the relative direction (a closed form with one
    I0 factor, evaluated in scaled form) by ``mult.sigma_part`` at
    ln sigma + ln|q_rel|.  Passing ``mult=None`` gives the free in-state.

    q1 and q2 are arrays of shape (..., 2) (broadcast together).
    """
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    mu1, mu2 = masses.mu1, masses.mu2
    q0 = params.q0
    d1 = q1 - q0
    d2 = q2 + q0
    psi_in = (1.0 / PI) * np.exp(
        -0.5 * (np.sum(d1 * d1, axis=-1) + np.sum(d2 * d2, axis=-1))
    )
    if mult is None:
        return psi_in.astype(complex)

    cm = q1 + q2
    rel = mu2 * q1 - mu1 * q2
    t = np.sqrt(np.sum(rel * rel, axis=-1))
    if np.any(t == 0.0):
        raise DomainError(
            "grid places a node at zero relative momentum, where the "
            "multiplier argument ln|q_rel| is singular"
        )
    cm2 = np.sum(cm * cm, axis=-1)
    wvec = 2.0 * q0 - (mu1 - mu2) * cm
    z = t * np.sqrt(np.sum(wvec * wvec, axis=-1))
    expo = (
        -0.5 * (mu1 * mu1 + mu2 * mu2) * cm2
        - t * t
        - float(q0 @ q0)
        + (mu1 - mu2) * (cm @ q0)
        + z
    )
    if expo.size and expo.max() > 1e-9:
        raise AssertionError(
            f"combined exponent must stay non-positive; max={expo.max():.3e}"
        )
    iso_avg = (1.0 / PI) * np.exp(expo) * bessel_i0_scaled(z)
    return psi_in + mult.sigma_part(math.log(params.sigma) + np.log(t)) * iso_avg


def build_state(masses, params, mult, grid_n=DEFAULT_GRID_N, q_max=DEFAULT_QMAX):
    """Sample the (truncated) outgoing state on the tensor grid and
    normalize it in the discrete norm."""
    if grid_n < 8:
        raise DomainError("grid_n must be at least 8 per axis")
    rule, points, weights = _per_particle_grid(grid_n, q_max)
    n_pts = points.shape[0]
    phi = np.empty((n_pts, n_pts), dtype=complex)
    block = 256          # bounds the (block, N, 2) broadcast temporaries
    for lo in range(0, n_pts, block):
        hi = min(lo + block, n_pts)
        phi[lo:hi] = out_state_amplitude(
            points[lo:hi, None, :], points[None, :, :], masses, params, mult
        )
    sw = np.sqrt(weights)
    scaled = sw[:, None] * phi * sw[None, :]
    norm = float(np.linalg.norm(scaled))
    if not norm > 0:
        raise GridResolutionError("state vanished on the grid")
    return MomentumGridState(
        axis_nodes=rule.nodes,
        axis_weights=rule.weights,
        points=points,
        point_weights=weights,
        masses=masses,
        params=params,
        amplitudes=phi / norm,
    )


def purity_of_grid(state):
    """Tr rho^2 of the one-particle reduced density matrix.

    rho_{ii'} = sum_k w_k phi(i, k) conj(phi(i', k)); the purity is the
    weighted squared Frobenius norm of rho, evaluated without any
    eigendecomposition.  Requires a normalized state.
    """
    w = state.point_weights
    sw = np.sqrt(w)
    A = sw[:, None] * state.amplitudes * sw[None, :]
    norm2 = float(np.vdot(A, A).real)
    if abs(norm2 - 1.0) > 1e-8:
        raise DomainError(
            f"state is not normalized (discrete norm^2 = {norm2!r})"
        )
    G = A @ A.conj().T
    value = float(np.vdot(G, G).real)
    if value > 1.0 + PURITY_SLACK:
        raise GridResolutionError(
            f"purity {value} exceeds 1 beyond quadrature slack; "
            "increase grid_n"
        )
    return value


def leading_purity(mu1, sigma, tol=1e-8):
    """Analytic leading-order purity 1 - E(mu1) / (ln sigma)^2."""
    if not (0 < sigma < 1):
        raise DomainError("leading_purity requires 0 < sigma < 1")
    row = coeff_E(mu1, tol)
    return 1.0 - row.E / math.log(sigma) ** 2


@dataclass(frozen=True)
class SweepResult:
    """One sigma sweep: grid estimates of E plus the quadrature reference."""

    mu1: float
    inv_a: float
    entries: tuple          # of (sigma, purity, E_hat)
    reference_E: float
    residual_slope: float   # d ln|E_hat - E| / d ln(1/|ln sigma|)


def estimate_E_from_sweep(
    mu1,
    sigmas,
    grid_n=DEFAULT_GRID_N,
    inv_a=0.0,
    q_max=DEFAULT_QMAX,
    tol=1e-8,
):
    """Recover the entanglement coefficient from a purity sweep.

    For each sigma the estimate is E_hat = (1 - purity) (ln sigma)^2.  The
    residual against the quadrature value of E shrinks like 1/|ln sigma|;
    the fitted slope of ln|residual| vs ln(1/|ln sigma|) is reported as a
    diagnostic (~1 when the first correction dominates).
    """
    from .smatrix import ExpansionParams, expansion_multipliers

    sigmas = [float(s) for s in sigmas]
    if any(s >= 1e-3 for s in sigmas):
        raise DomainError("sweep requires sigma < 1e-3")
    if any(b >= a for a, b in zip(sigmas, sigmas[1:])):
        raise DomainError("sigmas must be strictly decreasing")
    if grid_n < 16:
        raise DomainError("sweep requires grid_n >= 16")
    masses = MassPartition(mu1)
    mult = expansion_multipliers(ExpansionParams(inv_a=inv_a))
    entries = []
    for sigma in sigmas:
        state = build_state(masses, GaussianParams(sigma), mult, grid_n, q_max)
        p = purity_of_grid(state)
        entries.append((sigma, p, (1.0 - p) * math.log(sigma) ** 2))
    reference = coeff_E(mu1, tol).E
    residuals = np.array([abs(e[2] - reference) for e in entries])
    logs = np.array([1.0 / abs(math.log(s)) for s in sigmas])
    slope = float("nan")
    if np.all(residuals > 0):
        slope = float(np.polyfit(np.log(logs), np.log(residuals), 1)[0])
    return SweepResult(
        mu1=mu1,
        inv_a=inv_a,
        entries=tuple(entries),
        reference_E=reference,
        residual_slope=slope,
    )


def p0_deviation(mu1, sigma, p0_over_sigma, grid_n=DEFAULT_GRID_N, inv_a=0.0,
                 q_max=DEFAULT_QMAX):
    """Purity shift from a nonzero mean relative momentum, normalized.

    For each ratio rho = |p0|/sigma the deviation
    |P(p0) - P(0)| * (ln sigma)^2 * sigma / |p0| is returned; boundedness
    of these values across ratios is the scaling claim under test.  The
    p0 = 0 reference uses the identical grid, so the deviation vanishes
    exactly there.
    """
    from .smatrix import ExpansionParams, expansion_multipliers

    ratios = [float(r) for r in p0_over_sigma]
    if any(not (0.0 < r <= 1.0) for r in ratios):
        raise DomainError("ratios |p0|/sigma must lie in (0, 1]")
    if not sigma < 1e-4:
        raise DomainError("p0 deviation check requires sigma < 1e-4")
    masses = MassPartition(mu1)
    mult = expansion_multipliers(ExpansionParams(inv_a=inv_a))
    base = purity_of_grid(
        build_state(masses, GaussianParams(sigma), mult, grid_n, q_max)
    )
    out = []
    log2 = math.log(sigma) ** 2
    for ratio in ratios:
        params = GaussianParams(sigma, (ratio * sigma, 0.0))
        p = purity_of_grid(build_state(masses, params, mult, grid_n, q_max))
        out.append((ratio, abs(p - base) * log2 / ratio))
    return out
