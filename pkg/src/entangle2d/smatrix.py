"""Low-energy S-matrix truncation and the zero-energy scattering length.

At low relative momentum the 2D scattering matrix acts nontrivially only
on the isotropic angular sector, with multiplier

    1 + i pi / ln|p| + (i pi (ln 2 - gamma + 1/a) - pi^2/2) / (ln|p|)^2,

where gamma is Euler's constant and 1/a is a potential-dependent constant
produced by a trace formula over zero-energy kernels.  This module builds
those kernels by a Nystrom discretization with an analytically corrected
log-singular diagonal, evaluates the trace formula, and cross-checks the
result against an independent radial-equation solver (the two agree up to
discretization error; empirically the offset tends to zero under mesh
refinement, i.e. 1/a here equals -ln a_std of the standard log-asymptote
convention).

Units: hbar = 1 throughout; the reduced mass is an explicit parameter.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DegenerateInputError,
    DomainError,
    OracleUnreliableError,
    ResonanceError,
)
from .specfun import EULER_GAMMA

PI = math.pi
LN2 = math.log(2.0)

#: Condition number of the compressed zero-energy kernel above which the
#: computation refuses to proceed: the kernel is then numerically singular,
#: the signature of a zero-energy half-bound state or eigenvalue.
RESONANCE_CONDITION_LIMIT = 1e10

POTENTIAL_KINDS = ("gaussian_well", "disk_well", "tabulated")


@dataclass(frozen=True)
class ExpansionParams:
    """Inputs of the truncated low-energy expansion.

    ``inv_a`` is the inverse-scattering-length constant of the second-order
    coefficient (0 encodes |a| = infinity); ``mass_reduced`` is
    m1 m2 / (m1 + m2).
    """

    inv_a: float
    mass_reduced: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.inv_a):
            raise DomainError("inv_a must be finite")
        if not self.mass_reduced > 0:
            raise DomainError("mass_reduced must be positive")


@dataclass(frozen=True)
class SMatrixMultipliers:
    """Isotropic-sector multipliers of the truncated S-matrix.

    The full truncated operator is identity plus ``sigma_part(logp)`` times
    the projector onto the isotropic angular function; ``logp`` is
    ln(|p|/hbar) and must be negative (low-energy regime).
    """

    inv_a: float
    identity_part: complex = 1.0 + 0.0j

    def sigma_part(self, logp):
        logp = np.asarray(logp, dtype=float)
        if np.any(logp >= 0.0) or not np.all(np.isfinite(logp)):
            raise DomainError(
                "sigma_part requires ln|p| < 0 (momentum below the unit scale)"
            )
        c = LN2 - EULER_GAMMA + self.inv_a
        out = 1j * PI / logp + (1j * PI * c - 0.5 * PI * PI) / (logp * logp)
        if out.ndim == 0:
            return complex(out)
        return out

    def unitarity_defect(self, logp):
        """| |1 + sigma|^2 - 1 |, the operator-norm deviation from
        unitarity of the truncation at this momentum."""
        s = self.sigma_part(logp)
        return np.abs(np.abs(1.0 + s) ** 2 - 1.0)


def expansion_multipliers(params):
    """Multiplier closure for the truncated S-matrix at given 1/a."""
    return SMatrixMultipliers(inv_a=params.inv_a)


# --- potentials ----------------------------------------------------------


@dataclass(frozen=True)
class PotentialSpec:
    """A 2D interaction potential with compact numerical support.

    kinds:
      gaussian_well  V(x) = strength * exp(-|x|^2 / width^2)
      disk_well      V(x) = strength for |x| <= width, else 0
      tabulated      radial samples (r, V) or grid samples (x, y, V);
                     linear interpolation, zero outside the data range.

    ``support_radius`` truncates every kernel mesh; tabulated data must
    vanish at and beyond it, and the Gaussian tail there must be
    negligible (support_radius >= 5 * width is enforced).
    """

    kind: str
    strength: float
    width: float = 1.0
    support_radius: float = 6.0
    table: tuple | None = None

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise DomainError(f"unknown potential kind {self.kind!r}")
        if self.kind != "tabulated":
            if not self.width > 0:
                raise DomainError("width must be positive")
        if not self.support_radius > 0:
            raise DomainError("support_radius must be positive")
        if self.kind == "gaussian_well" and self.support_radius < 5.0 * self.width:
            raise DomainError(
                "gaussian_well needs support_radius >= 5*width so the "
                "neglected tail is below 1e-10 of the peak"
            )
        if self.kind == "disk_well" and self.support_radius < self.width:
            raise DomainError("disk_well needs support_radius >= width")
        if self.kind == "tabulated":
            if self.table is None:
                raise DomainError("tabulated potential requires a table")
            data = np.asarray(self.table, dtype=float)
            if data.ndim != 2 or data.shape[1] not in (2, 3):
                raise DomainError(
                    "table must be rows of (r, V) or (x, y, V) values"
                )
            if data.shape[1] == 2:
                r = data[:, 0]
                if np.any(r < 0) or np.any(np.diff(r) <= 0):
                    raise DomainError("radial table needs increasing r >= 0")
                outside = r >= self.support_radius
                if np.any(np.abs(data[outside, 1]) > 0):
                    raise DomainError(
                        "tabulated potential must vanish beyond support_radius"
                    )
            else:
                rad = np.hypot(data[:, 0], data[:, 1])
                outside = rad >= self.support_radius
                if np.any(np.abs(data[outside, 2]) > 0):
                    raise DomainError(
                        "tabulated potential must vanish beyond support_radius"
                    )

    @property
    def is_radial(self):
        if self.kind in ("gaussian_well", "disk_well"):
            return True
        data = np.asarray(self.table, dtype=float)
        return data.shape[1] == 2

    def radial_profile(self, r):
        """V(r) for radially symmetric potentials."""
        r = np.asarray(r, dtype=float)
        if self.kind == "gaussian_well":
            out = self.strength * np.exp(-(r * r) / (self.width * self.width))
        elif self.kind == "disk_well":
            out = np.where(r <= self.width, self.strength, 0.0)
        elif self.is_radial:
            data = np.asarray(self.table, dtype=float)
            out = self.strength * np.interp(r, data[:, 0], data[:, 1], right=0.0)
        else:
            raise DomainError("potential is not radially symmetric")
        return out if out.ndim else float(out)

    def evaluate(self, x, y):
        """V at Cartesian points (vectorized)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.is_radial:
            return self.radial_profile(np.hypot(x, y))
        from scipy.interpolate import LinearNDInterpolator

        data = np.asarray(self.table, dtype=float)
        interp = LinearNDInterpolator(data[:, :2], data[:, 2], fill_value=0.0)
        return self.strength * interp(np.stack([x, y], axis=-1))


def parse_potential_file(path):
    """Read a PotentialSpec from a key-value text file.

    Grammar: one ``key = value`` pair per line; '#' starts a comment.
    Keys: kind (required), strength (required), width, support_radius,
    table_path.  The table file holds whitespace-separated rows of either
    two columns (r, V) or three (x, y, V).
    """
    fields = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        fields[key] = value
    if "kind" not in fields or "strength" not in fields:
        raise DomainError(f"{path}: 'kind' and 'strength' are required")
    table = None
    if "table_path" in fields:
        table_file = Path(fields.pop("table_path"))
        if not table_file.is_absolute():
            table_file = Path(path).parent / table_file
        rows = np.loadtxt(table_file, ndmin=2)
        table = tuple(map(tuple, rows.tolist()))
    kwargs = {
        "kind": fields["kind"],
        "strength": float(fields["strength"]),
        "table": table,
    }
    if "width" in fields:
        kwargs["width"] = float(fields["width"])
    if "support_radius" in fields:
        kwargs["support_radius"] = float(fields["support_radius"])
    unknown = set(fields) - {"kind", "strength", "width", "support_radius"}
    if unknown:
        raise DomainError(f"{path}: unknown keys {sorted(unknown)}")
    return PotentialSpec(**kwargs)


# --- zero-energy kernels and the trace formula ---------------------------


@dataclass(frozen=True)
class ZeroEnergyKernels:
    """Nystrom discretization of the zero-energy kernel algebra.

    Matrices are stored in the sqrt(weight)-scaled representation, in
    which the weighted L2 inner product becomes the plain dot product:
    symmetric operators stay symmetric, projectors are orthogonal, and
    traces are basis-invariant.  ``M00`` carries the log kernel with the
    e^gamma/2 constant, ``N00`` the bare log kernel; both have the
    signature diagonal U plus the singularity-corrected Nystrom part.
    """

    points: np.ndarray        # mesh nodes, shape (n, 2)
    weights: np.ndarray       # quadrature weights (cell areas)
    U: np.ndarray             # sign of V at the nodes (+1 for V >= 0)
    v: np.ndarray             # sqrt(|V|) at the nodes (unweighted)
    alpha: float              # integral of |V|
    M00: np.ndarray
    N00: np.ndarray
    P: np.ndarray             # rank-1 projector onto v
    Q: np.ndarray             # complement projector
    mass_reduced: float

    @property
    def size(self):
        return self.points.shape[0]


def assemble_zero_energy_kernels(potential, mesh_n, mass_reduced):
    """Build the zero-energy kernel matrices on a uniform midpoint mesh.

    The mesh covers [-support_radius, support_radius]^2 with mesh_n cells
    per axis.  Off-diagonal entries sample the log kernels directly; the
    diagonal replaces the singular sample by the exact average of ln|x-y|
    over a disk of the cell's area, ln(rho) - 1/2 with rho = h/sqrt(pi).
    """
    if mesh_n < 8:
        raise DomainError("mesh_n must be at least 8 per axis")
    if not mass_reduced > 0:
        raise DomainError("mass_reduced must be positive")
    L = potential.support_radius
    h = 2.0 * L / mesh_n
    centers = -L + h * (np.arange(mesh_n) + 0.5)
    gx, gy = np.meshgrid(centers, centers, indexing="ij")
    points = np.stack([gx.ravel(), gy.ravel()], axis=1)
    n = points.shape[0]
    weights = np.full(n, h * h)

    V = np.asarray(potential.evaluate(points[:, 0], points[:, 1]), dtype=float)
    alpha = float(weights @ np.abs(V))
    if alpha <= 0.0:
        raise DegenerateInputError(
            "potential vanishes on the mesh: alpha = 0, projector undefined"
        )
    U = np.where(V >= 0.0, 1.0, -1.0)
    v = np.sqrt(np.abs(V))
    vt = np.sqrt(weights) * v                     # sqrt(w) v, scaled basis

    sq = np.einsum("id,id->i", points, points)
    dist2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.fill_diagonal(dist2, 1.0)
    log_dist = 0.5 * np.log(np.maximum(dist2, 1e-300))
    rho = h / math.sqrt(PI)                        # equal-area disk radius
    np.fill_diagonal(log_dist, math.log(rho) - 0.5)

    vv = np.outer(vt, vt)
    factor = -mass_reduced / PI                    # -(1/2pi) * 2m, hbar = 1
    N00 = np.diag(U) + factor * vv * log_dist
    M00 = np.diag(U) + factor * vv * (log_dist + (EULER_GAMMA - LN2))

    P = np.outer(vt, vt) / alpha
    Q = np.eye(n) - P
    return ZeroEnergyKernels(
        points=points,
        weights=weights,
        U=U,
        v=v,
        alpha=alpha,
        M00=M00,
        N00=N00,
        P=P,
        Q=Q,
        mass_reduced=mass_reduced,
    )


def _canonical_order(kernels):
    keys = np.stack(
        [kernels.points[:, 0], kernels.points[:, 1], kernels.weights], axis=1
    )
    return np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))


def _perp_basis(u):
    # Householder reflector mapping e0 to u; its remaining columns span
    # the orthogonal complement of u
    n = u.shape[0]
    s = u.copy()
    s[0] += math.copysign(1.0, u[0]) if u[0] != 0 else 1.0
    s /= np.linalg.norm(s)
    H = np.eye(n) - 2.0 * np.outer(s, s)
    return H[:, 1:]


def compressed_kernel(kernels):
    """The M00 kernel compressed to the complement of the potential mode,
    together with its condition number."""
    order = _canonical_order(kernels)
    vt = (np.sqrt(kernels.weights) * kernels.v)[order]
    u = vt / math.sqrt(kernels.alpha)
    M = kernels.M00[np.ix_(order, order)]
    B = _perp_basis(u)
    C = B.T @ M @ B
    eigs = np.linalg.eigvalsh(C)
    small = np.abs(eigs).min()
    cond = np.abs(eigs).max() / small if small > 0 else math.inf
    return C, B, u, M, cond, order


def kernel_condition_number(kernels):
    """Condition number of the compressed zero-energy kernel."""
    return compressed_kernel(kernels)[4]


def _trace_formula(C, B, u, M, N, alpha):
    Mu = M @ u
    g = B.T @ Mu
    middle = float(g @ np.linalg.solve(C, g))
    first = float(u @ (N @ u))
    Qu = u - u * float(u @ u)
    last = float(u @ (M @ Qu))
    return (2.0 * PI / alpha) * (first - middle + last)


def scattering_length_report(kernels):
    """Condition number and 1/a in one pass (shared factorization)."""
    C, B, u, M, cond, order = compressed_kernel(kernels)
    if not np.isfinite(cond) or cond > RESONANCE_CONDITION_LIMIT:
        raise ResonanceError(
            "zero-energy kernel numerically singular "
            f"(condition number {cond:.3e}): half-bound state or eigenvalue "
            "at zero energy",
            condition_number=cond,
        )
    N = kernels.N00[np.ix_(order, order)]
    inv_a = _trace_formula(C, B, u, M, N, kernels.alpha)
    return {"inv_a": inv_a, "condition_number": cond}


def inverse_scattering_length(kernels):
    """Trace-formula value of 1/a from the zero-energy kernels.

    1/a = (2 pi / alpha) Tr[ P N00 P - P M00 Q D0 M00 + P M00 Q ], with D0
    the inverse of the Q-compressed M00 extended by zero on the range of P.
    The last trace vanishes identically (QP = 0 under trace cyclicity) and
    is kept as a cross-check, entering only at rounding level.

    Mesh points are canonically ordered internally, so the value is
    bit-identical under permutations of the input mesh.
    """
    return scattering_length_report(kernels)["inv_a"]


# --- radial-equation oracle ----------------------------------------------


def fit_log_asymptote(r, values):
    """Least-squares fit of u(r) = c ln(r / a_std) on sample pairs.

    Returns (c, a_std, residual) where residual is the rms misfit
    relative to the rms of the samples.  A vanishing slope c means the
    samples carry no logarithmic component, so a_std is undefined.
    """
    r = np.asarray(r, dtype=float)
    values = np.asarray(values, dtype=float)
    if r.size < 2:
        raise DomainError("fit needs at least two samples")
    design = np.stack([np.log(r), np.ones_like(r)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(design, values, rcond=None)
    scale = max(float(np.sqrt(np.mean(values**2))), 1e-300)
    resid = float(
        np.sqrt(np.mean((design @ np.array([slope, intercept]) - values) ** 2))
    ) / scale
    if abs(slope) <= 1e-13 * max(abs(intercept), 1.0):
        raise OracleUnreliableError(
            "no logarithmic component in the exterior solution "
            "(slope ~ 0): scattering length undefined",
            residual=resid,
        )
    log_a = -intercept / slope
    a_std = math.exp(log_a) if abs(log_a) < 700.0 else (
        math.inf if log_a > 0 else 0.0
    )
    return float(slope), a_std, resid


_FIT_RESIDUAL_LIMIT = 1e-6


def radial_scattering_length_oracle(potential, mass_reduced, r_max):
    """1/a_std from the zero-energy radial equation (independent check).

    Integrates the regular s-wave solution of
    psi'' + psi'/r = 2 m V(r) psi outward and fits psi = c ln(r/a_std) on
    [2 * support_radius, r_max], where the equation is free.  The state is
    renormalized between segments so arbitrarily deep wells cannot
    overflow; only the (psi, psi') ray matters for the fit.
    """
    if not potential.is_radial:
        raise DomainError("radial oracle requires a radially symmetric potential")
    support = potential.support_radius
    if not r_max >= 3.0 * support:
        raise DomainError("r_max must be at least 3 * support_radius")

    def rhs_full(r, y):
        psi, dpsi = y
        return (dpsi, 2.0 * mass_reduced * potential.radial_profile(r) * psi - dpsi / r)

    r0 = 1e-8 * support
    V0 = float(potential.radial_profile(0.0))
    state = np.array([1.0, mass_reduced * V0 * r0])

    boundaries = list(np.linspace(r0, r_max, 128))
    for brk in (potential.width, support, 2.0 * support):
        if r0 < brk < r_max:
            boundaries.append(brk)
    boundaries = sorted(set(boundaries))

    fit_start = 2.0 * support
    fit_r, fit_u = [], []
    for left, right in zip(boundaries[:-1], boundaries[1:]):
        sol = solve_ivp(
            rhs_full,
            (left, right),
            state,
            method="DOP853",
            rtol=1e-12,
            atol=1e-14 * max(1.0, float(np.abs(state).max())),
        )
        if not sol.success:
            raise OracleUnreliableError(f"radial integration failed: {sol.message}")
        state = sol.y[:, -1].copy()
        if right >= fit_start:
            fit_r.append(right)
            fit_u.append(state[0])
        else:
            scale = np.abs(state).max()
            if scale > 1e100:       # keep the ray, drop the magnitude
                state /= scale
    if len(fit_r) < 4:
        raise OracleUnreliableError("fit window too small; increase r_max")
    slope, a_std, resid = fit_log_asymptote(np.array(fit_r), np.array(fit_u))
    if resid > _FIT_RESIDUAL_LIMIT:
        raise OracleUnreliableError(
            f"log-asymptote fit residual {resid:.3e} exceeds "
            f"{_FIT_RESIDUAL_LIMIT}",
            residual=resid,
        )
    return 1.0 / a_std
