"""RBF warp models: fitting, evaluation, and parameter Jacobians.

A model maps query points p to

    psi(p) = p + sum_i w_i k(|p - c_i|)                      (no affine part)
    psi(p) = A p + t + sum_i w_i k(|p - c_i|)                (affine part)

with the affine part accompanied by the classical side conditions
sum w = 0 and sum w x = 0 per output axis (a bordered saddle system).
TPS requires the affine part (its kernel is only conditionally positive
definite); the Wendland kernel is positive definite and solves directly.

The warp direction is backward: evaluate_field stores, for every output
pixel, the source coordinate to sample.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from . import backend
from .errors import ContractError, DomainError, SolverError, UnsupportedDiagnosticError
from .kernels import KernelFamily, KernelSpec, kernel_dalpha, kernel_eval

_JITTERS = (0.0, 1e-12, 1e-8, 1e-6)
_RESIDUAL_TOL = 1e-8


@dataclass
class WarpModel:
    kernel: KernelSpec
    centers: np.ndarray  # (N, 2)
    coeffs: np.ndarray  # (N, 2)
    affine: np.ndarray | None = None  # (2, 3) as [A | t]
    lambda_reg: float = 0.0
    _lu: tuple | None = field(default=None, repr=False, compare=False)
    _usol: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_centers(self):
        return len(self.centers)


def _kernel_matrix(spec, a, b):
    d = cdist(a, b)
    return np.asarray(kernel_eval(spec, d))


def _poly_block(pts):
    return np.column_stack([np.ones(len(pts)), pts[:, 0], pts[:, 1]])


def _build_system(spec, centers, with_affine, lambda_reg, jitter):
    n = len(centers)
    k = _kernel_matrix(spec, centers, centers)
    k[np.diag_indices(n)] += lambda_reg + jitter
    if not with_affine:
        return k
    p = _poly_block(centers)
    sys = np.zeros((n + 3, n + 3))
    sys[:n, :n] = k
    sys[:n, n:] = p
    sys[n:, :n] = p.T
    return sys


def _solve_with_jitter(spec, centers, with_affine, lambda_reg, rhs):
    last_err = None
    for jitter in _JITTERS:
        sys = _build_system(spec, centers, with_affine, lambda_reg, jitter)
        try:
            lu = scipy.linalg.lu_factor(sys)
            u = scipy.linalg.lu_solve(lu, rhs)
        except (scipy.linalg.LinAlgError, ValueError) as err:
            last_err = err
            continue
        if not np.all(np.isfinite(u)):
            last_err = "non-finite solution"
            continue
        residual = np.abs(sys @ u - rhs).max()
        if residual <= _RESIDUAL_TOL:
            return u, lu
        last_err = f"residual {residual:.3e}"
    raise SolverError(f"singular interpolation system after jitter escalation ({last_err})")


def fit_interpolant(centers, targets, kernel, with_affine=False, lambda_reg=0.0):
    """Solve RBF coefficients (and optional affine part) mapping centers to targets."""
    centers = np.asarray(centers, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if centers.ndim != 2 or centers.shape[1] != 2 or centers.shape != targets.shape:
        raise ContractError(
            f"centers/targets must be matching (N, 2) arrays, got {centers.shape} and {targets.shape}"
        )
    if lambda_reg < 0:
        raise DomainError(f"lambda_reg must be nonnegative, got {lambda_reg}")
    if kernel.family is KernelFamily.TPS and not with_affine:
        raise ContractError("TPS requires the affine part (conditionally positive definite kernel)")
    n = len(centers)
    if with_affine and n < 3:
        raise ContractError(f"affine part needs at least 3 centers, got {n}")
    if n < 1:
        raise ContractError("need at least one center")
    if n > 1 and cdist(centers, centers)[~np.eye(n, dtype=bool)].min() == 0.0:
        raise DomainError("centers must be distinct")

    if with_affine:
        rhs = np.vstack([targets, np.zeros((3, 2))])
    else:
        rhs = targets - centers
    u, lu = _solve_with_jitter(kernel, centers, with_affine, lambda_reg, rhs)
    coeffs = u[:n]
    affine = None
    if with_affine:
        # Per axis the polynomial solution is (const, x, y); store as [A | t].
        a = u[n:]
        affine = np.array(
            [[a[1, 0], a[2, 0], a[0, 0]], [a[1, 1], a[2, 1], a[0, 1]]]
        )
    return WarpModel(
        kernel=kernel,
        centers=centers,
        coeffs=coeffs,
        affine=affine,
        lambda_reg=float(lambda_reg),
        _lu=lu,
        _usol=u,
    )


def _displacement(model, pts):
    if model.kernel.family is KernelFamily.WENDLAND31:
        return backend.rbf_displacement_wendland(
            pts, model.centers, model.coeffs, model.kernel.alpha
        )
    return backend.rbf_displacement_tps(pts, model.centers, model.coeffs)


def evaluate_points(model, pts):
    """Apply the warp map to an (P, 2) array of points."""
    pts = np.asarray(pts, dtype=float)
    disp = _displacement(model, pts)
    if model.affine is not None:
        a, t = model.affine[:, :2], model.affine[:, 2]
        return pts @ a.T + t + disp
    return pts + disp


def evaluate_point(model, p):
    """Apply the warp map to a single 2D point."""
    return evaluate_points(model, np.asarray(p, dtype=float)[None, :])[0]


def evaluate_field(model, frame):
    """Rasterize the map at every pixel center: backward sampling coordinates."""
    from .imageops import DisplacementField

    pts = frame.pixel_centers().reshape(-1, 2)
    coords = evaluate_points(model, pts)
    return DisplacementField(
        coords=coords.reshape(frame.height, frame.width, 2), frame=frame
    )


def _ensure_system(model):
    """Recreate the factorization and stacked solution for deserialized models."""
    if model._lu is not None and model._usol is not None:
        return
    with_affine = model.affine is not None
    sys = _build_system(
        model.kernel, model.centers, with_affine, model.lambda_reg, 0.0
    )
    model._lu = scipy.linalg.lu_factor(sys)
    if with_affine:
        a = model.affine
        poly = np.array([[a[0, 2], a[1, 2]], [a[0, 0], a[1, 0]], [a[0, 1], a[1, 1]]])
        model._usol = np.vstack([model.coeffs, poly])
    else:
        model._usol = model.coeffs


def _basis_rows(model, pts):
    """phi_sys(p): kernel columns plus polynomial columns when affine is on."""
    phi = _kernel_matrix(model.kernel, pts, model.centers)
    if model.affine is not None:
        return np.hstack([phi, _poly_block(pts)])
    return phi


def field_jacobians(model, frame, grid=None):
    """Analytic Jacobians of every pixel's sampling coordinate.

    Returns (j_theta, j_alpha): j_theta has shape (P, N) and holds
    d field_x / d theta_k^x == d field_y / d theta_k^y (axes decouple);
    j_alpha has shape (P, 2) and is zero for TPS.
    """
    _ensure_system(model)
    pts = frame.pixel_centers().reshape(-1, 2)
    n = model.n_centers
    n_sys = n + (3 if model.affine is not None else 0)
    phi = _basis_rows(model, pts)

    # d u / d theta_k = K_sys^{-1} e_k (theta enters only the rhs).
    rhs = np.zeros((n_sys, n))
    rhs[:n, :n] = np.eye(n)
    x = scipy.linalg.lu_solve(model._lu, rhs)
    j_theta = phi @ x

    if model.kernel.family is KernelFamily.TPS:
        return j_theta, np.zeros((len(pts), 2))

    alpha = model.kernel.alpha
    dphi = kernel_dalpha(cdist(pts, model.centers), alpha)
    dk = kernel_dalpha(cdist(model.centers, model.centers), alpha)
    dk_sys = np.zeros((n_sys, n_sys))
    dk_sys[:n, :n] = dk
    du = -scipy.linalg.lu_solve(model._lu, dk_sys @ model._usol)
    j_alpha = dphi @ model._usol[:n] + phi @ du
    return j_theta, j_alpha


def bending_energy(model):
    """TPS smoothness diagnostic w_x^T K w_x + w_y^T K w_y."""
    if model.kernel.family is not KernelFamily.TPS:
        raise UnsupportedDiagnosticError("bending energy is defined for TPS models only")
    k = _kernel_matrix(model.kernel, model.centers, model.centers)
    return float(sum(model.coeffs[:, ax] @ k @ model.coeffs[:, ax] for ax in (0, 1)))
