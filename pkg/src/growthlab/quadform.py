r"""Degenerate quadratic forms and the constrained growth maximizer.

The growth-optimal fraction for covariance rate ``c`` (symmetric PSD), drift
``a``, and constraint set ``K`` is

    argmax_{f in K ∩ N⊥} ( <f, c a> - 0.5 <f, c f> ),

where ``N`` is the nullspace of ``c`` and ``N⊥`` its orthogonal complement.
Restricting to ``N⊥`` makes the objective strictly concave, so the maximizer
is unique. With ``K`` the full space the solution is the range-projected
drift; in general it is computed by accelerated projected gradient with step
``1 / lambda_max(c)``, the feasible projection being exact per constraint
variant and a Dykstra alternation with the range projector when ``c`` is
rank-deficient.
"""

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet, FullSpace, dykstra_project
from .errors import DimensionMismatch, InfeasibleConstraint, NonConvergence

SOLVER_MAX_ITER = 100_000
SOLVER_RESIDUAL_TOL = 1e-8
FIXED_POINT_TOL = 1e-10
NULLSPACE_RTOL = 1e-12


def check_psd_matrix(c, clock_normalized=False, sym_tol=1e-12, trace_tol=1e-10):
    """Validate a symmetric PSD matrix; optionally require unit trace."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionMismatch(f"covariance must be square, got shape {c.shape}")
    scale = max(1.0, float(np.max(np.abs(c))))
    if np.max(np.abs(c - c.T)) > sym_tol * scale:
        raise ValueError("covariance is not symmetric")
    w = np.linalg.eigvalsh(0.5 * (c + c.T))
    if w[0] < -1e-10 * max(scale, 1.0):
        raise ValueError(f"covariance has negative eigenvalue {w[0]:.3e}")
    if clock_normalized and abs(np.trace(c) - 1.0) > trace_tol:
        raise ValueError(f"clock-normalized covariance needs trace 1, got {np.trace(c)!r}")
    return c


def cov_inner(c, x, y):
    """Pseudo inner product <x, c y>, vectorized over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    if x.shape[-1] != c.shape[0] or y.shape[-1] != c.shape[1]:
        raise DimensionMismatch(
            f"vectors of dim {x.shape[-1]}/{y.shape[-1]} against matrix {c.shape}"
        )
    return np.einsum("...i,ij,...j->...", x, c, y)


def cov_norm(c, x):
    """Seminorm |x|_c = sqrt(<x, c x>); clamps tiny negative roundoff."""
    return np.sqrt(np.maximum(cov_inner(c, x, x), 0.0))


@dataclass(frozen=True)
class NullspaceSplit:
    """Orthonormal split of R^d into null(c) and its complement."""

    null_basis: np.ndarray   # (d, k)
    range_basis: np.ndarray  # (d, d - k)
    threshold: float
    eigenvalues: np.ndarray

    @property
    def dim(self):
        return self.null_basis.shape[0]

    @property
    def null_dim(self):
        return self.null_basis.shape[1]

    @property
    def range_dim(self):
        return self.range_basis.shape[1]

    def project_range(self, x):
        x = np.asarray(x, dtype=float)
        if self.null_dim == 0:
            return x.copy()
        r = self.range_basis
        return np.einsum("...j,ij->...i", np.einsum("...i,ij->...j", x, r), r)

    def project_null(self, x):
        return np.asarray(x, dtype=float) - self.project_range(x)


def nullspace_split(c):
    """Eigendecomposition split with cutoff 1e-12 * trace(c) (1 if trace is 0)."""
    c = check_psd_matrix(c)
    trace = float(np.trace(c))
    threshold = NULLSPACE_RTOL * trace if trace > 0.0 else 1.0
    w, v = np.linalg.eigh(0.5 * (c + c.T))
    null_mask = w <= threshold
    return NullspaceSplit(
        null_basis=v[:, null_mask].copy(),
        range_basis=v[:, ~null_mask].copy(),
        threshold=threshold,
        eigenvalues=w.copy(),
    )


def _check_null_in_constraint(constraint, split, tol=1e-9):
    # Weak feasibility check: unit nullspace directions (both signs) must be
    # fixed points of the constraint projection, else the nullspace is not
    # contained in the constraint set and the problem is rejected.
    if split.null_dim == 0:
        return
    for j in range(split.null_dim):
        v = split.null_basis[:, j]
        for s in (1.0, -1.0):
            p = constraint.project((s * v)[None, :])[0]
            if np.linalg.norm(p - s * v) > tol:
                raise InfeasibleConstraint(
                    "constraint set does not contain the covariance nullspace "
                    f"direction {np.round(v, 6).tolist()}"
                )


def _is_isotropic(c, eigenvalues, rel=1e-12):
    top = eigenvalues[-1]
    if top <= 0.0:
        return False
    if eigenvalues[0] < top * (1.0 - 1e-12):
        return False
    off = c - np.eye(c.shape[0]) * top
    return np.max(np.abs(off)) <= rel * max(top, 1.0)


def feasible_projector(constraint, split, dykstra_tol=1e-13, dykstra_cap=4000):
    """Euclidean projection onto (constraint ∩ N⊥), vectorized over rows."""
    if isinstance(constraint, FullSpace):
        return split.project_range
    if split.null_dim == 0:
        return constraint.project

    def proj(x):
        return dykstra_project(
            x, [constraint.project, split.project_range],
            tol=dykstra_tol, max_iter=dykstra_cap,
        )

    return proj


def project_feasible(constraint, split, x):
    """Projection of points onto the feasible slice K ∩ N⊥."""
    x = np.asarray(x, dtype=float)
    proj = feasible_projector(constraint, split)
    if x.ndim == 1:
        return proj(x[None, :])[0]
    return proj(x)


def optimal_fraction_batch(c, drifts, constraint, *, split=None,
                           residual_tol=SOLVER_RESIDUAL_TOL,
                           max_iter=SOLVER_MAX_ITER):
    """Solve the constrained growth maximization for a batch of drift rows
    sharing one covariance and one constraint set. Returns an array matching
    ``drifts`` in shape."""
    c = np.asarray(c, dtype=float)
    drifts = np.asarray(drifts, dtype=float)
    if drifts.shape[-1] != c.shape[0]:
        raise DimensionMismatch(
            f"drift dim {drifts.shape[-1]} does not match covariance {c.shape}"
        )
    single = drifts.ndim == 1
    rows = np.atleast_2d(drifts)
    if split is None:
        split = nullspace_split(c)
    if not isinstance(constraint, ConstraintSet):
        raise InfeasibleConstraint(f"constraint must be a ConstraintSet, got {constraint!r}")
    constraint.validate(c.shape[0])
    _check_null_in_constraint(constraint, split)

    top = float(split.eigenvalues[-1]) if split.eigenvalues.size else 0.0
    if split.range_dim == 0 or top <= split.threshold:
        out = np.zeros_like(rows)
        return out[0] if single else out

    if isinstance(constraint, FullSpace):
        out = split.project_range(rows)
        return out[0] if single else out
    if _is_isotropic(c, split.eigenvalues):
        # c proportional to the identity: the objective is a scaled Euclidean
        # distance to the drift, so the maximizer is the plain projection.
        out = constraint.project(rows)
        return out[0] if single else out

    proj = feasible_projector(constraint, split)
    out = _fista(c, rows, proj, top, residual_tol, max_iter)
    return out[0] if single else out


def optimal_fraction(c, drift, constraint, **kwargs):
    """Growth-optimal fraction for a single drift vector."""
    return optimal_fraction_batch(c, np.asarray(drift, dtype=float), constraint, **kwargs)


def _fista(c, rows, proj, lipschitz, residual_tol, max_iter):
    step = 1.0 / lipschitz
    ca = rows @ c.T
    x = proj(rows @ c.T * step)  # cheap feasible start aligned with the gradient
    z = x.copy()
    t = 1.0
    check_every = 8
    for it in range(1, max_iter + 1):
        grad = ca - z @ c.T
        x_new = proj(z + step * grad)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        momentum = (t - 1.0) / t_new
        # Function-free adaptive restart: kill momentum when it points against
        # the last move.
        dx = x_new - x
        if np.sum(dx * (x_new - z)) < 0.0:
            z = x_new.copy()
            t_new = 1.0
        else:
            z = x_new + momentum * dx
        x_prev, x, t = x, x_new, t_new
        if it % check_every == 0 or it == max_iter:
            grad_x = ca - x @ c.T
            mapped = proj(x + step * grad_x)
            residual = np.linalg.norm(mapped - x, axis=1) / step
            if np.max(residual) <= residual_tol:
                return mapped
            if np.max(np.abs(x - x_prev)) < FIXED_POINT_TOL and np.max(residual) <= 10 * residual_tol:
                return mapped
    raise NonConvergence(
        f"projected gradient did not reach residual {residual_tol:g} in {max_iter} iterations"
    )
