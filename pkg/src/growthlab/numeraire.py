r"""Wealth dynamics and the simulated growth-optimal portfolio.

For a predictable fraction process ``f`` the discrete log wealth splits into
a finite-variation part and a martingale part,

    dB_k = (<f_k, c_k a_k> - 0.5 <f_k, c_k f_k>) dG_k,
    dL_k = <f_k, dM_k>,        log X_k = B_k + L_k,

mirroring the continuous-time decomposition. The growth-optimal wealth uses
the constrained maximizer of the drift-rate objective per step.

Distances between wealth processes are measured on the pair (B, L): total
variation of the drift gap plus quadratic variation of the martingale gap,
which dominates the uniform gap of the log-wealth paths.
"""

from dataclasses import dataclass

import numpy as np

from .constraints import FullSpace
from .errors import DimensionMismatch
from .quadform import cov_norm, nullspace_split, optimal_fraction_batch

__all__ = [
    "WealthPaths", "GrowthPath", "growth_rate", "growth_path", "wealth_paths",
    "numeraire_fractions", "numeraire_paths", "wealth_process_gap",
    "relative_log_error", "terminal_deflation",
]


@dataclass
class WealthPaths:
    """Log-wealth decomposition for a batch of paths.

    dB, dL have shape (n_paths, n_steps); fractions is either (n_steps, dim)
    for a deterministic strategy or (n_paths, n_steps, dim) path by path.
    """

    fractions: np.ndarray
    dB: np.ndarray
    dL: np.ndarray

    @property
    def log_wealth(self):
        return np.cumsum(self.dB + self.dL, axis=1)

    @property
    def terminal_log_wealth(self):
        return np.sum(self.dB, axis=1) + np.sum(self.dL, axis=1)

    @property
    def terminal_wealth(self):
        return np.exp(self.terminal_log_wealth)


def growth_rate(c, drift, fraction):
    """Instantaneous growth rate <f, c a> - 0.5 <f, c f> of a fraction."""
    c = np.asarray(c, dtype=float)
    a = np.asarray(drift, dtype=float)
    f = np.asarray(fraction, dtype=float)
    ca = np.einsum("ij,...j->...i", c, a)
    return np.einsum("...i,...i->...", f, ca) - 0.5 * np.einsum(
        "...i,ij,...j->...", f, c, f
    )


def _broadcast_fractions(fractions, n_paths, n_steps, dim):
    f = np.asarray(fractions, dtype=float)
    if f.shape == (dim,):
        f = np.broadcast_to(f, (n_steps, dim))
    if f.shape == (n_steps, dim):
        return f, False
    if f.shape == (n_paths, n_steps, dim):
        return f, True
    raise DimensionMismatch(
        f"fractions shape {f.shape} incompatible with "
        f"{(n_paths, n_steps, dim)} paths"
    )


def wealth_paths(bundle, fractions, drift=None):
    """Log-wealth decomposition of a predictable fraction process.

    drift overrides the bundle's reference drift in the finite-variation
    part, per step (N, d) or per path (P, N, d); the martingale part always
    uses the bundle's noise increments. The caller is responsible for
    predictability: a path-dependent fraction at step k must only use
    information up to step k - 1.
    """
    f, pathwise = _broadcast_fractions(
        fractions, bundle.n_paths, bundle.n_steps, bundle.dim
    )
    a = bundle.drift if drift is None else np.asarray(drift, dtype=float)
    if a.ndim == 1:
        a = np.broadcast_to(a, (bundle.n_steps, bundle.dim))
    if a.ndim == 3:
        ca = np.einsum("kij,pkj->pki", bundle.cov, a)
        pathwise_drift = True
    else:
        ca = np.einsum("kij,kj->ki", bundle.cov, a)
        pathwise_drift = False
    if pathwise or pathwise_drift:
        if not pathwise:
            f = np.broadcast_to(f[None, :, :], bundle.dM.shape)
        lin = np.einsum("pki,pki->pk", f, ca) if pathwise_drift \
            else np.einsum("pki,ki->pk", f, ca)
        quad = np.einsum("pki,kij,pkj->pk", f, bundle.cov, f)
        dB = (lin - 0.5 * quad) * bundle.dG[None, :]
        dL = np.einsum("pki,pki->pk", f, bundle.dM)
    else:
        lin = np.einsum("ki,ki->k", f, ca)
        quad = np.einsum("ki,kij,kj->k", f, bundle.cov, f)
        dB = np.broadcast_to(((lin - 0.5 * quad) * bundle.dG)[None, :],
                             (bundle.n_paths, bundle.n_steps)).copy()
        dL = np.einsum("ki,pki->pk", f, bundle.dM)
    return WealthPaths(fractions=f, dB=dB, dL=dL)


def _constraint_at(constraint, k):
    if isinstance(constraint, (list, tuple)):
        return constraint[k]
    return constraint


def numeraire_fractions(bundle, constraint, *, drifts=None):
    """Optimal fraction per step (and per path when drifts are path based).

    constraint is a single set or a per-step sequence. drifts defaults to
    the market reference drift; pass an array of shape (n_paths, n_steps,
    dim) for estimated, path-dependent drifts. Duplicate drift rows within
    a step are solved once and fanned back out.
    """
    if drifts is None:
        out = np.empty((bundle.n_steps, bundle.dim))
        for k in range(bundle.n_steps):
            out[k] = optimal_fraction_batch(
                bundle.cov[k], bundle.drift[k], _constraint_at(constraint, k)
            )
        return out
    drifts = np.asarray(drifts, dtype=float)
    if drifts.shape != (bundle.n_paths, bundle.n_steps, bundle.dim):
        raise DimensionMismatch(
            f"drift array shape {drifts.shape} does not match bundle"
        )
    out = np.empty_like(drifts)
    for k in range(bundle.n_steps):
        split = nullspace_split(bundle.cov[k])
        cset = _constraint_at(constraint, k)
        rows = drifts[:, k, :]
        if isinstance(cset, FullSpace):
            # Plain range projection; deduplication buys nothing here.
            out[:, k, :] = optimal_fraction_batch(
                bundle.cov[k], rows, cset, split=split
            )
            continue
        uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
        sol = optimal_fraction_batch(bundle.cov[k], uniq, cset, split=split)
        out[:, k, :] = sol[inverse]
    return out


def numeraire_paths(bundle, constraint, *, drifts=None, true_drift=None):
    """Wealth paths of the growth-optimal portfolio under a constraint set.

    drifts feeds the per-step optimization (estimated drift); true_drift
    feeds the realized finite-variation part (defaults to the bundle's).
    """
    fractions = numeraire_fractions(bundle, constraint, drifts=drifts)
    return wealth_paths(bundle, fractions, drift=true_drift)


@dataclass
class GrowthPath:
    """Growth integrand of the optimal fraction per step plus its integral."""

    integrand: np.ndarray
    cumulative: np.ndarray
    unconstrained_bound: np.ndarray

    @property
    def total(self):
        return float(self.cumulative[-1])


def growth_path(cov, drift, constraint, dG):
    """Deterministic growth of the constrained optimum along a step schedule.

    cov is (N, d, d), drift (N, d), dG (N,). The integrand sits in
    [0, 0.5 |a|_c^2] per step: zero is feasible, and the unconstrained
    optimum caps the objective.
    """
    cov = np.asarray(cov, dtype=float)
    drift = np.asarray(drift, dtype=float)
    dG = np.asarray(dG, dtype=float)
    n = cov.shape[0]
    integrand = np.empty(n)
    bound = np.empty(n)
    for k in range(n):
        f = optimal_fraction_batch(cov[k], drift[k], _constraint_at(constraint, k))
        integrand[k] = growth_rate(cov[k], drift[k], f)
        bound[k] = 0.5 * cov_norm(cov[k], drift[k]) ** 2
    cumulative = np.concatenate(([0.0], np.cumsum(integrand * dG)))
    return GrowthPath(integrand=integrand, cumulative=cumulative,
                      unconstrained_bound=bound)


def wealth_process_gap(a, b, dG=None):
    """Pathwise distance between two wealth decompositions.

    Returns per-path arrays: fv = sum |dB_a - dB_b| (total variation of the
    drift gap), qv = sum (dL_a - dL_b)^2 (quadratic variation of the
    martingale gap), and sup = max_k |log X_a - log X_b| on the grid.
    """
    if a.dB.shape != b.dB.shape:
        raise DimensionMismatch(
            f"wealth shapes {a.dB.shape} and {b.dB.shape} differ"
        )
    fv = np.sum(np.abs(a.dB - b.dB), axis=1)
    qv = np.sum((a.dL - b.dL) ** 2, axis=1)
    gap = np.cumsum((a.dB + a.dL) - (b.dB + b.dL), axis=1)
    sup = np.max(np.abs(gap), axis=1)
    return {"fv": fv, "qv": qv, "sup": sup}


def relative_log_error(a, b):
    """Terminal relative wealth errors in both orientations.

    max over paths of |X_a / X_b - 1| and |X_b / X_a - 1|, computed through
    the log difference for stability.
    """
    diff = a.terminal_log_wealth - b.terminal_log_wealth
    return {
        "a_over_b": float(np.max(np.abs(np.expm1(diff)))),
        "b_over_a": float(np.max(np.abs(np.expm1(-diff)))),
    }


def terminal_deflation(candidate, benchmark):
    """Sample mean of X_T / Xhat_T; at or below one when the benchmark is
    the growth-optimal wealth for an admissible strategy family."""
    ratio = np.exp(candidate.terminal_log_wealth - benchmark.terminal_log_wealth)
    return float(np.mean(ratio)), float(np.std(ratio) / np.sqrt(ratio.size))
