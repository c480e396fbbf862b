r"""Response of the optimal log wealth to a small measure tilt.

With the constraint set equal to the full space, the optimal fraction under
the tilted measure is the tilted drift itself, and pure algebra on the
discrete increments gives

    (1/eps) log(X^eps / X^0)
        = -(eps/2) sum |lam^eps|_c^2 dG + sum <lam^eps, dM>,

an exact identity per path, not an approximation. Sending eps down produces
the first-order limit sum <lam0, dM> with lam0 = Z1_- lam1, and the
centered, rescaled remainder converges to the second-order limit

    -(1/2) sum |lam0|_c^2 dG - sum <lam0 (Z1_- - 1), dM>.

Everything here restricts to the unconstrained market; a binding constraint
couples the optimum to the set geometry and is out of scope.
"""

from dataclasses import dataclass

import numpy as np

from .constraints import FullSpace
from .errors import InvalidSpec
from .market import girsanov_drift, tilt_decomposition
from .numeraire import numeraire_fractions, wealth_paths

__all__ = [
    "ExpansionRecord", "response_quotient", "expansion_record",
    "first_order_check", "second_order_check",
]


def _quad(cov, field_a, field_b, dG):
    return np.einsum("pki,kij,pkj->pk", field_a, cov, field_b) * dG[None, :]


def response_quotient(bundle, record, eps):
    """The rescaled log-wealth response at one tilt size, both routes.

    Returns a dict with cumulative paths "direct" (from the two wealth
    processes) and "formula" (the right side of the identity), both of
    shape (P, N + 1), plus the formula's finite-variation and martingale
    increments for distance computations.
    """
    if not 0.0 < eps <= 1.0:
        raise InvalidSpec(f"tilt size must lie in (0, 1], got {eps}")
    decomp = tilt_decomposition(bundle, record, eps)
    a_eps = girsanov_drift(bundle, decomp)
    frac_eps = numeraire_fractions(bundle, FullSpace(), drifts=a_eps)
    frac_ref = numeraire_fractions(bundle, FullSpace())
    w_eps = wealth_paths(bundle, frac_eps)
    w_ref = wealth_paths(bundle, frac_ref)
    diff = (w_eps.dB + w_eps.dL) - (w_ref.dB + w_ref.dL)
    direct = np.concatenate(
        (np.zeros((bundle.n_paths, 1)), np.cumsum(diff / eps, axis=1)), axis=1)

    lam = decomp.lam_path
    fv_inc = -(eps / 2.0) * _quad(bundle.cov, lam, lam, bundle.dG)
    mart_inc = np.einsum("pki,pki->pk", lam, bundle.dM)
    formula = np.concatenate(
        (np.zeros((bundle.n_paths, 1)), np.cumsum(fv_inc + mart_inc, axis=1)),
        axis=1)
    return {"direct": direct, "formula": formula,
            "fv_increments": fv_inc, "mart_increments": mart_inc,
            "lam_path": lam}


@dataclass
class ExpansionRecord:
    """Limit paths of the tilt expansion, cumulative from zero."""

    lam0: np.ndarray
    first_order: np.ndarray
    second_order: np.ndarray


def expansion_record(bundle, record):
    """First- and second-order limit paths from the base density."""
    z_left = record.z[:, :-1]
    lam0 = z_left[:, :, None] * record.lam1[None, :, :]
    first_inc = np.einsum("pki,pki->pk", lam0, bundle.dM)
    second_inc = -0.5 * _quad(bundle.cov, lam0, lam0, bundle.dG)
    second_inc -= (z_left - 1.0) * first_inc
    zeros = np.zeros((bundle.n_paths, 1))
    return ExpansionRecord(
        lam0=lam0,
        first_order=np.concatenate((zeros, np.cumsum(first_inc, axis=1)), axis=1),
        second_order=np.concatenate((zeros, np.cumsum(second_inc, axis=1)), axis=1),
    )


def _order_fit(eps_ladder, means):
    if np.max(means) <= 1e-14:
        return None
    y = np.log(np.maximum(means, np.max(means) * 1e-300))
    return float(np.polyfit(np.log(eps_ladder), y, 1)[0])


def first_order_check(bundle, record, eps_ladder):
    """Distance from the rescaled response to its first-order limit.

    Per tilt size: finite-variation error (total variation of the drift
    part, which the limit lacks entirely) and quadratic-variation error of
    the martingale part. Both scale like eps; the table carries the fitted
    order and consecutive ratios.
    """
    eps_ladder = np.asarray(eps_ladder, dtype=float)
    exp_rec = expansion_record(bundle, record)
    lim_inc = np.diff(exp_rec.first_order, axis=1)
    fv_rows, qv_rows = [], []
    for eps in eps_ladder:
        q = response_quotient(bundle, record, eps)
        fv_rows.append(np.sum(np.abs(q["fv_increments"]), axis=1))
        qv_rows.append(np.sum((q["mart_increments"] - lim_inc) ** 2, axis=1))
    return _error_table(eps_ladder, fv_rows, qv_rows, exp_rec)


def second_order_check(bundle, record, eps_ladder):
    """Distance from the centered, rescaled remainder to the second-order
    limit; errors scale like eps again."""
    eps_ladder = np.asarray(eps_ladder, dtype=float)
    exp_rec = expansion_record(bundle, record)
    first_inc = np.diff(exp_rec.first_order, axis=1)
    second_inc = np.diff(exp_rec.second_order, axis=1)
    lam0 = exp_rec.lam0
    z_left = record.z[:, :-1]
    fv_rows, qv_rows = [], []
    for eps in eps_ladder:
        q = response_quotient(bundle, record, eps)
        lam = q["lam_path"]
        rem_fv = -0.5 * _quad(bundle.cov, lam, lam, bundle.dG)
        rem_mart = (q["mart_increments"] - first_inc) / eps
        lim_fv = -0.5 * _quad(bundle.cov, lam0, lam0, bundle.dG)
        lim_mart = second_inc - lim_fv
        fv_rows.append(np.sum(np.abs(rem_fv - lim_fv), axis=1))
        qv_rows.append(np.sum((rem_mart - lim_mart) ** 2, axis=1))
    return _error_table(eps_ladder, fv_rows, qv_rows, exp_rec)


def _error_table(eps_ladder, fv_rows, qv_rows, exp_rec):
    fv = np.stack(fv_rows)
    qv = np.stack(qv_rows)
    fv_mean = fv.mean(axis=1)
    qv_mean = qv.mean(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        fv_ratios = fv_mean[:-1] / fv_mean[1:]
    return {
        "eps": eps_ladder,
        "fv_error": fv_mean,
        "fv_stderr": fv.std(axis=1) / np.sqrt(fv.shape[1]),
        "qv_error": qv_mean,
        "qv_stderr": qv.std(axis=1) / np.sqrt(qv.shape[1]),
        "fv_ratios": fv_ratios,
        "order_fv": _order_fit(eps_ladder, fv_mean),
        # qv is a squared distance, so first-order behavior means order 2
        # in eps; report half the fitted exponent for comparability.
        "order_qv": None if _order_fit(eps_ladder, qv_mean) is None
        else 0.5 * _order_fit(eps_ladder, qv_mean),
        "per_path": {"fv": fv, "qv": qv},
        "expansion": exp_rec,
    }
