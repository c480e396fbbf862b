r"""Discretized continuous-path market simulation.

A market is a time grid with a clock increment ``dG_k``, a covariance rate
``c_k`` and a reference drift ``a_k`` per step. Price increments follow

    dS_k = c_k a_k dG_k + sqrt(c_k) sqrt(dG_k) xi_k,      xi_k ~ N(0, I),

so the martingale part ``dM_k = dS_k - c_k a_k dG_k`` has conditional
covariance ``c_k dG_k``. Covariances may be normalized to unit trace, the
clock absorbing the scale, which pins the quadratic-variation speed to the
clock itself.

Path generation is deterministic for a fixed seed regardless of thread
count: paths are split into fixed-size blocks, each block drawing from its
own spawned bit generator in a fixed order.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import (
    DimensionMismatch, InvalidSpec, UnsupportedSignalModel,
)
from .quadform import check_psd_matrix

PATH_BLOCK = 1024
DENSITY_FLOOR = 1e-12
ORTHOGONAL_STREAM = 165


def _as_step_array(value, n_steps, shape_tail, grid, name):
    """Broadcast a constant, per-step array, or callable-of-time to (n_steps, *tail)."""
    if callable(value):
        rows = [np.asarray(value(float(t)), dtype=float) for t in grid[:-1]]
        out = np.stack(rows, axis=0)
    else:
        arr = np.asarray(value, dtype=float)
        if arr.shape == shape_tail:
            out = np.broadcast_to(arr, (n_steps,) + shape_tail).copy()
        elif arr.shape == (n_steps,) + shape_tail:
            out = arr.astype(float, copy=True)
        else:
            raise InvalidSpec(
                f"{name} must have shape {shape_tail} or {(n_steps,) + shape_tail}, "
                f"got {arr.shape}"
            )
    if out.shape != (n_steps,) + shape_tail:
        raise InvalidSpec(f"{name} evaluated to shape {out.shape}")
    return out


def _clock_increments(clock, n_steps, horizon, grid):
    if clock is None or (isinstance(clock, str) and clock == "uniform"):
        return np.full(n_steps, horizon / n_steps)
    if callable(clock):
        vals = np.array([float(clock(float(t))) for t in grid])
        dg = np.diff(vals)
    else:
        dg = np.asarray(clock, dtype=float)
        if dg.shape != (n_steps,):
            raise InvalidSpec(f"explicit clock increments need shape ({n_steps},), got {dg.shape}")
    if np.any(dg < 0.0):
        raise InvalidSpec("clock must be nondecreasing")
    return dg


@dataclass(frozen=True)
class MarketSpec:
    """Static description of a discretized market.

    covariance and drift accept a constant, a per-step array, or a callable
    of time (evaluated at left endpoints). clock is "uniform", an increment
    array, or a callable time change evaluated on the grid.
    """

    dim: int
    n_steps: int
    horizon: float = 1.0
    covariance: object = None
    drift: object = None
    clock: object = "uniform"
    normalize_clock: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidSpec(f"dimension must be positive, got {self.dim}")
        if self.n_steps < 1:
            raise InvalidSpec(f"need at least one step, got {self.n_steps}")
        if self.horizon <= 0.0:
            raise InvalidSpec(f"horizon must be positive, got {self.horizon}")
        if self.covariance is None:
            object.__setattr__(self, "covariance", np.eye(self.dim) / self.dim)
        if self.drift is None:
            object.__setattr__(self, "drift", np.zeros(self.dim))

    @property
    def grid(self):
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def materialize(self):
        """Per-step arrays (dG, cov, sqrt_cov, drift) after normalization."""
        grid = self.grid
        d, n = self.dim, self.n_steps
        dg = _clock_increments(self.clock, n, self.horizon, grid)
        cov = _as_step_array(self.covariance, n, (d, d), grid, "covariance")
        drift = _as_step_array(self.drift, n, (d,), grid, "drift")
        for k in range(n):
            cov[k] = check_psd_matrix(cov[k])
        if self.normalize_clock:
            traces = np.einsum("kii->k", cov)
            live = traces > 0.0
            dg = np.where(live, dg * traces, dg)
            cov[live] /= traces[live, None, None]
        sqrt_cov = np.empty_like(cov)
        for k in range(n):
            w, v = np.linalg.eigh(cov[k])
            sqrt_cov[k] = (v * np.sqrt(np.maximum(w, 0.0))) @ v.T
        return dg, cov, sqrt_cov, drift


@dataclass
class PathBundle:
    """Simulated increments for a batch of paths under one market spec.

    dM holds the martingale increments, dS the full price increments. Both
    have shape (n_paths, n_steps, dim). The per-step structure arrays are
    shared across paths.
    """

    spec: MarketSpec
    seed: int
    dG: np.ndarray
    cov: np.ndarray
    sqrt_cov: np.ndarray
    drift: np.ndarray
    dM: np.ndarray
    dS: np.ndarray = field(init=False)

    def __post_init__(self):
        comp = np.einsum("kij,kj->ki", self.cov, self.drift) * self.dG[:, None]
        self.dS = self.dM + comp[None, :, :]

    @property
    def n_paths(self):
        return self.dM.shape[0]

    @property
    def n_steps(self):
        return self.dM.shape[1]

    @property
    def dim(self):
        return self.dM.shape[2]

    def prices(self, initial=0.0):
        """Cumulative price paths, shape (n_paths, n_steps + 1, dim)."""
        out = np.empty((self.n_paths, self.n_steps + 1, self.dim))
        out[:, 0, :] = initial
        np.cumsum(self.dS, axis=1, out=out[:, 1:, :])
        out[:, 1:, :] += initial
        return out


def _fill_block(dM, sqrt_cov, dG, seed_seq, lo, hi):
    rng = np.random.default_rng(seed_seq)
    xi = rng.standard_normal((hi - lo,) + dM.shape[1:])
    scale = np.sqrt(dG)[:, None]
    np.einsum("pkj,kij->pki", xi, sqrt_cov, out=dM[lo:hi])
    dM[lo:hi] *= scale[None, :, :]


def simulate_paths(spec, n_paths, seed, threads=1):
    """Generate a PathBundle; identical output for any thread count."""
    if n_paths < 1:
        raise InvalidSpec(f"need at least one path, got {n_paths}")
    dg, cov, sqrt_cov, drift = spec.materialize()
    dM = np.empty((n_paths, spec.n_steps, spec.dim))
    n_blocks = (n_paths + PATH_BLOCK - 1) // PATH_BLOCK
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(n_blocks)
    jobs = [
        (children[b], b * PATH_BLOCK, min((b + 1) * PATH_BLOCK, n_paths))
        for b in range(n_blocks)
    ]
    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_fill_block, dM, sqrt_cov, dg, ss, lo, hi)
                for ss, lo, hi in jobs
            ]
            for f in futures:
                f.result()
    else:
        for ss, lo, hi in jobs:
            _fill_block(dM, sqrt_cov, dg, ss, lo, hi)
    return PathBundle(spec=spec, seed=seed, dG=dg, cov=cov,
                      sqrt_cov=sqrt_cov, drift=drift, dM=dM)


def brownian_increments(bundle):
    """Recover the driving standard-normal scaled increments sqrt(dG) xi.

    Only valid when every step covariance has full rank; raises otherwise.
    """
    out = np.empty_like(bundle.dM)
    for k in range(bundle.n_steps):
        w, v = np.linalg.eigh(bundle.cov[k])
        if w[0] <= 1e-12 * max(w[-1], 1.0):
            raise DimensionMismatch("step covariance is singular; increments not recoverable")
        inv_sqrt = (v / np.sqrt(w)) @ v.T
        out[:, k, :] = bundle.dM[:, k, :] @ inv_sqrt.T
    return out


# ---------------------------------------------------------------------------
# Gaussian latent signal: a hidden scalar theta scales the drift direction.
# Every conditional law is Gaussian, so the filter is closed form and the
# information ladder (level n sees a peek at theta with noise sigma_n) is
# exactly computable. Level None stands for the limit: theta revealed.

@dataclass(frozen=True)
class GaussianSignalModel:
    """Latent drift model a = theta * direction with Gaussian prior.

    Level n of the information ladder observes the running path plus one
    peek Y = theta + noise_scales[n] * zeta; the limit level observes theta
    itself. The same zeta is reused across levels so that finer levels are
    genuinely better informed on every single path.
    """

    direction: np.ndarray
    prior_mean: float = 0.0
    prior_std: float = 1.0
    noise_scales: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.direction, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise UnsupportedSignalModel("direction must be a finite vector")
        object.__setattr__(self, "direction", v)
        if self.prior_std <= 0.0:
            raise UnsupportedSignalModel("prior std must be positive")
        scales = self.noise_scales
        if scales is None:
            scales = 2.0 ** -np.arange(1, 9)
        scales = np.asarray(scales, dtype=float)
        if scales.ndim != 1 or np.any(scales < 0.0):
            raise UnsupportedSignalModel("noise scales must be nonnegative")
        if np.any(np.diff(scales) >= 0.0):
            raise UnsupportedSignalModel("noise scales must strictly decrease")
        object.__setattr__(self, "noise_scales", scales)

    @property
    def n_levels(self):
        return self.noise_scales.size


@dataclass
class SignalBundle:
    """Paths of a market whose drift is theta * direction per path.

    base.dM is the shared martingale noise; dS adds the theta-scaled drift
    compensator. theta and zeta are the latent draw and the shared peek
    noise per path.
    """

    base: PathBundle
    model: GaussianSignalModel
    theta: np.ndarray
    zeta: np.ndarray
    dS: np.ndarray

    @property
    def n_paths(self):
        return self.base.n_paths

    def true_drift(self):
        """Per-path drift array theta_p * direction, shape (P, N, d)."""
        v = self.model.direction
        out = self.theta[:, None, None] * v[None, None, :]
        return np.broadcast_to(out, self.base.dM.shape).copy()


def simulate_signal_paths(spec, model, n_paths, seed, threads=1):
    """Simulate paths with hidden drift theta * direction.

    The market spec's own drift field is ignored; the signal model supplies
    it. Draw order is fixed: theta, zeta, then path noise, so results do not
    depend on the thread count.
    """
    if model.direction.shape != (spec.dim,):
        raise DimensionMismatch(
            f"signal direction dim {model.direction.shape} vs market dim {spec.dim}"
        )
    root = np.random.SeedSequence(seed)
    latent_ss, path_ss = root.spawn(2)
    rng = np.random.default_rng(latent_ss)
    theta = model.prior_mean + model.prior_std * rng.standard_normal(n_paths)
    zeta = rng.standard_normal(n_paths)
    base = simulate_paths(
        MarketSpec(dim=spec.dim, n_steps=spec.n_steps, horizon=spec.horizon,
                   covariance=spec.covariance, drift=np.zeros(spec.dim),
                   clock=spec.clock, normalize_clock=spec.normalize_clock),
        n_paths, path_ss, threads=threads)
    cv = np.einsum("kij,j->ki", base.cov, model.direction)
    dS = base.dM + theta[:, None, None] * (cv * base.dG[:, None])[None, :, :]
    return SignalBundle(base=base, model=model, theta=theta, zeta=zeta, dS=dS)


def filtered_drift(signal, level):
    """Posterior-mean drift per path under ladder level ``level``.

    Returns (drift, mean, precision): drift has shape (P, N, d) and is
    predictable (the entry at step k conditions on observations strictly
    before k plus the level's peek); mean and precision are the posterior
    parameters, shape (P, N) and (N,). level None means the revealed limit.
    """
    model, base = signal.model, signal.base
    v = model.direction
    if level is None:
        mean = np.broadcast_to(signal.theta[:, None],
                               (signal.n_paths, base.n_steps)).copy()
        prec = np.full(base.n_steps, np.inf)
        return signal.true_drift(), mean, prec
    if not 0 <= level < model.n_levels:
        raise InvalidSpec(f"ladder level {level} out of range")
    sigma_n = model.noise_scales[level]
    vcv = np.einsum("i,kij,j->k", v, base.cov, v) * base.dG
    info = np.concatenate(([0.0], np.cumsum(vcv)))[:-1]
    stat = np.einsum("pki,i->pk", signal.dS, v)
    stat = np.concatenate(
        (np.zeros((signal.n_paths, 1)), np.cumsum(stat, axis=1)), axis=1)[:, :-1]
    prior_prec = 1.0 / model.prior_std ** 2
    peek_prec = np.inf if sigma_n == 0.0 else 1.0 / sigma_n ** 2
    if np.isinf(peek_prec):
        mean = np.broadcast_to(signal.theta[:, None],
                               (signal.n_paths, base.n_steps)).copy()
        prec = np.full(base.n_steps, np.inf)
    else:
        peek = signal.theta + sigma_n * signal.zeta
        prec = prior_prec + peek_prec + info
        mean = (model.prior_mean * prior_prec
                + peek[:, None] * peek_prec + stat) / prec[None, :]
    drift = mean[:, :, None] * v[None, None, :]
    return drift, mean, prec


def event_probabilities(mean, prec, threshold):
    """Conditional probability P[theta > threshold | info] per path and step."""
    prec = np.broadcast_to(prec[None, :], mean.shape)
    with np.errstate(invalid="ignore"):
        z = (mean - threshold) * np.sqrt(prec)
    out = ndtr(z)
    exact = np.isinf(prec)
    if np.any(exact):
        out = np.where(exact, (mean > threshold).astype(float), out)
    return out


# ---------------------------------------------------------------------------
# Girsanov tilts. The base tilt density is the stochastic exponential of the
# field lam1 against the martingale part, optionally times an orthogonal
# exponential driven by an independent Brownian motion. Mixtures
# (1 - eps) + eps * Z1 interpolate toward the reference measure.

@dataclass(frozen=True)
class TiltSpec:
    """Tilt of the reference measure: field lam1, optional orthogonal factor."""

    lam1: np.ndarray
    orthogonal_vol: float = 0.0
    energy_cap: float = 50.0
    floor: float = DENSITY_FLOOR

    def field(self, n_steps, dim):
        lam = np.asarray(self.lam1, dtype=float)
        if lam.shape == (dim,):
            lam = np.broadcast_to(lam, (n_steps, dim)).copy()
        if lam.shape != (n_steps, dim):
            raise InvalidSpec(f"tilt field shape {lam.shape} unusable for "
                              f"{(n_steps, dim)}")
        return lam


@dataclass
class DensityRecord:
    """Base tilt density Z1 with its building blocks.

    z has shape (P, N + 1), z[:, 0] = 1. orthogonal is the independent
    exponential factor (all ones when the flag is off). floor_hits counts
    paths whose density ever fell below the positivity floor.
    """

    lam1: np.ndarray
    z: np.ndarray
    orthogonal: np.ndarray
    floor_hits: int


def density_paths(bundle, tilt, seed=None):
    """Stochastic-exponential density Z1 of a tilt along simulated paths."""
    lam = tilt.field(bundle.n_steps, bundle.dim)
    lam_sq = np.einsum("ki,kij,kj->k", lam, bundle.cov, lam)
    energy = float(np.sum(lam_sq * bundle.dG))
    if energy > tilt.energy_cap:
        raise InvalidSpec(
            f"tilt energy {energy:.3g} exceeds cap {tilt.energy_cap:.3g}"
        )
    expo = np.einsum("ki,pki->pk", lam, bundle.dM)
    expo -= 0.5 * (lam_sq * bundle.dG)[None, :]
    log_z = np.concatenate(
        (np.zeros((bundle.n_paths, 1)), np.cumsum(expo, axis=1)), axis=1)
    z = np.exp(log_z)
    if tilt.orthogonal_vol != 0.0:
        if seed is None:
            seed = np.random.SeedSequence((int(bundle.seed), ORTHOGONAL_STREAM))
        rng = np.random.default_rng(seed)
        dw = rng.standard_normal((bundle.n_paths, bundle.n_steps))
        dw *= np.sqrt(bundle.dG)[None, :]
        rho = tilt.orthogonal_vol
        log_n = np.cumsum(rho * dw - 0.5 * rho * rho * bundle.dG[None, :], axis=1)
        orth = np.concatenate((np.ones((bundle.n_paths, 1)), np.exp(log_n)), axis=1)
        z = z * orth
    else:
        orth = np.ones_like(z)
    floor_hits = int(np.sum(np.min(z, axis=1) < tilt.floor))
    z = np.maximum(z, tilt.floor)
    return DensityRecord(lam1=lam, z=z, orthogonal=orth, floor_hits=floor_hits)


@dataclass
class DensityDecomposition:
    """Mixture density Z^eps = (1 - eps) + eps Z1 and its factorization.

    lam_path is the predictable tilt field lam^eps = (Z1/Z^eps) lam1 at left
    endpoints, shape (P, N, d). exp_factor is the stochastic exponential
    driven by eps * lam^eps; remainder = density / exp_factor collects the
    orthogonal factor and the mixture's non-exponential part (identically
    one at eps in {0, 1} with the orthogonal factor off).
    """

    eps: float
    density: np.ndarray
    lam_path: np.ndarray
    exp_factor: np.ndarray
    remainder: np.ndarray

    def max_product_error(self):
        return float(np.max(np.abs(self.exp_factor * self.remainder - self.density)))


def tilt_decomposition(bundle, record, eps):
    """Mixture density at size eps with its multiplicative decomposition."""
    if not 0.0 <= eps <= 1.0:
        raise InvalidSpec(f"mixture size must lie in [0, 1], got {eps}")
    z_eps = (1.0 - eps) + eps * record.z
    lam_path = (record.z[:, :-1] / z_eps[:, :-1])[:, :, None] * record.lam1[None, :, :]
    scaled = eps * lam_path
    expo = np.einsum("pki,pki->pk", scaled, bundle.dM)
    expo -= 0.5 * np.einsum("pki,kij,pkj->pk", scaled, bundle.cov, scaled) \
        * bundle.dG[None, :]
    log_e = np.concatenate(
        (np.zeros((bundle.n_paths, 1)), np.cumsum(expo, axis=1)), axis=1)
    exp_factor = np.exp(log_e)
    remainder = z_eps / exp_factor
    return DensityDecomposition(eps=eps, density=z_eps, lam_path=lam_path,
                                exp_factor=exp_factor, remainder=remainder)


def girsanov_drift(bundle, decomp):
    """Drift of the market under the tilted measure: a + eps * lam^eps."""
    return bundle.drift[None, :, :] + decomp.eps * decomp.lam_path
